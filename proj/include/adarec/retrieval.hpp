#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "adarec/dataset.hpp"
#include "adarec/error.hpp"

namespace adarec::retrieval {

class RetrievalError : public Error {
 public:
  enum class Kind { DimensionMismatch, PoolTooSmall, NotEnoughCases, MissingLabel, InvalidArgument };
  RetrievalError(Kind kind, const std::string& message);
  Kind code() const noexcept { return code_; }

 private:
  Kind code_;
};

inline constexpr const char* kMissingToken = "__missing__";

struct NumericVector {
  std::string user_id;
  std::vector<double> components;
};

// Column layout shared by train and test vectors. Numeric features take one
// slot (optionally z-scored with training statistics, missing -> 0);
// categorical features take one slot per training token plus a missing slot.
class VectorLayout {
 public:
  struct Block {
    std::size_t feature = 0;
    std::size_t offset = 0;
    dataset::FeatureKind kind = dataset::FeatureKind::Numeric;
    double center = 0.0;
    double scale = 1.0;
    std::vector<std::string> tokens;  // categorical only, sorted
  };

  static VectorLayout fit(const dataset::Dataset& train, bool standardize = true);

  std::size_t dimension() const noexcept { return dimension_; }
  bool standardized() const noexcept { return standardize_; }
  const std::vector<Block>& blocks() const noexcept { return blocks_; }

  NumericVector encode(const dataset::Record& record) const;
  std::vector<NumericVector> encode(const dataset::Dataset& data) const;

 private:
  std::vector<Block> blocks_;
  std::size_t dimension_ = 0;
  bool standardize_ = true;
};

// Fits a layout on `data` and encodes it.
std::vector<NumericVector> vectorize(const dataset::Dataset& data, bool standardize = true);

// (a.b)/(|a||b|), 0 when either norm is 0, clamped to [-1, 1].
double cosine_similarity(const NumericVector& a, const NumericVector& b);

enum class Stage { Eta1, Eta2, Cases };
const char* stage_name(Stage stage);

struct Neighbor {
  std::string user_id;
  double score = 0.0;
  std::optional<dataset::Label> label;  // set for stage == Cases
};

// Entries ordered by descending score, ties by ascending user_id.
struct NeighborSet {
  std::string query_id;
  std::vector<Neighbor> entries;
  Stage stage = Stage::Eta1;

  std::vector<std::string> ids() const;
};

bool neighbor_before(const Neighbor& a, const Neighbor& b);

struct Stages {
  NeighborSet eta1;
  NeighborSet eta2;
};

// Requires eta2 < eta1 <= pool size (pool = train minus the query id).
// Scores are computed in `threads` partitions; the result does not depend on it.
Stages select_stages(std::span<const NumericVector> train, const NumericVector& query, std::size_t eta1,
                     std::size_t eta2, unsigned threads = 1);

using LabelMap = std::unordered_map<std::string, dataset::Label>;
LabelMap labels_of(const dataset::Dataset& data);

// Top-k of the eta2 set. For binary targets, when all k share a label and the
// eta2 set holds a differently labeled user, the k-th entry is swapped for the
// most similar such user.
NeighborSet select_representative_cases(const NeighborSet& eta2_set, const LabelMap& labels, std::size_t k,
                                        dataset::TargetKind target_kind);

nlohmann::json to_json(const NeighborSet& set);

}  // namespace adarec::retrieval
