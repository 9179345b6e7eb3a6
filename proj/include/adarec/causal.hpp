#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "adarec/dataset.hpp"
#include "adarec/error.hpp"
#include "adarec/importance.hpp"

namespace adarec::causal {

class CausalError : public Error {
 public:
  enum class Kind { InsufficientSamples, TargetNotInGraph, InvalidArgument };
  CausalError(Kind kind, const std::string& message);
  Kind code() const noexcept { return code_; }

 private:
  Kind code_;
};

enum class VarKind { Continuous, Discrete };

// Column-encoded reference set. Continuous columns are z-scored (missing
// values imputed at the mean); discrete columns hold integer codes. Every
// continuous column also carries a 4-bin equal-frequency coding for the G^2 test.
class DataMatrix {
 public:
  DataMatrix(std::vector<std::string> names, std::vector<VarKind> kinds, std::vector<std::vector<double>> columns);

  // Features in schema order, then the target: a binary target is a numeric
  // 0/1 indicator, a brand-set target one categorical symbol per clicked set.
  static DataMatrix from_dataset(const dataset::Dataset& data, bool include_target = true);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t vars() const noexcept { return names_.size(); }
  const std::vector<std::string>& names() const noexcept { return names_; }
  VarKind kind(std::size_t v) const { return kinds_.at(v); }
  const std::vector<double>& column(std::size_t v) const { return columns_.at(v); }
  const std::vector<std::uint16_t>& codes(std::size_t v) const { return codes_.at(v); }
  std::size_t cardinality(std::size_t v) const { return cardinality_.at(v); }
  const Eigen::MatrixXd& correlation() const noexcept { return correlation_; }

  static constexpr int kTestBins = 4;

 private:
  std::size_t rows_ = 0;
  std::vector<std::string> names_;
  std::vector<VarKind> kinds_;
  std::vector<std::vector<double>> columns_;
  std::vector<std::vector<std::uint16_t>> codes_;
  std::vector<std::size_t> cardinality_;
  Eigen::MatrixXd correlation_;
};

struct CITestResult {
  std::size_t i = 0;
  std::size_t j = 0;
  std::vector<std::size_t> conditioning;
  double p_value = 1.0;
  bool independent = true;
  bool singular = false;  // partial correlation undefined; reported dependent
};

class IndependenceTest {
 public:
  virtual ~IndependenceTest() = default;
  virtual CITestResult test(std::size_t i, std::size_t j, const std::vector<std::size_t>& conditioning) const = 0;
  virtual const std::vector<std::string>& names() const = 0;
  std::size_t num_vars() const { return names().size(); }
};

// Fisher-z on partial correlation when i, j and the conditioning set are all
// continuous; otherwise G^2 on the discrete codings.
CITestResult ci_test(const DataMatrix& data, std::size_t i, std::size_t j, const std::vector<std::size_t>& conditioning,
                     double alpha);

class MixedCiTest : public IndependenceTest {
 public:
  MixedCiTest(const DataMatrix& data, double alpha) : data_(&data), alpha_(alpha) {}
  CITestResult test(std::size_t i, std::size_t j, const std::vector<std::size_t>& conditioning) const override {
    return ci_test(*data_, i, j, conditioning, alpha_);
  }
  const std::vector<std::string>& names() const override { return data_->names(); }

 private:
  const DataMatrix* data_;
  double alpha_;
};

enum class Mark : std::int8_t { Circle = 0, Arrow = 1, Tail = 2 };
const char* mark_name(Mark mark);

class PartialAncestralGraph {
 public:
  using Sepsets = std::map<std::pair<std::size_t, std::size_t>, std::vector<std::size_t>>;

  explicit PartialAncestralGraph(std::vector<std::string> nodes);
  static PartialAncestralGraph complete(std::vector<std::string> nodes);

  std::size_t size() const noexcept { return nodes_.size(); }
  const std::vector<std::string>& nodes() const noexcept { return nodes_; }
  std::optional<std::size_t> index_of(const std::string& name) const;

  bool adjacent(std::size_t a, std::size_t b) const { return marks_[a * size() + b] >= 0; }
  // Adds a o-o edge.
  void add_edge(std::size_t a, std::size_t b);
  void remove_edge(std::size_t a, std::size_t b);
  // Mark at `at` on the edge between `from` and `at`.
  Mark mark(std::size_t from, std::size_t at) const;
  void set_mark(std::size_t from, std::size_t at, Mark m);
  void reset_marks();

  std::vector<std::size_t> adjacent_to(std::size_t v) const;
  std::vector<std::pair<std::size_t, std::size_t>> edges() const;  // a < b
  std::size_t edge_count() const;

  const Sepsets& sepsets() const noexcept { return sepsets_; }
  void set_sepset(std::size_t a, std::size_t b, std::vector<std::size_t> sepset);
  const std::vector<std::size_t>* sepset(std::size_t a, std::size_t b) const;

  // {nodes, edges:[{a,b,mark_at_a,mark_at_b}], sepsets:{"a|b":[...]}}
  nlohmann::json to_json() const;
  static PartialAncestralGraph from_json(const nlohmann::json& doc);

 private:
  std::vector<std::string> nodes_;
  std::vector<std::int8_t> marks_;  // marks_[a*n+b] = mark at b on edge a-b, -1 when absent
  Sepsets sepsets_;
};

struct FciOptions {
  int max_depth = 3;
  // Breadth limit for the Possible-D-SEP search; -1 means unlimited.
  int max_path_length = -1;
  bool possible_dsep = true;
  unsigned threads = 1;
};

// Adjacency search (order-independent: adjacency sets are frozen per depth
// level) followed by the Possible-D-SEP refinement. Marks are all circles.
PartialAncestralGraph fci_skeleton(const IndependenceTest& test, const FciOptions& options = {});

// Collider orientation from sepsets, then R1-R4 to a fixed point.
PartialAncestralGraph orient_pag(PartialAncestralGraph skeleton);

inline PartialAncestralGraph fci(const IndependenceTest& test, const FciOptions& options = {}) {
  return orient_pag(fci_skeleton(test, options));
}

// Nodes reachable from `x` along paths whose every inner triple is a collider
// or a triangle.
std::vector<std::size_t> possible_dsep(const PartialAncestralGraph& graph, std::size_t x, int max_path_length = -1);

struct CausalFeature {
  std::string name;
  double mi_score = 0.0;
  Mark mark_at_target = Mark::Circle;
};

struct CausalFeatureSet {
  std::vector<CausalFeature> entries;
  std::size_t p_used = 0;
};

CausalFeatureSet causal_features(const PartialAncestralGraph& pag, const std::string& target,
                                 const std::vector<importance::MIScore>& mi, std::size_t p);

nlohmann::json to_json(const CausalFeatureSet& set);
CausalFeatureSet causal_features_from_json(const nlohmann::json& doc);

}  // namespace adarec::causal
