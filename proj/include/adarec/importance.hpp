#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "adarec/dataset.hpp"
#include "adarec/error.hpp"

namespace adarec::importance {

class ImportanceError : public Error {
 public:
  enum class Kind { LengthMismatch, UnlabeledRow, InvalidArgument };
  ImportanceError(Kind kind, const std::string& message);
  Kind code() const noexcept { return code_; }

 private:
  Kind code_;
};

struct MIScore {
  std::string feature_name;
  double score = 0.0;  // nats
  std::size_t bins_used = 0;
};

// Equal-frequency binning. Cut points are the nearest-rank quantiles at
// b/bins (b = 1..bins-1) of the present values, deduplicated; a value equal
// to a cut point falls into the lower bin. Missing values go to bin `bins`.
std::vector<int> discretize(const std::vector<std::optional<double>>& values, int bins);
std::vector<int> discretize(const std::vector<double>& values, int bins);

// Plug-in entropy in nats.
double entropy(const std::vector<int>& x);

// Plug-in mutual information in nats, 0*log(0) := 0. Symmetric in its
// arguments bit for bit, and clamped to [0, min(H(x), H(y))].
double mutual_information(const std::vector<int>& x, const std::vector<int>& y);

// One score per feature over `pool`, sorted by descending score then name.
// Brand-set targets: maximum over brands of MI with the clicked indicator.
std::vector<MIScore> rank_features(const dataset::Dataset& pool, int bins = 10);

nlohmann::json to_json(const std::vector<MIScore>& ranking);

}  // namespace adarec::importance
