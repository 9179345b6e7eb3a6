#include "adarec/importance.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <unordered_map>

namespace adarec::importance {

namespace {

const char* kind_name(ImportanceError::Kind kind) {
  switch (kind) {
    case ImportanceError::Kind::LengthMismatch: return "LengthMismatch";
    case ImportanceError::Kind::UnlabeledRow: return "UnlabeledRow";
    case ImportanceError::Kind::InvalidArgument: return "InvalidArgument";
  }
  return "ImportanceError";
}

// Sums in ascending order of value so that the result depends only on the
// multiset of terms.
double ordered_sum(std::vector<double> terms) {
  std::sort(terms.begin(), terms.end());
  double total = 0;
  for (double t : terms) total += t;
  return total;
}

std::vector<int> compact_codes(const std::vector<std::string>& tokens) {
  std::map<std::string, int> codes;
  for (const auto& t : tokens) codes.emplace(t, 0);
  int next = 0;
  for (auto& [token, code] : codes) code = next++;
  std::vector<int> out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) out.push_back(codes.at(t));
  return out;
}

std::size_t distinct(const std::vector<int>& x) { return std::set<int>(x.begin(), x.end()).size(); }

}  // namespace

ImportanceError::ImportanceError(Kind kind, const std::string& message)
    : Error("importance", kind_name(kind), message), code_(kind) {}

std::vector<int> discretize(const std::vector<std::optional<double>>& values, int bins) {
  if (bins < 2) throw ImportanceError(ImportanceError::Kind::InvalidArgument, "bins must be >= 2");
  std::vector<double> present;
  for (const auto& v : values)
    if (v) present.push_back(*v);
  std::sort(present.begin(), present.end());

  std::vector<double> cuts;
  if (!present.empty()) {
    for (int b = 1; b < bins; ++b) cuts.push_back(dataset::nearest_rank(present, static_cast<double>(b) / bins));
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
  }
  std::vector<int> out;
  out.reserve(values.size());
  for (const auto& v : values) {
    if (!v) {
      out.push_back(bins);
      continue;
    }
    // Number of cut points strictly below the value.
    out.push_back(static_cast<int>(std::lower_bound(cuts.begin(), cuts.end(), *v) - cuts.begin()));
  }
  return out;
}

std::vector<int> discretize(const std::vector<double>& values, int bins) {
  std::vector<std::optional<double>> wrapped(values.begin(), values.end());
  return discretize(wrapped, bins);
}

double entropy(const std::vector<int>& x) {
  if (x.empty()) return 0.0;
  std::map<int, std::size_t> counts;
  for (int v : x) ++counts[v];
  const double n = static_cast<double>(x.size());
  std::vector<double> terms;
  for (const auto& [v, c] : counts) {
    const double p = static_cast<double>(c) / n;
    terms.push_back(-p * std::log(p));
  }
  return std::max(0.0, ordered_sum(std::move(terms)));
}

double mutual_information(const std::vector<int>& x, const std::vector<int>& y) {
  if (x.size() != y.size())
    throw ImportanceError(ImportanceError::Kind::LengthMismatch,
                          "lengths " + std::to_string(x.size()) + " and " + std::to_string(y.size()));
  if (x.empty()) throw ImportanceError(ImportanceError::Kind::InvalidArgument, "mutual information of empty samples");

  std::map<std::pair<int, int>, std::size_t> joint;
  std::map<int, std::size_t> mx, my;
  for (std::size_t i = 0; i < x.size(); ++i) {
    ++joint[{x[i], y[i]}];
    ++mx[x[i]];
    ++my[y[i]];
  }
  const double n = static_cast<double>(x.size());
  std::vector<double> terms;
  terms.reserve(joint.size());
  for (const auto& [cell, c] : joint) {
    const double cxy = static_cast<double>(c);
    // Integer products are exact in double, so the term is swap-invariant.
    const double ratio = (cxy * n) / (static_cast<double>(mx[cell.first]) * static_cast<double>(my[cell.second]));
    terms.push_back(cxy / n * std::log(ratio));
  }
  const double mi = ordered_sum(std::move(terms));
  return std::clamp(mi, 0.0, std::min(entropy(x), entropy(y)));
}

std::vector<MIScore> rank_features(const dataset::Dataset& pool, int bins) {
  if (pool.empty()) throw ImportanceError(ImportanceError::Kind::InvalidArgument, "empty pool");
  const auto& schema = pool.schema();
  for (const auto& rec : pool.records())
    if (!rec.label) throw ImportanceError(ImportanceError::Kind::UnlabeledRow, "row '" + rec.user_id + "' has no label");

  // Target symbol vectors: one for binary, one clicked-indicator per brand otherwise.
  std::vector<std::vector<int>> targets;
  if (schema.target_kind() == dataset::TargetKind::Binary) {
    std::vector<int> y;
    for (const auto& rec : pool.records()) y.push_back(std::get<int>(*rec.label));
    targets.push_back(std::move(y));
  } else {
    std::set<std::string> brands;
    for (const auto& rec : pool.records())
      for (const auto& b : std::get<dataset::BrandSet>(*rec.label)) brands.insert(b);
    for (const auto& brand : brands) {
      std::vector<int> y;
      for (const auto& rec : pool.records()) {
        const auto& set = std::get<dataset::BrandSet>(*rec.label);
        y.push_back(std::binary_search(set.begin(), set.end(), brand) ? 1 : 0);
      }
      targets.push_back(std::move(y));
    }
    if (targets.empty()) targets.emplace_back(pool.size(), 0);
  }

  std::vector<MIScore> out;
  for (std::size_t f = 0; f < schema.size(); ++f) {
    std::vector<int> x;
    if (schema.features()[f].kind == dataset::FeatureKind::Numeric) {
      std::vector<std::optional<double>> values;
      for (const auto& rec : pool.records()) {
        const double* d = std::get_if<double>(&rec.values[f]);
        values.push_back(d ? std::optional<double>(*d) : std::nullopt);
      }
      x = discretize(values, bins);
    } else {
      std::vector<std::string> tokens;
      for (const auto& rec : pool.records()) {
        const std::string* t = std::get_if<std::string>(&rec.values[f]);
        tokens.push_back(t ? *t : std::string("__missing__"));
      }
      x = compact_codes(tokens);
    }
    MIScore s;
    s.feature_name = schema.features()[f].name;
    s.bins_used = distinct(x);
    for (const auto& y : targets) s.score = std::max(s.score, mutual_information(x, y));
    out.push_back(std::move(s));
  }
  std::sort(out.begin(), out.end(), [](const MIScore& a, const MIScore& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.feature_name < b.feature_name;
  });
  return out;
}

nlohmann::json to_json(const std::vector<MIScore>& ranking) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& s : ranking) out.push_back({{"feature", s.feature_name}, {"score", s.score}});
  return out;
}

}  // namespace adarec::importance
