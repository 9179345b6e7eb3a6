#include "adarec/retrieval.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <thread>

namespace adarec::retrieval {

namespace {

const char* kind_name(RetrievalError::Kind kind) {
  switch (kind) {
    case RetrievalError::Kind::DimensionMismatch: return "DimensionMismatch";
    case RetrievalError::Kind::PoolTooSmall: return "PoolTooSmall";
    case RetrievalError::Kind::NotEnoughCases: return "NotEnoughCases";
    case RetrievalError::Kind::MissingLabel: return "MissingLabel";
    case RetrievalError::Kind::InvalidArgument: return "InvalidArgument";
  }
  return "RetrievalError";
}

}  // namespace

RetrievalError::RetrievalError(Kind kind, const std::string& message)
    : Error("retrieval", kind_name(kind), message), code_(kind) {}

VectorLayout VectorLayout::fit(const dataset::Dataset& train, bool standardize) {
  VectorLayout layout;
  layout.standardize_ = standardize;
  const auto& features = train.schema().features();
  std::size_t offset = 0;
  for (std::size_t f = 0; f < features.size(); ++f) {
    Block b;
    b.feature = f;
    b.offset = offset;
    b.kind = features[f].kind;
    if (b.kind == dataset::FeatureKind::Numeric) {
      if (standardize) {
        double sum = 0, n = 0;
        for (const auto& rec : train.records())
          if (const double* d = std::get_if<double>(&rec.values[f])) {
            sum += *d;
            n += 1;
          }
        if (n > 0) {
          b.center = sum / n;
          double ss = 0;
          for (const auto& rec : train.records())
            if (const double* d = std::get_if<double>(&rec.values[f])) ss += (*d - b.center) * (*d - b.center);
          const double sd = std::sqrt(ss / n);
          b.scale = sd > 0 ? sd : 1.0;
        }
      }
      offset += 1;
    } else {
      std::set<std::string> universe;
      for (const auto& rec : train.records())
        if (const std::string* t = std::get_if<std::string>(&rec.values[f]); t && *t != kMissingToken)
          universe.insert(*t);
      b.tokens.assign(universe.begin(), universe.end());
      offset += b.tokens.size() + 1;
    }
    layout.blocks_.push_back(std::move(b));
  }
  layout.dimension_ = offset;
  return layout;
}

NumericVector VectorLayout::encode(const dataset::Record& record) const {
  NumericVector v;
  v.user_id = record.user_id;
  v.components.assign(dimension_, 0.0);
  for (const auto& b : blocks_) {
    const auto& value = record.values.at(b.feature);
    if (b.kind == dataset::FeatureKind::Numeric) {
      if (const double* d = std::get_if<double>(&value)) v.components[b.offset] = (*d - b.center) / b.scale;
      continue;
    }
    const std::string* token = std::get_if<std::string>(&value);
    if (!token || *token == kMissingToken) {
      v.components[b.offset + b.tokens.size()] = 1.0;
      continue;
    }
    auto it = std::lower_bound(b.tokens.begin(), b.tokens.end(), *token);
    // Tokens unseen in training leave the whole block at zero.
    if (it != b.tokens.end() && *it == *token)
      v.components[b.offset + static_cast<std::size_t>(it - b.tokens.begin())] = 1.0;
  }
  return v;
}

std::vector<NumericVector> VectorLayout::encode(const dataset::Dataset& data) const {
  std::vector<NumericVector> out;
  out.reserve(data.size());
  for (const auto& rec : data.records()) out.push_back(encode(rec));
  return out;
}

std::vector<NumericVector> vectorize(const dataset::Dataset& data, bool standardize) {
  if (data.empty()) throw RetrievalError(RetrievalError::Kind::InvalidArgument, "cannot vectorize an empty dataset");
  return VectorLayout::fit(data, standardize).encode(data);
}

double cosine_similarity(const NumericVector& a, const NumericVector& b) {
  if (a.components.size() != b.components.size())
    throw RetrievalError(RetrievalError::Kind::DimensionMismatch,
                         "dimensions " + std::to_string(a.components.size()) + " and " +
                             std::to_string(b.components.size()));
  double dot = 0, na = 0, nb = 0;
  for (std::size_t i = 0; i < a.components.size(); ++i) {
    dot += a.components[i] * b.components[i];
    na += a.components[i] * a.components[i];
    nb += b.components[i] * b.components[i];
  }
  if (na == 0 || nb == 0) return 0.0;
  return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
}

const char* stage_name(Stage stage) {
  switch (stage) {
    case Stage::Eta1: return "eta1";
    case Stage::Eta2: return "eta2";
    case Stage::Cases: return "cases";
  }
  return "?";
}

std::vector<std::string> NeighborSet::ids() const {
  std::vector<std::string> out;
  out.reserve(entries.size());
  for (const auto& e : entries) out.push_back(e.user_id);
  return out;
}

bool neighbor_before(const Neighbor& a, const Neighbor& b) {
  if (a.score != b.score) return a.score > b.score;
  return a.user_id < b.user_id;
}

Stages select_stages(std::span<const NumericVector> train, const NumericVector& query, std::size_t eta1,
                     std::size_t eta2, unsigned threads) {
  if (eta2 >= eta1)
    throw RetrievalError(RetrievalError::Kind::InvalidArgument,
                         "eta2 (" + std::to_string(eta2) + ") must be smaller than eta1 (" + std::to_string(eta1) + ")");

  std::vector<const NumericVector*> pool;
  pool.reserve(train.size());
  for (const auto& v : train)
    if (v.user_id != query.user_id) pool.push_back(&v);
  if (eta1 > pool.size())
    throw RetrievalError(RetrievalError::Kind::PoolTooSmall,
                         "eta1 = " + std::to_string(eta1) + " exceeds pool of " + std::to_string(pool.size()));

  std::vector<Neighbor> scored(pool.size());
  auto score_range = [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) scored[i] = {pool[i]->user_id, cosine_similarity(query, *pool[i]), {}};
  };
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(pool.size() / 256 + 1)));
  if (threads == 1) {
    score_range(0, pool.size());
  } else {
    std::vector<std::thread> workers;
    const std::size_t chunk = (pool.size() + threads - 1) / threads;
    for (unsigned t = 0; t < threads; ++t) {
      const std::size_t begin = t * chunk, end = std::min(pool.size(), begin + chunk);
      if (begin < end) workers.emplace_back(score_range, begin, end);
    }
    for (auto& w : workers) w.join();
  }

  std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(eta1), scored.end(),
                    neighbor_before);
  scored.resize(eta1);

  Stages out;
  out.eta1.query_id = out.eta2.query_id = query.user_id;
  out.eta1.stage = Stage::Eta1;
  out.eta2.stage = Stage::Eta2;
  out.eta2.entries.assign(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(eta2));
  out.eta1.entries = std::move(scored);
  return out;
}

LabelMap labels_of(const dataset::Dataset& data) {
  LabelMap out;
  for (const auto& rec : data.records())
    if (rec.label) out.emplace(rec.user_id, *rec.label);
  return out;
}

NeighborSet select_representative_cases(const NeighborSet& eta2_set, const LabelMap& labels, std::size_t k,
                                        dataset::TargetKind target_kind) {
  if (k == 0 || k > eta2_set.entries.size())
    throw RetrievalError(RetrievalError::Kind::NotEnoughCases,
                         "need " + std::to_string(k) + " cases from " + std::to_string(eta2_set.entries.size()) +
                             " candidates");
  auto label_of = [&](const std::string& id) -> const dataset::Label& {
    auto it = labels.find(id);
    if (it == labels.end()) throw RetrievalError(RetrievalError::Kind::MissingLabel, "no label for case '" + id + "'");
    return it->second;
  };

  NeighborSet cases;
  cases.query_id = eta2_set.query_id;
  cases.stage = Stage::Cases;
  for (std::size_t i = 0; i < k; ++i) {
    Neighbor n = eta2_set.entries[i];
    n.label = label_of(n.user_id);
    cases.entries.push_back(std::move(n));
  }

  if (target_kind == dataset::TargetKind::Binary) {
    const auto& first = *cases.entries.front().label;
    const bool uniform = std::all_of(cases.entries.begin(), cases.entries.end(),
                                     [&](const Neighbor& n) { return *n.label == first; });
    if (uniform) {
      for (std::size_t i = k; i < eta2_set.entries.size(); ++i) {
        const auto& label = label_of(eta2_set.entries[i].user_id);
        if (label != first) {
          Neighbor n = eta2_set.entries[i];
          n.label = label;
          cases.entries.back() = std::move(n);
          break;
        }
      }
    }
  }
  return cases;
}

nlohmann::json to_json(const NeighborSet& set) {
  nlohmann::json entries = nlohmann::json::array();
  for (const auto& e : set.entries) entries.push_back(nlohmann::json::array({e.user_id, e.score}));
  return {{"query_id", set.query_id}, {"stage", stage_name(set.stage)}, {"entries", entries}};
}

}  // namespace adarec::retrieval
