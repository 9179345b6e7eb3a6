#include "adarec/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>
#include <set>
#include <sstream>
#include <thread>

#include "adarec/text.hpp"

namespace adarec::synth {

namespace {

const char* kind_name(SynthError::Kind kind) {
  switch (kind) {
    case SynthError::Kind::CyclicSpec: return "CyclicSpec";
    case SynthError::Kind::BadMechanism: return "BadMechanism";
    case SynthError::Kind::InvalidSpec: return "InvalidSpec";
  }
  return "SynthError";
}

const char* mechanism_name(MechanismKind k) {
  switch (k) {
    case MechanismKind::LinearGaussian: return "linear_gaussian";
    case MechanismKind::Logistic: return "logistic";
    case MechanismKind::Categorical: return "categorical";
  }
  return "?";
}

MechanismKind parse_mechanism(const std::string& s) {
  if (s == "linear_gaussian") return MechanismKind::LinearGaussian;
  if (s == "logistic") return MechanismKind::Logistic;
  if (s == "categorical") return MechanismKind::Categorical;
  throw SynthError(SynthError::Kind::BadMechanism, "unknown mechanism type '" + s + "'");
}

struct Compiled {
  std::vector<std::size_t> order;                 // topological, ties by spec position
  std::vector<std::vector<std::size_t>> parents;  // per variable, in declared-edge order
};

Compiled compile(const ScmSpec& spec) {
  const std::size_t v = spec.variables.size();
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < v; ++i)
    if (!index.emplace(spec.variables[i].name, i).second)
      throw SynthError(SynthError::Kind::InvalidSpec, "duplicate variable '" + spec.variables[i].name + "'");

  Compiled c;
  c.parents.resize(v);
  std::vector<std::size_t> indegree(v, 0);
  std::vector<std::vector<std::size_t>> children(v);
  std::set<std::pair<std::size_t, std::size_t>> seen;
  for (const auto& [p, ch] : spec.edges) {
    auto ip = index.find(p), ic = index.find(ch);
    if (ip == index.end() || ic == index.end())
      throw SynthError(SynthError::Kind::InvalidSpec, "edge " + p + " -> " + ch + " names an unknown variable");
    if (ip->second == ic->second) throw SynthError(SynthError::Kind::CyclicSpec, "self loop on '" + p + "'");
    if (!seen.emplace(ip->second, ic->second).second) continue;
    c.parents[ic->second].push_back(ip->second);
    children[ip->second].push_back(ic->second);
    ++indegree[ic->second];
  }

  std::set<std::size_t> ready;
  for (std::size_t i = 0; i < v; ++i)
    if (indegree[i] == 0) ready.insert(i);
  while (!ready.empty()) {
    const std::size_t n = *ready.begin();
    ready.erase(ready.begin());
    c.order.push_back(n);
    for (std::size_t ch : children[n])
      if (--indegree[ch] == 0) ready.insert(ch);
  }
  if (c.order.size() != v) throw SynthError(SynthError::Kind::CyclicSpec, "edge set contains a cycle");

  for (std::size_t i = 0; i < v; ++i) {
    const auto& var = spec.variables[i];
    const auto& m = var.mechanism;
    std::set<std::string> parent_names;
    for (std::size_t p : c.parents[i]) parent_names.insert(spec.variables[p].name);
    for (const auto& [w, _] : m.weights)
      if (!parent_names.count(w))
        throw SynthError(SynthError::Kind::BadMechanism, "'" + var.name + "' weights non-parent '" + w + "'");
    if (m.kind == MechanismKind::LinearGaussian && !(m.noise_std >= 0.0))
      throw SynthError(SynthError::Kind::BadMechanism, "'" + var.name + "' has negative noise_std");
    if (m.kind == MechanismKind::Categorical) {
      if (m.levels.size() < 2) throw SynthError(SynthError::Kind::BadMechanism, "'" + var.name + "' needs >= 2 levels");
      if (!m.weights.empty())
        throw SynthError(SynthError::Kind::BadMechanism, "categorical '" + var.name + "' takes a table, not weights");
      for (std::size_t p : c.parents[i])
        if (spec.variables[p].mechanism.kind == MechanismKind::LinearGaussian)
          throw SynthError(SynthError::Kind::BadMechanism,
                           "categorical '" + var.name + "' has continuous parent '" + spec.variables[p].name + "'");
      if (m.table.empty()) throw SynthError(SynthError::Kind::BadMechanism, "'" + var.name + "' has an empty table");
      for (const auto& [key, row] : m.table) {
        double total = 0;
        for (double p : row) {
          if (!(p >= 0.0)) throw SynthError(SynthError::Kind::BadMechanism, "'" + var.name + "' has a negative probability");
          total += p;
        }
        if (row.size() != m.levels.size() || std::fabs(total - 1.0) > 1e-9)
          throw SynthError(SynthError::Kind::BadMechanism,
                           "'" + var.name + "' table row '" + key + "' is not a distribution over its levels");
      }
    }
  }
  return c;
}

std::string parent_key(const std::vector<std::size_t>& parents, const std::vector<double>& row) {
  std::string key;
  for (std::size_t t = 0; t < parents.size(); ++t) {
    if (t) key += ',';
    key += std::to_string(static_cast<long long>(row[parents[t]]));
  }
  return key;
}

void sample_row(const ScmSpec& spec, const Compiled& c, std::uint64_t record, std::vector<double>& row) {
  std::mt19937_64 rng(splitmix64(spec.seed ^ record));
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  for (std::size_t v : c.order) {
    const auto& var = spec.variables[v];
    const auto& m = var.mechanism;
    double eta = m.intercept;
    for (std::size_t p : c.parents[v]) {
      auto w = m.weights.find(spec.variables[p].name);
      if (w != m.weights.end()) eta += w->second * row[p];
    }
    switch (m.kind) {
      case MechanismKind::LinearGaussian:
        row[v] = eta + m.noise_std * normal(rng);
        break;
      case MechanismKind::Logistic:
        row[v] = uniform(rng) < 1.0 / (1.0 + std::exp(-eta)) ? 1.0 : 0.0;
        break;
      case MechanismKind::Categorical: {
        auto it = m.table.find(parent_key(c.parents[v], row));
        if (it == m.table.end()) it = m.table.find("default");
        if (it == m.table.end())
          throw SynthError(SynthError::Kind::BadMechanism,
                           "'" + var.name + "' has no table row for parents '" + parent_key(c.parents[v], row) + "'");
        const double u = uniform(rng);
        double acc = 0;
        std::size_t level = it->second.size() - 1;
        for (std::size_t l = 0; l < it->second.size(); ++l) {
          acc += it->second[l];
          if (u < acc) {
            level = l;
            break;
          }
        }
        row[v] = static_cast<double>(level);
        break;
      }
    }
  }
}

bool is_binary_target(const SynthData& data, std::size_t t) {
  return !data.categorical[t] || data.levels[t].size() == 2;
}

std::string user_name(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "u%05zu", index + 1);
  return buf;
}

}  // namespace

SynthError::SynthError(Kind kind, const std::string& message) : Error("synth", kind_name(kind), message), code_(kind) {}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

void ScmSpec::validate() const {
  if (variables.empty()) throw SynthError(SynthError::Kind::InvalidSpec, "no variables");
  compile(*this);
  auto it = std::find_if(variables.begin(), variables.end(), [&](const Variable& v) { return v.name == target; });
  if (it == variables.end()) throw SynthError(SynthError::Kind::InvalidSpec, "target '" + target + "' is not a variable");
  if (it->hidden) throw SynthError(SynthError::Kind::InvalidSpec, "target '" + target + "' is hidden");
}

ScmSpec ScmSpec::from_json(const nlohmann::json& doc) {
  try {
    ScmSpec s;
    for (const auto& v : doc.at("variables")) {
      Variable var;
      var.name = v.at("name").get<std::string>();
      var.hidden = v.value("hidden", false);
      auto& m = var.mechanism;
      m.kind = parse_mechanism(v.value("type", std::string("linear_gaussian")));
      if (v.contains("weights")) m.weights = v.at("weights").get<std::map<std::string, double>>();
      m.intercept = v.value("intercept", 0.0);
      m.noise_std = v.value("noise_std", 1.0);
      if (v.contains("levels")) m.levels = v.at("levels").get<std::vector<std::string>>();
      if (v.contains("table")) m.table = v.at("table").get<std::map<std::string, std::vector<double>>>();
      s.variables.push_back(std::move(var));
    }
    for (const auto& e : doc.value("edges", nlohmann::json::array())) {
      if (e.is_array()) s.edges.emplace_back(e.at(0).get<std::string>(), e.at(1).get<std::string>());
      else s.edges.emplace_back(e.at("from").get<std::string>(), e.at("to").get<std::string>());
    }
    s.target = doc.at("target").get<std::string>();
    s.n = doc.at("n").get<std::size_t>();
    s.seed = doc.value("seed", std::uint64_t{0});
    s.validate();
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw SynthError(SynthError::Kind::InvalidSpec, std::string("malformed SCM spec: ") + e.what());
  }
}

nlohmann::json ScmSpec::to_json() const {
  nlohmann::json vars = nlohmann::json::array();
  for (const auto& v : variables) {
    nlohmann::json j = {{"name", v.name}, {"type", mechanism_name(v.mechanism.kind)}};
    if (v.hidden) j["hidden"] = true;
    if (!v.mechanism.weights.empty()) j["weights"] = v.mechanism.weights;
    if (v.mechanism.kind != MechanismKind::Categorical) j["intercept"] = v.mechanism.intercept;
    if (v.mechanism.kind == MechanismKind::LinearGaussian) j["noise_std"] = v.mechanism.noise_std;
    if (v.mechanism.kind == MechanismKind::Categorical) {
      j["levels"] = v.mechanism.levels;
      j["table"] = v.mechanism.table;
    }
    vars.push_back(std::move(j));
  }
  nlohmann::json edges_json = nlohmann::json::array();
  for (const auto& [p, c] : edges) edges_json.push_back({p, c});
  return {{"variables", vars}, {"edges", edges_json}, {"target", target}, {"n", n}, {"seed", seed}};
}

nlohmann::json Dag::to_json() const {
  nlohmann::json e = nlohmann::json::array();
  for (const auto& [p, c] : edges) e.push_back({{"from", p}, {"to", c}});
  return {{"nodes", nodes}, {"edges", e}, {"hidden", hidden}};
}

std::optional<std::size_t> SynthData::index_of(const std::string& name) const {
  auto it = std::find(names.begin(), names.end(), name);
  if (it == names.end()) return std::nullopt;
  return static_cast<std::size_t>(it - names.begin());
}

SynthData generate(const ScmSpec& spec, unsigned threads) {
  spec.validate();
  const Compiled c = compile(spec);
  const std::size_t v = spec.variables.size();

  std::vector<std::vector<double>> all(v, std::vector<double>(spec.n));
  auto work = [&](std::size_t begin, std::size_t end) {
    std::vector<double> row(v);
    for (std::size_t r = begin; r < end; ++r) {
      sample_row(spec, c, r, row);
      for (std::size_t i = 0; i < v; ++i) all[i][r] = row[i];
    }
  };
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(1, spec.n))));
  if (threads == 1) {
    work(0, spec.n);
  } else {
    std::vector<std::thread> pool;
    const std::size_t chunk = (spec.n + threads - 1) / threads;
    for (unsigned t = 0; t < threads; ++t) {
      const std::size_t b = std::min(spec.n, t * chunk), e = std::min(spec.n, b + chunk);
      pool.emplace_back(work, b, e);
    }
    for (auto& th : pool) th.join();
  }

  SynthData out;
  out.target = spec.target;
  for (std::size_t i = 0; i < v; ++i) {
    const auto& var = spec.variables[i];
    out.dag.nodes.push_back(var.name);
    if (var.hidden) {
      out.dag.hidden.push_back(var.name);
      continue;
    }
    out.names.push_back(var.name);
    out.categorical.push_back(var.mechanism.kind == MechanismKind::Categorical);
    out.levels.push_back(var.mechanism.levels);
    out.columns.push_back(std::move(all[i]));
  }
  for (std::size_t i = 0; i < v; ++i)
    for (std::size_t p : c.parents[i]) out.dag.edges.emplace_back(spec.variables[p].name, spec.variables[i].name);
  return out;
}

causal::DataMatrix to_matrix(const SynthData& data) {
  std::vector<causal::VarKind> kinds;
  for (std::size_t i = 0; i < data.names.size(); ++i) {
    kinds.push_back(data.categorical[i] ? causal::VarKind::Discrete : causal::VarKind::Continuous);
  }
  return causal::DataMatrix(data.names, kinds, data.columns);
}

dataset::Dataset to_dataset(const SynthData& data, std::size_t begin, std::size_t end, dataset::Role role) {
  const auto t = data.index_of(data.target);
  if (!t) throw SynthError(SynthError::Kind::InvalidSpec, "target is not visible");
  if (!is_binary_target(data, *t))
    throw SynthError(SynthError::Kind::InvalidSpec, "target '" + data.target + "' is not binary");
  end = std::min(end, data.rows());

  std::vector<dataset::FeatureDescriptor> features;
  std::vector<std::size_t> cols;
  for (std::size_t i = 0; i < data.names.size(); ++i) {
    if (i == *t) continue;
    features.push_back({data.names[i], data.categorical[i] ? dataset::FeatureKind::Categorical : dataset::FeatureKind::Numeric,
                        std::nullopt});
    cols.push_back(i);
  }
  dataset::FeatureSchema schema(std::move(features), "label", dataset::TargetKind::Binary);

  std::vector<dataset::Record> records;
  for (std::size_t r = begin; r < end; ++r) {
    dataset::Record rec;
    rec.user_id = user_name(r);
    for (std::size_t i : cols) {
      const double x = data.columns[i][r];
      if (data.categorical[i]) rec.values.emplace_back(data.levels[i][static_cast<std::size_t>(x)]);
      else rec.values.emplace_back(x);
    }
    rec.label = static_cast<int>(data.columns[*t][r]);
    records.push_back(std::move(rec));
  }
  return dataset::Dataset(std::move(schema), std::move(records), role);
}

std::string to_csv(const SynthData& data) {
  std::ostringstream out;
  out << "user_id";
  for (const auto& n : data.names) out << ',' << n;
  out << '\n';
  for (std::size_t r = 0; r < data.rows(); ++r) {
    out << user_name(r);
    for (std::size_t i = 0; i < data.names.size(); ++i) {
      const double x = data.columns[i][r];
      out << ',' << (data.categorical[i] ? data.levels[i][static_cast<std::size_t>(x)] : text::shortest(x));
    }
    out << '\n';
  }
  return out.str();
}

ScmSpec pipeline_spec(const FixtureOptions& o) {
  if (o.n_features < 5) throw SynthError(SynthError::Kind::InvalidSpec, "pipeline fixture needs at least 5 features");
  const std::size_t correlates = std::min(o.n_correlates, o.n_features - 3);
  ScmSpec s;
  s.n = o.n_train + o.n_test;
  s.seed = o.seed;
  s.target = "label";
  auto name = [](std::size_t i) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "f%02zu", i + 1);
    return std::string(buf);
  };
  for (std::size_t i = 0; i < o.n_features; ++i) {
    Variable v;
    v.name = name(i);
    if (i >= 3 && i < 3 + correlates) {
      // label_signal * (2 * label - 1) + N(0, 1)
      v.mechanism.weights["label"] = 2.0 * o.label_signal;
      v.mechanism.intercept = -o.label_signal;
      s.edges.emplace_back("label", v.name);
    }
    s.variables.push_back(std::move(v));
  }
  Variable label;
  label.name = "label";
  label.mechanism.kind = MechanismKind::Logistic;
  for (std::size_t c = 0; c < 3; ++c) {
    label.mechanism.weights[name(c)] = o.causal_weight;
    s.edges.emplace_back(name(c), "label");
  }
  s.variables.push_back(std::move(label));
  return s;
}

PipelineFixture make_pipeline_fixture(const FixtureOptions& o) {
  ScmSpec spec = pipeline_spec(o);
  const SynthData data = generate(spec);
  PipelineFixture f{to_dataset(data, 0, o.n_train, dataset::Role::Train),
                    to_dataset(data, o.n_train, o.n_train + o.n_test, dataset::Role::Test),
                    {"f01", "f02", "f03"},
                    std::move(spec)};
  return f;
}

}  // namespace adarec::synth
