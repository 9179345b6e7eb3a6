#include <doctest.h>

#include <cmath>
#include <numeric>

#include "adarec/synth.hpp"

using namespace adarec;
using synth::SynthError;

namespace {

synth::ScmSpec small_spec() {
  return synth::ScmSpec::from_json(nlohmann::json::parse(R"({
    "variables": [
      {"name": "a"},
      {"name": "b", "weights": {"a": 2.0}, "noise_std": 0.1},
      {"name": "y", "type": "logistic", "weights": {"b": 3.0}},
      {"name": "c", "type": "categorical", "levels": ["lo", "hi"],
       "table": {"0": [0.9, 0.1], "1": [0.2, 0.8]}},
      {"name": "h", "hidden": true}
    ],
    "edges": [["a", "b"], {"from": "b", "to": "y"}, ["y", "c"]],
    "target": "y", "n": 4000, "seed": 11})"));
}

SynthError::Kind synth_kind(const std::function<void()>& f) {
  try {
    f();
  } catch (const SynthError& e) {
    return e.code();
  }
  FAIL("no SynthError thrown");
  return SynthError::Kind::InvalidSpec;
}

double correlation(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n, my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace

TEST_CASE("generation follows the mechanisms") {
  const auto data = synth::generate(small_spec());
  CHECK(data.rows() == 4000);
  CHECK_FALSE(data.index_of("h").has_value());
  const auto a = *data.index_of("a"), b = *data.index_of("b"), y = *data.index_of("y"), c = *data.index_of("c");
  CHECK(correlation(data.columns[a], data.columns[b]) > 0.99);
  CHECK(correlation(data.columns[b], data.columns[y]) > 0.5);
  for (double v : data.columns[y]) CHECK((v == 0.0 || v == 1.0));
  CHECK(data.categorical[c]);
  CHECK(correlation(data.columns[y], data.columns[c]) > 0.5);
  CHECK(data.dag.hidden == std::vector<std::string>{"h"});
}

TEST_CASE("same seed, same data, whatever the thread count") {
  const auto spec = small_spec();
  const auto one = synth::to_csv(synth::generate(spec, 1));
  CHECK(synth::to_csv(synth::generate(spec, 1)) == one);
  CHECK(synth::to_csv(synth::generate(spec, 3)) == one);
  auto other = spec;
  other.seed = 12;
  CHECK(synth::to_csv(synth::generate(other)) != one);
}

TEST_CASE("spec validation") {
  auto cyclic = small_spec();
  cyclic.edges.emplace_back("y", "a");
  cyclic.variables[0].mechanism.weights["y"] = 1.0;
  CHECK(synth_kind([&] { cyclic.validate(); }) == SynthError::Kind::CyclicSpec);

  auto bad_row = small_spec();
  bad_row.variables[3].mechanism.table["0"] = {0.5, 0.6};
  CHECK(synth_kind([&] { bad_row.validate(); }) == SynthError::Kind::BadMechanism);

  auto no_target = small_spec();
  no_target.target = "zzz";
  CHECK(synth_kind([&] { no_target.validate(); }) == SynthError::Kind::InvalidSpec);

  CHECK(synth::ScmSpec::from_json(small_spec().to_json()).to_json() == small_spec().to_json());
}

TEST_CASE("dataset export numbers users by row") {
  const auto data = synth::generate(small_spec());
  const auto ds = synth::to_dataset(data, 10, 20, dataset::Role::Test);
  CHECK(ds.size() == 10);
  CHECK(ds.records().front().user_id == "u00011");
  CHECK(ds.schema().target_name() == "label");
  CHECK(ds.schema().index_of("c").has_value());
}

TEST_CASE("pipeline fixture layout") {
  const auto f = synth::make_pipeline_fixture();
  CHECK(f.train.size() == 1000);
  CHECK(f.test.size() == 200);
  CHECK(f.train.schema().size() == 20);
  CHECK(f.causal == std::vector<std::string>{"f01", "f02", "f03"});
  CHECK(f.test.records().front().user_id == "u01001");
  std::size_t positives = 0;
  for (const auto& r : f.train.records()) positives += std::get<int>(*r.label);
  CHECK(positives > 350);
  CHECK(positives < 650);
}
