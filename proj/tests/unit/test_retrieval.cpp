#include <doctest.h>

#include <algorithm>
#include <random>

#include "adarec/retrieval.hpp"

using namespace adarec;
using retrieval::NumericVector;
using retrieval::RetrievalError;

namespace {

std::vector<NumericVector> grid_pool() {
  return {{"a", {1, 0}}, {"b", {0, 1}}, {"c", {1, 1}}, {"d", {2, 2}}, {"e", {-1, 0}}, {"f", {1, 0.1}}};
}

}  // namespace

TEST_CASE("cosine similarity") {
  CHECK(retrieval::cosine_similarity({"x", {1, 2, 3}}, {"y", {4, 5, 6}}) == doctest::Approx(0.9746318461970762));
  CHECK(retrieval::cosine_similarity({"x", {0, 0}}, {"y", {1, 1}}) == 0.0);
  CHECK(retrieval::cosine_similarity({"x", {1, 1}}, {"y", {3, 3}}) <= 1.0);
  CHECK_THROWS_AS(retrieval::cosine_similarity({"x", {1}}, {"y", {1, 2}}), RetrievalError);
}

TEST_CASE("stages order by score then id and exclude the query") {
  const auto pool = grid_pool();
  const NumericVector q{"c", {1, 1}};
  const auto s = retrieval::select_stages(pool, q, 4, 2);
  REQUIRE(s.eta1.entries.size() == 4);
  // c is excluded; d is parallel to the query; a and b tie and sort by id.
  CHECK(s.eta1.ids() == std::vector<std::string>{"d", "f", "a", "b"});
  CHECK(s.eta2.ids() == std::vector<std::string>{"d", "f"});
  CHECK(s.eta1.stage == retrieval::Stage::Eta1);
  CHECK(s.eta2.stage == retrieval::Stage::Eta2);
}

TEST_CASE("stage sizes are validated") {
  const auto pool = grid_pool();
  const NumericVector q{"zz", {1, 1}};
  CHECK_THROWS_AS(retrieval::select_stages(pool, q, 3, 3), RetrievalError);
  try {
    retrieval::select_stages(pool, q, 7, 2);
    FAIL("expected PoolTooSmall");
  } catch (const RetrievalError& e) {
    CHECK(e.code() == RetrievalError::Kind::PoolTooSmall);
  }
}

TEST_CASE("thread count does not change the stages") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g;
  std::vector<NumericVector> pool(500);
  for (std::size_t i = 0; i < pool.size(); ++i) {
    pool[i].user_id = "u" + std::to_string(i);
    for (int d = 0; d < 8; ++d) pool[i].components.push_back(std::round(g(rng)));
  }
  const NumericVector q{"q", {1, 0, 1, 0, 1, 0, 1, 0}};
  const auto one = retrieval::select_stages(pool, q, 200, 50, 1);
  for (unsigned t : {2u, 3u, 7u}) {
    const auto many = retrieval::select_stages(pool, q, 200, 50, t);
    CHECK(many.eta1.ids() == one.eta1.ids());
    CHECK(many.eta2.ids() == one.eta2.ids());
  }
}

TEST_CASE("layout standardizes numerics and one-hot encodes categoricals") {
  dataset::FeatureSchema schema({{"x", dataset::FeatureKind::Numeric, std::nullopt},
                                 {"c", dataset::FeatureKind::Categorical, std::nullopt}},
                                "label", dataset::TargetKind::Binary);
  const dataset::Dataset train(schema,
                               {{"a", {1.0, std::string("red")}, 1},
                                {"b", {3.0, std::string("blue")}, 0},
                                {"c", {dataset::Missing{}, dataset::Missing{}}, 0}},
                               dataset::Role::Train);
  const auto layout = retrieval::VectorLayout::fit(train);
  CHECK(layout.dimension() == 1 + 2 + 1);
  const auto v = layout.encode(train);
  CHECK(v[0].components[0] == doctest::Approx(-1.0));
  CHECK(v[1].components[0] == doctest::Approx(1.0));
  CHECK(v[2].components[0] == 0.0);
  const double onehot_sum = v[2].components[1] + v[2].components[2] + v[2].components[3];
  CHECK(onehot_sum == 1.0);
  // A token unseen in training encodes to all zeros.
  const auto unseen = layout.encode(dataset::Record{"d", {2.0, std::string("green")}, std::nullopt});
  CHECK(unseen.components[1] + unseen.components[2] + unseen.components[3] == 0.0);
}

TEST_CASE("representative cases mix labels for binary targets") {
  retrieval::NeighborSet eta2{"q", {{"a", 0.9, {}}, {"b", 0.8, {}}, {"c", 0.7, {}}, {"d", 0.6, {}}}, retrieval::Stage::Eta2};
  retrieval::LabelMap labels{{"a", 1}, {"b", 1}, {"c", 1}, {"d", 0}};
  const auto cases = retrieval::select_representative_cases(eta2, labels, 2, dataset::TargetKind::Binary);
  CHECK(cases.ids() == std::vector<std::string>{"a", "d"});
  CHECK(cases.stage == retrieval::Stage::Cases);
  REQUIRE(cases.entries[1].label.has_value());
  CHECK(std::get<int>(*cases.entries[1].label) == 0);

  const auto plain = retrieval::select_representative_cases(eta2, labels, 3, dataset::TargetKind::BrandSet);
  CHECK(plain.ids() == std::vector<std::string>{"a", "b", "c"});
  CHECK_THROWS_AS(retrieval::select_representative_cases(eta2, labels, 5, dataset::TargetKind::Binary), RetrievalError);
}
