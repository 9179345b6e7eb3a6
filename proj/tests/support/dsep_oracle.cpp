#include "dsep_oracle.hpp"

#include <algorithm>
#include <bit>
#include <numeric>

namespace testing {

using adarec::causal::CITestResult;

bool SmallDag::acyclic() const {
  std::uint64_t placed = 0;
  for (std::size_t round = 0; round < size(); ++round) {
    bool progress = false;
    for (std::size_t v = 0; v < size(); ++v) {
      if ((placed >> v) & 1U) continue;
      if ((parents[v] & ~placed) == 0) {
        placed |= std::uint64_t{1} << v;
        progress = true;
      }
    }
    if (!progress) break;
  }
  return std::popcount(placed) == static_cast<int>(size());
}

bool d_separated(const SmallDag& dag, std::size_t x, std::size_t y, std::uint64_t z) {
  const std::size_t n = dag.size();
  std::uint64_t anc = z | (std::uint64_t{1} << x) | (std::uint64_t{1} << y);
  for (bool grew = true; grew;) {
    grew = false;
    for (std::size_t v = 0; v < n; ++v)
      if (((anc >> v) & 1U) && (dag.parents[v] & ~anc)) {
        anc |= dag.parents[v];
        grew = true;
      }
  }
  std::vector<std::uint64_t> adj(n, 0);
  for (std::size_t v = 0; v < n; ++v) {
    if (!((anc >> v) & 1U)) continue;
    const std::uint64_t pa = dag.parents[v];
    adj[v] |= pa;
    for (std::size_t p = 0; p < n; ++p)
      if ((pa >> p) & 1U) adj[p] |= (std::uint64_t{1} << v) | (pa & ~(std::uint64_t{1} << p));
  }
  std::uint64_t seen = std::uint64_t{1} << x, frontier = seen;
  while (frontier) {
    std::uint64_t next = 0;
    for (std::size_t v = 0; v < n; ++v)
      if ((frontier >> v) & 1U) next |= adj[v];
    next &= anc & ~z & ~seen;
    if ((next >> y) & 1U) return false;
    seen |= next;
    frontier = next;
  }
  return true;
}

DSepOracle::DSepOracle(SmallDag dag) : DSepOracle(dag, [&] {
  std::vector<std::size_t> all(dag.size());
  std::iota(all.begin(), all.end(), 0);
  return all;
}()) {}

DSepOracle::DSepOracle(SmallDag dag, std::vector<std::size_t> observed)
    : dag_(std::move(dag)), observed_(std::move(observed)) {
  for (std::size_t v : observed_) names_.push_back(dag_.names[v]);
}

CITestResult DSepOracle::test(std::size_t i, std::size_t j, const std::vector<std::size_t>& s) const {
  ++calls_;
  std::uint64_t z = 0;
  for (std::size_t v : s) z |= std::uint64_t{1} << observed_[v];
  const bool sep = d_separated(dag_, observed_[i], observed_[j], z);
  return CITestResult{i, j, s, sep ? 1.0 : 0.0, sep, false};
}

bool inducing_adjacent(const DSepOracle& oracle, std::size_t i, std::size_t j) {
  std::vector<std::size_t> others;
  for (std::size_t v = 0; v < oracle.num_vars(); ++v)
    if (v != i && v != j) others.push_back(v);
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << others.size()); ++mask) {
    std::vector<std::size_t> s;
    for (std::size_t b = 0; b < others.size(); ++b)
      if ((mask >> b) & 1U) s.push_back(others[b]);
    if (oracle.test(i, j, s).independent) return false;
  }
  return true;
}

SmallDag random_dag(std::size_t n, double density, std::mt19937_64& rng, const std::string& prefix) {
  SmallDag dag;
  for (std::size_t i = 0; i < n; ++i) dag.names.push_back(prefix + std::to_string(i));
  dag.parents.assign(n, 0);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  std::bernoulli_distribution edge(density);
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = a + 1; b < n; ++b)
      if (edge(rng)) dag.add_edge(order[a], order[b]);
  return dag;
}

adarec::synth::ScmSpec linear_scm(const SmallDag& dag, std::size_t n, std::uint64_t seed, double lo, double hi,
                                  std::mt19937_64& rng) {
  std::uniform_real_distribution<double> magnitude(lo, hi);
  std::bernoulli_distribution sign(0.5);
  adarec::synth::ScmSpec spec;
  for (std::size_t v = 0; v < dag.size(); ++v) {
    adarec::synth::Variable var;
    var.name = dag.names[v];
    for (std::size_t p = 0; p < dag.size(); ++p)
      if (dag.has_edge(p, v)) {
        var.mechanism.weights[dag.names[p]] = (sign(rng) ? 1.0 : -1.0) * magnitude(rng);
        spec.edges.emplace_back(dag.names[p], dag.names[v]);
      }
    spec.variables.push_back(std::move(var));
  }
  spec.target = dag.names.front();
  spec.n = n;
  spec.seed = seed;
  return spec;
}

}  // namespace testing
