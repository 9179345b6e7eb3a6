#include <algorithm>
#include <deque>
#include <numeric>
#include <set>
#include <thread>
#include <unordered_map>

#include "adarec/causal.hpp"

namespace adarec::causal {

namespace {

using Graph = PartialAncestralGraph;

// Position of every node in lexicographic name order; all iteration uses it.
std::vector<std::size_t> name_rank(const std::vector<std::string>& names) {
  std::vector<std::size_t> order(names.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return names[a] < names[b]; });
  std::vector<std::size_t> rank(names.size());
  for (std::size_t r = 0; r < order.size(); ++r) rank[order[r]] = r;
  return rank;
}

struct NameOrder {
  std::vector<std::size_t> rank;
  std::vector<std::size_t> nodes;  // indices in name order

  explicit NameOrder(const std::vector<std::string>& names) : rank(name_rank(names)), nodes(names.size()) {
    for (std::size_t v = 0; v < rank.size(); ++v) nodes[rank[v]] = v;
  }
  void sort(std::vector<std::size_t>& v) const {
    std::sort(v.begin(), v.end(), [&](std::size_t a, std::size_t b) { return rank[a] < rank[b]; });
  }
  std::vector<std::size_t> adjacent(const Graph& g, std::size_t v) const {
    auto adj = g.adjacent_to(v);
    sort(adj);
    return adj;
  }
  // Edges as (a, b) with a before b, in lexicographic name order.
  std::vector<std::pair<std::size_t, std::size_t>> edges(const Graph& g) const {
    std::vector<std::pair<std::size_t, std::size_t>> out;
    for (std::size_t ra = 0; ra < nodes.size(); ++ra)
      for (std::size_t rb = ra + 1; rb < nodes.size(); ++rb)
        if (g.adjacent(nodes[ra], nodes[rb])) out.emplace_back(nodes[ra], nodes[rb]);
    return out;
  }
};

// Calls `fn` on each size-`k` subset of `items` in lexicographic order until
// it returns true. Returns whether any call returned true.
template <typename Fn>
bool for_each_subset(const std::vector<std::size_t>& items, std::size_t k, Fn&& fn) {
  if (k > items.size()) return false;
  std::vector<std::size_t> idx(k);
  std::iota(idx.begin(), idx.end(), 0);
  std::vector<std::size_t> subset(k);
  while (true) {
    for (std::size_t t = 0; t < k; ++t) subset[t] = items[idx[t]];
    if (fn(subset)) return true;
    std::size_t t = k;
    while (t > 0 && idx[t - 1] == items.size() - k + (t - 1)) --t;
    if (t == 0) return false;
    ++idx[t - 1];
    for (std::size_t u = t; u < k; ++u) idx[u] = idx[u - 1] + 1;
  }
}

template <typename Fn>
void parallel_for(std::size_t n, unsigned threads, Fn&& fn) {
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(n)));
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> workers;
  for (unsigned t = 0; t < threads; ++t)
    workers.emplace_back([&, t] {
      for (std::size_t i = t; i < n; i += threads) fn(i);
    });
  for (auto& w : workers) w.join();
}

std::vector<std::size_t> without(std::vector<std::size_t> v, std::size_t a, std::size_t b) {
  v.erase(std::remove_if(v.begin(), v.end(), [&](std::size_t x) { return x == a || x == b; }), v.end());
  return v;
}

bool contains(const std::vector<std::size_t>& v, std::size_t x) { return std::find(v.begin(), v.end(), x) != v.end(); }

void orient_colliders(Graph& g, const NameOrder& order) {
  for (std::size_t k : order.nodes) {
    const auto adj = order.adjacent(g, k);
    for (std::size_t x = 0; x < adj.size(); ++x)
      for (std::size_t y = x + 1; y < adj.size(); ++y) {
        const std::size_t i = adj[x], j = adj[y];
        if (g.adjacent(i, j)) continue;
        const auto* sep = g.sepset(i, j);
        if (!sep || contains(*sep, k)) continue;
        g.set_mark(i, k, Mark::Arrow);
        g.set_mark(j, k, Mark::Arrow);
      }
  }
}

// R1: a *-> b o-* c, a and c not adjacent  =>  b -> c.
bool rule1(Graph& g, const NameOrder& order) {
  bool changed = false;
  for (std::size_t b : order.nodes) {
    const auto adj = order.adjacent(g, b);
    for (std::size_t a : adj) {
      if (g.mark(a, b) != Mark::Arrow) continue;
      for (std::size_t c : adj) {
        if (c == a || g.adjacent(a, c) || g.mark(c, b) != Mark::Circle) continue;
        g.set_mark(c, b, Mark::Tail);
        g.set_mark(b, c, Mark::Arrow);
        changed = true;
      }
    }
  }
  return changed;
}

// R2: a -> b *-> c or a *-> b -> c, with a *-o c  =>  a *-> c.
bool rule2(Graph& g, const NameOrder& order) {
  bool changed = false;
  for (std::size_t a : order.nodes) {
    for (std::size_t c : order.adjacent(g, a)) {
      if (g.mark(a, c) != Mark::Circle) continue;
      for (std::size_t b : order.adjacent(g, a)) {
        if (b == c || !g.adjacent(b, c)) continue;
        const bool first = g.mark(b, a) == Mark::Tail && g.mark(a, b) == Mark::Arrow && g.mark(b, c) == Mark::Arrow;
        const bool second = g.mark(a, b) == Mark::Arrow && g.mark(c, b) == Mark::Tail && g.mark(b, c) == Mark::Arrow;
        if (first || second) {
          g.set_mark(a, c, Mark::Arrow);
          changed = true;
          break;
        }
      }
    }
  }
  return changed;
}

// R3: a *-> b <-* c, a *-o d o-* c, a and c not adjacent, d *-o b  =>  d *-> b.
bool rule3(Graph& g, const NameOrder& order) {
  bool changed = false;
  for (std::size_t b : order.nodes) {
    const auto adj_b = order.adjacent(g, b);
    for (std::size_t d : adj_b) {
      if (g.mark(d, b) != Mark::Circle) continue;
      std::vector<std::size_t> common;
      for (std::size_t v : adj_b)
        if (v != d && g.adjacent(v, d)) common.push_back(v);
      bool fired = false;
      for (std::size_t x = 0; x < common.size() && !fired; ++x)
        for (std::size_t y = x + 1; y < common.size() && !fired; ++y) {
          const std::size_t a = common[x], c = common[y];
          if (g.adjacent(a, c)) continue;
          if (g.mark(a, b) != Mark::Arrow || g.mark(c, b) != Mark::Arrow) continue;
          if (g.mark(a, d) != Mark::Circle || g.mark(c, d) != Mark::Circle) continue;
          g.set_mark(d, b, Mark::Arrow);
          changed = fired = true;
        }
    }
  }
  return changed;
}

bool is_parent(const Graph& g, std::size_t p, std::size_t c) {
  return g.mark(c, p) == Mark::Tail && g.mark(p, c) == Mark::Arrow;
}

// Searches for a discriminating path <theta, ..., a, b, c> for b and orients
// b o-* c accordingly. Returns true when it oriented something.
bool discriminating_path(Graph& g, const NameOrder& order, std::size_t a, std::size_t b, std::size_t c) {
  std::deque<std::size_t> queue{a};
  std::set<std::size_t> visited{a, b};
  std::unordered_map<std::size_t, std::size_t> previous{{a, b}};
  while (!queue.empty()) {
    const std::size_t t = queue.front();
    queue.pop_front();
    const std::size_t p = previous.at(t);
    for (std::size_t d : order.adjacent(g, t)) {
      if (visited.count(d) || d == c) continue;
      // t must be a collider between d and its successor on the path.
      if (g.mark(d, t) != Mark::Arrow || g.mark(p, t) != Mark::Arrow) continue;
      if (!g.adjacent(d, c)) {
        const auto* sep = g.sepset(d, c);
        if (sep && contains(*sep, b)) {
          g.set_mark(c, b, Mark::Tail);
          g.set_mark(b, c, Mark::Arrow);
        } else {
          g.set_mark(b, a, Mark::Arrow);
          g.set_mark(a, b, Mark::Arrow);
          g.set_mark(c, b, Mark::Arrow);
          g.set_mark(b, c, Mark::Arrow);
        }
        return true;
      }
      if (is_parent(g, d, c)) {
        visited.insert(d);
        previous[d] = t;
        queue.push_back(d);
      }
    }
  }
  return false;
}

// R4: discriminating path rule.
bool rule4(Graph& g, const NameOrder& order) {
  bool changed = false;
  for (std::size_t b : order.nodes) {
    for (std::size_t c : order.adjacent(g, b)) {
      if (g.mark(c, b) != Mark::Circle) continue;
      for (std::size_t a : order.adjacent(g, b)) {
        if (a == c || !g.adjacent(a, c)) continue;
        if (g.mark(b, a) != Mark::Arrow || !is_parent(g, a, c)) continue;
        if (discriminating_path(g, order, a, b, c)) {
          changed = true;
          break;
        }
      }
    }
  }
  return changed;
}

}  // namespace

std::vector<std::size_t> possible_dsep(const PartialAncestralGraph& graph, std::size_t x, int max_path_length) {
  std::set<std::size_t> found;
  std::set<std::pair<std::size_t, std::size_t>> seen;
  std::deque<std::tuple<std::size_t, std::size_t, int>> queue;
  for (std::size_t y : graph.adjacent_to(x)) {
    found.insert(y);
    seen.emplace(x, y);
    queue.emplace_back(x, y, 1);
  }
  while (!queue.empty()) {
    const auto [a, b, length] = queue.front();
    queue.pop_front();
    if (max_path_length >= 0 && length >= max_path_length) continue;
    for (std::size_t c : graph.adjacent_to(b)) {
      if (c == a || c == x) continue;
      const bool collider = graph.mark(a, b) == Mark::Arrow && graph.mark(c, b) == Mark::Arrow;
      if (!collider && !graph.adjacent(a, c)) continue;
      if (!seen.emplace(b, c).second) continue;
      found.insert(c);
      queue.emplace_back(b, c, length + 1);
    }
  }
  found.erase(x);
  return {found.begin(), found.end()};
}

PartialAncestralGraph fci_skeleton(const IndependenceTest& test, const FciOptions& options) {
  if (options.max_depth < 0) throw CausalError(CausalError::Kind::InvalidArgument, "max_depth must be >= 0");
  Graph g = Graph::complete(test.names());
  const NameOrder order(g.nodes());

  for (std::size_t depth = 0; depth <= static_cast<std::size_t>(options.max_depth); ++depth) {
    std::vector<std::vector<std::size_t>> adj(g.size());
    bool testable = false;
    for (std::size_t v = 0; v < g.size(); ++v) {
      adj[v] = order.adjacent(g, v);
      testable = testable || adj[v].size() > depth;
    }
    if (!testable) break;

    const auto pairs = order.edges(g);
    std::vector<std::optional<std::vector<std::size_t>>> separated(pairs.size());
    parallel_for(pairs.size(), options.threads, [&](std::size_t p) {
      const auto [x, y] = pairs[p];
      for (const auto& [a, b] : {std::pair{x, y}, std::pair{y, x}}) {
        const auto candidates = without(adj[a], b, b);
        std::vector<std::size_t> found;
        const bool hit = for_each_subset(candidates, depth, [&](const std::vector<std::size_t>& s) {
          if (!test.test(a, b, s).independent) return false;
          found = s;
          return true;
        });
        if (hit) {
          separated[p] = std::move(found);
          return;
        }
      }
    });
    for (std::size_t p = 0; p < pairs.size(); ++p) {
      if (!separated[p]) continue;
      g.remove_edge(pairs[p].first, pairs[p].second);
      g.set_sepset(pairs[p].first, pairs[p].second, *separated[p]);
    }
  }

  if (!options.possible_dsep || options.max_depth == 0) return g;

  Graph oriented = g;
  oriented.reset_marks();
  orient_colliders(oriented, order);
  std::vector<std::vector<std::size_t>> pdsep(g.size());
  for (std::size_t v = 0; v < g.size(); ++v) {
    pdsep[v] = possible_dsep(oriented, v, options.max_path_length);
    order.sort(pdsep[v]);
  }

  for (const auto& [x, y] : order.edges(g)) {
    for (const auto& [a, b] : {std::pair{x, y}, std::pair{y, x}}) {
      if (!g.adjacent(a, b)) break;
      const auto candidates = without(pdsep[a], a, b);
      const std::size_t limit = std::min<std::size_t>(static_cast<std::size_t>(options.max_depth), candidates.size());
      for (std::size_t size = 1; size <= limit; ++size) {
        std::vector<std::size_t> found;
        const bool hit = for_each_subset(candidates, size, [&](const std::vector<std::size_t>& s) {
          if (!test.test(a, b, s).independent) return false;
          found = s;
          return true;
        });
        if (hit) {
          g.remove_edge(a, b);
          g.set_sepset(a, b, std::move(found));
          break;
        }
      }
    }
  }
  return g;
}

PartialAncestralGraph orient_pag(PartialAncestralGraph skeleton) {
  Graph g = std::move(skeleton);
  const NameOrder order(g.nodes());
  g.reset_marks();
  orient_colliders(g, order);
  while (true) {
    bool changed = rule1(g, order);
    changed = rule2(g, order) || changed;
    changed = rule3(g, order) || changed;
    changed = rule4(g, order) || changed;
    if (!changed) break;
  }
  return g;
}

CausalFeatureSet causal_features(const PartialAncestralGraph& pag, const std::string& target,
                                 const std::vector<importance::MIScore>& mi, std::size_t p) {
  const auto t = pag.index_of(target);
  if (!t) throw CausalError(CausalError::Kind::TargetNotInGraph, "target '" + target + "' is not a node of the PAG");
  std::unordered_map<std::string, double> score;
  for (const auto& s : mi) score.emplace(s.feature_name, s.score);

  CausalFeatureSet out;
  out.p_used = p;
  for (std::size_t v : pag.adjacent_to(*t)) {
    const auto& name = pag.nodes()[v];
    auto it = score.find(name);
    out.entries.push_back({name, it == score.end() ? 0.0 : it->second, pag.mark(v, *t)});
  }
  std::sort(out.entries.begin(), out.entries.end(), [](const CausalFeature& a, const CausalFeature& b) {
    if (a.mi_score != b.mi_score) return a.mi_score > b.mi_score;
    return a.name < b.name;
  });
  if (out.entries.size() > p) out.entries.resize(p);
  return out;
}

nlohmann::json to_json(const CausalFeatureSet& set) {
  nlohmann::json entries = nlohmann::json::array();
  for (const auto& e : set.entries)
    entries.push_back({{"feature", e.name}, {"mi", e.mi_score}, {"mark_at_target", mark_name(e.mark_at_target)}});
  return {{"p", set.p_used}, {"entries", entries}};
}

CausalFeatureSet causal_features_from_json(const nlohmann::json& doc) {
  CausalFeatureSet out;
  out.p_used = doc.at("p").get<std::size_t>();
  for (const auto& e : doc.at("entries")) {
    CausalFeature f;
    f.name = e.at("feature").get<std::string>();
    f.mi_score = e.at("mi").get<double>();
    const auto m = e.at("mark_at_target").get<std::string>();
    f.mark_at_target = m == "arrow" ? Mark::Arrow : m == "tail" ? Mark::Tail : Mark::Circle;
    out.entries.push_back(std::move(f));
  }
  return out;
}

}  // namespace adarec::causal
