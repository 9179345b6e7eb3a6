#include <algorithm>

#include "adarec/causal.hpp"

namespace adarec::causal {

namespace {

std::pair<std::size_t, std::size_t> key(std::size_t a, std::size_t b) { return {std::min(a, b), std::max(a, b)}; }

Mark parse_mark(const std::string& s) {
  if (s == "circle") return Mark::Circle;
  if (s == "arrow") return Mark::Arrow;
  if (s == "tail") return Mark::Tail;
  throw CausalError(CausalError::Kind::InvalidArgument, "unknown endpoint mark '" + s + "'");
}

}  // namespace

const char* mark_name(Mark mark) {
  switch (mark) {
    case Mark::Circle: return "circle";
    case Mark::Arrow: return "arrow";
    case Mark::Tail: return "tail";
  }
  return "?";
}

PartialAncestralGraph::PartialAncestralGraph(std::vector<std::string> nodes)
    : nodes_(std::move(nodes)), marks_(nodes_.size() * nodes_.size(), -1) {}

PartialAncestralGraph PartialAncestralGraph::complete(std::vector<std::string> nodes) {
  PartialAncestralGraph g(std::move(nodes));
  for (std::size_t a = 0; a < g.size(); ++a)
    for (std::size_t b = a + 1; b < g.size(); ++b) g.add_edge(a, b);
  return g;
}

std::optional<std::size_t> PartialAncestralGraph::index_of(const std::string& name) const {
  auto it = std::find(nodes_.begin(), nodes_.end(), name);
  if (it == nodes_.end()) return std::nullopt;
  return static_cast<std::size_t>(it - nodes_.begin());
}

void PartialAncestralGraph::add_edge(std::size_t a, std::size_t b) {
  if (a == b) throw CausalError(CausalError::Kind::InvalidArgument, "self edge on '" + nodes_.at(a) + "'");
  marks_[a * size() + b] = static_cast<std::int8_t>(Mark::Circle);
  marks_[b * size() + a] = static_cast<std::int8_t>(Mark::Circle);
}

void PartialAncestralGraph::remove_edge(std::size_t a, std::size_t b) {
  marks_[a * size() + b] = -1;
  marks_[b * size() + a] = -1;
}

Mark PartialAncestralGraph::mark(std::size_t from, std::size_t at) const {
  const auto m = marks_[from * size() + at];
  if (m < 0) throw CausalError(CausalError::Kind::InvalidArgument, "no edge " + nodes_[from] + " - " + nodes_[at]);
  return static_cast<Mark>(m);
}

void PartialAncestralGraph::set_mark(std::size_t from, std::size_t at, Mark m) {
  if (!adjacent(from, at)) throw CausalError(CausalError::Kind::InvalidArgument, "no edge " + nodes_[from] + " - " + nodes_[at]);
  marks_[from * size() + at] = static_cast<std::int8_t>(m);
}

void PartialAncestralGraph::reset_marks() {
  for (auto& m : marks_)
    if (m >= 0) m = static_cast<std::int8_t>(Mark::Circle);
}

std::vector<std::size_t> PartialAncestralGraph::adjacent_to(std::size_t v) const {
  std::vector<std::size_t> out;
  for (std::size_t u = 0; u < size(); ++u)
    if (adjacent(v, u)) out.push_back(u);
  return out;
}

std::vector<std::pair<std::size_t, std::size_t>> PartialAncestralGraph::edges() const {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (std::size_t a = 0; a < size(); ++a)
    for (std::size_t b = a + 1; b < size(); ++b)
      if (adjacent(a, b)) out.emplace_back(a, b);
  return out;
}

std::size_t PartialAncestralGraph::edge_count() const { return edges().size(); }

void PartialAncestralGraph::set_sepset(std::size_t a, std::size_t b, std::vector<std::size_t> sepset) {
  std::sort(sepset.begin(), sepset.end());
  sepsets_[key(a, b)] = std::move(sepset);
}

const std::vector<std::size_t>* PartialAncestralGraph::sepset(std::size_t a, std::size_t b) const {
  auto it = sepsets_.find(key(a, b));
  return it == sepsets_.end() ? nullptr : &it->second;
}

nlohmann::json PartialAncestralGraph::to_json() const {
  nlohmann::json edges_json = nlohmann::json::array();
  for (const auto& [a, b] : edges())
    edges_json.push_back({{"a", nodes_[a]},
                          {"b", nodes_[b]},
                          {"mark_at_a", mark_name(mark(b, a))},
                          {"mark_at_b", mark_name(mark(a, b))}});
  nlohmann::json seps = nlohmann::json::object();
  for (const auto& [pair, set] : sepsets_) {
    nlohmann::json members = nlohmann::json::array();
    for (std::size_t v : set) members.push_back(nodes_[v]);
    seps[nodes_[pair.first] + "|" + nodes_[pair.second]] = members;
  }
  return {{"nodes", nodes_}, {"edges", edges_json}, {"sepsets", seps}};
}

PartialAncestralGraph PartialAncestralGraph::from_json(const nlohmann::json& doc) {
  try {
    PartialAncestralGraph g(doc.at("nodes").get<std::vector<std::string>>());
    auto index = [&](const std::string& name) {
      auto idx = g.index_of(name);
      if (!idx) throw CausalError(CausalError::Kind::InvalidArgument, "unknown node '" + name + "'");
      return *idx;
    };
    for (const auto& e : doc.at("edges")) {
      const auto a = index(e.at("a").get<std::string>());
      const auto b = index(e.at("b").get<std::string>());
      g.add_edge(a, b);
      g.set_mark(b, a, parse_mark(e.at("mark_at_a").get<std::string>()));
      g.set_mark(a, b, parse_mark(e.at("mark_at_b").get<std::string>()));
    }
    for (const auto& [k, members] : doc.at("sepsets").items()) {
      const auto bar = k.find('|');
      if (bar == std::string::npos) throw CausalError(CausalError::Kind::InvalidArgument, "bad sepset key '" + k + "'");
      std::vector<std::size_t> set;
      for (const auto& m : members) set.push_back(index(m.get<std::string>()));
      g.set_sepset(index(k.substr(0, bar)), index(k.substr(bar + 1)), std::move(set));
    }
    return g;
  } catch (const nlohmann::json::exception& e) {
    throw CausalError(CausalError::Kind::InvalidArgument, std::string("malformed PAG: ") + e.what());
  }
}

}  // namespace adarec::causal
