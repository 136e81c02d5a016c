#pragma once

#include <algorithm>
#include <cstddef>
#include <deque>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "teid/error.hpp"

namespace teid {

enum class VertexKind { Observed, Latent, Selection };

inline std::string_view to_string(VertexKind kind) {
  switch (kind) {
    case VertexKind::Observed:
      return "observed";
    case VertexKind::Latent:
      return "latent";
    case VertexKind::Selection:
      return "selection";
  }
  return "?";
}

struct Vertex {
  std::string name;
  VertexKind kind = VertexKind::Observed;
};

using NameSet = std::set<std::string>;
using Edge = std::pair<std::string, std::string>;  // (parent, child)

// A path diagram. Vertex order is the declaration order and is used for all
// deterministic output; topological_order() is a separate view.
class Dag {
 public:
  Dag() = default;

  Dag(std::vector<Vertex> vertices, const std::vector<Edge>& edges) : vertices_(std::move(vertices)) {
    for (std::size_t i = 0; i < vertices_.size(); ++i) {
      if (vertices_[i].name.empty()) fail(ErrorKind::Input, "vertex with empty name");
      if (!index_.emplace(vertices_[i].name, i).second)
        fail(ErrorKind::Input, "duplicate vertex name '" + vertices_[i].name + "'");
    }
    parents_.assign(vertices_.size(), {});
    children_.assign(vertices_.size(), {});
    for (const auto& [from, to] : edges) {
      const std::size_t p = index(from);
      const std::size_t c = index(to);
      if (p == c) fail(ErrorKind::Input, "self-loop on '" + from + "'");
      if (std::find(children_[p].begin(), children_[p].end(), c) != children_[p].end())
        fail(ErrorKind::Input, "duplicate edge " + from + "->" + to);
      if (vertices_[p].kind == VertexKind::Selection)
        fail(ErrorKind::Input, "selection vertex '" + from + "' cannot have children");
      children_[p].push_back(c);
      parents_[c].push_back(p);
      edges_.emplace_back(p, c);
    }
    for (auto& v : parents_) std::sort(v.begin(), v.end());
    for (auto& v : children_) std::sort(v.begin(), v.end());
    sort_topologically();
  }

  std::size_t size() const { return vertices_.size(); }
  const std::vector<Vertex>& vertices() const { return vertices_; }
  const Vertex& vertex(std::size_t i) const { return vertices_.at(i); }
  const std::string& name(std::size_t i) const { return vertices_.at(i).name; }

  bool contains(std::string_view name) const { return index_.find(name) != index_.end(); }

  std::size_t index(std::string_view name) const {
    auto it = index_.find(name);
    if (it == index_.end()) fail(ErrorKind::Input, "unknown vertex '" + std::string(name) + "'");
    return it->second;
  }

  VertexKind kind(std::string_view name) const { return vertices_[index(name)].kind; }

  const std::vector<std::size_t>& parents(std::size_t i) const { return parents_.at(i); }
  const std::vector<std::size_t>& children(std::size_t i) const { return children_.at(i); }
  const std::vector<std::size_t>& topological_order() const { return topo_; }

  bool has_edge(std::string_view from, std::string_view to) const {
    const auto& ch = children_[index(from)];
    return std::find(ch.begin(), ch.end(), index(to)) != ch.end();
  }

  std::vector<Edge> edges() const {
    std::vector<Edge> out;
    out.reserve(edges_.size());
    for (auto [p, c] : edges_) out.emplace_back(name(p), name(c));
    return out;
  }

  const std::vector<std::pair<std::size_t, std::size_t>>& edge_indices() const { return edges_; }

  std::vector<std::string> names(VertexKind kind) const {
    std::vector<std::string> out;
    for (const auto& v : vertices_)
      if (v.kind == kind) out.push_back(v.name);
    return out;
  }

  // Copy with every edge leaving `v` deleted (the back-door graph).
  Dag without_edges_from(std::size_t v) const {
    std::vector<Edge> kept;
    for (auto [p, c] : edges_)
      if (p != v) kept.emplace_back(name(p), name(c));
    return Dag(vertices_, kept);
  }

 private:
  void sort_topologically() {
    std::vector<std::size_t> indegree(size());
    for (std::size_t i = 0; i < size(); ++i) indegree[i] = parents_[i].size();
    // Kahn's algorithm, lowest declaration index first.
    std::set<std::size_t> ready;
    for (std::size_t i = 0; i < size(); ++i)
      if (indegree[i] == 0) ready.insert(i);
    topo_.clear();
    while (!ready.empty()) {
      const std::size_t v = *ready.begin();
      ready.erase(ready.begin());
      topo_.push_back(v);
      for (std::size_t c : children_[v])
        if (--indegree[c] == 0) ready.insert(c);
    }
    if (topo_.size() != size()) fail(ErrorKind::Input, "graph contains a directed cycle");
  }

  std::vector<Vertex> vertices_;
  std::vector<std::pair<std::size_t, std::size_t>> edges_;
  std::map<std::string, std::size_t, std::less<>> index_;
  std::vector<std::vector<std::size_t>> parents_;
  std::vector<std::vector<std::size_t>> children_;
  std::vector<std::size_t> topo_;
};

namespace detail {

using Mask = std::vector<char>;

inline Mask mask_of(const Dag& g, const NameSet& names) {
  Mask m(g.size(), 0);
  for (const auto& n : names) m[g.index(n)] = 1;
  return m;
}

// Vertices reachable from `seeds` along edges in one direction, seeds included.
inline Mask closure(const Dag& g, const Mask& seeds, bool downward) {
  Mask out = seeds;
  std::vector<std::size_t> stack;
  for (std::size_t i = 0; i < g.size(); ++i)
    if (seeds[i]) stack.push_back(i);
  while (!stack.empty()) {
    const std::size_t v = stack.back();
    stack.pop_back();
    for (std::size_t w : downward ? g.children(v) : g.parents(v)) {
      if (!out[w]) {
        out[w] = 1;
        stack.push_back(w);
      }
    }
  }
  return out;
}

inline Mask descendants_of(const Dag& g, std::size_t v) {
  Mask seed(g.size(), 0);
  seed[v] = 1;
  Mask out = closure(g, seed, true);
  out[v] = 0;
  return out;
}

// Reachability over (vertex, direction) states. Returns an active trail from
// some member of `a` to some member of `b` given `c`, or nullopt when c
// d-separates them.
inline std::optional<std::vector<std::size_t>> active_trail(const Dag& g, const Mask& a, const Mask& b,
                                                            const Mask& c) {
  const std::size_t n = g.size();
  const Mask opens_colliders = closure(g, c, false);
  constexpr std::size_t kUp = 0;    // entered from a child
  constexpr std::size_t kDown = 1;  // entered from a parent
  constexpr std::size_t kNone = static_cast<std::size_t>(-1);
  std::vector<char> seen(2 * n, 0);
  std::vector<std::size_t> from(2 * n, kNone);
  std::deque<std::size_t> queue;
  auto push = [&](std::size_t v, std::size_t dir, std::size_t prev) {
    const std::size_t s = 2 * v + dir;
    if (seen[s]) return;
    seen[s] = 1;
    from[s] = prev;
    queue.push_back(s);
  };
  for (std::size_t v = 0; v < n; ++v)
    if (a[v]) push(v, kUp, kNone);

  while (!queue.empty()) {
    const std::size_t s = queue.front();
    queue.pop_front();
    const std::size_t v = s / 2;
    const std::size_t dir = s % 2;
    if (b[v] && !c[v]) {
      std::vector<std::size_t> trail;
      for (std::size_t t = s; t != kNone; t = from[t]) trail.push_back(t / 2);
      std::reverse(trail.begin(), trail.end());
      return trail;
    }
    if (dir == kUp) {
      if (c[v]) continue;
      for (std::size_t p : g.parents(v)) push(p, kUp, s);
      for (std::size_t ch : g.children(v)) push(ch, kDown, s);
    } else {
      if (!c[v])
        for (std::size_t ch : g.children(v)) push(ch, kDown, s);
      if (opens_colliders[v])
        for (std::size_t p : g.parents(v)) push(p, kUp, s);
    }
  }
  return std::nullopt;
}

inline void require_disjoint(const NameSet& a, const NameSet& b, std::string_view what) {
  for (const auto& n : a)
    if (b.count(n)) fail(ErrorKind::Input, std::string(what) + ": '" + n + "' appears in two sets");
}

}  // namespace detail

enum class Relation { Parents, Ancestors, Descendants, NonDescendants };

inline NameSet relatives(const Dag& g, std::string_view v, Relation relation) {
  const std::size_t i = g.index(v);
  NameSet out;
  switch (relation) {
    case Relation::Parents:
      for (std::size_t p : g.parents(i)) out.insert(g.name(p));
      break;
    case Relation::Ancestors:
    case Relation::Descendants: {
      detail::Mask seed(g.size(), 0);
      seed[i] = 1;
      const auto m = detail::closure(g, seed, relation == Relation::Descendants);
      for (std::size_t j = 0; j < g.size(); ++j)
        if (m[j] && j != i) out.insert(g.name(j));
      break;
    }
    case Relation::NonDescendants: {
      const auto desc = detail::descendants_of(g, i);
      for (std::size_t j = 0; j < g.size(); ++j)
        if (!desc[j] && j != i) out.insert(g.name(j));
      break;
    }
  }
  return out;
}

// An open trail witnessing d-connection of A and B given C, if any.
inline std::optional<std::vector<std::string>> open_trail(const Dag& g, const NameSet& a, const NameSet& b,
                                                          const NameSet& c) {
  detail::require_disjoint(a, b, "d-separation");
  detail::require_disjoint(a, c, "d-separation");
  detail::require_disjoint(b, c, "d-separation");
  auto trail = detail::active_trail(g, detail::mask_of(g, a), detail::mask_of(g, b), detail::mask_of(g, c));
  if (!trail) return std::nullopt;
  std::vector<std::string> names;
  names.reserve(trail->size());
  for (std::size_t v : *trail) names.push_back(g.name(v));
  return names;
}

inline bool d_separated(const Dag& g, const NameSet& a, const NameSet& b, const NameSet& c) {
  return !open_trail(g, a, b, c).has_value();
}

// Z contains no descendant of x and blocks every path into x.
inline bool back_door_admissible(const Dag& g, std::string_view x, std::string_view y, const NameSet& z) {
  const std::size_t xi = g.index(x);
  g.index(y);
  if (x == y) fail(ErrorKind::Input, "back-door: treatment and response coincide");
  if (z.count(std::string(x)) || z.count(std::string(y)))
    fail(ErrorKind::Input, "back-door: adjustment set contains treatment or response");
  const auto desc = detail::descendants_of(g, xi);
  for (const auto& n : z)
    if (desc[g.index(n)]) return false;
  return d_separated(g.without_edges_from(xi), {std::string(x)}, {std::string(y)}, z);
}

// ---------------------------------------------------------------------------
// Undirected graphs and the odd-cycle condition

class UndirectedGraph {
 public:
  explicit UndirectedGraph(std::size_t n = 0) : adj_(n) {}

  void add_edge(std::size_t a, std::size_t b) {
    if (a == b) fail(ErrorKind::Input, "undirected self-loop");
    if (std::find(adj_.at(a).begin(), adj_[a].end(), b) != adj_[a].end()) return;
    adj_[a].push_back(b);
    adj_.at(b).push_back(a);
  }

  std::size_t size() const { return adj_.size(); }
  const std::vector<std::size_t>& neighbors(std::size_t v) const { return adj_.at(v); }
  std::size_t degree(std::size_t v) const { return adj_.at(v).size(); }

  bool has_edge(std::size_t a, std::size_t b) const {
    return std::find(adj_.at(a).begin(), adj_[a].end(), b) != adj_[a].end();
  }

  // Connected components, each sorted, ordered by smallest member.
  std::vector<std::vector<std::size_t>> components() const {
    std::vector<std::vector<std::size_t>> out;
    std::vector<char> seen(size(), 0);
    for (std::size_t r = 0; r < size(); ++r) {
      if (seen[r]) continue;
      std::vector<std::size_t> comp{r};
      seen[r] = 1;
      for (std::size_t k = 0; k < comp.size(); ++k)
        for (std::size_t w : adj_[comp[k]])
          if (!seen[w]) {
            seen[w] = 1;
            comp.push_back(w);
          }
      std::sort(comp.begin(), comp.end());
      out.push_back(std::move(comp));
    }
    return out;
  }

 private:
  std::vector<std::vector<std::size_t>> adj_;
};

// An odd cycle inside the component containing `root`, as a closed vertex
// sequence (last vertex adjacent to the first), or nullopt if bipartite.
inline std::optional<std::vector<std::size_t>> find_odd_cycle(const UndirectedGraph& p, std::size_t root) {
  constexpr std::size_t kNone = static_cast<std::size_t>(-1);
  std::vector<std::size_t> depth(p.size(), kNone), parent(p.size(), kNone);
  std::vector<std::size_t> order{root};
  depth[root] = 0;
  for (std::size_t k = 0; k < order.size(); ++k) {
    const std::size_t v = order[k];
    for (std::size_t w : p.neighbors(v)) {
      if (depth[w] == kNone) {
        depth[w] = depth[v] + 1;
        parent[w] = v;
        order.push_back(w);
      } else if (depth[w] == depth[v]) {
        // Same BFS level: climb both branches to their common ancestor.
        std::vector<std::size_t> left{v}, right{w};
        std::size_t a = v, b = w;
        while (parent[a] != parent[b]) {
          a = parent[a];
          b = parent[b];
          left.push_back(a);
          right.push_back(b);
        }
        left.push_back(parent[a]);
        std::vector<std::size_t> cycle(left.begin(), left.end());
        cycle.insert(cycle.end(), right.rbegin(), right.rend());
        return cycle;
      }
    }
  }
  return std::nullopt;
}

inline bool has_odd_cycle(const UndirectedGraph& p) {
  for (const auto& comp : p.components())
    if (find_odd_cycle(p, comp.front())) return true;
  return false;
}

enum class PatternMode { Covariance, Concentration };

// Structural zeros of a (conditional) covariance or concentration matrix over
// an ordered variable list. Absent pairs are stored as index pairs (i < j).
class ZeroPattern {
 public:
  ZeroPattern() = default;

  ZeroPattern(std::vector<std::string> variables, const std::vector<Edge>& absent,
              PatternMode mode = PatternMode::Covariance)
      : variables_(std::move(variables)), mode_(mode) {
    for (std::size_t i = 0; i < variables_.size(); ++i)
      if (!index_.emplace(variables_[i], i).second)
        fail(ErrorKind::Input, "zero pattern: duplicate variable '" + variables_[i] + "'");
    for (const auto& [a, b] : absent) add_absent(index(a), index(b));
  }

  const std::vector<std::string>& variables() const { return variables_; }
  std::size_t size() const { return variables_.size(); }
  PatternMode mode() const { return mode_; }
  const std::set<std::pair<std::size_t, std::size_t>>& absent_pairs() const { return absent_; }

  std::size_t index(std::string_view name) const {
    auto it = index_.find(name);
    if (it == index_.end()) fail(ErrorKind::Input, "zero pattern: unknown variable '" + std::string(name) + "'");
    return it->second;
  }

  bool is_absent(std::size_t i, std::size_t j) const { return absent_.count(std::minmax(i, j)) > 0; }

  void add_absent(std::size_t i, std::size_t j) {
    if (i == j) fail(ErrorKind::Input, "zero pattern: self-pair on '" + variables_.at(i) + "'");
    if (i >= size() || j >= size()) fail(ErrorKind::Input, "zero pattern: index out of range");
    absent_.insert(std::minmax(i, j));
  }

  std::vector<Edge> absent_names() const {
    std::vector<Edge> out;
    for (auto [i, j] : absent_) out.emplace_back(variables_[i], variables_[j]);
    return out;
  }

  // The complementary graph of the presence graph: edges are the zeros.
  UndirectedGraph complement_graph() const {
    UndirectedGraph out(size());
    for (auto [i, j] : absent_) out.add_edge(i, j);
    return out;
  }

 private:
  std::vector<std::string> variables_;
  std::map<std::string, std::size_t, std::less<>> index_;
  std::set<std::pair<std::size_t, std::size_t>> absent_;
  PatternMode mode_ = PatternMode::Covariance;
};

// Zeros implied by the graph (faithfulness): a pair is absent when the two
// variables are d-separated by `given` (Covariance) or by `given` plus all
// other variables (Concentration).
inline ZeroPattern zero_pattern(const Dag& g, const std::vector<std::string>& vars, const NameSet& given,
                                PatternMode mode) {
  for (const auto& v : vars) {
    g.index(v);
    if (given.count(v)) fail(ErrorKind::Input, "zero pattern: '" + v + "' is both a variable and conditioned on");
  }
  for (const auto& v : given) g.index(v);
  ZeroPattern p(vars, {}, mode);
  for (std::size_t i = 0; i < vars.size(); ++i) {
    for (std::size_t j = i + 1; j < vars.size(); ++j) {
      NameSet cond = given;
      if (mode == PatternMode::Concentration)
        for (std::size_t k = 0; k < vars.size(); ++k)
          if (k != i && k != j) cond.insert(vars[k]);
      if (d_separated(g, {vars[i]}, {vars[j]}, cond)) p.add_absent(i, j);
    }
  }
  return p;
}

// Every variable touches a structural zero and every component of the
// complementary graph contains an odd cycle.
inline bool odd_cycle_identifiable(const ZeroPattern& p) {
  if (p.size() < 3) return false;
  const auto comp = p.complement_graph();
  for (std::size_t v = 0; v < comp.size(); ++v)
    if (comp.degree(v) == 0) return false;
  for (const auto& c : comp.components())
    if (!find_odd_cycle(comp, c.front())) return false;
  return true;
}

}  // namespace teid
