#pragma once

// Dijkstra with a deterministic tie-break: among paths whose lengths agree
// within kTieEps, the one whose key sequence is lexicographically smallest
// wins. Shared by the environment shortest-path query and the agent planner.

#include <algorithm>
#include <cstddef>
#include <limits>
#include <queue>
#include <string_view>
#include <utility>
#include <vector>

namespace covln::detail {

inline constexpr double kTieEps = 1e-9;

struct SearchGraph {
  std::vector<std::string_view> keys;
  std::vector<std::vector<std::pair<int, double>>> adj;

  int add_node(std::string_view key) {
    keys.push_back(key);
    adj.emplace_back();
    return static_cast<int>(keys.size()) - 1;
  }
  void add_edge(int a, int b, double w) {
    adj[a].emplace_back(b, w);
    adj[b].emplace_back(a, w);
  }
  std::size_t size() const { return keys.size(); }
};

struct SearchTree {
  std::vector<double> dist;
  std::vector<int> pred;

  bool reached(int v) const { return dist[v] < std::numeric_limits<double>::infinity(); }

  std::vector<int> path_to(int v) const {
    std::vector<int> path;
    for (int cur = v; cur >= 0; cur = pred[cur]) path.push_back(cur);
    std::reverse(path.begin(), path.end());
    return path;
  }
};

// Compares the root->a->v and root->b->v key sequences lexicographically.
inline bool lex_less(const SearchGraph& g, const SearchTree& t, int a, int b, int v) {
  auto pa = t.path_to(a);
  auto pb = t.path_to(b);
  pa.push_back(v);
  pb.push_back(v);
  return std::lexicographical_compare(
      pa.begin(), pa.end(), pb.begin(), pb.end(),
      [&](int x, int y) { return g.keys[x] < g.keys[y]; });
}

inline SearchTree lex_dijkstra(const SearchGraph& g, int source) {
  const std::size_t n = g.size();
  SearchTree t{std::vector<double>(n, std::numeric_limits<double>::infinity()),
               std::vector<int>(n, -1)};
  std::vector<char> done(n, 0);
  using Item = std::pair<double, int>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
  t.dist[source] = 0.0;
  heap.emplace(0.0, source);
  while (!heap.empty()) {
    const auto [d, u] = heap.top();
    heap.pop();
    if (done[u] || d > t.dist[u]) continue;
    done[u] = 1;
    for (const auto& [v, w] : g.adj[u]) {
      if (done[v]) continue;
      const double nd = d + w;
      if (nd < t.dist[v] - kTieEps) {
        t.dist[v] = nd;
        t.pred[v] = u;
        heap.emplace(nd, v);
      } else if (nd <= t.dist[v] + kTieEps && t.pred[v] != u && lex_less(g, t, u, t.pred[v], v)) {
        t.pred[v] = u;
      }
    }
  }
  return t;
}

}  // namespace covln::detail
