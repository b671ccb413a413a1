#pragma once

#include <numeric>
#include <span>
#include <vector>

#include "rclb/current.hpp"

namespace rclb {

/// Union-find with union by rank and path compression; deterministic
/// (iteration order is the caller's edge order).
class Dsu {
  public:
    explicit Dsu(std::size_t n) : parent_(n), rank_(n, 0) {
        std::iota(parent_.begin(), parent_.end(), 0);
    }

    int find(int x) {
        while (parent_[x] != x) {
            parent_[x] = parent_[parent_[x]];
            x = parent_[x];
        }
        return x;
    }

    void unite(int a, int b) {
        a = find(a);
        b = find(b);
        if (a == b) return;
        if (rank_[a] < rank_[b]) std::swap(a, b);
        parent_[b] = a;
        if (rank_[a] == rank_[b]) ++rank_[a];
    }

    bool same(int a, int b) { return find(a) == find(b); }

  private:
    std::vector<int> parent_;
    std::vector<int> rank_;
};

/// Union-find supporting rollback (union by rank, no path compression).
/// Used by the trace enumeration engine to maintain connectivity along a
/// depth-first walk of edge states.
class RollbackDsu {
  public:
    explicit RollbackDsu(std::size_t n) : parent_(n), rank_(n, 0) {
        std::iota(parent_.begin(), parent_.end(), 0);
    }

    int find(int x) const {
        while (parent_[x] != x) x = parent_[x];
        return x;
    }

    /// Returns a token to pass to rollback().
    int unite(int a, int b) {
        a = find(a);
        b = find(b);
        if (a == b) {
            trail_.push_back({-1, 0});
            return static_cast<int>(trail_.size()) - 1;
        }
        if (rank_[a] < rank_[b]) std::swap(a, b);
        bool bumped = rank_[a] == rank_[b];
        if (bumped) ++rank_[a];
        parent_[b] = a;
        trail_.push_back({b, bumped ? a : -1});
        return static_cast<int>(trail_.size()) - 1;
    }

    void rollback_to(int token) {
        while (static_cast<int>(trail_.size()) > token) {
            auto [child, bumped_root] = trail_.back();
            trail_.pop_back();
            if (child >= 0) parent_[child] = child;
            if (bumped_root >= 0) --rank_[bumped_root];
        }
    }

    int trail_size() const { return static_cast<int>(trail_.size()); }

    bool same(int a, int b) const { return find(a) == find(b); }

  private:
    std::vector<int> parent_;
    std::vector<int> rank_;
    std::vector<std::pair<int, int>> trail_;
};

/// True iff some a in A and b in B lie in one component of the positive-
/// multiplicity edge graph of the trace. A vertex shared by A and B counts.
inline bool connected(const Graph& g, const TraceConfig& trace, std::span<const int> a,
                      std::span<const int> b) {
    for (int x : a)
        for (int y : b)
            if (x == y) return true;
    Dsu dsu(g.nv);
    for (int e = 0; e < g.ne(); ++e)
        if (trace[e] != EdgeState::Zero) dsu.unite(g.edges[e].u, g.edges[e].v);
    for (int x : a)
        for (int y : b)
            if (dsu.same(x, y)) return true;
    return false;
}

/// Reference implementation used in property tests against the DSU path.
inline bool connected_bfs(const Graph& g, const TraceConfig& trace, std::span<const int> a,
                          std::span<const int> b) {
    std::vector<char> in_b(g.nv, 0), seen(g.nv, 0);
    for (int y : b) in_b[y] = 1;
    auto adj = g.adjacency();
    std::vector<int> queue;
    for (int x : a) {
        if (!seen[x]) {
            seen[x] = 1;
            queue.push_back(x);
        }
    }
    while (!queue.empty()) {
        int u = queue.back();
        queue.pop_back();
        if (in_b[u]) return true;
        for (auto [v, e] : adj[u]) {
            if (trace[e] != EdgeState::Zero && !seen[v]) {
                seen[v] = 1;
                queue.push_back(v);
            }
        }
    }
    return false;
}

}  // namespace rclb
