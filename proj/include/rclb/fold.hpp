#pragma once

#include <span>
#include <vector>

#include "rclb/connectivity.hpp"
#include "rclb/current.hpp"
#include "rclb/lattice.hpp"

namespace rclb {

/// Trace multigraph M_n = N_- union R_n(N_+) of a box trace, folded onto the
/// closed inner half-space of a hyperplane. Only edge presence is kept: all
/// events of interest are connectivity events. E_0 edges never appear.
struct FoldedGraph {
    const Box* box = nullptr;
    Hyperplane h;
    std::vector<std::pair<long, long>> edges;  // occupied folded edges, by box vertex id

    bool connected(std::span<const long> a, std::span<const long> b) const {
        for (long x : a)
            for (long y : b)
                if (x == y) return true;
        Dsu dsu(static_cast<std::size_t>(box->vertex_count()));
        for (auto [u, v] : edges) dsu.unite(static_cast<int>(u), static_cast<int>(v));
        for (long x : a)
            for (long y : b)
                if (dsu.same(static_cast<int>(x), static_cast<int>(y))) return true;
        return false;
    }
};

/// Folds a box trace through h. The box (with its offset) must contain the
/// reflection of every occupied plus-side edge; for a centered box and a
/// hyperplane with 0 <= level <= radius this always holds, for offset boxes
/// it is the symmetry requirement.
inline FoldedGraph fold(const Box& box, const TraceConfig& trace, const Hyperplane& h) {
    if (static_cast<long>(trace.size()) != box.edge_slots())
        throw invalid_argument_error("fold: trace does not match box edge set");
    FoldedGraph out;
    out.box = &box;
    out.h = h;
    for (long e = 0; e < box.edge_slots(); ++e) {
        if (trace[e] == EdgeState::Zero || !box.edge_valid(e)) continue;
        auto [u, v] = box.edge_endpoints(e);
        int su = h.side(u), sv = h.side(v);
        if (su < 0 || sv < 0) {
            out.edges.push_back({box.index(u), box.index(v)});
        } else if (su > 0 || sv > 0) {
            Coord ru = reflect(u, h), rv = reflect(v, h);
            if (!box.contains(ru) || !box.contains(rv))
                throw invalid_argument_error("fold: box is not symmetric enough for this hyperplane");
            out.edges.push_back({box.index(ru), box.index(rv)});
        }
        // su == sv == 0: edge lies in the hyperplane (E_0), dropped.
    }
    return out;
}

namespace detail {

/// Presence of folded edge {u, u+e_axis} (both endpoints on the closed inner
/// side of h) without materializing the folded graph.
inline bool folded_edge_present(const Box& box, const TraceConfig& trace, const Hyperplane& h,
                                const Coord& u, int axis) {
    Coord v = u;
    v[axis] += 1;
    if (!box.contains(v) || !box.contains(u)) return false;
    int su = h.side(u), sv = h.side(v);
    if (su > 0 || sv > 0) return false;  // not in the folded domain
    if (su < 0 || sv < 0) {
        if (trace[box.edge_id(u, axis)] != EdgeState::Zero) return true;
    }
    // Mirror edge. Reflection reverses orientation along h.axis only.
    Coord ru = reflect(u, h), rv = reflect(v, h);
    int mu = h.side(ru), mv = h.side(rv);
    if (mu > 0 || mv > 0) {
        Coord lo = ru;
        if (rv[axis] < ru[axis]) lo = rv;
        if (box.contains(lo)) {
            long e = box.edge_id(lo, axis);
            if (box.edge_valid(e) && trace[e] != EdgeState::Zero) return true;
        }
    }
    return false;
}

}  // namespace detail

/// BFS in the folded multigraph from `start`; true iff it reaches the
/// hyperplane. Adjacency is generated on the fly, so the cost is the size of
/// the component of `start`.
inline bool folded_reaches_hyperplane(const Box& box, const TraceConfig& trace, const Hyperplane& h,
                                      const Coord& start) {
    if (h.side(start) > 0) throw invalid_argument_error("start vertex is outside the folded domain");
    if (h.side(start) == 0) return true;
    std::vector<char> seen(static_cast<std::size_t>(box.vertex_count()), 0);
    std::vector<Coord> stack{start};
    seen[box.index(start)] = 1;
    while (!stack.empty()) {
        Coord u = stack.back();
        stack.pop_back();
        for (int axis = 0; axis < box.dim(); ++axis) {
            for (int dir = -1; dir <= 1; dir += 2) {
                Coord w = u;
                w[axis] += dir;
                if (!box.contains(w)) continue;
                const Coord& lo = dir > 0 ? u : w;
                if (!detail::folded_edge_present(box, trace, h, lo, axis)) continue;
                if (h.side(w) == 0) return true;
                long wi = box.index(w);
                if (!seen[wi]) {
                    seen[wi] = 1;
                    stack.push_back(w);
                }
            }
        }
    }
    return false;
}

/// S_n for one direction: vertices of Lambda_n not connected to the
/// hyperplane in the folded multigraph. `trace` lives on the full box.
inline std::vector<long> s_n_one_direction(const Box& box, const TraceConfig& trace,
                                           const Hyperplane& h) {
    // Multi-source BFS from the hyperplane over on-the-fly folded adjacency.
    std::vector<char> reached(static_cast<std::size_t>(box.vertex_count()), 0);
    std::vector<Coord> stack;
    for (long v = 0; v < box.vertex_count(); ++v) {
        Coord x = box.coord(v);
        if (h.side(x) == 0) {
            reached[v] = 1;
            stack.push_back(x);
        }
    }
    while (!stack.empty()) {
        Coord u = stack.back();
        stack.pop_back();
        for (int axis = 0; axis < box.dim(); ++axis) {
            for (int dir = -1; dir <= 1; dir += 2) {
                Coord w = u;
                w[axis] += dir;
                if (!box.contains(w) || h.side(w) > 0) continue;
                const Coord& lo = dir > 0 ? u : w;
                if (!detail::folded_edge_present(box, trace, h, lo, axis)) continue;
                long wi = box.index(w);
                if (!reached[wi]) {
                    reached[wi] = 1;
                    stack.push_back(w);
                }
            }
        }
    }
    std::vector<long> out;
    int n = h.level;
    for (long v = 0; v < box.vertex_count(); ++v) {
        if (norm_linf(box.coord(v), box.dim()) <= n && !reached[v]) out.push_back(v);
    }
    return out;
}

/// S_n = intersection over all 2d directions of S_n(+-e_i), one folded graph
/// per direction, all built from the same underlying trace. Requires a
/// centered box with radius >= n >= 1. Always a subset of Lambda_{n-1}.
inline std::vector<long> compute_S_n(const Box& box, std::span<const TraceConfig> traces, int n) {
    if (n < 1) throw invalid_argument_error("compute_S_n: n must be >= 1");
    if (box.radius() < n) throw invalid_argument_error("compute_S_n: box radius must be >= n");
    if (!is_zero(box.offset(), box.dim()))
        throw invalid_argument_error("compute_S_n: box must be centered at the origin");
    if (traces.size() != static_cast<std::size_t>(2 * box.dim()))
        throw invalid_argument_error("compute_S_n: need one trace per direction (2d of them)");
    for (const auto& t : traces)
        if (static_cast<long>(t.size()) != box.edge_slots())
            throw invalid_argument_error("compute_S_n: mismatched boxes");

    std::vector<char> keep(static_cast<std::size_t>(box.vertex_count()), 0);
    for (long v : s_n_one_direction(box, traces[0], Hyperplane{0, +1, n})) keep[v] = 1;
    int k = 1;
    for (int axis = 0; axis < box.dim(); ++axis) {
        for (int sign = +1; sign >= -1; sign -= 2) {
            if (axis == 0 && sign == +1) continue;
            std::vector<char> next(static_cast<std::size_t>(box.vertex_count()), 0);
            for (long v : s_n_one_direction(box, traces[k], Hyperplane{axis, sign, n}))
                if (keep[v]) next[v] = 1;
            keep.swap(next);
            ++k;
        }
    }
    std::vector<long> out;
    for (long v = 0; v < box.vertex_count(); ++v)
        if (keep[v]) out.push_back(v);
    return out;
}

/// Single-trace convenience: all 2d folds of one trace.
inline std::vector<long> compute_S_n(const Box& box, const TraceConfig& trace, int n) {
    std::vector<TraceConfig> traces(static_cast<std::size_t>(2 * box.dim()), trace);
    return compute_S_n(box, std::span<const TraceConfig>(traces), n);
}

/// Membership of a single vertex in S_n, with early-exit BFS per direction.
inline bool in_S_n(const Box& box, const TraceConfig& trace, int n, const Coord& x) {
    if (n < 1 || box.radius() < n) throw invalid_argument_error("in_S_n: need 1 <= n <= radius");
    if (norm_linf(x, box.dim()) > n) return false;
    for (int axis = 0; axis < box.dim(); ++axis) {
        for (int sign = +1; sign >= -1; sign -= 2) {
            Hyperplane h{axis, sign, n};
            if (folded_reaches_hyperplane(box, trace, h, x)) return false;
        }
    }
    return true;
}

}  // namespace rclb
