#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <vector>

#include "rclb/lattice.hpp"

namespace rclb {

/// Finite weighted graph with per-edge ferromagnetic couplings. This is the
/// common substrate of the exact engines, the fixture files, the block
/// models, and the general-graph samplers.
struct Graph {
    struct Edge {
        int u, v;
        double beta;
    };

    int nv = 0;
    std::vector<Edge> edges;

    int add_edge(int u, int v, double beta) {
        if (u < 0 || v < 0 || u >= nv || v >= nv) throw invalid_argument_error("edge endpoint out of range");
        if (u == v) throw invalid_argument_error("self-loops are not allowed");
        if (beta < 0) throw invalid_argument_error("couplings must be nonnegative");
        edges.push_back({u, v, beta});
        return static_cast<int>(edges.size()) - 1;
    }

    int ne() const { return static_cast<int>(edges.size()); }

    std::vector<std::vector<std::pair<int, int>>> adjacency() const {
        std::vector<std::vector<std::pair<int, int>>> adj(nv);
        for (int e = 0; e < ne(); ++e) {
            adj[edges[e].u].push_back({edges[e].v, e});
            adj[edges[e].v].push_back({edges[e].u, e});
        }
        return adj;
    }
};

/// A finite set of lattice points with its nearest-neighbour edges. Boxes,
/// strips and masked cubes all come through here; the exact engines only see
/// the flat Graph plus the coordinate metadata.
struct LatticeRegion {
    int d = 0;
    std::vector<Coord> points;  // vertex id -> coordinate
    Graph graph;
    std::map<Coord, int> index;

    static LatticeRegion from_points(int d, std::vector<Coord> pts, double beta) {
        LatticeRegion r;
        r.d = d;
        std::sort(pts.begin(), pts.end());
        pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
        r.points = std::move(pts);
        r.graph.nv = static_cast<int>(r.points.size());
        for (int i = 0; i < r.graph.nv; ++i) r.index[r.points[i]] = i;
        for (int i = 0; i < r.graph.nv; ++i) {
            for (int axis = 0; axis < d; ++axis) {
                Coord q = r.points[i];
                q[axis] += 1;
                auto it = r.index.find(q);
                if (it != r.index.end()) r.graph.add_edge(i, it->second, beta);
            }
        }
        return r;
    }

    /// Axis-aligned rectangle [lo, hi] (inclusive), e.g. strips.
    static LatticeRegion rect(int d, const Coord& lo, const Coord& hi, double beta) {
        std::vector<Coord> pts;
        Coord x = lo;
        for (;;) {
            pts.push_back(x);
            int axis = d - 1;
            while (axis >= 0) {
                if (++x[axis] <= hi[axis]) break;
                x[axis] = lo[axis];
                --axis;
            }
            if (axis < 0) break;
        }
        return from_points(d, std::move(pts), beta);
    }

    static LatticeRegion box(const Box& b, double beta) {
        Coord lo{}, hi{};
        for (int i = 0; i < b.dim(); ++i) {
            lo[i] = b.offset()[i] - b.radius();
            hi[i] = b.offset()[i] + b.radius();
        }
        return rect(b.dim(), lo, hi, beta);
    }

    int vertex(const Coord& x) const {
        auto it = index.find(x);
        if (it == index.end()) throw invalid_argument_error("vertex " + coord_str(x, d) + " not in region");
        return it->second;
    }

    std::optional<int> try_vertex(const Coord& x) const {
        auto it = index.find(x);
        if (it == index.end()) return std::nullopt;
        return it->second;
    }

    std::vector<int> hyperplane_vertices(const Hyperplane& h) const {
        std::vector<int> out;
        for (int i = 0; i < graph.nv; ++i)
            if (h.contains(points[i])) out.push_back(i);
        return out;
    }

    /// Vertices of this region inside the centered box Lambda_n.
    std::vector<int> ball_vertices(int n) const {
        std::vector<int> out;
        for (int i = 0; i < graph.nv; ++i)
            if (norm_linf(points[i], d) <= n) out.push_back(i);
        return out;
    }

    bool symmetric_under(const Hyperplane& h) const {
        for (const auto& p : points)
            if (!index.count(reflect(p, h))) return false;
        return true;
    }

    /// Vertex involution induced by reflecting through h. Throws if the
    /// region is not symmetric.
    std::vector<int> reflection_map(const Hyperplane& h) const {
        std::vector<int> map(graph.nv);
        for (int i = 0; i < graph.nv; ++i) {
            auto j = try_vertex(reflect(points[i], h));
            if (!j) throw invalid_argument_error("region is not symmetric under the hyperplane");
            map[i] = *j;
        }
        return map;
    }
};

}  // namespace rclb
