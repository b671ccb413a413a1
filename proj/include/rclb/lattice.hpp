#pragma once

#include <array>
#include <cstdlib>
#include <string>
#include <vector>

#include "rclb/core.hpp"

namespace rclb {

inline constexpr int kMaxDim = 5;

/// Lattice point. Components at indices >= d are kept zero.
using Coord = std::array<int, kMaxDim>;

inline Coord coord_of(std::initializer_list<int> xs) {
    Coord c{};
    int i = 0;
    for (int x : xs) c[i++] = x;
    return c;
}

inline int norm_l1(const Coord& x, int d) {
    int s = 0;
    for (int i = 0; i < d; ++i) s += std::abs(x[i]);
    return s;
}

inline int norm_linf(const Coord& x, int d) {
    int s = 0;
    for (int i = 0; i < d; ++i) s = std::max(s, std::abs(x[i]));
    return s;
}

inline bool is_zero(const Coord& x, int d) {
    for (int i = 0; i < d; ++i)
        if (x[i] != 0) return false;
    return true;
}

inline std::string coord_str(const Coord& x, int d) {
    std::string s = "(";
    for (int i = 0; i < d; ++i) {
        if (i) s += ",";
        s += std::to_string(x[i]);
    }
    return s + ")";
}

/// Lattice hyperplane {x : sign * x[axis] = level}. The paper's H_n(+e_i) is
/// (axis=i, sign=+1, level=n) and H_n(-e_i) is (axis=i, sign=-1, level=n).
struct Hyperplane {
    int axis = 0;  // 0-based
    int sign = +1;
    int level = 0;

    /// Signed distance from the plane: 0 on it, <0 on the inner (minus) side,
    /// >0 on the outer (plus) side.
    int side(const Coord& x) const { return sign * x[axis] - level; }
    bool contains(const Coord& x) const { return side(x) == 0; }
};

/// Orthogonal reflection through h; an involution on Z^d.
inline Coord reflect(Coord x, const Hyperplane& h) {
    x[h.axis] = 2 * h.sign * h.level - x[h.axis];
    return x;
}

/// Box [-radius, radius]^d + offset with free boundary, row-major vertex
/// indexing (axis 0 slowest) and edges indexed as (vertex, +axis) pairs.
class Box {
  public:
    Box(int d, int radius, Coord offset = {}) : d_(d), radius_(radius), offset_(offset) {
        if (d < 1 || d > kMaxDim) throw invalid_argument_error("box dimension must be in [1,5]");
        if (radius < 0) throw invalid_argument_error("box radius must be >= 0");
        side_ = 2 * radius + 1;
        nv_ = 1;
        for (int i = 0; i < d_; ++i) nv_ *= side_;
    }

    int dim() const { return d_; }
    int radius() const { return radius_; }
    int side() const { return side_; }
    long vertex_count() const { return nv_; }
    const Coord& offset() const { return offset_; }

    bool contains(const Coord& x) const {
        for (int i = 0; i < d_; ++i)
            if (std::abs(x[i] - offset_[i]) > radius_) return false;
        return true;
    }

    long index(const Coord& x) const {
        long idx = 0;
        for (int i = 0; i < d_; ++i) idx = idx * side_ + (x[i] - offset_[i] + radius_);
        return idx;
    }

    Coord coord(long idx) const {
        Coord x{};
        for (int i = d_ - 1; i >= 0; --i) {
            x[i] = static_cast<int>(idx % side_) - radius_ + offset_[i];
            idx /= side_;
        }
        return x;
    }

    // Edge e = (v, axis) is the bond {v, v + e_axis}; id = v * d + axis.
    long edge_slots() const { return nv_ * d_; }
    bool edge_valid(long edge) const {
        Coord u = coord(edge / d_);
        int axis = static_cast<int>(edge % d_);
        return u[axis] - offset_[axis] < radius_;
    }
    long edge_count() const {
        long n = 0;
        for (int i = 0; i < d_; ++i) n += (nv_ / side_) * (side_ - 1);
        return n;
    }
    std::pair<Coord, Coord> edge_endpoints(long edge) const {
        Coord u = coord(edge / d_);
        Coord v = u;
        v[edge % d_] += 1;
        return {u, v};
    }
    long edge_id(const Coord& u, int axis) const { return index(u) * d_ + axis; }

    template <class F>
    void for_each_edge(F&& f) const {
        for (long e = 0; e < edge_slots(); ++e)
            if (edge_valid(e)) f(e);
    }

  private:
    int d_;
    int radius_;
    Coord offset_;
    int side_;
    long nv_;
};

/// The three-way split of a box's edges relative to a hyperplane: an endpoint
/// strictly on the minus side / strictly on the plus side / both on the plane.
struct EdgePartition {
    std::vector<long> minus, plus, zero;
};

inline EdgePartition partition_edges(const Box& box, const Hyperplane& h) {
    // Nearest-neighbour endpoints differ by at most 1 along h.axis, so the
    // minus/plus membership below is exclusive.
    bool intersects = false;
    EdgePartition part;
    box.for_each_edge([&](long e) {
        auto [u, v] = box.edge_endpoints(e);
        int su = h.side(u), sv = h.side(v);
        if (su == 0 || sv == 0) intersects = true;
        if (su < 0 || sv < 0)
            part.minus.push_back(e);
        else if (su > 0 || sv > 0)
            part.plus.push_back(e);
        else
            part.zero.push_back(e);
    });
    if (!intersects) throw invalid_argument_error("hyperplane does not intersect the box");
    return part;
}

/// Comparison points of the MMS sandwich for x != 0:
/// <tau_0 tau_{|x|_1 e_1}>  <=  <tau_0 tau_x>  <=  <tau_0 tau_{|x|_inf e_1}>.
/// Returns (low, high) = (|x|_1 e_1, |x|_inf e_1).
inline std::pair<Coord, Coord> mms_rearrangement(const Coord& x, int d) {
    if (is_zero(x, d)) throw invalid_argument_error("mms_rearrangement: x must be nonzero");
    Coord low{}, high{};
    low[0] = norm_l1(x, d);
    high[0] = norm_linf(x, d);
    return {low, high};
}

}  // namespace rclb
