#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "rclb/graph.hpp"

namespace rclb {

/// Integer-valued current: one nonnegative value per edge of the owning
/// graph (or per edge slot of the owning box).
using Current = std::vector<int>;

/// Multigraph = edge multiplicities. Same storage, different role: currents
/// carry weights, multigraphs are what the switching principle shuffles.
using Multigraph = std::vector<int>;

/// Per-edge sufficient statistic of a current: every connectivity or parity
/// event of interest is a function of this.
enum class EdgeState : std::uint8_t { Zero = 0, EvenPositive = 1, Odd = 2 };

using TraceConfig = std::vector<EdgeState>;

inline TraceConfig trace_of(const Current& c) {
    TraceConfig t(c.size());
    for (std::size_t e = 0; e < c.size(); ++e)
        t[e] = c[e] == 0 ? EdgeState::Zero : (c[e] % 2 ? EdgeState::Odd : EdgeState::EvenPositive);
    return t;
}

/// Sources: vertices with odd total incident current. Always even in number.
inline std::vector<int> sources(const Graph& g, const Current& c) {
    std::vector<int> deg(g.nv, 0);
    for (int e = 0; e < g.ne(); ++e) {
        deg[g.edges[e].u] += c[e];
        deg[g.edges[e].v] += c[e];
    }
    std::vector<int> out;
    for (int v = 0; v < g.nv; ++v)
        if (deg[v] % 2) out.push_back(v);
    return out;
}

/// log w_beta(n) = sum_e (n_e log beta_e - log n_e!). Exact to ~1e-15
/// relative per edge; safe for currents whose plain weight under/overflows.
inline double log_weight(const Graph& g, const Current& c) {
    double s = 0.0;
    for (int e = 0; e < g.ne(); ++e) {
        if (c[e] == 0) continue;
        s += c[e] * std::log(g.edges[e].beta) - std::lgamma(static_cast<double>(c[e]) + 1.0);
    }
    return s;
}

/// w_beta(n) = prod_e beta_e^{n_e} / n_e!.
inline double weight(const Graph& g, const Current& c) {
    double w = 1.0;
    for (int e = 0; e < g.ne(); ++e) {
        for (int k = 1; k <= c[e]; ++k) w *= g.edges[e].beta / k;
    }
    return w;
}

/// Symmetric difference with chosen-copies-toggle semantics: per-edge
/// multiplicity |m_e - k_e|. Satisfies d(N Delta K) = dN Delta dK and is an
/// involution in K.
inline Multigraph symm_diff(const Multigraph& n, const Multigraph& k) {
    if (n.size() != k.size()) throw invalid_argument_error("symm_diff: mismatched edge sets");
    Multigraph out(n.size());
    for (std::size_t e = 0; e < n.size(); ++e) out[e] = std::abs(n[e] - k[e]);
    return out;
}

}  // namespace rclb
