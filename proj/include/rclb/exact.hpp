#pragma once

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <mutex>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "rclb/connectivity.hpp"
#include "rclb/current.hpp"
#include "rclb/fold.hpp"
#include "rclb/graph.hpp"

namespace rclb {

// Enumeration budgets, chosen so a worst-case run stays under a minute on
// one core.
inline constexpr int kSpinSumMaxVertices = 20;
inline constexpr int kParitySumMaxEdges = 24;
inline constexpr int kTraceEnumMaxEdges = 16;

struct ExactResult {
    double value = 0.0;
    std::string method;
    std::string fingerprint;
};

inline std::string graph_fingerprint(const Graph& g) {
    std::uint64_t h = 1469598103934665603ull;
    auto mix = [&h](std::uint64_t v) {
        h ^= v;
        h *= 1099511628211ull;
    };
    mix(static_cast<std::uint64_t>(g.nv));
    for (const auto& e : g.edges) {
        mix(static_cast<std::uint64_t>(e.u));
        mix(static_cast<std::uint64_t>(e.v));
        std::uint64_t bits;
        __builtin_memcpy(&bits, &e.beta, 8);
        mix(bits);
    }
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

inline std::uint32_t vertex_mask(const Graph& g, std::span<const int> vs) {
    if (g.nv > 32) throw budget_error("vertex masks need nv <= 32");
    std::uint32_t m = 0;
    for (int v : vs) {
        if (v < 0 || v >= g.nv) throw invalid_argument_error("vertex out of range");
        m ^= 1u << v;
    }
    return m;
}

/// <sigma_A> by full spin-sum enumeration (2^nv configurations, compensated
/// accumulation). A must have even cardinality; the odd case vanishes by
/// symmetry and is rejected to surface caller bugs.
inline double spin_sum_correlation(const Graph& g, std::span<const int> a) {
    if (g.nv > kSpinSumMaxVertices) throw budget_error("spin sum limited to 20 vertices");
    if (a.size() % 2 != 0) throw invalid_argument_error("spin_sum_correlation: |A| must be even");
    std::uint32_t amask = vertex_mask(g, a);
    KahanSum num, den;
    std::uint32_t nconf = 1u << g.nv;
    for (std::uint32_t conf = 0; conf < nconf; ++conf) {
        double energy = 0.0;
        for (const auto& e : g.edges) {
            bool aligned = (((conf >> e.u) ^ (conf >> e.v)) & 1u) == 0;
            energy += aligned ? e.beta : -e.beta;
        }
        double w = std::exp(energy);
        den.add(w);
        num.add(__builtin_popcount(conf & amask) % 2 == 0 ? w : -w);
    }
    return num.value() / den.value();
}

namespace detail {

inline void parity_sum_rec(const Graph& g, int e, std::uint32_t parity, double prod,
                           std::uint32_t target, KahanSum& acc) {
    if (e == g.ne()) {
        if (parity == target) acc.add(prod);
        return;
    }
    const auto& ed = g.edges[e];
    parity_sum_rec(g, e + 1, parity, prod, target, acc);
    double t = std::tanh(ed.beta);
    if (t != 0.0)
        parity_sum_rec(g, e + 1, parity ^ (1u << ed.u) ^ (1u << ed.v), prod * t, target, acc);
}

}  // namespace detail

/// Z^A via the parity (high-temperature) expansion:
/// Z^A = prod_e cosh(beta_e) * sum_{w subset E, dw = A} prod_{e in w} tanh(beta_e).
inline ExactResult parity_sum_Z(const Graph& g, std::span<const int> a) {
    if (g.ne() > kParitySumMaxEdges) throw budget_error("parity sum limited to 24 edges");
    if (a.size() % 2 != 0) throw invalid_argument_error("parity_sum_Z: |A| must be even");
    std::uint32_t amask = vertex_mask(g, a);
    KahanSum acc;
    detail::parity_sum_rec(g, 0, 0, 1.0, amask, acc);
    double pref = 1.0;
    for (const auto& e : g.edges) pref *= std::cosh(e.beta);
    return {pref * acc.value(), "parity-sum", graph_fingerprint(g)};
}

/// Z^A / Z^emptyset, the parity-expansion route to <sigma_A>.
inline double parity_sum_ratio(const Graph& g, std::span<const int> a) {
    double za = parity_sum_Z(g, a).value;
    double z0 = parity_sum_Z(g, std::span<const int>()).value;
    return za / z0;
}

// ---------------------------------------------------------------------------
// Three-state trace enumeration.
//
// Integrating the current weight over each edge's parity class leaves, per
// edge, weight 1 for "no edge", cosh(beta)-1 for "even positive" and
// sinh(beta) for "odd", with the source constraint on the odd part. Every
// event in scope is measurable with respect to this trace, so sums over
// currents reduce to sums over 3^E states. Values returned by these engines
// are "Z-tilde" = Z / prod_e cosh(beta_e); all exposed quantities are ratios
// or equalities, for which the prefactor cancels (multiply by cosh_prefactor
// when an absolute Z is wanted).

inline double cosh_prefactor(const Graph& g) {
    double p = 1.0;
    for (const auto& e : g.edges) p *= std::cosh(e.beta);
    return p;
}

namespace detail {

struct EdgeWeights {
    double even_pos;  // cosh(beta) - 1
    double odd;       // sinh(beta)
    std::uint32_t parity_flip;
};

inline std::vector<EdgeWeights> trace_edge_weights(const Graph& g) {
    std::vector<EdgeWeights> w(g.ne());
    for (int e = 0; e < g.ne(); ++e) {
        const auto& ed = g.edges[e];
        w[e] = {std::cosh(ed.beta) - 1.0, std::sinh(ed.beta), (1u << ed.u) ^ (1u << ed.v)};
    }
    return w;
}

template <class Leaf>
void trace_enum_rec(const std::vector<EdgeWeights>& w, int e, TraceConfig& st, std::uint32_t parity,
                    double prod, Leaf& leaf) {
    if (e == static_cast<int>(w.size())) {
        leaf(st, parity, prod);
        return;
    }
    st[e] = EdgeState::Zero;
    trace_enum_rec(w, e + 1, st, parity, prod, leaf);
    if (w[e].even_pos != 0.0) {
        st[e] = EdgeState::EvenPositive;
        trace_enum_rec(w, e + 1, st, parity, prod * w[e].even_pos, leaf);
    }
    if (w[e].odd != 0.0) {
        st[e] = EdgeState::Odd;
        trace_enum_rec(w, e + 1, st, parity ^ w[e].parity_flip, prod * w[e].odd, leaf);
    }
    st[e] = EdgeState::Zero;
}

}  // namespace detail

/// Exhaustive walk over all 3^E trace states.
/// Leaf signature: void(Acc&, const TraceConfig&, uint32_t parity, double weight).
/// Acc needs a default constructor and merge(const Acc&).
template <class Acc, class Leaf>
Acc enumerate_traces(const Graph& g, Leaf leaf, int threads = 1) {
    if (g.ne() > kTraceEnumMaxEdges) throw budget_error("trace enumeration limited to 16 edges");
    if (g.nv > 32) throw budget_error("trace enumeration limited to 32 vertices");
    auto w = detail::trace_edge_weights(g);
    int k = std::min<int>(3, g.ne());
    int nstrata = 1;
    for (int i = 0; i < k; ++i) nstrata *= 3;
    return run_strata<Acc>(nstrata, threads, [&](int s, Acc& acc) {
        TraceConfig st(g.ne(), EdgeState::Zero);
        std::uint32_t parity = 0;
        double prod = 1.0;
        int code = s;
        for (int e = 0; e < k; ++e) {
            int digit = code % 3;
            code /= 3;
            if (digit == 1) {
                if (w[e].even_pos == 0.0) return;
                st[e] = EdgeState::EvenPositive;
                prod *= w[e].even_pos;
            } else if (digit == 2) {
                if (w[e].odd == 0.0) return;
                st[e] = EdgeState::Odd;
                prod *= w[e].odd;
                parity ^= w[e].parity_flip;
            }
        }
        auto leaf_bound = [&acc, &leaf](const TraceConfig& t, std::uint32_t p, double wt) {
            leaf(acc, t, p, wt);
        };
        detail::trace_enum_rec(w, k, st, parity, prod, leaf_bound);
    });
}

struct EventSums {
    KahanSum event;
    KahanSum total;
    void merge(const EventSums& o) {
        event.merge(o.event);
        total.merge(o.total);
    }
};

/// (Z-tilde^A[event], Z-tilde^A) for an event given as a predicate on the
/// trace.
template <class Event>
std::pair<double, double> trace_event_sums(const Graph& g, std::span<const int> a, Event&& ev,
                                           int threads = 1) {
    std::uint32_t amask = vertex_mask(g, a);
    auto sums = enumerate_traces<EventSums>(
        g,
        [&](EventSums& acc, const TraceConfig& t, std::uint32_t parity, double wt) {
            if (parity != amask) return;
            acc.total.add(wt);
            if (ev(t)) acc.event.add(wt);
        },
        threads);
    return {sums.event.value(), sums.total.value()};
}

/// P^A[event] = Z^A[event] / Z^A by three-state enumeration.
template <class Event>
double trace_event_probability(const Graph& g, std::span<const int> a, Event&& ev,
                               int threads = 1) {
    auto [num, den] = trace_event_sums(g, a, std::forward<Event>(ev), threads);
    if (den <= 0.0)
        throw invalid_argument_error("trace_event_probability: Z^A = 0 (sources not pairable)");
    return num / den;
}

// ---------------------------------------------------------------------------
// Folded enumeration: same walk, but maintaining a rollback union-find of the
// folded multigraph M_n so that "x is connected to H_n in M_n" is an O(alpha)
// query at each leaf. All hyperplane vertices are pre-merged into one
// supernode; this is sound because every folded event in scope only ever asks
// about connectivity *to the hyperplane*, never between two off-plane
// vertices.

struct FoldPlan {
    int n_nodes = 0;   // folded universe incl. supernode
    int supernode = 0;  // all hyperplane vertices
    std::vector<std::array<int, 2>> edge_nodes;  // per graph edge; {-1,-1} for E_0
    std::vector<int> vertex_node;                // region vertex -> folded node (inner side only)
};

/// Fold plan from per-vertex sides (-1 inner / 0 on-plane / +1 outer) and a
/// reflection involution. Vertices keep their ids, plane vertices collapse
/// onto the supernode.
inline FoldPlan make_fold_plan_generic(const Graph& g, const std::vector<int>& side,
                                       const std::vector<int>& rmap) {
    FoldPlan plan;
    plan.n_nodes = g.nv + 1;
    plan.supernode = g.nv;
    plan.vertex_node.assign(g.nv, -1);
    for (int v = 0; v < g.nv; ++v) {
        if (side[v] == 0) plan.vertex_node[v] = plan.supernode;
        else if (side[v] < 0) plan.vertex_node[v] = v;
        else plan.vertex_node[v] = -1;  // plus side: only reachable through folding
    }
    auto node_of = [&](int v) { return side[v] == 0 ? plan.supernode : v; };
    plan.edge_nodes.assign(g.ne(), {-1, -1});
    for (int e = 0; e < g.ne(); ++e) {
        int u = g.edges[e].u, v = g.edges[e].v;
        if (side[u] == 0 && side[v] == 0) continue;  // E_0, never in M_n
        if (side[u] < 0 || side[v] < 0) {
            plan.edge_nodes[e] = {node_of(u), node_of(v)};
        } else {
            plan.edge_nodes[e] = {node_of(rmap[u]), node_of(rmap[v])};
        }
    }
    return plan;
}

inline FoldPlan make_fold_plan(const LatticeRegion& region, const Hyperplane& h) {
    std::vector<int> side(region.graph.nv);
    for (int v = 0; v < region.graph.nv; ++v) {
        int s = h.side(region.points[v]);
        side[v] = s < 0 ? -1 : (s > 0 ? +1 : 0);
    }
    return make_fold_plan_generic(region.graph, side, region.reflection_map(h));
}

/// Leaf signature: void(Acc&, uint32_t parity, double weight, const RollbackDsu&).
template <class Acc, class Leaf>
Acc enumerate_traces_folded(const Graph& g, const FoldPlan& plan, Leaf leaf, int threads = 1) {
    if (g.ne() > kTraceEnumMaxEdges) throw budget_error("trace enumeration limited to 16 edges");
    auto w = detail::trace_edge_weights(g);
    int k = std::min<int>(3, g.ne());
    int nstrata = 1;
    for (int i = 0; i < k; ++i) nstrata *= 3;

    return run_strata<Acc>(nstrata, threads, [&](int s, Acc& acc) {
        RollbackDsu dsu(plan.n_nodes);
        auto unite_edge = [&](int e) {
            if (plan.edge_nodes[e][0] >= 0) dsu.unite(plan.edge_nodes[e][0], plan.edge_nodes[e][1]);
        };
        // Decode the stratum prefix.
        std::uint32_t parity = 0;
        double prod = 1.0;
        int code = s;
        for (int e = 0; e < k; ++e) {
            int digit = code % 3;
            code /= 3;
            if (digit == 1) {
                if (w[e].even_pos == 0.0) return;
                prod *= w[e].even_pos;
                unite_edge(e);
            } else if (digit == 2) {
                if (w[e].odd == 0.0) return;
                prod *= w[e].odd;
                parity ^= w[e].parity_flip;
                unite_edge(e);
            }
        }
        // Depth-first over the remaining edges with DSU rollback.
        auto rec = [&](auto&& self, int e, std::uint32_t par, double pr) -> void {
            if (e == g.ne()) {
                leaf(acc, par, pr, dsu);
                return;
            }
            self(self, e + 1, par, pr);
            if (w[e].even_pos != 0.0) {
                int tok = dsu.trail_size();
                unite_edge(e);
                self(self, e + 1, par, pr * w[e].even_pos);
                dsu.rollback_to(tok);
            }
            if (w[e].odd != 0.0) {
                int tok = dsu.trail_size();
                unite_edge(e);
                self(self, e + 1, par ^ w[e].parity_flip, pr * w[e].odd);
                dsu.rollback_to(tok);
            }
        };
        rec(rec, k, parity, prod);
    });
}

/// One parity class to accumulate during a folded enumeration, optionally
/// restricted to states where some listed node touches the hyperplane
/// supernode in M_n.
struct ParityBucket {
    std::uint32_t mask = 0;
    std::vector<int> any_connected;  // folded node ids; empty = no event
};

/// Z-tilde sums for many (parity class, connectivity event) pairs in a single
/// three-state walk.
inline std::vector<double> folded_bucket_sums(const Graph& g, const FoldPlan& plan,
                                              const std::vector<ParityBucket>& buckets,
                                              int threads = 1) {
    std::map<std::uint32_t, std::vector<int>> by_mask;
    for (std::size_t b = 0; b < buckets.size(); ++b) by_mask[buckets[b].mask].push_back(static_cast<int>(b));

    struct Acc {
        std::vector<KahanSum> sums;
        void merge(const Acc& o) {
            if (sums.empty()) sums.resize(o.sums.size());
            for (std::size_t i = 0; i < o.sums.size(); ++i) sums[i].merge(o.sums[i]);
        }
    };
    auto acc = enumerate_traces_folded<Acc>(
        g, plan,
        [&](Acc& a, std::uint32_t parity, double wt, const RollbackDsu& dsu) {
            auto it = by_mask.find(parity);
            if (it == by_mask.end()) return;
            if (a.sums.empty()) a.sums.resize(buckets.size());
            for (int b : it->second) {
                const auto& spec = buckets[b];
                if (spec.any_connected.empty()) {
                    a.sums[b].add(wt);
                    continue;
                }
                for (int node : spec.any_connected) {
                    if (node == plan.supernode || dsu.same(node, plan.supernode)) {
                        a.sums[b].add(wt);
                        break;
                    }
                }
            }
        },
        threads);
    std::vector<double> out(buckets.size(), 0.0);
    for (std::size_t i = 0; i < acc.sums.size(); ++i) out[i] = acc.sums[i].value();
    return out;
}


// ---------------------------------------------------------------------------
// Switching verifiers.

/// Lemma "switching principle" check, at copy level: M's edge copies are
/// distinguishable, N ranges over copy subsets, K is a fixed copy subset and
/// N Delta K is the copy-set symmetric difference. f sees multiplicity
/// vectors. Returns both sides of
///   sum_{N subset M, dN = A} f(N)  =  sum_{N subset M, dN = A Delta dK} f(N Delta K).
struct SwitchingSides {
    double lhs = 0.0, rhs = 0.0;
    bool equal(double tol = 0.0) const {
        return tol == 0.0 ? lhs == rhs : std::abs(lhs - rhs) <= tol * std::max(1.0, std::abs(lhs));
    }
};

inline SwitchingSides verify_switching(const Graph& g, const Multigraph& m,
                                       std::span<const int> a, const Multigraph& k,
                                       const std::function<double(const Multigraph&)>& f) {
    if (m.size() != static_cast<std::size_t>(g.ne()) || k.size() != m.size())
        throw invalid_argument_error("verify_switching: mismatched edge sets");
    int total = 0;
    for (std::size_t e = 0; e < m.size(); ++e) {
        if (k[e] > m[e]) throw invalid_argument_error("verify_switching: K must be a sub-multigraph of M");
        total += m[e];
    }
    if (total > 14) throw budget_error("verify_switching: total multiplicity limited to 14");

    // Copy list: copy i belongs to edge copy_edge[i]; K occupies the first
    // k[e] copies of each edge (any fixed choice gives the same sums).
    std::vector<int> copy_edge;
    std::uint32_t kmask = 0;
    for (int e = 0; e < g.ne(); ++e) {
        for (int c = 0; c < m[e]; ++c) {
            if (c < k[e]) kmask |= 1u << copy_edge.size();
            copy_edge.push_back(e);
        }
    }
    std::uint32_t amask = vertex_mask(g, a);
    std::uint32_t dk = 0;
    for (std::size_t i = 0; i < copy_edge.size(); ++i)
        if (kmask & (1u << i)) dk ^= (1u << g.edges[copy_edge[i]].u) ^ (1u << g.edges[copy_edge[i]].v);
    std::uint32_t amask2 = amask ^ dk;

    Multigraph scratch(g.ne());
    auto mult_of = [&](std::uint32_t mask) -> const Multigraph& {
        std::fill(scratch.begin(), scratch.end(), 0);
        for (std::size_t i = 0; i < copy_edge.size(); ++i)
            if (mask & (1u << i)) ++scratch[copy_edge[i]];
        return scratch;
    };
    KahanSum lhs, rhs;
    std::uint32_t nmask = 1u << copy_edge.size();
    for (std::uint32_t nm = 0; nm < nmask; ++nm) {
        std::uint32_t parity = 0;
        for (std::size_t i = 0; i < copy_edge.size(); ++i)
            if (nm & (1u << i)) parity ^= (1u << g.edges[copy_edge[i]].u) ^ (1u << g.edges[copy_edge[i]].v);
        if (parity == amask) lhs.add(f(mult_of(nm)));
        if (parity == amask2) rhs.add(f(mult_of(nm ^ kmask)));
    }
    return {lhs.value(), rhs.value()};
}

/// Lemma "switching principle for reflected currents": on a symmetric region,
/// for A and x strictly on the minus side of h,
///   Z^A[x <-> H_n in M_n] = Z^{A Delta {x, R(x)}}[x <-> H_n in M_n].
/// Both sides are separate parity classes of one three-state enumeration.
struct ReflectedSwitchingResult {
    double lhs = 0.0, rhs = 0.0;
    bool ok(double tol = 1e-10) const {
        double scale = std::max({std::abs(lhs), std::abs(rhs), 1e-300});
        return std::abs(lhs - rhs) <= tol * scale;
    }
};

inline ReflectedSwitchingResult verify_reflected_switching(const LatticeRegion& region,
                                                           const Hyperplane& h,
                                                           std::span<const int> a, int x,
                                                           int threads = 1) {
    const Graph& g = region.graph;
    if (h.side(region.points[x]) >= 0)
        throw invalid_argument_error("verify_reflected_switching: x must be strictly on the minus side");
    for (int v : a)
        if (h.side(region.points[v]) >= 0)
            throw invalid_argument_error("verify_reflected_switching: A must be strictly on the minus side");
    auto plan = make_fold_plan(region, h);
    auto rmap = region.reflection_map(h);
    std::uint32_t amask = vertex_mask(g, a);
    std::uint32_t amask2 = amask ^ (1u << x) ^ (1u << rmap[x]);

    struct Acc {
        KahanSum lhs, rhs;
        void merge(const Acc& o) {
            lhs.merge(o.lhs);
            rhs.merge(o.rhs);
        }
    };
    int xnode = plan.vertex_node[x];
    int super = plan.supernode;
    auto acc = enumerate_traces_folded<Acc>(
        g, plan,
        [&](Acc& s, std::uint32_t parity, double wt, const RollbackDsu& dsu) {
            if (parity != amask && parity != amask2) return;
            if (!dsu.same(xnode, super)) return;
            if (parity == amask) s.lhs.add(wt);
            else s.rhs.add(wt);
        },
        threads);
    return {acc.lhs.value(), acc.rhs.value()};
}

// ---------------------------------------------------------------------------
// Finite-volume analogue of the key expectation inequality (the pre-limit
// display in the proof of the main theorem): on a symmetric region, with
// S1 = S_n(+e) cap Lambda_{n-1},
//   E^0[ 1_{0 in S1} sum_{x in S1, y~x, y in Lambda_n} 1_{y <-> H in M_n}
//        <sigma_0 sigma_x>_{S1} ]
//   <= sum_{x,y in Lambda_n, y~x} (<s_0 s_x> - <s_0 s_{R(x)}>) <s_y s_{R(y)}>,
// with all correlations taken on the region itself.

struct InequalitySides {
    double lhs = 0.0, rhs = 0.0;
    bool ok() const { return lhs <= rhs * (1.0 + 1e-9) + 1e-12; }
};

namespace detail {

/// Correlations <sigma_0 sigma_x>_S on induced spin subgraphs, cached by
/// vertex-subset mask.
class SubsetCorrelationCache {
  public:
    SubsetCorrelationCache(const Graph& g, int origin) : g_(g), origin_(origin) {}

    const std::vector<double>& table(std::uint32_t smask) {
        auto it = cache_.find(smask);
        if (it != cache_.end()) return it->second;
        std::vector<int> verts;
        for (int v = 0; v < g_.nv; ++v)
            if (smask & (1u << v)) verts.push_back(v);
        std::vector<int> local(g_.nv, -1);
        for (std::size_t i = 0; i < verts.size(); ++i) local[verts[i]] = static_cast<int>(i);
        Graph sub;
        sub.nv = static_cast<int>(verts.size());
        for (const auto& e : g_.edges)
            if (local[e.u] >= 0 && local[e.v] >= 0) sub.add_edge(local[e.u], local[e.v], e.beta);
        std::vector<double> tab(g_.nv, 0.0);
        int o = local[origin_];
        for (int v = 0; v < g_.nv; ++v) {
            if (local[v] < 0) continue;
            if (v == origin_) {
                tab[v] = 1.0;
                continue;
            }
            std::array<int, 2> pair{o, local[v]};
            tab[v] = spin_sum_correlation(sub, pair);
        }
        return cache_.emplace(smask, std::move(tab)).first->second;
    }

  private:
    const Graph& g_;
    int origin_;
    std::map<std::uint32_t, std::vector<double>> cache_;
};

}  // namespace detail

inline InequalitySides verify_lemma25(const LatticeRegion& region, const Hyperplane& h,
                                      int threads = 1) {
    const Graph& g = region.graph;
    int n = h.level;
    if (n < 1) throw invalid_argument_error("verify_lemma25: hyperplane level must be >= 1");
    int origin = region.vertex(Coord{});
    if (h.side(region.points[origin]) >= 0)
        throw invalid_argument_error("verify_lemma25: origin must be strictly on the minus side");
    auto plan = make_fold_plan(region, h);
    auto rmap = region.reflection_map(h);
    auto adj = g.adjacency();

    // Vertices of Lambda_{n-1} (candidates for S1) and Lambda_n in the region.
    std::vector<int> inner = region.ball_vertices(n - 1);
    std::vector<char> in_ln(g.nv, 0);
    for (int v : region.ball_vertices(n)) in_ln[v] = 1;

    struct Acc {
        KahanSum numer, z0;
        void merge(const Acc& o) {
            numer.merge(o.numer);
            z0.merge(o.z0);
        }
        detail::SubsetCorrelationCache* cache = nullptr;
    };

    // Per-stratum caches keep the enumeration thread-safe; values are pure
    // functions so the split cannot change results.
    std::deque<detail::SubsetCorrelationCache> caches;
    std::mutex cache_mu;

    auto acc = enumerate_traces_folded<Acc>(
        g, plan,
        [&](Acc& s, std::uint32_t parity, double wt, const RollbackDsu& dsu) {
            if (parity != 0) return;
            s.z0.add(wt);
            if (!s.cache) {
                std::lock_guard<std::mutex> lk(cache_mu);
                caches.emplace_back(g, origin);
                s.cache = &caches.back();
            }
            int super = plan.supernode;
            // S1 = Lambda_{n-1} vertices not connected to H in M_n.
            std::uint32_t smask = 0;
            for (int v : inner) {
                int node = plan.vertex_node[v];
                if (node < 0) continue;  // plus side cannot be in S1
                if (node == super) continue;
                if (!dsu.same(node, super)) smask |= 1u << v;
            }
            if (!(smask & (1u << origin))) return;
            const auto& tab = s.cache->table(smask);
            double contrib = 0.0;
            for (int x = 0; x < g.nv; ++x) {
                if (!(smask & (1u << x))) continue;
                for (auto [y, e] : adj[x]) {
                    if (!in_ln[y]) continue;
                    int ynode = plan.vertex_node[y];
                    bool y_hits_h = ynode == super || (ynode >= 0 && dsu.same(ynode, super));
                    if (y_hits_h) contrib += tab[x];
                }
            }
            if (contrib != 0.0) s.numer.add(wt * contrib);
        },
        threads);

    double lhs = acc.numer.value() / acc.z0.value();

    KahanSum rhs;
    std::vector<int> ln = region.ball_vertices(n);
    for (int x : ln) {
        std::array<int, 2> p0x{origin, x};
        double t0x = x == origin ? 1.0 : spin_sum_correlation(g, p0x);
        std::array<int, 2> p0rx{origin, rmap[x]};
        double t0rx = rmap[x] == origin ? 1.0 : spin_sum_correlation(g, p0rx);
        for (auto [y, e] : adj[x]) {
            if (!in_ln[y]) continue;
            std::array<int, 2> pyr{y, rmap[y]};
            double tyr = rmap[y] == y ? 1.0 : spin_sum_correlation(g, pyr);
            rhs.add((t0x - t0rx) * tyr);
        }
    }
    return {lhs, rhs.value()};
}

/// Exact P^0[0 in S_n] and the per-direction probabilities on a small
/// centered box, by three-state enumeration over the box edge set. Used as
/// the oracle for the Monte Carlo S_n estimator.
struct SnProbabilities {
    double p_in_sn = 0.0;          // P[0 in S_n]
    double p_out_plus_e1 = 0.0;    // P[0 notin S_n(+e_1)]
    double p_out_union = 0.0;      // P[0 notin S_n]
};

inline SnProbabilities exact_sn_probability(const Box& box, double beta, int n, int threads = 1) {
    if (!is_zero(box.offset(), box.dim()))
        throw invalid_argument_error("exact_sn_probability: box must be centered");
    std::vector<long> valid;
    box.for_each_edge([&](long e) { valid.push_back(e); });
    if (valid.size() > kTraceEnumMaxEdges) throw budget_error("exact_sn_probability: too many edges");
    if (box.vertex_count() > 32) throw budget_error("exact_sn_probability: too many vertices");

    // Reuse the graph-based enumeration over the box edge list.
    Graph g;
    g.nv = static_cast<int>(box.vertex_count());
    for (long e : valid) {
        auto [u, v] = box.edge_endpoints(e);
        g.add_edge(static_cast<int>(box.index(u)), static_cast<int>(box.index(v)), beta);
    }
    Coord origin{};
    struct Acc {
        KahanSum z0, in_sn, out1, out_any;
        void merge(const Acc& o) {
            z0.merge(o.z0);
            in_sn.merge(o.in_sn);
            out1.merge(o.out1);
            out_any.merge(o.out_any);
        }
    };
    auto acc = enumerate_traces<Acc>(
        g,
        [&](Acc& s, const TraceConfig& t, std::uint32_t parity, double wt) {
            if (parity != 0) return;
            s.z0.add(wt);
            TraceConfig box_trace(box.edge_slots(), EdgeState::Zero);
            for (std::size_t i = 0; i < valid.size(); ++i) box_trace[valid[i]] = t[i];
            bool in = in_S_n(box, box_trace, n, origin);
            if (in) s.in_sn.add(wt);
            else s.out_any.add(wt);
            if (folded_reaches_hyperplane(box, box_trace, Hyperplane{0, +1, n}, origin))
                s.out1.add(wt);
        },
        threads);
    double z = acc.z0.value();
    return {acc.in_sn.value() / z, acc.out1.value() / z, acc.out_any.value() / z};
}

}  // namespace rclb
