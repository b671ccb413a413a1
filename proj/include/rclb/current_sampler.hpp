#pragma once

#include <optional>
#include <vector>

#include "rclb/exact.hpp"
#include "rclb/fold.hpp"
#include "rclb/samplers.hpp"

namespace rclb {

/// Samples the trace of the random-current measure P^A on a graph through
/// the chain
///   spins -> Edwards-Sokal bond activation -> uniform even subgraph of the
///   active edges -> independent even-overlay sprinkling,
/// which gives the exact trace law: the odd part carries the tanh-weight
/// parity measure and each remaining edge is EvenPositive independently with
/// probability (cosh beta - 1)/cosh beta.
class CurrentTraceSampler {
  public:
    explicit CurrentTraceSampler(const Graph& g) : g_(g), adj_(g.adjacency()) {
        for (const auto& e : g.edges) {
            p_activate_.push_back(1.0 - std::exp(-2.0 * e.beta));
            double ch = std::cosh(e.beta);
            p_sprinkle_.push_back((ch - 1.0) / ch);
        }
        active_.resize(g.ne());
        odd_.resize(g.ne());
        mark_.resize(g.nv);
        parent_edge_.resize(g.nv);
        parent_.resize(g.nv);
        order_.reserve(g.nv);
        comp_.resize(g.nv);
    }

    /// Sourceless trace given an Ising configuration.
    TraceConfig sample(const std::vector<signed char>& spins, Philox& rng) {
        activate(spins, rng);
        build_forest();
        std::fill(mark_.begin(), mark_.end(), 0);
        choose_nontree(rng);
        complete_tree();
        return sprinkle(rng);
    }

    /// Trace with sources {u, v}: valid only when u and v are connected in
    /// the active graph (equivalently, conditioned on the FK connection
    /// event); returns nullopt otherwise so the caller can resample.
    std::optional<TraceConfig> try_sample_sourced(const std::vector<signed char>& spins,
                                                  Philox& rng, int u, int v) {
        activate(spins, rng);
        build_forest();
        if (comp_[u] != comp_[v]) return std::nullopt;
        std::fill(mark_.begin(), mark_.end(), 0);
        mark_[u] ^= 1;
        mark_[v] ^= 1;
        choose_nontree(rng);
        complete_tree();
        return sprinkle(rng);
    }

    /// Uniform even subgraph of a fixed edge set (all edges active); exposed
    /// for the cycle-space uniformity tests.
    std::vector<char> uniform_even_subgraph(Philox& rng) {
        std::fill(active_.begin(), active_.end(), 1);
        build_forest();
        std::fill(mark_.begin(), mark_.end(), 0);
        choose_nontree(rng);
        complete_tree();
        return odd_;
    }

    const Graph& graph() const { return g_; }

  private:
    void activate(const std::vector<signed char>& spins, Philox& rng) {
        for (int e = 0; e < g_.ne(); ++e) {
            const auto& ed = g_.edges[e];
            active_[e] =
                spins[ed.u] == spins[ed.v] && rng.uniform() < p_activate_[e] ? 1 : 0;
        }
    }

    /// Spanning forest of the active graph, deterministic DFS order.
    void build_forest() {
        std::fill(parent_edge_.begin(), parent_edge_.end(), -1);
        std::fill(parent_.begin(), parent_.end(), -1);
        std::fill(comp_.begin(), comp_.end(), -1);
        order_.clear();
        for (int root = 0; root < g_.nv; ++root) {
            if (comp_[root] >= 0) continue;
            comp_[root] = root;
            stack_.clear();
            stack_.push_back(root);
            while (!stack_.empty()) {
                int x = stack_.back();
                stack_.pop_back();
                order_.push_back(x);
                for (auto [w, e] : adj_[x]) {
                    if (!active_[e] || comp_[w] >= 0) continue;
                    comp_[w] = root;
                    parent_[w] = x;
                    parent_edge_[w] = e;
                    stack_.push_back(w);
                }
            }
        }
    }

    void choose_nontree(Philox& rng) {
        std::fill(odd_.begin(), odd_.end(), 0);
        for (int e = 0; e < g_.ne(); ++e) {
            if (!active_[e]) continue;
            int u = g_.edges[e].u, v = g_.edges[e].v;
            bool tree = parent_edge_[u] == e || parent_edge_[v] == e;
            if (tree) continue;
            if (rng.bernoulli(0.5)) {
                odd_[e] = 1;
                mark_[u] ^= 1;
                mark_[v] ^= 1;
            }
        }
    }

    /// Unique forest completion: tree edge (child -> parent) is odd iff the
    /// mark parity of the child's subtree is odd. Walk vertices in reverse
    /// DFS order, pushing each subtree parity up to the parent.
    void complete_tree() {
        for (auto it = order_.rbegin(); it != order_.rend(); ++it) {
            int x = *it;
            if (parent_[x] < 0) continue;  // component root
            if (mark_[x]) {
                odd_[parent_edge_[x]] = 1;
                mark_[parent_[x]] ^= 1;
            }
        }
    }

    TraceConfig sprinkle(Philox& rng) {
        TraceConfig t(g_.ne(), EdgeState::Zero);
        for (int e = 0; e < g_.ne(); ++e) {
            if (odd_[e]) t[e] = EdgeState::Odd;
            else if (rng.uniform() < p_sprinkle_[e]) t[e] = EdgeState::EvenPositive;
        }
        return t;
    }

    Graph g_;
    std::vector<std::vector<std::pair<int, int>>> adj_;
    std::vector<double> p_activate_, p_sprinkle_;
    std::vector<char> active_, odd_;
    std::vector<char> mark_;
    std::vector<int> parent_edge_, parent_, comp_, order_, stack_;
};

/// Markov chain of current traces: spin updates between draws, bond and
/// parity resampling per draw. Sources may be empty or a pair {u, v}; the
/// sourced variant rejects until the pair is FK-connected (probability
/// <sigma_u sigma_v>), so it needs realizable sources.
class TraceChain {
  public:
    TraceChain(const Graph& g, const SamplerConfig& cfg, std::uint64_t chain_id,
               std::vector<int> sources = {})
        : spin_chain_(g, "cluster-flip", cfg.seed, chain_id),
          sampler_(g),
          stride_(cfg.stride),
          sources_(std::move(sources)) {
        cfg.validate();
        if (!(sources_.empty() || sources_.size() == 2))
            throw invalid_argument_error("trace chain: sources must be empty or a pair");
        if (sources_.size() == 2) {
            std::array<int, 2> pair{sources_[0], sources_[1]};
            if (spin_sum_correlation_guard(g, pair) <= 0.0)
                throw invalid_argument_error("trace chain: unrealizable sources (no path)");
        }
        spin_chain_.thermalize(cfg.thermalization);
    }

    TraceConfig next() {
        for (;;) {
            for (int s = 0; s < stride_; ++s) spin_chain_.sweep();
            if (sources_.empty()) return sampler_.sample(spin_chain_.spins(), spin_chain_.rng());
            auto t = sampler_.try_sample_sourced(spin_chain_.spins(), spin_chain_.rng(),
                                                 sources_[0], sources_[1]);
            if (t) return std::move(*t);
        }
    }

    const Graph& graph() const { return spin_chain_.graph(); }

  private:
    // Realizability = graph connectivity between the sources; avoids the
    // 2^V spin sum on large graphs.
    static double spin_sum_correlation_guard(const Graph& g, std::array<int, 2> pair) {
        TraceConfig all(g.ne(), EdgeState::Odd);
        std::array<int, 1> a{pair[0]}, b{pair[1]};
        return connected(g, all, a, b) ? 1.0 : 0.0;
    }

    IsingGraphChain spin_chain_;
    CurrentTraceSampler sampler_;
    int stride_;
    std::vector<int> sources_;
};

// ---------------------------------------------------------------------------
// S_n probability estimation.

struct SnEstimate {
    double p = 0.0;           // P^0[0 in S_n]
    double sigma = 0.0;
    double p_out_e1 = 0.0;    // P^0[0 notin S_n(+e_1)]
    double sigma_out_e1 = 0.0;
    long batches = 0;
    long samples = 0;
    std::vector<double> batch_p;  // per-batch means of the indicator
};

/// Monte Carlo estimate of P^0[0 in S_n] on a free-boundary centered box via
/// the current-trace sampler. The finite box stands in for the infinite-
/// volume measure; the paper's proof wants Lambda containing Lambda_{4n},
/// hence the radius >= 4n precondition.
inline SnEstimate estimate_S_n_probability(const SamplerConfig& cfg, const Box& box, int n,
                                           int threads = 1) {
    cfg.validate();
    if (n < 1) throw invalid_argument_error("estimate_S_n_probability: n must be >= 1");
    if (box.radius() < 4 * n)
        throw invalid_argument_error("estimate_S_n_probability: box radius must be >= 4n");
    if (!is_zero(box.offset(), box.dim()))
        throw invalid_argument_error("estimate_S_n_probability: box must be centered");

    auto region = LatticeRegion::box(box, cfg.beta);
    // Map region edges onto box edge slots once.
    std::vector<long> slot_of(region.graph.ne());
    for (int e = 0; e < region.graph.ne(); ++e) {
        const auto& ed = region.graph.edges[e];
        Coord a = region.points[ed.u], b = region.points[ed.v];
        int axis = 0;
        for (int i = 0; i < box.dim(); ++i)
            if (a[i] != b[i]) axis = i;
        const Coord& lo = a[axis] < b[axis] ? a : b;
        slot_of[e] = box.edge_id(lo, axis);
    }

    struct Acc {
        std::vector<double> bp, bp1;  // per-batch means
        void merge(const Acc& o) {
            bp.insert(bp.end(), o.bp.begin(), o.bp.end());
            bp1.insert(bp1.end(), o.bp1.begin(), o.bp1.end());
        }
    };

    long meas_total = cfg.sweeps / cfg.stride;
    long batches = std::min<long>(cfg.batches, std::max<long>(1, meas_total));
    long per_batch = std::max<long>(1, meas_total / batches);

    auto acc = run_strata<Acc>(cfg.chains, threads, [&](int chain_id, Acc& a) {
        TraceChain chain(region.graph, cfg, static_cast<std::uint64_t>(chain_id));
        TraceConfig box_trace(box.edge_slots(), EdgeState::Zero);
        Coord origin{};
        Hyperplane e1{0, +1, n};
        for (long b = 0; b < batches; ++b) {
            double hits = 0, out1 = 0;
            for (long m = 0; m < per_batch; ++m) {
                TraceConfig t = chain.next();
                std::fill(box_trace.begin(), box_trace.end(), EdgeState::Zero);
                for (int e = 0; e < region.graph.ne(); ++e) box_trace[slot_of[e]] = t[e];
                if (in_S_n(box, box_trace, n, origin)) hits += 1.0;
                if (folded_reaches_hyperplane(box, box_trace, e1, origin)) out1 += 1.0;
            }
            a.bp.push_back(hits / per_batch);
            a.bp1.push_back(out1 / per_batch);
        }
    });

    auto mean_sigma = [](const std::vector<double>& xs) -> std::pair<double, double> {
        double m = 0;
        for (double x : xs) m += x;
        m /= xs.size();
        if (xs.size() < 2) return {m, 0.0};
        double s2 = 0;
        for (double x : xs) s2 += (x - m) * (x - m);
        s2 /= (xs.size() - 1);
        return {m, std::sqrt(s2 / xs.size())};
    };
    SnEstimate out;
    auto [p, sig] = mean_sigma(acc.bp);
    auto [p1, sig1] = mean_sigma(acc.bp1);
    out.p = p;
    out.sigma = sig;
    out.p_out_e1 = p1;
    out.sigma_out_e1 = sig1;
    out.batches = static_cast<long>(acc.bp.size());
    out.samples = static_cast<long>(acc.bp.size()) * per_batch;
    out.batch_p = acc.bp;
    return out;
}

}  // namespace rclb
