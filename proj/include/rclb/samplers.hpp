#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <thread>
#include <vector>

#include "rclb/core.hpp"
#include "rclb/fft_corr.hpp"
#include "rclb/graph.hpp"
#include "rclb/rng.hpp"
#include "rclb/table.hpp"

namespace rclb {

/// beta_c of the square-lattice Ising model, exactly ln(1+sqrt(2))/2.
inline double ising_beta_c_2d() { return 0.5 * std::log(1.0 + std::sqrt(2.0)); }

struct SamplerConfig {
    std::string algorithm = "cluster-flip";  // cluster-flip | single-site | current-trace | phi4-site
    double beta = 0.0;
    double g = 1.0;  // phi4 quartic coupling, rho_{g,a} ~ exp(-g t^4 - a t^2)
    double a = 0.0;
    long thermalization = 100;  // sweeps
    long sweeps = 1000;         // measurement sweeps
    int stride = 1;             // measure every `stride` sweeps
    int batches = 20;
    int chains = 1;
    std::uint64_t seed = 0;
    bool seeded = false;
    long checkpoint_every = 0;  // sweeps; 0 disables in-chain checkpoints

    void validate() const {
        if (!seeded) throw invalid_argument_error("sampler config: seed is mandatory");
        if (sweeps <= 0) throw invalid_argument_error("sampler config: sweeps must be > 0");
        if (stride < 1) throw invalid_argument_error("sampler config: stride must be >= 1");
        if (beta < 0) throw invalid_argument_error("sampler config: beta must be >= 0");
        if (batches < 1) throw invalid_argument_error("sampler config: batches must be >= 1");
        if (chains < 1) throw invalid_argument_error("sampler config: chains must be >= 1");
        if (algorithm == "phi4-site" && g <= 0)
            throw invalid_argument_error("sampler config: phi4 needs g > 0");
    }
};

/// Periodic hypercubic lattice with extent L per axis.
struct TorusGeometry {
    int d;
    int L;
    long nv;
    std::vector<long> stride;  // row major, axis 0 slowest

    TorusGeometry(int d_, int L_) : d(d_), L(L_) {
        if (d < 1 || d > kMaxDim) throw invalid_argument_error("torus dimension out of range");
        if (L < 2) throw invalid_argument_error("torus extent must be >= 2");
        stride.assign(d, 1);
        for (int i = d - 2; i >= 0; --i) stride[i] = stride[i + 1] * L;
        nv = stride[0] * L;
    }

    long neighbor(long v, int axis, int dir) const {
        long s = stride[axis];
        int c = static_cast<int>((v / s) % L);
        if (dir > 0) return c == L - 1 ? v - s * (L - 1) : v + s;
        return c == 0 ? v + s * (L - 1) : v - s;
    }

    std::vector<int> dims() const { return std::vector<int>(static_cast<std::size_t>(d), L); }

    /// Row-major index of a canonical displacement (each |x_i| <= L/2).
    long wrap_index(const Coord& x) const {
        long idx = 0;
        for (int i = 0; i < d; ++i) {
            int c = ((x[i] % L) + L) % L;
            idx = idx * L + c;
        }
        return idx;
    }
};

// ---------------------------------------------------------------------------
// Chains. Each chain owns its spins and its Philox stream and exposes
// sweep() / measurement field / serialize. A "sweep" of the cluster
// algorithm grows clusters until ~nv spins were touched, which keeps its
// decorrelation comparable to one full single-site pass.

class IsingTorusChain {
  public:
    IsingTorusChain(const TorusGeometry& geo, double beta, std::string algorithm,
                    std::uint64_t seed, std::uint64_t chain_id)
        : geo_(geo),
          beta_(beta),
          algorithm_(std::move(algorithm)),
          rng_(seed, "ising-torus", chain_id),
          spins_(geo.nv, 1) {
        p_add_ = 1.0 - std::exp(-2.0 * beta_);
    }

    // A cluster "sweep" is a FIXED number of Wolff clusters (calibrated once,
    // then frozen). Ending a sweep when the flipped-site count crosses a
    // threshold would make the measurement times path-dependent stopping
    // times, which biases the sampled states toward large-cluster
    // configurations.
    void thermalize(long sweeps) {
        if (algorithm_ == "single-site") {
            for (long s = 0; s < sweeps; ++s) sweep();
            return;
        }
        const int calib = 128;
        double flips = 0;
        for (int c = 0; c < calib; ++c) flips += static_cast<double>(wolff_cluster());
        double mean = std::max(1.0, flips / calib);
        clusters_per_sweep_ =
            std::max<long>(1, static_cast<long>(std::llround(static_cast<double>(geo_.nv) / mean)));
        for (long s = 0; s < sweeps; ++s) sweep();
    }

    void sweep() {
        if (algorithm_ == "single-site") {
            metropolis_sweep();
        } else {
            for (long c = 0; c < clusters_per_sweep_; ++c) wolff_cluster();
        }
        ++sweeps_done_;
    }

    long wolff_cluster() {
        long seed_site = static_cast<long>(rng_.uniform_below(static_cast<std::uint64_t>(geo_.nv)));
        signed char old = spins_[seed_site];
        spins_[seed_site] = -old;
        stack_.clear();
        stack_.push_back(seed_site);
        long size = 1;
        while (!stack_.empty()) {
            long u = stack_.back();
            stack_.pop_back();
            for (int axis = 0; axis < geo_.d; ++axis) {
                for (int dir = -1; dir <= 1; dir += 2) {
                    long w = geo_.neighbor(u, axis, dir);
                    if (spins_[w] == old && rng_.uniform() < p_add_) {
                        spins_[w] = -old;
                        stack_.push_back(w);
                        ++size;
                    }
                }
            }
        }
        cluster_accum_ += static_cast<double>(size);
        ++cluster_count_;
        return size;
    }

    void metropolis_sweep() {
        for (long v = 0; v < geo_.nv; ++v) {
            double nb = 0;
            for (int axis = 0; axis < geo_.d; ++axis)
                nb += spins_[geo_.neighbor(v, axis, -1)] + spins_[geo_.neighbor(v, axis, +1)];
            double delta = 2.0 * beta_ * spins_[v] * nb;
            if (delta <= 0.0 || rng_.uniform() < std::exp(-delta)) {
                spins_[v] = -spins_[v];
                accept_accum_ += 1.0;
            }
            proposal_count_ += 1.0;
        }
    }

    void measurement_field(std::vector<double>& out) const {
        out.resize(spins_.size());
        for (std::size_t i = 0; i < spins_.size(); ++i) out[i] = spins_[i];
    }

    double mean_cluster_size() const {
        return cluster_count_ ? cluster_accum_ / cluster_count_ : 0.0;
    }
    double acceptance() const { return proposal_count_ ? accept_accum_ / proposal_count_ : 0.0; }

    void serialize(std::vector<unsigned char>& out) const {
        put_u64(out, rng_.counter());
        put_u32(out, static_cast<std::uint32_t>(rng_.buffered()));
        put_u64(out, static_cast<std::uint64_t>(sweeps_done_));
        put_u64(out, static_cast<std::uint64_t>(clusters_per_sweep_));
        for (signed char s : spins_) out.push_back(static_cast<unsigned char>(s == 1 ? 1 : 0));
    }
    void deserialize(ByteReader& in) {
        std::uint64_t counter = in.u64();
        int buffered = static_cast<int>(in.u32());
        rng_.restore(counter, buffered);
        sweeps_done_ = static_cast<long>(in.u64());
        clusters_per_sweep_ = static_cast<long>(in.u64());
        for (auto& s : spins_) {
            unsigned char b;
            in.raw(&b, 1);
            s = b ? 1 : -1;
        }
    }

    const TorusGeometry& geometry() const { return geo_; }
    long sweeps_done() const { return sweeps_done_; }
    long clusters_per_sweep() const { return clusters_per_sweep_; }

  private:
    TorusGeometry geo_;
    double beta_;
    std::string algorithm_;
    Philox rng_;
    std::vector<signed char> spins_;
    std::vector<long> stack_;
    double p_add_;
    long sweeps_done_ = 0;
    long clusters_per_sweep_ = 1;
    double cluster_accum_ = 0, cluster_count_ = 0;
    double accept_accum_ = 0, proposal_count_ = 0;
};

class Phi4TorusChain {
  public:
    Phi4TorusChain(const TorusGeometry& geo, double beta, double g, double a, std::uint64_t seed,
                   std::uint64_t chain_id)
        : geo_(geo), beta_(beta), g_(g), a_(a), rng_(seed, "phi4-torus", chain_id),
          phi_(geo.nv, 0.0) {
        if (g <= 0) throw invalid_argument_error("phi4 chain: g must be > 0");
    }

    /// Metropolis sweep in site order. The proposal width is tuned by
    /// thermalize() and frozen afterwards.
    void sweep() {
        long accepted = 0;
        for (long v = 0; v < geo_.nv; ++v) {
            double nb = 0;
            for (int axis = 0; axis < geo_.d; ++axis)
                nb += phi_[geo_.neighbor(v, axis, -1)] + phi_[geo_.neighbor(v, axis, +1)];
            double old = phi_[v];
            double prop = old + width_ * (2.0 * rng_.uniform() - 1.0);
            double d_site = g_ * (prop * prop * prop * prop - old * old * old * old) +
                            a_ * (prop * prop - old * old);
            double d_action = d_site - beta_ * (prop - old) * nb;
            if (d_action <= 0.0 || rng_.uniform() < std::exp(-d_action)) {
                phi_[v] = prop;
                ++accepted;
            }
        }
        acc_last_ = static_cast<double>(accepted) / static_cast<double>(geo_.nv);
        accept_accum_ += accepted;
        proposal_count_ += static_cast<double>(geo_.nv);
        ++sweeps_done_;
    }

    /// Tunes the proposal width toward 40-60% acceptance during
    /// thermalization, then freezes it (detailed balance holds after the
    /// freeze).
    void thermalize(long sweeps) {
        for (long s = 0; s < sweeps; ++s) {
            sweep();
            if (acc_last_ > 0.6) width_ *= 1.15;
            else if (acc_last_ < 0.4) width_ /= 1.15;
        }
        frozen_width_ = width_;
    }

    void measurement_field(std::vector<double>& out) const { out = phi_; }
    double acceptance() const { return proposal_count_ ? accept_accum_ / proposal_count_ : 0.0; }
    double width() const { return width_; }

    void serialize(std::vector<unsigned char>& out) const {
        put_u64(out, rng_.counter());
        put_u32(out, static_cast<std::uint32_t>(rng_.buffered()));
        put_u64(out, static_cast<std::uint64_t>(sweeps_done_));
        put_f64(out, width_);
        for (double x : phi_) put_f64(out, x);
    }
    void deserialize(ByteReader& in) {
        rng_.restore(in.u64(), static_cast<int>(in.u32()));
        sweeps_done_ = static_cast<long>(in.u64());
        width_ = in.f64();
        for (auto& x : phi_) x = in.f64();
    }

    const TorusGeometry& geometry() const { return geo_; }

  private:
    TorusGeometry geo_;
    double beta_, g_, a_;
    Philox rng_;
    std::vector<double> phi_;
    double width_ = 1.0, frozen_width_ = 1.0, acc_last_ = 0.5;
    long sweeps_done_ = 0;
    double accept_accum_ = 0, proposal_count_ = 0;
};

/// Ising dynamics on an arbitrary weighted graph (block models, small free
/// boxes, fixtures). Wolff activation per edge uses 1 - exp(-2 beta_e).
class IsingGraphChain {
  public:
    IsingGraphChain(const Graph& g, std::string algorithm, std::uint64_t seed,
                    std::uint64_t chain_id)
        : graph_(g), algorithm_(std::move(algorithm)), rng_(seed, "ising-graph", chain_id),
          spins_(g.nv, 1), adj_(g.adjacency()) {
        for (const auto& e : g.edges) p_add_.push_back(1.0 - std::exp(-2.0 * e.beta));
    }

    // Same fixed-cluster-count sweep scheme as the torus chain (see there).
    void thermalize(long sweeps) {
        if (algorithm_ != "single-site") {
            const int calib = 128;
            double flips = 0;
            for (int c = 0; c < calib; ++c) flips += static_cast<double>(wolff_cluster());
            double mean = std::max(1.0, flips / calib);
            clusters_per_sweep_ = std::max<long>(
                1, static_cast<long>(std::llround(static_cast<double>(graph_.nv) / mean)));
        }
        for (long s = 0; s < sweeps; ++s) sweep();
    }

    void sweep() {
        if (algorithm_ == "single-site") {
            for (int v = 0; v < graph_.nv; ++v) {
                double nb = 0;
                for (auto [w, e] : adj_[v]) nb += graph_.edges[e].beta * spins_[w];
                double delta = 2.0 * spins_[v] * nb;
                if (delta <= 0.0 || rng_.uniform() < std::exp(-delta)) spins_[v] = -spins_[v];
            }
        } else {
            for (long c = 0; c < clusters_per_sweep_; ++c) wolff_cluster();
        }
        ++sweeps_done_;
    }

    int wolff_cluster() {
        int seed_site = static_cast<int>(rng_.uniform_below(graph_.nv));
        signed char old = spins_[seed_site];
        spins_[seed_site] = -old;
        stack_.clear();
        stack_.push_back(seed_site);
        int size = 1;
        while (!stack_.empty()) {
            int u = stack_.back();
            stack_.pop_back();
            for (auto [w, e] : adj_[u]) {
                if (spins_[w] == old && rng_.uniform() < p_add_[e]) {
                    spins_[w] = -old;
                    stack_.push_back(w);
                    ++size;
                }
            }
        }
        return size;
    }

    const std::vector<signed char>& spins() const { return spins_; }
    Philox& rng() { return rng_; }
    const Graph& graph() const { return graph_; }

    void serialize(std::vector<unsigned char>& out) const {
        put_u64(out, rng_.counter());
        put_u32(out, static_cast<std::uint32_t>(rng_.buffered()));
        put_u64(out, static_cast<std::uint64_t>(sweeps_done_));
        put_u64(out, static_cast<std::uint64_t>(clusters_per_sweep_));
        for (signed char s : spins_) out.push_back(static_cast<unsigned char>(s == 1 ? 1 : 0));
    }
    void deserialize(ByteReader& in) {
        rng_.restore(in.u64(), static_cast<int>(in.u32()));
        sweeps_done_ = static_cast<long>(in.u64());
        clusters_per_sweep_ = static_cast<long>(in.u64());
        for (auto& s : spins_) {
            unsigned char b;
            in.raw(&b, 1);
            s = b ? 1 : -1;
        }
    }

  private:
    Graph graph_;
    std::string algorithm_;
    Philox rng_;
    std::vector<signed char> spins_;
    std::vector<std::vector<std::pair<int, int>>> adj_;
    std::vector<double> p_add_;
    std::vector<int> stack_;
    long sweeps_done_ = 0;
    long clusters_per_sweep_ = 1;
};

// ---------------------------------------------------------------------------
// Batched accumulation of correlation fields.

/// Per-batch derived scalars: the hook sees the closed batch's mean field
/// through a displacement lookup and returns named values (chi_n, B_n,
/// theorem-1.1 sums...), which land in the table's batch_series.
using BatchHook =
    std::function<std::map<std::string, double>(const std::function<double(const Coord&)>&)>;

class FieldAccumulator {
  public:
    FieldAccumulator(long n, long meas_per_batch)
        : n_(n),
          meas_per_batch_(meas_per_batch),
          batch_(n, 0.0),
          bsum_(n, 0.0),
          bsq_(n, 0.0),
          closed_(n, 0.0) {}

    double* batch_data() { return batch_.data(); }
    long size() const { return n_; }

    /// Count one measurement already added into batch_data(); closes the
    /// batch when full. `index_of` maps a displacement to a field index
    /// (torus wrap or box position) for the hook's lookups.
    void tick(const std::function<long(const Coord&)>& index_of, const BatchHook& hook,
              std::map<std::string, std::vector<double>>& series) {
        if (++in_batch_ < meas_per_batch_) return;
        double inv = 1.0 / static_cast<double>(in_batch_);
        for (long i = 0; i < n_; ++i) {
            closed_[i] = batch_[i] * inv;
            bsum_[i] += closed_[i];
            bsq_[i] += closed_[i] * closed_[i];
            batch_[i] = 0.0;
        }
        if (hook) {
            auto values = hook([&](const Coord& x) -> double { return closed_[index_of(x)]; });
            for (auto& [name, v] : values) series[name].push_back(v);
        }
        ++batches_done_;
        in_batch_ = 0;
    }

    long batches_done() const { return batches_done_; }
    const std::vector<double>& batch_mean_sum() const { return bsum_; }
    const std::vector<double>& batch_mean_sq() const { return bsq_; }

    void serialize(std::vector<unsigned char>& out) const {
        put_u64(out, static_cast<std::uint64_t>(in_batch_));
        put_u64(out, static_cast<std::uint64_t>(batches_done_));
        for (double x : batch_) put_f64(out, x);
        for (double x : bsum_) put_f64(out, x);
        for (double x : bsq_) put_f64(out, x);
    }
    void deserialize(ByteReader& in) {
        in_batch_ = static_cast<long>(in.u64());
        batches_done_ = static_cast<long>(in.u64());
        for (auto& x : batch_) x = in.f64();
        for (auto& x : bsum_) x = in.f64();
        for (auto& x : bsq_) x = in.f64();
    }

  private:
    long n_;
    long meas_per_batch_;
    long in_batch_ = 0;
    long batches_done_ = 0;
    std::vector<double> batch_, bsum_, bsq_, closed_;
};

/// What one chain hands back: per-entry batch-mean sums (for the table and
/// its variances), the named per-batch scalar series, and diagnostics.
struct ChainResult {
    long field_size = 0;
    std::vector<double> bsum, bsq;
    long batches = 0;
    long measurements = 0;
    std::map<std::string, std::vector<double>> series;
    double mean_cluster = 0.0;   // summed over chains; divide by chain_count
    double acceptance = 0.0;     // summed over chains; divide by chain_count
    int chain_count = 1;
    std::uint64_t rng_counter_end = 0;

    void merge(const ChainResult& o) {
        if (field_size == 0) {
            *this = o;
            return;
        }
        if (o.field_size == 0) return;
        if (o.field_size != field_size)
            throw invalid_argument_error("cannot merge chains with different field sizes");
        for (long i = 0; i < field_size; ++i) {
            bsum[i] += o.bsum[i];
            bsq[i] += o.bsq[i];
        }
        batches += o.batches;
        measurements += o.measurements;
        for (const auto& [name, vals] : o.series) {
            auto& dst = series[name];
            dst.insert(dst.end(), vals.begin(), vals.end());
        }
        mean_cluster += o.mean_cluster;
        acceptance += o.acceptance;
        chain_count += o.chain_count;
    }
};

/// In-chain checkpoint sink: called with the serialized chain+accumulator
/// state after every `checkpoint_every` sweeps.
using CheckpointSink = std::function<void(long sweep, const std::vector<unsigned char>&)>;

namespace detail {

template <class Chain>
ChainResult drive_chain(Chain& chain, const SamplerConfig& cfg, FieldAccumulator& acc,
                        FftCorrelator* corr, const std::function<long(const Coord&)>& index_of,
                        const std::function<const std::vector<double>&()>& field_of,
                        const BatchHook& hook, const CheckpointSink& checkpoint, long start_sweep) {
    long meas_total = cfg.sweeps / cfg.stride;
    long batches = std::min<long>(cfg.batches, std::max<long>(1, meas_total));
    long per_batch = meas_total / batches;
    long run_sweeps = per_batch * batches * cfg.stride;  // drop the ragged tail

    ChainResult out;
    for (long sweep = start_sweep; sweep < run_sweeps; ++sweep) {
        chain.sweep();
        if ((sweep + 1) % cfg.stride == 0) {
            const std::vector<double>& field = field_of();
            if (corr) {
                corr->accumulate(field.data(), acc.batch_data());
            } else {
                double* b = acc.batch_data();
                for (std::size_t i = 0; i < field.size(); ++i) b[i] += field[i];
            }
            acc.tick(index_of, hook, out.series);
        }
        if (checkpoint && cfg.checkpoint_every > 0 && (sweep + 1) % cfg.checkpoint_every == 0 &&
            sweep + 1 < run_sweeps) {
            std::vector<unsigned char> blob;
            put_u64(blob, static_cast<std::uint64_t>(sweep + 1));
            chain.serialize(blob);
            acc.serialize(blob);
            checkpoint(sweep + 1, blob);
        }
    }
    out.field_size = acc.size();
    out.bsum = acc.batch_mean_sum();
    out.bsq = acc.batch_mean_sq();
    out.batches = acc.batches_done();
    out.measurements = acc.batches_done() * per_batch;
    return out;
}

}  // namespace detail

/// One Ising chain on a torus: translation-averaged two-point estimation via
/// the FFT correlator. Satisfies detailed balance for the stated Boltzmann
/// weight (Wolff or Metropolis); estimates carry batch-mean errors.
inline ChainResult run_ising_torus_chain(const SamplerConfig& cfg, const TorusGeometry& geo,
                                         std::uint64_t chain_id, const BatchHook& hook = {},
                                         const CheckpointSink& checkpoint = {},
                                         const std::vector<unsigned char>* resume = nullptr) {
    cfg.validate();
    IsingTorusChain chain(geo, cfg.beta, cfg.algorithm, cfg.seed, chain_id);
    long meas_total = cfg.sweeps / cfg.stride;
    long batches = std::min<long>(cfg.batches, std::max<long>(1, meas_total));
    FieldAccumulator acc(geo.nv, std::max<long>(1, meas_total / batches));
    FftCorrelator corr(geo.dims());
    long start_sweep = 0;
    if (resume) {
        ByteReader in(resume->data(), resume->size());
        start_sweep = static_cast<long>(in.u64());
        chain.deserialize(in);
        acc.deserialize(in);
    } else {
        chain.thermalize(cfg.thermalization);
    }
    std::vector<double> field;
    auto result = detail::drive_chain(
        chain, cfg, acc, &corr, [&](const Coord& x) { return geo.wrap_index(x); },
        [&]() -> const std::vector<double>& {
            chain.measurement_field(field);
            return field;
        },
        hook, checkpoint, start_sweep);
    result.mean_cluster = chain.mean_cluster_size();
    result.acceptance = chain.acceptance();
    return result;
}

inline ChainResult run_phi4_torus_chain(const SamplerConfig& cfg, const TorusGeometry& geo,
                                        std::uint64_t chain_id, const BatchHook& hook = {},
                                        const CheckpointSink& checkpoint = {},
                                        const std::vector<unsigned char>* resume = nullptr) {
    cfg.validate();
    if (cfg.g <= 0) throw invalid_argument_error("phi4 chain: g must be > 0");
    Phi4TorusChain chain(geo, cfg.beta, cfg.g, cfg.a, cfg.seed, chain_id);
    long meas_total = cfg.sweeps / cfg.stride;
    long batches = std::min<long>(cfg.batches, std::max<long>(1, meas_total));
    FieldAccumulator acc(geo.nv, std::max<long>(1, meas_total / batches));
    FftCorrelator corr(geo.dims());
    long start_sweep = 0;
    if (resume) {
        ByteReader in(resume->data(), resume->size());
        start_sweep = static_cast<long>(in.u64());
        chain.deserialize(in);
        acc.deserialize(in);
    } else {
        chain.thermalize(cfg.thermalization);
    }
    std::vector<double> field;
    auto result = detail::drive_chain(
        chain, cfg, acc, &corr, [&](const Coord& x) { return geo.wrap_index(x); },
        [&]() -> const std::vector<double>& {
            chain.measurement_field(field);
            return field;
        },
        hook, checkpoint, start_sweep);
    result.acceptance = chain.acceptance();
    return result;
}

/// Free-boundary chain on a centered box; measures sigma_0 sigma_x from the
/// center (no translation averaging), field indexed by box vertex.
inline ChainResult run_ising_box_chain(const SamplerConfig& cfg, const Box& box,
                                       std::uint64_t chain_id, const BatchHook& hook = {}) {
    cfg.validate();
    auto region = LatticeRegion::box(box, cfg.beta);
    IsingGraphChain chain(region.graph, cfg.algorithm, cfg.seed, chain_id);
    chain.thermalize(cfg.thermalization);
    long meas_total = cfg.sweeps / cfg.stride;
    long batches = std::min<long>(cfg.batches, std::max<long>(1, meas_total));
    FieldAccumulator acc(box.vertex_count(), std::max<long>(1, meas_total / batches));
    int center = region.vertex(box.offset());
    std::vector<int> region_of(box.vertex_count());
    for (long v = 0; v < box.vertex_count(); ++v) region_of[v] = region.vertex(box.coord(v));
    std::vector<double> field(box.vertex_count());
    auto result = detail::drive_chain(
        chain, cfg, acc, nullptr,
        [&](const Coord& x) {
            Coord p = x;
            for (int i = 0; i < box.dim(); ++i) p[i] += box.offset()[i];
            return box.index(p);
        },
        [&]() -> const std::vector<double>& {
            const auto& s = chain.spins();
            double sc = s[center];
            for (long v = 0; v < box.vertex_count(); ++v) field[v] = sc * s[region_of[v]];
            return field;
        },
        hook, {}, 0);
    return result;
}

/// Fan chains over a worker pool and merge in chain order. Bit-identical
/// results for any `threads`.
template <class RunOne>
ChainResult run_chains(int chains, int threads, RunOne&& run_one) {
    struct Slot {
        ChainResult r;
        void merge(const Slot& o) { r.merge(o.r); }
    };
    auto merged = run_strata<Slot>(chains, threads,
                                   [&](int id, Slot& slot) { slot.r = run_one(id); });
    return merged.r;
}

/// Assemble a displacement table from merged torus chains.
inline TwoPointTable table_from_torus(const TorusGeometry& geo, const ChainResult& merged,
                                      int max_range, TableProvenance prov) {
    if (max_range > geo.L / 2 - 1)
        throw invalid_argument_error("table range must be < L/2 to keep displacements unique");
    TwoPointTable t = TwoPointTable::cubic(geo.d, max_range);
    long b = merged.batches;
    if (b < 1) throw invalid_argument_error("no closed batches; increase sweeps or lower batches");
    for (std::size_t i = 0; i < t.size(); ++i) {
        Coord x = t.coord(i);
        long idx = geo.wrap_index(x);
        double mean = merged.bsum[idx] / b;
        double var = 0.0;
        if (b > 1) {
            double s2 = (merged.bsq[idx] - b * mean * mean) / (b - 1);
            var = std::max(0.0, s2 / b);
        }
        t.values()[i] = mean;
        t.variances()[i] = var;
        t.counts()[i] = static_cast<double>(merged.measurements);
    }
    t.batch_series = merged.series;
    prov.boundary = "periodic";
    t.provenance = std::move(prov);
    return t;
}

/// Assemble a displacement table from free-boundary center-correlation chains.
inline TwoPointTable table_from_box(const Box& box, const ChainResult& merged,
                                    TableProvenance prov) {
    TwoPointTable t = TwoPointTable::cubic(box.dim(), box.radius());
    long b = merged.batches;
    if (b < 1) throw invalid_argument_error("no closed batches; increase sweeps or lower batches");
    for (std::size_t i = 0; i < t.size(); ++i) {
        Coord x = t.coord(i);
        Coord p = x;
        for (int a = 0; a < box.dim(); ++a) p[a] += box.offset()[a];
        long idx = box.index(p);
        double mean = merged.bsum[idx] / b;
        double var = 0.0;
        if (b > 1) {
            double s2 = (merged.bsq[idx] - b * mean * mean) / (b - 1);
            var = std::max(0.0, s2 / b);
        }
        t.values()[i] = mean;
        t.variances()[i] = var;
        t.counts()[i] = static_cast<double>(merged.measurements);
    }
    t.batch_series = merged.series;
    prov.boundary = "free";
    t.provenance = std::move(prov);
    return t;
}

}  // namespace rclb
