// Acceptance suite: one binary, one pass/fail line per criterion, covering
// oracle equivalence, switching exactness, sampler-vs-enumeration agreement,
// the d = 2 exponent calibration, the d = 3 reflected lower-bound scan,
// structural table checks, bubble growth, and artifact determinism.

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "rclb/current_sampler.hpp"
#include "rclb/exact.hpp"
#include "rclb/fixtures.hpp"
#include "rclb/runner.hpp"

using namespace rclb;
namespace fs = std::filesystem;

namespace {

int g_threads = 2;
int g_failures = 0;

void report(int id, bool ok, const std::string& what) {
    std::printf("%s  [%2d] %s\n", ok ? "PASS" : "FAIL", id, what.c_str());
    std::fflush(stdout);
    if (!ok) ++g_failures;
}

fs::path source_dir() { return fs::path(RCLB_SOURCE_DIR); }

fs::path work_dir() {
    auto p = fs::temp_directory_path() / "rclb_acceptance";
    fs::create_directories(p);
    return p;
}

std::vector<Fixture> shipped_symmetric() {
    return load_fixture_file(source_dir() / "fixtures" / "symmetric_strips.rcfix");
}
std::vector<Fixture> shipped_gs() {
    return load_fixture_file(source_dir() / "fixtures" / "gs_blocks.rcfix");
}
std::vector<Fixture> shipped_elementary() {
    return load_fixture_file(source_dir() / "fixtures" / "elementary.rcfix");
}

const std::vector<double> kBetaGrid{0.05, 0.1, 0.2, 0.4, 0.6, 0.8};

std::map<std::string, std::string> file_hashes(const fs::path& dir) {
    std::map<std::string, std::string> out;
    for (auto it = fs::recursive_directory_iterator(dir);
         it != fs::recursive_directory_iterator(); ++it)
        if (it->is_regular_file())
            out[fs::relative(it->path(), dir).generic_string()] = sha256_file(it->path());
    return out;
}

nlohmann::json read_json(const fs::path& p) {
    std::ifstream f(p);
    if (!f) throw parse_error("missing " + p.string());
    return nlohmann::json::parse(f);
}

// --- criterion 1: parity-sum vs spin-sum on random connected graphs --------

void criterion1() {
    Philox rng(1001, "accept-oracle", 0);
    int count = 0;
    double worst = 0;
    while (count < 200) {
        Graph g;
        g.nv = 2 + static_cast<int>(rng.uniform_below(9));  // <= 10 vertices
        for (int v = 1; v < g.nv; ++v)
            g.add_edge(static_cast<int>(rng.uniform_below(v)), v, 0.01 + 0.99 * rng.uniform());
        int extra = static_cast<int>(rng.uniform_below(6));
        for (int e = 0; e < extra && g.ne() < 14; ++e) {
            int u = static_cast<int>(rng.uniform_below(g.nv));
            int v = static_cast<int>(rng.uniform_below(g.nv));
            if (u != v) g.add_edge(u, v, 0.01 + 0.99 * rng.uniform());
        }
        int u = static_cast<int>(rng.uniform_below(g.nv));
        int v = static_cast<int>(rng.uniform_below(g.nv));
        if (u == v) continue;
        std::vector<int> a{u, v};
        double lhs = parity_sum_ratio(g, a);
        double rhs = spin_sum_correlation(g, a);
        worst = std::max(worst, std::abs(lhs - rhs) / std::max(1.0, std::abs(rhs)));
        ++count;
    }
    report(1, worst <= 1e-12,
           "oracle agreement on 200 random graphs (worst rel. dev. " + format_double(worst, 3) +
               ")");
}

// --- criterion 2: switching identity, copy-level exactness -----------------

void criterion2() {
    Philox rng(1002, "accept-switch", 0);
    int failures = 0;
    for (int trial = 0; trial < 500; ++trial) {
        Graph g;
        g.nv = 2 + static_cast<int>(rng.uniform_below(5));
        for (int v = 1; v < g.nv; ++v)
            g.add_edge(static_cast<int>(rng.uniform_below(v)), v, 0.5);
        for (int e = 0; e < 2 && g.ne() < 6; ++e) {
            int u = static_cast<int>(rng.uniform_below(g.nv));
            int v = static_cast<int>(rng.uniform_below(g.nv));
            if (u != v) g.add_edge(u, v, 0.5);
        }
        Multigraph m(g.ne(), 0);
        int total = 0;
        for (int e = 0; e < g.ne(); ++e) {
            int add = std::min<int>(static_cast<int>(rng.uniform_below(4)), 12 - total);
            m[e] = add;
            total += add;
        }
        Multigraph k(g.ne(), 0);
        for (int e = 0; e < g.ne(); ++e) k[e] = static_cast<int>(rng.uniform_below(m[e] + 1));
        Multigraph seed(g.ne(), 0);
        for (int e = 0; e < g.ne(); ++e) seed[e] = static_cast<int>(rng.uniform_below(m[e] + 1));
        auto a = sources(g, seed);

        int mode = static_cast<int>(rng.uniform_below(3));
        int fu = static_cast<int>(rng.uniform_below(g.nv));
        int fv = static_cast<int>(rng.uniform_below(g.nv));
        auto f = [&](const Multigraph& n) -> double {
            if (mode == 0) return 1.0;
            if (mode == 1) {
                std::vector<int> va{fu}, vb{fv};
                return connected(g, trace_of(n), va, vb) ? 1.0 : 0.0;
            }
            int edges = 0;
            for (int x : n) edges += x;
            return edges % 2 ? -1.0 : 2.0;
        };
        auto sides = verify_switching(g, m, a, k, f);
        if (sides.lhs != sides.rhs) ++failures;
    }
    report(2, failures == 0,
           "switching identity exact on 500 randomized instances (failures: " +
               std::to_string(failures) + ")");
}

// --- criterion 3: reflected switching on shipped fixtures ------------------

void criterion3() {
    bool ok = true;
    std::string note;
    for (const auto& fx0 : shipped_symmetric()) {
        for (double beta : kBetaGrid) {
            auto fx = fx0.with_beta(beta);
            auto region = fx.region();
            auto h = *fx.hyperplane;
            for (int x = 0; x < region.graph.nv; ++x) {
                if (h.side(region.points[x]) >= 0) continue;
                auto res = verify_reflected_switching(region, h, {}, x, g_threads);
                if (!res.ok(1e-10)) {
                    ok = false;
                    note = fx.name + " beta=" + format_double(beta, 3) + " x=" + std::to_string(x);
                }
            }
        }
    }
    double min_slack = INFINITY;
    for (const auto& fx0 : shipped_gs()) {
        for (double beta : kBetaGrid) {
            auto fx = fx0.with_beta(beta);
            auto model = fx.gs_model();
            auto h = *fx.hyperplane;
            for (int xb = 0; xb < model.base.graph.nv; ++xb) {
                if (h.side(model.base.points[xb]) >= 0) continue;
                auto rep = verify_block_switching(model, h, model.base.points[xb], g_threads);
                if (!rep.eq_ok(1e-10) || !rep.ineq_ok()) {
                    ok = false;
                    note = fx.name + " beta=" + format_double(beta, 3);
                }
                min_slack = std::min(min_slack, rep.slack());
            }
        }
    }
    report(3, ok,
           "reflected switching equal to 1e-10 on all shipped fixtures x beta grid; block (i) "
           "min slack " +
               format_double(min_slack, 3) + (ok ? "" : " [" + note + "]"));
}

// --- criterion 4: expectation inequality analogues --------------------------

void criterion4() {
    bool ok = true;
    std::string note;
    for (const auto& fx0 : shipped_symmetric()) {
        if (fx0.hyperplane->level < 1) continue;
        if (!fx0.region().try_vertex(Coord{})) continue;
        for (double beta : kBetaGrid) {
            auto fx = fx0.with_beta(beta);
            auto sides = verify_lemma25(fx.region(), *fx.hyperplane, g_threads);
            if (!sides.ok()) {
                ok = false;
                note = fx.name + " beta=" + format_double(beta, 3);
            }
        }
    }
    for (const auto& fx0 : shipped_gs()) {
        for (double beta : kBetaGrid) {
            auto fx = fx0.with_beta(beta);
            auto rep = verify_lemma36(fx.gs_model(), *fx.hyperplane, g_threads);
            if (!rep.ok()) {
                ok = false;
                note = fx.name + " beta=" + format_double(beta, 3);
            }
        }
    }
    report(4, ok,
           std::string("lemma 2.5 / 3.6 finite-volume analogues: lhs <= rhs on every fixture") +
               (ok ? "" : " [" + note + "]"));
}

// --- criterion 5: trace sampler vs three-state enumeration ------------------

void criterion5() {
    const long samples = 100000;
    int flagged3 = 0, failed4 = 0, tested = 0;
    std::vector<Fixture> all = shipped_elementary();
    for (auto& fx : shipped_symmetric()) all.push_back(fx);
    for (auto& fx : shipped_gs()) all.push_back(fx);

    int fixture_index = 0;
    for (const auto& fx : all) {
        Graph g = fx.is_gs() ? fx.gs_model().flat : fx.graph;
        if (g.ne() > kTraceEnumMaxEdges) continue;
        ++fixture_index;
        int far = g.nv - 1;
        int half = g.ne() / 2;
        auto ev0 = [&](const TraceConfig& t) { return t[0] != EdgeState::Zero; };
        auto ev1 = [&](const TraceConfig& t) {
            std::vector<int> a{0}, b{far};
            return connected(g, t, a, b);
        };
        auto ev2 = [&](const TraceConfig& t) {
            int pos = 0;
            for (auto s : t) pos += s != EdgeState::Zero ? 1 : 0;
            return pos >= half;
        };
        struct Acc {
            KahanSum z, e0, e1, e2;
            void merge(const Acc& o) {
                z.merge(o.z);
                e0.merge(o.e0);
                e1.merge(o.e1);
                e2.merge(o.e2);
            }
        };
        auto acc = enumerate_traces<Acc>(
            g,
            [&](Acc& a, const TraceConfig& t, std::uint32_t parity, double w) {
                if (parity != 0) return;
                a.z.add(w);
                if (ev0(t)) a.e0.add(w);
                if (ev1(t)) a.e1.add(w);
                if (ev2(t)) a.e2.add(w);
            },
            g_threads);
        double p_exact[3] = {acc.e0.value() / acc.z.value(), acc.e1.value() / acc.z.value(),
                             acc.e2.value() / acc.z.value()};

        SamplerConfig cfg;
        cfg.beta = 0.5;
        cfg.sweeps = 10;
        cfg.stride = 1;
        cfg.thermalization = 100;
        cfg.seed = 4242 + fixture_index;
        cfg.seeded = true;
        TraceChain chain(g, cfg, 0);
        long hits[3] = {0, 0, 0};
        for (long i = 0; i < samples; ++i) {
            auto t = chain.next();
            if (ev0(t)) ++hits[0];
            if (ev1(t)) ++hits[1];
            if (ev2(t)) ++hits[2];
        }
        for (int e = 0; e < 3; ++e) {
            double p = static_cast<double>(hits[e]) / samples;
            double se = std::sqrt(std::max(p_exact[e] * (1 - p_exact[e]), 1e-12) /
                                  static_cast<double>(samples));
            double dev = std::abs(p - p_exact[e]);
            ++tested;
            if (dev > 3 * se) ++flagged3;
            if (dev > 4 * se) ++failed4;
        }
    }
    report(5, failed4 == 0,
           "trace sampler vs enumeration at 1e5 samples: " + std::to_string(tested) +
               " event probabilities, 3-sigma flags " + std::to_string(flagged3) +
               ", 4-sigma failures " + std::to_string(failed4));
}

// --- criteria 6 / 7 / 8 / 9: calibration runs and structural checks ---------

struct RunArtifacts {
    fs::path beta_dir;
    bool ok = false;
};

RunArtifacts run_config(const std::string& name, const std::string& out_name) {
    auto cfg = load_config(source_dir() / "configs" / name);
    auto out = work_dir() / out_name;
    run_experiment(cfg, out, g_threads);
    RunArtifacts ra;
    ra.beta_dir = out / detail::beta_dir_name(cfg.betas.at(0));
    ra.ok = true;
    return ra;
}

bool verdicts_pass(const fs::path& beta_dir, const std::vector<std::string>& checks,
                   std::string& detail_out) {
    bool ok = true;
    for (const auto& c : checks) {
        auto j = read_json(beta_dir / "checks" / (c + ".json"));
        std::string v = j["verdict"].get<std::string>();
        if (v != "pass") {
            ok = false;
            detail_out += " " + c + "=" + v;
        }
    }
    return ok;
}

RunArtifacts d2_run, d3_run;

void criterion6() {
    d2_run = run_config("d2_critical_eta.ini", "d2-critical");
    auto results = read_json(d2_run.beta_dir / "results.json");
    double expo = results["eta_fit"]["exponent"].get<double>();
    double sigma = results["eta_fit"]["sigma"].get<double>();
    report(6, std::abs(expo - 0.25) <= 0.05,
           "d=2 Ising at exact beta_c, 128^2 torus: d-2+eta = " + format_double(expo, 4) + " +- " +
               format_double(sigma, 2) + " (target 0.25 +- 0.05)");
}

void criterion7() {
    d3_run = run_config("d3_critical_thm11.ini", "d3-critical");
    auto j = read_json(d3_run.beta_dir / "checks" / "theorem11.json");
    auto lhs = j["details"]["lhs_curve"].get<std::vector<double>>();
    auto sig = j["details"]["sigma_curve"].get<std::vector<double>>();
    double slope = j["details"]["slope"].get<double>();
    bool ok = j["verdict"] == "pass";
    bool positive = true;
    for (std::size_t i = 0; i < lhs.size(); ++i)
        positive = positive && lhs[i] - 3 * sig[i] > 0;
    ok = ok && positive && slope >= -0.1;
    // Regression constants recorded at the first verified run (seed 31415,
    // 144^3, 4 chains x 2000 sweeps); re-runs must agree within 5 sigma or
    // 2% relative, whichever is looser.
    const double pinned[] = {1.9727, 2.7710, 3.5952, 5.3639, 7.3093};
    bool pinned_ok = lhs.size() == 5;
    for (std::size_t i = 0; i < lhs.size() && pinned_ok; ++i) {
        double band = std::max(5 * sig[i] * 1.4142, 0.02 * pinned[i]);
        pinned_ok = std::abs(lhs[i] - pinned[i]) <= band;
    }
    ok = ok && pinned_ok;
    std::string curve;
    for (std::size_t i = 0; i < lhs.size(); ++i)
        curve += (i ? ", " : "") + format_double(lhs[i], 4);
    report(7, ok,
           "d=3 at literature beta_c, 144^3 torus: theorem-1.1 LHS(n) = [" + curve +
               "], 3-sigma CIs exclude 0, slope " + format_double(slope, 3) +
               (pinned_ok ? ", matches pinned regression" : ", REGRESSION MISMATCH"));
}

void criterion8() {
    // Exact tables: d = 2 periodic 4x4 spin-sum tables across betas.
    bool exact_ok = true;
    std::string detail;
    for (double beta : {0.25, 0.35, 0.44}) {
        int L = 4;
        Graph torus;
        torus.nv = L * L;
        auto id = [&](int x, int y) { return ((x % L + L) % L) * L + ((y % L + L) % L); };
        for (int x = 0; x < L; ++x)
            for (int y = 0; y < L; ++y) {
                torus.add_edge(id(x, y), id(x + 1, y), beta);
                torus.add_edge(id(x, y), id(x, y + 1), beta);
            }
        TwoPointTable t = TwoPointTable::cubic(2, 2);
        t.provenance.model = "ising";
        t.provenance.source = "exact";
        t.provenance.boundary = "periodic";
        t.provenance.beta = beta;
        for (std::size_t i = 0; i < t.size(); ++i) {
            Coord x = t.coord(i);
            if (is_zero(x, 2)) {
                t.values()[i] = 1.0;
                continue;
            }
            std::array<int, 2> pair{id(0, 0), id(x[0], x[1])};
            t.values()[i] = spin_sum_correlation(torus, pair);
        }
        auto mms = check_mms(t);
        auto ir = check_ir_bound(t);
        auto simon = check_simon_bound(t);
        if (mms.verdict != "pass" || ir.verdict != "pass" || simon.verdict != "pass") {
            exact_ok = false;
            detail += " exact(beta=" + format_double(beta, 3) + "): " + mms.verdict + "/" +
                      ir.verdict + "/" + simon.verdict;
        }
        if (mms.details["violations_3sigma"].get<long>() != 0) exact_ok = false;
    }
    // MC tables: verdicts from the d = 2 and d = 3 calibration artifacts.
    bool mc_ok = verdicts_pass(d2_run.beta_dir, {"mms", "ir", "simon"}, detail) &&
                 verdicts_pass(d3_run.beta_dir, {"mms", "ir", "simon"}, detail);
    report(8, exact_ok && mc_ok,
           std::string("MMS/IR/Simon structural checks: exact tables at 1e-12, MC tables within "
                       "3 sigma") +
               (exact_ok && mc_ok ? "" : " [" + detail + "]"));
}

void criterion9() {
    auto j = read_json(d3_run.beta_dir / "checks" / "bubble.json");
    auto curve = j["details"]["B_curve"].get<std::vector<double>>();
    auto sig = j["details"]["sigma_curve"].get<std::vector<double>>();
    bool d3_ok = j["verdict"] == "pass";
    bool increments = true;
    for (std::size_t i = 0; i + 1 < curve.size(); ++i) {
        double inc = curve[i + 1] - curve[i];
        double s = std::sqrt(sig[i] * sig[i] + sig[i + 1] * sig[i + 1]);
        increments = increments && inc > 3 * s;
    }
    // d = 5 synthetic control: direct dyadic B_n summation of |x|^-3.
    std::vector<BubblePoint> control;
    for (int n : {2, 4, 8, 16}) {
        KahanSum b;
        Coord x{};
        auto rec = [&](auto&& self, int axis) -> void {
            if (axis == 5) {
                int r = norm_linf(x, 5);
                double v = r == 0 ? 1.0 : std::pow(static_cast<double>(r), -3.0);
                b.add(v * v);
                return;
            }
            for (int c = -n; c <= n; ++c) {
                x[axis] = c;
                self(self, axis + 1);
            }
        };
        rec(rec, 0);
        control.push_back({n, b.value(), 0.0});
    }
    auto ctrl = check_bubble_divergence(control, 5, 0.11, "synthetic-d5-control");
    std::string curve_str;
    for (std::size_t i = 0; i < curve.size(); ++i)
        curve_str += (i ? ", " : "") + format_double(curve[i], 4);
    report(9, d3_ok && increments && ctrl.verdict == "pass",
           "bubble growth d=3 dyadic scan B_n = [" + curve_str +
               "] strictly increasing beyond 3 sigma; d=5 synthetic control plateaus (last rel. "
               "inc. " +
               format_double(ctrl.details["last_relative_increment"].get<double>(), 3) + ")");
}

void criterion10() {
    auto cfg = load_config(source_dir() / "configs" / "smoke_one_edge.ini");
    auto d1 = work_dir() / "det1";
    auto d2 = work_dir() / "det2";
    fs::remove_all(d1);
    fs::remove_all(d2);
    run_experiment(cfg, d1, 1);
    run_experiment(cfg, d2, 2);
    bool smoke_same = file_hashes(d1) == file_hashes(d2);

    auto sn_cfg = load_config(source_dir() / "configs" / "d3_sn_scan.ini");
    // Shrink the scan so the determinism probe stays light.
    nlohmann::json doc = sn_cfg.canonical;
    doc["sampler"]["sweeps"] = 800;
    doc["experiment"]["radius"] = 4;
    doc["checks"]["lemma24_n"] = {1};
    sn_cfg = config_from_canonical(doc);
    auto s1 = work_dir() / "det-sn1";
    auto s2 = work_dir() / "det-sn2";
    fs::remove_all(s1);
    fs::remove_all(s2);
    run_experiment(sn_cfg, s1, 2);
    run_experiment(sn_cfg, s2, 1);
    bool sn_same = file_hashes(s1) == file_hashes(s2);

    report(10, smoke_same && sn_same,
           std::string("byte-identical artifacts across reruns and worker counts (spin run: ") +
               (smoke_same ? "identical" : "DIFFERS") + ", current-trace run: " +
               (sn_same ? "identical" : "DIFFERS") + ")");
}

}  // namespace

int main(int argc, char** argv) {
    if (argc > 1) g_threads = std::atoi(argv[1]);
    std::printf("rclb acceptance suite (%d worker threads)\n", g_threads);
    criterion1();
    criterion2();
    criterion3();
    criterion4();
    criterion5();
    criterion6();
    criterion7();
    criterion8();
    criterion9();
    criterion10();
    std::printf("%s\n", g_failures == 0 ? "ALL CRITERIA PASSED" : "FAILURES PRESENT");
    return g_failures == 0 ? 0 : 1;
}
