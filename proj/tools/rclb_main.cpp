// rclb: experiment runner for random-current Ising / phi^4 studies.
//
// Verbs:
//   rclb run <config>            execute an experiment, write artifacts
//   rclb verify <artifact-dir>   recheck manifest hashes and report reproducibility
//   rclb plot <artifact-dir> <spec>   emit plot-ready CSVs
//   rclb oracle <fixture-file>   run the exact engines on fixture records
//
// Exit codes: 0 pass, 1 check-fail, 2 usage/config error, 3 runtime error.

#include <CLI11.hpp>

#include <cstdlib>
#include <iostream>

#include "rclb/fixtures.hpp"
#include "rclb/runner.hpp"

namespace {

std::filesystem::path resolve_output(const std::string& out) {
    std::filesystem::path p(out);
    if (p.is_absolute()) return p;
    if (const char* root = std::getenv("RCLB_OUTPUT_ROOT")) return std::filesystem::path(root) / p;
    return p;
}

int cmd_run(const std::string& config_path, const std::string& output_override, int threads) {
    rclb::ExperimentConfig cfg;
    try {
        cfg = rclb::load_config(config_path);
    } catch (const rclb::parse_error& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    }
    auto out_dir = resolve_output(output_override.empty() ? cfg.output : output_override);
    auto outcome = rclb::run_experiment(cfg, out_dir, threads);
    std::cout << "artifacts: " << outcome.dir.string() << "\n";
    for (const auto& rep : outcome.reports)
        std::cout << "  check " << rep.check_id << ": " << rep.verdict << "\n";
    return outcome.checks_passed ? 0 : 1;
}

int cmd_verify(const std::string& dir) {
    auto outcome = rclb::verify_artifacts(dir);
    for (const auto& p : outcome.problems) std::cerr << "problem: " << p << "\n";
    if (!outcome.problems.empty()) return 3;
    std::cout << "manifest and reports verified\n";
    return outcome.checks_passed ? 0 : 1;
}

int cmd_plot(const std::string& dir, const std::string& spec) {
    rclb::emit_plot_data(dir, spec);
    std::cout << "plot data written to " << (std::filesystem::path(dir) / "plots").string() << "\n";
    return 0;
}

int cmd_oracle(const std::string& path, double beta_override, int threads) {
    auto fixtures = rclb::load_fixture_file(path);
    nlohmann::json out = nlohmann::json::array();
    for (auto& fx0 : fixtures) {
        rclb::Fixture fx = beta_override > 0 ? fx0.with_beta(beta_override) : fx0;
        nlohmann::json j;
        j["fixture"] = fx.name;
        const rclb::Graph& g = fx.is_gs() ? fx.gs_model().flat : fx.graph;
        j["vertices"] = g.nv;
        j["edges"] = g.ne();
        j["Z0"] = rclb::parity_sum_Z(g, {}).value;
        for (auto [u, v] : fx.correlations) {
            std::array<int, 2> pair{u, v};
            nlohmann::json c;
            c["u"] = u;
            c["v"] = v;
            c["spin_sum"] = rclb::spin_sum_correlation(g, pair);
            c["parity_sum"] = rclb::parity_sum_ratio(g, pair);
            j["correlations"].push_back(c);
        }
        if (fx.hyperplane && fx.dim > 0 && !fx.is_gs()) {
            auto region = fx.region();
            auto h = *fx.hyperplane;
            nlohmann::json refl = nlohmann::json::array();
            for (int x = 0; x < region.graph.nv; ++x) {
                if (h.side(region.points[x]) >= 0) continue;
                auto res = rclb::verify_reflected_switching(region, h, {}, x, threads);
                refl.push_back({{"x", x},
                                {"lhs", res.lhs},
                                {"rhs", res.rhs},
                                {"ok", res.ok(1e-10)}});
            }
            j["reflected_switching"] = refl;
            if (h.level >= 1 && region.try_vertex(rclb::Coord{})) {
                auto sides = rclb::verify_lemma25(region, h, threads);
                j["lemma25"] = {{"lhs", sides.lhs}, {"rhs", sides.rhs}, {"ok", sides.ok()}};
            }
        }
        if (fx.hyperplane && fx.is_gs()) {
            auto model = fx.gs_model();
            auto h = *fx.hyperplane;
            if (h.level >= 1 && model.base.try_vertex(rclb::Coord{})) {
                auto r36 = rclb::verify_lemma36(model, h, threads);
                j["lemma36"] = {{"lhs", r36.lhs},
                                {"rhs", r36.rhs},
                                {"rhs_displayed", r36.rhs_displayed},
                                {"ok", r36.ok()}};
            }
        }
        out.push_back(j);
    }
    std::cout << out.dump(2) << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"random-current Ising / phi^4 experiment runner"};
    app.require_subcommand(1);

    std::string config_path, artifact_dir, plot_spec = "all", fixture_path, output_override;
    double beta_override = 0.0;
    int threads = 1;

    auto* run = app.add_subcommand("run", "run an experiment config");
    run->add_option("config", config_path, "config file (.ini/.toml-style or .json)")->required();
    run->add_option("--output", output_override, "override the output directory");
    run->add_option("--threads", threads, "worker pool size (does not affect results)");

    auto* verify = app.add_subcommand("verify", "verify an artifact directory");
    verify->add_option("dir", artifact_dir, "artifact directory")->required();

    auto* plot = app.add_subcommand("plot", "emit plot-ready CSVs");
    plot->add_option("dir", artifact_dir, "artifact directory")->required();
    plot->add_option("spec", plot_spec, "two-point | theorem11 | bubble | phi | exponents | all");

    auto* oracle = app.add_subcommand("oracle", "run exact engines on a fixture file");
    oracle->add_option("fixture", fixture_path, "fixture file")->required();
    oracle->add_option("--beta", beta_override, "override every coupling");
    oracle->add_option("--threads", threads, "enumeration worker pool");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (run->parsed()) return cmd_run(config_path, output_override, threads);
        if (verify->parsed()) return cmd_verify(artifact_dir);
        if (plot->parsed()) return cmd_plot(artifact_dir, plot_spec);
        if (oracle->parsed()) return cmd_oracle(fixture_path, beta_override, threads);
    } catch (const rclb::parse_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const rclb::invalid_argument_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "runtime error: " << e.what() << "\n";
        return 3;
    }
    return 2;
}
