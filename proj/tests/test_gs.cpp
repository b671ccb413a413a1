#include <catch2/catch_amalgamated.hpp>
#include <cmath>

#include "rclb/gs.hpp"

using namespace rclb;

namespace {

GSBlockModel reduction_model(const LatticeRegion& base, double beta) {
    return build_gs_model(base, 1, {{0.0}}, {1.0}, beta);
}

GSBlockModel two_block_line(double beta, double j12 = 0.25, std::vector<double> q = {0.6, 0.4}) {
    auto base = LatticeRegion::rect(1, coord_of({0}), coord_of({2}), beta);
    return build_gs_model(base, 2, {{0.0, j12}, {j12, 0.0}}, q, beta);
}

}  // namespace

TEST_CASE("gs model construction and validation") {
    auto base = LatticeRegion::rect(1, coord_of({0}), coord_of({1}), 0.3);

    SECTION("reduction case produces the plain Ising graph") {
        auto m = reduction_model(base, 0.3);
        REQUIRE(m.flat.nv == base.graph.nv);
        REQUIRE(m.flat.ne() == base.graph.ne());
        for (int e = 0; e < m.flat.ne(); ++e)
            CHECK(m.flat.edges[e].beta == Catch::Approx(0.3));
    }

    SECTION("two adjacent sites with N=2: 2 intra + 4 inter = 6 edges") {
        auto m = build_gs_model(base, 2, {{0.0, 0.5}, {0.5, 0.0}}, {1.0, 1.0}, 0.3);
        CHECK(m.flat.nv == 4);
        CHECK(m.flat.ne() == 2 + 4);
    }

    SECTION("ferromagnetic only") {
        CHECK_THROWS_AS(build_gs_model(base, 2, {{0.0, -0.1}, {-0.1, 0.0}}, {1.0, 1.0}, 0.3),
                        invalid_argument_error);
        CHECK_THROWS_AS(build_gs_model(base, 2, {{0.0, 0.1}, {0.1, 0.0}}, {1.0, -1.0}, 0.3),
                        invalid_argument_error);
        CHECK_THROWS_AS(build_gs_model(base, 2, {{0.0, 0.1}, {0.2, 0.0}}, {1.0, 1.0}, 0.3),
                        invalid_argument_error);
    }
}

TEST_CASE("block two-point") {
    SECTION("reduction equals plain Ising exactly") {
        auto base = LatticeRegion::rect(2, coord_of({0, 0}), coord_of({2, 1}), 0.35);
        auto m = reduction_model(base, 0.35);
        for (const Coord& x : {coord_of({1, 0}), coord_of({2, 1})}) {
            std::array<int, 2> pair{base.vertex(coord_of({0, 0})), base.vertex(x)};
            double ising = spin_sum_correlation(base.graph, pair);
            CHECK(block_two_point(m, coord_of({0, 0}), x) == Catch::Approx(ising).epsilon(1e-13));
        }
    }

    SECTION("beta = 0: blocks decouple") {
        auto m = two_block_line(0.0);
        CHECK(block_two_point(m, coord_of({0}), coord_of({1})) == Catch::Approx(0.0).margin(1e-15));
        CHECK(block_two_point(m, coord_of({0}), coord_of({0})) > 0.0);
    }

    SECTION("tau expansion against a direct spin sum over Q_i Q_j pairs") {
        auto m = two_block_line(0.3);
        double direct = 0;
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j) {
                std::array<int, 2> pair{m.flat_id(0, i), m.flat_id(1, j)};
                direct += m.Q[i] * m.Q[j] * spin_sum_correlation(m.flat, pair);
            }
        CHECK(block_two_point(m, coord_of({0}), coord_of({1})) ==
              Catch::Approx(direct).epsilon(1e-13));
    }

    SECTION("nonnegative on a fixture grid (Griffiths)") {
        auto m = two_block_line(0.2);
        for (int a = 0; a <= 2; ++a)
            for (int b = 0; b <= 2; ++b)
                CHECK(block_two_point(m, coord_of({a}), coord_of({b})) >= 0.0);
    }

    SECTION("MMS axis monotonicity for tau on an exact line fixture") {
        auto base = LatticeRegion::rect(1, coord_of({-2}), coord_of({2}), 0.3);
        auto m = build_gs_model(base, 2, {{0.0, 0.3}, {0.3, 0.0}}, {0.7, 0.3}, 0.3);
        double prev = block_two_point(m, Coord{}, Coord{});
        for (int k = 1; k <= 2; ++k) {
            double cur = block_two_point(m, Coord{}, coord_of({k}));
            CHECK(cur <= prev + 1e-12);
            prev = cur;
        }
    }
}

TEST_CASE("block source sampling") {
    SECTION("N = 1 always picks (0,0)") {
        auto base = LatticeRegion::rect(1, coord_of({0}), coord_of({1}), 0.4);
        auto m = reduction_model(base, 0.4);
        Philox rng(3, "pick", 0);
        auto pick = sample_block_sources(m, coord_of({0}), coord_of({1}), rng);
        CHECK(pick.i == 0);
        CHECK(pick.j == 0);
        CHECK(pick.prob == Catch::Approx(1.0));
    }

    SECTION("probabilities are a distribution and uniform under exchangeability") {
        auto m = two_block_line(0.3, 0.25, {0.5, 0.5});
        auto p = block_source_probabilities(m, coord_of({0}), coord_of({1}));
        double total = 0;
        for (auto& row : p)
            for (double v : row) total += v;
        CHECK(total == Catch::Approx(1.0).epsilon(1e-12));
        // Exchangeable blocks (uniform Q, exchangeable J): all picks equal.
        for (auto& row : p)
            for (double v : row) CHECK(v == Catch::Approx(0.25).epsilon(1e-10));
    }

    SECTION("empirical pick frequencies match the exact distribution") {
        auto m = two_block_line(0.35);
        auto p = block_source_probabilities(m, coord_of({0}), coord_of({2}));
        Philox rng(17, "pickfreq", 0);
        long n = 100000;
        std::vector<std::vector<long>> counts(2, std::vector<long>(2, 0));
        for (long t = 0; t < n; ++t) {
            auto pick = sample_block_sources(m, coord_of({0}), coord_of({2}), rng);
            ++counts[pick.i][pick.j];
        }
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j) {
                double est = static_cast<double>(counts[i][j]) / n;
                double se = std::sqrt(p[i][j] * (1 - p[i][j]) / n);
                INFO("i=" << i << " j=" << j << " est=" << est << " p=" << p[i][j]);
                CHECK(std::abs(est - p[i][j]) < 3.5 * se);
            }
    }

    SECTION("zero denominator rejected") {
        auto m = two_block_line(0.0);
        Philox rng(5, "pick0", 0);
        CHECK_THROWS_AS(sample_block_sources(m, coord_of({0}), coord_of({1}), rng),
                        invalid_argument_error);
    }
}

TEST_CASE("pxy composition carries the picked sources") {
    auto m = two_block_line(0.4);
    SamplerConfig cfg;
    cfg.beta = 0.4;
    cfg.sweeps = 10;
    cfg.stride = 1;
    cfg.thermalization = 30;
    cfg.seed = 7;
    cfg.seeded = true;
    for (std::uint64_t c = 0; c < 20; ++c) {
        auto [pick, trace] = sample_pxy_trace(m, coord_of({0}), coord_of({2}), cfg, c);
        Current odd(m.flat.ne(), 0);
        for (int e = 0; e < m.flat.ne(); ++e) odd[e] = trace[e] == EdgeState::Odd ? 1 : 0;
        std::vector<int> expect{m.flat_id(0, pick.i), m.flat_id(2, pick.j)};
        std::sort(expect.begin(), expect.end());
        REQUIRE(sources(m.flat, odd) == expect);
    }
}

TEST_CASE("block reflected switching on symmetric fixtures") {
    Hyperplane h{0, +1, 1};

    SECTION("reduction case coincides with the plain reflected switching") {
        auto base = LatticeRegion::rect(2, coord_of({0, 0}), coord_of({2, 1}), 0.35);
        auto m = reduction_model(base, 0.35);
        auto rep = verify_block_switching(m, h, coord_of({0, 0}));
        CHECK(rep.eq_ok(1e-10));
        auto plain = verify_reflected_switching(base, h, std::vector<int>{},
                                                base.vertex(coord_of({0, 0})));
        // Z^{0,x} with x = 0 duplicates the source, i.e. the sourceless
        // class: the reduction of (ii) at x=0 is exactly the plain lemma
        // with A = {}.
        CHECK(rep.eq_lhs == Catch::Approx(plain.lhs).epsilon(1e-12));
        CHECK(rep.ineq_ok());
    }

    SECTION("J = 0 five-site line, x = -1: equality to 1e-10 across betas") {
        for (double beta : {0.05, 0.2, 0.4, 0.8}) {
            auto base = LatticeRegion::rect(1, coord_of({-1}), coord_of({3}), beta);
            auto m = build_gs_model(base, 2, {{0.0, 0.0}, {0.0, 0.0}}, {0.7, 0.5}, beta);
            REQUIRE(m.flat.ne() <= 16);
            auto rep = verify_block_switching(m, h, coord_of({-1}));
            INFO("beta=" << beta << " eq " << rep.eq_lhs << " vs " << rep.eq_rhs << " ineq "
                         << rep.ineq_lhs << " vs " << rep.ineq_rhs);
            CHECK(rep.eq_ok(1e-10));
            CHECK(rep.ineq_ok());
            CHECK(rep.slack() >= 0.0);
        }
    }

    SECTION("J > 0 three-site line with x = 0") {
        auto base = LatticeRegion::rect(1, coord_of({0}), coord_of({2}), 0.3);
        auto m = two_block_line(0.3);
        REQUIRE(m.flat.ne() <= 16);
        auto rep = verify_block_switching(m, h, coord_of({0}));
        CHECK(rep.eq_ok(1e-10));
        CHECK(rep.ineq_ok());
    }

    SECTION("x on the plane is rejected") {
        auto m = two_block_line(0.3);
        CHECK_THROWS_AS(verify_block_switching(m, h, coord_of({1})), invalid_argument_error);
    }
}

TEST_CASE("finite-volume lemma 3.6 analogue") {
    Hyperplane h{0, +1, 1};

    SECTION("reduction case: lhs equals the plain lemma's lhs") {
        auto base = LatticeRegion::rect(2, coord_of({-1, 0}), coord_of({3, 1}), 0.25);
        auto m = reduction_model(base, 0.25);
        auto gs = verify_lemma36(m, h);
        auto plain = verify_lemma25(base, h);
        CHECK(gs.lhs == Catch::Approx(plain.lhs).epsilon(1e-10));
        CHECK(gs.ok());
    }

    SECTION("N = 2 fixture at several betas, pinned behaviour") {
        for (double beta : {0.1, 0.4}) {
            auto base = LatticeRegion::rect(1, coord_of({-1}), coord_of({3}), beta);
            auto m = build_gs_model(base, 2, {{0.0, 0.0}, {0.0, 0.0}}, {0.7, 0.5}, beta);
            auto gs = verify_lemma36(m, h);
            INFO("beta=" << beta << " lhs=" << gs.lhs << " rhs=" << gs.rhs << " displayed="
                         << gs.rhs_displayed);
            CHECK(gs.ok());
            CHECK(gs.lhs >= 0.0);
            // The bare beta-sum misses the on-plane boundary terms at small
            // beta; the faithful bound restores them at weight one.
            if (beta <= 0.1) CHECK(gs.lhs > gs.rhs_displayed);
            CHECK(gs.rhs >= gs.rhs_displayed - 1e-12);
        }
    }

    SECTION("beta -> 0: both sides vanish at n = 2") {
        Hyperplane h2{0, +1, 2};
        auto base = LatticeRegion::rect(1, coord_of({0}), coord_of({4}), 1e-3);
        auto m = build_gs_model(base, 2, {{0.0, 0.0}, {0.0, 0.0}}, {0.7, 0.5}, 1e-3);
        auto gs = verify_lemma36(m, h2);
        CHECK(gs.lhs < 1e-2);
        CHECK(gs.rhs < 1e-2);
        CHECK(gs.ok());
    }
}
