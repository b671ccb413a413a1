#include <catch2/catch_amalgamated.hpp>
#include <cmath>

#include "rclb/connectivity.hpp"
#include "rclb/current.hpp"
#include "rclb/fold.hpp"
#include "rclb/graph.hpp"
#include "rclb/rng.hpp"

using namespace rclb;

namespace {

Graph triangle(double beta) {
    Graph g;
    g.nv = 3;
    g.add_edge(0, 1, beta);
    g.add_edge(1, 2, beta);
    g.add_edge(2, 0, beta);
    return g;
}

Graph random_graph(Philox& rng, int max_v, int max_e) {
    Graph g;
    g.nv = 2 + static_cast<int>(rng.uniform_below(max_v - 1));
    int ne = 1 + static_cast<int>(rng.uniform_below(max_e));
    for (int e = 0; e < ne; ++e) {
        int u = static_cast<int>(rng.uniform_below(g.nv));
        int v = static_cast<int>(rng.uniform_below(g.nv));
        if (u == v) continue;
        g.add_edge(u, v, 0.1 + 0.9 * rng.uniform());
    }
    return g;
}

}  // namespace

TEST_CASE("sources") {
    Graph g;
    g.nv = 2;
    g.add_edge(0, 1, 0.5);
    CHECK(sources(g, Current{1}) == std::vector<int>{0, 1});
    CHECK(sources(g, Current{2}).empty());

    Graph tri = triangle(0.3);
    CHECK(sources(tri, Current{1, 1, 2}) == std::vector<int>{0, 2});
}

TEST_CASE("sources always even") {
    Philox rng(3, "sources", 0);
    for (int trial = 0; trial < 300; ++trial) {
        Graph g = random_graph(rng, 8, 12);
        Current c(g.ne());
        for (auto& x : c) x = static_cast<int>(rng.uniform_below(4));
        CHECK(sources(g, c).size() % 2 == 0);
    }
}

TEST_CASE("current weight") {
    Graph g;
    g.nv = 2;
    g.add_edge(0, 1, 1.0);
    CHECK(weight(g, Current{2}) == Catch::Approx(0.5));
    CHECK(weight(g, Current{0}) == 1.0);

    Graph g2;
    g2.nv = 3;
    g2.add_edge(0, 1, 2.0);
    g2.add_edge(1, 2, 2.0);
    CHECK(weight(g2, Current{1, 3}) == Catch::Approx(2.0 * 8.0 / 6.0));
}

TEST_CASE("log weight matches direct weight to 1e-14 relative") {
    Philox rng(5, "logw", 0);
    for (int trial = 0; trial < 100; ++trial) {
        Graph g = random_graph(rng, 10, 100);
        Current c(g.ne());
        for (auto& x : c) x = static_cast<int>(rng.uniform_below(5));
        double w = weight(g, c);
        double lw = log_weight(g, c);
        if (w > 0) CHECK(std::abs(std::log(w) - lw) <= 1e-14 * std::max(1.0, std::abs(lw)) * g.ne());
    }
}

TEST_CASE("symm_diff basics") {
    Graph g;
    g.nv = 2;
    g.add_edge(0, 1, 0.5);
    Multigraph n{2}, k{1};
    auto d = symm_diff(n, k);
    CHECK(d == Multigraph{1});
    CHECK(sources(g, d) == std::vector<int>{0, 1});
    CHECK(symm_diff(n, Multigraph{0}) == n);

    // The multiplicity projection |n - k| is an involution wherever the
    // canonical copy alignment is faithful (K = 0 or n <= k per edge); the
    // unrestricted involution lives at copy level inside verify_switching.
    Philox rng(29, "invol", 0);
    for (int trial = 0; trial < 200; ++trial) {
        Multigraph a(3), b(3);
        for (int e = 0; e < 3; ++e) {
            a[e] = static_cast<int>(rng.uniform_below(3));
            b[e] = a[e] + static_cast<int>(rng.uniform_below(3));  // a <= b
        }
        CHECK(symm_diff(symm_diff(a, b), b) == a);
    }
}

TEST_CASE("boundary of symmetric difference") {
    Philox rng(11, "symmdiff", 0);
    auto parity_of = [](const Graph& g, const std::vector<int>& s) {
        std::uint64_t m = 0;
        for (int v : s) m ^= 1ull << v;
        return m;
    };
    for (int trial = 0; trial < 1000; ++trial) {
        Graph g = random_graph(rng, 8, 8);
        Multigraph n(g.ne()), k(g.ne());
        for (int e = 0; e < g.ne(); ++e) {
            n[e] = static_cast<int>(rng.uniform_below(4));
            k[e] = static_cast<int>(rng.uniform_below(4));
        }
        auto d = symm_diff(n, k);
        CHECK(parity_of(g, sources(g, d)) ==
              (parity_of(g, sources(g, n)) ^ parity_of(g, sources(g, k))));
    }
}

TEST_CASE("connected matches BFS reference on random traces") {
    Philox rng(13, "conn", 0);
    for (int trial = 0; trial < 1000; ++trial) {
        Graph g = random_graph(rng, 10, 16);
        TraceConfig t(g.ne());
        for (auto& s : t)
            s = static_cast<EdgeState>(rng.uniform_below(3));
        std::vector<int> a{static_cast<int>(rng.uniform_below(g.nv))};
        std::vector<int> b{static_cast<int>(rng.uniform_below(g.nv))};
        CHECK(connected(g, t, a, b) == connected_bfs(g, t, a, b));
    }
}

TEST_CASE("connected edge cases") {
    Graph g;
    g.nv = 3;
    g.add_edge(0, 1, 0.3);
    g.add_edge(1, 2, 0.3);
    TraceConfig empty(g.ne(), EdgeState::Zero);
    std::vector<int> v0{0}, v2{2};
    CHECK(connected(g, empty, v0, v0));        // same vertex
    CHECK_FALSE(connected(g, empty, v0, v2));  // no edges
    TraceConfig path{EdgeState::Odd, EdgeState::EvenPositive};
    CHECK(connected(g, path, v0, v2));
}

// --- folding -------------------------------------------------------------

TEST_CASE("fold keeps E_-, reflects E_+, drops E_0") {
    int n = 1;
    Box box(2, 3);
    Hyperplane h{0, +1, n};
    TraceConfig trace(box.edge_slots(), EdgeState::Zero);

    SECTION("single occupied plus-side edge lands on its mirror image") {
        trace[box.edge_id(coord_of({n + 1, 0}), 0)] = EdgeState::Odd;  // {(2,0),(3,0)}
        auto folded = fold(box, trace, h);
        REQUIRE(folded.edges.size() == 1);
        auto [u, v] = folded.edges[0];
        CHECK(((box.coord(u) == coord_of({n - 1, 0}) && box.coord(v) == coord_of({n - 2, 0})) ||
               (box.coord(u) == coord_of({n - 2, 0}) && box.coord(v) == coord_of({n - 1, 0}))));
    }
    SECTION("E_0 edge disappears") {
        trace[box.edge_id(coord_of({n, 0}), 1)] = EdgeState::Odd;  // {(1,0),(1,1)}
        CHECK(fold(box, trace, h).edges.empty());
    }
    SECTION("E_- edge kept in place") {
        trace[box.edge_id(coord_of({n - 1, 0}), 0)] = EdgeState::EvenPositive;
        auto folded = fold(box, trace, h);
        REQUIRE(folded.edges.size() == 1);
        CHECK(folded.edges[0] ==
              std::make_pair(box.index(coord_of({n - 1, 0})), box.index(coord_of({n, 0}))));
    }
    SECTION("offset box that is not symmetric enough throws") {
        Coord off{};
        off[0] = -2;
        Box shifted(2, 3, off);  // x range [-5, 1]
        TraceConfig t2(shifted.edge_slots(), EdgeState::Zero);
        // Plane far off-center: reflection of the occupied plus-side edge
        // {(0,0),(1,0)} lands at x = -6, -7, outside the box.
        Hyperplane h0{0, +1, -3};
        t2[shifted.edge_id(coord_of({0, 0}), 0)] = EdgeState::Odd;
        CHECK_THROWS_AS(fold(shifted, t2, h0), invalid_argument_error);
    }
}

TEST_CASE("fold connectivity invariant under pre-reflection of the trace") {
    // Folding is reflection symmetric by construction: reflecting the whole
    // trace across H_n leaves every folded connectivity query unchanged.
    int n = 1;
    Box box(2, 2);
    Hyperplane h{0, +1, n};
    Coord off{};
    off[0] = n;
    Box sym(2, 2, off);  // symmetric under R_n
    Philox rng(17, "foldsym", 0);
    for (int trial = 0; trial < 200; ++trial) {
        TraceConfig trace(sym.edge_slots(), EdgeState::Zero);
        sym.for_each_edge([&](long e) {
            trace[e] = static_cast<EdgeState>(rng.uniform_below(3));
        });
        // Reflected trace: state of edge {u,v} moved to {R(u),R(v)}.
        TraceConfig refl(sym.edge_slots(), EdgeState::Zero);
        sym.for_each_edge([&](long e) {
            auto [u, v] = sym.edge_endpoints(e);
            Coord ru = reflect(u, h), rv = reflect(v, h);
            Coord lo = ru;
            int axis = static_cast<int>(e % 2);
            if (rv[axis] < ru[axis]) lo = rv;
            refl[sym.edge_id(lo, axis)] = trace[e];
        });
        auto fa = fold(sym, trace, h);
        auto fb = fold(sym, refl, h);
        for (int x = -1; x <= n; ++x) {
            std::vector<long> a{sym.index(coord_of({x, -1}))};
            std::vector<long> b{sym.index(coord_of({n, 0}))};
            CHECK(fa.connected(a, b) == fb.connected(a, b));
        }
    }
}

TEST_CASE("compute_S_n") {
    Box box(2, 4);
    int n = 2;

    SECTION("all-zero trace: S_n contains Lambda_{n-1}, excludes hyperplane points") {
        TraceConfig trace(box.edge_slots(), EdgeState::Zero);
        auto sn = compute_S_n(box, trace, n);
        std::vector<char> in(box.vertex_count(), 0);
        for (long v : sn) in[v] = 1;
        for (long v = 0; v < box.vertex_count(); ++v) {
            Coord x = box.coord(v);
            if (norm_linf(x, 2) <= n - 1) CHECK(in[v]);
            if (norm_linf(x, 2) >= n) CHECK_FALSE(in[v]);
        }
    }

    SECTION("occupied path from 0 to the hyperplane expels 0") {
        TraceConfig trace(box.edge_slots(), EdgeState::Zero);
        trace[box.edge_id(coord_of({0, 0}), 0)] = EdgeState::Odd;
        trace[box.edge_id(coord_of({1, 0}), 0)] = EdgeState::Odd;
        CHECK_FALSE(in_S_n(box, trace, n, Coord{}));
        auto sn = compute_S_n(box, trace, n);
        CHECK(std::find(sn.begin(), sn.end(), box.index(Coord{})) == sn.end());
    }

    SECTION("random traces stay inside Lambda_{n-1} and agree with in_S_n") {
        Philox rng(23, "sn", 0);
        for (int trial = 0; trial < 50; ++trial) {
            TraceConfig trace(box.edge_slots(), EdgeState::Zero);
            box.for_each_edge([&](long e) {
                if (rng.bernoulli(0.35)) trace[e] = EdgeState::Odd;
            });
            auto sn = compute_S_n(box, trace, n);
            std::vector<char> in(box.vertex_count(), 0);
            for (long v : sn) {
                in[v] = 1;
                CHECK(norm_linf(box.coord(v), 2) <= n - 1);
            }
            for (long v = 0; v < box.vertex_count(); ++v) {
                Coord x = box.coord(v);
                if (norm_linf(x, 2) <= n) CHECK(in[v] == (in_S_n(box, trace, n, x) ? 1 : 0));
            }
        }
    }

    SECTION("mismatched trace sizes are rejected") {
        std::vector<TraceConfig> traces(4, TraceConfig(3, EdgeState::Zero));
        CHECK_THROWS_AS(compute_S_n(box, std::span<const TraceConfig>(traces), n),
                        invalid_argument_error);
    }
}
