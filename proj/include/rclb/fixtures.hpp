#pragma once

#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "rclb/gs.hpp"
#include "rclb/graph.hpp"

namespace rclb {

// Plain-text fixture records for the exact engines. Grammar (one directive
// per line, '#' comments, one fixture per `fixture ... end` block):
//
//   fixture <name>
//   dim <d>                      # optional; enables coordinates
//   vertices <n>                 # abstract graph without coordinates
//   vertex <id> <x1> ... <xd>    # coordinate form (ids must be 0..n-1)
//   edge <u> <v> <beta>
//   hyperplane <axis> <sign> <level>
//   blocks <N>                   # GS extension
//   J <i> <j> <value>
//   Q <i> <value>
//   gs_beta <value>
//   correlation <u> <v>          # pairs the oracle should evaluate
//   end
struct Fixture {
    std::string name;
    int dim = 0;  // 0 = abstract graph
    Graph graph;
    std::vector<Coord> coords;
    std::optional<Hyperplane> hyperplane;
    int blocks = 1;
    std::vector<std::vector<double>> J;
    std::vector<double> Q;
    double gs_beta = 0.0;
    std::vector<std::pair<int, int>> correlations;

    bool is_gs() const { return blocks > 1; }

    LatticeRegion region() const {
        if (dim == 0) throw invalid_argument_error("fixture " + name + " has no coordinates");
        LatticeRegion r;
        r.d = dim;
        r.points = coords;
        r.graph = graph;
        for (int i = 0; i < graph.nv; ++i) r.index[coords[i]] = i;
        return r;
    }

    GSBlockModel gs_model() const {
        if (!is_gs()) throw invalid_argument_error("fixture " + name + " is not a block model");
        return build_gs_model(region(), blocks, J, Q, gs_beta);
    }

    /// Same fixture with every coupling replaced by beta (and gs_beta for
    /// block models): lets one shipped geometry serve a whole beta grid.
    Fixture with_beta(double beta) const {
        Fixture f = *this;
        for (auto& e : f.graph.edges) e.beta = beta;
        if (is_gs()) f.gs_beta = beta;
        return f;
    }
};

inline std::vector<Fixture> parse_fixtures(std::istream& in) {
    std::vector<Fixture> out;
    std::optional<Fixture> cur;
    std::string line;
    int lineno = 0;
    auto fail = [&](const std::string& msg) {
        throw parse_error("fixture line " + std::to_string(lineno) + ": " + msg);
    };
    while (std::getline(in, line)) {
        ++lineno;
        std::istringstream ls(line);
        std::string word;
        if (!(ls >> word) || word[0] == '#') continue;
        if (word == "fixture") {
            if (cur) fail("nested fixture (missing 'end'?)");
            cur.emplace();
            if (!(ls >> cur->name)) fail("fixture needs a name");
            continue;
        }
        if (!cur) fail("directive outside a fixture block");
        if (word == "end") {
            if (cur->dim > 0 && static_cast<int>(cur->coords.size()) != cur->graph.nv)
                fail("fixture " + cur->name + ": every vertex needs coordinates");
            if (cur->is_gs()) {
                if (static_cast<int>(cur->Q.size()) != cur->blocks)
                    fail("fixture " + cur->name + ": Q must have N entries");
                if (static_cast<int>(cur->J.size()) != cur->blocks)
                    fail("fixture " + cur->name + ": J must be NxN");
            }
            out.push_back(std::move(*cur));
            cur.reset();
        } else if (word == "dim") {
            if (!(ls >> cur->dim) || cur->dim < 1 || cur->dim > kMaxDim) fail("bad dim");
        } else if (word == "vertices") {
            int n;
            if (!(ls >> n) || n < 1) fail("bad vertex count");
            cur->graph.nv = n;
        } else if (word == "vertex") {
            int id;
            if (!(ls >> id)) fail("bad vertex id");
            if (cur->dim == 0) fail("vertex coordinates need 'dim' first");
            if (id != static_cast<int>(cur->coords.size())) fail("vertex ids must be 0,1,2,...");
            Coord x{};
            for (int i = 0; i < cur->dim; ++i)
                if (!(ls >> x[i])) fail("vertex needs dim coordinates");
            cur->coords.push_back(x);
            cur->graph.nv = static_cast<int>(cur->coords.size());
        } else if (word == "edge") {
            int u, v;
            double b;
            if (!(ls >> u >> v >> b)) fail("edge needs: u v beta");
            cur->graph.add_edge(u, v, b);
        } else if (word == "hyperplane") {
            Hyperplane h;
            if (!(ls >> h.axis >> h.sign >> h.level)) fail("hyperplane needs: axis sign level");
            if (h.sign != 1 && h.sign != -1) fail("hyperplane sign must be +1 or -1");
            cur->hyperplane = h;
        } else if (word == "blocks") {
            if (!(ls >> cur->blocks) || cur->blocks < 1) fail("bad block count");
            cur->J.assign(cur->blocks, std::vector<double>(cur->blocks, 0.0));
            cur->Q.assign(cur->blocks, 0.0);
        } else if (word == "J") {
            int i, j;
            double v;
            if (!(ls >> i >> j >> v)) fail("J needs: i j value");
            if (i < 0 || j < 0 || i >= cur->blocks || j >= cur->blocks) fail("J index out of range");
            cur->J[i][j] = v;
            cur->J[j][i] = v;
        } else if (word == "Q") {
            int i;
            double v;
            if (!(ls >> i >> v)) fail("Q needs: i value");
            if (i < 0 || i >= cur->blocks) fail("Q index out of range");
            cur->Q[i] = v;
        } else if (word == "gs_beta") {
            if (!(ls >> cur->gs_beta)) fail("gs_beta needs a value");
        } else if (word == "correlation") {
            int u, v;
            if (!(ls >> u >> v)) fail("correlation needs: u v");
            cur->correlations.push_back({u, v});
        } else {
            fail("unknown directive '" + word + "'");
        }
    }
    if (cur) throw parse_error("unterminated fixture block (missing 'end')");
    return out;
}

inline std::vector<Fixture> load_fixture_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw parse_error("cannot open fixture file " + path.string());
    return parse_fixtures(in);
}

}  // namespace rclb
