#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "rclb/core.hpp"
#include "rclb/lattice.hpp"

namespace rclb {

struct TableProvenance {
    std::string model = "synthetic";    // ising | phi4 | gs-block | synthetic
    std::string source = "synthetic";   // exact | mc | synthetic
    std::string boundary = "none";      // free | periodic | none
    double beta = 0.0;
    std::uint64_t seed = 0;
    std::string notes;
};

/// Two-point function indexed by displacement, with per-entry variance of the
/// mean and sample counts. Entries cover the range box {|x_i| <= range_i}.
/// Named per-batch scalar series (chi_n, B_n, theorem-1.1 sums, ...) computed
/// at accumulation time ride along for uncertainty estimation.
class TwoPointTable {
  public:
    TwoPointTable() = default;
    TwoPointTable(int d, std::array<int, kMaxDim> range) : d_(d), range_(range) {
        if (d < 1 || d > kMaxDim) throw invalid_argument_error("table dimension out of range");
        std::size_t n = 1;
        for (int i = 0; i < d; ++i) n *= 2 * static_cast<std::size_t>(range_[i]) + 1;
        est_.assign(n, 0.0);
        var_.assign(n, 0.0);
        count_.assign(n, 0.0);
    }

    static TwoPointTable cubic(int d, int range) {
        std::array<int, kMaxDim> r{};
        for (int i = 0; i < d; ++i) r[i] = range;
        return TwoPointTable(d, r);
    }

    int dim() const { return d_; }
    int range(int axis) const { return range_[axis]; }
    int min_range() const {
        int r = range_[0];
        for (int i = 1; i < d_; ++i) r = std::min(r, range_[i]);
        return r;
    }
    std::size_t size() const { return est_.size(); }

    bool in_range(const Coord& x) const {
        for (int i = 0; i < d_; ++i)
            if (std::abs(x[i]) > range_[i]) return false;
        return true;
    }

    std::size_t index(const Coord& x) const {
        std::size_t idx = 0;
        for (int i = 0; i < d_; ++i)
            idx = idx * (2 * static_cast<std::size_t>(range_[i]) + 1) + (x[i] + range_[i]);
        return idx;
    }

    Coord coord(std::size_t idx) const {
        Coord x{};
        for (int i = d_ - 1; i >= 0; --i) {
            std::size_t side = 2 * static_cast<std::size_t>(range_[i]) + 1;
            x[i] = static_cast<int>(idx % side) - range_[i];
            idx /= side;
        }
        return x;
    }

    double at(const Coord& x) const {
        if (!in_range(x))
            throw invalid_argument_error("table range exceeded at " + coord_str(x, d_));
        return est_[index(x)];
    }
    double var_at(const Coord& x) const {
        if (!in_range(x))
            throw invalid_argument_error("table range exceeded at " + coord_str(x, d_));
        return var_[index(x)];
    }
    double count_at(const Coord& x) const { return count_[index(x)]; }

    void set(const Coord& x, double value, double variance = 0.0, double count = 1.0) {
        if (!in_range(x))
            throw invalid_argument_error("table range exceeded at " + coord_str(x, d_));
        std::size_t i = index(x);
        est_[i] = value;
        var_[i] = variance;
        count_[i] = count;
    }

    std::vector<double>& values() { return est_; }
    const std::vector<double>& values() const { return est_; }
    std::vector<double>& variances() { return var_; }
    const std::vector<double>& variances() const { return var_; }
    std::vector<double>& counts() { return count_; }

    TableProvenance provenance;
    std::map<std::string, std::vector<double>> batch_series;

    /// Axis ray t(k e_axis) for k = 0..range, with variances.
    std::pair<std::vector<double>, std::vector<double>> axis_ray(int axis, int sign = +1) const {
        std::vector<double> v, s2;
        for (int k = 0; k <= range_[axis]; ++k) {
            Coord x{};
            x[axis] = sign * k;
            v.push_back(est_[index(x)]);
            s2.push_back(var_[index(x)]);
        }
        return {v, s2};
    }

    /// Deterministic digest of the table content, quoted by check reports.
    std::string content_digest() const {
        std::uint64_t h = 1469598103934665603ull;
        auto mix = [&h](std::uint64_t v) {
            h ^= v;
            h *= 1099511628211ull;
        };
        auto mixd = [&](double x) {
            std::uint64_t bits;
            __builtin_memcpy(&bits, &x, 8);
            mix(bits);
        };
        mix(static_cast<std::uint64_t>(d_));
        for (int i = 0; i < d_; ++i) mix(static_cast<std::uint64_t>(range_[i]));
        for (double v : est_) mixd(v);
        for (double v : var_) mixd(v);
        mixd(provenance.beta);
        mix(provenance.seed);
        char buf[20];
        std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
        return buf;
    }

    // -- persistence --------------------------------------------------------

    void write_csv(const std::filesystem::path& path) const {
        std::ofstream out(path, std::ios::binary);
        if (!out) throw parse_error("cannot open " + path.string() + " for writing");
        for (int i = 0; i < d_; ++i) out << "dx_" << (i + 1) << ",";
        out << "estimate,variance,count\n";
        for (std::size_t i = 0; i < est_.size(); ++i) {
            Coord x = coord(i);
            for (int a = 0; a < d_; ++a) out << x[a] << ",";
            out << format_double(est_[i]) << "," << format_double(var_[i]) << ","
                << format_double(count_[i]) << "\n";
        }
    }

    nlohmann::json sidecar_json() const {
        nlohmann::json j;
        j["schema"] = "rclb.table/1";
        j["code_version"] = kVersion;
        j["d"] = d_;
        std::vector<int> r(range_.begin(), range_.begin() + d_);
        j["range"] = r;
        j["provenance"] = {{"model", provenance.model},     {"source", provenance.source},
                           {"boundary", provenance.boundary}, {"beta", provenance.beta},
                           {"seed", provenance.seed},         {"notes", provenance.notes}};
        nlohmann::json series = nlohmann::json::object();
        for (const auto& [name, vals] : batch_series) series[name] = vals;
        j["batch_series"] = series;
        return j;
    }

    void write_sidecar(const std::filesystem::path& path) const {
        std::ofstream out(path, std::ios::binary);
        if (!out) throw parse_error("cannot open " + path.string() + " for writing");
        out << sidecar_json().dump(2) << "\n";
    }

    static TwoPointTable read(const std::filesystem::path& csv_path,
                              const std::filesystem::path& sidecar_path) {
        std::ifstream meta(sidecar_path);
        if (!meta) throw parse_error("cannot open " + sidecar_path.string());
        nlohmann::json j = nlohmann::json::parse(meta);
        int d = j.at("d").get<int>();
        std::array<int, kMaxDim> range{};
        auto r = j.at("range").get<std::vector<int>>();
        for (int i = 0; i < d; ++i) range[i] = r.at(i);
        TwoPointTable t(d, range);
        const auto& p = j.at("provenance");
        t.provenance = {p.at("model"),    p.at("source"), p.at("boundary"),
                        p.at("beta"),     p.at("seed"),   p.at("notes")};
        for (const auto& [name, vals] : j.at("batch_series").items())
            t.batch_series[name] = vals.get<std::vector<double>>();

        std::ifstream in(csv_path);
        if (!in) throw parse_error("cannot open " + csv_path.string());
        std::string line;
        std::getline(in, line);  // header
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            std::istringstream row(line);
            std::string cell;
            Coord x{};
            for (int i = 0; i < d; ++i) {
                std::getline(row, cell, ',');
                x[i] = std::stoi(cell);
            }
            std::getline(row, cell, ',');
            double est = std::stod(cell);
            std::getline(row, cell, ',');
            double var = std::stod(cell);
            std::getline(row, cell, ',');
            double cnt = std::stod(cell);
            t.set(x, est, var, cnt);
        }
        return t;
    }

  private:
    int d_ = 0;
    std::array<int, kMaxDim> range_{};
    std::vector<double> est_, var_, count_;
};

/// Synthetic table t(x) = f(x) with zero variance; the workhorse of the
/// structural check tests.
template <class F>
TwoPointTable synthetic_table(int d, int range, F&& f) {
    TwoPointTable t = TwoPointTable::cubic(d, range);
    t.provenance.model = "synthetic";
    t.provenance.source = "synthetic";
    for (std::size_t i = 0; i < t.size(); ++i) {
        Coord x = t.coord(i);
        t.values()[i] = f(x);
        t.counts()[i] = 1.0;
    }
    return t;
}

}  // namespace rclb
