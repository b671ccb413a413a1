#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "rclb/core.hpp"
#include "rclb/manifest.hpp"
#include "rclb/samplers.hpp"

namespace rclb {

// Declarative experiment description. Plain-text section/key files are the
// primary encoding (diff-friendly provenance); JSON with the same nesting is
// accepted as an alternative. The schema is closed: unknown sections or keys
// are rejected with their full path.

struct ExperimentConfig {
    // [experiment]
    std::string name = "experiment";
    std::string model = "ising";     // ising | phi4 | gs-block
    int d = 2;
    int extent = 16;                 // periodic extent L, or free-box side 2r+1 via radius
    int radius = 0;                  // used when boundary = free (box radius)
    std::string boundary = "periodic";
    std::vector<double> betas;
    double beta_c = 0.0;             // literature input, configuration only
    std::string output = "artifacts";

    // [sampler]
    SamplerConfig sampler;

    // [phi4]
    double g = 1.0, a = 0.0;

    // [gs]
    int gs_N = 1;
    std::vector<std::vector<double>> gs_J{{0.0}};
    std::vector<double> gs_Q{1.0};

    // [observables]
    int max_range = 0;  // 0 = auto (extent/2 - 1, capped)
    std::vector<int> chi_n, bubble_n;
    std::vector<double> xi_p_list;
    bool eta_fit = false;
    int eta_window_lo = 4, eta_window_hi = 16;
    bool correlation_length = false;
    bool sharp_length = false;
    int sharp_k_max = 6;
    std::vector<double> sharp_thresholds{0.5, 0.25};

    // [checks]
    std::vector<int> theorem11_n, theorem12_n, lemma24_n;
    bool mms = false, ir = false, simon = false, bubble_check = false;
    bool envelope = false;
    int envelope_radius = 2;
    double c0 = 0.0;

    nlohmann::json canonical;  // the validated, typed document
    std::string hash() const { return sha256_hex(canonical.dump()); }
};

namespace detail {

struct KeySpec {
    const char* section;
    const char* key;
    const char* type;  // string | int | uint | double | bool | ints | doubles | matrix
    bool required = false;
};

inline const std::vector<KeySpec>& config_schema() {
    static const std::vector<KeySpec> schema = {
        {"experiment", "name", "string"},
        {"experiment", "model", "string", true},
        {"experiment", "d", "int", true},
        {"experiment", "extent", "int"},
        {"experiment", "radius", "int"},
        {"experiment", "boundary", "string"},
        {"experiment", "beta", "doubles", true},
        {"experiment", "beta_c", "double"},
        {"experiment", "output", "string"},
        {"sampler", "algorithm", "string"},
        {"sampler", "thermalization", "int"},
        {"sampler", "sweeps", "int"},
        {"sampler", "stride", "int"},
        {"sampler", "batches", "int"},
        {"sampler", "chains", "int"},
        {"sampler", "seed", "uint", true},
        {"sampler", "checkpoint_every", "int"},
        {"phi4", "g", "double"},
        {"phi4", "a", "double"},
        {"gs", "N", "int"},
        {"gs", "J", "matrix"},
        {"gs", "Q", "doubles"},
        {"observables", "max_range", "int"},
        {"observables", "chi_n", "ints"},
        {"observables", "bubble_n", "ints"},
        {"observables", "xi_p", "doubles"},
        {"observables", "eta_fit", "bool"},
        {"observables", "eta_window", "ints"},
        {"observables", "correlation_length", "bool"},
        {"observables", "sharp_length", "bool"},
        {"observables", "sharp_k_max", "int"},
        {"observables", "sharp_thresholds", "doubles"},
        {"checks", "theorem11_n", "ints"},
        {"checks", "theorem12_n", "ints"},
        {"checks", "lemma24_n", "ints"},
        {"checks", "mms", "bool"},
        {"checks", "ir", "bool"},
        {"checks", "simon", "bool"},
        {"checks", "bubble", "bool"},
        {"checks", "envelope", "bool"},
        {"checks", "envelope_radius", "int"},
        {"checks", "c0", "double"},
    };
    return schema;
}

inline std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r\n");
    auto e = s.find_last_not_of(" \t\r\n");
    return b == std::string::npos ? "" : s.substr(b, e - b + 1);
}

inline std::string strip_quotes(std::string v) {
    if (v.size() >= 2 && ((v.front() == '"' && v.back() == '"') ||
                          (v.front() == '\'' && v.back() == '\'')))
        return v.substr(1, v.size() - 2);
    return v;
}

/// Section/key text -> raw string map keyed "section.key".
inline std::map<std::string, std::string> parse_ini(std::istream& in) {
    std::map<std::string, std::string> raw;
    std::string line, section;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto t = trim(line);
        if (t.empty() || t[0] == '#' || t[0] == ';') continue;
        if (t.front() == '[') {
            if (t.back() != ']')
                throw parse_error("config line " + std::to_string(lineno) + ": malformed section");
            section = trim(t.substr(1, t.size() - 2));
            continue;
        }
        auto eq = t.find('=');
        if (eq == std::string::npos)
            throw parse_error("config line " + std::to_string(lineno) + ": expected key = value");
        if (section.empty())
            throw parse_error("config line " + std::to_string(lineno) + ": key outside a section");
        std::string key = trim(t.substr(0, eq));
        std::string val = strip_quotes(trim(t.substr(eq + 1)));
        raw[section + "." + key] = val;
    }
    return raw;
}

inline std::vector<std::string> split_list(const std::string& s, char sep = ',') {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == sep) {
            out.push_back(trim(cur));
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    if (!trim(cur).empty() || !out.empty()) out.push_back(trim(cur));
    while (!out.empty() && out.back().empty()) out.pop_back();
    return out;
}

inline nlohmann::json coerce(const std::string& path, const std::string& type,
                             const std::string& val) {
    try {
        if (type == std::string("string")) return val;
        if (type == std::string("int")) return std::stol(val);
        if (type == std::string("uint")) return std::stoull(val);
        if (type == std::string("double")) return std::stod(val);
        if (type == std::string("bool")) {
            if (val == "true" || val == "1" || val == "yes") return true;
            if (val == "false" || val == "0" || val == "no") return false;
            throw parse_error("not a bool");
        }
        if (type == std::string("ints")) {
            std::vector<long> v;
            for (const auto& x : split_list(val))
                if (!x.empty()) v.push_back(std::stol(x));
            return v;
        }
        if (type == std::string("doubles")) {
            std::vector<double> v;
            for (const auto& x : split_list(val))
                if (!x.empty()) v.push_back(std::stod(x));
            return v;
        }
        if (type == std::string("matrix")) {
            // rows separated by ';', entries by whitespace or comma
            std::vector<std::vector<double>> rows;
            for (const auto& rowtxt : split_list(val, ';')) {
                std::vector<double> row;
                std::istringstream rs(rowtxt);
                std::string cell;
                while (rs >> cell) {
                    if (!cell.empty() && cell.back() == ',') cell.pop_back();
                    row.push_back(std::stod(cell));
                }
                if (!row.empty()) rows.push_back(row);
            }
            return rows;
        }
    } catch (const parse_error&) {
        throw;
    } catch (const std::exception&) {
        throw parse_error("config key " + path + ": cannot parse '" + val + "' as " + type);
    }
    throw parse_error("config key " + path + ": unknown type " + type);
}

}  // namespace detail

/// Validates a raw (string or typed-json) document against the closed schema
/// and produces the typed canonical form. Unknown keys are rejected by path.
inline nlohmann::json validate_config_document(const nlohmann::json& doc) {
    using detail::config_schema;
    nlohmann::json canon = nlohmann::json::object();
    std::map<std::string, const detail::KeySpec*> by_path;
    for (const auto& spec : config_schema())
        by_path[std::string(spec.section) + "." + spec.key] = &spec;

    for (const auto& [section, body] : doc.items()) {
        if (!body.is_object())
            throw parse_error("config section '" + section + "' must be a table of keys");
        for (const auto& [key, value] : body.items()) {
            std::string path = section + "." + key;
            auto it = by_path.find(path);
            if (it == by_path.end()) throw parse_error("unknown config key: " + path);
            const auto& spec = *it->second;
            nlohmann::json typed;
            if (value.is_string()) {
                typed = detail::coerce(path, spec.type, value.get<std::string>());
            } else {
                // Typed JSON input: check shape loosely, normalize scalars to lists
                // where the schema wants lists.
                std::string ty = spec.type;
                if ((ty == "ints" || ty == "doubles") && value.is_number()) {
                    typed = nlohmann::json::array({value});
                } else {
                    typed = value;
                }
            }
            canon[section][key] = typed;
        }
    }
    for (const auto& spec : config_schema()) {
        if (!spec.required) continue;
        if (!canon.contains(spec.section) || !canon[spec.section].contains(spec.key))
            throw parse_error(std::string("missing required config key: ") + spec.section + "." +
                              spec.key);
    }
    return canon;
}

inline ExperimentConfig config_from_canonical(nlohmann::json canon) {
    ExperimentConfig c;
    auto get = [&](const char* sec, const char* key, auto dflt) {
        using T = decltype(dflt);
        if (canon.contains(sec) && canon[sec].contains(key)) return canon[sec][key].get<T>();
        return dflt;
    };
    c.name = get("experiment", "name", std::string("experiment"));
    c.model = get("experiment", "model", std::string("ising"));
    c.d = static_cast<int>(get("experiment", "d", 2L));
    c.extent = static_cast<int>(get("experiment", "extent", 16L));
    c.radius = static_cast<int>(get("experiment", "radius", 0L));
    c.boundary = get("experiment", "boundary", std::string("periodic"));
    c.betas = get("experiment", "beta", std::vector<double>{});
    c.beta_c = get("experiment", "beta_c", 0.0);
    c.output = get("experiment", "output", std::string("artifacts"));

    c.sampler.algorithm = get("sampler", "algorithm", std::string("cluster-flip"));
    c.sampler.thermalization = get("sampler", "thermalization", 200L);
    c.sampler.sweeps = get("sampler", "sweeps", 1000L);
    c.sampler.stride = static_cast<int>(get("sampler", "stride", 1L));
    c.sampler.batches = static_cast<int>(get("sampler", "batches", 20L));
    c.sampler.chains = static_cast<int>(get("sampler", "chains", 2L));
    if (canon.contains("sampler") && canon["sampler"].contains("seed")) {
        c.sampler.seed = canon["sampler"]["seed"].get<std::uint64_t>();
        c.sampler.seeded = true;
    }
    c.sampler.checkpoint_every = get("sampler", "checkpoint_every", 0L);

    c.g = get("phi4", "g", 1.0);
    c.a = get("phi4", "a", 0.0);
    c.sampler.g = c.g;
    c.sampler.a = c.a;

    c.gs_N = static_cast<int>(get("gs", "N", 1L));
    c.gs_J = get("gs", "J", std::vector<std::vector<double>>{{0.0}});
    c.gs_Q = get("gs", "Q", std::vector<double>{1.0});

    c.max_range = static_cast<int>(get("observables", "max_range", 0L));
    for (long n : get("observables", "chi_n", std::vector<long>{})) c.chi_n.push_back(n);
    for (long n : get("observables", "bubble_n", std::vector<long>{})) c.bubble_n.push_back(n);
    c.xi_p_list = get("observables", "xi_p", std::vector<double>{});
    c.eta_fit = get("observables", "eta_fit", false);
    auto win = get("observables", "eta_window", std::vector<long>{4, 16});
    if (win.size() == 2) {
        c.eta_window_lo = static_cast<int>(win[0]);
        c.eta_window_hi = static_cast<int>(win[1]);
    }
    c.correlation_length = get("observables", "correlation_length", false);
    c.sharp_length = get("observables", "sharp_length", false);
    c.sharp_k_max = static_cast<int>(get("observables", "sharp_k_max", 6L));
    c.sharp_thresholds = get("observables", "sharp_thresholds", std::vector<double>{0.5, 0.25});

    for (long n : get("checks", "theorem11_n", std::vector<long>{})) c.theorem11_n.push_back(n);
    for (long n : get("checks", "theorem12_n", std::vector<long>{})) c.theorem12_n.push_back(n);
    for (long n : get("checks", "lemma24_n", std::vector<long>{})) c.lemma24_n.push_back(n);
    c.mms = get("checks", "mms", false);
    c.ir = get("checks", "ir", false);
    c.simon = get("checks", "simon", false);
    c.bubble_check = get("checks", "bubble", false);
    c.envelope = get("checks", "envelope", false);
    c.envelope_radius = static_cast<int>(get("checks", "envelope_radius", 2L));
    c.c0 = get("checks", "c0", 0.0);

    c.canonical = std::move(canon);

    // Cross-field validation with key paths.
    if (c.model != "ising" && c.model != "phi4" && c.model != "gs-block")
        throw parse_error("experiment.model: must be ising | phi4 | gs-block");
    if (c.d < 2 || c.d > kMaxDim) throw parse_error("experiment.d: must be in [2,5]");
    if (c.boundary != "periodic" && c.boundary != "free")
        throw parse_error("experiment.boundary: must be periodic | free");
    if (c.betas.empty()) throw parse_error("experiment.beta: at least one value required");
    for (double b : c.betas)
        if (b < 0) throw parse_error("experiment.beta: values must be >= 0");
    if (c.boundary == "periodic" && c.extent < 4)
        throw parse_error("experiment.extent: periodic extent must be >= 4");
    if (c.boundary == "free" && c.radius < 1)
        throw parse_error("experiment.radius: free boundary needs radius >= 1");
    if (c.model == "phi4" && c.g <= 0) throw parse_error("phi4.g: must be > 0");
    c.sampler.validate();
    return c;
}

inline ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw parse_error("cannot open config " + path.string());
    nlohmann::json doc;
    if (path.extension() == ".json") {
        doc = nlohmann::json::parse(in);
    } else {
        auto raw = detail::parse_ini(in);
        doc = nlohmann::json::object();
        for (const auto& [path_key, val] : raw) {
            auto dot = path_key.find('.');
            doc[path_key.substr(0, dot)][path_key.substr(dot + 1)] = val;
        }
    }
    return config_from_canonical(validate_config_document(doc));
}

}  // namespace rclb
