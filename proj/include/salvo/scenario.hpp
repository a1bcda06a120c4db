#pragma once

// Scenario files: human-editable JSON with explicit units in field names.
// Angles are degrees at this boundary only; everything downstream of
// ScenarioConfig::* accessors is radians and SI.

#include <json.hpp>

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "salvo/engagement.hpp"
#include "salvo/graph.hpp"

namespace salvo {

class ParseError : public std::runtime_error {
public:
    explicit ParseError(const std::string& msg) : std::runtime_error(msg) {}
};

class ValidationError : public std::runtime_error {
public:
    explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

struct InterceptorConfig {
    double r0_m = 0.0;
    double theta0_deg = 0.0;
    double gammaM0_deg = 0.0;
    double V_M_mps = 0.0;
};

struct ScenarioConfig {
    int n = 0;
    std::vector<EdgePair> edges;
    std::vector<InterceptorConfig> interceptors;
    double V_T_mps = 0.0;
    double gammaT_deg = 0.0;
    EngagementParams engagement;          // defaults applied at load
    std::vector<std::string> overrides;   // optional "w:i:j:dir=value" entries

    PseudoUndirectedGraph graph() const {
        return PseudoUndirectedGraph(n, edges);
    }

    std::vector<InterceptorInit> interceptor_inits() const {
        std::vector<InterceptorInit> out;
        out.reserve(interceptors.size());
        for (const auto& ic : interceptors)
            out.push_back({ic.r0_m, ic.theta0_deg * M_PI / 180.0,
                           ic.gammaM0_deg * M_PI / 180.0, ic.V_M_mps});
        return out;
    }

    double gammaT_rad() const { return gammaT_deg * M_PI / 180.0; }
};

namespace detail {

inline double require_number(const nlohmann::ordered_json& j, const std::string& key) {
    if (!j.contains(key))
        throw ParseError("missing field '" + key + "'");
    if (!j[key].is_number())
        throw ParseError("field '" + key + "' must be a number");
    return j[key].get<double>();
}

inline double optional_number(const nlohmann::ordered_json& j, const std::string& key,
                              double fallback) {
    if (!j.contains(key)) return fallback;
    if (!j[key].is_number())
        throw ParseError("field '" + key + "' must be a number");
    return j[key].get<double>();
}

}  // namespace detail

// Mutates one directed weight. Syntax: w:<i>:<j>:<ij|ji>=<value>, vertices as
// written in the graph section (any order; ij always means the i->j weight).
inline void apply_override(ScenarioConfig& cfg, const std::string& spec) {
    const auto bad = [&](const std::string& why) {
        throw ParseError("override '" + spec + "': " + why +
                         " (expected w:<i>:<j>:<ij|ji>=<value>)");
    };
    const auto eq = spec.find('=');
    if (eq == std::string::npos) bad("missing '='");
    const std::string lhs = spec.substr(0, eq);
    const std::string rhs = spec.substr(eq + 1);
    std::vector<std::string> parts;
    std::stringstream ss(lhs);
    for (std::string tok; std::getline(ss, tok, ':');) parts.push_back(tok);
    if (parts.size() != 4 || parts[0] != "w") bad("malformed key");
    int i = 0, j = 0;
    double value = 0.0;
    try {
        i = std::stoi(parts[1]);
        j = std::stoi(parts[2]);
        value = std::stod(rhs);
    } catch (const std::exception&) {
        bad("non-numeric vertex or value");
    }
    if (parts[3] != "ij" && parts[3] != "ji") bad("direction must be ij or ji");
    if (parts[3] == "ji") std::swap(i, j);
    // Now (i,j) names the directed edge whose weight changes; the pair may be
    // stored in either orientation.
    for (EdgePair& e : cfg.edges) {
        if (e.i == i && e.j == j) {
            e.w_ij = value;
            return;
        }
        if (e.i == j && e.j == i) {
            e.w_ji = value;
            return;
        }
    }
    throw ValidationError("override '" + spec + "' names an edge pair not in the graph");
}

inline ScenarioConfig parse_scenario(const nlohmann::ordered_json& root) {
    ScenarioConfig cfg;
    if (!root.is_object()) throw ParseError("scenario root must be an object");
    if (!root.contains("graph") || !root["graph"].is_object())
        throw ParseError("missing 'graph' section");
    const auto& g = root["graph"];
    if (!g.contains("n") || !g["n"].is_number_integer())
        throw ParseError("graph section needs an integer 'n'");
    cfg.n = g["n"].get<int>();
    if (!g.contains("edges") || !g["edges"].is_array() || g["edges"].empty())
        throw ParseError("graph section needs a non-empty 'edges' array");
    for (const auto& row : g["edges"]) {
        if (!row.is_array() || row.size() != 4)
            throw ParseError("each edge must be [i, j, w_ij, w_ji]");
        cfg.edges.push_back({row[0].get<int>(), row[1].get<int>(),
                             row[2].get<double>(), row[3].get<double>()});
    }

    if (!root.contains("interceptors") || !root["interceptors"].is_array())
        throw ParseError("missing 'interceptors' array");
    for (const auto& row : root["interceptors"]) {
        InterceptorConfig ic;
        ic.r0_m = detail::require_number(row, "r0_m");
        ic.theta0_deg = detail::require_number(row, "theta0_deg");
        ic.gammaM0_deg = detail::require_number(row, "gammaM0_deg");
        ic.V_M_mps = detail::require_number(row, "V_M_mps");
        cfg.interceptors.push_back(ic);
    }

    if (!root.contains("target") || !root["target"].is_object())
        throw ParseError("missing 'target' section");
    cfg.V_T_mps = detail::require_number(root["target"], "V_T_mps");
    cfg.gammaT_deg = detail::require_number(root["target"], "gammaT_deg");

    const nlohmann::ordered_json eng =
        root.contains("engagement") ? root["engagement"] : nlohmann::ordered_json::object();
    cfg.engagement.a_max_g = detail::optional_number(eng, "a_max_g", 40.0);
    cfg.engagement.capture_radius_m =
        detail::optional_number(eng, "capture_radius_m", 1.0);
    cfg.engagement.sync_tol_s = detail::optional_number(eng, "sync_tol_s", 0.1);
    cfg.engagement.dt_s = detail::optional_number(eng, "dt_s", 1e-3);
    cfg.engagement.t_max_s = detail::optional_number(eng, "t_max_s", 600.0);

    if (root.contains("analysis")) {
        const auto& an = root["analysis"];
        if (an.contains("overrides")) {
            if (!an["overrides"].is_array())
                throw ParseError("'analysis.overrides' must be an array of strings");
            for (const auto& s : an["overrides"])
                cfg.overrides.push_back(s.get<std::string>());
        }
    }
    return cfg;
}

// Re-validates every module precondition at the boundary.
inline void validate_scenario(const ScenarioConfig& cfg) {
    try {
        const PseudoUndirectedGraph g = cfg.graph();  // graph invariants
        if (static_cast<int>(cfg.interceptors.size()) != g.n())
            throw ValidationError("interceptor count (" +
                                  std::to_string(cfg.interceptors.size()) +
                                  ") must equal vertex count (" +
                                  std::to_string(g.n()) + ")");
    } catch (const GraphError& e) {
        throw ValidationError(e.what());
    }
    for (const auto& ic : cfg.interceptors) {
        if (ic.r0_m <= 0.0) throw ValidationError("initial range must be positive");
        if (ic.V_M_mps <= cfg.V_T_mps)
            throw ValidationError("interceptor must be faster than target");
    }
    if (cfg.V_T_mps < 0.0) throw ValidationError("target speed must be >= 0");
    const EngagementParams& p = cfg.engagement;
    if (p.dt_s <= 0.0) throw ValidationError("dt_s must be positive");
    if (p.t_max_s <= 0.0) throw ValidationError("t_max_s must be positive");
    if (p.a_max_g <= 0.0) throw ValidationError("a_max_g must be positive");
    if (p.capture_radius_m <= 0.0)
        throw ValidationError("capture_radius_m must be positive");
    if (p.sync_tol_s <= 0.0) throw ValidationError("sync_tol_s must be positive");
}

// Loads, applies any file-level overrides, validates.
inline ScenarioConfig load_scenario(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open scenario file '" + path + "'");
    nlohmann::ordered_json root;
    try {
        root = nlohmann::ordered_json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError("scenario file '" + path + "': " + e.what());
    }
    ScenarioConfig cfg = parse_scenario(root);
    for (const std::string& ov : cfg.overrides) apply_override(cfg, ov);
    validate_scenario(cfg);
    return cfg;
}

inline nlohmann::ordered_json to_json(const ScenarioConfig& cfg) {
    nlohmann::ordered_json root;
    root["graph"]["n"] = cfg.n;
    auto& edges = root["graph"]["edges"] = nlohmann::ordered_json::array();
    for (const EdgePair& e : cfg.edges)
        edges.push_back({e.i, e.j, e.w_ij, e.w_ji});
    auto& ics = root["interceptors"] = nlohmann::ordered_json::array();
    for (const auto& ic : cfg.interceptors)
        ics.push_back({{"r0_m", ic.r0_m},
                       {"theta0_deg", ic.theta0_deg},
                       {"gammaM0_deg", ic.gammaM0_deg},
                       {"V_M_mps", ic.V_M_mps}});
    root["target"] = {{"V_T_mps", cfg.V_T_mps}, {"gammaT_deg", cfg.gammaT_deg}};
    root["engagement"] = {{"a_max_g", cfg.engagement.a_max_g},
                          {"capture_radius_m", cfg.engagement.capture_radius_m},
                          {"sync_tol_s", cfg.engagement.sync_tol_s},
                          {"dt_s", cfg.engagement.dt_s},
                          {"t_max_s", cfg.engagement.t_max_s}};
    if (!cfg.overrides.empty()) {
        auto& ovs = root["analysis"]["overrides"] = nlohmann::ordered_json::array();
        for (const std::string& s : cfg.overrides) ovs.push_back(s);
    }
    return root;
}

inline void save_scenario(const ScenarioConfig& cfg, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ParseError("cannot write scenario file '" + path + "'");
    out << to_json(cfg).dump(2) << "\n";
}

// Shortest round-trip decimal form; identical numbers always format to the
// same bytes, which keeps CSV output reproducible across runs.
inline std::string format_double(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

}  // namespace salvo
