#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "polydg/convergence.hpp"
#include "polydg/errors.hpp"
#include "polydg/solver.hpp"

namespace polydg {

/// Mesh sizes and time steps may be written as numbers or as "1/16".
inline double parse_size(const nlohmann::json& v, const std::string& field)
{
    if (v.is_number()) return v.get<double>();
    if (v.is_string()) {
        const std::string s = v.get<std::string>();
        const auto slash = s.find('/');
        try {
            if (slash == std::string::npos) return std::stod(s);
            return std::stod(s.substr(0, slash)) / std::stod(s.substr(slash + 1));
        } catch (const std::exception&) {
        }
    }
    throw ParseError(field + ": expected a number or a fraction such as \"1/16\", got " + v.dump());
}

/// 64-bit FNV-1a as 16 hex digits.
inline std::string fnv1a_hex(const std::string& text)
{
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    std::ostringstream o;
    o << std::hex << std::setw(16) << std::setfill('0') << h;
    return o.str();
}

/// Acceptance gate on the orders of a study.
///   scope "finest": only the last order is checked
///   scope "all":    every order whose row size is <= max_size is checked
struct GateSpec {
    std::optional<OrderGate> l2;
    std::optional<OrderGate> h1;
    std::string scope = "finest";
    double max_size = 1e300;

    bool empty() const { return !l2 && !h1; }
};

struct GateOutcome {
    bool pass = true;
    nlohmann::json detail = nlohmann::json::array();
};

inline GateOutcome evaluate_gate(const GateSpec& g, const ConvergenceTable& t)
{
    GateOutcome out;
    auto check = [&](const char* norm, const OrderGate& gate, std::optional<double> order, double size) {
        const bool ok = gate.check(order);
        out.pass = out.pass && ok;
        out.detail.push_back({{"norm", norm},
                              {"size", format_size(size)},
                              {"order", order ? nlohmann::json(*order) : nlohmann::json(nullptr)},
                              {"range", {gate.lo, gate.hi}},
                              {"pass", ok}});
    };
    const auto& rows = t.rows();
    if (rows.size() < 2) {
        out.pass = g.empty();
        return out;
    }
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const bool last = i + 1 == rows.size();
        if (g.scope == "finest" ? !last : rows[i].size > g.max_size * (1.0 + 1e-12)) continue;
        if (g.l2) check("l2", *g.l2, rows[i].l2_order, rows[i].size);
        if (g.h1) check("h1", *g.h1, rows[i].h1_order, rows[i].size);
    }
    return out;
}

/// One study as read from a JSON config file.
struct StudyConfig {
    std::string study = "convergence"; ///< convergence | temporal | stability | solve
    std::string title;
    ExampleId example = ExampleId::example1;
    MeshFamily family = MeshFamily::nonconvex;
    int k = 1;
    double theta = 0.125;
    double T = 1.0;
    ModelParams params;
    std::optional<double> penalty; ///< absent: preset_penalty(family, k)
    std::vector<double> hs;        ///< convergence levels
    double h = 0.0;                ///< single mesh for temporal, stability and solve
    std::vector<double> taus;      ///< temporal levels
    double tau = 0.0;              ///< fixed step; 0 selects default_fine_tau in spatial studies
    bool zero_source = false;
    FamilyOptions mesh;
    SolverOptions solver;
    GateSpec gate;

    double resolved_penalty() const { return penalty ? *penalty : preset_penalty(family, k); }

    RunSetup setup() const
    {
        RunSetup s;
        s.example = example;
        s.family = family;
        s.k = k;
        s.theta = theta;
        s.T = T;
        s.params = params;
        s.penalty = resolved_penalty();
        s.mesh = mesh;
        s.solver = solver;
        return s;
    }

    void validate() const
    {
        if (k < 1 || k > 3) throw InvalidParameter("k must be 1, 2 or 3");
        stencils(theta);
        params.validate();
        if (!(T > 0.0)) throw InvalidParameter("T must be positive");
        if (penalty && !(*penalty > 0.0)) throw InvalidParameter("penalty must be positive");
        if (example == ExampleId::example2 && family != MeshFamily::disk)
            throw InvalidParameter("example2 lives on the unit disk; use the disk family");
        if (example == ExampleId::example1 && family == MeshFamily::disk)
            throw InvalidParameter("example1 lives on the unit square; the disk family does not fit");
        if (study == "convergence" && hs.empty()) throw InvalidParameter("convergence study needs \"h\" levels");
        if (study == "temporal" && (taus.empty() || !(h > 0.0)))
            throw InvalidParameter("temporal study needs a mesh size \"h\" and \"tau\" levels");
        if ((study == "stability" || study == "solve") && (!(h > 0.0) || !(tau > 0.0)))
            throw InvalidParameter(study + " needs a mesh size \"h\" and a time step \"tau\"");
    }

    nlohmann::json to_json() const
    {
        nlohmann::json j;
        j["study"] = study;
        if (!title.empty()) j["title"] = title;
        j["example"] = to_string(example);
        j["family"] = to_string(family);
        j["k"] = k;
        j["theta"] = theta;
        j["T"] = T;
        j["params"] = {{"nu", params.nu}, {"alpha", params.alpha}, {"kappa", params.kappa},
                       {"beta", params.beta}, {"gamma", params.gamma}};
        j["penalty"] = resolved_penalty();
        if (!hs.empty()) j["h"] = hs;
        else if (h > 0.0) j["h"] = h;
        if (!taus.empty()) j["tau"] = taus;
        else if (tau > 0.0) j["tau"] = tau;
        j["zero_source"] = zero_source;
        j["mesh"] = {{"seed", mesh.seed}, {"lloyd_iters", mesh.lloyd_iters}};
        j["solver"] = {{"preconditioner", to_string(solver.preconditioner)},
                       {"tol", solver.tol},
                       {"max_iters", solver.max_iters},
                       {"restart", solver.restart}};
        if (!gate.empty()) {
            auto& g = j["gate"];
            if (gate.l2) g["l2"] = {gate.l2->lo, gate.l2->hi};
            if (gate.h1) g["h1"] = {gate.h1->lo, gate.h1->hi};
            g["scope"] = gate.scope;
            if (gate.max_size < 1e300) g["max_size"] = gate.max_size;
        }
        return j;
    }

    /// Hash of the canonical dump of the resolved config.
    std::string hash() const { return fnv1a_hex(to_json().dump()); }
};

namespace detail {

inline OrderGate parse_range(const nlohmann::json& v, const std::string& field)
{
    if (!v.is_array() || v.size() != 2) throw ParseError(field + ": expected [lo, hi]");
    return {v[0].get<double>(), v[1].get<double>()};
}

template <class T>
T field_or(const nlohmann::json& j, const char* key, T fallback)
{
    if (!j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("field \"") + key + "\": " + e.what());
    }
}

} // namespace detail

inline StudyConfig config_from_json(const nlohmann::json& j)
{
    if (!j.is_object()) throw ParseError("config must be a JSON object");
    static const std::vector<std::string> known{"study", "title", "example", "family", "k", "theta", "T",
                                                "params", "penalty", "h", "tau", "zero_source", "mesh",
                                                "solver", "gate"};
    for (const auto& [key, _] : j.items())
        if (std::find(known.begin(), known.end(), key) == known.end()) throw ParseError("unknown config field \"" + key + "\"");

    StudyConfig c;
    try {
        c.study = detail::field_or<std::string>(j, "study", c.study);
        c.title = detail::field_or<std::string>(j, "title", "");
        if (j.contains("example")) {
            const auto& e = j.at("example");
            c.example = parse_example(e.is_number() ? std::to_string(e.get<int>()) : e.get<std::string>());
        }
        if (j.contains("family")) c.family = parse_family(j.at("family").get<std::string>());
        else if (c.example == ExampleId::example2) c.family = MeshFamily::disk;
        c.k = detail::field_or(j, "k", c.k);
        if (j.contains("theta")) c.theta = parse_size(j.at("theta"), "theta");
        c.T = detail::field_or(j, "T", c.T);
        if (j.contains("params")) {
            const auto& p = j.at("params");
            c.params.nu = detail::field_or(p, "nu", c.params.nu);
            c.params.alpha = detail::field_or(p, "alpha", c.params.alpha);
            c.params.kappa = detail::field_or(p, "kappa", c.params.kappa);
            c.params.beta = detail::field_or(p, "beta", c.params.beta);
            c.params.gamma = detail::field_or(p, "gamma", c.params.gamma);
        }
        if (j.contains("penalty") && !j.at("penalty").is_null()) c.penalty = j.at("penalty").get<double>();
        if (j.contains("h")) {
            const auto& h = j.at("h");
            if (h.is_array())
                for (const auto& v : h) c.hs.push_back(parse_size(v, "h"));
            else
                c.h = parse_size(h, "h");
        }
        if (j.contains("tau")) {
            const auto& t = j.at("tau");
            if (t.is_array())
                for (const auto& v : t) c.taus.push_back(parse_size(v, "tau"));
            else
                c.tau = parse_size(t, "tau");
        }
        c.zero_source = detail::field_or(j, "zero_source", false);
        if (j.contains("mesh")) {
            const auto& m = j.at("mesh");
            c.mesh.seed = detail::field_or<std::uint64_t>(m, "seed", c.mesh.seed);
            c.mesh.lloyd_iters = detail::field_or(m, "lloyd_iters", c.mesh.lloyd_iters);
        }
        if (j.contains("solver")) {
            const auto& s = j.at("solver");
            if (s.contains("preconditioner")) c.solver.preconditioner = parse_preconditioner(s.at("preconditioner").get<std::string>());
            c.solver.tol = detail::field_or(s, "tol", c.solver.tol);
            c.solver.max_iters = detail::field_or(s, "max_iters", c.solver.max_iters);
            c.solver.restart = detail::field_or(s, "restart", c.solver.restart);
        }
        if (j.contains("gate")) {
            const auto& g = j.at("gate");
            if (g.contains("l2")) c.gate.l2 = detail::parse_range(g.at("l2"), "gate.l2");
            if (g.contains("h1")) c.gate.h1 = detail::parse_range(g.at("h1"), "gate.h1");
            c.gate.scope = detail::field_or<std::string>(g, "scope", c.gate.scope);
            if (c.gate.scope != "finest" && c.gate.scope != "all") throw ParseError("gate.scope must be \"finest\" or \"all\"");
            if (g.contains("max_size")) c.gate.max_size = parse_size(g.at("max_size"), "gate.max_size");
        }
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("config: ") + e.what());
    } catch (const InvalidParameter& e) {
        throw ParseError(std::string("config: ") + e.what());
    }
    return c;
}

inline StudyConfig read_config(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open config " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(path + ": " + e.what());
    }
    try {
        return config_from_json(j);
    } catch (const ParseError& e) {
        throw ParseError(path + ": " + e.what());
    }
}

} // namespace polydg
