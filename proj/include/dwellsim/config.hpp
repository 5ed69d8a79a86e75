#pragma once

#include <fstream>
#include <set>
#include <sstream>
#include <string>

#include <json.hpp>

#include "dwellsim/scenario.hpp"

namespace dwellsim::config {

using nlohmann::json;

namespace detail {

inline std::string join(const std::string& base, const std::string& key) {
    return base.empty() ? key : base + "." + key;
}

/// Rejects keys of `obj` not in `allowed`.
inline void only_keys(const json& obj, const std::string& path, std::initializer_list<const char*> allowed) {
    if (!obj.is_object()) throw ConfigError("expected an object", path.empty() ? "<root>" : path);
    const std::set<std::string> ok(allowed.begin(), allowed.end());
    for (const auto& [k, v] : obj.items()) {
        if (!ok.count(k)) throw ConfigError("unknown key", join(path, k));
    }
}

inline const json& need(const json& obj, const std::string& path, const char* key) {
    if (!obj.contains(key)) throw ConfigError("missing required key", join(path, key));
    return obj.at(key);
}

inline double number(const json& v, const std::string& path) {
    if (!v.is_number()) throw ConfigError("expected a number", path);
    return v.get<double>();
}

inline double number_or(const json& obj, const std::string& path, const char* key, double fallback) {
    return obj.contains(key) ? number(obj.at(key), join(path, key)) : fallback;
}

inline bool boolean_or(const json& obj, const std::string& path, const char* key, bool fallback) {
    if (!obj.contains(key)) return fallback;
    if (!obj.at(key).is_boolean()) throw ConfigError("expected true or false", join(path, key));
    return obj.at(key).get<bool>();
}

inline std::string text(const json& v, const std::string& path) {
    if (!v.is_string()) throw ConfigError("expected a string", path);
    return v.get<std::string>();
}

inline StateVec vector(const json& v, const std::string& path) {
    if (!v.is_array()) throw ConfigError("expected an array of numbers", path);
    StateVec out(static_cast<Index>(v.size()));
    for (std::size_t i = 0; i < v.size(); ++i) out[static_cast<Index>(i)] = number(v[i], path + "[" + std::to_string(i) + "]");
    return out;
}

/// Scalar s → s·I, or a flat row-major array of n² entries.
inline Matrix matrix(const json& v, Index n, const std::string& path) {
    if (v.is_number()) return v.get<double>() * Matrix::Identity(n, n);
    const StateVec flat = vector(v, path);
    if (flat.size() != n * n) throw ConfigError("expected a scalar or " + std::to_string(n * n) + " entries", path);
    Matrix m(n, n);
    for (Index r = 0; r < n; ++r)
        for (Index c = 0; c < n; ++c) m(r, c) = flat[r * n + c];
    return m;
}

inline json flat(const Matrix& m) {
    json a = json::array();
    for (Index r = 0; r < m.rows(); ++r)
        for (Index c = 0; c < m.cols(); ++c) a.push_back(m(r, c));
    return a;
}

inline json array(const StateVec& v) {
    json a = json::array();
    for (double x : v) a.push_back(x);
    return a;
}

}  // namespace detail

/// Builds and validates a Scenario from a JSON document.
[[nodiscard]] inline Scenario from_json(const json& j) {
    using namespace detail;
    only_keys(j, "", {"n", "duration", "seed", "plant", "disturbance", "estimator", "controller", "budget",
                      "supervisor", "region", "path", "trajectory", "integrator", "initial"});
    Scenario s;
    const json& jn = need(j, "", "n");
    if (!jn.is_number_integer() || jn.get<long long>() <= 0) throw ConfigError("expected a positive integer", "n");
    s.n = jn.get<Index>();
    const Index n = s.n;
    s.duration = number(need(j, "", "duration"), "duration");
    if (j.contains("seed")) {
        if (!j["seed"].is_number_unsigned() && !(j["seed"].is_number_integer() && j["seed"].get<long long>() >= 0)) {
            throw ConfigError("expected a non-negative integer", "seed");
        }
        s.seed = j["seed"].get<std::uint64_t>();
    }

    {
        const json& p = need(j, "", "plant");
        only_keys(p, "plant", {"kind", "A", "lipschitz_c"});
        const std::string kind = text(need(p, "plant", "kind"), "plant.kind");
        if (kind == "linear") {
            s.plant = PlantModel::linear(matrix(need(p, "plant", "A"), n, "plant.A"));
            s.plant.lipschitz_c = number_or(p, "plant", "lipschitz_c", s.plant.lipschitz_c);
        } else if (kind == "single_integrator") {
            if (p.contains("A")) throw ConfigError("not used by the single integrator", "plant.A");
            s.plant = PlantModel::single_integrator(n);
            s.plant.lipschitz_c = number_or(p, "plant", "lipschitz_c", 0.0);
        } else {
            throw ConfigError("expected linear or single_integrator", "plant.kind");
        }
    }
    {
        const json& d = need(j, "", "disturbance");
        only_keys(d, "disturbance", {"kind", "range", "d_bar"});
        const std::string kind = text(need(d, "disturbance", "kind"), "disturbance.kind");
        s.disturbance.d_bar = number(need(d, "disturbance", "d_bar"), "disturbance.d_bar");
        if (kind == "uniform_box") {
            s.disturbance.kind = DisturbanceModel::Kind::UniformBox;
            const json& r = need(d, "disturbance", "range");
            if (!r.is_array() || static_cast<Index>(r.size()) != n) {
                throw ConfigError("expected n [lo, hi] pairs", "disturbance.range");
            }
            s.disturbance.lo.resize(n);
            s.disturbance.hi.resize(n);
            for (Index i = 0; i < n; ++i) {
                const std::string here = "disturbance.range[" + std::to_string(i) + "]";
                const StateVec pair = vector(r[static_cast<std::size_t>(i)], here);
                if (pair.size() != 2) throw ConfigError("expected [lo, hi]", here);
                s.disturbance.lo[i] = pair[0];
                s.disturbance.hi[i] = pair[1];
            }
        } else if (kind == "none") {
            if (d.contains("range")) throw ConfigError("not used when kind is none", "disturbance.range");
            s.disturbance.kind = DisturbanceModel::Kind::None;
        } else {
            throw ConfigError("expected uniform_box or none", "disturbance.kind");
        }
    }
    {
        const json& e = need(j, "", "estimator");
        only_keys(e, "estimator", {"k2", "robust", "epsilon", "reset_on_entry"});
        s.estimator.k2 = matrix(need(e, "estimator", "k2"), n, "estimator.k2");
        s.estimator.d_bar = s.disturbance.d_bar;
        const std::string robust = e.contains("robust") ? text(e["robust"], "estimator.robust") : "sliding";
        if (robust == "sliding") {
            s.estimator.robust = EstimatorGains::Robust::SlidingMode;
            if (e.contains("epsilon")) throw ConfigError("only used by the highgain robustifier", "estimator.epsilon");
        } else if (robust == "highgain") {
            s.estimator.robust = EstimatorGains::Robust::HighGain;
            s.estimator.epsilon = number(need(e, "estimator", "epsilon"), "estimator.epsilon");
        } else {
            throw ConfigError("expected sliding or highgain", "estimator.robust");
        }
        s.reset_on_entry = boolean_or(e, "estimator", "reset_on_entry", false);
    }
    {
        const json& c = need(j, "", "controller");
        only_keys(c, "controller", {"k1"});
        s.controller.k1 = matrix(need(c, "controller", "k1"), n, "controller.k1");
    }
    {
        const json& b = need(j, "", "budget");
        only_keys(b, "budget", {"z_max", "z_threshold"});
        s.z_max = number(need(b, "budget", "z_max"), "budget.z_max");
        s.z_threshold = number(need(b, "budget", "z_threshold"), "budget.z_threshold");
    }
    if (j.contains("supervisor")) {
        const json& v = j["supervisor"];
        only_keys(v, "supervisor", {"alpha", "max_dwell", "monitor_slack"});
        s.alpha = number_or(v, "supervisor", "alpha", s.alpha);
        s.monitor_slack = number_or(v, "supervisor", "monitor_slack", s.monitor_slack);
        if (v.contains("max_dwell")) {
            const std::string f = text(v["max_dwell"], "supervisor.max_dwell");
            if (f == "general") {
                s.max_dwell = MaxDwellFormula::General;
            } else if (f == "integrator") {
                s.max_dwell = MaxDwellFormula::Integrator;
            } else {
                throw ConfigError("expected general or integrator", "supervisor.max_dwell");
            }
        }
    }
    {
        const json& r = need(j, "", "region");
        only_keys(r, "region", {"center", "radius", "position_dims"});
        s.region_center = vector(need(r, "region", "center"), "region.center");
        s.region_radius = number(need(r, "region", "radius"), "region.radius");
        const json& dims = need(r, "region", "position_dims");
        if (!dims.is_array()) throw ConfigError("expected an array of indices", "region.position_dims");
        for (std::size_t i = 0; i < dims.size(); ++i) {
            if (!dims[i].is_number_integer()) {
                throw ConfigError("expected an integer", "region.position_dims[" + std::to_string(i) + "]");
            }
            s.position_dims.push_back(dims[i].get<Index>());
        }
    }
    {
        const json& p = need(j, "", "path");
        only_keys(p, "path", {"kind", "center", "radius", "omega", "initial_phase", "base", "heading_dim"});
        if (text(need(p, "path", "kind"), "path.kind") != "circle") throw ConfigError("expected circle", "path.kind");
        s.path.center = vector(need(p, "path", "center"), "path.center");
        s.path.radius = number(need(p, "path", "radius"), "path.radius");
        s.path.omega = number(need(p, "path", "omega"), "path.omega");
        s.path.initial_phase = number_or(p, "path", "initial_phase", 0.0);
        s.path.base = p.contains("base") ? vector(p["base"], "path.base") : StateVec::Zero(n);
        if (p.contains("heading_dim") && !p["heading_dim"].is_null()) {
            if (!p["heading_dim"].is_number_integer()) throw ConfigError("expected an integer", "path.heading_dim");
            s.path.heading_dim = p["heading_dim"].get<Index>();
        }
    }
    if (j.contains("trajectory")) {
        const json& t = j["trajectory"];
        only_keys(t, "trajectory", {"weights", "margin", "intermediate_scale"});
        if (t.contains("weights")) {
            const StateVec w = vector(t["weights"], "trajectory.weights");
            if (w.size() != 4) throw ConfigError("expected [p0, p1, p2, p3]", "trajectory.weights");
            for (int k = 0; k < 4; ++k) s.weights.p[static_cast<std::size_t>(k)] = w[k];
        }
        s.margin = number_or(t, "trajectory", "margin", s.margin);
        s.intermediate_scale = number_or(t, "trajectory", "intermediate_scale", s.intermediate_scale);
    }
    if (j.contains("integrator")) {
        const json& g = j["integrator"];
        only_keys(g, "integrator", {"dt", "method"});
        s.integrator.dt = number_or(g, "integrator", "dt", s.integrator.dt);
        if (g.contains("method")) {
            const std::string m = text(g["method"], "integrator.method");
            if (m == "rk4") {
                s.integrator.method = IntegrationMethod::RK4;
            } else if (m == "euler") {
                s.integrator.method = IntegrationMethod::Euler;
            } else {
                throw ConfigError("expected rk4 or euler", "integrator.method");
            }
        }
    }
    {
        const json& i = need(j, "", "initial");
        only_keys(i, "initial", {"x", "x_hat"});
        s.x0 = vector(need(i, "initial", "x"), "initial.x");
        s.x_hat0 = vector(need(i, "initial", "x_hat"), "initial.x_hat");
    }
    return s;
}

/// Loss-free JSON form of a Scenario (inverse of from_json).
[[nodiscard]] inline json to_json(const Scenario& s) {
    using namespace detail;
    json j;
    j["n"] = s.n;
    j["duration"] = s.duration;
    j["seed"] = s.seed;
    if (s.plant.kind == PlantModel::Kind::Linear) {
        j["plant"] = {{"kind", "linear"}, {"A", flat(s.plant.A)}, {"lipschitz_c", s.plant.lipschitz_c}};
    } else {
        j["plant"] = {{"kind", "single_integrator"}, {"lipschitz_c", s.plant.lipschitz_c}};
    }
    if (s.disturbance.kind == DisturbanceModel::Kind::UniformBox) {
        json range = json::array();
        for (Index i = 0; i < s.disturbance.lo.size(); ++i) range.push_back({s.disturbance.lo[i], s.disturbance.hi[i]});
        j["disturbance"] = {{"kind", "uniform_box"}, {"range", range}, {"d_bar", s.disturbance.d_bar}};
    } else {
        j["disturbance"] = {{"kind", "none"}, {"d_bar", s.disturbance.d_bar}};
    }
    j["estimator"] = {{"k2", flat(s.estimator.k2)}, {"reset_on_entry", s.reset_on_entry}};
    if (s.estimator.robust == EstimatorGains::Robust::HighGain) {
        j["estimator"]["robust"] = "highgain";
        j["estimator"]["epsilon"] = s.estimator.epsilon;
    } else {
        j["estimator"]["robust"] = "sliding";
    }
    j["controller"] = {{"k1", flat(s.controller.k1)}};
    j["budget"] = {{"z_max", s.z_max}, {"z_threshold", s.z_threshold}};
    j["supervisor"] = {{"alpha", s.alpha},
                       {"max_dwell", s.max_dwell == MaxDwellFormula::Integrator ? "integrator" : "general"},
                       {"monitor_slack", s.monitor_slack}};
    j["region"] = {{"center", array(s.region_center)}, {"radius", s.region_radius}, {"position_dims", s.position_dims}};
    j["path"] = {{"kind", "circle"},
                 {"center", array(s.path.center)},
                 {"radius", s.path.radius},
                 {"omega", s.path.omega},
                 {"initial_phase", s.path.initial_phase},
                 {"base", array(s.path.base)}};
    j["path"]["heading_dim"] = s.path.heading_dim ? json(*s.path.heading_dim) : json(nullptr);
    j["trajectory"] = {{"weights", s.weights.p}, {"margin", s.margin}, {"intermediate_scale", s.intermediate_scale}};
    j["integrator"] = {{"dt", s.integrator.dt}, {"method", s.integrator.method == IntegrationMethod::RK4 ? "rk4" : "euler"}};
    j["initial"] = {{"x", array(s.x0)}, {"x_hat", array(s.x_hat0)}};
    return j;
}

[[nodiscard]] inline json read_file(const std::string& file) {
    std::ifstream in(file);
    if (!in) throw ConfigError("cannot open '" + file + "'", "--config");
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("malformed JSON: ") + e.what(), file);
    }
}

/// Preset (if named) with `overrides` merged on top (RFC 7386 merge patch).
[[nodiscard]] inline Scenario load(const std::optional<std::string>& preset, const std::optional<json>& overrides) {
    if (!preset && !overrides) throw ConfigError("need --preset, --config, or both", "");
    json doc = preset ? to_json(presets::by_name(*preset)) : json::object();
    if (overrides) {
        if (!overrides->is_object()) throw ConfigError("expected an object", "<root>");
        doc.merge_patch(*overrides);
    }
    return from_json(doc);
}

/// Quantities derived at load time (echoed before a run).
[[nodiscard]] inline json derived(const Scenario& s) {
    const LyapunovBudget b = s.budget();
    const Rates r = s.rates();
    return {{"V_M", b.V_M},
            {"V_T", b.V_T},
            {"c", s.plant.lipschitz_c},
            {"k1_min", r.k1_min},
            {"k2_min", r.k2_min},
            {"lambda_s", r.lambda_s},
            {"lambda_u", r.lambda_u},
            {"cushion_depth", 2.0 * std::sqrt(b.V_M) + s.margin}};
}

}  // namespace dwellsim::config
