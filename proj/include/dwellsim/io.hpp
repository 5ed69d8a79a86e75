#pragma once

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <system_error>
#include <vector>

#include <json.hpp>

#include "dwellsim/engine.hpp"

namespace dwellsim::io {

/// Shortest round-trip decimal form; "nan", "inf", "-inf" for non-finite.
inline void put_number(std::string& out, double v) {
    if (std::isnan(v)) {
        out += "nan";
        return;
    }
    if (std::isinf(v)) {
        out += v > 0 ? "inf" : "-inf";
        return;
    }
    char buf[32];
    const auto r = std::to_chars(buf, buf + sizeof buf, v);
    out.append(buf, r.ptr);
}

[[nodiscard]] inline std::string csv_header(Index n) {
    std::string h = "t";
    for (const char* col : {"x", "xhat", "xbar"}) {
        for (Index i = 1; i <= n; ++i) h += "," + std::string(col) + std::to_string(i);
    }
    return h + ",phase,v_sigma,z_norm,e_norm,e1_norm,e2_norm";
}

[[nodiscard]] inline std::string log_csv(const SimLog& log) {
    std::string out = csv_header(log.n) + "\n";
    out.reserve(out.size() + log.rows() * static_cast<std::size_t>(3 * log.n + 6) * 12);
    const auto n = static_cast<std::size_t>(log.n);
    for (std::size_t k = 0; k < log.rows(); ++k) {
        put_number(out, log.t[k]);
        for (const auto* col : {&log.x, &log.x_hat, &log.xbar}) {
            for (std::size_t i = 0; i < n; ++i) {
                out += ',';
                put_number(out, (*col)[k * n + i]);
            }
        }
        out += ',';
        out += log.phase[k];
        for (const auto* col : {&log.V, &log.z_norm, &log.e_norm, &log.e1_norm, &log.e2_norm}) {
            out += ',';
            put_number(out, (*col)[k]);
        }
        out += '\n';
    }
    return out;
}

[[nodiscard]] inline std::string events_csv(const std::vector<Event>& events) {
    std::string out = "i,kind,t,V\n";
    for (const Event& e : events) {
        out += std::to_string(e.i);
        out += ',';
        out += to_string(e.kind);
        out += ',';
        put_number(out, e.t);
        out += ',';
        put_number(out, e.V);
        out += '\n';
    }
    return out;
}

[[nodiscard]] inline double parse_number(const std::string& s) {
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    double v = 0.0;
    const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
    if (r.ec != std::errc{} || r.ptr != s.data() + s.size()) throw ConfigError("not a number: '" + s + "'", "events.csv");
    return v;
}

[[nodiscard]] inline std::vector<Event> parse_events_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || line != "i,kind,t,V") throw ConfigError("bad or missing header", "events.csv");
    std::vector<Event> out;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::vector<std::string> f;
        std::stringstream ss(line);
        for (std::string cell; std::getline(ss, cell, ',');) f.push_back(cell);
        const std::string where = "events.csv:" + std::to_string(lineno);
        if (f.size() != 4) throw ConfigError("expected 4 fields", where);
        const auto kind = event_kind_from(f[1]);
        if (!kind) throw ConfigError("unknown event kind '" + f[1] + "'", where);
        Event e;
        e.i = static_cast<std::size_t>(std::stoull(f[0]));
        e.kind = *kind;
        e.t = parse_number(f[2]);
        e.V = parse_number(f[3]);
        out.push_back(e);
    }
    return out;
}

[[nodiscard]] inline double run_duration(const std::vector<Event>& events) {
    for (const Event& e : events) {
        if (e.kind == EventKind::run_end) return e.t;
    }
    return events.empty() ? 0.0 : events.back().t;
}

[[nodiscard]] inline nlohmann::json metrics_json(const Metrics& m) {
    using nlohmann::json;
    json j;
    j["empty"] = m.empty;
    j["duration"] = m.duration;
    j["cycles_completed"] = m.cycles.size();
    if (m.empty) return j;
    j["mean_max_dwell"] = m.mean_dt_u;
    j["mean_min_dwell"] = m.mean_dt_a;
    j["outside_inside_ratio"] = m.ratio;
    j["mean_partitions"] = m.mean_partitions;
    j["percent_on_path"] = m.percent_on_path;
    j["percent_outside"] = m.percent_outside;
    json rows = json::array();
    for (const auto& c : m.cycles) {
        rows.push_back({{"i", c.i},
                        {"min_dwell", c.dt_a},
                        {"max_dwell", c.dt_u},
                        {"partitions", c.partitions},
                        {"u2_share", c.u2_share},
                        {"V_entry", c.V_a},
                        {"V_exit", c.V_u}});
    }
    j["cycles"] = rows;
    return j;
}

/// Metrics plus run-level diagnostics.
[[nodiscard]] inline nlohmann::json run_summary(const RunResult& r, std::uint64_t seed) {
    using nlohmann::json;
    json j = metrics_json(compute_metrics(r.log));
    j["seed"] = seed;
    j["max_z_norm"] = r.max_z;
    j["exit_z_norm"] = r.exit_z;
    j["monitor_passed"] = r.monitor_passed();
    json v = json::array();
    for (const auto& x : r.violations) {
        v.push_back({{"kind", to_string(x.kind)}, {"t", x.t}, {"value", x.value}, {"limit", x.limit}});
    }
    j["violations"] = v;
    j["disturbance_clamps"] = r.disturbance_clamps;
    j["feedback_reads"] = r.feedback_reads;
    j["feedback_denied"] = r.feedback_denied;
    j["grazes"] = r.grazes;
    json reentry = json::array();
    for (const auto& c : r.cycles) {
        if (!c.complete) continue;
        reentry.push_back({{"i", c.plan.i},
                           {"xbar_signed_distance", c.xbar_clearance},
                           {"x_inside", c.x_inside_at_end}});
    }
    j["reentry"] = reentry;
    if (r.fault) {
        j["fault"] = {{"kind", r.fault->kind == FaultInfo::Kind::Numeric ? "numeric" : "infeasible"},
                      {"step", r.fault->step},
                      {"t", r.fault->t},
                      {"message", r.fault->message}};
    }
    return j;
}

inline void write_text(const std::filesystem::path& file, const std::string& text) {
    std::ofstream out(file, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + file.string());
    out << text;
    if (!out) throw std::runtime_error("write failed: " + file.string());
}

}  // namespace dwellsim::io
