// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "dwellsim/dwellsim.hpp"
#include "oracles.hpp"

using namespace dwellsim;

namespace {

struct Outcome {
    bool pass = true;
    std::string detail;
};

class Report {
public:
    void criterion(int id, const char* title, double budget_s, const std::function<Outcome()>& body) {
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = body();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        const bool in_time = secs < budget_s;
        const bool ok = o.pass && in_time;
        failed_ += ok ? 0 : 1;
        std::printf("[%s] %d %s: %s; %.2f s (budget %.0f s)%s\n", ok ? "PASS" : "FAIL", id, title, o.detail.c_str(),
                    secs, budget_s, in_time ? "" : " over budget");
        std::fflush(stdout);
    }
    [[nodiscard]] int failed() const noexcept { return failed_; }

private:
    int failed_ = 0;
};

std::string fmt(const char* f, double a) {
    char buf[96];
    std::snprintf(buf, sizeof buf, f, a);
    return buf;
}

double rel(double got, double ref) { return std::abs(got - ref) / std::max(std::abs(ref), 1e-300); }

LyapunovBudget budget_of(double V_M, double V_T) { return {V_M, V_T, 2.0 * std::sqrt(V_M), 2.0 * std::sqrt(V_T)}; }

Rates rates_of(double ls, double lu) {
    Rates r;
    r.lambda_s = ls;
    r.lambda_u = lu;
    return r;
}

Outcome dwell_oracles() {
    std::mt19937_64 gen(2024);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    double worst_min = 0.0, worst_max = 0.0, worst_int = 0.0;
    for (int k = 0; k < 100; ++k) {
        const double V_T = std::pow(10.0, -5.0 + 2.0 * u01(gen));
        const double V0 = V_T * std::pow(10.0, 0.2 + 3.0 * u01(gen));
        const double ls = 0.5 + 9.5 * u01(gen);
        const double ref = oracle::time_to_reach([&](double V) { return -ls * V; }, V0, V_T);
        worst_min = std::max(worst_min, rel(min_dwell_formula(V0, V_T, ls), ref));
    }
    for (int k = 0; k < 100; ++k) {
        const double V_M = 0.05 + 0.5 * u01(gen);
        const double V0 = V_M * std::pow(10.0, -4.0 + 3.9 * u01(gen));
        const double lu = 0.5 + 3.5 * u01(gen);
        const double d = 0.2 * u01(gen);
        const double ref = oracle::time_to_reach([&](double V) { return lu * V + 0.5 * d * d; }, V0, V_M);
        worst_max = std::max(worst_max, rel(max_dwell(V0, budget_of(V_M, 1e-9), rates_of(1.0, lu), d), ref));
    }
    for (int k = 0; k < 100; ++k) {
        const double V_M = 0.05 + 0.5 * u01(gen);
        const double V0 = V_M * 0.95 * u01(gen);
        const double e2 = std::sqrt(2.0 * V0) * u01(gen);
        const double d = 0.005 + 0.2 * u01(gen);
        const double ref =
            oracle::bisect([&](double s) { return 0.5 * d * d * s * s + d * e2 * s + V0 - V_M; }, 0.0, 1e5);
        worst_int = std::max(worst_int, rel(max_dwell_single_integrator(V0, e2, V_M, d), ref));
    }
    const double worst = std::max({worst_min, worst_max, worst_int});
    std::ostringstream s;
    s << "worst relative error min " << worst_min << ", max " << worst_max << ", integrator " << worst_int
      << " (limit 1e-6)";
    return {worst <= 1e-6, s.str()};
}

Outcome e1_decay() {
    double worst = 0.0;
    const StateVec starts[] = {(StateVec(3) << 0.2, 0.3, std::numbers::pi / 6).finished(),
                               (StateVec(3) << -0.4, 0.1, 0.0).finished(), (StateVec(3) << 0.5, -0.5, 1.0).finished()};
    for (const StateVec& xh0 : starts) {
        Scenario sc = presets::sim_circle();
        sc.duration = 1.0;
        sc.x_hat0 = xh0;
        const RunResult r = run(sc, 1);
        if (r.fault) return {false, "run fault: " + r.fault->message};
        const double e0 = r.log.e1_norm[0];
        for (std::size_t k = 0; k < r.log.rows(); ++k) {
            worst = std::max(worst, rel(r.log.e1_norm[k], e0 * std::exp(-3.0 * r.log.t[k])));
        }
    }
    return {worst <= 1e-6, fmt("worst relative deviation from e1(0)exp(-3t) over 3 starts %.3g (limit 1e-6)", worst)};
}

struct SeedRuns {
    std::vector<RunResult> runs;
    std::vector<double> seconds;
};

const SeedRuns& circle_runs() {
    static const SeedRuns s = [] {
        SeedRuns out;
        for (std::uint64_t seed = 1; seed <= 10; ++seed) {
            const auto t0 = std::chrono::steady_clock::now();
            out.runs.push_back(run(presets::sim_circle(), seed));
            out.seconds.push_back(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
        }
        return out;
    }();
    return s;
}

Outcome circle_reproduction() {
    const SeedRuns& s = circle_runs();
    double max_z = 0.0, max_exit = 0.0, slowest = 0.0;
    std::size_t violations = 0, exits = 0;
    bool fault = false;
    for (std::size_t i = 0; i < s.runs.size(); ++i) {
        const RunResult& r = s.runs[i];
        fault |= r.fault.has_value();
        max_z = std::max(max_z, r.max_z);
        for (double z : r.exit_z) max_exit = std::max(max_exit, z);
        exits += r.exit_z.size();
        violations += r.violations.size();
        slowest = std::max(slowest, s.seconds[i]);
    }
    std::ostringstream d;
    d << "10 seeds, max |z| " << max_z << " (< 0.9), max |z| at " << exits << " exits " << max_exit
      << " (<= 0.025), monitor violations " << violations << ", slowest seed " << slowest << " s (< 5 s)";
    return {!fault && max_z < 0.9 && max_exit <= 0.025 && violations == 0 && exits > 0 && slowest < 5.0, d.str()};
}

Outcome circle_statistics() {
    const SeedRuns& s = circle_runs();
    double sum_u = 0.0, sum_a = 0.0, worst_share = 0.0;
    std::size_t cycles = 0;
    for (const RunResult& r : s.runs) {
        for (const CycleMetrics& c : compute_metrics(r.log).cycles) {
            sum_u += c.dt_u;
            sum_a += c.dt_a;
            worst_share = std::max(worst_share, std::abs(c.u2_share - 0.4));
            ++cycles;
        }
    }
    if (cycles == 0) return {false, "no completed cycles"};
    const double mean_u = sum_u / static_cast<double>(cycles);
    const double mean_a = sum_a / static_cast<double>(cycles);
    const double ratio = mean_u / mean_a;
    const bool max_ok = mean_u >= 1.5 && mean_u <= 2.8;
    const bool min_ok = mean_a >= 0.05 && mean_a <= 1.6;
    const bool ratio_ok = ratio >= 4.0;
    const bool share_ok = worst_share <= 1e-9;
    std::ostringstream d;
    d << cycles << " cycles, avg max dwell " << mean_u << " s [1.5, 2.8] " << (max_ok ? "ok" : "out")
      << ", avg min dwell " << mean_a << " s [0.05, 1.6] " << (min_ok ? "ok" : "out") << ", ratio " << ratio
      << " (>= 4) " << (ratio_ok ? "ok" : "out") << ", u2 share off 40% by " << worst_share << " (<= 1e-9) "
      << (share_ok ? "ok" : "out");
    return {max_ok && min_ok && ratio_ok && share_ok, d.str()};
}

const RunResult& quad_result() {
    static const RunResult r = run(presets::quad_integrator(), 1);
    return r;
}

Outcome quad_reproduction() {
    const auto t0 = std::chrono::steady_clock::now();
    const RunResult& r = quad_result();
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (r.fault) return {false, "run fault: " + r.fault->message};
    const Metrics m = compute_metrics(r.log);
    double worst_part = 0.0, lo = INFINITY, hi = -INFINITY;
    for (const CycleMetrics& c : m.cycles) {
        worst_part = std::max({worst_part, std::abs(c.partitions[0] - 0.4 * c.dt_u),
                               std::abs(c.partitions[1] - 0.2 * c.dt_u), std::abs(c.partitions[2] - 0.4 * c.dt_u)});
        lo = std::min(lo, c.dt_u);
        hi = std::max(hi, c.dt_u);
    }
    double max_exit = 0.0;
    for (double z : r.exit_z) max_exit = std::max(max_exit, z);
    std::ostringstream d;
    d << m.cycles.size() << " cycles, partition error " << worst_part << " s (<= 1e-9), max dwells in [" << lo << ", "
      << hi << "] s ([12, 25]), max |z| " << r.max_z << " (<= 0.9), max |z| at exits " << max_exit
      << " (<= 0.15), run " << secs << " s (< 10 s)";
    return {!m.cycles.empty() && worst_part <= 1e-9 && lo >= 12.0 && hi <= 25.0 && r.max_z <= 0.9 &&
                max_exit <= 0.15 && secs < 10.0,
            d.str()};
}

Outcome trajectory_properties() {
    bool ends = smootherstep(0.0) == 0.0 && smootherstep(1.0) == 1.0 && smootherstep_deriv(0.0) == 0.0 &&
                smootherstep_deriv(1.0) == 0.0 && smootherstep_deriv2(0.0) == 0.0 && smootherstep_deriv2(1.0) == 0.0;
    double jump = 0.0, fd_err = 0.0, path_err = 0.0;
    std::mt19937_64 gen(6);
    const auto check = [&](const Scenario& sc, const RunResult& r) {
        const SwitchingTrajectory tr = sc.trajectory();
        const DesiredPath path = sc.bound_path();
        const double eps = 1e-12;
        const double h = 1e-5;
        for (std::size_t k = 0; k < r.cycles.size(); ++k) {
            const CycleRecord& c = r.cycles[k];
            if (!c.complete) continue;
            const CyclePlan& p = c.plan;
            for (double tb : {p.t_u, p.t_u1, p.t_u2}) {
                jump = std::max(jump, (tr.eval(p, tb - eps).x - tr.eval(p, tb).x).norm());
            }
            if (k + 1 < r.cycles.size()) {
                const CyclePlan& n = r.cycles[k + 1].plan;
                jump = std::max(jump, (tr.eval(p, p.t_u3).x - tr.eval(n, n.t_a).x).norm());
            }
            std::uniform_real_distribution<double> u(p.t_a, p.t_u3);
            for (int s = 0; s < 100; ++s) {
                const double t = u(gen);
                bool near = false;
                for (double tb : {p.t_a, p.t_u, p.t_u1, p.t_u2, p.t_u3}) near |= std::abs(t - tb) < 10 * h;
                if (near) continue;
                const StateVec fd = oracle::central_diff([&](double q) { return StateVec(tr.eval(p, q).x); }, t, h);
                fd_err = std::max(fd_err, (tr.eval(p, t).dx - fd).cwiseAbs().maxCoeff());
            }
            for (int s = 0; s < 50; ++s) {
                const double t = p.t_u1 + (p.t_u2 - p.t_u1) * s / 50.0;
                path_err = std::max(path_err, (tr.eval(p, t).x - path.eval(t).x).cwiseAbs().maxCoeff());
            }
        }
    };
    check(presets::sim_circle(), circle_runs().runs.front());
    check(presets::quad_integrator(), quad_result());
    std::ostringstream d;
    d << "endpoint values/derivatives " << (ends ? "exact" : "WRONG") << ", max jump " << jump
      << " m (<= 1e-9), rate vs finite difference " << fd_err << " m/s (<= 1e-6), on-path deviation " << path_err;
    return {ends && jump <= 1e-9 && fd_err <= 1e-6 && path_err == 0.0, d.str()};
}

Outcome cushion_guarantee() {
    std::size_t cycles = 0, bad_ball = 0, outside = 0;
    double worst = -INFINITY;
    const auto scan = [&](const RunResult& r, double V_M) {
        for (const CycleRecord& c : r.cycles) {
            if (!c.complete) continue;
            ++cycles;
            const double limit = -2.0 * std::sqrt(V_M);
            worst = std::max(worst, c.xbar_clearance - limit);
            if (c.xbar_clearance > limit + 1e-12) ++bad_ball;
            if (!c.x_inside_at_end) ++outside;
        }
    };
    for (const RunResult& r : circle_runs().runs) scan(r, presets::sim_circle().budget().V_M);
    scan(quad_result(), presets::quad_integrator().budget().V_M);
    std::ostringstream d;
    d << cycles << " cycles over 11 runs, cushion ball violations " << bad_ball << " (worst margin " << worst
      << " m, tol 1e-12), true state outside F at re-entry " << outside;
    return {cycles > 0 && bad_ball == 0 && outside == 0, d.str()};
}

Outcome determinism() {
    Scenario sc = presets::sim_circle();
    const RunResult a = run(sc, 7);
    const RunResult b = run(sc, 7);
    const std::string la = io::log_csv(a.log), lb = io::log_csv(b.log);
    const std::string ea = io::events_csv(a.log.events), eb = io::events_csv(b.log.events);
    const bool same = la == lb && ea == eb;
    std::ostringstream d;
    d << "seed 7 twice: log.csv " << la.size() << " bytes " << (la == lb ? "identical" : "DIFFERENT")
      << ", events.csv " << (ea == eb ? "identical" : "DIFFERENT");
    return {same, d.str()};
}

}  // namespace

int main() {
    Report rep;
    rep.criterion(1, "dwell-formula oracle equivalence", 1.0, dwell_oracles);
    rep.criterion(2, "closed-loop e1 decay", 1.0, e1_decay);
    rep.criterion(3, "sim-circle reproduction", 50.0, circle_reproduction);
    rep.criterion(4, "sim-circle dwell statistics", 60.0, circle_statistics);
    rep.criterion(5, "quad-integrator simulation", 10.0, quad_reproduction);
    rep.criterion(6, "smootherstep and trajectory properties", 60.0, trajectory_properties);
    rep.criterion(7, "cushion guarantee", 60.0, cushion_guarantee);
    rep.criterion(8, "determinism", 60.0, determinism);
    std::printf("%d of 8 criteria failed\n", rep.failed());
    return rep.failed() == 0 ? 0 : 1;
}
