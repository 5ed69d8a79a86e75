#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "dwellsim/scenario.hpp"

namespace dwellsim {

// ── Crossing detection ───────────────────────────────────────────────────────

struct Crossing {
    double t;
    double fraction;  // position of the root inside the step, in [0, 1]
    bool entering;    // true: F^c → F
};

/// Refined F-boundary crossing on the chord between two consecutive states,
/// or nothing if both lie on the same side.
[[nodiscard]] inline std::optional<Crossing> detect_crossing(const FeedbackRegion& region, const StateVec& prev,
                                                             const StateVec& next, double t_prev, double dt,
                                                             double tol = 1e-9) {
    const bool in_prev = region.contains(prev);
    const bool in_next = region.contains(next);
    if (in_prev == in_next) return std::nullopt;
    const StateVec delta = next - prev;
    double lo = 0.0;  // same side as prev
    double hi = 1.0;
    double mid = 0.5;
    for (int it = 0; it < 200; ++it) {
        mid = 0.5 * (lo + hi);
        const double sd = region.signed_distance(prev + mid * delta);
        if (std::abs(sd) <= tol || hi - lo < 1e-16) break;
        if ((sd <= 0.0) == in_prev) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    return Crossing{t_prev + mid * dt, mid, !in_prev};
}

/// Deepest penetration into F of the chord between two states that both lie
/// outside (0 if the chord stays outside or either end is inside).
[[nodiscard]] inline double chord_depth(const FeedbackRegion& region, const StateVec& prev, const StateVec& next) {
    if (region.contains(prev) || region.contains(next)) return 0.0;
    const StateVec a = region.position(prev) - region.center();
    const StateVec b = region.position(next) - region.center();
    const StateVec d = b - a;
    const double dd = d.squaredNorm();
    const double s = dd > 0.0 ? std::clamp(-a.dot(d) / dd, 0.0, 1.0) : 0.0;
    return std::max(0.0, region.radius() - (a + s * d).norm());
}

/// Gatekeeper for measurements of the true state. Reads are granted only
/// while feedback is available; every attempt is counted.
class FeedbackChannel {
public:
    [[nodiscard]] const StateVec& measure(Phase phase, const StateVec& x) {
        if (phase == Phase::u) {
            ++denied_;
            throw ContractViolation("true state read while feedback is unavailable");
        }
        ++granted_;
        return x;
    }

    [[nodiscard]] std::uint64_t granted() const noexcept { return granted_; }
    [[nodiscard]] std::uint64_t denied() const noexcept { return denied_; }

private:
    std::uint64_t granted_ = 0;
    std::uint64_t denied_ = 0;
};

// ── Log types ────────────────────────────────────────────────────────────────

enum class EventKind { a_start, u_start, u1_end, u2_end, u_end, enter, exit, graze, run_end };

[[nodiscard]] inline const char* to_string(EventKind k) noexcept {
    switch (k) {
        case EventKind::a_start: return "a_start";
        case EventKind::u_start: return "u_start";
        case EventKind::u1_end: return "u1_end";
        case EventKind::u2_end: return "u2_end";
        case EventKind::u_end: return "u_end";
        case EventKind::enter: return "enter";
        case EventKind::exit: return "exit";
        case EventKind::graze: return "graze";
        case EventKind::run_end: return "run_end";
    }
    return "?";
}

[[nodiscard]] inline std::optional<EventKind> event_kind_from(std::string_view s) {
    for (auto k : {EventKind::a_start, EventKind::u_start, EventKind::u1_end, EventKind::u2_end, EventKind::u_end,
                   EventKind::enter, EventKind::exit, EventKind::graze, EventKind::run_end}) {
        if (s == to_string(k)) return k;
    }
    return std::nullopt;
}

/// Schedule events carry V = NaN; physical events carry V at the refined time.
struct Event {
    std::size_t i = 0;
    EventKind kind = EventKind::a_start;
    double t = 0.0;
    double V = std::numeric_limits<double>::quiet_NaN();
};

/// Row-major time series, one row per logged step.
struct SimLog {
    Index n = 0;
    double duration = 0.0;
    std::vector<double> t;
    std::vector<double> x, x_hat, xbar, xbar_dot, v;  // rows × n
    std::vector<char> phase;
    std::vector<double> V, z_norm, e_norm, e1_norm, e2_norm;
    std::vector<Event> events;

    [[nodiscard]] std::size_t rows() const noexcept { return t.size(); }

    [[nodiscard]] Eigen::Map<const StateVec> row(const std::vector<double>& col, std::size_t k) const {
        return {col.data() + k * static_cast<std::size_t>(n), n};
    }
};

struct CycleRecord {
    CyclePlan plan;
    bool complete = false;          // t_u3 reached within the run
    double xbar_clearance = 0.0;    // signed distance of x̄_d(t_u3)
    bool x_inside_at_end = false;   // contains(x(t_u3))
    double V_end = 0.0;
    std::optional<double> first_exit;
    std::optional<double> last_entry;
};

/// Why a run stopped early.
struct FaultInfo {
    enum class Kind { Numeric, Infeasible };
    Kind kind;
    std::size_t step;
    double t;
    std::string message;
};

struct RunResult {
    SimLog log;
    std::vector<CycleRecord> cycles;
    std::vector<Violation> violations;
    std::optional<FaultInfo> fault;
    std::uint64_t disturbance_clamps = 0;
    std::uint64_t feedback_reads = 0;
    std::uint64_t feedback_denied = 0;
    double max_z = 0.0;                  // over every step, independent of decimation
    std::vector<double> exit_z;          // ‖z‖ at each physical exit
    std::size_t grazes = 0;

    [[nodiscard]] bool monitor_passed() const noexcept { return violations.empty(); }
};

struct RunOptions {
    std::size_t decimate = 1;
    double graze_tolerance = 1e-4;  // m
};

// ── Engine ───────────────────────────────────────────────────────────────────

/// Closed-loop simulation of one (scenario, seed).
///
/// The trajectory follows its own schedule: phase-a segments start at t = 0
/// and at each planned t_u3, excursions are planned at t_u. Grid steps are
/// split at these instants. Observer availability follows the physical
/// crossings of the true state, which take effect at the end of the substep
/// in which they are detected.
class Engine {
public:
    Engine(Scenario scenario, std::uint64_t seed, RunOptions options = {})
        : sc_(std::move(scenario)),
          opt_(options),
          region_(sc_.region()),
          traj_(sc_.trajectory()),
          policy_(sc_.policy()),
          monitor_(sc_.monitor_config()),
          rng_(seed, 0) {
        warnings_ = sc_.validate();
        if (opt_.decimate == 0) throw ConfigError("must be >= 1", "decimate");
    }

    [[nodiscard]] const std::vector<std::string>& warnings() const noexcept { return warnings_; }

    [[nodiscard]] RunResult run() {
        const Index n = sc_.n;
        const double dt = sc_.integrator.dt;
        const auto steps = static_cast<std::size_t>(std::llround(sc_.duration / dt));
        res_ = {};
        res_.log.n = n;
        res_.log.duration = static_cast<double>(steps) * dt;
        x_ = sc_.x0;
        xh_ = sc_.x_hat0;
        phase_ = Phase::a;
        signal_ = SwitchSignal{};

        const StateVec xb0 = traj_.cushion_target(0.0).x;
        const double V0 = v_sigma(xh_ - xb0, channel_.measure(phase_, x_) - xh_);
        plan_ = traj_.plan(0, 0.0, V0, policy_, sc_.intermediate_scale);
        push_event(EventKind::a_start, 0.0, V0);
        monitor_.begin(0.0, V0);
        cycles_open_ = CycleRecord{plan_};

        try {
            sample(0, 0.0);
            for (std::size_t k = 0; k < steps; ++k) {
                const double t0 = static_cast<double>(k) * dt;
                const double t1 = static_cast<double>(k + 1) * dt;
                const StateVec d = sample_disturbance(sc_.disturbance, n, rng_, &res_.disturbance_clamps);
                step_ = k;
                advance_grid_step(k, t0, t1, d);
                sample(k + 1, t1);
            }
        } catch (const NumericFault& f) {
            res_.fault = FaultInfo{FaultInfo::Kind::Numeric, f.step(), f.time(), f.what()};
        } catch (const InfeasibleError& f) {
            res_.fault = FaultInfo{FaultInfo::Kind::Infeasible, step_, static_cast<double>(step_) * sc_.integrator.dt, f.what()};
        }
        finish();
        return std::move(res_);
    }

private:
    struct Eval {
        Timed ref;
        StateVec v;
        StateVec vr;
    };

    [[nodiscard]] Eval evaluate(double t, const StateVec& x, const StateVec& xh, Phase phase) {
        Eval ev{traj_.eval(plan_, t), {}, StateVec::Zero(sc_.n)};
        if (phase == Phase::a) ev.vr = robust_term(sc_.estimator, channel_.measure(phase, x) - xh);
        ev.v = control(phase, ev.ref.dx, drift(sc_.plant, xh, t), xh - ev.ref.x, sc_.controller, ev.vr);
        return ev;
    }

    /// Joint RK4 (or Euler) step of (x, x̂) over [t0, t1] with the
    /// disturbance held and the control re-evaluated at every stage.
    [[nodiscard]] StateVec integrate(double t0, double t1, const StateVec& d) {
        const Index n = sc_.n;
        StateVec y(2 * n);
        y << x_, xh_;
        auto rhs = [&](double tau, const StateVec& s) -> StateVec {
            const StateVec xs = s.head(n);
            const StateVec hs = s.tail(n);
            const Eval ev = evaluate(tau, xs, hs, phase_);
            StateVec out(2 * n);
            out << drift(sc_.plant, xs, tau) + ev.v + d, estimate_deriv(phase_, sc_.plant, {hs}, ev.v, ev.vr, tau);
            return out;
        };
        return integrate_step(sc_.integrator.method, rhs, y, t0, t1 - t0);
    }

    void advance_grid_step(std::size_t k, double t0, double t1, const StateVec& d) {
        constexpr double kSnap = 1e-12;
        double t = t0;
        while (true) {
            while (next_scheduled() <= t + kSnap) handle_scheduled(next_scheduled());
            const double te = next_scheduled();
            const double tend = te < t1 - kSnap ? te : t1;
            substep(k, t, tend, d);
            t = tend;
            if (tend == t1) break;
        }
        while (next_scheduled() <= t1 + kSnap) handle_scheduled(next_scheduled());
    }

    void substep(std::size_t k, double t0, double t1, const StateVec& d) {
        const Index n = sc_.n;
        if (!x_.allFinite() || !xh_.allFinite() || !d.allFinite()) throw NumericFault("non-finite state", k, t0);
        const StateVec e1_prev = xh_ - traj_.eval(plan_, t0).x;
        const StateVec e2_prev = x_ - xh_;
        const StateVec y = integrate(t0, t1, d);
        if (!y.allFinite()) throw NumericFault("non-finite state after integration", k, t1);
        const StateVec x_prev = x_;
        x_ = y.head(n);
        xh_ = y.tail(n);

        if (const auto c = detect_crossing(region_, x_prev, x_, t0, t1 - t0)) {
            const StateVec e1_next = xh_ - traj_.eval(plan_, t1).x;
            const StateVec e2_next = x_ - xh_;
            const double f = c->fraction;
            const StateVec e1c = (1.0 - f) * e1_prev + f * e1_next;
            const StateVec e2c = (1.0 - f) * e2_prev + f * e2_next;
            on_crossing(*c, v_sigma(e1c, e2c), e2c.norm());
        } else if (chord_depth(region_, x_prev, x_) > opt_.graze_tolerance) {
            ++res_.grazes;
            push_event(EventKind::graze, t1, std::numeric_limits<double>::quiet_NaN());
        }
    }

    void on_crossing(const Crossing& c, double V, double e2_norm) {
        double tc = c.t;
        const double last = signal_.exits().size() == signal_.entries().size() ? signal_.exits().back()
                                                                                  : signal_.entries().back();
        if (!(tc > last)) tc = std::nextafter(last, std::numeric_limits<double>::infinity());
        if (c.entering) {
            signal_.record(Phase::a, tc);
            phase_ = Phase::a;
            monitor_.on_entry(tc, V);
            push_event(EventKind::enter, tc, V);
            cycles_open_.last_entry = tc;
            if (sc_.reset_on_entry) xh_ = channel_.measure(phase_, x_);
        } else {
            signal_.record(Phase::u, tc);
            phase_ = Phase::u;
            monitor_.on_exit(tc, V);
            push_event(EventKind::exit, tc, V);
            res_.exit_z.push_back(std::sqrt(2.0 * V));
            last_exit_ = {tc, V, e2_norm};
            if (!cycles_open_.first_exit) cycles_open_.first_exit = tc;
        }
    }

    [[nodiscard]] double next_scheduled() const { return plan_.has_exit() ? plan_.t_u3 : plan_.t_u; }

    /// V and ‖e2‖ at a schedule instant: measured while feedback is available,
    /// otherwise the worst case propagated from the last physical exit.
    [[nodiscard]] std::pair<double, double> schedule_V(double t, const StateVec& xbar) {
        if (phase_ == Phase::a) {
            const StateVec e2 = channel_.measure(phase_, x_) - xh_;
            return {v_sigma(xh_ - xbar, e2), e2.norm()};
        }
        return policy_.propagate_bound(last_exit_.V, last_exit_.e2_norm, t - last_exit_.t);
    }

    void handle_scheduled(double te) {
        if (!plan_.has_exit()) {
            const auto [V, e2n] = schedule_V(te, traj_.eval(plan_, te).x);
            if (V > policy_.budget.V_M) {
                throw InfeasibleError("V = " + std::to_string(V) + " above V_M at the planned exit t = " +
                                      std::to_string(te));
            }
            plan_exit(plan_, V, policy_.max_dwell_time(V, e2n), traj_.weights());
            cycles_open_.plan = plan_;
            push_event(EventKind::u_start, plan_.t_u, V);
            return;
        }
        // End of the excursion: x̄_d is back at the cushion.
        const double t3 = plan_.t_u3;
        const StateVec xbar = traj_.eval(plan_, t3).x;
        CycleRecord& rec = cycles_open_;
        rec.complete = true;
        rec.xbar_clearance = region_.signed_distance(xbar);
        rec.x_inside_at_end = region_.contains(x_);
        const auto [V, e2n] = schedule_V(t3, xbar);
        (void)e2n;
        rec.V_end = V;
        if (!rec.x_inside_at_end) monitor_.on_failed_reentry(t3, V);
        push_event(EventKind::u1_end, plan_.t_u1, std::numeric_limits<double>::quiet_NaN());
        push_event(EventKind::u2_end, plan_.t_u2, std::numeric_limits<double>::quiet_NaN());
        push_event(EventKind::u_end, t3, std::numeric_limits<double>::quiet_NaN());
        res_.cycles.push_back(rec);

        plan_ = traj_.plan(plan_.i + 1, t3, V, policy_, sc_.intermediate_scale);
        cycles_open_ = CycleRecord{plan_};
        push_event(EventKind::a_start, t3, V);
    }

    void sample(std::size_t k, double t) {
        const Evaluation s = snapshot(t);
        monitor_.step(t, s.V, phase_);
        res_.max_z = std::max(res_.max_z, s.z);
        if (k % opt_.decimate != 0) return;
        SimLog& L = res_.log;
        L.t.push_back(t);
        const auto put = [](std::vector<double>& col, const StateVec& v) { col.insert(col.end(), v.begin(), v.end()); };
        put(L.x, x_);
        put(L.x_hat, xh_);
        put(L.xbar, s.ev.ref.x);
        put(L.xbar_dot, s.ev.ref.dx);
        put(L.v, s.ev.v);
        L.phase.push_back(phase_char(phase_));
        L.V.push_back(s.V);
        L.z_norm.push_back(s.z);
        L.e_norm.push_back((x_ - s.ev.ref.x).norm());
        L.e1_norm.push_back(s.e1);
        L.e2_norm.push_back(s.e2);
    }

    struct Evaluation {
        Eval ev;
        double V, z, e1, e2;
    };

    /// Ground-truth snapshot for logging and monitoring. Reads x directly;
    /// the control value is reproduced with the phase-u law when feedback
    /// is unavailable, so no measurement is taken.
    [[nodiscard]] Evaluation snapshot(double t) {
        Evaluation s{{traj_.eval(plan_, t), {}, StateVec::Zero(sc_.n)}, 0, 0, 0, 0};
        const StateVec e1 = xh_ - s.ev.ref.x;
        const StateVec e2 = x_ - xh_;
        if (phase_ == Phase::a) s.ev.vr = robust_term(sc_.estimator, e2);
        s.ev.v = control(phase_, s.ev.ref.dx, drift(sc_.plant, xh_, t), e1, sc_.controller, s.ev.vr);
        s.e1 = e1.norm();
        s.e2 = e2.norm();
        s.V = 0.5 * (s.e1 * s.e1 + s.e2 * s.e2);
        s.z = std::sqrt(s.e1 * s.e1 + s.e2 * s.e2);
        return s;
    }

    void push_event(EventKind kind, double t, double V) { res_.log.events.push_back({plan_.i, kind, t, V}); }

    void finish() {
        const double T = res_.log.t.empty() ? 0.0 : res_.log.duration;
        if (!res_.fault) {
            push_event(EventKind::run_end, T, res_.log.V.empty() ? 0.0 : res_.log.V.back());
        }
        std::stable_sort(res_.log.events.begin(), res_.log.events.end(),
                         [](const Event& a, const Event& b) { return a.t < b.t; });
        if (!cycles_open_.complete) res_.cycles.push_back(cycles_open_);
        res_.violations = monitor_.violations();
        res_.feedback_reads = channel_.granted();
        res_.feedback_denied = channel_.denied();
    }

    struct ExitState {
        double t = 0.0;
        double V = 0.0;
        double e2_norm = 0.0;
    };

    Scenario sc_;
    RunOptions opt_;
    FeedbackRegion region_;
    SwitchingTrajectory traj_;
    DwellPolicy policy_;
    Monitor monitor_;
    CounterRng rng_;
    FeedbackChannel channel_;
    SwitchSignal signal_;
    std::vector<std::string> warnings_;

    StateVec x_;
    StateVec xh_;
    Phase phase_ = Phase::a;
    CyclePlan plan_;
    CycleRecord cycles_open_;
    ExitState last_exit_;
    std::size_t step_ = 0;
    RunResult res_;
};

[[nodiscard]] inline RunResult run(const Scenario& scenario, std::uint64_t seed, RunOptions options = {}) {
    return Engine(scenario, seed, options).run();
}

// ── Metrics ──────────────────────────────────────────────────────────────────

struct CycleMetrics {
    std::size_t i = 0;
    double dt_a = 0.0;
    double dt_u = 0.0;
    std::array<double, 3> partitions{};  // [t_u, t_u1), [t_u1, t_u2), [t_u2, t_u3)
    double u2_share = 0.0;               // (t_u2 − t_u1)/Δt_u
    double V_a = 0.0;
    double V_u = 0.0;
};

struct Metrics {
    bool empty = true;
    std::vector<CycleMetrics> cycles;
    double mean_dt_a = 0.0;
    double mean_dt_u = 0.0;
    double ratio = 0.0;  // mean_dt_u / mean_dt_a
    std::array<double, 3> mean_partitions{};
    double percent_on_path = 0.0;  // time in [t_u1, t_u2) segments over the run
    double percent_outside = 0.0;  // time with x ∉ F over the run
    double duration = 0.0;
};

/// Tables and averages over cycles whose excursion completed within the run.
[[nodiscard]] inline Metrics compute_metrics(const std::vector<Event>& events, double duration) {
    Metrics m;
    m.duration = duration;
    struct Partial {
        std::optional<double> a, u, u1, u2, u3;
        double Va = 0.0, Vu = 0.0;
    };
    std::vector<Partial> parts;
    double outside = 0.0;
    std::optional<double> out_since;
    double on_path = 0.0;
    for (const Event& e : events) {
        if (e.i >= parts.size()) parts.resize(e.i + 1);
        Partial& p = parts[e.i];
        switch (e.kind) {
            case EventKind::a_start: p.a = e.t; p.Va = e.V; break;
            case EventKind::u_start: p.u = e.t; p.Vu = e.V; break;
            case EventKind::u1_end: p.u1 = e.t; break;
            case EventKind::u2_end: p.u2 = e.t; break;
            case EventKind::u_end: p.u3 = e.t; break;
            case EventKind::exit: out_since = e.t; break;
            case EventKind::enter:
                if (out_since) outside += e.t - *out_since;
                out_since.reset();
                break;
            default: break;
        }
    }
    if (out_since) outside += duration - *out_since;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        const Partial& p = parts[i];
        if (!(p.a && p.u && p.u1 && p.u2 && p.u3)) continue;
        CycleMetrics c;
        c.i = i;
        c.dt_a = *p.u - *p.a;
        c.dt_u = *p.u3 - *p.u;
        c.partitions = {*p.u1 - *p.u, *p.u2 - *p.u1, *p.u3 - *p.u2};
        c.u2_share = c.partitions[1] / c.dt_u;
        c.V_a = p.Va;
        c.V_u = p.Vu;
        on_path += c.partitions[1];
        m.cycles.push_back(c);
    }
    if (duration > 0.0) {
        m.percent_on_path = std::clamp(100.0 * on_path / duration, 0.0, 100.0);
        m.percent_outside = std::clamp(100.0 * outside / duration, 0.0, 100.0);
    }
    if (m.cycles.empty()) return m;
    m.empty = false;
    const double k = static_cast<double>(m.cycles.size());
    for (const auto& c : m.cycles) {
        m.mean_dt_a += c.dt_a / k;
        m.mean_dt_u += c.dt_u / k;
        for (int j = 0; j < 3; ++j) m.mean_partitions[j] += c.partitions[j] / k;
    }
    m.ratio = m.mean_dt_u / m.mean_dt_a;
    return m;
}

[[nodiscard]] inline Metrics compute_metrics(const SimLog& log) { return compute_metrics(log.events, log.duration); }

}  // namespace dwellsim
