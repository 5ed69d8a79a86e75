#pragma once

#include <cmath>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "dwellsim/estimator.hpp"
#include "dwellsim/types.hpp"

namespace dwellsim {

// ── Budgets and rates ────────────────────────────────────────────────────────

/// Bound V_M and exit threshold V_T on the common Lyapunov-like function,
/// derived from composite-error norms through ‖z‖ ≤ 2√V.
struct LyapunovBudget {
    double V_M = 0.0;
    double V_T = 0.0;
    double z_max = 0.0;
    double z_threshold = 0.0;

    [[nodiscard]] static LyapunovBudget from_norms(double z_max, double z_threshold) {
        LyapunovBudget b{0.25 * z_max * z_max, 0.25 * z_threshold * z_threshold, z_max, z_threshold};
        b.validate();
        return b;
    }

    void validate() const {
        if (!(z_max > 0.0) || !(z_threshold > 0.0)) throw ConfigError("norm bounds must be > 0", "budget");
        if (!(V_T > 0.0)) throw ConfigError("V_T must be > 0", "budget.z_threshold");
        if (!(V_M > V_T)) throw ConfigError("V_M must exceed V_T (z_max > z_threshold)", "budget.z_max");
        const auto close = [](double a, double b) { return std::abs(a - b) <= 1e-12 * std::max(1.0, std::abs(b)); };
        if (!close(V_M, 0.25 * z_max * z_max) || !close(V_T, 0.25 * z_threshold * z_threshold)) {
            throw ConfigError("V_M, V_T inconsistent with z_max, z_threshold", "budget");
        }
    }
};

/// Decay rate in the feedback region and growth rate outside it.
struct Rates {
    double lambda_s = 0.0;
    double lambda_u = 0.0;
    double c = 0.0;
    double k1_min = 0.0;
    double k2_min = 0.0;
};

/// λ_s = 2·min(k̲1, k̲2 − c), λ_u = 2c + 1. Requires k̲2 > c.
[[nodiscard]] inline Rates compute_rates(const Matrix& k1, const Matrix& k2, double c) {
    Rates r;
    r.c = c;
    r.k1_min = min_eigenvalue(k1);
    r.k2_min = min_eigenvalue(k2);
    if (!(r.k2_min > c)) {
        throw InfeasibleError("observer gain too small: min eigenvalue of k2 (" + std::to_string(r.k2_min) +
                              ") must exceed the Lipschitz constant c (" + std::to_string(c) + ")");
    }
    if (!(r.k1_min > 0.0)) throw InfeasibleError("controller gain k1 must be positive definite");
    r.lambda_s = 2.0 * std::min(r.k1_min, r.k2_min - c);
    r.lambda_u = 2.0 * c + 1.0;
    return r;
}

/// ½‖e1‖² + ½‖e2‖².
[[nodiscard]] inline double v_sigma(const StateVec& e1, const StateVec& e2) {
    return 0.5 * e1.squaredNorm() + 0.5 * e2.squaredNorm();
}

// ── Dwell-time conditions ────────────────────────────────────────────────────

/// Time needed in the feedback region to bring V from V_entry down to V_T
/// (zero when already below), without the lower floor.
[[nodiscard]] inline double min_dwell_formula(double V_entry, double V_T, double lambda_s) {
    if (!std::isfinite(V_entry) || V_entry < 0.0) throw ContractViolation("min_dwell: V_entry must be finite and >= 0");
    if (V_entry <= V_T) return 0.0;
    return -std::log(V_T / V_entry) / lambda_s;
}

/// Minimum feedback-availability dwell time, floored at `alpha`.
[[nodiscard]] inline double min_dwell(double V_entry, const LyapunovBudget& budget, const Rates& rates, double alpha) {
    if (!(alpha >= 0.0)) throw ContractViolation("min_dwell: alpha must be >= 0");
    return std::max(alpha, min_dwell_formula(V_entry, budget.V_T, rates.lambda_s));
}

/// Maximum loss-of-feedback dwell time for growth V̇ ≤ λ_u·V + ½d̄².
[[nodiscard]] inline double max_dwell(double V_exit, const LyapunovBudget& budget, const Rates& rates, double d_bar) {
    if (!std::isfinite(V_exit) || V_exit < 0.0) throw ContractViolation("max_dwell: V_exit must be finite and >= 0");
    if (V_exit > budget.V_M) {
        throw InfeasibleError("max_dwell: V at exit (" + std::to_string(V_exit) + ") already exceeds V_M (" +
                              std::to_string(budget.V_M) + ")");
    }
    const double offset = d_bar * d_bar / (2.0 * rates.lambda_u);
    return std::log((budget.V_M + offset) / (V_exit + offset)) / rates.lambda_u;
}

/// Maximum loss-of-feedback dwell time for the single integrator, where
/// V(τ) ≤ ½d̄²τ² + d̄‖e2(t_u)‖τ + V(t_u). Positive root of V(τ) = V_M.
/// Returns +∞ when d̄ = 0.
[[nodiscard]] inline double max_dwell_single_integrator(double V_exit, double e2_exit_norm, double V_M, double d_bar) {
    if (!std::isfinite(V_exit) || V_exit < 0.0 || !(e2_exit_norm >= 0.0)) {
        throw ContractViolation("max_dwell_single_integrator: V_exit and ‖e2‖ must be finite and >= 0");
    }
    if (V_exit > V_M) {
        throw InfeasibleError("max_dwell_single_integrator: V at exit (" + std::to_string(V_exit) +
                              ") already exceeds V_M (" + std::to_string(V_M) + ")");
    }
    if (0.5 * e2_exit_norm * e2_exit_norm > V_exit * (1.0 + 1e-12) + 1e-300) {
        throw ContractViolation("max_dwell_single_integrator: ½‖e2‖² exceeds V_exit");
    }
    if (d_bar < 0.0) throw ContractViolation("max_dwell_single_integrator: d_bar must be >= 0");
    if (d_bar == 0.0) return std::numeric_limits<double>::infinity();
    const double headroom = V_M - V_exit;
    if (headroom == 0.0) return 0.0;
    // (√(e² + 2h) − e)/d̄ rewritten without the cancellation.
    const double root = std::sqrt(e2_exit_norm * e2_exit_norm + 2.0 * headroom);
    return 2.0 * headroom / ((root + e2_exit_norm) * d_bar);
}

// ── Envelopes ────────────────────────────────────────────────────────────────

/// Upper bound on V a time `tau` after entering the feedback region.
/// `floor_rate` is the constant term of V̇ ≤ −λ_s V + floor_rate (zero for the
/// sliding-mode observer, ε/4 for the high-gain one).
[[nodiscard]] inline double stable_envelope(double V_entry, double tau, double lambda_s, double floor_rate = 0.0) {
    const double decay = std::exp(-lambda_s * tau);
    return V_entry * decay + (floor_rate / lambda_s) * (1.0 - decay);
}

/// V(t_u)·e^{λ_u τ} + (d̄²/2λ_u)(e^{λ_u τ} − 1).
[[nodiscard]] inline double unstable_envelope(double V_exit, double tau, double lambda_u, double d_bar) {
    const double growth = std::exp(lambda_u * tau);
    return V_exit * growth + (d_bar * d_bar / (2.0 * lambda_u)) * (growth - 1.0);
}

/// ½d̄²τ² + d̄‖e2(t_u)‖τ + V(t_u).
[[nodiscard]] inline double integrator_envelope(double V_exit, double e2_exit_norm, double tau, double d_bar) {
    return 0.5 * d_bar * d_bar * tau * tau + d_bar * e2_exit_norm * tau + V_exit;
}

/// Steady constant in V̇ ≤ −λ_s V + (·) contributed by the robustifying term.
[[nodiscard]] inline double robust_floor_rate(const EstimatorGains& gains) {
    return gains.robust == EstimatorGains::Robust::HighGain ? 0.25 * gains.epsilon : 0.0;
}

// ── Dwell policy ─────────────────────────────────────────────────────────────

/// Which maximum-dwell bound the planner schedules against.
enum class MaxDwellFormula { General, Integrator };

/// Supervisor context handed to the trajectory planner: budgets, rates and
/// the dwell formulas configured for the scenario.
struct DwellPolicy {
    LyapunovBudget budget;
    Rates rates;
    double alpha = 0.25;
    double d_bar = 0.0;
    MaxDwellFormula max_formula = MaxDwellFormula::General;

    [[nodiscard]] double min_dwell_time(double V_entry) const { return min_dwell(V_entry, budget, rates, alpha); }

    [[nodiscard]] double max_dwell_time(double V_exit, double e2_exit_norm) const {
        if (max_formula == MaxDwellFormula::Integrator) {
            return max_dwell_single_integrator(V_exit, e2_exit_norm, budget.V_M, d_bar);
        }
        return max_dwell(V_exit, budget, rates, d_bar);
    }

    /// Upper bound on (V, ‖e2‖) a time `tau` after an exit at (V_exit, ‖e2‖),
    /// consistent with the configured maximum-dwell formula.
    [[nodiscard]] std::pair<double, double> propagate_bound(double V_exit, double e2_exit_norm, double tau) const {
        if (max_formula == MaxDwellFormula::Integrator) {
            return {integrator_envelope(V_exit, e2_exit_norm, tau, d_bar), e2_exit_norm + d_bar * tau};
        }
        const double V = unstable_envelope(V_exit, tau, rates.lambda_u, d_bar);
        return {V, std::sqrt(2.0 * V)};
    }
};

// ── Switching signal ─────────────────────────────────────────────────────────

/// Piecewise-constant, right-continuous phase record. Starts in phase a at t = 0.
class SwitchSignal {
public:
    SwitchSignal() : entries_{0.0} {}

    [[nodiscard]] Phase phase() const noexcept { return phase_; }
    [[nodiscard]] const std::vector<double>& entries() const noexcept { return entries_; }
    [[nodiscard]] const std::vector<double>& exits() const noexcept { return exits_; }
    [[nodiscard]] std::size_t cycle_index() const noexcept { return entries_.size() - 1; }

    /// Records a transition at time t into `next`. Throws unless phases
    /// alternate and times strictly increase.
    void record(Phase next, double t) {
        if (next == phase_) throw ContractViolation("switch signal: repeated phase");
        const double last = exits_.size() == entries_.size() ? exits_.back() : entries_.back();
        if (!(t > last)) throw ContractViolation("switch signal: transition times must increase strictly");
        if (next == Phase::u) {
            exits_.push_back(t);
        } else {
            entries_.push_back(t);
        }
        phase_ = next;
    }

    [[nodiscard]] Phase at(double t) const {
        Phase p = Phase::a;
        for (std::size_t i = 0; i < exits_.size(); ++i) {
            if (t >= exits_[i]) p = Phase::u;
            if (i + 1 < entries_.size() && t >= entries_[i + 1]) p = Phase::a;
        }
        return p;
    }

private:
    Phase phase_ = Phase::a;
    std::vector<double> entries_;
    std::vector<double> exits_;
};

// ── Runtime monitor ──────────────────────────────────────────────────────────

struct MonitorConfig {
    LyapunovBudget budget;
    Rates rates;
    double d_bar = 0.0;
    double stable_floor_rate = 0.0;
    double slack_rel = 0.05;
    double slack_abs = 1e-9;
    double chatter_floor = 0.0;  // m², added to the envelope limits
};

/// Amplitude of the discrete sliding-mode band in V: each e2 component can
/// sit up to 2·d̄·dt from zero after a sign flip.
[[nodiscard]] inline double sliding_chatter_floor(const EstimatorGains& gains, Index n, double dt) {
    if (gains.robust != EstimatorGains::Robust::SlidingMode) return 0.0;
    const double band = 2.0 * gains.d_bar * dt;
    return 0.5 * static_cast<double>(n) * band * band;
}

struct Violation {
    enum class Kind { Bound, StableEnvelope, UnstableEnvelope, ExitThreshold, Reentry };
    Kind kind;
    double t;
    double value;
    double limit;
};

[[nodiscard]] inline const char* to_string(Violation::Kind k) noexcept {
    switch (k) {
        case Violation::Kind::Bound: return "bound";
        case Violation::Kind::StableEnvelope: return "stable_envelope";
        case Violation::Kind::UnstableEnvelope: return "unstable_envelope";
        case Violation::Kind::ExitThreshold: return "exit_threshold";
        case Violation::Kind::Reentry: return "reentry";
    }
    return "?";
}

/// Checks the stability claims along a run:
///  (i)   V ≤ V_M once the first excursion has begun,
///  (ii)  V ≤ stable envelope from the last entry while feedback is available,
///  (iii) V ≤ growth envelope from the last exit while it is not,
///  (iv)  V ≤ V_T at every exit.
/// The initial feedback phase may start above V_M; (ii) covers it.
class Monitor {
public:
    explicit Monitor(MonitorConfig cfg) : cfg_(std::move(cfg)) {}

    void begin(double t0, double V0) {
        phase_ = Phase::a;
        anchor_t_ = t0;
        anchor_V_ = V0;
        excursion_started_ = false;
    }

    void on_exit(double t, double V) {
        if (V > with_slack(cfg_.budget.V_T)) record(Violation::Kind::ExitThreshold, t, V, cfg_.budget.V_T);
        phase_ = Phase::u;
        anchor_t_ = t;
        anchor_V_ = V;
        excursion_started_ = true;
    }

    void on_entry(double t, double V) {
        phase_ = Phase::a;
        anchor_t_ = t;
        anchor_V_ = V;
    }

    void on_failed_reentry(double t, double V) { record(Violation::Kind::Reentry, t, V, 0.0); }

    /// One sample. `phase` must agree with the last transition reported.
    void step(double t, const StateVec& e1, const StateVec& e2, Phase phase) { step(t, v_sigma(e1, e2), phase); }

    void step(double t, double V, Phase phase) {
        if (phase != phase_) throw ContractViolation("monitor: phase changed without a transition event");
        ++samples_;
        if (excursion_started_ && V > with_slack(cfg_.budget.V_M)) record(Violation::Kind::Bound, t, V, cfg_.budget.V_M);
        const double tau = std::max(0.0, t - anchor_t_);
        if (phase == Phase::a) {
            const double env = stable_envelope(anchor_V_, tau, cfg_.rates.lambda_s, cfg_.stable_floor_rate);
            if (V > with_slack(env) + cfg_.chatter_floor) record(Violation::Kind::StableEnvelope, t, V, env);
        } else {
            const double env = unstable_envelope(anchor_V_, tau, cfg_.rates.lambda_u, cfg_.d_bar);
            if (V > with_slack(env) + cfg_.chatter_floor) record(Violation::Kind::UnstableEnvelope, t, V, env);
        }
    }

    [[nodiscard]] bool passed() const noexcept { return violations_.empty(); }
    [[nodiscard]] const std::vector<Violation>& violations() const noexcept { return violations_; }
    [[nodiscard]] std::size_t samples() const noexcept { return samples_; }
    [[nodiscard]] const MonitorConfig& config() const noexcept { return cfg_; }

private:
    [[nodiscard]] double with_slack(double bound) const { return bound * (1.0 + cfg_.slack_rel) + cfg_.slack_abs; }

    void record(Violation::Kind kind, double t, double V, double limit) { violations_.push_back({kind, t, V, limit}); }

    MonitorConfig cfg_;
    Phase phase_ = Phase::a;
    double anchor_t_ = 0.0;
    double anchor_V_ = 0.0;
    bool excursion_started_ = false;
    std::size_t samples_ = 0;
    std::vector<Violation> violations_;
};

}  // namespace dwellsim
