#pragma once

#include "dwellsim/plant.hpp"
#include "dwellsim/types.hpp"

namespace dwellsim {

/// Observer gains. The robustifying term is either the discontinuous
/// sliding-mode law or the continuous high-gain variant.
struct EstimatorGains {
    enum class Robust { SlidingMode, HighGain };

    Matrix k2;
    double d_bar = 0.0;
    Robust robust = Robust::SlidingMode;
    double epsilon = 0.1; // HighGain only

    void validate() const {
        require_spd(k2, "estimator.k2");
        if (!(d_bar >= 0.0)) throw ConfigError("must be >= 0", "disturbance.d_bar");
        if (robust == Robust::HighGain && !(epsilon > 0.0)) throw ConfigError("must be > 0", "estimator.epsilon");
    }
};

struct EstimatorState {
    StateVec x_hat;
};

/// v_r from the measured estimation error e2 = x − x̂.
///   SlidingMode: k2·e2 + d̄·sgn(e2)   (sgn(0) = 0)
///   HighGain:    k2·e2 + (d̄²/ε)·e2
[[nodiscard]] inline StateVec robust_term(const EstimatorGains& gains, const StateVec& e2) {
    if (gains.robust == EstimatorGains::Robust::SlidingMode) return gains.k2 * e2 + gains.d_bar * sgn(e2);
    return gains.k2 * e2 + (gains.d_bar * gains.d_bar / gains.epsilon) * e2;
}

/// Observer (phase a) or predictor (phase u) rate. The predictor has no
/// measurement, so a nonzero `vr` in phase u is a contract violation.
[[nodiscard]] inline StateVec estimate_deriv(Phase phase, const PlantModel& model, const EstimatorState& est,
                                             const StateVec& v, const StateVec& vr, double t) {
    if (phase == Phase::u) {
        if (vr.size() != 0 && vr.cwiseAbs().maxCoeff() != 0.0) {
            throw ContractViolation("robustifying term supplied while feedback is unavailable");
        }
        return drift(model, est.x_hat, t) + v;
    }
    return drift(model, est.x_hat, t) + v + vr;
}

/// Integrates the estimate over one step with v and vr held.
[[nodiscard]] inline EstimatorState advance_estimate(Phase phase, const PlantModel& model, const EstimatorState& est,
                                                     const StateVec& v, const StateVec& vr, double dt, double t,
                                                     IntegrationMethod method = IntegrationMethod::RK4) {
    if (dt < 0.0) throw ContractViolation("advance_estimate requires dt >= 0");
    if (dt == 0.0) return est;
    // Validates the phase/vr contract once; the stages reuse the same inputs.
    (void)estimate_deriv(phase, model, est, v, vr, t);
    const StateVec forcing = phase == Phase::a ? StateVec(v + vr) : v;
    auto rhs = [&](double tau, const StateVec& y) -> StateVec { return drift(model, y, tau) + forcing; };
    return {integrate_step(method, rhs, est.x_hat, t, dt)};
}

}  // namespace dwellsim
