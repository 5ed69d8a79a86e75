#pragma once

#include "dwellsim/types.hpp"

namespace dwellsim {

struct ControllerGains {
    Matrix k1;

    void validate() const { require_spd(k1, "controller.k1"); }
};

/// Tracking control for either phase:
///   a: ẋ̄_d − f(x̂) − k1·e1 − v_r
///   u: ẋ̄_d − f(x̂) − k1·e1
/// Substituted into the estimate dynamics this gives ė1 = −k1·e1 in both
/// phases. `vr` must be zero (or empty) in phase u.
[[nodiscard]] inline StateVec control(Phase phase, const StateVec& xbar_d_dot, const StateVec& f_hat,
                                      const StateVec& e1, const ControllerGains& gains, const StateVec& vr) {
    StateVec v = xbar_d_dot - f_hat - gains.k1 * e1;
    if (phase == Phase::u) {
        if (vr.size() != 0 && vr.cwiseAbs().maxCoeff() != 0.0) {
            throw ContractViolation("robustifying term supplied while feedback is unavailable");
        }
        return v;
    }
    if (vr.size() != 0) v -= vr;
    return v;
}

}  // namespace dwellsim
