#pragma once

#include <cstdint>
#include <string>

#include "dwellsim/rng.hpp"
#include "dwellsim/types.hpp"

namespace dwellsim {

// ── Integration ──────────────────────────────────────────────────────────────

enum class IntegrationMethod { RK4, Euler };

struct IntegratorConfig {
    double dt = 1e-3;
    IntegrationMethod method = IntegrationMethod::RK4;

    void validate() const {
        if (!(dt > 0.0) || !std::isfinite(dt)) throw ConfigError("must be > 0", "integrator.dt");
    }
};

/// One fixed step of `method` on y' = rhs(t, y).
template <class Vec, class Rhs>
[[nodiscard]] Vec integrate_step(IntegrationMethod method, const Rhs& rhs, const Vec& y, double t, double dt) {
    if (method == IntegrationMethod::Euler) return y + dt * rhs(t, y);
    const Vec k1 = rhs(t, y);
    const Vec k2 = rhs(t + 0.5 * dt, y + (0.5 * dt) * k1);
    const Vec k3 = rhs(t + 0.5 * dt, y + (0.5 * dt) * k2);
    const Vec k4 = rhs(t + dt, y + dt * k3);
    return y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

// ── Plant ────────────────────────────────────────────────────────────────────

/// Drift model f(x, t): linear A·x, or the single integrator (f = 0).
struct PlantModel {
    enum class Kind { Linear, SingleIntegrator };

    Kind kind = Kind::SingleIntegrator;
    Matrix A;                 // Linear only, n×n, 1/s
    double lipschitz_c = 0.0; // 1/s
    Index n = 0;

    [[nodiscard]] static PlantModel linear(Matrix a) {
        PlantModel m;
        m.kind = Kind::Linear;
        m.n = a.rows();
        m.lipschitz_c = spectral_norm(a);
        m.A = std::move(a);
        return m;
    }

    [[nodiscard]] static PlantModel single_integrator(Index n) {
        PlantModel m;
        m.kind = Kind::SingleIntegrator;
        m.n = n;
        return m;
    }

    void validate() const {
        if (n <= 0) throw ConfigError("state dimension must be positive", "plant");
        if (kind == Kind::Linear) {
            if (A.rows() != n || A.cols() != n) throw ConfigError("must be n×n", "plant.A");
            if (!A.allFinite()) throw ConfigError("non-finite entries", "plant.A");
            const double norm = spectral_norm(A);
            if (lipschitz_c < norm * (1.0 - 1e-12)) {
                throw ConfigError("lipschitz_c " + std::to_string(lipschitz_c) +
                                      " is below the operator norm of A (" + std::to_string(norm) + ")",
                                  "plant.lipschitz_c");
            }
        } else if (lipschitz_c != 0.0) {
            throw ConfigError("must be 0 for the single integrator", "plant.lipschitz_c");
        }
    }
};

[[nodiscard]] inline StateVec drift(const PlantModel& model, const StateVec& x, double /*t*/) {
    if (model.kind == PlantModel::Kind::Linear) return model.A * x;
    return StateVec::Zero(x.size());
}

/// x ← x + one step of ẋ = f(x,t) + v + d with v and d held over the step.
[[nodiscard]] inline StateVec step(const PlantModel& model, const StateVec& x, const StateVec& control,
                                   const StateVec& disturbance, double dt, double t,
                                   IntegrationMethod method = IntegrationMethod::RK4) {
    if (!(dt > 0.0)) throw ContractViolation("plant step requires dt > 0");
    if (!x.allFinite() || !control.allFinite() || !disturbance.allFinite()) {
        throw NumericFault("non-finite plant input", 0, t);
    }
    const StateVec forcing = control + disturbance;
    auto rhs = [&](double tau, const StateVec& y) -> StateVec { return drift(model, y, tau) + forcing; };
    return integrate_step(method, rhs, x, t, dt);
}

// ── Disturbance ──────────────────────────────────────────────────────────────

/// Bounded exogenous disturbance: per-component uniform box, or none.
struct DisturbanceModel {
    enum class Kind { None, UniformBox };

    Kind kind = Kind::None;
    StateVec lo;
    StateVec hi;
    double d_bar = 0.0;

    void validate(Index n) const {
        if (!(d_bar >= 0.0) || !std::isfinite(d_bar)) throw ConfigError("must be >= 0", "disturbance.d_bar");
        if (kind == Kind::None) return;
        if (lo.size() != n || hi.size() != n) {
            throw ConfigError("range must have one [lo, hi] pair per state component", "disturbance.range");
        }
        if (!lo.allFinite() || !hi.allFinite() || (hi.array() < lo.array()).any()) {
            throw ConfigError("each component needs finite lo <= hi", "disturbance.range");
        }
    }
};

/// Draws one disturbance vector. Samples whose norm exceeds d_bar are scaled
/// back onto the d_bar sphere and counted in `clamp_count`.
[[nodiscard]] inline StateVec sample_disturbance(const DisturbanceModel& model, Index n, CounterRng& rng,
                                                 std::uint64_t* clamp_count = nullptr) {
    StateVec d = StateVec::Zero(n);
    if (model.kind == DisturbanceModel::Kind::None) return d;
    for (Index i = 0; i < n; ++i) d[i] = model.lo[i] + (model.hi[i] - model.lo[i]) * rng.uniform01();
    const double norm = d.norm();
    if (norm > model.d_bar) {
        d *= model.d_bar / norm;
        // Rounding in the rescale can leave the norm one ulp high.
        while (d.norm() > model.d_bar) d *= (1.0 - 1e-16);
        if (clamp_count) ++*clamp_count;
    }
    return d;
}

}  // namespace dwellsim
