#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <string>
#include <vector>

#include "dwellsim/controller.hpp"
#include "dwellsim/estimator.hpp"
#include "dwellsim/geometry.hpp"
#include "dwellsim/plant.hpp"
#include "dwellsim/supervisor.hpp"
#include "dwellsim/trajectory.hpp"

namespace dwellsim {

/// Full closed-loop configuration of one run.
struct Scenario {
    Index n = 0;
    PlantModel plant;
    DisturbanceModel disturbance;
    EstimatorGains estimator;
    bool reset_on_entry = false;
    ControllerGains controller;

    double z_max = 0.0;
    double z_threshold = 0.0;

    double alpha = 0.25;
    MaxDwellFormula max_dwell = MaxDwellFormula::General;
    double monitor_slack = 0.05;

    StateVec region_center;
    double region_radius = 1.0;
    std::vector<Index> position_dims;

    DesiredPath path;
    PartitionWeights weights;
    double margin = 0.0;
    double intermediate_scale = 1.0;

    IntegratorConfig integrator;
    double duration = 0.0;
    std::uint64_t seed = 0;

    StateVec x0;
    StateVec x_hat0;

    [[nodiscard]] LyapunovBudget budget() const { return LyapunovBudget::from_norms(z_max, z_threshold); }
    [[nodiscard]] FeedbackRegion region() const { return {region_center, region_radius, position_dims}; }
    [[nodiscard]] Rates rates() const { return compute_rates(controller.k1, estimator.k2, plant.lipschitz_c); }

    [[nodiscard]] DwellPolicy policy() const { return {budget(), rates(), alpha, disturbance.d_bar, max_dwell}; }

    [[nodiscard]] MonitorConfig monitor_config() const {
        return {budget(),      rates(), disturbance.d_bar, robust_floor_rate(estimator), monitor_slack,
                1e-9, sliding_chatter_floor(estimator, n, integrator.dt)};
    }

    /// Path with its plane bound to the region's position dimensions.
    [[nodiscard]] DesiredPath bound_path() const {
        DesiredPath p = path;
        if (position_dims.size() >= 2) p.plane = {position_dims[0], position_dims[1]};
        return p;
    }

    [[nodiscard]] SwitchingTrajectory trajectory() const {
        return {bound_path(), region(), budget().V_M, margin, weights};
    }

    /// Cross-module checks. Throws ConfigError / InfeasibleError; returns
    /// non-fatal warnings.
    [[nodiscard]] std::vector<std::string> validate() const {
        std::vector<std::string> warnings;
        if (n <= 0) throw ConfigError("must be > 0", "n");
        if (plant.n != n) throw ConfigError("plant dimension differs from n", "plant");
        plant.validate();
        disturbance.validate(n);
        if (estimator.k2.rows() != n) throw ConfigError("must be n×n", "estimator.k2");
        if (controller.k1.rows() != n) throw ConfigError("must be n×n", "controller.k1");
        estimator.validate();
        controller.validate();
        if (!(disturbance.d_bar == estimator.d_bar)) throw ConfigError("estimator d_bar must match", "disturbance.d_bar");
        const LyapunovBudget b = budget();
        (void)rates();
        if (estimator.robust == EstimatorGains::Robust::HighGain && b.V_T < estimator.epsilon) {
            warnings.push_back("high-gain robustifier with V_T = " + std::to_string(b.V_T) + " < epsilon = " +
                               std::to_string(estimator.epsilon) + "; the exit threshold may be unreachable");
        }
        if (!(alpha > 0.0) || !std::isfinite(alpha)) throw ConfigError("must be > 0", "supervisor.alpha");
        if (!(monitor_slack >= 0.0)) throw ConfigError("must be >= 0", "supervisor.monitor_slack");
        if (max_dwell == MaxDwellFormula::Integrator) {
            if (plant.kind != PlantModel::Kind::SingleIntegrator) {
                throw ConfigError("integrator formula requires the single-integrator plant", "supervisor.max_dwell");
            }
            if (!(disturbance.d_bar > 0.0)) {
                warnings.push_back("d_bar = 0 makes the integrator maximum dwell unbounded");
            }
        }
        const FeedbackRegion reg = region();
        if (reg.min_state_dim() > n) throw ConfigError("index exceeds state dimension", "region.position_dims");
        if (path.base.size() != n) throw ConfigError("must have n entries", "path.base");
        if (!(intermediate_scale > 0.0 && intermediate_scale <= 1.0)) {
            throw ConfigError("must lie in (0, 1]", "trajectory.intermediate_scale");
        }
        (void)trajectory();
        integrator.validate();
        if (!(duration > 0.0) || !std::isfinite(duration)) throw ConfigError("must be > 0", "duration");
        if (x0.size() != n || !x0.allFinite()) throw ConfigError("must be n finite values", "initial.x");
        if (x_hat0.size() != n || !x_hat0.allFinite()) throw ConfigError("must be n finite values", "initial.x_hat");
        if (!reg.contains(x0)) throw ConfigError("initial state must lie in the feedback region", "initial.x");
        return warnings;
    }
};

[[nodiscard]] inline bool operator==(const Scenario& a, const Scenario& b) {
    const auto veq = [](const StateVec& p, const StateVec& q) { return p.size() == q.size() && p == q; };
    const auto meq = [](const Matrix& p, const Matrix& q) {
        return p.rows() == q.rows() && p.cols() == q.cols() && p == q;
    };
    return a.n == b.n && a.plant.kind == b.plant.kind && meq(a.plant.A, b.plant.A) &&
           a.plant.lipschitz_c == b.plant.lipschitz_c && a.disturbance.kind == b.disturbance.kind &&
           veq(a.disturbance.lo, b.disturbance.lo) && veq(a.disturbance.hi, b.disturbance.hi) &&
           a.disturbance.d_bar == b.disturbance.d_bar && meq(a.estimator.k2, b.estimator.k2) &&
           a.estimator.d_bar == b.estimator.d_bar && a.estimator.robust == b.estimator.robust &&
           a.estimator.epsilon == b.estimator.epsilon && a.reset_on_entry == b.reset_on_entry &&
           meq(a.controller.k1, b.controller.k1) && a.z_max == b.z_max && a.z_threshold == b.z_threshold &&
           a.alpha == b.alpha && a.max_dwell == b.max_dwell && a.monitor_slack == b.monitor_slack &&
           veq(a.region_center, b.region_center) && a.region_radius == b.region_radius &&
           a.position_dims == b.position_dims && veq(a.path.center, b.path.center) &&
           a.path.radius == b.path.radius && a.path.omega == b.path.omega &&
           a.path.initial_phase == b.path.initial_phase && veq(a.path.base, b.path.base) &&
           a.path.heading_dim == b.path.heading_dim && a.weights.p == b.weights.p && a.margin == b.margin &&
           a.intermediate_scale == b.intermediate_scale && a.integrator.dt == b.integrator.dt &&
           a.integrator.method == b.integrator.method && a.duration == b.duration && a.seed == b.seed &&
           veq(a.x0, b.x0) && veq(a.x_hat0, b.x_hat0);
}

// ── Presets ──────────────────────────────────────────────────────────────────

namespace presets {

/// Planar vehicle (x, y, θ) with linear drift, sliding-mode observer, circle
/// of radius 2 around a unit feedback disc; 30 s.
[[nodiscard]] inline Scenario sim_circle() {
    Scenario s;
    s.n = 3;
    s.plant = PlantModel::linear(0.5 * Matrix::Identity(3, 3));
    s.disturbance.kind = DisturbanceModel::Kind::UniformBox;
    s.disturbance.lo = StateVec::Zero(3);
    s.disturbance.hi = StateVec::Constant(3, 0.06);
    s.disturbance.d_bar = 0.06 * std::sqrt(3.0);
    s.estimator.k2 = 3.0 * Matrix::Identity(3, 3);
    s.estimator.d_bar = s.disturbance.d_bar;
    s.estimator.robust = EstimatorGains::Robust::SlidingMode;
    s.controller.k1 = 3.0 * Matrix::Identity(3, 3);
    s.z_max = 0.9;
    s.z_threshold = 0.02;
    s.alpha = 0.25;
    s.max_dwell = MaxDwellFormula::General;
    s.region_center = StateVec::Zero(2);
    s.region_radius = 1.0;
    s.position_dims = {0, 1};
    s.path.center = StateVec::Zero(2);
    s.path.radius = 2.0;
    s.path.omega = std::numbers::pi / 5.0;
    // Start at the bottom of the circle so the tangent heading at t = 0 is 0,
    // matching the initial heading of the vehicle.
    s.path.initial_phase = -0.5 * std::numbers::pi;
    s.path.base = StateVec::Zero(3);
    s.path.heading_dim = 2;
    s.weights.p = {0.0, 0.3, 0.4, 0.3};
    s.integrator = {1e-3, IntegrationMethod::RK4};
    s.duration = 30.0;
    s.seed = 1;
    s.x0 = (StateVec(3) << 0.1, 0.2, 0.0).finished();
    s.x_hat0 = (StateVec(3) << 0.2, 0.3, std::numbers::pi / 6.0).finished();
    return s;
}

/// Quadcopter position + yaw (x, y, z, ψ) as a single integrator with a
/// high-gain observer; circle of radius 1.5 with a scaled intermediate target;
/// 185 s.
[[nodiscard]] inline Scenario quad_integrator() {
    Scenario s;
    s.n = 4;
    s.plant = PlantModel::single_integrator(4);
    s.disturbance.kind = DisturbanceModel::Kind::UniformBox;
    s.disturbance.lo = StateVec::Zero(4);
    s.disturbance.hi = StateVec::Constant(4, 0.0175);
    s.disturbance.d_bar = 0.035;
    s.estimator.k2 = 0.6 * Matrix::Identity(4, 4);
    s.estimator.d_bar = 0.035;
    s.estimator.robust = EstimatorGains::Robust::HighGain;
    s.estimator.epsilon = 0.1;
    s.controller.k1 = 0.4 * Matrix::Identity(4, 4);
    s.z_max = 0.9;
    s.z_threshold = 0.14;
    s.alpha = 0.25;
    s.max_dwell = MaxDwellFormula::Integrator;
    s.region_center = StateVec::Zero(2);
    s.region_radius = 1.0;
    s.position_dims = {0, 1};
    s.path.center = StateVec::Zero(2);
    s.path.radius = 1.5;
    s.path.omega = std::numbers::pi / 15.0;
    s.path.initial_phase = 0.0;
    s.path.base = StateVec::Zero(4);
    s.weights.p = {0.0, 0.4, 0.2, 0.4};
    s.intermediate_scale = 0.7;
    s.integrator = {1e-3, IntegrationMethod::RK4};
    s.duration = 185.0;
    s.seed = 1;
    s.x0 = (StateVec(4) << 0.1, 0.2, 0.0, 0.0).finished();
    s.x_hat0 = (StateVec(4) << 0.2, 0.3, 0.0, 0.1).finished();
    return s;
}

[[nodiscard]] inline std::vector<std::string> names() { return {"sim-circle", "quad-integrator"}; }

[[nodiscard]] inline Scenario by_name(const std::string& name) {
    if (name == "sim-circle") return sim_circle();
    if (name == "quad-integrator") return quad_integrator();
    throw ConfigError("unknown preset '" + name + "' (expected sim-circle or quad-integrator)", "preset");
}

}  // namespace presets

}  // namespace dwellsim
