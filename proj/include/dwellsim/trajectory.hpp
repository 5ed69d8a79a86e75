#pragma once

#include <array>
#include <cmath>
#include <numbers>
#include <limits>
#include <optional>
#include <string>

#include "dwellsim/geometry.hpp"
#include "dwellsim/supervisor.hpp"
#include "dwellsim/types.hpp"

namespace dwellsim {

// ── Smootherstep blending ────────────────────────────────────────────────────

[[nodiscard]] constexpr double clamp01(double rho) noexcept { return rho < 0.0 ? 0.0 : (rho > 1.0 ? 1.0 : rho); }

/// 6ρ⁵ − 15ρ⁴ + 10ρ³ on ρ clamped to [0, 1].
[[nodiscard]] constexpr double smootherstep(double rho) noexcept {
    const double r = clamp01(rho);
    return r * r * r * (r * (6.0 * r - 15.0) + 10.0);
}

/// dS/dρ = 30ρ⁴ − 60ρ³ + 30ρ² on the clamped argument.
[[nodiscard]] constexpr double smootherstep_deriv(double rho) noexcept {
    const double r = clamp01(rho);
    return 30.0 * r * r * (r - 1.0) * (r - 1.0);
}

/// d²S/dρ² = 120ρ³ − 180ρ² + 60ρ on the clamped argument.
[[nodiscard]] constexpr double smootherstep_deriv2(double rho) noexcept {
    const double r = clamp01(rho);
    return 60.0 * r * (r - 1.0) * (2.0 * r - 1.0);
}

/// s·q + (1 − s)·r.
[[nodiscard]] inline StateVec blend(double s, const StateVec& q, const StateVec& r) { return s * q + (1.0 - s) * r; }

/// A point and its time derivative.
struct Timed {
    StateVec x;
    StateVec dx;
};

/// Blend of two moving points with weight S(ρ(t)), ρ̇ = rho_rate, by the
/// product rule: Ṡρ̇(q − r) + S q̇ + (1 − S) ṙ.
[[nodiscard]] inline Timed blend_timed(double rho, double rho_rate, const Timed& q, const Timed& r) {
    const double s = smootherstep(rho);
    const double ds = (rho > 0.0 && rho < 1.0) ? smootherstep_deriv(rho) * rho_rate : 0.0;
    return {blend(s, q.x, r.x), ds * (q.x - r.x) + s * q.dx + (1.0 - s) * r.dx};
}

// ── Desired path ─────────────────────────────────────────────────────────────

/// Circle in the region's position plane traversed at constant angular rate.
/// Components outside the plane come from `base`; if `heading_dim` is set,
/// that component carries the (unwrapped) tangent heading.
struct DesiredPath {
    StateVec center;             // 2 entries, region position_dims order
    double radius = 1.0;         // m
    double omega = 0.0;          // rad/s
    double initial_phase = 0.0;  // rad
    StateVec base;               // full state dimension
    std::optional<Index> heading_dim;
    std::array<Index, 2> plane{0, 1};

    [[nodiscard]] Index dim() const noexcept { return base.size(); }

    [[nodiscard]] double heading(double t) const {
        const double turn = omega < 0.0 ? -0.5 * std::numbers::pi : 0.5 * std::numbers::pi;
        return initial_phase + omega * t + turn;
    }

    /// Target on the path at time t, with its analytic rate.
    [[nodiscard]] Timed eval(double t) const {
        const double phi = initial_phase + omega * t;
        Timed g{base, StateVec::Zero(base.size())};
        g.x[plane[0]] = center[0] + radius * std::cos(phi);
        g.x[plane[1]] = center[1] + radius * std::sin(phi);
        g.dx[plane[0]] = -radius * omega * std::sin(phi);
        g.dx[plane[1]] = radius * omega * std::cos(phi);
        if (heading_dim) {
            g.x[*heading_dim] = heading(t);
            g.dx[*heading_dim] = omega;
        }
        return g;
    }

    /// Smallest signed distance to the region over one period (sampled).
    [[nodiscard]] double min_clearance(const FeedbackRegion& region, int samples = 3600) const {
        const double period = omega == 0.0 ? 0.0 : 2.0 * std::numbers::pi / std::abs(omega);
        const int count = omega == 0.0 ? 1 : samples;
        double lo = std::numeric_limits<double>::infinity();
        for (int k = 0; k < count; ++k) lo = std::min(lo, region.signed_distance(eval(period * k / count).x));
        return lo;
    }

    void validate(const FeedbackRegion& region) const {
        if (!(radius > 0.0) || !std::isfinite(radius)) throw ConfigError("must be > 0", "path.radius");
        if (!std::isfinite(omega)) throw ConfigError("must be finite", "path.omega");
        if (center.size() != 2) throw ConfigError("circle path needs a 2-D center", "path.center");
        if (region.position_dims().size() != 2) {
            throw ConfigError("circle path needs a region with exactly two position dims", "region.position_dims");
        }
        if (base.size() < region.min_state_dim()) throw ConfigError("state dimension too small", "path");
        if (heading_dim) {
            if (*heading_dim < 0 || *heading_dim >= base.size()) throw ConfigError("out of range", "path.heading_dim");
            for (Index d : region.position_dims()) {
                if (d == *heading_dim) throw ConfigError("collides with a position dimension", "path.heading_dim");
            }
        }
        const double clearance = min_clearance(region);
        if (!(clearance > 0.0)) {
            throw ConfigError("desired path must lie outside the feedback region (min clearance " +
                                  std::to_string(clearance) + " m)",
                              "path");
        }
    }
};

// ── Partition weights ────────────────────────────────────────────────────────

/// Split of each maximum dwell time: p0 hold at the boundary target, p1 blend
/// out to the path, p2 on the path, p3 blend back to the cushion.
struct PartitionWeights {
    std::array<double, 4> p{0.0, 0.3, 0.4, 0.3};

    void validate() const {
        double sum = 0.0;
        for (double w : p) {
            if (!(w >= 0.0 && w < 1.0)) throw ConfigError("each weight must lie in [0, 1)", "trajectory.weights");
            sum += w;
        }
        if (std::abs(sum - 1.0) > 1e-12) throw ConfigError("weights must sum to 1", "trajectory.weights");
        // Blend segments join distinct endpoints (path vs. region interior); a
        // zero-length blend would be a jump.
        if (p[1] == 0.0) throw ConfigError("p1 = 0 gives a zero-duration blend", "trajectory.weights");
        if (p[3] == 0.0) throw ConfigError("p3 = 0 gives a zero-duration blend", "trajectory.weights");
    }
};

// ── Cushion ──────────────────────────────────────────────────────────────────

struct Cushion {
    StateVec x_eps;
    double clearance = 0.0;  // r − (‖x_ε − c‖ + 2√V_M), ≥ 0 when the reach ball fits
};

/// x_ε = x_b + Φ with Φ = (2√V_M + margin)·n̂(x_b). Throws InfeasibleError if
/// the ball of radius 2√V_M about x_ε does not fit in the region.
[[nodiscard]] inline Cushion cushion(const FeedbackRegion& region, const StateVec& x_b, double V_M, double margin) {
    if (!(V_M >= 0.0) || !(margin >= 0.0)) throw ContractViolation("cushion: V_M and margin must be >= 0");
    const double reach = 2.0 * std::sqrt(V_M);
    const StateVec x_eps = x_b + (reach + margin) * region.inward_normal(x_b);
    const double depth = -region.signed_distance(x_eps);  // distance from x_ε to ∂F, inside positive
    const double clearance = depth - reach;
    if (clearance < -1e-12) {
        throw InfeasibleError("feedback region (radius " + std::to_string(region.radius()) +
                              ") cannot contain the reachability ball of radius " + std::to_string(reach) +
                              " about the cushion point");
    }
    return {x_eps, clearance};
}

// ── Cycle plan ───────────────────────────────────────────────────────────────

/// Schedule of one excursion. The feedback segment [t_a, t_u) is fixed at
/// planning time; the excursion part is filled in by `plan_exit` once V at
/// t_u is known.
struct CyclePlan {
    std::size_t i = 0;
    double t_a = 0.0;
    double dt_a = 0.0;
    double dt_a_formula = 0.0;  // minimum before the alpha floor
    double V_a = 0.0;
    double t_u = 0.0;
    std::optional<double> dt_u;
    double V_u = 0.0;
    double t_u0 = 0.0;  // end of the hold (p0)
    double t_u1 = 0.0;
    double t_u2 = 0.0;
    double t_u3 = 0.0;
    double intermediate_scale = 1.0;
    StateVec x_b;    // at t_a
    StateVec x_eps;  // at t_a

    [[nodiscard]] bool has_exit() const noexcept { return dt_u.has_value(); }
};

/// Places the feedback segment of cycle `i` starting at `t_entry` with the
/// minimum dwell for `V_entry`.
[[nodiscard]] inline CyclePlan plan_cycle(std::size_t i, double t_entry, double V_entry, const DwellPolicy& policy,
                                          double intermediate_scale = 1.0) {
    if (!(policy.alpha > 0.0)) throw ConfigError("must be > 0 for trajectory planning", "supervisor.alpha");
    CyclePlan plan;
    plan.i = i;
    plan.t_a = t_entry;
    plan.V_a = V_entry;
    plan.dt_a_formula = min_dwell_formula(V_entry, policy.budget.V_T, policy.rates.lambda_s);
    plan.dt_a = policy.min_dwell_time(V_entry);
    plan.t_u = t_entry + plan.dt_a;
    plan.intermediate_scale = intermediate_scale;
    return plan;
}

/// Fixes the excursion of `plan`: partition times t_u + (Σ_{k≤j} p_k)·Δt_u,
/// with the last one equal to t_u + Δt_u.
inline void plan_exit(CyclePlan& plan, double V_exit, double dt_u, const PartitionWeights& w) {
    if (!(dt_u > 0.0) || !std::isfinite(dt_u)) {
        throw InfeasibleError("maximum dwell time must be positive and finite (got " + std::to_string(dt_u) + ")");
    }
    plan.V_u = V_exit;
    plan.dt_u = dt_u;
    plan.t_u0 = plan.t_u + w.p[0] * dt_u;
    plan.t_u1 = plan.t_u + (w.p[0] + w.p[1]) * dt_u;
    plan.t_u2 = plan.t_u + (w.p[0] + w.p[1] + w.p[2]) * dt_u;
    plan.t_u3 = plan.t_u + dt_u;
}

// ── Switching trajectory ─────────────────────────────────────────────────────

/// Reference that alternates between the cushion inside the region and the
/// desired path outside it. Evaluation is pure; the owner swaps plans
/// between steps.
class SwitchingTrajectory {
public:
    SwitchingTrajectory(DesiredPath path, FeedbackRegion region, double V_M, double margin, PartitionWeights weights)
        : path_(std::move(path)), region_(std::move(region)), V_M_(V_M), margin_(margin), weights_(weights) {
        weights_.validate();
        if (!(margin_ >= 0.0)) throw ConfigError("must be >= 0", "trajectory.margin");
        path_.validate(region_);
        // The region is a ball, so the cushion geometry is the same for every
        // boundary point; one check covers all cycles.
        (void)cushion(region_, boundary_target(0.0).x, V_M_, margin_);
    }

    [[nodiscard]] const DesiredPath& path() const noexcept { return path_; }
    [[nodiscard]] const FeedbackRegion& region() const noexcept { return region_; }
    [[nodiscard]] const PartitionWeights& weights() const noexcept { return weights_; }
    [[nodiscard]] double V_M() const noexcept { return V_M_; }
    [[nodiscard]] double margin() const noexcept { return margin_; }
    [[nodiscard]] double cushion_depth() const noexcept { return 2.0 * std::sqrt(V_M_) + margin_; }

    /// x_b(t): boundary point radially aligned with the current path target.
    [[nodiscard]] Timed boundary_target(double t) const { return radial_target(t, region_.radius()); }

    /// x_ε(t) = x_b(t) + Φ.
    [[nodiscard]] Timed cushion_target(double t) const {
        Timed xb = boundary_target(t);
        Timed out = radial_target(t, region_.radius() - cushion_depth());
        out.x = cushion(region_, xb.x, V_M_, margin_).x_eps;
        return out;
    }

    /// Boundary target pulled toward the center by `scale` (1 → x_b itself).
    [[nodiscard]] Timed intermediate_target(double t, double scale) const {
        if (scale == 1.0) return boundary_target(t);
        return radial_target(t, scale * region_.radius());
    }

    /// New plan for cycle `i`, snapshotting x_b and x_ε at its start.
    [[nodiscard]] CyclePlan plan(std::size_t i, double t_entry, double V_entry, const DwellPolicy& policy,
                                 double intermediate_scale) const {
        if (!(intermediate_scale > 0.0 && intermediate_scale <= 1.0)) {
            throw ConfigError("must lie in (0, 1]", "trajectory.intermediate_scale");
        }
        CyclePlan p = plan_cycle(i, t_entry, V_entry, policy, intermediate_scale);
        p.x_b = boundary_target(t_entry).x;
        p.x_eps = cushion_target(t_entry).x;
        return p;
    }

    /// x̄_d(t) and its rate under `plan`.
    [[nodiscard]] Timed eval(const CyclePlan& plan, double t) const {
        constexpr double kEdge = 1e-12;
        if (t < plan.t_a - kEdge) throw ContractViolation("trajectory evaluated before the active plan starts");
        const double s = plan.intermediate_scale;
        if (t < plan.t_u || (!plan.has_exit() && t <= plan.t_u + kEdge)) {
            const double rho = (t - plan.t_a) / plan.dt_a;
            return blend_timed(rho, 1.0 / plan.dt_a, intermediate_target(t, s), cushion_target(t));
        }
        if (!plan.has_exit()) throw ContractViolation("trajectory evaluated past t_u before the excursion is planned");
        const double dt_u = *plan.dt_u;
        const auto& p = weights_.p;
        if (t < plan.t_u1) {
            const double len = p[1] * dt_u;
            return blend_timed((t - plan.t_u0) / len, 1.0 / len, path_.eval(t), intermediate_target(t, s));
        }
        if (t < plan.t_u2) return path_.eval(t);
        if (t <= plan.t_u3 + kEdge) {
            const double len = p[3] * dt_u;
            return blend_timed((t - plan.t_u2) / len, 1.0 / len, cushion_target(t), path_.eval(t));
        }
        throw ContractViolation("trajectory evaluated past the end of the active plan");
    }

private:
    /// Point at distance `dist` from the center along the ray through the
    /// current path target; non-position components follow the path.
    [[nodiscard]] Timed radial_target(double t, double dist) const {
        const Timed g = path_.eval(t);
        const StateVec p = region_.position(g.x);
        StateVec pdot(p.size());
        const auto& dims = region_.position_dims();
        for (std::size_t k = 0; k < dims.size(); ++k) pdot[static_cast<Index>(k)] = g.dx[dims[k]];
        const StateVec off = p - region_.center();
        const double r = off.norm();
        if (r == 0.0) throw DegenerateInput("path target at the region center has no radial direction");
        const StateVec u = off / r;
        const StateVec udot = (pdot - u * u.dot(pdot)) / r;
        Timed out = g;
        region_.scatter(out.x, region_.center() + dist * u);
        region_.scatter(out.dx, dist * udot);
        return out;
    }

    DesiredPath path_;
    FeedbackRegion region_;
    double V_M_;
    double margin_;
    PartitionWeights weights_;
};

}  // namespace dwellsim
