#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>
#include <vector>

#include "dwellsim/scenario.hpp"
#include "dwellsim/trajectory.hpp"
#include "oracles.hpp"

using namespace dwellsim;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

StateVec v(std::initializer_list<double> xs) {
    StateVec out(static_cast<Index>(xs.size()));
    Index i = 0;
    for (double x : xs) out[i++] = x;
    return out;
}

FeedbackRegion unit() { return {StateVec::Zero(2), 1.0, {0, 1}}; }

// A few chained cycles with arbitrary V values, each starting where the
// previous one ended.
std::vector<CyclePlan> chain(const SwitchingTrajectory& tr, const DwellPolicy& pol, double scale, int cycles) {
    std::vector<CyclePlan> out;
    double t = 0.0;
    const double V_entry[] = {0.2, 0.006, 0.004, 0.01, 0.003};
    for (int i = 0; i < cycles; ++i) {
        CyclePlan p = tr.plan(static_cast<std::size_t>(i), t, V_entry[i % 5], pol, scale);
        const double V_exit = pol.budget.V_T * 0.98;
        plan_exit(p, V_exit, pol.max_dwell_time(V_exit, std::sqrt(V_exit)), tr.weights());
        t = p.t_u3;
        out.push_back(p);
    }
    return out;
}

}  // namespace

TEST_CASE("smootherstep values", "[trajectory]") {
    CHECK(smootherstep(0.0) == 0.0);
    CHECK(smootherstep(1.0) == 1.0);
    CHECK(smootherstep(0.5) == 0.5);
    CHECK_THAT(smootherstep(0.2), WithinAbs(0.05792, 1e-15));
    CHECK(smootherstep(-0.3) == 0.0);
    CHECK(smootherstep(1.7) == 1.0);
    for (int k = 0; k <= 1000; ++k) {
        const double r = k / 1000.0;
        REQUIRE_THAT(smootherstep(r), WithinAbs(oracle::quintic(r), 1e-14));
    }
}

TEST_CASE("smootherstep endpoint derivatives vanish", "[trajectory]") {
    CHECK(smootherstep_deriv(0.0) == 0.0);
    CHECK(smootherstep_deriv(1.0) == 0.0);
    CHECK(smootherstep_deriv2(0.0) == 0.0);
    CHECK(smootherstep_deriv2(1.0) == 0.0);
    CHECK(smootherstep_deriv(0.5) == 1.875);
    for (double r : {0.1, 0.37, 0.5, 0.81}) {
        const double h = 1e-5;
        CHECK_THAT(smootherstep_deriv(r), WithinAbs((oracle::quintic(r + h) - oracle::quintic(r - h)) / (2 * h), 1e-8));
        CHECK_THAT(smootherstep_deriv2(r),
                   WithinAbs((smootherstep_deriv(r + h) - smootherstep_deriv(r - h)) / (2 * h), 1e-7));
    }
}

TEST_CASE("blend", "[trajectory]") {
    const StateVec q = v({1, 2});
    const StateVec r = v({-1, 0});
    CHECK(blend(0.0, q, r) == r);
    CHECK(blend(1.0, q, r) == q);
    CHECK(blend(0.5, q, r).isApprox(v({0, 1})));
    const Timed a = blend_timed(0.0, 2.0, {q, v({0, 0})}, {r, v({0, 0})});
    CHECK(a.x == r);
    CHECK(a.dx.isZero());
    const Timed b = blend_timed(0.5, 2.0, {q, v({0, 0})}, {r, v({0, 0})});
    CHECK(b.dx.isApprox(1.875 * 2.0 * (q - r)));
}

TEST_CASE("cushion", "[trajectory]") {
    const Cushion c = cushion(unit(), v({1, 0}), 0.2025, 0.0);
    CHECK_THAT(c.x_eps[0], WithinAbs(0.1, 1e-15));
    CHECK(c.x_eps[1] == 0.0);
    CHECK_THAT(c.clearance, WithinAbs(0.0, 1e-15));
    CHECK(cushion(unit(), v({0, -1}), 0.0, 0.0).x_eps.isApprox(v({0, -1})));
    CHECK(cushion(unit(), v({0, -1}), 1e-12, 0.0).x_eps.isApprox(v({0, -1}), 1e-5));
    const FeedbackRegion small(StateVec::Zero(2), 0.5, {0, 1});
    CHECK_THROWS_AS(cushion(small, v({0.5, 0}), 0.2025, 0.0), InfeasibleError);
    CHECK_THROWS_AS(cushion(unit(), v({1, 0}), 0.3, 0.0), InfeasibleError);
    CHECK_THAT(cushion(unit(), v({1, 0}), 0.01, 0.1).clearance, WithinAbs(0.1, 1e-14));
}

TEST_CASE("partition weights", "[trajectory]") {
    CHECK_NOTHROW(PartitionWeights{}.validate());
    CHECK_NOTHROW((PartitionWeights{{0.1, 0.3, 0.3, 0.3}}.validate()));
    CHECK_THROWS_AS((PartitionWeights{{0.0, 0.0, 1.0, 0.0}}.validate()), ConfigError);
    CHECK_THROWS_AS((PartitionWeights{{0.0, 0.5, 0.5, 0.0}}.validate()), ConfigError);
    CHECK_THROWS_AS((PartitionWeights{{0.0, 0.3, 0.3, 0.3}}.validate()), ConfigError);
    CHECK_THROWS_AS((PartitionWeights{{-0.1, 0.5, 0.3, 0.3}}.validate()), ConfigError);
}

TEST_CASE("partition times", "[trajectory]") {
    CyclePlan p;
    p.t_u = 5.0;
    plan_exit(p, 1e-4, 2.0, PartitionWeights{{0.0, 0.3, 0.4, 0.3}});
    CHECK_THAT(p.t_u1 - p.t_u, WithinAbs(0.6, 1e-12));
    CHECK_THAT(p.t_u2 - p.t_u, WithinAbs(1.4, 1e-12));
    CHECK(p.t_u3 - p.t_u == 2.0);

    CyclePlan q;
    plan_exit(q, 1e-4, 19.12, PartitionWeights{{0.0, 0.4, 0.2, 0.4}});
    CHECK_THAT(q.t_u1 - q.t_u0, WithinAbs(7.648, 1e-12));
    CHECK_THAT(q.t_u2 - q.t_u1, WithinAbs(3.824, 1e-12));
    CHECK_THAT(q.t_u3 - q.t_u2, WithinAbs(7.648, 1e-12));

    CHECK_THROWS_AS(plan_exit(q, 1e-4, 0.0, PartitionWeights{}), InfeasibleError);
    CHECK_THROWS_AS(plan_exit(q, 1e-4, INFINITY, PartitionWeights{}), InfeasibleError);
}

TEST_CASE("cycle plan uses the minimum dwell", "[trajectory]") {
    const Scenario sc = presets::sim_circle();
    const DwellPolicy pol = sc.policy();
    const CyclePlan p = plan_cycle(0, 1.0, 0.2025, pol);
    CHECK_THAT(p.dt_a, WithinAbs(1.5227, 5e-5));
    CHECK(p.t_u == p.t_a + p.dt_a);
    CHECK_FALSE(p.has_exit());
    CHECK(plan_cycle(1, 0.0, 1e-6, pol).dt_a == pol.alpha);
    DwellPolicy zero = pol;
    zero.alpha = 0.0;
    CHECK_THROWS_AS(plan_cycle(0, 0.0, 1e-6, zero), ConfigError);
}

TEST_CASE("trajectory endpoint values", "[trajectory]") {
    const Scenario sc = presets::sim_circle();
    const SwitchingTrajectory tr = sc.trajectory();
    const DwellPolicy pol = sc.policy();
    CyclePlan p = tr.plan(0, 0.0, 0.01, pol, 1.0);
    CHECK((tr.eval(p, 0.0).x - tr.cushion_target(0.0).x).norm() <= 1e-15);
    CHECK((tr.eval(p, p.t_u).x - tr.boundary_target(p.t_u).x).norm() <= 1e-12);
    CHECK_THROWS_AS(tr.eval(p, p.t_u + 0.1), ContractViolation);
    plan_exit(p, 1e-4, 2.0, tr.weights());
    CHECK((tr.eval(p, p.t_u2 - 1e-6).x - sc.bound_path().eval(p.t_u2 - 1e-6).x).norm() <= 1e-12);
    CHECK((tr.eval(p, p.t_u3).x - tr.cushion_target(p.t_u3).x).norm() <= 1e-12);
    CHECK_THROWS_AS(tr.eval(p, -0.1), ContractViolation);
    CHECK_THROWS_AS(tr.eval(p, p.t_u3 + 0.1), ContractViolation);

    // Every cushion point keeps the reach ball inside the region.
    const FeedbackRegion F = sc.region();
    for (double t = 0.0; t < 20.0; t += 0.37) {
        REQUIRE(F.signed_distance(tr.cushion_target(t).x) <= -2.0 * std::sqrt(pol.budget.V_M) + 1e-12);
    }
}

TEST_CASE("trajectory is continuous across segment boundaries", "[trajectory][property]") {
    for (const Scenario& sc : {presets::sim_circle(), presets::quad_integrator()}) {
        const SwitchingTrajectory tr = sc.trajectory();
        const auto plans = chain(tr, sc.policy(), sc.intermediate_scale, 5);
        const double eps = 1e-12;
        for (std::size_t k = 0; k < plans.size(); ++k) {
            const CyclePlan& p = plans[k];
            for (double tb : {p.t_u, p.t_u0, p.t_u1, p.t_u2}) {
                if (tb <= p.t_a) continue;
                REQUIRE((tr.eval(p, tb - eps).x - tr.eval(p, tb).x).norm() <= 1e-9);
            }
            if (k + 1 < plans.size()) {
                const CyclePlan& n = plans[k + 1];
                REQUIRE((tr.eval(p, p.t_u3).x - tr.eval(n, n.t_a).x).norm() <= 1e-9);
                REQUIRE((tr.eval(p, p.t_u3 - eps).x - tr.eval(n, n.t_a + eps).x).norm() <= 1e-9);
            }
        }
    }
}

TEST_CASE("analytic rate matches finite differences", "[trajectory][property]") {
    for (const Scenario& sc : {presets::sim_circle(), presets::quad_integrator()}) {
        const SwitchingTrajectory tr = sc.trajectory();
        const auto plans = chain(tr, sc.policy(), sc.intermediate_scale, 4);
        std::mt19937_64 gen(5);
        const double h = 1e-5;
        int checked = 0;
        while (checked < 1000) {
            const CyclePlan& p = plans[gen() % plans.size()];
            std::uniform_real_distribution<double> u(p.t_a, p.t_u3);
            const double t = u(gen);
            bool near = false;
            for (double tb : {p.t_a, p.t_u, p.t_u0, p.t_u1, p.t_u2, p.t_u3}) near |= std::abs(t - tb) < 10 * h;
            if (near) continue;
            const StateVec fd = oracle::central_diff([&](double s) { return StateVec(tr.eval(p, s).x); }, t, h);
            REQUIRE((tr.eval(p, t).dx - fd).cwiseAbs().maxCoeff() <= 1e-6);
            ++checked;
        }
    }
}

TEST_CASE("on-path segment equals the desired path", "[trajectory][property]") {
    const Scenario sc = presets::quad_integrator();
    const SwitchingTrajectory tr = sc.trajectory();
    const DesiredPath path = sc.bound_path();
    for (const CyclePlan& p : chain(tr, sc.policy(), sc.intermediate_scale, 3)) {
        for (int k = 0; k < 200; ++k) {
            const double t = p.t_u1 + (p.t_u2 - p.t_u1) * k / 200.0;
            const Timed a = tr.eval(p, t);
            const Timed g = path.eval(t);
            REQUIRE((a.x.array() == g.x.array()).all());
            REQUIRE((a.dx.array() == g.dx.array()).all());
        }
    }
}

TEST_CASE("intermediate target scales the boundary target", "[trajectory]") {
    const Scenario sc = presets::quad_integrator();
    const SwitchingTrajectory tr = sc.trajectory();
    const FeedbackRegion F = sc.region();
    for (double t : {0.0, 3.0, 11.5}) {
        const StateVec xb = F.position(tr.boundary_target(t).x);
        const StateVec xi = F.position(tr.intermediate_target(t, 0.7).x);
        REQUIRE((xi - 0.7 * xb).norm() <= 1e-14);
    }
    CHECK_THROWS_AS(tr.plan(0, 0.0, 0.01, sc.policy(), 0.0), ConfigError);
    CHECK_THROWS_AS(tr.plan(0, 0.0, 0.01, sc.policy(), 1.2), ConfigError);
}

TEST_CASE("path validation", "[trajectory]") {
    Scenario sc = presets::sim_circle();
    DesiredPath p = sc.bound_path();
    p.radius = 0.5;
    CHECK_THROWS_AS(p.validate(sc.region()), ConfigError);
    p = sc.bound_path();
    p.heading_dim = 0;
    CHECK_THROWS_AS(p.validate(sc.region()), ConfigError);
    p = sc.bound_path();
    CHECK_THAT(p.min_clearance(sc.region()), WithinAbs(1.0, 1e-12));
    CHECK_THAT(p.heading(0.0), WithinAbs(0.0, 1e-15));
}
