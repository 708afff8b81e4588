#include <cmath>
#include <numbers>
#include <vector>

#include <gtest/gtest.h>

#include "bramp/mpc.hpp"

using namespace bramp;

namespace {

PolicySequence<1> policy(std::initializer_list<double> us) {
    PolicySequence<1> v;
    for (double u : us) v.controls.push_back(Vec<1>::Constant(u));
    return v;
}

CostSpec<4> benchmark_cost() {
    CostSpec<4> c;
    c.q_diag << 1, 0.1, 10, 0.1;
    c.r = 0.01;
    c.x_star << 0, 0, std::numbers::pi, 0;
    return c;
}

CartPoleModel benchmark_model() { return make_cartpole_model(Vec<2>(0.05, 0.25), Vec<2>(0.5, 1.0)); }

Box<2> point_box(const Vec<2>& th) {
    Box<2> b;
    b.lo = b.hi = th;
    return b;
}

}  // namespace

TEST(ShiftWarmStart, Examples) {
    EXPECT_EQ(shift_warm_start(policy({1, 2, 3}), Vec<1>::Constant(9)), policy({2, 3, 9}));
    EXPECT_EQ(shift_warm_start(PolicySequence<1>(4), Vec<1>(Vec<1>::Zero())), PolicySequence<1>(4));
    EXPECT_EQ(shift_warm_start(shift_warm_start(policy({1, 2, 3}), Vec<1>::Constant(9)), Vec<1>::Constant(9)),
              policy({3, 9, 9}));
    EXPECT_EQ(shift_warm_start(policy({5}), Vec<1>::Constant(7)), policy({7}));
    EXPECT_THROW(shift_warm_start(PolicySequence<1>{}, Vec<1>(Vec<1>::Zero())), std::invalid_argument);
}

TEST(ImprovePolicy, ZeroBudgetReturnsWarmStart) {
    RandomStream rng(1);
    const auto warm = policy({12.0, -3.0, 0.5});
    int calls = 0;
    auto f = [&calls](const PolicySequence<1>& v) {
        ++calls;
        return v.controls[0][0] * v.controls[0][0];
    };
    const auto r = improve_policy(warm, f, Vec<1>::Constant(-10), Vec<1>::Constant(10), 0, rng);
    EXPECT_EQ(r.policy, warm);
    EXPECT_EQ(r.value, 144.0);
    EXPECT_EQ(r.warm_value, 144.0);
    EXPECT_EQ(calls, 1);
    EXPECT_EQ(rng.draws(), 0u);
}

TEST(ImprovePolicy, ConvexQuadraticReachesMinimizer) {
    // f(v) = (v - c)^T A (v - c) with A symmetric positive definite
    const int n = 5;
    Eigen::MatrixXd B(n, n);
    RandomStream gen(2);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) B(i, j) = gen.normal();
    const Eigen::MatrixXd A = B * B.transpose() + Eigen::MatrixXd::Identity(n, n);
    Eigen::VectorXd c(n);
    for (int i = 0; i < n; ++i) c[i] = gen.uniform(-6, 6);
    auto f = [&](const PolicySequence<1>& v) {
        Eigen::VectorXd e(n);
        for (int i = 0; i < n; ++i) e[i] = v.controls[static_cast<std::size_t>(i)][0] - c[i];
        return e.dot(A * e);
    };
    OptimizerSettings opt;
    // forward differences shift the fixed point by about fd_step * range / 2
    opt.fd_step = 1e-8;
    RandomStream rng(3);
    const auto r = improve_policy(PolicySequence<1>(n), f, Vec<1>::Constant(-10), Vec<1>::Constant(10), 400, rng, opt);
    for (int i = 0; i < n; ++i) EXPECT_NEAR(r.policy.controls[static_cast<std::size_t>(i)][0], c[i], 1e-4);
}

TEST(ImprovePolicy, ActiveBoundIsRespected) {
    auto f = [](const PolicySequence<1>& v) {
        const double d0 = v.controls[0][0] - 15.0, d1 = v.controls[1][0] + 0.5;
        return d0 * d0 + d1 * d1;
    };
    OptimizerSettings opt;
    opt.fd_step = 1e-8;
    RandomStream rng(4);
    const auto r = improve_policy(PolicySequence<1>(2), f, Vec<1>::Constant(-10), Vec<1>::Constant(10), 200, rng, opt);
    EXPECT_EQ(r.policy.controls[0][0], 10.0);
    EXPECT_NEAR(r.policy.controls[1][0], -0.5, 1e-4);
}

TEST(ImprovePolicy, NeverWorseThanWarmStart) {
    RandomStream gen(5);
    for (auto method : {SearchMethod::projected_gradient, SearchMethod::coordinate}) {
        for (int t = 0; t < 100; ++t) {
            const double a = gen.uniform(0.5, 5), b = gen.uniform(-3, 3);
            // nonconvex, with kinks
            auto f = [a, b](const PolicySequence<1>& v) {
                double acc = 0.0;
                for (std::size_t i = 0; i < v.horizon(); ++i) {
                    const double u = v.controls[i][0];
                    acc += std::sin(a * u) + 0.05 * (u - b) * (u - b) + 0.3 * std::abs(u - 0.1 * static_cast<double>(i));
                }
                return acc;
            };
            PolicySequence<1> warm(4);
            for (auto& u : warm.controls) u[0] = gen.uniform(-12, 12);
            OptimizerSettings opt;
            opt.method = method;
            RandomStream rng(100 + static_cast<std::uint64_t>(t));
            const int budget = static_cast<int>(gen.uniform() * 10);
            const auto r = improve_policy(warm, f, Vec<1>::Constant(-10), Vec<1>::Constant(10), budget, rng, opt);
            EXPECT_LE(r.value, f(warm) + 1e-12);
            EXPECT_EQ(r.value, f(r.policy));
        }
    }
}

TEST(ImprovePolicy, CoordinateMethodDescends) {
    auto f = [](const PolicySequence<1>& v) {
        double acc = 0.0;
        for (const auto& u : v.controls) acc += (u[0] - 2.0) * (u[0] - 2.0);
        return acc;
    };
    OptimizerSettings opt;
    opt.method = SearchMethod::coordinate;
    RandomStream rng(6);
    const auto r = improve_policy(PolicySequence<1>(3), f, Vec<1>::Constant(-10), Vec<1>::Constant(10), 50, rng, opt);
    EXPECT_LT(r.value, 0.5 * f(PolicySequence<1>(3)));
}

TEST(RolloutCost, SingleStepByHand) {
    const auto m = make_scalar_model(&scalar_gain_rhs, 0.5, 2.0, 0.1, 0.2);
    CostSpec<1> cost;
    cost.q_diag = Vec<1>::Constant(3.0);
    cost.r = 0.5;
    cost.x_star = Vec<1>::Constant(1.0);
    cost.terminal_weight = 2.0;
    // x1 = x0 + dt * theta * u + sigma * w exactly under RK4
    const long double x0 = 0.25L, u = 1.5L, th = 1.25L, w = -0.3L;
    const long double x1 = x0 + 0.2L * th * u + 0.1L * w;
    const long double expect = 3.0L * (x0 - 1) * (x0 - 1) + 0.5L * u * u + 2.0L * 3.0L * (x1 - 1) * (x1 - 1);
    const std::vector<Vec<1>> path{Vec<1>::Constant(-0.3)};
    EXPECT_NEAR(rollout_cost(m, cost, Vec<1>(Vec<1>::Constant(0.25)), policy({1.5}), Vec<1>(Vec<1>::Constant(1.25)),
                             std::span<const Vec<1>>(path)),
                static_cast<double>(expect), 1e-12);
}

TEST(RolloutCost, ControlsAreClipped) {
    const auto m = benchmark_model();
    const auto cost = benchmark_cost();
    RandomStream rng(7);
    const auto scen = ScenarioSet<4>::sample(1, 3, rng);
    const Vec<4> x0(0, 0, 0.2, 0);
    EXPECT_EQ(rollout_cost(m, cost, x0, policy({25, -40, 3}), Vec<2>(0.2, 0.5), scen.path(0)),
              rollout_cost(m, cost, x0, policy({10, -10, 3}), Vec<2>(0.2, 0.5), scen.path(0)));
}

TEST(RolloutCost, ControlOnlyCost) {
    const auto m = benchmark_model();
    CostSpec<4> cost;
    cost.q_diag.setZero();
    cost.r = 0.25;
    cost.terminal_weight = 0.0;
    RandomStream rng(8);
    const auto scen = ScenarioSet<4>::sample(1, 3, rng);
    EXPECT_NEAR(rollout_cost(m, cost, Vec<4>(0.3, 0.1, 1.0, 0.0), policy({1, -2, 4}), Vec<2>(0.2, 0.5), scen.path(0)),
                0.25 * 21, 1e-12);
}

TEST(RolloutCost, LengthMismatchThrows) {
    const auto m = benchmark_model();
    const auto scen = ScenarioSet<4>::zeros(1, 3);
    EXPECT_THROW(rollout_cost(m, benchmark_cost(), Vec<4>(Vec<4>::Zero()), policy({1, 2}), Vec<2>(0.2, 0.5), scen.path(0)),
                 std::invalid_argument);
}

TEST(ControllerKind, StringRoundTrip) {
    for (auto k : kAllControllers) EXPECT_EQ(controller_from_string(to_string(k)), k);
    EXPECT_THROW(controller_from_string("robust"), std::invalid_argument);
}

TEST(StratifiedSubsample, FollowsCumulativeWeight) {
    ParticleSet<1> ps;
    ps.thetas = {Vec<1>::Constant(0.0), Vec<1>::Constant(1.0)};
    ps.weights = {0.25, 0.75};
    const auto s = stratified_subsample(ps, 4);
    ASSERT_EQ(s.size(), 4u);
    EXPECT_EQ(s[0][0], 0.0);
    EXPECT_EQ(s[1][0], 1.0);
    EXPECT_EQ(s[2][0], 1.0);
    EXPECT_EQ(s[3][0], 1.0);
}

TEST(Plan, AllKindsCollapseOnDegenerateSets) {
    const auto m = benchmark_model();
    const auto cost = benchmark_cost();
    const Vec<2> th(0.2, 0.5);
    // one particle keeps the posterior mean bit-identical to th
    ParticleSet<2> ps;
    ps.thetas.assign(1, th);
    ps.weights.assign(1, 1.0);
    const auto amb = make_ambiguity(point_box(th));
    RandomStream srng(9);
    const auto scen = ScenarioSet<4>::sample(8, 5, srng);
    const Vec<4> x0(0.1, 0, 0.4, 0.1);
    PolicySequence<1> v_prev(5);
    for (auto& u : v_prev.controls) u[0] = srng.uniform(-5, 5);

    std::vector<PlanResult<1, 2>> out;
    for (auto kind : kAllControllers) {
        ControllerSpec<2> spec;
        spec.kind = kind;
        spec.tube = point_box(th);
        // one sample keeps the particle average bit-identical to a single evaluation
        spec.stochastic_samples = 1;
        RandomStream rng(10);
        out.push_back(plan(spec, m, cost, x0, ps, amb, scen, v_prev, rng));
    }
    for (std::size_t i = 1; i < out.size(); ++i) {
        EXPECT_EQ(out[i].planned_value, out[0].planned_value);
        EXPECT_EQ(out[i].u0, out[0].u0);
        EXPECT_EQ(out[i].policy, out[0].policy);
    }
}

TEST(Plan, RiskAverseDominatesNominalAtSamePolicy) {
    const auto m = benchmark_model();
    const auto cost = benchmark_cost();
    RandomStream rng(11);
    for (int t = 0; t < 20; ++t) {
        auto ps = init_particles<2>(m.param_lo, m.param_hi, 200, rng);
        const auto amb = make_ambiguity(credible_box(ps, 0.9, IntervalKind::equal_tail));
        if (!amb.box.contains(posterior_summary(ps).mean())) continue;
        const auto scen = ScenarioSet<4>::sample(4, 5, rng);
        PolicySequence<1> v_prev(5);
        for (auto& u : v_prev.controls) u[0] = rng.uniform(-10, 10);
        const Vec<4> x0(rng.normal(), 0, rng.uniform(0, 6), 0);
        ControllerSpec<2> spec;
        spec.budget = 0;
        spec.tube.lo = m.param_lo;
        spec.tube.hi = m.param_hi;
        spec.kind = ControllerKind::nominal;
        RandomStream r1(1), r2(1);
        const auto nom = plan(spec, m, cost, x0, ps, amb, scen, v_prev, r1);
        spec.kind = ControllerKind::risk_averse;
        const auto ra = plan(spec, m, cost, x0, ps, amb, scen, v_prev, r2);
        EXPECT_EQ(ra.policy, nom.policy);
        EXPECT_GE(ra.planned_value, nom.planned_value);
        ASSERT_TRUE(ra.worst_theta.has_value());
        EXPECT_TRUE(amb.box.contains(*ra.worst_theta));
        EXPECT_FALSE(nom.worst_theta.has_value());
    }
}

TEST(Plan, WarmStartDominanceAndClipping) {
    const auto m = benchmark_model();
    const auto cost = benchmark_cost();
    RandomStream rng(12);
    auto ps = init_particles<2>(m.param_lo, m.param_hi, 100, rng);
    const auto amb = make_ambiguity(credible_box(ps, 0.9, IntervalKind::equal_tail));
    for (auto kind : kAllControllers) {
        for (int t = 0; t < 10; ++t) {
            ControllerSpec<2> spec;
            spec.kind = kind;
            spec.tube.lo = m.param_lo;
            spec.tube.hi = m.param_hi;
            spec.budget = 1 + t % 4;
            const auto scen = ScenarioSet<4>::sample(4, 5, rng);
            PolicySequence<1> v_prev(5);
            for (auto& u : v_prev.controls) u[0] = rng.uniform(-30, 30);
            const Vec<4> x0(rng.normal(), rng.normal(), rng.uniform(-4, 4), rng.normal());
            const auto r = plan(spec, m, cost, x0, ps, amb, scen, v_prev, rng);
            EXPECT_LE(r.planned_value, r.warm_value + 1e-12);
            EXPECT_GE(r.u0[0], -10.0);
            EXPECT_LE(r.u0[0], 10.0);
            EXPECT_EQ(r.policy.horizon(), 5u);
        }
    }
}

TEST(Plan, ShrinkingAmbiguityLowersWorstCaseAtFixedPolicy) {
    const auto m = benchmark_model();
    const auto cost = benchmark_cost();
    RandomStream rng(13);
    ParticleSet<2> ps;
    ps.thetas = {Vec<2>(0.2, 0.5)};
    ps.weights = {1.0};
    Box<2> outer;
    outer.lo = m.param_lo;
    outer.hi = m.param_hi;
    for (int t = 0; t < 20; ++t) {
        Box<2> inner;
        inner.lo = outer.lo + outer.width().cwiseProduct(Vec<2>(rng.uniform(0, 0.5), rng.uniform(0, 0.5)));
        inner.hi = outer.hi - outer.width().cwiseProduct(Vec<2>(rng.uniform(0, 0.5), rng.uniform(0, 0.5)));
        const auto a0 = make_ambiguity(outer);
        const auto a1 = update_ambiguity(a0, inner);
        ASSERT_EQ(a1.box, inner);
        const auto scen = ScenarioSet<4>::sample(4, 5, rng);
        PolicySequence<1> v_prev(5);
        for (auto& u : v_prev.controls) u[0] = rng.uniform(-10, 10);
        const Vec<4> x0(rng.normal(), 0, rng.uniform(0, 6), 0);

        ControllerSpec<2> spec;
        spec.budget = 0;
        spec.tube = outer;
        spec.candidates.grid_points = 0;
        // the parent rule sees every child candidate
        spec.candidates.extra = spec.candidates.candidates(inner);
        RandomStream r1(1), r2(1);
        const double v0 = plan(spec, m, cost, x0, ps, a0, scen, v_prev, r1).planned_value;
        const double v1 = plan(spec, m, cost, x0, ps, a1, scen, v_prev, r2).planned_value;
        EXPECT_LE(v1, v0);
    }
}

TEST(Plan, RejectsMismatchedHorizons) {
    const auto m = benchmark_model();
    ParticleSet<2> ps;
    ps.thetas = {Vec<2>(0.2, 0.5)};
    ps.weights = {1.0};
    const auto amb = make_ambiguity(point_box(Vec<2>(0.2, 0.5)));
    ControllerSpec<2> spec;
    spec.tube = amb.box;
    RandomStream rng(14);
    EXPECT_THROW(plan(spec, m, benchmark_cost(), Vec<4>(Vec<4>::Zero()), ps, amb, ScenarioSet<4>::zeros(1, 5),
                      PolicySequence<1>(4), rng),
                 std::invalid_argument);
    EXPECT_THROW(plan(spec, m, benchmark_cost(), Vec<4>(Vec<4>::Zero()), ps, amb, ScenarioSet<4>::zeros(1, 3),
                      PolicySequence<1>(5), rng),
                 std::invalid_argument);
}
