#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "bramp/harness/config.hpp"

namespace bramp {

struct StepRecord {
    Vec<4> x = Vec<4>::Zero();
    double u = 0.0;
    double stage_cost = 0.0;
    Vec<2> theta_hat = Vec<2>::Zero();
    double eps = 0.0;
    double planned_value = 0.0;
    /// Planner objective at the shifted warm start.
    double warm_value = 0.0;
    bool violation = false;
};

struct EpisodeMetrics {
    double total_cost = 0.0;
    double tracking_error = 0.0;
    double param_error = 0.0;
    double violations = 0.0;
};

struct EpisodeRecord {
    ControllerKind kind = ControllerKind::nominal;
    std::size_t run = 0;
    std::uint64_t seed = 0;
    std::vector<StepRecord> steps;
    Vec<2> theta_true = Vec<2>::Zero();
    /// Posterior mean after the last observed transition.
    Vec<2> final_theta_hat = Vec<2>::Zero();
    EpisodeMetrics metrics;
    std::size_t degenerate_steps = 0;
    /// Steps whose ambiguity box missed the true theta.
    std::size_t coverage_misses = 0;
    double wall_seconds = 0.0;
    bool aborted = false;
    std::string abort_reason;
};

/// |q| > pi, unwrapped.
inline bool angle_violation(const Vec<4>& x) { return std::abs(x[cartpole::Q]) > std::numbers::pi; }

/// Metrics recomputed from the per-step log.
inline EpisodeMetrics compute_metrics(const EpisodeRecord& rec) {
    EpisodeMetrics m;
    double sq = 0.0;
    for (const auto& s : rec.steps) {
        m.total_cost += s.stage_cost;
        const double dq = s.x[cartpole::Q] - std::numbers::pi;
        sq += dq * dq;
        m.violations += s.violation ? 1.0 : 0.0;
    }
    m.tracking_error = rec.steps.empty() ? 0.0 : sq / static_cast<double>(rec.steps.size());
    m.param_error = (rec.final_theta_hat - rec.theta_true).norm();
    return m;
}

/// Stream ids: process noise is shared by every controller kind for a given seed.
enum : std::uint64_t { kProcessStream = 1, kFilterStream = 2, kPlannerStream = 3 };

/// One closed-loop episode of the learning controller.
///
/// Each step: fold the last transition into the particle filter, shrink the
/// ambiguity set, re-plan from the shifted warm start, apply the first control
/// with fresh process noise. The first step plans on the prior.
inline EpisodeRecord run_episode(const ExperimentConfig& cfg, ControllerKind kind, std::uint64_t seed,
                                 std::size_t run = 0) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto model = cfg.make_model();
    const auto spec = cfg.controller_spec(kind);
    spec.validate();

    RandomStream process(seed, kProcessStream);
    RandomStream filter_rng(seed, kFilterStream);
    RandomStream planner_rng(seed, kPlannerStream);

    EpisodeRecord rec;
    rec.kind = kind;
    rec.run = run;
    rec.seed = seed;
    rec.theta_true = cfg.model.theta_true;
    rec.steps.reserve(cfg.run.steps);

    Vec<4> x = cfg.model.x0;
    Vec<1> u_prev = Vec<1>::Zero();
    Vec<4> x_prev = x;
    auto ps = init_particles<2>(model.param_lo, model.param_hi, cfg.filter.particles, filter_rng);
    auto amb = make_ambiguity(credible_box(ps, cfg.controller.level, cfg.controller.interval));
    PolicySequence<1> v(spec.horizon);

    auto absorb = [&]() {
        auto fs = filter_step(ps, x_prev, u_prev, x, model, cfg.filter, filter_rng);
        ps = std::move(fs.particles);
        rec.degenerate_steps += fs.degenerate ? 1 : 0;
    };

    try {
        for (std::size_t k = 0; k < cfg.run.steps; ++k) {
            if (k > 0) {
                absorb();
                amb = update_ambiguity(amb, credible_box(ps, cfg.controller.level, cfg.controller.interval));
            }
            const auto scen = ScenarioSet<4>::sample(cfg.controller.scenarios, spec.horizon, planner_rng);
            const auto res = plan(spec, model, cfg.cost, x, ps, amb, scen, v, planner_rng);
            v = res.policy;

            StepRecord s;
            s.x = x;
            s.u = res.u0[0];
            s.stage_cost = cfg.cost.stage(x, res.u0);
            s.theta_hat = posterior_summary(ps).mean();
            s.eps = amb.eps;
            rec.coverage_misses += amb.box.contains(cfg.model.theta_true) ? 0 : 1;
            s.planned_value = res.planned_value;
            s.warm_value = res.warm_value;
            s.violation = angle_violation(x);
            rec.steps.push_back(s);

            Vec<4> w;
            for (int i = 0; i < 4; ++i) w[i] = process.normal();
            x_prev = x;
            u_prev = res.u0;
            x = step_stochastic(model, x, res.u0, cfg.model.theta_true, w);
            if (x.cwiseAbs().maxCoeff() > cfg.run.abort_threshold)
                throw std::domain_error("state magnitude exceeded " + std::to_string(cfg.run.abort_threshold) +
                                        " at step " + std::to_string(k + 1));
        }
        absorb();
    } catch (const std::domain_error& e) {
        rec.aborted = true;
        rec.abort_reason = e.what();
    }
    rec.final_theta_hat = posterior_summary(ps).mean();
    rec.metrics = compute_metrics(rec);
    rec.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return rec;
}

}  // namespace bramp
