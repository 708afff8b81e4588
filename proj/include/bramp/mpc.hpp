#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "bramp/ambiguity.hpp"
#include "bramp/bayes_filter.hpp"
#include "bramp/risk.hpp"
#include "bramp/rollout.hpp"

namespace bramp {

/// (v_1, ..., v_{N-1}, v_f)
template <int NU>
PolicySequence<NU> shift_warm_start(const PolicySequence<NU>& v_prev, const In<NU>& v_f) {
    if (v_prev.horizon() == 0) throw std::invalid_argument("shift_warm_start: empty policy");
    PolicySequence<NU> out;
    out.controls.assign(v_prev.controls.begin() + 1, v_prev.controls.end());
    out.controls.push_back(v_f);
    return out;
}

template <int NU>
PolicySequence<NU> clip_policy(const PolicySequence<NU>& v, const In<NU>& lo, const In<NU>& hi) {
    PolicySequence<NU> out = v;
    for (auto& u : out.controls) u = u.cwiseMax(lo).cwiseMin(hi);
    return out;
}

enum class SearchMethod { projected_gradient, coordinate };

/// Box-constrained local search settings. Step sizes are fractions of the control range.
struct OptimizerSettings {
    SearchMethod method = SearchMethod::projected_gradient;
    double fd_step = 1e-4;
    double armijo = 1e-4;
    int max_backtracks = 12;
    double coordinate_step = 0.05;
    int coordinate_rounds = 3;
};

template <int NU>
struct ImproveResult {
    PolicySequence<NU> policy;
    double value = 0.0;
    double warm_value = 0.0;
    int evaluations = 0;
};

/// Budgeted improvement from a warm start.
///
/// Projected gradient descent with forward-difference gradients, Barzilai-Borwein
/// step lengths and Armijo backtracking. When a line search fails the step
/// falls back to signed coordinate moves. Only strict decreases are accepted,
/// so the result never evaluates worse than the warm start.
template <int NU, typename Evaluator>
ImproveResult<NU> improve_policy(const PolicySequence<NU>& v_warm, Evaluator&& evaluate, const In<NU>& lo,
                                 const In<NU>& hi, int budget, RandomStream& rng,
                                 const OptimizerSettings& opt = {}) {
    ImproveResult<NU> res;
    res.policy = v_warm;
    res.value = evaluate(v_warm);
    res.warm_value = res.value;
    res.evaluations = 1;
    if (budget <= 0) return res;

    const auto warm_policy = v_warm;
    res.policy = clip_policy(v_warm, lo, hi);
    if (!(res.policy == v_warm)) {
        res.value = evaluate(res.policy);
        ++res.evaluations;
    }

    const std::size_t n = res.policy.dim();
    auto lo_of = [&lo](std::size_t j) { return lo[static_cast<int>(j % NU)]; };
    auto hi_of = [&hi](std::size_t j) { return hi[static_cast<int>(j % NU)]; };

    auto& v = res.policy;
    double f = res.value;
    std::vector<double> grad(n, 0.0), prev_grad(n), prev_x(n);
    bool have_prev = false;
    double coord_scale = opt.coordinate_step;

    auto eval = [&](const PolicySequence<NU>& cand) {
        ++res.evaluations;
        return evaluate(cand);
    };

    const bool use_gradient = opt.method == SearchMethod::projected_gradient;
    for (int it = 0; it < budget; ++it) {
        // forward differences, stepping inward at an upper bound
        for (std::size_t j = 0; j < n && use_gradient; ++j) {
            const double range = hi_of(j) - lo_of(j);
            double h = opt.fd_step * (range > 0.0 ? range : 1.0);
            if (v.at(j) + h > hi_of(j)) h = -h;
            auto probe = v;
            probe.at(j) += h;
            grad[j] = (eval(probe) - f) / h;
        }
        // projected gradient: drop components that push through an active bound
        std::vector<double> pg(grad);
        double pg_norm_inf = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            if ((v.at(j) <= lo_of(j) && pg[j] > 0.0) || (v.at(j) >= hi_of(j) && pg[j] < 0.0)) pg[j] = 0.0;
            pg_norm_inf = std::max(pg_norm_inf, std::abs(pg[j]));
        }

        bool accepted = false;
        if (pg_norm_inf > 0.0) {
            double alpha;
            double max_range = 0.0;
            for (std::size_t j = 0; j < n; ++j) max_range = std::max(max_range, hi_of(j) - lo_of(j));
            if (have_prev) {
                double ss = 0.0;
                double sy = 0.0;
                for (std::size_t j = 0; j < n; ++j) {
                    const double s = v.at(j) - prev_x[j];
                    const double y = grad[j] - prev_grad[j];
                    ss += s * s;
                    sy += s * y;
                }
                alpha = sy > 0.0 ? ss / sy : 0.1 * max_range / pg_norm_inf;
            } else {
                alpha = 0.1 * max_range / pg_norm_inf;
            }
            for (int ls = 0; ls <= opt.max_backtracks && !accepted; ++ls, alpha *= 0.5) {
                auto cand = v;
                double decrease = 0.0;
                for (std::size_t j = 0; j < n; ++j) {
                    cand.at(j) = std::clamp(v.at(j) - alpha * grad[j], lo_of(j), hi_of(j));
                    decrease += grad[j] * (v.at(j) - cand.at(j));
                }
                if (decrease <= 0.0) continue;
                const double fc = eval(cand);
                if (fc < f - opt.armijo * decrease) {
                    for (std::size_t j = 0; j < n; ++j) prev_x[j] = v.at(j);
                    prev_grad = grad;
                    have_prev = true;
                    v = cand;
                    f = fc;
                    accepted = true;
                }
            }
        }

        if (!accepted) {
            // coordinate fallback in a random order
            std::vector<std::size_t> order(n);
            for (std::size_t j = 0; j < n; ++j) order[j] = j;
            for (std::size_t j = n; j > 1; --j) {
                std::swap(order[j - 1], order[static_cast<std::size_t>(rng.uniform() * static_cast<double>(j))]);
            }
            for (int round = 0; round < opt.coordinate_rounds && !accepted; ++round) {
                for (std::size_t j : order) {
                    const double delta = coord_scale * (hi_of(j) - lo_of(j));
                    for (double sign : {-1.0, 1.0}) {
                        const double dir = grad[j] != 0.0 ? sign * std::copysign(1.0, grad[j]) : sign;
                        auto cand = v;
                        cand.at(j) = std::clamp(v.at(j) + dir * delta, lo_of(j), hi_of(j));
                        if (cand.at(j) == v.at(j)) continue;
                        const double fc = eval(cand);
                        if (fc < f) {
                            v = cand;
                            f = fc;
                            accepted = true;
                            break;
                        }
                    }
                    if (accepted) break;
                }
                // shrink only after a full round without improvement
                if (!accepted) coord_scale *= 0.5;
            }
            have_prev = false;
            if (!accepted) break;
        }
    }
    res.value = f;
    if (!(res.value <= res.warm_value)) {
        res.policy = warm_policy;
        res.value = res.warm_value;
    }
    return res;
}

// ---------------------------------------------------------------------------
// Controllers

enum class ControllerKind { nominal, tube, stochastic, risk_averse };

inline constexpr ControllerKind kAllControllers[] = {ControllerKind::nominal, ControllerKind::tube,
                                                     ControllerKind::stochastic, ControllerKind::risk_averse};

inline std::string_view to_string(ControllerKind k) {
    switch (k) {
        case ControllerKind::nominal: return "nominal";
        case ControllerKind::tube: return "tube";
        case ControllerKind::stochastic: return "stochastic";
        case ControllerKind::risk_averse: return "risk_averse";
    }
    return "unknown";
}

inline ControllerKind controller_from_string(std::string_view s) {
    for (auto k : kAllControllers) {
        if (to_string(k) == s) return k;
    }
    throw std::invalid_argument("unknown controller kind '" + std::string(s) +
                                "' (expected nominal, tube, stochastic or risk_averse)");
}

template <int NP>
struct ControllerSpec {
    ControllerKind kind = ControllerKind::risk_averse;
    std::size_t horizon = 5;
    int budget = 8;
    /// Fixed parameter box for the tube controller.
    Box<NP> tube;
    /// Posterior particles averaged by the stochastic controller.
    std::size_t stochastic_samples = 32;
    CandidateRule<NP> candidates;
    OptimizerSettings optimizer;

    void validate() const {
        if (horizon < 1) throw std::invalid_argument("controller: horizon must be >= 1");
        if (budget < 0) throw std::invalid_argument("controller: budget must be >= 0");
        if (stochastic_samples < 1) throw std::invalid_argument("controller: stochastic_samples must be >= 1");
        tube.validate();
    }
};

template <int NU, int NP>
struct PlanResult {
    Vec<NU> u0;
    PolicySequence<NU> policy;
    double planned_value = 0.0;
    /// Objective at the shifted warm start, before improvement.
    double warm_value = 0.0;
    std::optional<Vec<NP>> worst_theta;
    int evaluations = 0;
};

/// Deterministic weight-stratified subsample: the particle covering cumulative
/// weight (j + 1/2) / count for j = 0..count-1.
template <int NP>
std::vector<Vec<NP>> stratified_subsample(const ParticleSet<NP>& ps, std::size_t count) {
    std::vector<Vec<NP>> out;
    out.reserve(count);
    double cum = ps.weights[0];
    std::size_t i = 0;
    for (std::size_t j = 0; j < count; ++j) {
        const double target = (static_cast<double>(j) + 0.5) / static_cast<double>(count);
        while (cum < target && i + 1 < ps.size()) cum += ps.weights[++i];
        out.push_back(ps.thetas[i]);
    }
    return out;
}

/// One receding-horizon planning call.
///
/// The objective depends on the controller kind; all kinds share the same
/// scenarios (common random numbers) and the same warm start
/// shift(v_prev, v_f) with v_f = 0 clipped into the control bounds.
template <int NX, int NU, int NP>
PlanResult<NU, NP> plan(const ControllerSpec<NP>& spec, const SystemModel<NX, NU, NP>& model,
                        const CostSpec<NX>& cost, const In<NX>& x0, const ParticleSet<NP>& ps,
                        const AmbiguitySet<NP>& ambiguity, const ScenarioSet<NX>& scen,
                        const PolicySequence<NU>& v_prev, RandomStream& rng) {
    if (v_prev.horizon() != spec.horizon) throw std::invalid_argument("plan: warm start length != horizon");
    if (scen.horizon() != spec.horizon) throw std::invalid_argument("plan: scenario horizon != horizon");

    const Vec<NU> v_f = model.clip_control(Vec<NU>::Zero());
    const auto warm = clip_policy(shift_warm_start(v_prev, v_f), model.u_lo, model.u_hi);

    std::vector<Vec<NP>> thetas;
    bool worst_case = false;
    switch (spec.kind) {
        case ControllerKind::nominal: thetas.push_back(posterior_summary(ps).mean()); break;
        case ControllerKind::tube:
            thetas = spec.candidates.candidates(spec.tube);
            worst_case = true;
            break;
        case ControllerKind::stochastic: thetas = stratified_subsample(ps, spec.stochastic_samples); break;
        case ControllerKind::risk_averse:
            thetas = spec.candidates.candidates(ambiguity.box);
            worst_case = true;
            break;
    }

    auto objective = [&](const PolicySequence<NU>& v) {
        if (worst_case) return worst_case_over(model, cost, x0, v, std::span<const Vec<NP>>(thetas), scen).value;
        double acc = 0.0;
        for (const auto& th : thetas) acc += expected_cost(model, cost, x0, v, th, scen);
        return acc / static_cast<double>(thetas.size());
    };

    auto improved = improve_policy(warm, objective, model.u_lo, model.u_hi, spec.budget, rng, spec.optimizer);

    PlanResult<NU, NP> out;
    out.policy = improved.policy;
    out.u0 = model.clip_control(out.policy.controls.front());
    out.planned_value = improved.value;
    out.warm_value = improved.warm_value;
    out.evaluations = improved.evaluations;
    if (worst_case) {
        out.worst_theta =
            worst_case_over(model, cost, x0, out.policy, std::span<const Vec<NP>>(thetas), scen).theta;
    }
    return out;
}

}  // namespace bramp
