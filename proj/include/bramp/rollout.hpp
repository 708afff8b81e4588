#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "bramp/dynamics.hpp"
#include "bramp/random.hpp"

namespace bramp {

/// Quadratic tracking cost.
///   l(x, u)  = (x - x*)^T diag(q) (x - x*) + r |u|^2
///   V_f(x)   = terminal_weight * (x - x*)^T diag(q) (x - x*)
template <int NX>
struct CostSpec {
    Vec<NX> q_diag = Vec<NX>::Ones();
    double r = 0.01;
    Vec<NX> x_star = Vec<NX>::Zero();
    double terminal_weight = 1.0;

    void validate() const {
        if ((q_diag.array() < 0.0).any()) throw std::invalid_argument("CostSpec: Q entries must be >= 0");
        if (!(q_diag.array() > 0.0).any()) throw std::invalid_argument("CostSpec: Q needs a positive entry");
        if (!(r > 0.0)) throw std::invalid_argument("CostSpec: R must be > 0");
        if (!(terminal_weight >= 0.0)) throw std::invalid_argument("CostSpec: terminal_weight must be >= 0");
    }

    [[nodiscard]] double state_cost(const Vec<NX>& x) const {
        const Vec<NX> e = x - x_star;
        return e.dot(q_diag.cwiseProduct(e));
    }

    template <int NU>
    [[nodiscard]] double stage(const Vec<NX>& x, const Vec<NU>& u) const {
        return state_cost(x) + r * u.squaredNorm();
    }

    [[nodiscard]] double terminal(const Vec<NX>& x) const { return terminal_weight * state_cost(x); }
};

/// Open-loop control sequence v = (v_0, ..., v_{N-1}), one control per stage.
template <int NU>
struct PolicySequence {
    std::vector<Vec<NU>> controls;

    PolicySequence() = default;
    explicit PolicySequence(std::size_t horizon, const Vec<NU>& fill = Vec<NU>::Zero())
        : controls(horizon, fill) {}

    [[nodiscard]] std::size_t horizon() const { return controls.size(); }
    [[nodiscard]] std::size_t dim() const { return controls.size() * NU; }

    /// Flat view of the decision variables.
    [[nodiscard]] double& at(std::size_t flat) { return controls[flat / NU][static_cast<int>(flat % NU)]; }
    [[nodiscard]] double at(std::size_t flat) const { return controls[flat / NU][static_cast<int>(flat % NU)]; }

    bool operator==(const PolicySequence& o) const { return controls == o.controls; }
};

/// Common-random-number noise paths: S paths of N unit-normal state-noise vectors.
template <int NX>
class ScenarioSet {
  public:
    ScenarioSet(std::size_t count, std::size_t horizon) : count_(count), horizon_(horizon), noise_(count * horizon) {
        if (count == 0) throw std::invalid_argument("ScenarioSet: need at least one scenario");
        for (auto& n : noise_) n.setZero();
    }

    static ScenarioSet zeros(std::size_t count, std::size_t horizon) { return ScenarioSet(count, horizon); }

    static ScenarioSet sample(std::size_t count, std::size_t horizon, RandomStream& rng) {
        ScenarioSet s(count, horizon);
        for (auto& n : s.noise_) {
            for (int i = 0; i < NX; ++i) n[i] = rng.normal();
        }
        return s;
    }

    [[nodiscard]] std::size_t count() const { return count_; }
    [[nodiscard]] std::size_t horizon() const { return horizon_; }

    [[nodiscard]] std::span<const Vec<NX>> path(std::size_t s) const {
        return std::span<const Vec<NX>>(noise_).subspan(s * horizon_, horizon_);
    }
    [[nodiscard]] std::span<Vec<NX>> path(std::size_t s) {
        return std::span<Vec<NX>>(noise_).subspan(s * horizon_, horizon_);
    }

  private:
    std::size_t count_;
    std::size_t horizon_;
    std::vector<Vec<NX>> noise_;
};

/// Single-path cost sum_i l(x_i, u_i) + V_f(x_N) with controls clipped to the model bounds.
template <int NX, int NU, int NP>
double rollout_cost(const SystemModel<NX, NU, NP>& model, const CostSpec<NX>& cost, const Vec<NX>& x0,
                    const PolicySequence<NU>& v, const Vec<NP>& theta, std::span<const Vec<NX>> noise_path) {
    if (noise_path.size() != v.horizon())
        throw std::invalid_argument("rollout_cost: noise path length " + std::to_string(noise_path.size()) +
                                    " != horizon " + std::to_string(v.horizon()));
    Vec<NX> x = x0;
    double total = 0.0;
    for (std::size_t i = 0; i < v.horizon(); ++i) {
        const Vec<NU> u = model.clip_control(v.controls[i]);
        total += cost.stage(x, u);
        x = step_stochastic(model, x, u, theta, noise_path[i]);
    }
    return total + cost.terminal(x);
}

/// Scenario average of rollout_cost: the sample estimate of E_w[V_N(x0, theta, v)].
template <int NX, int NU, int NP>
double expected_cost(const SystemModel<NX, NU, NP>& model, const CostSpec<NX>& cost, const Vec<NX>& x0,
                     const PolicySequence<NU>& v, const Vec<NP>& theta, const ScenarioSet<NX>& scen) {
    if (scen.horizon() != v.horizon())
        throw std::invalid_argument("expected_cost: scenario horizon does not match policy horizon");
    double total = 0.0;
    for (std::size_t s = 0; s < scen.count(); ++s) total += rollout_cost(model, cost, x0, v, theta, scen.path(s));
    return total / static_cast<double>(scen.count());
}

}  // namespace bramp
