#pragma once

#include <cmath>
#include <numbers>
#include <span>
#include <type_traits>
#include <stdexcept>
#include <string>

#include <Eigen/Core>

namespace bramp {

template <int N>
using Vec = Eigen::Matrix<double, N, 1>;

template <int N>
inline bool all_finite(const Vec<N>& v) {
    for (int i = 0; i < N; ++i) {
        if (!std::isfinite(v[i])) return false;
    }
    return true;
}

/// Discrete-time stochastic system built from a continuous-time drift.
///
/// `drift(x, u, theta)` returns dx/dt. The discrete step is one classical RK4
/// step of length `dt` with `u` held constant, followed by additive Gaussian
/// noise with per-dimension standard deviation `noise_std`.
/// Non-deduced argument: lets callers pass Eigen expressions such as Vec<N>::Zero().
template <int N>
using In = std::type_identity_t<Vec<N>>;

template <int NX, int NU, int NP>
struct SystemModel {
    static constexpr int nx = NX;
    static constexpr int nu = NU;
    static constexpr int np = NP;

    using State = Vec<NX>;
    using Control = Vec<NU>;
    using Theta = Vec<NP>;
    using Drift = State (*)(const State&, const Control&, const Theta&);

    Drift drift = nullptr;
    State noise_std = State::Zero();
    double dt = 0.05;
    Theta param_lo = Theta::Zero();
    Theta param_hi = Theta::Zero();
    Control u_lo = Control::Constant(-1.0);
    Control u_hi = Control::Constant(1.0);

    void validate() const {
        if (drift == nullptr) throw std::invalid_argument("SystemModel: drift is not set");
        if (!(dt > 0.0) || !std::isfinite(dt)) throw std::invalid_argument("SystemModel: dt must be > 0");
        for (int i = 0; i < NX; ++i) {
            if (!(noise_std[i] >= 0.0) || !std::isfinite(noise_std[i]))
                throw std::invalid_argument("SystemModel: noise_std must be >= 0");
        }
        for (int i = 0; i < NP; ++i) {
            if (!(param_lo[i] <= param_hi[i]))
                throw std::invalid_argument("SystemModel: parameter box is empty");
        }
        for (int i = 0; i < NU; ++i) {
            if (!(u_lo[i] <= u_hi[i])) throw std::invalid_argument("SystemModel: control bounds are empty");
        }
    }

    [[nodiscard]] Control clip_control(const Control& u) const { return u.cwiseMax(u_lo).cwiseMin(u_hi); }
    [[nodiscard]] Theta clip_theta(const Theta& th) const { return th.cwiseMax(param_lo).cwiseMin(param_hi); }
    [[nodiscard]] bool in_box(const Theta& th) const {
        return (th.array() >= param_lo.array()).all() && (th.array() <= param_hi.array()).all();
    }
};

// ---------------------------------------------------------------------------
// Cart-pole

namespace cartpole {

inline constexpr double cart_mass = 1.0;  // M [kg]
inline constexpr double gravity = 9.81;   // g [m/s^2]

enum : int { P = 0, P_DOT = 1, Q = 2, Q_DOT = 3 };
enum : int { MASS = 0, LENGTH = 1 };

}  // namespace cartpole

using CartPoleModel = SystemModel<4, 1, 2>;

/// Cart-pole right-hand side; state (p, p_dot, q, q_dot), theta (m, l).
/// q = 0 is hanging down.
inline Vec<4> cartpole_rhs(const Vec<4>& x, const Vec<1>& u, const Vec<2>& theta) {
    if (!all_finite(x) || !std::isfinite(u[0]) || !all_finite(theta))
        throw std::domain_error("cartpole_rhs: non-finite input");
    const double m = theta[cartpole::MASS];
    const double l = theta[cartpole::LENGTH];
    if (!(m > 0.0) || !(l > 0.0)) throw std::domain_error("cartpole_rhs: m and l must be positive");

    constexpr double M = cartpole::cart_mass;
    constexpr double g = cartpole::gravity;
    const double q = x[cartpole::Q];
    const double qd = x[cartpole::Q_DOT];
    const double s = std::sin(q);
    const double c = std::cos(q);
    const double denom = M + m * s * s;

    Vec<4> dx;
    dx[0] = x[cartpole::P_DOT];
    dx[1] = (u[0] + m * s * (l * qd * qd + g * c)) / denom;
    dx[2] = qd;
    dx[3] = (-u[0] * c - m * l * qd * qd * c * s - (M + m) * g * s) / (l * denom);
    return dx;
}

/// Benchmark cart-pole: dt = 0.05 s, sigma_w = 0.01 on every state, u in [-10, 10] N.
inline CartPoleModel make_cartpole_model(const Vec<2>& param_lo, const Vec<2>& param_hi,
                                         double noise_std = 0.01, double dt = 0.05) {
    CartPoleModel m;
    m.drift = &cartpole_rhs;
    m.noise_std = Vec<4>::Constant(noise_std);
    m.dt = dt;
    m.param_lo = param_lo;
    m.param_hi = param_hi;
    m.u_lo = Vec<1>::Constant(-10.0);
    m.u_hi = Vec<1>::Constant(10.0);
    m.validate();
    return m;
}

// ---------------------------------------------------------------------------
// Scalar test systems

using ScalarModel = SystemModel<1, 1, 1>;
using AffineInputModel = SystemModel<1, 1, 2>;

/// x_dot = -theta * x + u
inline Vec<1> scalar_decay_rhs(const Vec<1>& x, const Vec<1>& u, const Vec<1>& theta) {
    if (!std::isfinite(x[0]) || !std::isfinite(u[0]) || !std::isfinite(theta[0]))
        throw std::domain_error("scalar_decay_rhs: non-finite input");
    return Vec<1>::Constant(-theta[0] * x[0] + u[0]);
}

/// x_dot = theta * u. RK4 is exact here, so one step is linear-Gaussian in theta.
inline Vec<1> scalar_gain_rhs(const Vec<1>& x, const Vec<1>& u, const Vec<1>& theta) {
    if (!std::isfinite(x[0]) || !std::isfinite(u[0]) || !std::isfinite(theta[0]))
        throw std::domain_error("scalar_gain_rhs: non-finite input");
    return Vec<1>::Constant(theta[0] * u[0]);
}

/// x_dot = theta_0 * u + theta_1. With u = 0 only theta_1 is observable.
inline Vec<1> affine_input_rhs(const Vec<1>& x, const Vec<1>& u, const Vec<2>& theta) {
    if (!std::isfinite(x[0]) || !std::isfinite(u[0]) || !all_finite(theta))
        throw std::domain_error("affine_input_rhs: non-finite input");
    return Vec<1>::Constant(theta[0] * u[0] + theta[1]);
}

inline ScalarModel make_scalar_model(ScalarModel::Drift drift, double lo, double hi, double noise_std,
                                     double dt, double u_bound = 10.0) {
    ScalarModel m;
    m.drift = drift;
    m.noise_std = Vec<1>::Constant(noise_std);
    m.dt = dt;
    m.param_lo = Vec<1>::Constant(lo);
    m.param_hi = Vec<1>::Constant(hi);
    m.u_lo = Vec<1>::Constant(-u_bound);
    m.u_hi = Vec<1>::Constant(u_bound);
    m.validate();
    return m;
}

inline AffineInputModel make_affine_input_model(const Vec<2>& lo, const Vec<2>& hi, double noise_std,
                                                double dt) {
    AffineInputModel m;
    m.drift = &affine_input_rhs;
    m.noise_std = Vec<1>::Constant(noise_std);
    m.dt = dt;
    m.param_lo = lo;
    m.param_hi = hi;
    m.u_lo = Vec<1>::Constant(-10.0);
    m.u_hi = Vec<1>::Constant(10.0);
    m.validate();
    return m;
}

// ---------------------------------------------------------------------------
// Discretization

/// One classical RK4 step with zero-order hold on u.
template <int NX, int NU, int NP>
Vec<NX> rk4_step(const SystemModel<NX, NU, NP>& model, const In<NX>& x, const In<NU>& u,
                 const In<NP>& theta, double dt) {
    if (!(dt > 0.0)) throw std::invalid_argument("rk4_step: dt must be > 0");
    const auto f = model.drift;
    const Vec<NX> k1 = f(x, u, theta);
    const Vec<NX> k2 = f(x + (0.5 * dt) * k1, u, theta);
    const Vec<NX> k3 = f(x + (0.5 * dt) * k2, u, theta);
    const Vec<NX> k4 = f(x + dt * k3, u, theta);
    Vec<NX> next = x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if (!all_finite(next)) throw std::domain_error("rk4_step: non-finite result");
    return next;
}

template <int NX, int NU, int NP>
Vec<NX> rk4_step(const SystemModel<NX, NU, NP>& model, const In<NX>& x, const In<NU>& u,
                 const In<NP>& theta) {
    return rk4_step(model, x, u, theta, model.dt);
}

/// rk4_step plus noise_std ⊙ noise. The caller owns the noise draw.
template <int NX, int NU, int NP>
Vec<NX> step_stochastic(const SystemModel<NX, NU, NP>& model, const In<NX>& x, const In<NU>& u,
                        const In<NP>& theta, const In<NX>& noise) {
    return rk4_step(model, x, u, theta) + model.noise_std.cwiseProduct(noise);
}

template <int NX, int NU, int NP>
Vec<NX> step_stochastic(const SystemModel<NX, NU, NP>& model, const In<NX>& x, const In<NU>& u,
                        const In<NP>& theta, std::span<const double> noise) {
    if (noise.size() != static_cast<std::size_t>(NX))
        throw std::invalid_argument("step_stochastic: noise has " + std::to_string(noise.size()) +
                                    " entries, state has " + std::to_string(NX));
    return step_stochastic(model, x, u, theta, Vec<NX>(Eigen::Map<const Vec<NX>>(noise.data())));
}

/// log q(x_next; theta, x, u): independent Gaussians around the RK4 mean.
template <int NX, int NU, int NP>
double log_transition_density(const SystemModel<NX, NU, NP>& model, const In<NX>& x_next,
                              const In<NX>& x, const In<NU>& u, const In<NP>& theta) {
    for (int i = 0; i < NX; ++i) {
        if (!(model.noise_std[i] > 0.0))
            throw std::invalid_argument("transition_density: noise_std must be > 0 in every dimension");
    }
    const Vec<NX> mean = rk4_step(model, x, u, theta);
    double log_p = 0.0;
    for (int i = 0; i < NX; ++i) {
        const double s = model.noise_std[i];
        const double z = (x_next[i] - mean[i]) / s;
        log_p += -0.5 * z * z - std::log(s) - 0.5 * std::log(2.0 * std::numbers::pi);
    }
    return log_p;
}

/// q(x_next; theta, x, u). Far tails underflow to 0.
template <int NX, int NU, int NP>
double transition_density(const SystemModel<NX, NU, NP>& model, const In<NX>& x_next, const In<NX>& x,
                          const In<NU>& u, const In<NP>& theta) {
    return std::exp(log_transition_density(model, x_next, x, u, theta));
}

}  // namespace bramp
