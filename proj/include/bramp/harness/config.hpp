#pragma once

#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include <yaml-cpp/yaml.h>

#include "bramp/ambiguity.hpp"
#include "bramp/bayes_filter.hpp"
#include "bramp/dynamics.hpp"
#include "bramp/mpc.hpp"
#include "bramp/rollout.hpp"

namespace bramp {

/// Configuration problem. `field()` names the offending key when there is one.
class ConfigError : public std::runtime_error {
  public:
    ConfigError(const std::string& field, const std::string& what)
        : std::runtime_error(field.empty() ? what : field + ": " + what), field_(field) {}
    [[nodiscard]] const std::string& field() const { return field_; }

  private:
    std::string field_;
};

struct ModelConfig {
    Vec<2> theta_true{0.2, 0.5};
    Vec<2> prior_lo{0.05, 0.25};
    Vec<2> prior_hi{0.5, 1.0};
    double noise_std = 0.01;
    double dt = 0.05;
    double u_max = 10.0;
    Vec<4> x0 = Vec<4>::Zero();
};

struct ControllerConfig {
    ControllerKind kind = ControllerKind::risk_averse;
    std::size_t horizon = 5;
    int budget = 8;
    std::size_t scenarios = 16;
    double level = 0.9;
    IntervalKind interval = IntervalKind::equal_tail;
    /// Empty means "use the prior box".
    std::vector<double> tube_lo;
    std::vector<double> tube_hi;
    std::size_t stochastic_samples = 32;
    int grid_points = 3;
    OptimizerSettings optimizer;
};

struct RunConfig {
    std::size_t steps = 100;
    std::size_t runs = 50;
    std::uint64_t seed = 1;
    std::string out = "out";
    double abort_threshold = 1e6;
};

/// Finite-theta identifiability scenario on x_dot = theta_0 u + theta_1.
struct ConsistencyConfig {
    std::vector<Vec<2>> thetas{Vec<2>(1.0, 0.5), Vec<2>(2.0, 0.5), Vec<2>(1.5, 1.5)};
    std::size_t true_index = 0;
    /// Inputs of the two contexts; the state part of each context is 0.
    std::vector<double> contexts{0.0, 1.0};
    double noise_std = 0.05;
    double dt = 0.1;
    std::size_t steps = 500;
    std::size_t seeds = 20;
    std::size_t particles_per_theta = 100;
    double ess_threshold = 0.5;
    double tol = 1e-8;
    std::size_t grid_points = 241;
};

struct ExperimentConfig {
    ModelConfig model;
    CostSpec<4> cost = default_cost();
    ControllerConfig controller;
    FilterSettings filter;
    RunConfig run;
    ConsistencyConfig consistency;

    static CostSpec<4> default_cost() {
        CostSpec<4> c;
        c.q_diag = Vec<4>(1.0, 0.1, 10.0, 0.1);
        c.r = 0.01;
        c.x_star = Vec<4>(0.0, 0.0, std::numbers::pi, 0.0);
        c.terminal_weight = 1.0;
        return c;
    }

    [[nodiscard]] CartPoleModel make_model() const {
        auto m = make_cartpole_model(model.prior_lo, model.prior_hi, model.noise_std, model.dt);
        m.u_lo = Vec<1>::Constant(-model.u_max);
        m.u_hi = Vec<1>::Constant(model.u_max);
        return m;
    }

    [[nodiscard]] Box<2> tube_box() const {
        if (controller.tube_lo.empty()) return {model.prior_lo, model.prior_hi};
        return {Vec<2>(controller.tube_lo[0], controller.tube_lo[1]),
                Vec<2>(controller.tube_hi[0], controller.tube_hi[1])};
    }

    [[nodiscard]] ControllerSpec<2> controller_spec(ControllerKind kind) const {
        ControllerSpec<2> spec;
        spec.kind = kind;
        spec.horizon = controller.horizon;
        spec.budget = controller.budget;
        spec.tube = tube_box();
        spec.stochastic_samples = controller.stochastic_samples;
        spec.candidates.grid_points = controller.grid_points;
        spec.optimizer = controller.optimizer;
        return spec;
    }

    /// Throws ConfigError naming the first field that breaks an invariant.
    void validate() const {
        auto require = [](bool ok, const char* field, const char* what) {
            if (!ok) throw ConfigError(field, what);
        };
        require(run.steps >= 1, "steps", "must be >= 1");
        require(run.runs >= 1, "runs", "must be >= 1");
        require(run.abort_threshold > 0.0, "abort_threshold", "must be > 0");
        require(controller.horizon >= 1, "horizon", "must be >= 1");
        require(controller.budget >= 0, "budget", "must be >= 0");
        require(controller.scenarios >= 1, "scenarios", "must be >= 1");
        require(controller.level > 0.0 && controller.level < 1.0, "level", "must lie in (0, 1)");
        require(controller.stochastic_samples >= 1, "stochastic_samples", "must be >= 1");
        require(controller.grid_points >= 0, "grid_points", "must be >= 0");
        require(controller.tube_lo.size() == controller.tube_hi.size(), "tube", "tube_lo and tube_hi must both be set");
        require(controller.tube_lo.empty() || controller.tube_lo.size() == 2, "tube", "tube bounds need 2 entries");
        require(filter.particles >= 1, "particles", "must be >= 1");
        require(filter.jitter_fraction >= 0.0, "jitter", "must be >= 0");
        require(filter.ess_threshold >= 0.0 && filter.ess_threshold <= 1.0, "ess_threshold", "must lie in [0, 1]");
        require(model.noise_std > 0.0, "noise_std", "must be > 0");
        require(model.dt > 0.0, "dt", "must be > 0");
        require(model.u_max > 0.0, "u_max", "must be > 0");
        require((model.prior_lo.array() > 0.0).all(), "prior_lo", "mass and length must be positive");
        require((model.prior_lo.array() <= model.prior_hi.array()).all(), "prior_hi", "must be >= prior_lo");
        const bool inside = (model.theta_true.array() >= model.prior_lo.array()).all() &&
                            (model.theta_true.array() <= model.prior_hi.array()).all();
        require(inside, "theta_true", "must lie inside the prior box");
        const auto tube = tube_box();
        require((tube.lo.array() > 0.0).all() && (tube.lo.array() <= tube.hi.array()).all(), "tube",
                "tube box must be non-empty with positive entries");
        try {
            cost.validate();
        } catch (const std::invalid_argument& e) {
            throw ConfigError("cost", e.what());
        }
        const auto& c = consistency;
        require(c.thetas.size() >= 2, "consistency.thetas", "need at least two thetas");
        require(c.true_index < c.thetas.size(), "consistency.true_index", "out of range");
        require(c.contexts.size() == 2, "consistency.contexts", "need exactly two inputs");
        require(c.noise_std > 0.0, "consistency.noise_std", "must be > 0");
        require(c.dt > 0.0, "consistency.dt", "must be > 0");
        require(c.steps >= 1, "consistency.steps", "must be >= 1");
        require(c.seeds >= 1, "consistency.seeds", "must be >= 1");
        require(c.particles_per_theta >= 1, "consistency.particles_per_theta", "must be >= 1");
        require(c.tol > 0.0, "consistency.tol", "must be > 0");
        require(c.grid_points >= 2, "consistency.grid_points", "must be >= 2");
    }
};

namespace detail {

inline std::string where(const YAML::Node& n) {
    const auto m = n.Mark();
    return m.line >= 0 ? " (line " + std::to_string(m.line + 1) + ")" : "";
}

template <typename T>
T read_scalar(const YAML::Node& n, const std::string& field) {
    try {
        return n.as<T>();
    } catch (const YAML::Exception&) {
        throw ConfigError(field, "wrong type" + where(n));
    }
}

inline std::vector<double> read_list(const YAML::Node& n, const std::string& field) {
    if (!n.IsSequence()) throw ConfigError(field, "expected a list" + where(n));
    return read_scalar<std::vector<double>>(n, field);
}

template <int N>
Vec<N> read_vec(const YAML::Node& n, const std::string& field) {
    const auto v = read_list(n, field);
    if (v.size() != static_cast<std::size_t>(N))
        throw ConfigError(field, "expected " + std::to_string(N) + " entries" + where(n));
    return Eigen::Map<const Vec<N>>(v.data());
}

inline std::size_t read_count(const YAML::Node& n, const std::string& field) {
    const auto v = read_scalar<long long>(n, field);
    if (v < 0) throw ConfigError(field, "must be >= 0" + where(n));
    return static_cast<std::size_t>(v);
}

/// Calls `handle(key, node)` for every entry of a table; unknown keys are errors.
template <typename Handler>
void for_each_key(const YAML::Node& table, const std::string& name, Handler&& handle) {
    if (!table) return;
    if (table.IsNull()) return;
    if (!table.IsMap()) throw ConfigError(name, "expected a table" + where(table));
    for (const auto& kv : table) {
        const auto key = kv.first.as<std::string>();
        if (!handle(key, kv.second)) throw ConfigError(name + "." + key, "unknown key" + where(kv.first));
    }
}

inline ExperimentConfig parse_config(const YAML::Node& root) {
    ExperimentConfig cfg;
    if (!root || root.IsNull()) return cfg;
    if (!root.IsMap()) throw ConfigError("", "top level must be a table" + where(root));

    for_each_key(root, "config", [](const std::string& key, const YAML::Node&) {
        return key == "model" || key == "cost" || key == "controller" || key == "filter" || key == "run" ||
               key == "consistency";
    });

    for_each_key(root["model"], "model", [&](const std::string& k, const YAML::Node& n) {
        auto& m = cfg.model;
        if (k == "theta_true") m.theta_true = read_vec<2>(n, k);
        else if (k == "prior_lo") m.prior_lo = read_vec<2>(n, k);
        else if (k == "prior_hi") m.prior_hi = read_vec<2>(n, k);
        else if (k == "noise_std") m.noise_std = read_scalar<double>(n, k);
        else if (k == "dt") m.dt = read_scalar<double>(n, k);
        else if (k == "u_max") m.u_max = read_scalar<double>(n, k);
        else if (k == "x0") m.x0 = read_vec<4>(n, k);
        else return false;
        return true;
    });

    for_each_key(root["cost"], "cost", [&](const std::string& k, const YAML::Node& n) {
        auto& c = cfg.cost;
        if (k == "q") c.q_diag = read_vec<4>(n, k);
        else if (k == "r") c.r = read_scalar<double>(n, k);
        else if (k == "x_star") c.x_star = read_vec<4>(n, k);
        else if (k == "terminal_weight") c.terminal_weight = read_scalar<double>(n, k);
        else return false;
        return true;
    });

    for_each_key(root["controller"], "controller", [&](const std::string& k, const YAML::Node& n) {
        auto& c = cfg.controller;
        if (k == "kind") {
            try {
                c.kind = controller_from_string(read_scalar<std::string>(n, k));
            } catch (const std::invalid_argument& e) {
                throw ConfigError(k, e.what() + where(n));
            }
        } else if (k == "horizon") c.horizon = read_count(n, k);
        else if (k == "budget") c.budget = read_scalar<int>(n, k);
        else if (k == "scenarios") c.scenarios = read_count(n, k);
        else if (k == "level") c.level = read_scalar<double>(n, k);
        else if (k == "interval") {
            const auto s = read_scalar<std::string>(n, k);
            if (s == "equal_tail") c.interval = IntervalKind::equal_tail;
            else if (s == "highest_density") c.interval = IntervalKind::highest_density;
            else throw ConfigError(k, "expected equal_tail or highest_density" + where(n));
        } else if (k == "tube_lo") c.tube_lo = read_list(n, k);
        else if (k == "tube_hi") c.tube_hi = read_list(n, k);
        else if (k == "stochastic_samples") c.stochastic_samples = read_count(n, k);
        else if (k == "grid_points") c.grid_points = read_scalar<int>(n, k);
        else if (k == "optimizer") {
            const auto s = read_scalar<std::string>(n, k);
            if (s == "projected_gradient") c.optimizer.method = SearchMethod::projected_gradient;
            else if (s == "coordinate") c.optimizer.method = SearchMethod::coordinate;
            else throw ConfigError(k, "expected projected_gradient or coordinate" + where(n));
        } else return false;
        return true;
    });

    for_each_key(root["filter"], "filter", [&](const std::string& k, const YAML::Node& n) {
        auto& f = cfg.filter;
        if (k == "particles") f.particles = read_count(n, k);
        else if (k == "jitter") f.jitter_fraction = read_scalar<double>(n, k);
        else if (k == "ess_threshold") f.ess_threshold = read_scalar<double>(n, k);
        else return false;
        return true;
    });

    for_each_key(root["run"], "run", [&](const std::string& k, const YAML::Node& n) {
        auto& r = cfg.run;
        if (k == "steps") r.steps = read_count(n, k);
        else if (k == "runs") r.runs = read_count(n, k);
        else if (k == "seed") r.seed = read_scalar<std::uint64_t>(n, k);
        else if (k == "out") r.out = read_scalar<std::string>(n, k);
        else if (k == "abort_threshold") r.abort_threshold = read_scalar<double>(n, k);
        else return false;
        return true;
    });

    for_each_key(root["consistency"], "consistency", [&](const std::string& k, const YAML::Node& n) {
        auto& c = cfg.consistency;
        const std::string f = "consistency." + k;
        if (k == "thetas") {
            if (!n.IsSequence()) throw ConfigError(f, "expected a list of pairs" + where(n));
            c.thetas.clear();
            for (const auto& item : n) c.thetas.push_back(read_vec<2>(item, f));
        } else if (k == "true_index") c.true_index = read_count(n, f);
        else if (k == "contexts") c.contexts = read_list(n, f);
        else if (k == "noise_std") c.noise_std = read_scalar<double>(n, f);
        else if (k == "dt") c.dt = read_scalar<double>(n, f);
        else if (k == "steps") c.steps = read_count(n, f);
        else if (k == "seeds") c.seeds = read_count(n, f);
        else if (k == "particles_per_theta") c.particles_per_theta = read_count(n, f);
        else if (k == "ess_threshold") c.ess_threshold = read_scalar<double>(n, f);
        else if (k == "tol") c.tol = read_scalar<double>(n, f);
        else if (k == "grid_points") c.grid_points = read_count(n, f);
        else return false;
        return true;
    });
    return cfg;
}

}  // namespace detail

/// Parses YAML text; missing keys keep their defaults. The result is validated.
inline ExperimentConfig parse_config_text(const std::string& text) {
    YAML::Node root;
    try {
        root = YAML::Load(text);
    } catch (const YAML::ParserException& e) {
        throw ConfigError("", "parse error at line " + std::to_string(e.mark.line + 1) + ": " + e.msg);
    }
    auto cfg = detail::parse_config(root);
    cfg.validate();
    return cfg;
}

inline ExperimentConfig load_config(const std::string& path) {
    YAML::Node root;
    try {
        root = YAML::LoadFile(path);
    } catch (const YAML::BadFile&) {
        throw ConfigError("", "cannot open config file '" + path + "'");
    } catch (const YAML::ParserException& e) {
        throw ConfigError("", path + ": parse error at line " + std::to_string(e.mark.line + 1) + ": " + e.msg);
    }
    auto cfg = detail::parse_config(root);
    cfg.validate();
    return cfg;
}

}  // namespace bramp
