#pragma once

// Value construction from the embedding and the greedy policy on top of it.
// Single goal:  V(s) = gamma^{||phi(s) - phi(s_g)||} * r_g
// Multi-goal:   V(s) = max_i gamma^{||phi(s) - phi(s_i)||} * r_i
// neg-distance mode replaces the single-goal value by -||phi(s) - phi(s_g)||,
// a strictly monotone transform with an identical greedy policy.

#include <cmath>
#include <concepts>
#include <string>
#include <vector>

#include "metricrl/env.hpp"
#include "metricrl/errors.hpp"
#include "metricrl/matrix.hpp"
#include "metricrl/metric.hpp"

namespace metricrl {

enum class ValueMode { GammaExp, NegDistance };

inline std::string value_mode_name(ValueMode m) {
    return m == ValueMode::GammaExp ? "gamma-exp" : "neg-distance";
}
inline ValueMode parse_value_mode(const std::string& s) {
    if (s == "gamma-exp") return ValueMode::GammaExp;
    if (s == "neg-distance") return ValueMode::NegDistance;
    throw UsageError("unknown value mode: '" + s + "' (expected gamma-exp|neg-distance)");
}

class ValueModel {
  public:
    ValueModel(EmbeddingModel model, std::vector<GoalSpec> goals, double gamma,
               ValueMode mode = ValueMode::GammaExp)
        : model_(std::move(model)), goals_(std::move(goals)), gamma_(gamma), mode_(mode) {
        if (gamma_ <= 0.0 || gamma_ >= 1.0) throw UsageError("value model: gamma must be in (0,1)");
        if (goals_.empty()) throw UsageError("value model: no goals");
        if (mode_ == ValueMode::NegDistance && goals_.size() != 1)
            throw UsageError("value model: neg-distance mode is single-goal only");
        for (const auto& g : goals_) {
            if (g.reward <= 0.0) throw UsageError("value model: goal rewards must be positive");
            goal_latents_.push_back(model_.embed(g.features));
        }
    }

    // Latent distance is used as a real exponent; no rounding.
    double value(const Vector& features) const {
        const Vector z = model_.embed(features);
        if (mode_ == ValueMode::NegDistance) return -distance(z, goal_latents_[0]);
        double best = 0.0;
        for (std::size_t i = 0; i < goals_.size(); ++i) {
            const double v = std::pow(gamma_, distance(z, goal_latents_[i])) * goals_[i].reward;
            if (i == 0 || v > best) best = v;
        }
        return best;
    }

    // Index of the goal achieving the max (gamma-exp semantics).
    int preferred_goal(const Vector& features) const {
        const Vector z = model_.embed(features);
        int best = 0;
        double best_v = -1.0;
        for (std::size_t i = 0; i < goals_.size(); ++i) {
            const double v = std::pow(gamma_, distance(z, goal_latents_[i])) * goals_[i].reward;
            if (v > best_v) {
                best_v = v;
                best = static_cast<int>(i);
            }
        }
        return best;
    }

    const EmbeddingModel& embedding() const { return model_; }
    double gamma() const { return gamma_; }
    const std::vector<GoalSpec>& goals() const { return goals_; }
    ValueMode mode() const { return mode_; }

  private:
    EmbeddingModel model_;
    std::vector<GoalSpec> goals_;
    double gamma_;
    ValueMode mode_;
    std::vector<Vector> goal_latents_;
};

// Greedy over successor values; ties break to the lowest action id, absorbing
// states map to action 0. ValueFn: double(const EnvState&).
template <typename ValueFn>
    requires std::invocable<ValueFn&, const EnvState&>
int greedy_action(const DiscreteEnv& env, const EnvState& s, ValueFn&& value_of_state) {
    if (env.is_goal(s)) return 0;
    int best = 0;
    double best_value = 0.0;
    bool first = true;
    for (int a = 0; a < env.action_count(); ++a) {
        const EnvState nxt = env.transition(s, a).next;
        const double v = value_of_state(nxt);
        if (first || v > best_value) {
            best_value = v;
            best = a;
            first = false;
        }
    }
    return best;
}

inline int greedy_action(const DiscreteEnv& env, const EnvState& s, const ValueModel& vm) {
    return greedy_action(env, s, [&](const EnvState& nxt) { return vm.value(env.encode(nxt)); });
}

}  // namespace metricrl
