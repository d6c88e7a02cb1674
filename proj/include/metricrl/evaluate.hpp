#pragma once

// Policy evaluation rollouts. Episodes start from uniformly sampled legal
// start states, run to the goal or the env's max episode length, and are
// deterministic given the seed (episode e draws from a derived stream, so
// results do not depend on evaluation order). Discounted return follows the
// same convention as the value oracle: a reward collected on step t (1-based)
// is worth gamma^t * r.

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "metricrl/actors.hpp"
#include "metricrl/env.hpp"
#include "metricrl/errors.hpp"
#include "metricrl/oracle.hpp"
#include "metricrl/rng.hpp"
#include "metricrl/textio.hpp"
#include "metricrl/value.hpp"

namespace metricrl {

using PolicyFn = std::function<int(const EnvState&, Rng&)>;

inline PolicyFn uniform_policy(int action_count) {
    return [action_count](const EnvState&, Rng& rng) { return rng.below_int(action_count); };
}

inline PolicyFn oracle_policy(const DiscreteEnv& env, const OraclePolicy& oracle) {
    return [&env, &oracle](const EnvState& s, Rng&) { return oracle.act(env, s); };
}

inline PolicyFn value_greedy_policy(const DiscreteEnv& env, const ValueModel& vm) {
    return [&env, &vm](const EnvState& s, Rng&) { return greedy_action(env, s, vm); };
}

inline PolicyFn categorical_policy(const DiscreteEnv& env, const PolicyModel& pm) {
    return [&env, &pm](const EnvState& s, Rng& rng) { return pm.sample_action(env.encode(s), rng); };
}

inline PolicyFn argmax_policy(const DiscreteEnv& env, const PolicyModel& pm) {
    return [&env, &pm](const EnvState& s, Rng&) { return pm.argmax_action(env.encode(s)); };
}

inline PolicyFn q_greedy_policy(const DiscreteEnv& env, const QModel& qm) {
    return [&env, &qm](const EnvState& s, Rng&) { return qm.greedy(env.encode(s)); };
}

struct Rollout {
    bool success = false;
    int steps = 0;
    double discounted_return = 0.0;
    int goal_reached = -1;  // index into env goals, -1 if none
};

inline Rollout run_rollout(const DiscreteEnv& env, const PolicyFn& policy, EnvState state,
                           Rng& rng, double gamma, int max_steps = 0) {
    if (max_steps <= 0) max_steps = env.max_episode_len();
    Rollout out;
    for (int t = 0; t < max_steps; ++t) {
        const int a = policy(state, rng);
        const StepResult step = env.transition(state, a);
        if (step.reward != 0.0)
            out.discounted_return += std::pow(gamma, static_cast<double>(t + 1)) * step.reward;
        ++out.steps;
        state = step.next;
        if (step.terminal) {
            out.success = true;
            out.goal_reached = env.goal_index(state);
            break;
        }
    }
    return out;
}

struct EpisodeRow {
    int episode = 0;
    std::string start;
    int steps = 0;
    bool success = false;
    double discounted_return = 0.0;
};

struct EvalReport {
    EnvSpec env;
    std::string policy_id;
    int episodes = 0;
    double success_rate = 0.0;
    double mean_return = 0.0;
    double mean_length = 0.0;
    double gamma = 0.95;
    std::vector<std::uint64_t> seeds;
};

struct EvalResult {
    EvalReport report;
    std::vector<EpisodeRow> rows;
};

inline EvalResult evaluate(const DiscreteEnv& env, const PolicyFn& policy, int episodes,
                           std::uint64_t seed, double gamma, const std::string& policy_id) {
    if (episodes < 1) throw UsageError("evaluate: episodes must be >= 1");
    const auto starts = env.start_states();
    if (starts.empty()) throw UsageError("evaluate: env has no start states");
    Rng root(seed);
    EvalResult result;
    result.report.env = env.spec();
    result.report.policy_id = policy_id;
    result.report.episodes = episodes;
    result.report.gamma = gamma;
    result.report.seeds = {seed};
    double successes = 0.0, returns = 0.0, lengths = 0.0;
    for (int e = 0; e < episodes; ++e) {
        Rng er = root.derive(static_cast<std::uint64_t>(e) + 0xE7A1);
        const EnvState start = starts[er.below(starts.size())];
        const Rollout roll = run_rollout(env, policy, start, er, gamma);
        successes += roll.success ? 1.0 : 0.0;
        returns += roll.discounted_return;
        lengths += roll.steps;
        result.rows.push_back({e, env.state_key(start), roll.steps, roll.success,
                               roll.discounted_return});
    }
    result.report.success_rate = successes / episodes;
    result.report.mean_return = returns / episodes;
    result.report.mean_length = lengths / episodes;
    return result;
}

inline std::string eval_rows_csv(const std::vector<EpisodeRow>& rows) {
    std::string out = "episode,start,steps,success,discounted_return\n";
    for (const auto& r : rows)
        out += std::to_string(r.episode) + "," + r.start + "," + std::to_string(r.steps) + "," +
               (r.success ? "1" : "0") + "," + format_double(r.discounted_return) + "\n";
    return out;
}

}  // namespace metricrl
