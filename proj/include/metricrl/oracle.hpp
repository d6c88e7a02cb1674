#pragma once

// Exact ground truth for the deterministic sparse goal-conditioned MDP:
// optimal values from geodesics, V*(s) = max_i gamma^{d_S(s, s_i)} * r_i,
// and the optimal greedy policy pi*(s) = argmax_a V*(T(s, a)).
//
// Discounting convention: returns are summed as sum_{t>=1} gamma^t r_t, which
// makes the geodesic identity exact (a goal entered after d steps is worth
// gamma^d * r_g, and V*(s_g) = r_g at the goal itself). Unreachable goals
// contribute nothing; nodes from which no goal is reachable get V* = 0 and are
// flagged, never silently zeroed.

#include <cmath>
#include <string>
#include <vector>

#include "metricrl/env.hpp"
#include "metricrl/errors.hpp"
#include "metricrl/graph.hpp"

namespace metricrl {

struct ValueTable {
    std::vector<double> value;       // per graph node id
    std::vector<bool> goal_reachable;
    int unreachable_count = 0;
};

struct GoalNode {
    int node = -1;
    double reward = 1.0;
};

inline std::vector<GoalNode> goal_nodes(const DatasetGraph& g, const std::vector<GoalSpec>& goals) {
    std::vector<GoalNode> out;
    for (const auto& goal : goals) {
        const int id = g.find(feature_key(goal.features));
        if (id < 0) throw UsageError("goal state not present in graph: " + feature_key(goal.features));
        out.push_back({id, goal.reward});
    }
    return out;
}

inline ValueTable optimal_value(const DatasetGraph& g, const std::vector<GoalNode>& goals,
                                double gamma, bool through_meta = false) {
    if (gamma <= 0.0 || gamma >= 1.0) throw UsageError("optimal_value: gamma must be in (0,1)");
    if (goals.empty()) throw UsageError("optimal_value: no goals");
    ValueTable table;
    table.value.assign(g.keys.size(), 0.0);
    table.goal_reachable.assign(g.keys.size(), false);
    for (const auto& goal : goals) {
        const std::vector<int> dist = g.geodesics_from(goal.node, through_meta);
        for (int i = 0; i < g.node_count(); ++i) {
            if (dist[i] == kUnreachable) continue;
            table.goal_reachable[i] = true;
            const double v = std::pow(gamma, static_cast<double>(dist[i])) * goal.reward;
            if (v > table.value[i]) table.value[i] = v;
        }
    }
    for (int i = 0; i < g.node_count(); ++i)
        if (!table.goal_reachable[i] && i != g.meta_node) ++table.unreachable_count;
    return table;
}

// Optimal greedy policy over enumerated env states; ties broken by lowest
// action id, goal states mapped to action 0.
struct OraclePolicy {
    std::vector<EnvState> states;                 // enumeration order
    std::unordered_map<std::string, int> index;   // state key -> position
    std::vector<int> action;                      // per position
    std::vector<double> value;                    // V* per position

    int act(const DiscreteEnv& env, const EnvState& s) const {
        auto it = index.find(env.state_key(s));
        if (it == index.end()) throw UsageError("oracle policy: unknown state " + env.state_key(s));
        return action[it->second];
    }
};

inline OraclePolicy optimal_greedy_policy(const DiscreteEnv& env, const DatasetGraph& g,
                                          const ValueTable& values) {
    OraclePolicy policy;
    policy.states = env.enumerate_states();
    for (std::size_t i = 0; i < policy.states.size(); ++i)
        policy.index[env.state_key(policy.states[i])] = static_cast<int>(i);
    policy.action.assign(policy.states.size(), 0);
    policy.value.assign(policy.states.size(), 0.0);
    for (std::size_t i = 0; i < policy.states.size(); ++i) {
        const EnvState& s = policy.states[i];
        const int node = g.find(env.state_key(s));
        if (node >= 0) policy.value[i] = values.value[node];
        if (env.is_goal(s)) continue;  // action 0 placeholder at absorbing states
        int best_action = 0;
        double best_value = -1.0;
        for (int a = 0; a < env.action_count(); ++a) {
            const EnvState nxt = env.transition(s, a).next;
            const int nxt_node = g.find(env.state_key(nxt));
            if (nxt_node < 0) throw UsageError("oracle policy: successor missing from graph");
            const double v = values.value[nxt_node];
            if (v > best_value) {
                best_value = v;
                best_action = a;
            }
        }
        policy.action[i] = best_action;
    }
    return policy;
}

// The set of optimal actions at a state (successor achieves maximal V*).
inline std::vector<int> optimal_action_set(const DiscreteEnv& env, const DatasetGraph& g,
                                           const ValueTable& values, const EnvState& s) {
    std::vector<int> best;
    double best_value = -1.0;
    for (int a = 0; a < env.action_count(); ++a) {
        const EnvState nxt = env.transition(s, a).next;
        const int node = g.find(env.state_key(nxt));
        if (node < 0) throw UsageError("optimal_action_set: successor missing from graph");
        const double v = values.value[node];
        if (v > best_value + 1e-15) {
            best_value = v;
            best.assign(1, a);
        } else if (std::abs(v - best_value) <= 1e-15) {
            best.push_back(a);
        }
    }
    return best;
}

// CSV export of a value table: state key, value, reachable flag.
inline std::string value_table_csv(const DatasetGraph& g, const ValueTable& t) {
    std::string out = "state,value,goal_reachable\n";
    for (int i = 0; i < g.node_count(); ++i) {
        if (i == g.meta_node) continue;
        out += g.keys[i] + "," + format_double(t.value[i]) + "," +
               (t.goal_reachable[i] ? "1" : "0") + "\n";
    }
    return out;
}

}  // namespace metricrl
