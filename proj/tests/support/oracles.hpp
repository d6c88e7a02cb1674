#pragma once

// Independent cross-check implementations kept out of the library on purpose:
// Bellman value iteration, unit-weight Dijkstra, and a brute-force DoorKey
// state enumerator. Used as oracles against the BFS/geodesic code paths.

#include <cmath>
#include <queue>
#include <set>
#include <vector>

#include "metricrl/env.hpp"
#include "metricrl/graph.hpp"

namespace metricrl::testsupport {

// Value iteration for the sparse goal-conditioned MDP under the same
// discounting convention as the value oracle (reward on step t worth
// gamma^t * r): V(s) = max_a gamma * (terminal(s') ? r(s') : V(s')), with
// V(goal) = r_goal fixed. Sweeps until the sup-norm change is below tol.
inline std::vector<double> value_iteration(const metricrl::DiscreteEnv& env,
                                           const std::vector<metricrl::EnvState>& states,
                                           double gamma, double tol = 1e-12,
                                           int max_sweeps = 100000) {
    std::unordered_map<std::string, int> index;
    for (std::size_t i = 0; i < states.size(); ++i)
        index[env.state_key(states[i])] = static_cast<int>(i);
    std::vector<double> value(states.size(), 0.0);
    for (std::size_t i = 0; i < states.size(); ++i) {
        const int gi = env.goal_index(states[i]);
        if (gi >= 0) value[i] = env.spec().goals[gi].reward;
    }
    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        double delta = 0.0;
        for (std::size_t i = 0; i < states.size(); ++i) {
            if (env.is_goal(states[i])) continue;
            double best = 0.0;
            for (int a = 0; a < env.action_count(); ++a) {
                const auto step = env.transition(states[i], a);
                const double backed =
                    gamma * (step.terminal ? step.reward : value[index.at(env.state_key(step.next))]);
                best = std::max(best, backed);
            }
            delta = std::max(delta, std::abs(best - value[i]));
            value[i] = best;
        }
        if (delta < tol) break;
    }
    return value;
}

// Standard-convention value iteration, V(s) = max_a [r(s') + gamma (1-term) V(s')],
// for checks against the DQN TD target.
inline std::vector<double> value_iteration_standard(const metricrl::DiscreteEnv& env,
                                                    const std::vector<metricrl::EnvState>& states,
                                                    double gamma, double tol = 1e-12,
                                                    int max_sweeps = 100000) {
    std::unordered_map<std::string, int> index;
    for (std::size_t i = 0; i < states.size(); ++i)
        index[env.state_key(states[i])] = static_cast<int>(i);
    std::vector<double> value(states.size(), 0.0);
    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        double delta = 0.0;
        for (std::size_t i = 0; i < states.size(); ++i) {
            if (env.is_goal(states[i])) continue;
            double best = -1e300;
            for (int a = 0; a < env.action_count(); ++a) {
                const auto step = env.transition(states[i], a);
                const double backed =
                    step.reward +
                    (step.terminal ? 0.0 : gamma * value[index.at(env.state_key(step.next))]);
                best = std::max(best, backed);
            }
            delta = std::max(delta, std::abs(best - value[i]));
            value[i] = best;
        }
        if (delta < tol) break;
    }
    return value;
}

// Unit-weight Dijkstra; an independent shortest-path route to cross-check BFS.
inline std::vector<int> dijkstra_unit(const metricrl::DatasetGraph& g, int source) {
    std::vector<int> dist(g.keys.size(), metricrl::kUnreachable);
    std::priority_queue<std::pair<int, int>, std::vector<std::pair<int, int>>, std::greater<>> pq;
    dist[source] = 0;
    pq.emplace(0, source);
    while (!pq.empty()) {
        auto [d, u] = pq.top();
        pq.pop();
        if (d > dist[u]) continue;
        if (u == g.meta_node && u != source) continue;
        for (int v : g.adjacency[u]) {
            if (d + 1 < dist[v]) {
                dist[v] = d + 1;
                pq.emplace(dist[v], v);
            }
        }
    }
    return dist;
}

// Brute-force DoorKey state counter: agent position x key status x door flag,
// with legality rules applied directly rather than via BFS reachability.
inline std::size_t doorkey_state_count_bruteforce(const metricrl::DiscreteEnv& env) {
    const int m = env.spec().cells;
    const int wall_x = m / 2;
    const int key_x = env.key_x0();
    const int key_y = env.key_y0();
    const int door_y = env.door_y();
    std::set<std::string> states;
    auto cell_free = [&](int x, int y, bool door_open, bool key_held) {
        if (x < 0 || y < 0 || x >= m || y >= m) return false;
        if (x == wall_x && !(y == door_y && door_open)) return false;
        if (!key_held && x == key_x && y == key_y) return false;
        return true;
    };
    for (int held = 0; held <= 1; ++held) {
        for (int open = 0; open <= 1; ++open) {
            if (open && !held) continue;  // door can only have been opened with the key
            for (int x = 0; x < m; ++x) {
                for (int y = 0; y < m; ++y) {
                    if (!cell_free(x, y, open, held)) continue;
                    // While the door is closed the agent is confined to the key room.
                    if (!open && x >= wall_x) continue;
                    metricrl::EnvState s;
                    s.pos = {x, y};
                    s.key_held = held;
                    s.key_x = held ? -1 : key_x;
                    s.key_y = held ? -1 : key_y;
                    s.door_open = open;
                    states.insert(env.state_key(s));
                }
            }
        }
    }
    return states.size();
}

}  // namespace metricrl::testsupport
