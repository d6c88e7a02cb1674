#pragma once

// Deterministic, sparse-reward, goal-conditioned discrete environments.
//
//   Empty      n-dimensional open grid, 2n axis translations. Features are
//              the agent coordinates.
//   Hypermaze  n-dimensional grid with serpentine wall slabs: full hyperplanes
//              orthogonal to axis 0 at x0 = 1,3,5,...,<=m-2, each with a single
//              opening cell whose remaining coordinates are all m-1 (even wall
//              index) or all 0 (odd wall index). Features are the agent
//              coordinates plus one blocked-move flag per action (adjacent
//              wall or grid edge), in action-id order.
//   DoorKey    2D grid split by a wall column with a locked door; the agent
//              must pick up a key (effective only when adjacent), open the
//              door (only with the key, adjacent), then reach the goal.
//
// Rewards are sparse: r_i exactly when the successor equals goal i, else 0.
// Goals are absorbing; stepping from a goal returns the same state, terminal,
// reward 0. Blocked moves (walls, grid edges, closed door, floor key) leave
// the agent in place.

#include <algorithm>
#include <cstdint>
#include <deque>
#include <optional>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "metricrl/errors.hpp"
#include "metricrl/matrix.hpp"
#include "metricrl/rng.hpp"
#include "metricrl/textio.hpp"

namespace metricrl {

enum class EnvKind { Empty, Hypermaze, DoorKey };

inline std::string env_kind_name(EnvKind k) {
    switch (k) {
        case EnvKind::Empty: return "empty";
        case EnvKind::Hypermaze: return "hypermaze";
        case EnvKind::DoorKey: return "doorkey";
    }
    return "?";
}

inline EnvKind parse_env_kind(const std::string& s) {
    if (s == "empty") return EnvKind::Empty;
    if (s == "hypermaze") return EnvKind::Hypermaze;
    if (s == "doorkey") return EnvKind::DoorKey;
    throw UsageError("unknown env kind: '" + s + "' (expected empty|hypermaze|doorkey)");
}

struct GoalSpec {
    Vector features;
    double reward = 1.0;
};

struct EnvSpec {
    EnvKind kind = EnvKind::Empty;
    int dims = 2;
    int cells = 10;
    std::uint64_t layout_seed = 0;  // DoorKey key placement
    std::vector<GoalSpec> goals;
    int max_episode_len = 0;  // 0 => 4 * geodesic diameter, resolved lazily
};

struct EnvState {
    std::vector<int> pos;
    // DoorKey extras; ignored by the grid kinds.
    bool key_held = false;
    int key_x = -1;
    int key_y = -1;
    bool door_open = false;

    bool operator==(const EnvState& o) const {
        return pos == o.pos && key_held == o.key_held && key_x == o.key_x && key_y == o.key_y &&
               door_open == o.door_open;
    }
};

struct StepResult {
    EnvState next;
    double reward = 0.0;
    bool terminal = false;
};

// Canonical textual key for a feature vector; doubles printed at shortest
// round-trip precision, joined by ';'.
inline std::string feature_key(const Vector& f) {
    std::string out;
    for (std::size_t i = 0; i < f.size(); ++i) {
        if (i) out.push_back(';');
        out += format_double(f[i]);
    }
    return out;
}

inline Vector parse_features(const std::string& key) {
    Vector out;
    for (const auto& part : split(key, ';')) out.push_back(parse_double(part, "feature"));
    return out;
}

// Reserved encoding for the synthetic meta node: every component -1. Real
// states always have non-negative agent coordinates, so this cannot collide.
inline Vector meta_state_features(int width) { return Vector(static_cast<std::size_t>(width), -1.0); }

struct NonInvertibleTransition {
    EnvState from;
    int action = 0;
    EnvState to;
    std::string describe;
};

class DiscreteEnv {
  public:
    explicit DiscreteEnv(EnvSpec spec) : spec_(std::move(spec)) {
        if (spec_.cells < 2) throw UsageError("env: cells must be >= 2");
        if (spec_.dims < 1) throw UsageError("env: dims must be >= 1");
        if (spec_.kind == EnvKind::DoorKey && spec_.dims != 2)
            throw UsageError("doorkey: dims must be 2");
        if (spec_.kind == EnvKind::Hypermaze) {
            if (spec_.dims < 2 || spec_.cells < 4)
                throw UsageError("hypermaze: need dims >= 2 and cells >= 4 for the serpentine pattern");
            walls_ = build_hypermaze_walls(spec_.dims, spec_.cells);
        }
        if (spec_.kind == EnvKind::DoorKey) init_doorkey_layout();
        if (spec_.goals.empty()) spec_.goals = default_goals();
        for (const auto& g : spec_.goals) {
            if (g.reward <= 0.0) throw UsageError("env: goal rewards must be positive");
            if (static_cast<int>(g.features.size()) != feature_width())
                throw UsageError("env: goal feature width mismatch");
            goal_keys_.push_back(feature_key(g.features));
        }
    }

    const EnvSpec& spec() const { return spec_; }

    int feature_width() const {
        if (spec_.kind == EnvKind::DoorKey) return 5;
        if (spec_.kind == EnvKind::Hypermaze) return 3 * spec_.dims;  // pos + obstacle flags
        return spec_.dims;
    }

    int action_count() const {
        return 2 * spec_.dims + (spec_.kind == EnvKind::DoorKey ? 2 : 0);
    }

    int pickup_action() const { return 2 * spec_.dims; }
    int open_door_action() const { return 2 * spec_.dims + 1; }

    Vector encode(const EnvState& s) const {
        Vector f;
        f.reserve(static_cast<std::size_t>(feature_width()));
        for (int c : s.pos) f.push_back(static_cast<double>(c));
        if (spec_.kind == EnvKind::DoorKey) {
            f.push_back(static_cast<double>(s.key_held ? -1 : s.key_x));
            f.push_back(static_cast<double>(s.key_held ? -1 : s.key_y));
            f.push_back(s.door_open ? 1.0 : 0.0);
        } else if (spec_.kind == EnvKind::Hypermaze) {
            for (int a = 0; a < 2 * spec_.dims; ++a) {
                std::vector<int> target = s.pos;
                target[a / 2] += (a % 2 == 0) ? 1 : -1;
                const bool blocked = !in_bounds(target) || is_wall(target);
                f.push_back(blocked ? 1.0 : 0.0);
            }
        }
        return f;
    }

    std::string state_key(const EnvState& s) const { return feature_key(encode(s)); }

    EnvState decode(const Vector& f) const {
        if (static_cast<int>(f.size()) != feature_width())
            throw UsageError("decode: feature width mismatch");
        EnvState s;
        for (int i = 0; i < spec_.dims; ++i) s.pos.push_back(static_cast<int>(f[i]));
        if (spec_.kind == EnvKind::DoorKey) {
            s.key_x = static_cast<int>(f[2]);
            s.key_y = static_cast<int>(f[3]);
            s.key_held = s.key_x < 0;
            s.door_open = f[4] != 0.0;
        }
        return s;
    }

    // Index of the goal the state equals, or -1.
    int goal_index(const EnvState& s) const {
        const std::string k = state_key(s);
        for (std::size_t i = 0; i < goal_keys_.size(); ++i)
            if (goal_keys_[i] == k) return static_cast<int>(i);
        return -1;
    }

    bool is_goal(const EnvState& s) const { return goal_index(s) >= 0; }

    StepResult transition(const EnvState& s, int action) const {
        if (action < 0 || action >= action_count())
            throw UsageError("transition: invalid action id " + std::to_string(action));
        if (is_goal(s)) return {s, 0.0, true};
        EnvState next = dynamics_step(s, action);
        const int gi = goal_index(next);
        return {next, gi >= 0 ? spec_.goals[gi].reward : 0.0, gi >= 0};
    }

    // Movement/interaction dynamics without the absorbing-goal short circuit.
    EnvState dynamics_step(const EnvState& s, int action) const {
        EnvState next = s;
        if (action < 2 * spec_.dims) {
            const int axis = action / 2;
            const int delta = (action % 2 == 0) ? 1 : -1;
            std::vector<int> target = s.pos;
            target[axis] += delta;
            if (passable(target, s)) next.pos = std::move(target);
        } else if (action == pickup_action()) {
            if (!s.key_held && manhattan(s.pos, {s.key_x, s.key_y}) == 1) {
                next.key_held = true;
                next.key_x = -1;
                next.key_y = -1;
            }
        } else {  // open door
            if (s.key_held && !s.door_open && manhattan(s.pos, {door_x_, door_y_}) == 1)
                next.door_open = true;
        }
        return next;
    }

    // Legal episode starts: every non-goal free cell (DoorKey: agent in the
    // key room, key on the floor, door closed). Deterministic row-major order.
    std::vector<EnvState> start_states() const {
        std::vector<EnvState> out;
        if (spec_.kind == EnvKind::DoorKey) {
            for (int x = 0; x < wall_x_; ++x)
                for (int y = 0; y < spec_.cells; ++y) {
                    if (x == key_x0_ && y == key_y0_) continue;
                    EnvState s;
                    s.pos = {x, y};
                    s.key_x = key_x0_;
                    s.key_y = key_y0_;
                    out.push_back(std::move(s));
                }
            return out;
        }
        std::vector<int> cur(static_cast<std::size_t>(spec_.dims), 0);
        for (;;) {
            if (!is_wall(cur)) {
                EnvState s;
                s.pos = cur;
                if (!is_goal(s)) out.push_back(s);
            }
            int axis = spec_.dims - 1;
            while (axis >= 0) {
                if (++cur[axis] < spec_.cells) break;
                cur[axis] = 0;
                --axis;
            }
            if (axis < 0) break;
        }
        return out;
    }

    // Exhaustive reachable-state enumeration: BFS from the start set, visiting
    // successors in action-id order. Duplicate-free, deterministic.
    std::vector<EnvState> enumerate_states(std::size_t cap = 1000000) const {
        std::vector<EnvState> out;
        std::unordered_set<std::string> seen;
        std::deque<EnvState> frontier;
        for (const auto& s : start_states()) {
            if (seen.insert(state_key(s)).second) {
                out.push_back(s);
                frontier.push_back(s);
            }
        }
        while (!frontier.empty()) {
            EnvState s = std::move(frontier.front());
            frontier.pop_front();
            for (int a = 0; a < action_count(); ++a) {
                EnvState nxt = transition(s, a).next;
                if (seen.insert(state_key(nxt)).second) {
                    if (out.size() >= cap)
                        throw DataError("enumerate_states: state cap " + std::to_string(cap) +
                                        " exceeded");
                    out.push_back(nxt);
                    frontier.push_back(nxt);
                }
            }
        }
        return out;
    }

    // Transitions (s,a)->s' for which no action maps s' back to s under the
    // movement dynamics (the absorbing-goal short circuit is bypassed, since
    // termination is a property of the process, not of the dynamics being
    // symmetric). Empty/Hypermaze grids report none; DoorKey flags pick-up
    // and open-door.
    std::vector<NonInvertibleTransition> inverse_action_check() const {
        std::vector<NonInvertibleTransition> report;
        const auto states = enumerate_states();
        for (const auto& s : states) {
            for (int a = 0; a < action_count(); ++a) {
                const EnvState nxt = dynamics_step(s, a);
                bool invertible = false;
                for (int b = 0; b < action_count() && !invertible; ++b)
                    invertible = dynamics_step(nxt, b) == s;
                if (!invertible) {
                    std::string what = "action " + std::to_string(a);
                    if (spec_.kind == EnvKind::DoorKey && a == pickup_action()) what = "pick-up";
                    if (spec_.kind == EnvKind::DoorKey && a == open_door_action()) what = "open-door";
                    report.push_back({s, a, nxt, what});
                }
            }
        }
        return report;
    }

    // Max episode length: explicit spec value, else 4x the geodesic diameter
    // (two-sweep BFS estimate over the symmetrized state graph).
    int max_episode_len() const {
        if (spec_.max_episode_len > 0) return spec_.max_episode_len;
        if (resolved_max_len_ == 0) resolved_max_len_ = 4 * diameter_estimate();
        return resolved_max_len_;
    }

    std::size_t wall_count() const { return walls_.size(); }
    bool wall_at(const std::vector<int>& cell) const { return is_wall(cell); }
    int door_x() const { return door_x_; }
    int door_y() const { return door_y_; }
    int key_x0() const { return key_x0_; }
    int key_y0() const { return key_y0_; }

    // Serpentine wall construction; exposed for direct inspection in tests.
    static std::unordered_set<std::int64_t> build_hypermaze_walls(int dims, int cells);
    static std::int64_t cell_index(const std::vector<int>& cell, int cells) {
        std::int64_t idx = 0;
        for (int c : cell) idx = idx * cells + c;
        return idx;
    }

  private:
    void init_doorkey_layout() {
        wall_x_ = spec_.cells / 2;
        door_x_ = wall_x_;
        door_y_ = spec_.cells / 2;
        std::uint64_t sm = spec_.layout_seed;
        Rng rng(splitmix64(sm));
        key_x0_ = rng.below_int(wall_x_);
        key_y0_ = rng.below_int(spec_.cells);
    }

    std::vector<GoalSpec> default_goals() const {
        GoalSpec g;
        EnvState s;
        s.pos.assign(static_cast<std::size_t>(spec_.dims), spec_.cells - 1);
        if (spec_.kind == EnvKind::DoorKey) {
            s.key_held = true;
            s.door_open = true;
        }
        g.features = encode(s);
        g.reward = 1.0;
        return {std::move(g)};
    }

    bool in_bounds(const std::vector<int>& cell) const {
        for (int c : cell)
            if (c < 0 || c >= spec_.cells) return false;
        return true;
    }

    bool is_wall(const std::vector<int>& cell) const {
        if (spec_.kind == EnvKind::Hypermaze)
            return walls_.count(cell_index(cell, spec_.cells)) > 0;
        if (spec_.kind == EnvKind::DoorKey)
            return cell[0] == wall_x_ && !(cell[0] == door_x_ && cell[1] == door_y_);
        return false;
    }

    bool passable(const std::vector<int>& target, const EnvState& s) const {
        if (!in_bounds(target)) return false;
        if (is_wall(target)) return false;
        if (spec_.kind == EnvKind::DoorKey) {
            if (target[0] == door_x_ && target[1] == door_y_ && !s.door_open) return false;
            if (!s.key_held && target[0] == s.key_x && target[1] == s.key_y) return false;
        }
        return true;
    }

    static int manhattan(const std::vector<int>& a, const std::vector<int>& b) {
        int d = 0;
        for (std::size_t i = 0; i < a.size(); ++i) d += std::abs(a[i] - b[i]);
        return d;
    }

    int diameter_estimate() const;

    EnvSpec spec_;
    std::unordered_set<std::int64_t> walls_;
    std::vector<std::string> goal_keys_;
    int wall_x_ = -1, door_x_ = -1, door_y_ = -1, key_x0_ = -1, key_y0_ = -1;
    mutable int resolved_max_len_ = 0;
};

inline std::unordered_set<std::int64_t> DiscreteEnv::build_hypermaze_walls(int dims, int cells) {
    if (dims < 2 || cells < 4)
        throw UsageError("hypermaze walls: need dims >= 2 and cells >= 4");
    std::unordered_set<std::int64_t> walls;
    int wall_index = 0;
    for (int x0 = 1; x0 <= cells - 2; x0 += 2, ++wall_index) {
        const int opening = (wall_index % 2 == 0) ? cells - 1 : 0;
        // Enumerate the (dims-1)-dimensional slab at axis0 = x0.
        std::vector<int> rest(static_cast<std::size_t>(dims - 1), 0);
        for (;;) {
            bool is_opening = true;
            for (int c : rest)
                if (c != opening) is_opening = false;
            if (!is_opening) {
                std::vector<int> cell;
                cell.reserve(static_cast<std::size_t>(dims));
                cell.push_back(x0);
                cell.insert(cell.end(), rest.begin(), rest.end());
                walls.insert(cell_index(cell, cells));
            }
            int axis = dims - 2;
            while (axis >= 0) {
                if (++rest[axis] < cells) break;
                rest[axis] = 0;
                --axis;
            }
            if (axis < 0) break;
        }
    }
    return walls;
}

inline int DiscreteEnv::diameter_estimate() const {
    const auto states = enumerate_states();
    std::unordered_map<std::string, int> index;
    for (std::size_t i = 0; i < states.size(); ++i) index[state_key(states[i])] = static_cast<int>(i);
    // Symmetrized adjacency over enumerated states.
    std::vector<std::vector<int>> adj(states.size());
    for (std::size_t i = 0; i < states.size(); ++i) {
        for (int a = 0; a < action_count(); ++a) {
            const EnvState nxt = transition(states[i], a).next;
            const int j = index.at(state_key(nxt));
            if (j != static_cast<int>(i)) {
                adj[i].push_back(j);
                adj[j].push_back(static_cast<int>(i));
            }
        }
    }
    auto bfs_far = [&](int src) {
        std::vector<int> dist(states.size(), -1);
        std::deque<int> q{src};
        dist[src] = 0;
        int far = src;
        while (!q.empty()) {
            const int u = q.front();
            q.pop_front();
            if (dist[u] > dist[far]) far = u;
            for (int v : adj[u])
                if (dist[v] < 0) {
                    dist[v] = dist[u] + 1;
                    q.push_back(v);
                }
        }
        return std::pair<int, int>(far, dist[far]);
    };
    auto [far, d1] = bfs_far(0);
    auto [far2, d2] = bfs_far(far);
    (void)far2;
    return std::max(std::max(d1, d2), 1);
}

// ---- EnvSpec <-> key-value serialization (manifests, run configs) ----

inline std::string goal_to_string(const GoalSpec& g) {
    return feature_key(g.features) + ":" + format_double(g.reward);
}

inline GoalSpec goal_from_string(const std::string& s) {
    auto colon = s.rfind(':');
    if (colon == std::string::npos) throw UsageError("goal: expected 'features:reward', got '" + s + "'");
    GoalSpec g;
    g.features = parse_features(s.substr(0, colon));
    g.reward = parse_double(s.substr(colon + 1), "goal reward");
    return g;
}

inline void env_spec_to_kv(const EnvSpec& spec, std::string& out, const std::string& section) {
    out += "[" + section + "]\n";
    out += "kind = " + env_kind_name(spec.kind) + "\n";
    out += "dims = " + std::to_string(spec.dims) + "\n";
    out += "cells = " + std::to_string(spec.cells) + "\n";
    out += "layout_seed = " + std::to_string(spec.layout_seed) + "\n";
    out += "max_episode_len = " + std::to_string(spec.max_episode_len) + "\n";
    out += "goal_count = " + std::to_string(spec.goals.size()) + "\n";
    for (std::size_t i = 0; i < spec.goals.size(); ++i)
        out += "goal_" + std::to_string(i) + " = " + goal_to_string(spec.goals[i]) + "\n";
}

inline EnvSpec env_spec_from_kv(const KeyValueFile& kv, const std::string& section) {
    EnvSpec spec;
    auto key = [&](const char* k) { return section + "." + k; };
    spec.kind = parse_env_kind(kv.get(key("kind")));
    spec.dims = static_cast<int>(parse_int(kv.get(key("dims")), "dims"));
    spec.cells = static_cast<int>(parse_int(kv.get(key("cells")), "cells"));
    spec.layout_seed = parse_u64(kv.get_or(key("layout_seed"), "0"), "layout_seed");
    spec.max_episode_len =
        static_cast<int>(parse_int(kv.get_or(key("max_episode_len"), "0"), "max_episode_len"));
    const int n_goals = static_cast<int>(parse_int(kv.get_or(key("goal_count"), "0"), "goal_count"));
    for (int i = 0; i < n_goals; ++i)
        spec.goals.push_back(goal_from_string(kv.get(key(("goal_" + std::to_string(i)).c_str()))));
    return spec;
}

}  // namespace metricrl
