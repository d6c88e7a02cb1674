#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "metricrl/env.hpp"
#include "metricrl/graph.hpp"
#include "metricrl/oracle.hpp"
#include "support/oracles.hpp"

using namespace metricrl;
namespace ts = metricrl::testsupport;

namespace {

EnvSpec make_spec(EnvKind kind, int dims, int cells, std::uint64_t layout_seed = 0) {
    EnvSpec s;
    s.kind = kind;
    s.dims = dims;
    s.cells = cells;
    s.layout_seed = layout_seed;
    return s;
}

Vector fv(std::initializer_list<double> v) { return Vector(v); }

}  // namespace

TEST_CASE("single transition gives the smallest graph") {
    const auto g = build_transition_graph({{fv({0, 0}), fv({1, 0})}});
    REQUIRE(g.node_count() == 2);
    REQUIRE(g.adjacency[0].size() == 1);
    REQUIRE(g.component_count() == 1);
}

TEST_CASE("empty input is a usage error") {
    REQUIRE_THROWS_AS(build_transition_graph({}), UsageError);
}

TEST_CASE("two disjoint episodes make two components") {
    const auto g = build_transition_graph({{fv({0, 0}), fv({1, 0})}, {fv({5, 5}), fv({5, 6})}});
    REQUIRE(g.component_count() == 2);
}

TEST_CASE("dense dataset over a grid collapses to at most the state count") {
    DiscreteEnv env(make_spec(EnvKind::Empty, 2, 10));
    std::vector<std::pair<Vector, Vector>> transitions;
    Rng rng(11);
    const auto states = env.enumerate_states();
    for (int i = 0; i < 50000; ++i) {
        const auto& s = states[rng.below(states.size())];
        if (env.is_goal(s)) continue;
        const auto step = env.transition(s, rng.below_int(env.action_count()));
        transitions.emplace_back(env.encode(s), env.encode(step.next));
    }
    const auto g = build_transition_graph(transitions);
    REQUIRE(g.node_count() <= 100);
    REQUIRE(g.component_count() == 1);
}

TEST_CASE("meta state bridges components containing terminals") {
    auto g = build_transition_graph({{fv({0, 0}), fv({1, 0})}, {fv({5, 5}), fv({5, 6})}});
    REQUIRE(g.component_count() == 2);
    add_meta_state(g, {fv({1, 0}), fv({5, 6})});
    REQUIRE(g.meta_node >= 0);
    REQUIRE(g.component_count() == 2);  // raw labels ignore the meta node
    const auto dist = g.geodesics_from(g.find("0;0"), true);
    REQUIRE(dist[g.find("5;5")] != kUnreachable);
}

TEST_CASE("meta state on an already-connected graph changes nothing") {
    auto g = build_transition_graph({{fv({0, 0}), fv({1, 0})}, {fv({1, 0}), fv({2, 0})}});
    REQUIRE(g.component_count() == 1);
    add_meta_state(g, {fv({2, 0})});
    REQUIRE(g.component_count() == 1);
}

TEST_CASE("terminal-free component is reported by name") {
    auto g = build_transition_graph({{fv({0, 0}), fv({1, 0})},
                                     {fv({5, 5}), fv({5, 6})},
                                     {fv({9, 9}), fv({9, 8})}});
    REQUIRE(g.component_count() == 3);
    try {
        add_meta_state(g, {fv({1, 0}), fv({5, 6})});
        FAIL("expected DataError");
    } catch (const DataError& e) {
        REQUIRE(std::string(e.what()).find("9;9") != std::string::npos);
    }
}

TEST_CASE("meta node does not shortcut default geodesics") {
    // path a-b-c-d plus meta attached to a and d
    auto g = build_transition_graph(
        {{fv({0}), fv({1})}, {fv({1}), fv({2})}, {fv({2}), fv({3})}});
    add_meta_state(g, {fv({0}), fv({3})});
    const auto excl = g.geodesics_from(g.find("0"));
    REQUIRE(excl[g.find("3")] == 3);
    const auto incl = g.geodesics_from(g.find("0"), true);
    REQUIRE(incl[g.find("3")] == 2);  // through the meta node
}

TEST_CASE("geodesics: identity, small grid, unknown source") {
    DiscreteEnv env(make_spec(EnvKind::Empty, 2, 3));
    const auto g = build_state_graph(env);
    const int corner = g.find("0;0");
    const auto dist = g.geodesics_from(corner);
    REQUIRE(dist[corner] == 0);
    REQUIRE(dist[g.find("2;2")] == 4);
    REQUIRE_THROWS_AS(g.geodesics_from(-1), UsageError);
}

TEST_CASE("BFS distances equal unit-weight Dijkstra on every tested graph") {
    for (const EnvSpec& spec : {make_spec(EnvKind::Empty, 2, 6), make_spec(EnvKind::Hypermaze, 2, 10),
                                make_spec(EnvKind::DoorKey, 2, 6)}) {
        DiscreteEnv env(spec);
        const auto g = build_state_graph(env);
        for (int src = 0; src < g.node_count(); src += 13) {
            const auto bfs = g.geodesics_from(src);
            const auto dj = ts::dijkstra_unit(g, src);
            REQUIRE(bfs == dj);
        }
    }
}

TEST_CASE("hypermaze entry-to-goal distance cross-checked with Dijkstra") {
    DiscreteEnv env(make_spec(EnvKind::Hypermaze, 2, 10));
    const auto g = build_state_graph(env);
    EnvState entry, exit;
    entry.pos = {0, 0};
    exit.pos = {9, 9};
    const int start = g.find(env.state_key(entry));
    const int goal = g.find(env.state_key(exit));
    REQUIRE(g.geodesics_from(start)[goal] == ts::dijkstra_unit(g, start)[goal]);
}

TEST_CASE("metric axioms hold on 1e4 random triples") {
    DiscreteEnv env(make_spec(EnvKind::Hypermaze, 2, 10));
    const auto g = build_state_graph(env);
    const auto report = check_metric_axioms(g, 10000, Rng(5));
    REQUIRE(report.ok);
    REQUIRE(report.triples_checked == 10000);
}

TEST_CASE("optimal value: trivial identities") {
    DiscreteEnv env(make_spec(EnvKind::Empty, 2, 4));
    const auto g = build_state_graph(env);
    const auto values = optimal_value(g, goal_nodes(g, env.spec().goals), 0.9);
    REQUIRE(values.value[g.find("3;3")] == 1.0);          // V*(s_g) = r_g
    REQUIRE(values.value[g.find("3;1")] == Catch::Approx(0.81).epsilon(1e-12));  // d=2
    REQUIRE_THROWS_AS(optimal_value(g, goal_nodes(g, env.spec().goals), 1.5), UsageError);
}

TEST_CASE("optimal value matches Bellman value iteration to 1e-9") {
    for (const EnvSpec& spec : {make_spec(EnvKind::Empty, 2, 10), make_spec(EnvKind::DoorKey, 2, 6),
                                make_spec(EnvKind::Hypermaze, 2, 10)}) {
        DiscreteEnv env(spec);
        const auto g = build_state_graph(env);
        const auto values = optimal_value(g, goal_nodes(g, env.spec().goals), 0.95);
        const auto states = env.enumerate_states();
        const auto vi = ts::value_iteration(env, states, 0.95, 1e-13);
        for (std::size_t i = 0; i < states.size(); ++i) {
            const int node = g.find(env.state_key(states[i]));
            REQUIRE(std::abs(values.value[node] - vi[i]) < 1e-9);
        }
    }
}

TEST_CASE("unreachable goal yields V* = 0 and is flagged") {
    auto g = build_transition_graph({{fv({0}), fv({1})}, {fv({5}), fv({6})}});
    std::vector<GoalNode> goals = {{g.find("6"), 1.0}};
    const auto values = optimal_value(g, goals, 0.9);
    REQUIRE(values.value[g.find("0")] == 0.0);
    REQUIRE_FALSE(values.goal_reachable[g.find("0")]);
    REQUIRE(values.unreachable_count == 2);
}

TEST_CASE("greedy oracle policy: adjacent goal, rollouts take exactly d_S steps") {
    DiscreteEnv env(make_spec(EnvKind::Empty, 2, 10));
    const auto g = build_state_graph(env);
    const auto values = optimal_value(g, goal_nodes(g, env.spec().goals), 0.95);
    const auto policy = optimal_greedy_policy(env, g, values);

    EnvState adjacent;
    adjacent.pos = {9, 8};
    REQUIRE(policy.act(env, adjacent) == 2);  // +y, straight into the goal

    const auto geo = g.geodesics_from(g.find("9;9"));
    for (const auto& s : env.enumerate_states()) {
        if (env.is_goal(s)) continue;
        int steps = 0;
        EnvState cur = s;
        while (!env.is_goal(cur) && steps < 1000) {
            cur = env.transition(cur, policy.act(env, cur)).next;
            ++steps;
        }
        REQUIRE(env.is_goal(cur));
        REQUIRE(steps == geo[g.find(env.state_key(s))]);
    }
}

TEST_CASE("greedy oracle policy breaks ties toward the lowest action id") {
    DiscreteEnv env(make_spec(EnvKind::Empty, 2, 10));
    const auto g = build_state_graph(env);
    const auto values = optimal_value(g, goal_nodes(g, env.spec().goals), 0.95);
    const auto policy = optimal_greedy_policy(env, g, values);
    EnvState diag;  // (8,8): +x and +y are both optimal
    diag.pos = {8, 8};
    REQUIRE(policy.act(env, diag) == 0);
}

TEST_CASE("rollout return of the oracle equals gamma^d * r exactly") {
    DiscreteEnv env(make_spec(EnvKind::Empty, 2, 8));
    const auto g = build_state_graph(env);
    const double gamma = 0.95;
    const auto values = optimal_value(g, goal_nodes(g, env.spec().goals), gamma);
    const auto policy = optimal_greedy_policy(env, g, values);
    for (const auto& s : env.enumerate_states()) {
        if (env.is_goal(s)) continue;
        EnvState cur = s;
        double ret = 0.0;
        int t = 0;
        while (!env.is_goal(cur)) {
            const auto step = env.transition(cur, policy.act(env, cur));
            ++t;
            if (step.reward != 0.0) ret += std::pow(gamma, t) * step.reward;
            cur = step.next;
        }
        REQUIRE(ret == values.value[g.find(env.state_key(s))]);
    }
}

TEST_CASE("value table CSV export has one line per real node") {
    DiscreteEnv env(make_spec(EnvKind::Empty, 2, 3));
    const auto g = build_state_graph(env);
    const auto values = optimal_value(g, goal_nodes(g, env.spec().goals), 0.9);
    const std::string csv = value_table_csv(g, values);
    REQUIRE(std::count(csv.begin(), csv.end(), '\n') == 10);  // header + 9 states
}
