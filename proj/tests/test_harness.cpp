#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "metricrl/config.hpp"
#include "metricrl/evaluate.hpp"
#include "metricrl/harness.hpp"

using namespace metricrl;

namespace {

EnvSpec make_spec(EnvKind kind, int dims, int cells) {
    EnvSpec s;
    s.kind = kind;
    s.dims = dims;
    s.cells = cells;
    return s;
}

EnvSpec multigoal_spec(int cells) {
    Settings s;
    s.multi_goal = true;
    s.cells = cells;
    return env_spec_from_settings(s);
}

}  // namespace

TEST_CASE("evaluate: oracle policy scores a perfect success rate") {
    DiscreteEnv env(make_spec(EnvKind::Empty, 2, 10));
    const auto g = build_state_graph(env);
    const auto values = optimal_value(g, goal_nodes(g, env.spec().goals), 0.95);
    const auto oracle = optimal_greedy_policy(env, g, values);
    const auto result = evaluate(env, oracle_policy(env, oracle), 100, 7, 0.95, "oracle");
    REQUIRE(result.report.success_rate == 1.0);
    REQUIRE(result.rows.size() == 100);
}

TEST_CASE("evaluate: uniform random is reproducible per seed and well below 1") {
    DiscreteEnv env(make_spec(EnvKind::Empty, 2, 10));
    const auto a = evaluate(env, uniform_policy(env.action_count()), 200, 3, 0.95, "random");
    const auto b = evaluate(env, uniform_policy(env.action_count()), 200, 3, 0.95, "random");
    REQUIRE(a.report.success_rate == b.report.success_rate);
    REQUIRE(a.report.mean_return == b.report.mean_return);
    REQUIRE(a.report.success_rate < 0.7);
    const auto c = evaluate(env, uniform_policy(env.action_count()), 200, 4, 0.95, "random");
    REQUIRE(a.report.success_rate != c.report.success_rate);
}

TEST_CASE("evaluate: oracle mean return equals the geodesic identity to 1e-12") {
    DiscreteEnv env(make_spec(EnvKind::Empty, 2, 10));
    const double gamma = 0.95;
    const auto g = build_state_graph(env);
    const auto values = optimal_value(g, goal_nodes(g, env.spec().goals), gamma);
    const auto oracle = optimal_greedy_policy(env, g, values);
    const auto result = evaluate(env, oracle_policy(env, oracle), 300, 11, gamma, "oracle");
    double expected = 0.0;
    for (const auto& row : result.rows) expected += values.value[g.find(row.start)];
    expected /= result.rows.size();
    REQUIRE(std::abs(result.report.mean_return - expected) < 1e-12);
}

TEST_CASE("episodes that exceed the cap count as failures, not errors") {
    DiscreteEnv env(make_spec(EnvKind::Empty, 2, 10));
    // policy that never moves toward the goal
    const PolicyFn stuck = [](const EnvState&, Rng&) { return 1; };  // always -x
    const auto result = evaluate(env, stuck, 50, 5, 0.95, "stuck");
    REQUIRE(result.report.success_rate == 0.0);
    REQUIRE(result.report.mean_length == env.max_episode_len());
}

TEST_CASE("verify_theorem: isometric fixture gives zero violations, full agreement") {
    EnvSpec spec = make_spec(EnvKind::Empty, 1, 6);
    DiscreteEnv env(spec);
    const ValueModel vm(line_embedding_fixture(4), env.spec().goals, 0.9);
    const auto report = verify_theorem(env, vm);
    REQUIRE(report.mono.exhaustive);
    REQUIRE(report.mono.violations == 0);
    REQUIRE(report.agreement == 1.0);
    REQUIRE(report.action_match == 1.0);
    REQUIRE(report.implication_ok);
}

TEST_CASE("verify_theorem: swapping two latent points breaks coherently") {
    // Embed the line with positions 0..5 but swap the images of cells 2 and 3:
    // monotonicity violations appear and agreement drops, reported together.
    EnvSpec spec = make_spec(EnvKind::Empty, 1, 6);
    DiscreteEnv env(spec);
    // Table-backed adversarial embedding realized as an MLP is overkill here;
    // instead audit the latents directly and check the greedy fallout by hand.
    const auto g = build_state_graph(env);
    GeodesicCache geo(g);
    std::vector<Vector> latents(g.node_count());
    for (int i = 0; i < g.node_count(); ++i) {
        const double x = g.features[i][0];
        latents[i] = {x, 0.0};
    }
    std::swap(latents[g.find("2")], latents[g.find("3")]);
    const auto mono = monotonicity_violation_rate(latents, geo, 0, Rng(3));
    REQUIRE(mono.exhaustive);
    REQUIRE(mono.violations > 0);
    REQUIRE_FALSE(mono.witnesses.empty());
}

TEST_CASE("quality sweep: tiny end-to-end cross product with statuses") {
    DiscreteEnv env(make_spec(EnvKind::Empty, 2, 5));
    QualitySweepConfig config;
    config.tiers = {Tier::Low, Tier::High};
    config.methods = {"metricrl", "bc", "random"};
    config.seeds = {1, 2};
    config.data_episodes = 60;
    config.eval_episodes = 40;
    config.latent = 8;
    config.hidden = {16, 16};
    config.budget = {2, 30, 32};
    const auto result = quality_sweep(env, config);
    REQUIRE(result.cells.size() == 12);
    const auto lines = split(result.csv, '\n');
    REQUIRE(lines[0] == "tier,method,seed,success_rate,mean_return,mean_length,episodes,status");
    REQUIRE(lines.size() == 14);  // header + 12 rows + trailing empty
    for (const auto& cell : result.cells) {
        REQUIRE(cell.status == "ok");
        if (cell.method == "metricrl") REQUIRE_FALSE(cell.metric_checkpoint.empty());
    }
    REQUIRE_FALSE(result.svg.empty());
}

TEST_CASE("quality sweep: identical config and seeds reproduce the CSV byte for byte") {
    DiscreteEnv env(make_spec(EnvKind::Empty, 2, 4));
    QualitySweepConfig config;
    config.tiers = {Tier::Low};
    config.methods = {"metricrl", "random"};
    config.seeds = {1};
    config.data_episodes = 30;
    config.eval_episodes = 20;
    config.latent = 4;
    config.hidden = {8};
    config.budget = {1, 20, 16};
    const auto a = quality_sweep(env, config);
    const auto b = quality_sweep(env, config);
    REQUIRE(a.csv == b.csv);
    config.threads = 2;
    const auto c = quality_sweep(env, config);
    REQUIRE(a.csv == c.csv);
}

TEST_CASE("solve sweep: the trivial 1x2 corridor is solved in the first window") {
    SolveConfig config;
    config.budget = 3000;
    config.eval_every = 100;
    config.consecutive = 25;
    config.batch = 64;
    config.latent = 4;
    config.hidden = {16, 16};
    EnvSpec corridor;
    corridor.kind = EnvKind::Empty;
    corridor.dims = 1;
    corridor.cells = 2;
    for (const std::string method : {"metricrl", "dqn"}) {
        const auto point = solve_env(corridor, method, config, "cells", 2);
        REQUIRE_FALSE(point.censored);
        REQUIRE(point.updates_to_solve == config.eval_every);  // the first window
    }
}

TEST_CASE("solve sweep: censoring is explicit, never a number") {
    SolveConfig config;
    config.budget = 200;  // far too small to solve m=10
    config.eval_every = 100;
    config.latent = 4;
    config.hidden = {8};
    config.batch = 32;
    const auto point = solve_hypermaze("dqn", 2, 10, config, "cells");
    REQUIRE(point.censored);
    REQUIRE(point.budget == 200);
    ComplexitySweepResult sweep = solve_complexity_sweep({"dqn"}, {10}, "cells", 2, config);
    const auto lines = split(sweep.csv, '\n');
    REQUIRE(lines[0] == "vary,size,method,updates_to_solve,censored,budget,status");
    // censored row leaves the updates field empty
    REQUIRE(lines[1].find("cells,10,dqn,,1,200,ok") == 0);
}

TEST_CASE("multi-goal study: exact-geodesic embedding brackets every crossover") {
    // On a 1-D line the isometric fixture gives exact geodesic distances, so
    // the empirical flip must bracket gamma* exactly (within one sweep step).
    EnvSpec spec;
    spec.kind = EnvKind::Empty;
    spec.dims = 1;
    spec.cells = 10;
    spec.goals = {{{0.0}, 0.7}, {{9.0}, 1.0}};
    DiscreteEnv env(spec);
    const auto study =
        multi_goal_study(env, line_embedding_fixture(3), {0.5, 0.9, 0.95, 0.99, 0.999});
    REQUIRE(study.high_gamma_all_high_goal);
    REQUIRE_FALSE(study.crossover.empty());
    for (const auto& row : study.crossover) {
        REQUIRE(row.monotone);
        REQUIRE(std::abs(row.analytic_flip - row.empirical_flip) <= 1);
        // analytic crossover satisfies gamma*^d1 r1 = gamma*^d2 r2
        const double lhs = std::pow(row.gamma_star, row.d_low) * 0.7;
        const double rhs = std::pow(row.gamma_star, row.d_high) * 1.0;
        REQUIRE(lhs == Catch::Approx(rhs).epsilon(1e-9));
    }
}

TEST_CASE("multi-goal study: low gamma goes near, high gamma goes rich") {
    EnvSpec spec;
    spec.kind = EnvKind::Empty;
    spec.dims = 1;
    spec.cells = 10;
    spec.goals = {{{0.0}, 0.7}, {{9.0}, 1.0}};
    DiscreteEnv env(spec);
    const auto study = multi_goal_study(env, line_embedding_fixture(3), {0.5, 0.999});
    // start right next to the low goal: cell 1 (d_low=1, d_high=8)
    bool checked = false;
    for (const auto& line : split(study.chosen_csv, '\n')) {
        const auto parts = split(line, ',');
        if (parts.size() < 7 || parts[1] != "1") continue;
        if (parts[0] == "0.5") REQUIRE(parts[5] == "0");  // low goal chosen
        if (parts[0] == "0.999") REQUIRE(parts[5] == "1");
        checked = true;
    }
    REQUIRE(checked);
}

TEST_CASE("multi-goal study rejects non-two-goal envs") {
    DiscreteEnv env(make_spec(EnvKind::Empty, 2, 5));
    REQUIRE_THROWS_AS(multi_goal_study(env, line_embedding_fixture(2), {0.5}), UsageError);
}

TEST_CASE("multi-goal: trained embedding on the 10x10 preset behaves per theory") {
    DiscreteEnv env(multigoal_spec(6));
    const Dataset ds = collect(env, Tier::Low, 200, 17);
    MetricConfig mc;
    mc.latent = 16;
    mc.hidden = {32, 32};
    mc.batch = 128;
    mc.batches_per_epoch = 60;
    mc.epochs = 10;
    mc.seed = 2;
    mc.audit_triples = 0;
    const auto trained = train_metric(ds, mc);
    const auto study = multi_goal_study(env, trained.model, {0.5, 0.9, 0.95, 0.99, 0.999});
    REQUIRE(study.high_gamma_all_high_goal);
    int within = 0;
    for (const auto& row : study.crossover)
        if (std::abs(row.analytic_flip - row.empirical_flip) <= 1) ++within;
    REQUIRE(within == static_cast<int>(study.crossover.size()));
}
