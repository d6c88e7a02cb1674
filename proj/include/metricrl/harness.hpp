#pragma once

// Experiment reproduction on top of the library: greedy-optimality (theorem)
// verification, dataset-quality sweeps, updates-to-solve scaling on the
// Hypermaze, and the multi-goal discount study. Functions here return results
// plus ready-to-write CSV/SVG strings; the CLI owns the filesystem.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <thread>
#include <vector>

#include "metricrl/actors.hpp"
#include "metricrl/dataset.hpp"
#include "metricrl/env.hpp"
#include "metricrl/errors.hpp"
#include "metricrl/evaluate.hpp"
#include "metricrl/graph.hpp"
#include "metricrl/metric.hpp"
#include "metricrl/oracle.hpp"
#include "metricrl/svg.hpp"
#include "metricrl/textio.hpp"
#include "metricrl/value.hpp"

namespace metricrl {

// ---------------------------------------------------------------------------
// Theorem verification: greedy-on-approximate-value against the exact oracle.
// Agreement counts a state as correct when the greedy action lands in the
// V*-optimal action set (optimality is what the equivalence claims; tie-break
// identity is also reported separately as action_match). The enforced
// implication — zero exhaustive violations forces agreement 1.0 — applies to
// single-goal tasks; monotonicity does not constrain relative distances to
// different goals, so multi-goal runs only report.
// ---------------------------------------------------------------------------

struct TheoremReport {
    int states = 0;
    int disagreements = 0;
    int action_mismatches = 0;
    double agreement = 1.0;
    double action_match = 1.0;
    MonoReport mono;
    bool single_goal = true;
    bool implication_ok = true;
    std::string csv;
};

inline TheoremReport verify_theorem(const DiscreteEnv& env, const ValueModel& vm,
                                    std::int64_t sampled_triples = 20000,
                                    int exhaustive_threshold = 160,
                                    std::uint64_t audit_seed = 20240) {
    TheoremReport report;
    const DatasetGraph graph = build_state_graph(env);
    const ValueTable values = optimal_value(graph, goal_nodes(graph, vm.goals()), vm.gamma());
    const OraclePolicy oracle = optimal_greedy_policy(env, graph, values);
    report.single_goal = vm.goals().size() == 1;

    report.csv = "state,optimal_action,greedy_action,optimal,match\n";
    for (std::size_t i = 0; i < oracle.states.size(); ++i) {
        const EnvState& s = oracle.states[i];
        if (env.is_goal(s)) continue;
        const int greedy = greedy_action(env, s, vm);
        const auto best = optimal_action_set(env, graph, values, s);
        const bool optimal = std::find(best.begin(), best.end(), greedy) != best.end();
        const bool match = greedy == oracle.action[i];
        ++report.states;
        if (!optimal) ++report.disagreements;
        if (!match) ++report.action_mismatches;
        report.csv += env.state_key(s) + "," + std::to_string(oracle.action[i]) + "," +
                      std::to_string(greedy) + "," + (optimal ? "1" : "0") + "," +
                      (match ? "1" : "0") + "\n";
    }
    if (report.states > 0) {
        report.agreement = 1.0 - static_cast<double>(report.disagreements) / report.states;
        report.action_match = 1.0 - static_cast<double>(report.action_mismatches) / report.states;
    }

    GeodesicCache geo(graph);
    report.mono = monotonicity_violation_rate(embed_nodes(vm.embedding(), graph), geo,
                                              sampled_triples, Rng(audit_seed), 1e-9,
                                              exhaustive_threshold);
    if (report.single_goal && report.mono.exhaustive && report.mono.violations == 0)
        report.implication_ok = report.agreement == 1.0;
    return report;
}

inline std::string theorem_report_text(const TheoremReport& r) {
    std::string out;
    out += "states_compared = " + std::to_string(r.states) + "\n";
    out += "agreement = " + format_double(r.agreement) + "\n";
    out += "action_match = " + format_double(r.action_match) + "\n";
    out += "monotonicity_mode = " + std::string(r.mono.exhaustive ? "exhaustive" : "sampled") + "\n";
    out += "violations = " + std::to_string(r.mono.violations) + "\n";
    out += "triples_evaluated = " + std::to_string(r.mono.evaluated) + "\n";
    out += "violation_rate = " + format_double(r.mono.rate) + "\n";
    out += "single_goal = " + std::string(r.single_goal ? "1" : "0") + "\n";
    out += "implication_ok = " + std::string(r.implication_ok ? "1" : "0") + "\n";
    return out;
}

// ---------------------------------------------------------------------------
// Dataset-quality sweep: tier x method x seed, identical training budgets.
// ---------------------------------------------------------------------------

struct SweepBudget {
    int epochs = 100;
    int batches_per_epoch = 500;
    int batch = 256;
};

struct QualitySweepConfig {
    std::vector<Tier> tiers = {Tier::Low, Tier::Medium, Tier::High};
    std::vector<std::string> methods = {"metricrl", "bc", "dqn", "random"};
    std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5};
    std::int64_t data_episodes = 1000;
    std::uint64_t data_seed = 97;
    int eval_episodes = 200;
    double gamma = 0.95;
    int latent = 128;
    double lambda = 1.0;
    LossVariant variant = LossVariant::Log;
    MetaMode meta = MetaMode::Off;
    SweepBudget budget;
    double dqn_lr = 3e-4;
    int dqn_target_sync = 500;
    std::vector<int> hidden = default_hidden();
    int threads = 1;  // sweep cells are independent; aggregation is index-ordered
};

struct SweepCell {
    std::string tier;
    std::string method;
    std::uint64_t seed = 0;
    EvalReport report;
    std::string status = "ok";
    std::string metric_checkpoint;  // encoded embedding checkpoint, metricrl only
};

struct QualitySweepResult {
    std::vector<SweepCell> cells;
    std::string csv;
    std::string report_text;
    std::string svg;
};

inline SweepCell run_sweep_cell(const DiscreteEnv& env, const Dataset& ds, Tier tier,
                                const std::string& method, std::uint64_t seed,
                                const QualitySweepConfig& config) {
    SweepCell cell;
    cell.tier = tier_name(tier);
    cell.method = method;
    cell.seed = seed;
    const std::uint64_t eval_seed = Rng(seed).derive_seed(fnv1a64(cell.tier + "/" + method));
    try {
        if (method == "random") {
            const PolicyFn policy = uniform_policy(env.action_count());
            cell.report =
                evaluate(env, policy, config.eval_episodes, eval_seed, config.gamma, method).report;
        } else if (method == "metricrl") {
            MetricConfig mc;
            mc.latent = config.latent;
            mc.lambda = config.lambda;
            mc.variant = config.variant;
            mc.meta = config.meta;
            mc.batch = config.budget.batch;
            mc.batches_per_epoch = config.budget.batches_per_epoch;
            mc.epochs = config.budget.epochs;
            mc.seed = seed;
            mc.hidden = config.hidden;
            mc.audit_triples = 0;
            const MetricTrainResult trained = train_metric(ds, mc);
            cell.metric_checkpoint = encode_checkpoint(trained.model.checkpoint());
            const ValueModel vm(trained.model, env.spec().goals, config.gamma);
            const PolicyFn policy = value_greedy_policy(env, vm);
            cell.report =
                evaluate(env, policy, config.eval_episodes, eval_seed, config.gamma, method).report;
        } else if (method == "bc") {
            ActorConfig ac;
            ac.batch = config.budget.batch;
            ac.batches_per_epoch = config.budget.batches_per_epoch;
            ac.epochs = config.budget.epochs;
            ac.seed = seed;
            ac.hidden = config.hidden;
            const PolicyModel bc = train_bc(ds, env.action_count(), ac);
            const PolicyFn policy = categorical_policy(env, bc);
            cell.report =
                evaluate(env, policy, config.eval_episodes, eval_seed, config.gamma, method).report;
        } else if (method == "dqn") {
            DqnConfig dc;
            dc.gamma = config.gamma;
            dc.batch = config.budget.batch;
            dc.lr = config.dqn_lr;
            dc.target_sync = config.dqn_target_sync;
            dc.seed = seed;
            dc.hidden = config.hidden;
            const DqnResult dqn = train_dqn_offline(ds, env.action_count(), dc,
                                                    config.budget.epochs,
                                                    config.budget.batches_per_epoch);
            if (dqn.diverged) cell.status = "diverged";
            const PolicyFn policy = q_greedy_policy(env, dqn.model);
            cell.report =
                evaluate(env, policy, config.eval_episodes, eval_seed, config.gamma, method).report;
        } else {
            throw UsageError("unknown method: " + method);
        }
    } catch (const TrainingError& e) {
        cell.status = std::string("failed: ") + e.what();
    } catch (const DataError& e) {
        cell.status = std::string("failed: ") + e.what();
    }
    return cell;
}

inline QualitySweepResult quality_sweep(const DiscreteEnv& env, const QualitySweepConfig& config) {
    QualitySweepResult result;
    result.csv = "tier,method,seed,success_rate,mean_return,mean_length,episodes,status\n";

    // Datasets are shared per tier; cells are independent jobs aggregated in
    // job order, so the thread count cannot change any output byte.
    std::vector<Dataset> datasets;
    for (std::size_t ti = 0; ti < config.tiers.size(); ++ti) {
        const std::uint64_t tier_seed = Rng(config.data_seed).derive_seed(ti + 1);
        datasets.push_back(collect(env, config.tiers[ti], config.data_episodes, tier_seed,
                                   config.gamma));
    }
    struct Job {
        std::size_t tier_index;
        std::string method;
        std::uint64_t seed;
    };
    std::vector<Job> jobs;
    for (std::size_t ti = 0; ti < config.tiers.size(); ++ti)
        for (const auto& method : config.methods)
            for (const std::uint64_t seed : config.seeds) jobs.push_back({ti, method, seed});

    result.cells.resize(jobs.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (;;) {
            const std::size_t j = next.fetch_add(1);
            if (j >= jobs.size()) return;
            const Job& job = jobs[j];
            result.cells[j] = run_sweep_cell(env, datasets[job.tier_index],
                                             config.tiers[job.tier_index], job.method, job.seed,
                                             config);
        }
    };
    const int threads = std::max(1, config.threads);
    if (threads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    for (const auto& cell : result.cells) {
        result.csv += cell.tier + "," + cell.method + "," + std::to_string(cell.seed) + "," +
                      format_double(cell.report.success_rate) + "," +
                      format_double(cell.report.mean_return) + "," +
                      format_double(cell.report.mean_length) + "," +
                      std::to_string(cell.report.episodes) + "," + cell.status + "\n";
    }

    // Aggregate text + bar chart of mean success per (tier, method).
    result.report_text = "tier method mean_success std_success\n";
    std::vector<std::string> tier_names;
    for (Tier t : config.tiers) tier_names.push_back(tier_name(t));
    std::vector<SvgSeries> series;
    for (const auto& method : config.methods) {
        SvgSeries s;
        s.name = method;
        for (const auto& tname : tier_names) {
            double sum = 0.0, sq = 0.0;
            int n = 0;
            for (const auto& cell : result.cells) {
                if (cell.tier != tname || cell.method != method) continue;
                sum += cell.report.success_rate;
                sq += cell.report.success_rate * cell.report.success_rate;
                ++n;
            }
            const double mean = n ? sum / n : 0.0;
            const double var = n ? std::max(0.0, sq / n - mean * mean) : 0.0;
            s.values.push_back(mean);
            result.report_text += tname + " " + method + " " + format_double(mean) + " " +
                                  format_double(std::sqrt(var)) + "\n";
        }
        series.push_back(std::move(s));
    }
    result.svg = svg_bar_chart("success rate by dataset tier", tier_names, series, 1.0);
    return result;
}

// ---------------------------------------------------------------------------
// Updates-to-solve on the Hypermaze. Both methods consume the same stream of
// uniformly sampled transitions (fresh batch per update); every eval_every
// updates the greedy policy runs `consecutive` evaluation episodes and the
// run is solved at the first update count where all of them succeed.
// Censoring at the budget is a result state, never coerced to a number.
// ---------------------------------------------------------------------------

struct SolveConfig {
    std::int64_t budget = 120000;
    int eval_every = 500;
    int consecutive = 25;
    int batch = 256;
    std::uint64_t seed = 1;
    double gamma = 0.95;
    int latent = 32;
    double lambda = 1.0;
    LossVariant variant = LossVariant::Log;
    std::vector<int> hidden = default_hidden();
    double metric_lr = 1e-3;
    double dqn_lr = 3e-4;
    int dqn_target_sync = 500;
};

struct SolveCurvePoint {
    std::string vary;  // "cells" or "dims"
    int size = 0;
    std::string method;
    std::int64_t updates_to_solve = 0;  // valid only when censored == false
    bool censored = true;
    std::int64_t budget = 0;
    std::string status = "ok";
};

namespace harness_detail {

// Index the state space once so per-eval value tables are cheap.
struct StateTable {
    std::vector<EnvState> states;
    std::vector<Vector> features;
    std::vector<std::vector<int>> successor;  // [state][action]
    std::vector<int> non_goal;                // indices of non-goal states
    std::unordered_map<std::string, int> index;

    explicit StateTable(const DiscreteEnv& env) {
        states = env.enumerate_states();
        for (std::size_t i = 0; i < states.size(); ++i) {
            features.push_back(env.encode(states[i]));
            index[env.state_key(states[i])] = static_cast<int>(i);
        }
        successor.resize(states.size());
        for (std::size_t i = 0; i < states.size(); ++i) {
            successor[i].resize(env.action_count());
            for (int a = 0; a < env.action_count(); ++a)
                successor[i][a] = index.at(env.state_key(env.transition(states[i], a).next));
            if (!env.is_goal(states[i])) non_goal.push_back(static_cast<int>(i));
        }
    }
};

// Greedy action per state from successor values (the value-greedy policy).
inline std::vector<int> greedy_action_table(const DiscreteEnv& env, const StateTable& table,
                                            const std::vector<double>& state_value) {
    std::vector<int> action(table.states.size(), 0);
    for (std::size_t i = 0; i < table.states.size(); ++i) {
        if (env.is_goal(table.states[i])) continue;
        int best_a = 0;
        double best_v = -1e300;
        for (int a = 0; a < env.action_count(); ++a) {
            const double v = state_value[table.successor[i][a]];
            if (v > best_v) {
                best_v = v;
                best_a = a;
            }
        }
        action[i] = best_a;
    }
    return action;
}

// Rollouts from a fixed per-state action table; true when every episode
// reaches a goal.
inline bool all_eval_episodes_succeed(const DiscreteEnv& env, const StateTable& table,
                                      const std::vector<int>& action, int episodes, Rng rng) {
    const int max_len = env.max_episode_len();
    for (int e = 0; e < episodes; ++e) {
        int cur = table.non_goal[rng.below(table.non_goal.size())];
        bool done = false;
        for (int t = 0; t < max_len && !done; ++t) {
            cur = table.successor[cur][action[cur]];
            done = env.is_goal(table.states[cur]);
        }
        if (!done) return false;
    }
    return true;
}

}  // namespace harness_detail

inline SolveCurvePoint solve_env(const EnvSpec& spec, const std::string& method,
                                 const SolveConfig& config, const std::string& vary, int size) {
    const DiscreteEnv env(spec);
    const harness_detail::StateTable table(env);

    SolveCurvePoint point;
    point.vary = vary;
    point.size = size;
    point.method = method;
    point.budget = config.budget;

    Rng data_rng = Rng(config.seed).derive(fnv1a64(method + "/" + vary + "/" +
                                                   std::to_string(spec.dims) + "x" +
                                                   std::to_string(spec.cells)));
    const std::uint64_t eval_seed = data_rng.derive_seed(0xEBA1);

    auto solved_now = [&](const std::vector<int>& action, std::int64_t updates) {
        Rng eval_rng = Rng(eval_seed).derive(static_cast<std::uint64_t>(updates));
        return harness_detail::all_eval_episodes_succeed(env, table, action, config.consecutive,
                                                         eval_rng);
    };

    if (method == "metricrl") {
        MetricConfig mc;
        mc.latent = config.latent;
        mc.lambda = config.lambda;
        mc.variant = config.variant;
        mc.lr = config.metric_lr;
        mc.batch = config.batch;
        mc.seed = config.seed;
        mc.hidden = config.hidden;
        EmbeddingStreamTrainer trainer(env.feature_width(), mc);
        const Vector goal_features = env.spec().goals[0].features;
        std::vector<EmbeddingStreamTrainer::Triple> batch(config.batch);
        std::vector<const Vector*> pos_s(config.batch), pos_next(config.batch);
        std::vector<Vector> next_storage(config.batch);
        while (trainer.updates() < config.budget) {
            for (int i = 0; i < config.batch; ++i) {
                // fresh uniform transition with distinct endpoints
                for (;;) {
                    const int s_idx = table.non_goal[data_rng.below(table.non_goal.size())];
                    const int a = data_rng.below_int(env.action_count());
                    const int n_idx = table.successor[s_idx][a];
                    if (n_idx == s_idx) continue;
                    batch[i].s = &table.features[s_idx];
                    batch[i].next = &table.features[n_idx];
                    break;
                }
                batch[i].random = &table.features[data_rng.below(table.features.size())];
            }
            trainer.update(batch);
            if (trainer.updates() % config.eval_every == 0) {
                // value table under the current embedding
                const Vector goal_z = trainer.model().embed(goal_features);
                std::vector<double> state_value(table.states.size());
                for (std::size_t i = 0; i < table.states.size(); ++i)
                    state_value[i] = std::pow(config.gamma,
                                              distance(trainer.model().embed(table.features[i]),
                                                       goal_z)) *
                                     env.spec().goals[0].reward;
                const auto action = harness_detail::greedy_action_table(env, table, state_value);
                if (solved_now(action, trainer.updates())) {
                    point.updates_to_solve = trainer.updates();
                    point.censored = false;
                    return point;
                }
            }
        }
        return point;
    }

    if (method == "dqn") {
        DqnConfig dc;
        dc.gamma = config.gamma;
        dc.batch = config.batch;
        dc.lr = config.dqn_lr;
        dc.target_sync = config.dqn_target_sync;
        dc.seed = config.seed;
        dc.hidden = config.hidden;
        DqnTrainer trainer(env.feature_width(), env.action_count(), dc);
        std::vector<TransitionRecord> storage(config.batch);
        std::vector<const TransitionRecord*> batch(config.batch);
        while (trainer.updates() < config.budget) {
            for (int i = 0; i < config.batch; ++i) {
                const int s_idx = table.non_goal[data_rng.below(table.non_goal.size())];
                const int a = data_rng.below_int(env.action_count());
                const auto step = env.transition(table.states[s_idx], a);
                storage[i] = {0, 0, table.features[s_idx], a, step.reward, env.encode(step.next),
                              step.terminal};
                batch[i] = &storage[i];
            }
            trainer.update(batch);
            if (trainer.diverged()) {
                point.status = "diverged";
                return point;
            }
            if (trainer.updates() % config.eval_every == 0) {
                std::vector<int> action(table.states.size(), 0);
                for (std::size_t i = 0; i < table.states.size(); ++i)
                    action[i] = trainer.model().greedy(table.features[i]);
                if (solved_now(action, trainer.updates())) {
                    point.updates_to_solve = trainer.updates();
                    point.censored = false;
                    return point;
                }
            }
        }
        return point;
    }

    throw UsageError("solve_env: unknown method '" + method + "'");
}

inline SolveCurvePoint solve_hypermaze(const std::string& method, int dims, int cells,
                                       const SolveConfig& config, const std::string& vary) {
    EnvSpec spec;
    spec.kind = EnvKind::Hypermaze;
    spec.dims = dims;
    spec.cells = cells;
    return solve_env(spec, method, config, vary, vary == "dims" ? dims : cells);
}

struct ComplexitySweepResult {
    std::vector<SolveCurvePoint> points;
    std::string csv;
    std::string svg;
};

inline ComplexitySweepResult solve_complexity_sweep(const std::vector<std::string>& methods,
                                                    const std::vector<int>& sizes,
                                                    const std::string& vary, int fixed_other,
                                                    const SolveConfig& config, int threads = 1) {
    if (vary != "cells" && vary != "dims")
        throw UsageError("solve_complexity_sweep: vary must be cells|dims");
    ComplexitySweepResult result;
    result.csv = "vary,size,method,updates_to_solve,censored,budget,status\n";
    struct Job {
        std::string method;
        int size;
    };
    std::vector<Job> jobs;
    for (const auto& method : methods)
        for (int size : sizes) jobs.push_back({method, size});
    result.points.resize(jobs.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (;;) {
            const std::size_t j = next.fetch_add(1);
            if (j >= jobs.size()) return;
            const int dims = vary == "dims" ? jobs[j].size : fixed_other;
            const int cells = vary == "cells" ? jobs[j].size : fixed_other;
            result.points[j] = solve_hypermaze(jobs[j].method, dims, cells, config, vary);
        }
    };
    if (threads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    for (const auto& point : result.points) {
        result.csv += vary + "," + std::to_string(point.size) + "," + point.method + "," +
                      (point.censored ? "" : std::to_string(point.updates_to_solve)) + "," +
                      (point.censored ? "1" : "0") + "," + std::to_string(point.budget) + "," +
                      point.status + "\n";
    }
    std::vector<double> xs(sizes.begin(), sizes.end());
    std::vector<SvgSeries> series;
    for (const auto& method : methods) {
        SvgSeries s;
        s.name = method;
        for (int size : sizes) {
            for (const auto& p : result.points) {
                if (p.method == method && p.size == size) {
                    s.values.push_back(static_cast<double>(p.censored ? p.budget
                                                                      : p.updates_to_solve));
                    s.censored.push_back(p.censored);
                }
            }
        }
        series.push_back(std::move(s));
    }
    result.svg = svg_line_chart("updates to solve (hollow = censored at budget)",
                                vary == "cells" ? "cells per dimension" : "dimensions", xs, series);
    return result;
}

// ---------------------------------------------------------------------------
// Multi-goal discount study. For each gamma the greedy policy is rolled out
// from every non-goal start; the reached goal is recorded together with the
// analytic crossover gamma* from oracle geodesics: gamma*^{d_low} r_low =
// gamma*^{d_high} r_high at gamma* = (r_low/r_high)^{1/(d_high-d_low)}.
// ---------------------------------------------------------------------------

struct CrossoverRow {
    std::string start;
    int d_low = 0;
    int d_high = 0;
    double gamma_star = 0.0;    // in (0,1) only when d_high > d_low
    int analytic_flip = -1;     // first sweep index preferring the high goal
    int empirical_flip = -1;    // first sweep index whose rollout reached it
    bool monotone = true;       // goal choice flips at most once along the sweep
};

struct MultiGoalStudyResult {
    std::vector<double> gammas;
    int low_goal = 0;   // index into env goals
    int high_goal = 1;
    std::string chosen_csv;
    std::string field_csv;
    std::vector<CrossoverRow> crossover;
    bool high_gamma_all_high_goal = true;
    std::vector<std::pair<double, std::string>> grid_svgs;  // gamma -> svg (2D envs)
};

inline MultiGoalStudyResult multi_goal_study(const DiscreteEnv& env, const EmbeddingModel& model,
                                             std::vector<double> gammas) {
    if (env.spec().goals.size() != 2)
        throw UsageError("multi_goal_study: expects exactly two goals");
    std::sort(gammas.begin(), gammas.end());
    MultiGoalStudyResult result;
    result.gammas = gammas;
    const auto& goals = env.spec().goals;
    result.low_goal = goals[0].reward <= goals[1].reward ? 0 : 1;
    result.high_goal = 1 - result.low_goal;

    const harness_detail::StateTable table(env);
    const DatasetGraph graph = build_state_graph(env);
    const auto dist_low =
        graph.geodesics_from(graph.find(feature_key(goals[result.low_goal].features)));
    const auto dist_high =
        graph.geodesics_from(graph.find(feature_key(goals[result.high_goal].features)));

    // chosen goal per (gamma, start)
    result.chosen_csv = "gamma,start,d_low,d_high,analytic_pref,chosen,steps\n";
    result.field_csv = "gamma,state,value,greedy_successor\n";
    std::map<std::string, std::vector<int>> chosen_by_start;  // per start, goal idx per gamma

    for (const double gamma : gammas) {
        const ValueModel vm(model, goals, gamma);
        std::vector<double> state_value(table.states.size());
        for (std::size_t i = 0; i < table.states.size(); ++i)
            state_value[i] = vm.value(table.features[i]);

        std::vector<int> colors;
        if (env.spec().dims == 2)
            colors.assign(static_cast<std::size_t>(env.spec().cells) * env.spec().cells, -1);

        for (const int start : table.non_goal) {
            // deterministic greedy rollout over the cached value table
            int cur = start;
            int steps = 0;
            const int max_len = env.max_episode_len();
            while (!env.is_goal(table.states[cur]) && steps < max_len) {
                int best_a = 0;
                double best_v = -1e300;
                for (int a = 0; a < env.action_count(); ++a) {
                    const double v = state_value[table.successor[cur][a]];
                    if (v > best_v) {
                        best_v = v;
                        best_a = a;
                    }
                }
                cur = table.successor[cur][best_a];
                ++steps;
            }
            const int reached = env.is_goal(table.states[cur]) ? env.goal_index(table.states[cur]) : -1;
            const int node = graph.find(env.state_key(table.states[start]));
            const int d_low = dist_low[node], d_high = dist_high[node];
            const double v_low = std::pow(gamma, d_low) * goals[result.low_goal].reward;
            const double v_high = std::pow(gamma, d_high) * goals[result.high_goal].reward;
            const int analytic = v_high >= v_low ? result.high_goal : result.low_goal;
            result.chosen_csv += format_double(gamma) + "," +
                                 env.state_key(table.states[start]) + "," + std::to_string(d_low) +
                                 "," + std::to_string(d_high) + "," + std::to_string(analytic) +
                                 "," + std::to_string(reached) + "," + std::to_string(steps) + "\n";
            chosen_by_start[env.state_key(table.states[start])].push_back(reached);
            if (env.spec().dims == 2) {
                const auto& pos = table.states[start].pos;
                colors[static_cast<std::size_t>(pos[0]) * env.spec().cells + pos[1]] = reached;
            }
        }

        // discrete gradient field of the value surface
        for (const int i : table.non_goal) {
            int best_a = 0;
            double best_v = -1e300;
            for (int a = 0; a < env.action_count(); ++a) {
                const double v = state_value[table.successor[i][a]];
                if (v > best_v) {
                    best_v = v;
                    best_a = a;
                }
            }
            result.field_csv += format_double(gamma) + "," + env.state_key(table.states[i]) + "," +
                                format_double(state_value[i]) + "," +
                                env.state_key(table.states[table.successor[i][best_a]]) + "\n";
        }

        if (env.spec().dims == 2) {
            std::vector<std::string> legend = {"goal 0 (r=" + format_double(goals[0].reward) + ")",
                                               "goal 1 (r=" + format_double(goals[1].reward) + ")"};
            result.grid_svgs.emplace_back(
                gamma, svg_grid_map("chosen goal at gamma = " + format_double(gamma),
                                    env.spec().cells, colors, legend));
        }
    }

    // crossover analysis and the high-gamma check
    for (const int start : table.non_goal) {
        const std::string key = env.state_key(table.states[start]);
        const int node = graph.find(key);
        CrossoverRow row;
        row.start = key;
        row.d_low = dist_low[node];
        row.d_high = dist_high[node];
        const auto& picks = chosen_by_start[key];
        if (picks.back() != result.high_goal) result.high_gamma_all_high_goal = false;
        if (row.d_high > row.d_low) {
            const double ratio = goals[result.low_goal].reward / goals[result.high_goal].reward;
            row.gamma_star = std::pow(ratio, 1.0 / (row.d_high - row.d_low));
            row.analytic_flip = static_cast<int>(gammas.size());
            for (std::size_t i = 0; i < gammas.size(); ++i) {
                if (gammas[i] > row.gamma_star) {
                    row.analytic_flip = static_cast<int>(i);
                    break;
                }
            }
            row.empirical_flip = static_cast<int>(gammas.size());
            for (std::size_t i = 0; i < picks.size(); ++i) {
                if (picks[i] == result.high_goal) {
                    row.empirical_flip = static_cast<int>(i);
                    break;
                }
            }
            bool seen_high = false;
            for (int pick : picks) {
                if (pick == result.high_goal) seen_high = true;
                else if (seen_high) row.monotone = false;
            }
            result.crossover.push_back(row);
        }
    }
    return result;
}

inline std::string crossover_csv(const MultiGoalStudyResult& r) {
    std::string out = "start,d_low,d_high,gamma_star,analytic_flip,empirical_flip,monotone\n";
    for (const auto& row : r.crossover)
        out += row.start + "," + std::to_string(row.d_low) + "," + std::to_string(row.d_high) +
               "," + format_double(row.gamma_star) + "," + std::to_string(row.analytic_flip) +
               "," + std::to_string(row.empirical_flip) + "," + (row.monotone ? "1" : "0") + "\n";
    return out;
}

}  // namespace metricrl
