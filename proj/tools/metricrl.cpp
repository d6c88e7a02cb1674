// metricrl command-line interface.
//
// Verbs: gen-data, train, train-actor, train-bc, train-dqn, eval, check-data,
// check-mono, verify-theorem, sweep-quality, sweep-complexity, multi-goal,
// plot. Every option can also come from a flat key-value config file
// (--config); precedence is CLI flag > config file > documented default, and
// the fully resolved configuration is echoed into the run directory.
//
// Exit codes: 0 ok, 1 usage error, 2 data error, 3 training error.

#include <CLI11.hpp>

#include <cstdio>
#include <functional>
#include <iostream>
#include <memory>
#include <optional>

#include "metricrl/actors.hpp"
#include "metricrl/checkpoint.hpp"
#include "metricrl/config.hpp"
#include "metricrl/dataset.hpp"
#include "metricrl/env.hpp"
#include "metricrl/errors.hpp"
#include "metricrl/evaluate.hpp"
#include "metricrl/harness.hpp"
#include "metricrl/metric.hpp"
#include "metricrl/oracle.hpp"
#include "metricrl/value.hpp"

using namespace metricrl;

namespace {

// Registers options bound to Settings fields; values land only when the flag
// was actually passed, so the config file keeps its place in the precedence
// chain.
class OptionSet {
  public:
    explicit OptionSet(CLI::App* cmd) : cmd_(cmd) {
        cmd->add_option("--config", config_file_, "flat key-value config file");
    }

    template <typename T, typename F>
    void add(const std::string& flag, F Settings::*field, const std::string& desc) {
        auto holder = std::make_shared<T>(static_cast<T>(defaults_.*field));
        CLI::Option* opt = cmd_->add_option(flag, *holder, desc)->capture_default_str();
        applies_.push_back([holder, field, opt](Settings& s) {
            if (opt->count() > 0) s.*field = static_cast<F>(*holder);
        });
    }

    void add_flag(const std::string& flag, bool Settings::*field, const std::string& desc) {
        auto holder = std::make_shared<bool>(false);
        CLI::Option* opt = cmd_->add_flag(flag, *holder, desc);
        applies_.push_back([holder, field, opt](Settings& s) {
            if (opt->count() > 0) s.*field = *holder;
        });
    }

    void add_goals(const std::string& flag) {
        auto holder = std::make_shared<std::vector<std::string>>();
        CLI::Option* opt =
            cmd_->add_option(flag, *holder, "goal as 'features:reward', e.g. 9;9:1 (repeatable)");
        applies_.push_back([holder, opt](Settings& s) {
            if (opt->count() > 0) s.goals = *holder;
        });
    }

    Settings resolve() const {
        Settings s;
        if (!config_file_.empty())
            apply_config_file(s, read_key_value_file(config_file_), config_file_);
        for (const auto& apply : applies_) apply(s);
        return s;
    }

  private:
    CLI::App* cmd_;
    Settings defaults_;
    std::string config_file_;
    std::vector<std::function<void(Settings&)>> applies_;
};

void add_env_options(OptionSet& opts) {
    opts.add<std::string>("--env", &Settings::env_kind, "environment: empty|hypermaze|doorkey");
    opts.add<int>("--dims", &Settings::dims, "grid dimensions n");
    opts.add<int>("--cells", &Settings::cells, "cells per dimension m");
    opts.add<std::uint64_t>("--layout-seed", &Settings::layout_seed,
                            "layout seed (doorkey key placement)");
    opts.add<int>("--max-episode-len", &Settings::max_episode_len,
                  "episode cap (0 = 4x geodesic diameter)");
    opts.add_goals("--goal");
    opts.add_flag("--multi-goal", &Settings::multi_goal,
                  "two-goal preset: corner rewards 0.7 and 1.0");
}

void add_metric_options(OptionSet& opts) {
    opts.add<int>("--latent", &Settings::latent, "latent dimension (MetricRL protocol: 128)");
    opts.add<double>("--lambda", &Settings::lambda,
                     "contrastive weight lambda (MetricRL protocol: 1)");
    opts.add<std::string>("--loss", &Settings::loss, "loss variant: log|raw");
    opts.add<double>("--clamp-eps", &Settings::clamp_eps, "negative-distance clamp");
    opts.add<int>("--batch", &Settings::batch, "batch size (MetricRL protocol: 256)");
    opts.add<int>("--batches", &Settings::batches_per_epoch,
                  "batches per epoch (MetricRL protocol: 500)");
    opts.add<int>("--epochs", &Settings::epochs, "epochs (MetricRL protocol: 100)");
    opts.add<double>("--lr", &Settings::lr, "Adam learning rate (MetricRL protocol: 1e-3)");
    opts.add<std::string>("--meta", &Settings::meta,
                          "meta-state handling: off|connect|train");
    opts.add<int>("--audit-triples", &Settings::audit_triples,
                  "per-epoch sampled monotonicity audit (0 = off)");
    opts.add<std::string>("--hidden", &Settings::hidden,
                          "hidden layer widths (MetricRL protocol: 64,64,64)");
}

void add_agent_options(OptionSet& opts) {
    opts.add<double>("--gamma", &Settings::gamma, "discount factor (baseline protocol: 0.95)");
    opts.add<std::string>("--value-mode", &Settings::value_mode, "gamma-exp|neg-distance");
    opts.add<std::string>("--model", &Settings::model_path, "checkpoint path");
    opts.add<std::string>("--policy", &Settings::policy, "policy source: model|random|oracle");
}

void add_dqn_options(OptionSet& opts) {
    opts.add<double>("--dqn-lr", &Settings::dqn_lr, "DQN Adam learning rate");
    opts.add<int>("--dqn-target-sync", &Settings::dqn_target_sync,
                  "updates between target copies");
}

void add_out_options(OptionSet& opts) {
    opts.add<std::string>("--out", &Settings::out_dir, "output directory");
    opts.add_flag("--force", &Settings::force, "overwrite a completed output directory");
}

std::string require(const std::string& value, const std::string& what) {
    if (value.empty()) throw UsageError("missing required " + what);
    return value;
}

RunDir open_run_dir(const Settings& s) {
    return RunDir::create(resolve_out_dir(require(s.out_dir, "--out (out.dir)")), s.force);
}

Dataset load_dataset(const Settings& s) {
    return read_dataset(require(s.data_path, "--data (data.path)"));
}

DiscreteEnv env_from_manifest(const Dataset& ds) { return DiscreteEnv(ds.manifest.env); }

ValueModel value_model_from_checkpoint(const std::string& path, const std::vector<GoalSpec>& goals,
                                       double gamma, const std::string& mode) {
    const Checkpoint ck = load_checkpoint(path);
    return ValueModel(EmbeddingModel::from_checkpoint(ck), goals, gamma, parse_value_mode(mode));
}

// Builds the evaluation policy; keeps the owning objects alive via out-params.
struct PolicyBundle {
    PolicyFn policy;
    std::string id;
    std::shared_ptr<ValueModel> vm;
    std::shared_ptr<PolicyModel> pm;
    std::shared_ptr<QModel> qm;
    std::shared_ptr<OraclePolicy> oracle;
    std::shared_ptr<DatasetGraph> graph;
};

PolicyBundle build_policy(const Settings& s, const DiscreteEnv& env) {
    PolicyBundle bundle;
    if (s.policy == "random") {
        bundle.id = "random";
        bundle.policy = uniform_policy(env.action_count());
        return bundle;
    }
    if (s.policy == "oracle") {
        bundle.id = "oracle";
        bundle.graph = std::make_shared<DatasetGraph>(build_state_graph(env));
        const ValueTable values =
            optimal_value(*bundle.graph, goal_nodes(*bundle.graph, env.spec().goals), s.gamma);
        bundle.oracle =
            std::make_shared<OraclePolicy>(optimal_greedy_policy(env, *bundle.graph, values));
        auto oracle = bundle.oracle;
        bundle.policy = [&env, oracle](const EnvState& st, Rng&) { return oracle->act(env, st); };
        return bundle;
    }
    if (s.policy != "model")
        throw UsageError("unknown policy source '" + s.policy + "' (model|random|oracle)");
    const Checkpoint ck = load_checkpoint(require(s.model_path, "--model (agent.model)"));
    bundle.id = ck.role;
    if (ck.role == "embedding") {
        bundle.vm = std::make_shared<ValueModel>(EmbeddingModel::from_checkpoint(ck),
                                                 env.spec().goals, s.gamma,
                                                 parse_value_mode(s.value_mode));
        auto vm = bundle.vm;
        bundle.policy = [&env, vm](const EnvState& st, Rng&) { return greedy_action(env, st, *vm); };
        bundle.id = "metricrl-greedy";
    } else if (ck.role == "policy") {
        bundle.pm = std::make_shared<PolicyModel>(PolicyModel{ck.params, ck.seed});
        auto pm = bundle.pm;
        bundle.policy = [&env, pm](const EnvState& st, Rng& rng) {
            return pm->sample_action(env.encode(st), rng);
        };
        bundle.id = "policy-categorical";
    } else if (ck.role == "q") {
        bundle.qm = std::make_shared<QModel>(QModel{ck.params, ck.seed});
        auto qm = bundle.qm;
        bundle.policy = [&env, qm](const EnvState& st, Rng&) { return qm->greedy(env.encode(st)); };
        bundle.id = "dqn-greedy";
    } else {
        throw DataError("checkpoint role '" + ck.role + "' is not a runnable policy");
    }
    return bundle;
}

int run_gen_data(const Settings& s) {
    const DiscreteEnv env(env_spec_from_settings(s));
    const Dataset ds = collect(env, parse_tier(s.tier), s.episodes, s.seed, s.gamma);
    const RunDir dir = open_run_dir(s);
    write_dataset(ds, dir.path());
    dir.write("config.txt", settings_text(s));
    // state coverage, reported rather than silently assumed
    std::unordered_set<std::string> seen;
    for (const auto& r : ds.records) {
        seen.insert(feature_key(r.s));
        seen.insert(feature_key(r.next));
    }
    const std::size_t reachable = env.enumerate_states().size();
    dir.finalize();
    std::cout << "wrote " << ds.records.size() << " transitions over " << s.episodes
              << " episodes to " << dir.path().string() << " (state coverage " << seen.size()
              << "/" << reachable << ")\n";
    return kExitOk;
}

int run_train(const Settings& s) {
    const Dataset ds = load_dataset(s);
    const MetricTrainResult result = train_metric(ds, metric_config_from_settings(s));
    const RunDir dir = open_run_dir(s);
    dir.write("config.txt", settings_text(s));
    dir.write("metrics.csv", metric_log_csv(result.log));
    dir.write("model.ckpt", encode_checkpoint(result.model.checkpoint()));
    dir.write("graph.txt", result.graph.adjacency_text());
    std::string report;
    report += "records = " + std::to_string(ds.records.size()) + "\n";
    report += "graph_nodes = " + std::to_string(result.graph.node_count()) + "\n";
    report += "components_before_meta = " + std::to_string(result.components_before_meta) + "\n";
    report += "meta_node = " + std::string(result.graph.meta_node >= 0 ? "yes" : "no") + "\n";
    if (!result.log.empty()) {
        report += "final_mean_loss = " + format_double(result.log.back().mean_loss) + "\n";
        report += "final_constraint_residual = " +
                  format_double(result.log.back().constraint_residual) + "\n";
        report += "final_violation_rate_sample = " +
                  format_double(result.log.back().violation_rate_sample) + "\n";
    }
    dir.write("report.txt", report);
    dir.finalize();
    std::cout << "trained embedding on " << ds.records.size() << " records; checkpoint at "
              << (dir.path() / "model.ckpt").string() << "\n";
    return kExitOk;
}

int run_train_bc(const Settings& s) {
    const Dataset ds = load_dataset(s);
    const DiscreteEnv env = env_from_manifest(ds);
    ActorConfig ac;
    ac.batch = s.batch;
    ac.batches_per_epoch = s.batches_per_epoch;
    ac.epochs = s.epochs;
    ac.lr = s.lr;
    ac.seed = s.seed;
    ac.hidden = parse_int_list(s.hidden, "metric.hidden");
    const PolicyModel policy = train_bc(ds, env.action_count(), ac);
    const RunDir dir = open_run_dir(s);
    dir.write("config.txt", settings_text(s));
    dir.write("model.ckpt", encode_checkpoint(policy.checkpoint("policy")));
    dir.finalize();
    std::cout << "behavior-cloned policy written to " << (dir.path() / "model.ckpt").string()
              << "\n";
    return kExitOk;
}

int run_train_actor(const Settings& s) {
    const Dataset ds = load_dataset(s);
    const DiscreteEnv env = env_from_manifest(ds);
    const ValueModel vm = value_model_from_checkpoint(
        require(s.model_path, "--model (agent.model)"), env.spec().goals, s.gamma, s.value_mode);
    ActorConfig ac;
    ac.batch = s.batch;
    ac.batches_per_epoch = s.batches_per_epoch;
    ac.epochs = s.epochs;
    ac.lr = s.lr;
    ac.seed = s.seed;
    ac.hidden = parse_int_list(s.hidden, "metric.hidden");
    const PolicyModel policy = train_pg_actor(
        ds, [&vm](const Vector& f) { return vm.value(f); }, env.action_count(), ac);
    const RunDir dir = open_run_dir(s);
    dir.write("config.txt", settings_text(s));
    dir.write("model.ckpt", encode_checkpoint(policy.checkpoint("policy")));
    dir.finalize();
    std::cout << "policy-gradient actor written to " << (dir.path() / "model.ckpt").string()
              << "\n";
    return kExitOk;
}

int run_train_dqn(const Settings& s) {
    const Dataset ds = load_dataset(s);
    const DiscreteEnv env = env_from_manifest(ds);
    DqnConfig dc;
    dc.gamma = s.gamma;
    dc.batch = s.batch;
    dc.lr = s.dqn_lr;
    dc.target_sync = s.dqn_target_sync;
    dc.seed = s.seed;
    dc.hidden = parse_int_list(s.hidden, "metric.hidden");
    const DqnResult result = train_dqn_offline(ds, env.action_count(), dc, s.epochs,
                                               s.batches_per_epoch);
    const RunDir dir = open_run_dir(s);
    dir.write("config.txt", settings_text(s));
    dir.write("model.ckpt", encode_checkpoint(result.model.checkpoint()));
    dir.write("report.txt", std::string("diverged = ") + (result.diverged ? "1" : "0") + "\n" +
                                "updates = " + std::to_string(result.updates) + "\n");
    dir.finalize();
    if (result.diverged) {
        std::cout << "dqn training diverged; run marked failed\n";
        return kExitTraining;
    }
    std::cout << "dqn checkpoint written to " << (dir.path() / "model.ckpt").string() << "\n";
    return kExitOk;
}

int run_eval(const Settings& s) {
    std::optional<Dataset> ds;
    std::optional<DiscreteEnv> env;
    if (!s.data_path.empty()) {
        ds = read_dataset(s.data_path);
        env.emplace(ds->manifest.env);
    } else {
        env.emplace(env_spec_from_settings(s));
    }
    const PolicyBundle bundle = build_policy(s, *env);
    const EvalResult result =
        evaluate(*env, bundle.policy, s.eval_episodes, s.seed, s.gamma, bundle.id);
    const RunDir dir = open_run_dir(s);
    dir.write("config.txt", settings_text(s));
    dir.write("metrics.csv", eval_rows_csv(result.rows));
    std::string report;
    report += "policy = " + result.report.policy_id + "\n";
    report += "episodes = " + std::to_string(result.report.episodes) + "\n";
    report += "success_rate = " + format_double(result.report.success_rate) + "\n";
    report += "mean_return = " + format_double(result.report.mean_return) + "\n";
    report += "mean_length = " + format_double(result.report.mean_length) + "\n";
    dir.write("report.txt", report);
    dir.finalize();
    std::cout << "success_rate = " << format_double(result.report.success_rate)
              << " mean_return = " << format_double(result.report.mean_return) << "\n";
    return kExitOk;
}

int run_check_data(const Settings& s) {
    const Dataset ds = load_dataset(s);
    const DiscreteEnv env = env_from_manifest(ds);
    const auto bad = dataset_consistency_failures(ds, env);
    std::cout << "records = " << ds.records.size() << ", inconsistent = " << bad.size() << "\n";
    if (!bad.empty()) {
        for (std::size_t i = 0; i < bad.size() && i < 20; ++i)
            std::cout << "  record " << bad[i] << " does not re-simulate\n";
        return kExitData;
    }
    return kExitOk;
}

int run_check_mono(const Settings& s) {
    const Checkpoint ck = load_checkpoint(require(s.model_path, "--model (agent.model)"));
    const EmbeddingModel model = EmbeddingModel::from_checkpoint(ck);
    DatasetGraph graph;
    if (!s.data_path.empty()) {
        const Dataset ds = read_dataset(s.data_path);
        graph = build_transition_graph(transition_pairs(ds));
    } else {
        graph = build_state_graph(DiscreteEnv(env_spec_from_settings(s)));
    }
    GeodesicCache geo(graph);
    const MonoReport report = monotonicity_violation_rate(embed_nodes(model, graph), geo,
                                                          s.check_triples, Rng(s.seed));
    std::string csv = "s1,s2,s3,d13,d23,z13,z23\n";
    for (const auto& w : report.witnesses)
        csv += graph.keys[w.s1] + ";" + graph.keys[w.s2] + ";" + graph.keys[w.s3] + "," +
               std::to_string(w.d13) + "," + std::to_string(w.d23) + "," + format_double(w.z13) +
               "," + format_double(w.z23) + "\n";
    // witness keys contain ';' already, so pack the triple into one field
    if (!s.out_dir.empty()) {
        const RunDir dir = open_run_dir(s);
        dir.write("config.txt", settings_text(s));
        dir.write("metrics.csv", csv);
        std::string rep;
        rep += "mode = " + std::string(report.exhaustive ? "exhaustive" : "sampled") + "\n";
        rep += "evaluated = " + std::to_string(report.evaluated) + "\n";
        rep += "violations = " + std::to_string(report.violations) + "\n";
        rep += "violation_rate = " + format_double(report.rate) + "\n";
        dir.write("report.txt", rep);
        dir.finalize();
    }
    std::cout << "violation_rate = " << format_double(report.rate) << " ("
              << report.violations << "/" << report.evaluated
              << (report.exhaustive ? ", exhaustive" : ", sampled") << ")\n";
    return kExitOk;
}

int run_verify_theorem(const Settings& s, bool builtin_fixture) {
    std::optional<DiscreteEnv> env;
    std::optional<ValueModel> vm;
    if (builtin_fixture) {
        EnvSpec spec;
        spec.kind = EnvKind::Empty;
        spec.dims = 1;
        spec.cells = 6;
        env.emplace(spec);
        vm.emplace(line_embedding_fixture(4), env->spec().goals, s.gamma,
                   parse_value_mode(s.value_mode));
    } else {
        env.emplace(env_spec_from_settings(s));
        vm.emplace(value_model_from_checkpoint(require(s.model_path, "--model (agent.model)"),
                                               env->spec().goals, s.gamma, s.value_mode));
    }
    const TheoremReport report = verify_theorem(*env, *vm, s.check_triples);
    if (!s.out_dir.empty()) {
        const RunDir dir = open_run_dir(s);
        dir.write("config.txt", settings_text(s));
        dir.write("metrics.csv", report.csv);
        dir.write("report.txt", theorem_report_text(report));
        const DatasetGraph g = build_state_graph(*env);
        dir.write("values.csv",
                  value_table_csv(g, optimal_value(g, goal_nodes(g, env->spec().goals), s.gamma)));
        dir.finalize();
    }
    std::cout << "agreement = " << format_double(report.agreement)
              << " violations = " << report.mono.violations
              << (report.mono.exhaustive ? " (exhaustive)" : " (sampled)")
              << " implication_ok = " << (report.implication_ok ? "1" : "0") << "\n";
    return kExitOk;
}

int run_sweep_quality(const Settings& s) {
    const DiscreteEnv env(env_spec_from_settings(s));
    QualitySweepConfig config;
    config.tiers.clear();
    for (const auto& t : parse_string_list(s.tiers)) config.tiers.push_back(parse_tier(t));
    config.methods = parse_string_list(s.methods);
    config.seeds = parse_u64_list(s.seeds, "harness.seeds");
    config.data_episodes = s.data_episodes;
    config.data_seed = s.data_seed;
    config.eval_episodes = s.eval_episodes;
    config.gamma = s.gamma;
    config.latent = s.latent;
    config.lambda = s.lambda;
    config.variant = parse_loss_variant(s.loss);
    config.meta = parse_meta_mode(s.meta);
    config.budget = {s.epochs, s.batches_per_epoch, s.batch};
    config.dqn_lr = s.dqn_lr;
    config.dqn_target_sync = s.dqn_target_sync;
    config.hidden = parse_int_list(s.hidden, "metric.hidden");
    config.threads = env_threads();
    const QualitySweepResult result = quality_sweep(env, config);
    const RunDir dir = open_run_dir(s);
    dir.write("config.txt", settings_text(s));
    dir.write("metrics.csv", result.csv);
    dir.write("report.txt", result.report_text);
    dir.write("quality.svg", result.svg);
    dir.finalize();
    std::cout << result.report_text;
    return kExitOk;
}

int run_sweep_complexity(const Settings& s) {
    SolveConfig config;
    config.budget = s.budget;
    config.eval_every = s.eval_every;
    config.consecutive = s.consecutive;
    config.batch = s.batch;
    config.seed = s.seed;
    config.gamma = s.gamma;
    config.latent = s.latent;
    config.lambda = s.lambda;
    config.variant = parse_loss_variant(s.loss);
    config.hidden = parse_int_list(s.hidden, "metric.hidden");
    config.metric_lr = s.lr;
    config.dqn_lr = s.dqn_lr;
    config.dqn_target_sync = s.dqn_target_sync;
    const ComplexitySweepResult result = solve_complexity_sweep(
        parse_string_list(s.methods), parse_int_list(s.sizes, "harness.sizes"), s.vary, s.fixed,
        config, env_threads());
    const RunDir dir = open_run_dir(s);
    dir.write("config.txt", settings_text(s));
    dir.write("metrics.csv", result.csv);
    dir.write("complexity.svg", result.svg);
    dir.finalize();
    std::cout << result.csv;
    return kExitOk;
}

int run_multi_goal(const Settings& s) {
    const DiscreteEnv env(env_spec_from_settings(s));
    const Checkpoint ck = load_checkpoint(require(s.model_path, "--model (agent.model)"));
    const MultiGoalStudyResult result = multi_goal_study(
        env, EmbeddingModel::from_checkpoint(ck), parse_double_list(s.gammas, "harness.gammas"));
    const RunDir dir = open_run_dir(s);
    dir.write("config.txt", settings_text(s));
    dir.write("metrics.csv", result.chosen_csv);
    dir.write("value_field.csv", result.field_csv);
    dir.write("crossover.csv", crossover_csv(result));
    for (const auto& [gamma, svg] : result.grid_svgs)
        dir.write("goalmap_" + format_double(gamma) + ".svg", svg);
    int bracket_ok = 0;
    for (const auto& row : result.crossover)
        if (std::abs(row.analytic_flip - row.empirical_flip) <= 1) ++bracket_ok;
    std::string report;
    report += "crossover_starts = " + std::to_string(result.crossover.size()) + "\n";
    report += "bracket_within_one_step = " + std::to_string(bracket_ok) + "\n";
    report += "high_gamma_all_high_goal = " +
              std::string(result.high_gamma_all_high_goal ? "1" : "0") + "\n";
    dir.write("report.txt", report);
    dir.finalize();
    std::cout << report;
    return kExitOk;
}

int run_plot(const std::string& run_dir) {
    namespace fs = std::filesystem;
    const fs::path dir(run_dir);
    const std::string csv = read_file(dir / "metrics.csv");
    const auto lines = split(csv, '\n');
    if (lines.empty()) throw DataError("plot: empty metrics.csv");
    const std::string& header = lines[0];
    if (header.rfind("tier,method", 0) == 0) {
        // rebuild the quality bar chart
        std::vector<std::string> tiers;
        std::vector<std::string> methods;
        std::map<std::pair<std::string, std::string>, std::pair<double, int>> acc;
        for (std::size_t i = 1; i < lines.size(); ++i) {
            if (lines[i].empty()) continue;
            const auto parts = split(lines[i], ',');
            if (parts.size() < 4) continue;
            if (std::find(tiers.begin(), tiers.end(), parts[0]) == tiers.end())
                tiers.push_back(parts[0]);
            if (std::find(methods.begin(), methods.end(), parts[1]) == methods.end())
                methods.push_back(parts[1]);
            auto& slot = acc[{parts[0], parts[1]}];
            slot.first += parse_double(parts[3], "success_rate");
            slot.second += 1;
        }
        std::vector<SvgSeries> series;
        for (const auto& m : methods) {
            SvgSeries sr;
            sr.name = m;
            for (const auto& t : tiers) {
                const auto& slot = acc[{t, m}];
                sr.values.push_back(slot.second ? slot.first / slot.second : 0.0);
            }
            series.push_back(std::move(sr));
        }
        atomic_write_file(dir / "quality.svg",
                          svg_bar_chart("success rate by dataset tier", tiers, series, 1.0));
        std::cout << "wrote " << (dir / "quality.svg").string() << "\n";
        return kExitOk;
    }
    if (header.rfind("vary,size", 0) == 0) {
        std::vector<double> sizes;
        std::vector<std::string> methods;
        std::map<std::pair<std::string, double>, std::pair<double, bool>> points;
        for (std::size_t i = 1; i < lines.size(); ++i) {
            if (lines[i].empty()) continue;
            const auto parts = split(lines[i], ',');
            if (parts.size() < 6) continue;
            const double size = parse_double(parts[1], "size");
            if (std::find(sizes.begin(), sizes.end(), size) == sizes.end()) sizes.push_back(size);
            if (std::find(methods.begin(), methods.end(), parts[2]) == methods.end())
                methods.push_back(parts[2]);
            const bool censored = parts[4] == "1";
            const double budget = parse_double(parts[5], "budget");
            points[{parts[2], size}] = {censored ? budget : parse_double(parts[3], "updates"),
                                        censored};
        }
        std::sort(sizes.begin(), sizes.end());
        std::vector<SvgSeries> series;
        for (const auto& m : methods) {
            SvgSeries sr;
            sr.name = m;
            for (double size : sizes) {
                sr.values.push_back(points[{m, size}].first);
                sr.censored.push_back(points[{m, size}].second);
            }
            series.push_back(std::move(sr));
        }
        atomic_write_file(dir / "complexity.svg",
                          svg_line_chart("updates to solve (hollow = censored at budget)", "size",
                                         sizes, series));
        std::cout << "wrote " << (dir / "complexity.svg").string() << "\n";
        return kExitOk;
    }
    throw DataError("plot: unrecognized metrics.csv header '" + header + "'");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"metricrl: goal-conditioned offline RL via distance-monotonic embeddings"};
    app.require_subcommand(1);

    int exit_code = kExitOk;
    std::function<int()> action;

    // gen-data
    auto* gen = app.add_subcommand("gen-data", "collect an offline dataset at a quality tier");
    auto gen_opts = std::make_shared<OptionSet>(gen);
    add_env_options(*gen_opts);
    gen_opts->add<std::string>("--tier", &Settings::tier,
                               "dataset quality: low|medium|high (eps 0.9/0.5/0.1)");
    gen_opts->add<std::int64_t>("--episodes", &Settings::episodes, "episodes to collect");
    gen_opts->add<std::uint64_t>("--seed", &Settings::seed, "collection seed");
    gen_opts->add<double>("--gamma", &Settings::gamma, "discount for the reference policy");
    add_out_options(*gen_opts);
    gen->callback([&action, gen_opts] { action = [gen_opts] { return run_gen_data(gen_opts->resolve()); }; });

    // train
    auto* train = app.add_subcommand("train", "train the distance-monotonic embedding");
    auto train_opts = std::make_shared<OptionSet>(train);
    train_opts->add<std::string>("--data", &Settings::data_path, "dataset directory");
    train_opts->add<std::uint64_t>("--seed", &Settings::seed, "training seed");
    add_metric_options(*train_opts);
    add_out_options(*train_opts);
    train->callback([&action, train_opts] { action = [train_opts] { return run_train(train_opts->resolve()); }; });

    // train-actor / train-bc / train-dqn
    auto* actor = app.add_subcommand("train-actor", "policy-gradient actor on a frozen value");
    auto actor_opts = std::make_shared<OptionSet>(actor);
    actor_opts->add<std::string>("--data", &Settings::data_path, "dataset directory");
    actor_opts->add<std::uint64_t>("--seed", &Settings::seed, "training seed");
    add_metric_options(*actor_opts);
    add_agent_options(*actor_opts);
    add_out_options(*actor_opts);
    actor->callback([&action, actor_opts] { action = [actor_opts] { return run_train_actor(actor_opts->resolve()); }; });

    auto* bc = app.add_subcommand("train-bc", "behavior-cloning baseline");
    auto bc_opts = std::make_shared<OptionSet>(bc);
    bc_opts->add<std::string>("--data", &Settings::data_path, "dataset directory");
    bc_opts->add<std::uint64_t>("--seed", &Settings::seed, "training seed");
    add_metric_options(*bc_opts);
    add_out_options(*bc_opts);
    bc->callback([&action, bc_opts] { action = [bc_opts] { return run_train_bc(bc_opts->resolve()); }; });

    auto* dqn = app.add_subcommand("train-dqn", "offline DQN baseline");
    auto dqn_opts = std::make_shared<OptionSet>(dqn);
    dqn_opts->add<std::string>("--data", &Settings::data_path, "dataset directory");
    dqn_opts->add<std::uint64_t>("--seed", &Settings::seed, "training seed");
    add_metric_options(*dqn_opts);
    dqn_opts->add<double>("--gamma", &Settings::gamma, "discount factor");
    add_dqn_options(*dqn_opts);
    add_out_options(*dqn_opts);
    dqn->callback([&action, dqn_opts] { action = [dqn_opts] { return run_train_dqn(dqn_opts->resolve()); }; });

    // eval
    auto* eval_cmd = app.add_subcommand("eval", "evaluate a policy with seeded rollouts");
    auto eval_opts = std::make_shared<OptionSet>(eval_cmd);
    eval_opts->add<std::string>("--data", &Settings::data_path,
                                "dataset directory (env taken from its manifest)");
    add_env_options(*eval_opts);
    add_agent_options(*eval_opts);
    eval_opts->add<int>("--episodes", &Settings::eval_episodes, "evaluation episodes");
    eval_opts->add<std::uint64_t>("--seed", &Settings::seed, "evaluation seed");
    add_out_options(*eval_opts);
    eval_cmd->callback([&action, eval_opts] { action = [eval_opts] { return run_eval(eval_opts->resolve()); }; });

    // check-data
    auto* check_data = app.add_subcommand("check-data", "re-simulate every dataset record");
    auto check_data_opts = std::make_shared<OptionSet>(check_data);
    check_data_opts->add<std::string>("--data", &Settings::data_path, "dataset directory");
    check_data->callback([&action, check_data_opts] {
        action = [check_data_opts] { return run_check_data(check_data_opts->resolve()); };
    });

    // check-mono
    auto* mono = app.add_subcommand("check-mono", "monotonicity violation rate of an embedding");
    auto mono_opts = std::make_shared<OptionSet>(mono);
    mono_opts->add<std::string>("--data", &Settings::data_path,
                                "dataset directory (graph from transitions)");
    add_env_options(*mono_opts);
    mono_opts->add<std::string>("--model", &Settings::model_path, "embedding checkpoint");
    mono_opts->add<std::int64_t>("--triples", &Settings::check_triples, "sampled triples");
    mono_opts->add<std::uint64_t>("--seed", &Settings::seed, "audit seed");
    add_out_options(*mono_opts);
    mono->callback([&action, mono_opts] { action = [mono_opts] { return run_check_mono(mono_opts->resolve()); }; });

    // verify-theorem
    auto* verify = app.add_subcommand("verify-theorem",
                                      "greedy-on-value vs exact optimal policy, plus the "
                                      "monotonicity implication");
    auto verify_opts = std::make_shared<OptionSet>(verify);
    add_env_options(*verify_opts);
    add_agent_options(*verify_opts);
    verify_opts->add<std::int64_t>("--triples", &Settings::check_triples,
                                   "sampled triples when too large for exhaustive mode");
    auto builtin = std::make_shared<bool>(false);
    verify->add_flag("--builtin-fixture", *builtin,
                     "run the shipped isometric line fixture instead of a checkpoint");
    add_out_options(*verify_opts);
    verify->callback([&action, verify_opts, builtin] {
        action = [verify_opts, builtin] {
            return run_verify_theorem(verify_opts->resolve(), *builtin);
        };
    });

    // sweep-quality
    auto* quality = app.add_subcommand("sweep-quality",
                                       "tier x method x seed sweep with identical budgets");
    auto quality_opts = std::make_shared<OptionSet>(quality);
    add_env_options(*quality_opts);
    add_metric_options(*quality_opts);
    quality_opts->add<double>("--gamma", &Settings::gamma, "discount factor");
    add_dqn_options(*quality_opts);
    quality_opts->add<std::string>("--methods", &Settings::methods, "comma-separated methods");
    quality_opts->add<std::string>("--tiers", &Settings::tiers, "comma-separated tiers");
    quality_opts->add<std::string>("--seeds", &Settings::seeds, "comma-separated training seeds");
    quality_opts->add<std::int64_t>("--data-episodes", &Settings::data_episodes,
                                    "episodes per tier dataset");
    quality_opts->add<std::uint64_t>("--data-seed", &Settings::data_seed, "dataset seed root");
    quality_opts->add<int>("--eval-episodes", &Settings::eval_episodes, "evaluation episodes");
    add_out_options(*quality_opts);
    quality->callback([&action, quality_opts] {
        action = [quality_opts] { return run_sweep_quality(quality_opts->resolve()); };
    });

    // sweep-complexity
    auto* complexity = app.add_subcommand("sweep-complexity",
                                          "updates-to-solve vs maze size on the hypermaze");
    auto complexity_opts = std::make_shared<OptionSet>(complexity);
    add_metric_options(*complexity_opts);
    complexity_opts->add<double>("--gamma", &Settings::gamma, "discount factor");
    add_dqn_options(*complexity_opts);
    complexity_opts->add<std::string>("--methods", &Settings::methods, "metricrl,dqn");
    complexity_opts->add<std::string>("--sizes", &Settings::sizes, "comma-separated sizes");
    complexity_opts->add<std::string>("--vary", &Settings::vary, "cells|dims");
    complexity_opts->add<int>("--fixed", &Settings::fixed, "the non-varied dimension value");
    complexity_opts->add<std::int64_t>("--budget", &Settings::budget, "update budget per run");
    complexity_opts->add<int>("--eval-every", &Settings::eval_every, "updates between evaluations");
    complexity_opts->add<int>("--consecutive", &Settings::consecutive,
                              "consecutive successes defining a solve");
    complexity_opts->add<std::uint64_t>("--seed", &Settings::seed, "run seed");
    add_out_options(*complexity_opts);
    complexity->callback([&action, complexity_opts] {
        action = [complexity_opts] { return run_sweep_complexity(complexity_opts->resolve()); };
    });

    // multi-goal
    auto* multi = app.add_subcommand("multi-goal", "discount-dependent goal choice study");
    auto multi_opts = std::make_shared<OptionSet>(multi);
    add_env_options(*multi_opts);
    multi_opts->add<std::string>("--model", &Settings::model_path, "embedding checkpoint");
    multi_opts->add<std::string>("--gammas", &Settings::gammas, "comma-separated gamma sweep");
    add_out_options(*multi_opts);
    multi->callback([&action, multi_opts] {
        action = [multi_opts] { return run_multi_goal(multi_opts->resolve()); };
    });

    // plot
    auto* plot = app.add_subcommand("plot", "regenerate SVG plots from a run directory");
    auto plot_dir = std::make_shared<std::string>();
    plot->add_option("--run", *plot_dir, "run directory containing metrics.csv")->required();
    plot->callback([&action, plot_dir] { action = [plot_dir] { return run_plot(*plot_dir); }; });

    try {
        app.parse(argc, argv);
        if (action) exit_code = action();
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return kExitData;
    } catch (const TrainingError& e) {
        std::cerr << "training error: " << e.what() << "\n";
        return kExitTraining;
    }
    return exit_code;
}
