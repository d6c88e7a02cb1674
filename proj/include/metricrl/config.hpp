#pragma once

// Run configuration: one flat struct covering every verb, a strict key-value
// config-file loader (unknown keys rejected with their exact path), an echo
// writer whose output re-parses to the identical configuration, and run
// directory management (atomic outputs, immutable after completion).

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <set>
#include <string>
#include <vector>

#include "metricrl/dataset.hpp"
#include "metricrl/env.hpp"
#include "metricrl/errors.hpp"
#include "metricrl/harness.hpp"
#include "metricrl/metric.hpp"
#include "metricrl/textio.hpp"

namespace metricrl {

struct Settings {
    // [env]
    std::string env_kind = "empty";
    int dims = 2;
    int cells = 10;
    std::uint64_t layout_seed = 0;
    int max_episode_len = 0;
    std::vector<std::string> goals;  // "f;f:r" strings; empty -> env default
    bool multi_goal = false;         // preset: corner goals r=0.7 and r=1.0
    // [data]
    std::string data_path;
    std::string tier = "low";
    std::int64_t episodes = 1000;
    std::uint64_t seed = 1;
    // [metric]
    int latent = 128;
    double lambda = 1.0;
    std::string loss = "log";
    double clamp_eps = 1e-6;
    int batch = 256;
    int batches_per_epoch = 500;
    int epochs = 100;
    double lr = 1e-3;
    std::string meta = "off";
    int audit_triples = 512;
    std::string hidden = "64,64,64";
    // [agent]
    double gamma = 0.95;
    std::string value_mode = "gamma-exp";
    std::string model_path;
    std::string policy = "model";  // model|random|oracle
    // [dqn]
    double dqn_lr = 3e-4;
    int dqn_target_sync = 500;
    // [harness]
    int eval_episodes = 200;
    std::string seeds = "1,2,3,4,5";
    std::int64_t budget = 120000;
    int eval_every = 500;
    int consecutive = 25;
    std::string sizes = "10,20,30";
    std::string vary = "cells";
    int fixed = 2;
    std::string gammas = "0.5,0.9,0.95,0.99,0.999";
    std::string methods = "metricrl,bc,dqn,random";
    std::string tiers = "low,medium,high";
    std::int64_t data_episodes = 1000;
    std::uint64_t data_seed = 97;
    std::int64_t check_triples = 10000;
    // [out]
    std::string out_dir;
    bool force = false;

    bool operator==(const Settings&) const = default;
};

namespace configdetail {

inline bool parse_bool(const std::string& v, const std::string& what) {
    if (v == "1" || v == "true") return true;
    if (v == "0" || v == "false") return false;
    throw UsageError(what + ": expected a boolean (0|1|true|false), got '" + v + "'");
}

}  // namespace configdetail

// Applies a parsed config file onto defaults; every key must be known.
inline void apply_config_file(Settings& s, const KeyValueFile& kv, const std::string& origin) {
    int goal_count = -1;
    for (const auto& [key, value] : kv.ordered) {
        if (key == "env.kind") s.env_kind = value;
        else if (key == "env.dims") s.dims = static_cast<int>(parse_int(value, key));
        else if (key == "env.cells") s.cells = static_cast<int>(parse_int(value, key));
        else if (key == "env.layout_seed") s.layout_seed = parse_u64(value, key);
        else if (key == "env.max_episode_len") s.max_episode_len = static_cast<int>(parse_int(value, key));
        else if (key == "env.multi_goal") s.multi_goal = configdetail::parse_bool(value, key);
        else if (key == "env.goal_count") goal_count = static_cast<int>(parse_int(value, key));
        else if (key.rfind("env.goal_", 0) == 0) s.goals.push_back(value);
        else if (key == "data.path") s.data_path = value;
        else if (key == "data.tier") s.tier = value;
        else if (key == "data.episodes") s.episodes = parse_int(value, key);
        else if (key == "data.seed") s.seed = parse_u64(value, key);
        else if (key == "metric.latent") s.latent = static_cast<int>(parse_int(value, key));
        else if (key == "metric.lambda") s.lambda = parse_double(value, key);
        else if (key == "metric.loss") s.loss = value;
        else if (key == "metric.clamp_eps") s.clamp_eps = parse_double(value, key);
        else if (key == "metric.batch") s.batch = static_cast<int>(parse_int(value, key));
        else if (key == "metric.batches_per_epoch") s.batches_per_epoch = static_cast<int>(parse_int(value, key));
        else if (key == "metric.epochs") s.epochs = static_cast<int>(parse_int(value, key));
        else if (key == "metric.lr") s.lr = parse_double(value, key);
        else if (key == "metric.meta") s.meta = value;
        else if (key == "metric.audit_triples") s.audit_triples = static_cast<int>(parse_int(value, key));
        else if (key == "metric.hidden") s.hidden = value;
        else if (key == "agent.gamma") s.gamma = parse_double(value, key);
        else if (key == "agent.value_mode") s.value_mode = value;
        else if (key == "agent.model") s.model_path = value;
        else if (key == "agent.policy") s.policy = value;
        else if (key == "dqn.lr") s.dqn_lr = parse_double(value, key);
        else if (key == "dqn.target_sync") s.dqn_target_sync = static_cast<int>(parse_int(value, key));
        else if (key == "harness.eval_episodes") s.eval_episodes = static_cast<int>(parse_int(value, key));
        else if (key == "harness.seeds") s.seeds = value;
        else if (key == "harness.budget") s.budget = parse_int(value, key);
        else if (key == "harness.eval_every") s.eval_every = static_cast<int>(parse_int(value, key));
        else if (key == "harness.consecutive") s.consecutive = static_cast<int>(parse_int(value, key));
        else if (key == "harness.sizes") s.sizes = value;
        else if (key == "harness.vary") s.vary = value;
        else if (key == "harness.fixed") s.fixed = static_cast<int>(parse_int(value, key));
        else if (key == "harness.gammas") s.gammas = value;
        else if (key == "harness.methods") s.methods = value;
        else if (key == "harness.tiers") s.tiers = value;
        else if (key == "harness.data_episodes") s.data_episodes = parse_int(value, key);
        else if (key == "harness.data_seed") s.data_seed = parse_u64(value, key);
        else if (key == "harness.check_triples") s.check_triples = parse_int(value, key);
        else if (key == "out.dir") s.out_dir = value;
        else if (key == "out.force") s.force = configdetail::parse_bool(value, key);
        else throw UsageError(origin + ": unknown key '" + key + "'");
    }
    if (goal_count >= 0 && goal_count != static_cast<int>(s.goals.size()))
        throw UsageError(origin + ": env.goal_count does not match the goal_N entries");
}

inline std::string settings_text(const Settings& s) {
    std::string out;
    out += "[env]\n";
    out += "kind = " + s.env_kind + "\n";
    out += "dims = " + std::to_string(s.dims) + "\n";
    out += "cells = " + std::to_string(s.cells) + "\n";
    out += "layout_seed = " + std::to_string(s.layout_seed) + "\n";
    out += "max_episode_len = " + std::to_string(s.max_episode_len) + "\n";
    out += "multi_goal = " + std::string(s.multi_goal ? "1" : "0") + "\n";
    out += "goal_count = " + std::to_string(s.goals.size()) + "\n";
    for (std::size_t i = 0; i < s.goals.size(); ++i)
        out += "goal_" + std::to_string(i) + " = " + s.goals[i] + "\n";
    out += "[data]\n";
    out += "path = " + s.data_path + "\n";
    out += "tier = " + s.tier + "\n";
    out += "episodes = " + std::to_string(s.episodes) + "\n";
    out += "seed = " + std::to_string(s.seed) + "\n";
    out += "[metric]\n";
    out += "latent = " + std::to_string(s.latent) + "\n";
    out += "lambda = " + format_double(s.lambda) + "\n";
    out += "loss = " + s.loss + "\n";
    out += "clamp_eps = " + format_double(s.clamp_eps) + "\n";
    out += "batch = " + std::to_string(s.batch) + "\n";
    out += "batches_per_epoch = " + std::to_string(s.batches_per_epoch) + "\n";
    out += "epochs = " + std::to_string(s.epochs) + "\n";
    out += "lr = " + format_double(s.lr) + "\n";
    out += "meta = " + s.meta + "\n";
    out += "audit_triples = " + std::to_string(s.audit_triples) + "\n";
    out += "hidden = " + s.hidden + "\n";
    out += "[agent]\n";
    out += "gamma = " + format_double(s.gamma) + "\n";
    out += "value_mode = " + s.value_mode + "\n";
    out += "model = " + s.model_path + "\n";
    out += "policy = " + s.policy + "\n";
    out += "[dqn]\n";
    out += "lr = " + format_double(s.dqn_lr) + "\n";
    out += "target_sync = " + std::to_string(s.dqn_target_sync) + "\n";
    out += "[harness]\n";
    out += "eval_episodes = " + std::to_string(s.eval_episodes) + "\n";
    out += "seeds = " + s.seeds + "\n";
    out += "budget = " + std::to_string(s.budget) + "\n";
    out += "eval_every = " + std::to_string(s.eval_every) + "\n";
    out += "consecutive = " + std::to_string(s.consecutive) + "\n";
    out += "sizes = " + s.sizes + "\n";
    out += "vary = " + s.vary + "\n";
    out += "fixed = " + std::to_string(s.fixed) + "\n";
    out += "gammas = " + s.gammas + "\n";
    out += "methods = " + s.methods + "\n";
    out += "tiers = " + s.tiers + "\n";
    out += "data_episodes = " + std::to_string(s.data_episodes) + "\n";
    out += "data_seed = " + std::to_string(s.data_seed) + "\n";
    out += "check_triples = " + std::to_string(s.check_triples) + "\n";
    out += "[out]\n";
    out += "dir = " + s.out_dir + "\n";
    out += "force = " + std::string(s.force ? "1" : "0") + "\n";
    return out;
}

// ---- list parsing ----

inline std::vector<std::uint64_t> parse_u64_list(const std::string& text, const std::string& what) {
    std::vector<std::uint64_t> out;
    for (const auto& part : split(text, ','))
        if (!trim(part).empty()) out.push_back(parse_u64(trim(part), what));
    if (out.empty()) throw UsageError(what + ": empty list");
    return out;
}

inline std::vector<int> parse_int_list(const std::string& text, const std::string& what) {
    std::vector<int> out;
    for (const auto& part : split(text, ','))
        if (!trim(part).empty()) out.push_back(static_cast<int>(parse_int(trim(part), what)));
    if (out.empty()) throw UsageError(what + ": empty list");
    return out;
}

inline std::vector<double> parse_double_list(const std::string& text, const std::string& what) {
    std::vector<double> out;
    for (const auto& part : split(text, ','))
        if (!trim(part).empty()) out.push_back(parse_double(trim(part), what));
    if (out.empty()) throw UsageError(what + ": empty list");
    return out;
}

inline std::vector<std::string> parse_string_list(const std::string& text) {
    std::vector<std::string> out;
    for (const auto& part : split(text, ','))
        if (!trim(part).empty()) out.push_back(trim(part));
    return out;
}

// ---- derived objects ----

inline EnvSpec env_spec_from_settings(const Settings& s) {
    EnvSpec spec;
    spec.kind = parse_env_kind(s.env_kind);
    spec.dims = s.dims;
    spec.cells = s.cells;
    spec.layout_seed = s.layout_seed;
    spec.max_episode_len = s.max_episode_len;
    for (const auto& g : s.goals) spec.goals.push_back(goal_from_string(g));
    if (s.multi_goal) {
        if (!spec.goals.empty())
            throw UsageError("env: multi_goal preset and explicit goals are mutually exclusive");
        GoalSpec low, high;
        low.features.assign(static_cast<std::size_t>(s.dims), 0.0);
        low.reward = 0.7;
        high.features.assign(static_cast<std::size_t>(s.dims), static_cast<double>(s.cells - 1));
        high.reward = 1.0;
        spec.goals = {low, high};
    }
    return spec;
}

inline MetricConfig metric_config_from_settings(const Settings& s) {
    MetricConfig mc;
    mc.latent = s.latent;
    mc.lambda = s.lambda;
    mc.variant = parse_loss_variant(s.loss);
    mc.clamp_eps = s.clamp_eps;
    mc.batch = s.batch;
    mc.batches_per_epoch = s.batches_per_epoch;
    mc.epochs = s.epochs;
    mc.lr = s.lr;
    mc.seed = s.seed;
    mc.meta = parse_meta_mode(s.meta);
    mc.audit_triples = s.audit_triples;
    mc.hidden = parse_int_list(s.hidden, "metric.hidden");
    return mc;
}

inline int env_threads() {
    const char* v = std::getenv("METRICRL_THREADS");
    if (!v) return 1;
    const int n = static_cast<int>(parse_int(v, "METRICRL_THREADS"));
    if (n < 1) throw UsageError("METRICRL_THREADS must be >= 1");
    return n;
}

inline std::filesystem::path resolve_out_dir(const std::string& dir) {
    if (dir.empty()) throw UsageError("missing required output directory (--out)");
    std::filesystem::path p(dir);
    if (p.is_relative()) {
        if (const char* root = std::getenv("METRICRL_OUT_ROOT")) p = std::filesystem::path(root) / p;
    }
    return p;
}

// Run directories are immutable once a completion marker exists; re-running
// into the same path requires force, which clears the directory first.
class RunDir {
  public:
    static RunDir create(const std::filesystem::path& path, bool force) {
        namespace fs = std::filesystem;
        const fs::path marker = path / ".complete";
        if (fs::exists(marker)) {
            if (!force)
                throw UsageError("run directory '" + path.string() +
                                 "' is complete; pass --force to overwrite");
            fs::remove_all(path);
        }
        fs::create_directories(path);
        return RunDir(path);
    }

    const std::filesystem::path& path() const { return path_; }

    void write(const std::string& name, const std::string& content) const {
        atomic_write_file(path_ / name, content);
    }

    void finalize() const { atomic_write_file(path_ / ".complete", "ok\n"); }

  private:
    explicit RunDir(std::filesystem::path p) : path_(std::move(p)) {}
    std::filesystem::path path_;
};

}  // namespace metricrl
