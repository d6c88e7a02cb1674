#pragma once

// Offline dataset collection and file I/O.
//
// Tiers mix uniform random actions with a reference policy at epsilon
// 0.9 / 0.5 / 0.1 (low / medium / high). Medium and high reference the exact
// optimal policy; low references a seeded untrained agent (argmax of a
// randomly initialised action-value network), matching how low-quality
// corpora are produced in practice.
//
// Records file: one line per transition,
//   episode,t,<s features ';'-joined>,action,reward,<s' features>,terminal
// with doubles at shortest round-trip precision. The manifest is a separate
// key-value file carrying the env spec, tier bookkeeping and an FNV-1a 64
// checksum of the records file.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "metricrl/env.hpp"
#include "metricrl/errors.hpp"
#include "metricrl/graph.hpp"
#include "metricrl/mlp.hpp"
#include "metricrl/oracle.hpp"
#include "metricrl/rng.hpp"
#include "metricrl/textio.hpp"

namespace metricrl {

enum class Tier { Low, Medium, High };

inline double tier_epsilon(Tier t) {
    switch (t) {
        case Tier::Low: return 0.9;
        case Tier::Medium: return 0.5;
        case Tier::High: return 0.1;
    }
    return 0.9;
}

inline std::string tier_name(Tier t) {
    switch (t) {
        case Tier::Low: return "low";
        case Tier::Medium: return "medium";
        case Tier::High: return "high";
    }
    return "?";
}

inline Tier parse_tier(const std::string& s) {
    if (s == "low") return Tier::Low;
    if (s == "medium") return Tier::Medium;
    if (s == "high") return Tier::High;
    throw UsageError("unknown tier: '" + s + "' (expected low|medium|high)");
}

struct TransitionRecord {
    std::int64_t episode = 0;
    int step = 0;
    Vector s;
    int action = 0;
    double reward = 0.0;
    Vector next;
    bool terminal = false;
};

inline constexpr std::uint32_t kDatasetFormatVersion = 1;

struct DatasetManifest {
    EnvSpec env;
    Tier tier = Tier::Low;
    double epsilon = 0.9;
    std::int64_t episodes = 0;
    std::int64_t transitions = 0;
    std::uint64_t seed = 0;
    std::uint32_t format_version = kDatasetFormatVersion;
    std::uint64_t checksum = 0;
};

struct Dataset {
    DatasetManifest manifest;
    std::vector<TransitionRecord> records;
};

// Deterministic "untrained agent": greedy over a freshly initialised network.
class UntrainedAgentPolicy {
  public:
    UntrainedAgentPolicy(const DiscreteEnv& env, std::uint64_t seed) {
        Rng rng(seed);
        net_ = make_mlp(env.feature_width(), default_hidden(), env.action_count(), rng);
    }

    int act(const DiscreteEnv& env, const EnvState& s) const {
        const Vector logits = mlp_forward(net_, env.encode(s));
        int best = 0;
        for (std::size_t i = 1; i < logits.size(); ++i)
            if (logits[i] > logits[best]) best = static_cast<int>(i);
        return best;
    }

  private:
    MlpParams net_;
};

// The low tier's reference policy derives from the collection seed; exposed
// so audits can rebuild the exact same policy.
inline UntrainedAgentPolicy low_tier_reference(const DiscreteEnv& env, std::uint64_t collect_seed) {
    return UntrainedAgentPolicy(env, Rng(collect_seed).derive_seed(0xB0F));
}

inline Dataset collect(const DiscreteEnv& env, Tier tier, std::int64_t episodes,
                       std::uint64_t seed, double gamma = 0.95) {
    if (episodes < 1) throw UsageError("collect: episodes must be >= 1");
    Rng root(seed);

    std::function<int(const EnvState&)> reference;
    std::optional<UntrainedAgentPolicy> untrained;
    OraclePolicy oracle;
    if (tier == Tier::Low) {
        untrained.emplace(low_tier_reference(env, seed));
        reference = [&env, &untrained](const EnvState& s) { return untrained->act(env, s); };
    } else {
        const DatasetGraph graph = build_state_graph(env);
        const ValueTable values = optimal_value(graph, goal_nodes(graph, env.spec().goals), gamma);
        oracle = optimal_greedy_policy(env, graph, values);
        reference = [&env, &oracle](const EnvState& s) { return oracle.act(env, s); };
    }

    const auto starts = env.start_states();
    if (starts.empty()) throw UsageError("collect: env has no start states");
    const double eps = tier_epsilon(tier);
    const int max_len = env.max_episode_len();

    Dataset ds;
    ds.manifest.env = env.spec();
    ds.manifest.tier = tier;
    ds.manifest.epsilon = eps;
    ds.manifest.episodes = episodes;
    ds.manifest.seed = seed;
    for (std::int64_t e = 0; e < episodes; ++e) {
        Rng er = root.derive(static_cast<std::uint64_t>(e) + 1);
        EnvState s = starts[er.below(starts.size())];
        for (int t = 0; t < max_len; ++t) {
            const int a = (er.uniform01() < eps) ? er.below_int(env.action_count()) : reference(s);
            const StepResult step = env.transition(s, a);
            ds.records.push_back(
                {e, t, env.encode(s), a, step.reward, env.encode(step.next), step.terminal});
            s = step.next;
            if (step.terminal) break;
        }
    }
    ds.manifest.transitions = static_cast<std::int64_t>(ds.records.size());
    return ds;
}

inline std::string encode_records(const std::vector<TransitionRecord>& records) {
    std::string out;
    for (const auto& r : records) {
        out += std::to_string(r.episode);
        out += ',';
        out += std::to_string(r.step);
        out += ',';
        out += feature_key(r.s);
        out += ',';
        out += std::to_string(r.action);
        out += ',';
        out += format_double(r.reward);
        out += ',';
        out += feature_key(r.next);
        out += ',';
        out += r.terminal ? '1' : '0';
        out += '\n';
    }
    return out;
}

inline std::vector<TransitionRecord> decode_records(const std::string& text,
                                                    const std::string& origin) {
    std::vector<TransitionRecord> records;
    std::size_t begin = 0;
    int line_no = 0;
    while (begin < text.size()) {
        std::size_t end = text.find('\n', begin);
        if (end == std::string::npos)
            throw DataError(origin + ": truncated records file (missing final newline)");
        const std::string line = text.substr(begin, end - begin);
        begin = end + 1;
        ++line_no;
        if (line.empty()) continue;
        const auto parts = split(line, ',');
        if (parts.size() != 7)
            throw DataError(origin + ":" + std::to_string(line_no) + ": malformed record");
        TransitionRecord r;
        r.episode = parse_int(parts[0], "episode");
        r.step = static_cast<int>(parse_int(parts[1], "step"));
        r.s = parse_features(parts[2]);
        r.action = static_cast<int>(parse_int(parts[3], "action"));
        r.reward = parse_double(parts[4], "reward");
        r.next = parse_features(parts[5]);
        if (parts[6] != "0" && parts[6] != "1")
            throw DataError(origin + ":" + std::to_string(line_no) + ": bad terminal flag");
        r.terminal = parts[6] == "1";
        records.push_back(std::move(r));
    }
    return records;
}

inline std::string manifest_text(const DatasetManifest& m) {
    std::string out;
    out += "format_version = " + std::to_string(m.format_version) + "\n";
    out += "tier = " + tier_name(m.tier) + "\n";
    out += "epsilon = " + format_double(m.epsilon) + "\n";
    out += "episodes = " + std::to_string(m.episodes) + "\n";
    out += "transitions = " + std::to_string(m.transitions) + "\n";
    out += "seed = " + std::to_string(m.seed) + "\n";
    out += "checksum = " + std::to_string(m.checksum) + "\n";
    env_spec_to_kv(m.env, out, "env");
    return out;
}

inline DatasetManifest manifest_from_kv(const KeyValueFile& kv, const std::string& origin) {
    DatasetManifest m;
    m.format_version = static_cast<std::uint32_t>(parse_int(kv.get("format_version"), "format_version"));
    if (m.format_version != kDatasetFormatVersion)
        throw DataError(origin + ": unsupported dataset format version " +
                        std::to_string(m.format_version));
    m.tier = parse_tier(kv.get("tier"));
    m.epsilon = parse_double(kv.get("epsilon"), "epsilon");
    if (m.epsilon != tier_epsilon(m.tier))
        throw DataError(origin + ": epsilon does not match tier table");
    m.episodes = parse_int(kv.get("episodes"), "episodes");
    m.transitions = parse_int(kv.get("transitions"), "transitions");
    m.seed = parse_u64(kv.get("seed"), "seed");
    m.checksum = parse_u64(kv.get("checksum"), "checksum");
    m.env = env_spec_from_kv(kv, "env");
    return m;
}

inline std::filesystem::path records_path(const std::filesystem::path& dir) {
    return dir / "records.txt";
}
inline std::filesystem::path manifest_path(const std::filesystem::path& dir) {
    return dir / "manifest.txt";
}

inline void write_dataset(const Dataset& ds, const std::filesystem::path& dir) {
    if (ds.manifest.transitions != static_cast<std::int64_t>(ds.records.size()))
        throw UsageError("write_dataset: manifest transition count inconsistent");
    const std::string records = encode_records(ds.records);
    DatasetManifest m = ds.manifest;
    m.checksum = fnv1a64(records);
    atomic_write_file(records_path(dir), records);
    atomic_write_file(manifest_path(dir), manifest_text(m));
}

inline Dataset read_dataset(const std::filesystem::path& dir) {
    const auto mpath = manifest_path(dir);
    Dataset ds;
    ds.manifest = manifest_from_kv(read_key_value_file(mpath), mpath.string());
    const std::string records = read_file(records_path(dir));
    if (fnv1a64(records) != ds.manifest.checksum)
        throw DataError(records_path(dir).string() + ": checksum mismatch (corrupt records file)");
    ds.records = decode_records(records, records_path(dir).string());
    if (static_cast<std::int64_t>(ds.records.size()) != ds.manifest.transitions)
        throw DataError(mpath.string() + ": transition count does not match records file");
    return ds;
}

// Re-simulates every record under the env; returns indices of records whose
// (reward, next state, terminal flag) disagree with the transition function.
inline std::vector<std::size_t> dataset_consistency_failures(const Dataset& ds,
                                                             const DiscreteEnv& env) {
    std::vector<std::size_t> bad;
    for (std::size_t i = 0; i < ds.records.size(); ++i) {
        const auto& r = ds.records[i];
        const StepResult step = env.transition(env.decode(r.s), r.action);
        if (env.encode(step.next) != r.next || step.reward != r.reward ||
            step.terminal != r.terminal)
            bad.push_back(i);
    }
    return bad;
}

inline std::vector<std::pair<Vector, Vector>> transition_pairs(const Dataset& ds) {
    std::vector<std::pair<Vector, Vector>> out;
    out.reserve(ds.records.size());
    for (const auto& r : ds.records) out.emplace_back(r.s, r.next);
    return out;
}

// Unique terminal states (s' of terminal records), in first-seen order.
inline std::vector<Vector> terminal_states(const Dataset& ds) {
    std::vector<Vector> out;
    std::unordered_set<std::string> seen;
    for (const auto& r : ds.records)
        if (r.terminal && seen.insert(feature_key(r.next)).second) out.push_back(r.next);
    return out;
}

// Batch sampler for the embedding loss: (s, s') uniform over positive pairs,
// s_r uniform over all state occurrences, independent of the pair. Blocked
// moves recorded as self-transitions are excluded from the positive pool —
// they sit at graph distance 0, not 1 — but still contribute occurrences to
// the random-state pool. Synthetic meta pairs, when enabled, join both pools
// as ordinary entries.
class PairSampler {
  public:
    explicit PairSampler(const Dataset& ds) {
        pairs_.reserve(ds.records.size());
        pool_.reserve(2 * ds.records.size());
        for (const auto& r : ds.records) {
            if (r.s != r.next) pairs_.emplace_back(&r.s, &r.next);
            pool_.push_back(&r.s);
            pool_.push_back(&r.next);
        }
        if (pairs_.empty())
            throw UsageError("pair sampler: dataset has no transitions between distinct states");
    }

    void add_meta_pairs(const std::vector<Vector>& terminals, Vector meta) {
        meta_feature_ = std::move(meta);
        meta_terminals_ = terminals;
        for (const auto& t : meta_terminals_) {
            pairs_.emplace_back(&t, &meta_feature_);
            pool_.push_back(&t);
            pool_.push_back(&meta_feature_);
        }
    }

    struct Triple {
        const Vector* s;
        const Vector* next;
        const Vector* random;
    };

    Triple sample(Rng& rng) const {
        const auto& pair = pairs_[rng.below(pairs_.size())];
        return {pair.first, pair.second, pool_[rng.below(pool_.size())]};
    }

    std::size_t positive_count() const { return pairs_.size(); }

  private:
    std::vector<std::pair<const Vector*, const Vector*>> pairs_;
    std::vector<const Vector*> pool_;
    std::vector<Vector> meta_terminals_;
    Vector meta_feature_;
};

}  // namespace metricrl
