#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <filesystem>
#include <unordered_set>

#include "metricrl/dataset.hpp"
#include "metricrl/graph.hpp"

using namespace metricrl;
namespace fs = std::filesystem;

namespace {

EnvSpec make_spec(EnvKind kind, int dims, int cells) {
    EnvSpec s;
    s.kind = kind;
    s.dims = dims;
    s.cells = cells;
    return s;
}

fs::path temp_dir(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("metricrl_test_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

double episode_success_rate(const Dataset& ds) {
    std::int64_t episodes = ds.manifest.episodes;
    std::int64_t successes = 0;
    for (const auto& r : ds.records)
        if (r.terminal) ++successes;
    return static_cast<double>(successes) / static_cast<double>(episodes);
}

}  // namespace

TEST_CASE("same seed produces byte-identical dataset files") {
    DiscreteEnv env(make_spec(EnvKind::Empty, 2, 6));
    const Dataset a = collect(env, Tier::Medium, 30, 42);
    const Dataset b = collect(env, Tier::Medium, 30, 42);
    REQUIRE(encode_records(a.records) == encode_records(b.records));
    const auto dir_a = temp_dir("det_a");
    const auto dir_b = temp_dir("det_b");
    write_dataset(a, dir_a);
    write_dataset(b, dir_b);
    REQUIRE(read_file(records_path(dir_a)) == read_file(records_path(dir_b)));
    REQUIRE(read_file(manifest_path(dir_a)) == read_file(manifest_path(dir_b)));
    const Dataset c = collect(env, Tier::Medium, 30, 43);
    REQUIRE(encode_records(a.records) != encode_records(c.records));
}

TEST_CASE("executed actions match the tier's reference policy at rate (1-eps) + eps/|A|") {
    DiscreteEnv env(make_spec(EnvKind::Empty, 2, 10));
    const DatasetGraph g = build_state_graph(env);
    const ValueTable values = optimal_value(g, goal_nodes(g, env.spec().goals), 0.95);
    const OraclePolicy oracle = optimal_greedy_policy(env, g, values);

    auto check = [&](Tier tier, std::int64_t episodes, auto&& reference) {
        const Dataset ds = collect(env, tier, episodes, 7);
        REQUIRE(ds.records.size() >= 10000);
        std::int64_t matches = 0;
        for (const auto& r : ds.records)
            if (r.action == reference(env.decode(r.s))) ++matches;
        const double n = static_cast<double>(ds.records.size());
        const double p = (1.0 - tier_epsilon(tier)) + tier_epsilon(tier) / env.action_count();
        const double sigma = std::sqrt(p * (1.0 - p) / n);
        const double observed = static_cast<double>(matches) / n;
        REQUIRE(std::abs(observed - p) < 3.0 * sigma + 1e-12);
    };

    SECTION("medium tier references the optimal policy") {
        check(Tier::Medium, 800, [&](const EnvState& s) { return oracle.act(env, s); });
    }
    SECTION("high tier references the optimal policy") {
        check(Tier::High, 1500, [&](const EnvState& s) { return oracle.act(env, s); });
    }
    SECTION("low tier references the seeded untrained agent") {
        const auto reference = low_tier_reference(env, 7);
        check(Tier::Low, 300, [&](const EnvState& s) { return reference.act(env, s); });
    }
}

TEST_CASE("high tier: episodes that start adjacent to the goal mostly end in one step") {
    DiscreteEnv env(make_spec(EnvKind::Empty, 2, 6));
    const Dataset ds = collect(env, Tier::High, 1000, 3);
    std::unordered_map<std::int64_t, int> episode_len;
    std::unordered_map<std::int64_t, std::string> episode_start;
    for (const auto& r : ds.records) {
        ++episode_len[r.episode];
        if (r.step == 0) episode_start[r.episode] = feature_key(r.s);
    }
    int adjacent = 0, one_step = 0;
    for (const auto& [ep, start] : episode_start) {
        if (start == "5;4" || start == "4;5") {
            ++adjacent;
            if (episode_len[ep] == 1) ++one_step;
        }
    }
    REQUIRE(adjacent > 20);
    REQUIRE(static_cast<double>(one_step) / adjacent > 0.8);
}

TEST_CASE("dataset round-trips exactly through the file pair") {
    DiscreteEnv env(make_spec(EnvKind::DoorKey, 2, 6));
    const Dataset ds = collect(env, Tier::High, 5, 11);
    const auto dir = temp_dir("roundtrip");
    write_dataset(ds, dir);
    const Dataset back = read_dataset(dir);
    REQUIRE(back.records.size() == ds.records.size());
    REQUIRE(encode_records(back.records) == encode_records(ds.records));
    REQUIRE(back.manifest.tier == Tier::High);
    REQUIRE(back.manifest.epsilon == 0.1);
    REQUIRE(back.manifest.seed == 11);
    REQUIRE(back.manifest.env.kind == EnvKind::DoorKey);
}

TEST_CASE("empty dataset is a manifest-only artifact") {
    DiscreteEnv env(make_spec(EnvKind::Empty, 2, 4));
    Dataset ds;
    ds.manifest.env = env.spec();
    ds.manifest.tier = Tier::Low;
    ds.manifest.epsilon = 0.9;
    const auto dir = temp_dir("empty");
    write_dataset(ds, dir);
    REQUIRE(read_file(records_path(dir)).empty());
    const Dataset back = read_dataset(dir);
    REQUIRE(back.records.empty());
}

TEST_CASE("single-record dataset round-trips bit-exactly") {
    DiscreteEnv env(make_spec(EnvKind::Empty, 2, 4));
    Dataset ds;
    ds.manifest.env = env.spec();
    ds.records.push_back({0, 0, {0.0, 0.0}, 1, 0.0, {0.0, 0.0}, false});
    ds.manifest.transitions = 1;
    const auto dir = temp_dir("single");
    write_dataset(ds, dir);
    const Dataset back = read_dataset(dir);
    REQUIRE(back.records.size() == 1);
    REQUIRE(back.records[0].s == ds.records[0].s);
    REQUIRE(back.records[0].action == 1);
}

TEST_CASE("checksum failures and version mismatches are typed I/O errors") {
    DiscreteEnv env(make_spec(EnvKind::Empty, 2, 10));
    const Dataset ds = collect(env, Tier::Low, 1000, 9);
    REQUIRE(ds.records.size() > 50000 / 2);
    const auto dir = temp_dir("checksum");
    write_dataset(ds, dir);

    // checksum in the manifest matches a recomputation over the records bytes
    const std::string records = read_file(records_path(dir));
    const auto kv = read_key_value_file(manifest_path(dir));
    REQUIRE(parse_u64(kv.get("checksum"), "checksum") == fnv1a64(records));

    // corrupt one byte -> checksum failure
    std::string corrupt = records;
    corrupt[corrupt.size() / 2] = 'x';
    atomic_write_file(records_path(dir), corrupt);
    REQUIRE_THROWS_AS(read_dataset(dir), DataError);
    atomic_write_file(records_path(dir), records);

    // truncation -> checksum failure
    atomic_write_file(records_path(dir), records.substr(0, records.size() - 10));
    REQUIRE_THROWS_AS(read_dataset(dir), DataError);
    atomic_write_file(records_path(dir), records);

    // version bump -> typed error
    std::string manifest = read_file(manifest_path(dir));
    manifest.replace(manifest.find("format_version = 1"), 18, "format_version = 9");
    atomic_write_file(manifest_path(dir), manifest);
    REQUIRE_THROWS_AS(read_dataset(dir), DataError);
}

TEST_CASE("every collected record re-simulates exactly") {
    for (EnvKind kind : {EnvKind::Empty, EnvKind::Hypermaze, EnvKind::DoorKey}) {
        DiscreteEnv env(make_spec(kind, 2, kind == EnvKind::Empty ? 6 : 8));
        const Dataset ds = collect(env, Tier::Medium, 40, 5);
        REQUIRE(dataset_consistency_failures(ds, env).empty());
        Dataset broken = ds;
        broken.records[3].reward += 1.0;
        const auto bad = dataset_consistency_failures(broken, env);
        REQUIRE(bad.size() == 1);
        REQUIRE(bad[0] == 3);
    }
}

TEST_CASE("tier success rates are non-decreasing from low to high") {
    for (EnvKind kind : {EnvKind::Empty, EnvKind::Hypermaze, EnvKind::DoorKey}) {
        DiscreteEnv env(make_spec(kind, 2, kind == EnvKind::Hypermaze ? 8 : 6));
        const double low = episode_success_rate(collect(env, Tier::Low, 120, 21));
        const double medium = episode_success_rate(collect(env, Tier::Medium, 120, 21));
        const double high = episode_success_rate(collect(env, Tier::High, 120, 21));
        REQUIRE(low <= medium + 1e-12);
        REQUIRE(medium <= high + 1e-12);
    }
}

TEST_CASE("low-tier 1000-episode dataset covers nearly all of Empty 10x10") {
    DiscreteEnv env(make_spec(EnvKind::Empty, 2, 10));
    const Dataset ds = collect(env, Tier::Low, 1000, 13);
    std::unordered_set<std::string> states;
    for (const auto& r : ds.records) {
        states.insert(feature_key(r.s));
        states.insert(feature_key(r.next));
    }
    REQUIRE(states.size() >= 99);
}

TEST_CASE("pair sampler: support, uniformity, reproducibility") {
    SECTION("single transition: the random state is s or s'") {
        Dataset ds;
        ds.records.push_back({0, 0, {0.0}, 0, 0.0, {1.0}, false});
        ds.manifest.transitions = 1;
        PairSampler sampler(ds);
        Rng rng(1);
        for (int i = 0; i < 50; ++i) {
            const auto t = sampler.sample(rng);
            REQUIRE(((*t.random == Vector{0.0}) || (*t.random == Vector{1.0})));
        }
    }

    SECTION("chi-squared uniformity over transition indices") {
        DiscreteEnv env(make_spec(EnvKind::Empty, 2, 10));
        Dataset ds;
        // 100 synthetic records so expected counts are exact
        for (int i = 0; i < 100; ++i)
            ds.records.push_back({i, 0, {static_cast<double>(i), 0.0}, 0, 0.0,
                                  {static_cast<double>(i), 1.0}, false});
        ds.manifest.transitions = 100;
        PairSampler sampler(ds);
        Rng rng(99);
        std::vector<int> counts(100, 0);
        const int draws = 100000;
        for (int i = 0; i < draws; ++i) {
            const auto t = sampler.sample(rng);
            ++counts[static_cast<int>((*t.s)[0])];
        }
        const double expected = static_cast<double>(draws) / 100.0;
        double chi2 = 0.0;
        for (int c : counts) chi2 += (c - expected) * (c - expected) / expected;
        // 99 degrees of freedom: p > 0.01 iff chi2 below the 0.99 quantile
        REQUIRE(chi2 < 134.64);
    }

    SECTION("fixed rng seed reproduces the batch sequence") {
        DiscreteEnv env(make_spec(EnvKind::Empty, 2, 5));
        const Dataset ds = collect(env, Tier::Medium, 10, 2);
        PairSampler sampler(ds);
        Rng r1(5), r2(5);
        for (int i = 0; i < 200; ++i) {
            const auto a = sampler.sample(r1);
            const auto b = sampler.sample(r2);
            REQUIRE(a.s == b.s);
            REQUIRE(a.next == b.next);
            REQUIRE(a.random == b.random);
        }
    }
}
