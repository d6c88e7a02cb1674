// End-to-end exercise of every CLI verb against the real binary: exit codes,
// golden metrics.csv headers and row counts, determinism and precedence.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "metricrl/textio.hpp"

namespace fs = std::filesystem;

namespace {

std::string g_cli;
fs::path g_root;
int g_failures = 0;

struct RunResult {
    int code = -1;
    std::string output;
};

RunResult run(const std::string& args) {
    const fs::path out_file = g_root / "cmd_output.txt";
    const std::string cmd = g_cli + " " + args + " > " + out_file.string() + " 2>&1";
    const int status = std::system(cmd.c_str());
    RunResult result;
    result.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    std::ifstream in(out_file);
    std::stringstream ss;
    ss << in.rdbuf();
    result.output = ss.str();
    return result;
}

void check(bool ok, const std::string& what) {
    if (ok) {
        std::printf("ok   %s\n", what.c_str());
    } else {
        std::printf("FAIL %s\n", what.c_str());
        ++g_failures;
    }
}

void check_eq(int got, int want, const std::string& what) {
    if (got != want) std::printf("     (got %d, want %d)\n", got, want);
    check(got == want, what);
}

std::string first_line(const fs::path& p) {
    std::ifstream in(p);
    std::string line;
    std::getline(in, line);
    return line;
}

std::size_t line_count(const fs::path& p) {
    const std::string text = metricrl::read_file(p);
    return static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n'));
}

std::string slurp(const fs::path& p) { return metricrl::read_file(p); }

}  // namespace

int main(int argc, char** argv) {
    if (argc < 2) {
        std::fprintf(stderr, "usage: cli_e2e <path-to-metricrl-binary>\n");
        return 2;
    }
    g_cli = argv[1];
    g_root = fs::temp_directory_path() / "metricrl_e2e";
    fs::remove_all(g_root);
    fs::create_directories(g_root);
    const std::string root = g_root.string();

    // usage errors
    check_eq(run("train").code, 1, "train with no args exits 1 (missing --data)");
    check(run("train").output.find("--data") != std::string::npos,
          "train error names the missing --data");
    check_eq(run("bogus-verb").code, 1, "unknown verb exits 1");
    check_eq(run("--help").code, 0, "--help exits 0");
    check(run("gen-data --help").output.find("low|medium|high") != std::string::npos,
          "help text documents tier values");

    // gen-data: determinism + overwrite protection
    const std::string data = root + "/data";
    check_eq(run("gen-data --env empty --dims 2 --cells 6 --tier medium --episodes 60 --seed 3 "
                 "--out " + data).code,
             0, "gen-data succeeds");
    check(fs::exists(g_root / "data/records.txt") && fs::exists(g_root / "data/manifest.txt"),
          "dataset files exist");
    check_eq(run("gen-data --env empty --dims 2 --cells 6 --tier medium --episodes 60 --seed 3 "
                 "--out " + data).code,
             1, "re-running into a complete directory exits 1 without --force");
    check_eq(run("gen-data --env empty --dims 2 --cells 6 --tier medium --episodes 60 --seed 3 "
                 "--force --out " + data + "_b").code,
             0, "gen-data to a second directory");
    check(slurp(g_root / "data/records.txt") == slurp(g_root / "data_b/records.txt"),
          "same seed gives byte-identical records");

    // train + metrics.csv golden header
    const std::string train_dir = root + "/train";
    check_eq(run("train --data " + data + " --latent 8 --hidden 16,16 --epochs 3 --batches 30 "
                 "--batch 64 --seed 1 --audit-triples 32 --out " + train_dir).code,
             0, "train succeeds");
    check(first_line(g_root / "train/metrics.csv") ==
              "epoch,mean_loss,constraint_residual,clamp_count,violation_rate_sample",
          "train metrics.csv header");
    check_eq(static_cast<int>(line_count(g_root / "train/metrics.csv")), 4,
             "train metrics.csv rows = epochs + header");
    check(fs::exists(g_root / "train/model.ckpt"), "train writes a checkpoint");
    check(fs::exists(g_root / "train/config.txt"), "train echoes the resolved config");

    // config precedence: file sets lambda=2, flag sets lambda=3
    {
        std::ofstream cfg(g_root / "sweep.cfg");
        cfg << "[metric]\nlambda = 2\n";
    }
    const std::string prec_dir = root + "/train_prec";
    check_eq(run("train --config " + root + "/sweep.cfg --data " + data +
                 " --latent 8 --hidden 16,16 --epochs 1 --batches 10 --batch 32 --lambda 3 "
                 "--out " + prec_dir).code,
             0, "train with config file and overriding flag");
    check(slurp(g_root / "train_prec/config.txt").find("lambda = 3") != std::string::npos,
          "flag beats config file in the echoed config");

    // echoed config round-trip: rerun purely from the echo, identical model
    const std::string echo_dir = root + "/train_echo";
    check_eq(run("train --config " + root + "/train/config.txt --out " + echo_dir).code, 0,
             "train from the echoed config");
    check(slurp(g_root / "train/model.ckpt") == slurp(g_root / "train_echo/model.ckpt"),
          "echoed config reproduces the checkpoint byte for byte");

    // unknown config key
    {
        std::ofstream cfg(g_root / "bad.cfg");
        cfg << "[metric]\nlatnet = 8\n";
    }
    const auto bad = run("train --config " + root + "/bad.cfg --data " + data + " --out " + root +
                         "/train_bad");
    check_eq(bad.code, 1, "unknown config key exits 1");
    check(bad.output.find("metric.latnet") != std::string::npos,
          "unknown-key error names the exact key path");

    // eval from the embedding checkpoint
    const std::string eval_dir = root + "/eval";
    check_eq(run("eval --data " + data + " --model " + train_dir +
                 "/model.ckpt --episodes 40 --seed 5 --out " + eval_dir).code,
             0, "eval succeeds");
    check(first_line(g_root / "eval/metrics.csv") ==
              "episode,start,steps,success,discounted_return",
          "eval metrics.csv header");
    check_eq(static_cast<int>(line_count(g_root / "eval/metrics.csv")), 41,
             "eval metrics.csv rows = episodes + header");

    // eval with the oracle and random policies
    check_eq(run("eval --data " + data + " --policy oracle --episodes 20 --seed 2 --out " + root +
                 "/eval_oracle").code,
             0, "oracle eval");
    check(slurp(g_root / "eval_oracle/report.txt").find("success_rate = 1") != std::string::npos,
          "oracle evaluates to success rate 1");
    check_eq(run("eval --data " + data + " --policy random --episodes 20 --seed 2 --out " + root +
                 "/eval_random").code,
             0, "random eval");

    // actors
    check_eq(run("train-bc --data " + data + " --hidden 16,16 --epochs 2 --batches 30 --batch 64 "
                 "--seed 4 --out " + root + "/bc").code,
             0, "train-bc");
    check_eq(run("train-actor --data " + data + " --model " + train_dir +
                 "/model.ckpt --hidden 16,16 --epochs 2 --batches 30 --batch 64 --seed 4 --out " +
                 root + "/actor").code,
             0, "train-actor");
    check_eq(run("train-dqn --data " + data + " --hidden 16,16 --epochs 2 --batches 50 "
                 "--batch 64 --seed 4 --out " + root + "/dqn").code,
             0, "train-dqn");
    check_eq(run("eval --data " + data + " --model " + root +
                 "/bc/model.ckpt --episodes 20 --seed 6 --out " + root + "/eval_bc").code,
             0, "eval bc checkpoint");
    check_eq(run("eval --data " + data + " --model " + root +
                 "/dqn/model.ckpt --episodes 20 --seed 6 --out " + root + "/eval_dqn").code,
             0, "eval dqn checkpoint");

    // consistency + monotonicity checks
    check_eq(run("check-data --data " + data).code, 0, "check-data passes on a clean dataset");
    const auto mono = run("check-mono --data " + data + " --model " + train_dir +
                          "/model.ckpt --triples 2000 --seed 1 --out " + root + "/mono");
    check_eq(mono.code, 0, "check-mono runs");
    check(mono.output.find("violation_rate = ") != std::string::npos,
          "check-mono prints the rate");

    // verify-theorem on the shipped fixture
    const auto fixture = run("verify-theorem --builtin-fixture");
    check_eq(fixture.code, 0, "verify-theorem fixture runs");
    check(fixture.output.find("agreement = 1") != std::string::npos,
          "fixture prints agreement 1.0");
    check(fixture.output.find("implication_ok = 1") != std::string::npos,
          "fixture implication holds");

    // corrupt dataset -> data error
    {
        std::string records = slurp(g_root / "data/records.txt");
        records[records.size() / 2] = 'x';
        std::ofstream out(g_root / "data/records.txt", std::ios::trunc);
        out << records;
    }
    check_eq(run("train --data " + data + " --epochs 1 --batches 5 --batch 16 --latent 4 "
                 "--hidden 8 --out " + root + "/train_corrupt").code,
             2, "corrupt dataset exits 2");
    // restore
    check_eq(run("gen-data --env empty --dims 2 --cells 6 --tier medium --episodes 60 --seed 3 "
                 "--force --out " + data).code,
             0, "regenerate the dataset");

    // training error -> exit 3
    check_eq(run("train --data " + data + " --lr 1e300 --epochs 1 --batches 5 --batch 16 "
                 "--latent 4 --hidden 8 --out " + root + "/train_blowup").code,
             3, "absurd learning rate exits 3");

    // sweeps (tiny budgets)
    const std::string quality_dir = root + "/quality";
    check_eq(run("sweep-quality --env empty --dims 2 --cells 5 --methods metricrl,random "
                 "--seeds 1 --data-episodes 40 --eval-episodes 20 --latent 8 --hidden 16,16 "
                 "--epochs 1 --batches 20 --batch 32 --out " + quality_dir).code,
             0, "sweep-quality");
    check(first_line(g_root / "quality/metrics.csv") ==
              "tier,method,seed,success_rate,mean_return,mean_length,episodes,status",
          "sweep-quality metrics.csv header");
    check_eq(static_cast<int>(line_count(g_root / "quality/metrics.csv")), 7,
             "sweep-quality rows = tiers x methods x seeds + header");
    check(fs::exists(g_root / "quality/quality.svg"), "sweep-quality emits an svg");

    const std::string cx_dir = root + "/complexity";
    check_eq(run("sweep-complexity --methods metricrl,dqn --sizes 4 --vary cells --fixed 2 "
                 "--budget 2500 --eval-every 100 --batch 64 --latent 4 --hidden 16,16 --seed 1 "
                 "--out " + cx_dir).code,
             0, "sweep-complexity on the trivial corridor");
    check(first_line(g_root / "complexity/metrics.csv") ==
              "vary,size,method,updates_to_solve,censored,budget,status",
          "sweep-complexity metrics.csv header");
    check_eq(static_cast<int>(line_count(g_root / "complexity/metrics.csv")), 3,
             "sweep-complexity rows = methods x sizes + header");
    check(fs::exists(g_root / "complexity/complexity.svg"), "sweep-complexity emits an svg");

    // multi-goal study
    const std::string mg_data = root + "/mg_data";
    check_eq(run("gen-data --env empty --dims 2 --cells 5 --multi-goal --tier low --episodes 80 "
                 "--seed 9 --out " + mg_data).code,
             0, "gen-data multi-goal");
    check_eq(run("train --data " + mg_data + " --latent 8 --hidden 16,16 --epochs 4 --batches 40 "
                 "--batch 64 --seed 2 --audit-triples 0 --out " + root + "/mg_train").code,
             0, "train on the multi-goal dataset");
    const std::string mg_dir = root + "/mg_study";
    check_eq(run("multi-goal --env empty --dims 2 --cells 5 --multi-goal --model " + root +
                 "/mg_train/model.ckpt --gammas 0.5,0.9,0.95,0.99,0.999 --out " + mg_dir).code,
             0, "multi-goal study");
    check(first_line(g_root / "mg_study/metrics.csv") ==
              "gamma,start,d_low,d_high,analytic_pref,chosen,steps",
          "multi-goal metrics.csv header");
    check(fs::exists(g_root / "mg_study/crossover.csv") &&
              fs::exists(g_root / "mg_study/value_field.csv"),
          "multi-goal emits crossover and field CSVs");
    check(fs::exists(g_root / "mg_study/goalmap_0.999.svg"), "multi-goal emits goal maps");

    // plot regeneration
    fs::remove(g_root / "quality/quality.svg");
    check_eq(run("plot --run " + quality_dir).code, 0, "plot quality run");
    check(fs::exists(g_root / "quality/quality.svg"), "plot regenerates quality.svg");
    fs::remove(g_root / "complexity/complexity.svg");
    check_eq(run("plot --run " + cx_dir).code, 0, "plot complexity run");
    check(fs::exists(g_root / "complexity/complexity.svg"), "plot regenerates complexity.svg");

    // METRICRL_OUT_ROOT redirects relative out dirs
    ::setenv("METRICRL_OUT_ROOT", (root + "/redirect").c_str(), 1);
    check_eq(run("eval --data " + data + " --policy random --episodes 5 --seed 1 --out sub/run")
                 .code,
             0, "eval with METRICRL_OUT_ROOT");
    check(fs::exists(g_root / "redirect/sub/run/report.txt"),
          "outputs landed under METRICRL_OUT_ROOT");
    ::unsetenv("METRICRL_OUT_ROOT");

    std::printf("\n%s\n", g_failures == 0 ? "ALL E2E CHECKS PASSED" : "E2E CHECKS FAILED");
    return g_failures == 0 ? 0 : 1;
}
