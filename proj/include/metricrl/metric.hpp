#pragma once

// Distance-monotonic embedding training. The objective over sampled triples
// (s, s', s_r) — (s, s') a transition, s_r an independent random state — is
//
//   raw:  (||z'-z|| - 1)^2 - lambda * ||z_r - z||
//   log:  (||z'-z|| - 1)^2 - lambda * log(||z_r - z||)
//
// The first term pins connected states at unit latent distance, the second
// pushes independently sampled states apart (it is bounded only on a single
// connected component, hence the meta-state machinery). The log variant is
// the default; it stabilizes long-horizon training. Negative-pair distances
// below clamp_eps are clamped and counted; the clamped region contributes no
// gradient.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "metricrl/adam.hpp"
#include "metricrl/checkpoint.hpp"
#include "metricrl/dataset.hpp"
#include "metricrl/errors.hpp"
#include "metricrl/graph.hpp"
#include "metricrl/matrix.hpp"
#include "metricrl/mlp.hpp"
#include "metricrl/rng.hpp"

namespace metricrl {

enum class LossVariant { Raw, Log };
enum class MetaMode { Off, Connect, Train };

inline std::string loss_variant_name(LossVariant v) { return v == LossVariant::Raw ? "raw" : "log"; }
inline LossVariant parse_loss_variant(const std::string& s) {
    if (s == "raw") return LossVariant::Raw;
    if (s == "log") return LossVariant::Log;
    throw UsageError("unknown loss variant: '" + s + "' (expected raw|log)");
}

inline std::string meta_mode_name(MetaMode m) {
    switch (m) {
        case MetaMode::Off: return "off";
        case MetaMode::Connect: return "connect";
        case MetaMode::Train: return "train";
    }
    return "?";
}
inline MetaMode parse_meta_mode(const std::string& s) {
    if (s == "off") return MetaMode::Off;
    if (s == "connect") return MetaMode::Connect;
    if (s == "train") return MetaMode::Train;
    throw UsageError("unknown meta mode: '" + s + "' (expected off|connect|train)");
}

struct MetricConfig {
    int latent = 128;
    double lambda = 1.0;
    LossVariant variant = LossVariant::Log;
    double clamp_eps = 1e-6;
    int batch = 256;
    int batches_per_epoch = 500;
    int epochs = 100;
    double lr = 1e-3;
    std::uint64_t seed = 0;
    MetaMode meta = MetaMode::Off;
    std::vector<int> hidden = default_hidden();
    int audit_triples = 512;  // per-epoch sampled monotonicity audit; 0 disables

    void validate() const {
        if (latent <= 0 || batch <= 0 || batches_per_epoch <= 0 || epochs <= 0)
            throw UsageError("metric config: dims and batch counts must be positive");
        if (lambda < 0.0) throw UsageError("metric config: lambda must be >= 0");
        if (clamp_eps <= 0.0) throw UsageError("metric config: clamp_eps must be > 0");
    }
};

struct LatentLossValue {
    double loss = 0.0;
    Vector d_z, d_next, d_rand;  // gradients wrt the three latent points
    bool clamped = false;        // negative-pair distance hit clamp_eps
    bool degenerate_pair = false;
};

inline LatentLossValue latent_loss(LossVariant variant, const Vector& z, const Vector& z_next,
                                   const Vector& z_rand, double lambda, double clamp_eps) {
    const std::size_t n = z.size();
    if (z_next.size() != n || z_rand.size() != n)
        throw UsageError("latent_loss: latent dimension mismatch");
    LatentLossValue out;
    out.d_z.assign(n, 0.0);
    out.d_next.assign(n, 0.0);
    out.d_rand.assign(n, 0.0);

    double du = 0.0, dv = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double ui = z_next[i] - z[i];
        const double vi = z_rand[i] - z[i];
        du += ui * ui;
        dv += vi * vi;
    }
    du = std::sqrt(du);
    dv = std::sqrt(dv);

    const double residual = du - 1.0;
    out.loss = residual * residual;
    if (du > clamp_eps) {
        const double c = 2.0 * residual / du;
        for (std::size_t i = 0; i < n; ++i) {
            const double g = c * (z_next[i] - z[i]);
            out.d_next[i] += g;
            out.d_z[i] -= g;
        }
    } else {
        out.degenerate_pair = true;
    }

    const double dv_c = std::max(dv, clamp_eps);
    if (dv <= clamp_eps) out.clamped = true;
    if (variant == LossVariant::Raw) {
        out.loss -= lambda * dv_c;
        if (!out.clamped) {
            const double c = -lambda / dv;
            for (std::size_t i = 0; i < n; ++i) {
                const double g = c * (z_rand[i] - z[i]);
                out.d_rand[i] += g;
                out.d_z[i] -= g;
            }
        }
    } else {
        out.loss -= lambda * std::log(dv_c);
        if (!out.clamped) {
            const double c = -lambda / (dv * dv);
            for (std::size_t i = 0; i < n; ++i) {
                const double g = c * (z_rand[i] - z[i]);
                out.d_rand[i] += g;
                out.d_z[i] -= g;
            }
        }
    }
    return out;
}

struct EmbeddingModel {
    MlpParams net;
    std::uint64_t seed = 0;

    Vector embed(const Vector& features) const { return mlp_forward(net, features); }

    Checkpoint checkpoint() const { return {"embedding", seed, net}; }
    static EmbeddingModel from_checkpoint(const Checkpoint& ck) {
        if (ck.role != "embedding")
            throw DataError("checkpoint role is '" + ck.role + "', expected 'embedding'");
        return {ck.params, ck.seed};
    }
};

// Latents of every graph node, meta node included (it has its own encoding).
inline std::vector<Vector> embed_nodes(const EmbeddingModel& model, const DatasetGraph& graph) {
    std::vector<Vector> out;
    out.reserve(graph.features.size());
    for (const auto& f : graph.features) out.push_back(model.embed(f));
    return out;
}

// ---- monotonicity audit ----

struct MonoWitness {
    int s1 = 0, s2 = 0, s3 = 0;
    int d13 = 0, d23 = 0;
    double z13 = 0.0, z23 = 0.0;
};

struct MonoReport {
    double rate = 0.0;
    std::int64_t violations = 0;
    std::int64_t evaluated = 0;
    std::int64_t resampled_infinite = 0;
    bool exhaustive = false;
    std::vector<MonoWitness> witnesses;  // capped at 100
};

// Violation: d_S(s1,s3) < d_S(s2,s3) while d_Z(z1,z3) > d_Z(z2,z3) + tol.
// Geodesic ties never count. Exhaustive enumeration over all ordered triples
// when the node count is small enough; uniform sampling otherwise, with
// infinite-geodesic triples resampled and counted.
inline MonoReport monotonicity_violation_rate(const std::vector<Vector>& latents,
                                              const GeodesicCache& geo, std::int64_t triples,
                                              Rng rng, double tol = 1e-9,
                                              int exhaustive_threshold = 60) {
    MonoReport report;
    const DatasetGraph& g = geo.graph();
    std::vector<int> nodes;
    for (int i = 0; i < g.node_count(); ++i)
        if (i != g.meta_node) nodes.push_back(i);
    const int n = static_cast<int>(nodes.size());
    if (n < 3) return report;

    auto add_witness = [&](int a, int b, int c, int dac, int dbc, double zac, double zbc) {
        if (report.witnesses.size() < 100) report.witnesses.push_back({a, b, c, dac, dbc, zac, zbc});
    };

    if (n <= exhaustive_threshold) {
        report.exhaustive = true;
        for (int ci = 0; ci < n; ++ci) {
            const int c = nodes[ci];
            const auto& dist = geo.from(c);
            std::vector<double> zdist(static_cast<std::size_t>(n));
            for (int i = 0; i < n; ++i) zdist[i] = distance(latents[nodes[i]], latents[c]);
            for (int ai = 0; ai < n; ++ai) {
                if (ai == ci || dist[nodes[ai]] == kUnreachable) continue;
                for (int bi = 0; bi < n; ++bi) {
                    if (bi == ci || bi == ai || dist[nodes[bi]] == kUnreachable) continue;
                    ++report.evaluated;
                    if (dist[nodes[ai]] < dist[nodes[bi]] && zdist[ai] > zdist[bi] + tol) {
                        ++report.violations;
                        add_witness(nodes[ai], nodes[bi], c, dist[nodes[ai]], dist[nodes[bi]],
                                    zdist[ai], zdist[bi]);
                    }
                }
            }
        }
    } else {
        std::int64_t attempts = 0;
        const std::int64_t max_attempts = triples * 20 + 1000;
        while (report.evaluated < triples && attempts < max_attempts) {
            ++attempts;
            const int ai = rng.below_int(n);
            const int bi = rng.below_int(n);
            const int ci = rng.below_int(n);
            if (ai == bi || bi == ci || ai == ci) continue;
            const int a = nodes[ai], b = nodes[bi], c = nodes[ci];
            const auto& dist = geo.from(c);
            if (dist[a] == kUnreachable || dist[b] == kUnreachable) {
                ++report.resampled_infinite;
                continue;
            }
            ++report.evaluated;
            const double zac = distance(latents[a], latents[c]);
            const double zbc = distance(latents[b], latents[c]);
            if (dist[a] < dist[b] && zac > zbc + tol) {
                ++report.violations;
                add_witness(a, b, c, dist[a], dist[b], zac, zbc);
            }
        }
    }
    if (report.evaluated > 0)
        report.rate = static_cast<double>(report.violations) / static_cast<double>(report.evaluated);
    return report;
}

// ---- training ----

struct MetricEpochStats {
    int epoch = 0;
    double mean_loss = 0.0;
    double constraint_residual = 0.0;  // mean | ||z'-z|| - 1 |
    std::int64_t clamp_count = 0;
    double violation_rate_sample = 0.0;
};

struct MetricTrainResult {
    EmbeddingModel model;
    std::vector<MetricEpochStats> log;
    DatasetGraph graph;  // training graph, meta-augmented if requested
    int components_before_meta = 1;
};

inline std::string metric_log_csv(const std::vector<MetricEpochStats>& log) {
    std::string out = "epoch,mean_loss,constraint_residual,clamp_count,violation_rate_sample\n";
    for (const auto& row : log) {
        out += std::to_string(row.epoch) + "," + format_double(row.mean_loss) + "," +
               format_double(row.constraint_residual) + "," + std::to_string(row.clamp_count) +
               "," + format_double(row.violation_rate_sample) + "\n";
    }
    return out;
}

// Incremental embedding trainer usable on any triple stream.
class EmbeddingStreamTrainer {
  public:
    struct Triple {
        const Vector* s;
        const Vector* next;
        const Vector* random;
    };

    struct BatchStats {
        double mean_loss = 0.0;
        double residual_sum = 0.0;
        std::int64_t clamps = 0;
    };

    EmbeddingStreamTrainer(int feature_width, const MetricConfig& config) : config_(config) {
        config_.validate();
        Rng rng(config_.seed);
        model_.seed = config_.seed;
        model_.net = make_mlp(feature_width, config_.hidden, config_.latent, rng);
        adam_ = AdamState::init(model_.net, config_.lr);
        grads_ = MlpGrads::zeros_like(model_.net);
    }

    BatchStats update(const std::vector<Triple>& batch) {
        grads_.clear();
        const double scale = 1.0 / static_cast<double>(batch.size());
        BatchStats stats;
        for (const auto& triple : batch) {
            const Vector z = mlp_forward(model_.net, *triple.s, &cache_s_);
            const Vector z_next = mlp_forward(model_.net, *triple.next, &cache_next_);
            const Vector z_rand = mlp_forward(model_.net, *triple.random, &cache_rand_);
            const LatentLossValue lv =
                latent_loss(config_.variant, z, z_next, z_rand, config_.lambda, config_.clamp_eps);
            if (!std::isfinite(lv.loss))
                throw TrainingError("embedding: non-finite loss at update " +
                                    std::to_string(updates_) + " triple (" +
                                    feature_key(*triple.s) + ") (" + feature_key(*triple.next) +
                                    ") (" + feature_key(*triple.random) + ")");
            stats.mean_loss += lv.loss;
            stats.residual_sum += std::abs(distance(z_next, z) - 1.0);
            if (lv.clamped) ++stats.clamps;
            mlp_backward(model_.net, cache_s_, lv.d_z, grads_, scale);
            mlp_backward(model_.net, cache_next_, lv.d_next, grads_, scale);
            mlp_backward(model_.net, cache_rand_, lv.d_rand, grads_, scale);
        }
        stats.mean_loss *= scale;
        if (!grads_.finite())
            throw TrainingError("embedding: non-finite gradient at update " +
                                std::to_string(updates_));
        adam_step(adam_, model_.net, grads_);
        ++updates_;
        return stats;
    }

    const EmbeddingModel& model() const { return model_; }
    std::int64_t updates() const { return updates_; }

  private:
    MetricConfig config_;
    EmbeddingModel model_;
    AdamState adam_;
    MlpGrads grads_;
    ForwardCache cache_s_, cache_next_, cache_rand_;
    std::int64_t updates_ = 0;
};

inline MetricTrainResult train_metric(const Dataset& ds, const MetricConfig& config) {
    config.validate();
    if (ds.records.empty()) throw UsageError("train_metric: empty dataset");

    MetricTrainResult result;
    result.graph = build_transition_graph(transition_pairs(ds));
    result.components_before_meta = result.graph.component_count();

    PairSampler sampler(ds);
    const int width = static_cast<int>(ds.records.front().s.size());
    if (result.components_before_meta > 1) {
        if (config.meta == MetaMode::Off)
            throw DataError("train_metric: dataset graph has " +
                            std::to_string(result.components_before_meta) +
                            " connected components; the contrastive term is unbounded on a "
                            "disconnected graph. Enable meta-state augmentation (meta = connect "
                            "or meta = train) or repair the dataset.");
        const auto terminals = terminal_states(ds);
        add_meta_state(result.graph, terminals);
        if (config.meta == MetaMode::Train)
            sampler.add_meta_pairs(terminals, meta_state_features(width));
    } else if (config.meta == MetaMode::Train || config.meta == MetaMode::Connect) {
        const auto terminals = terminal_states(ds);
        if (!terminals.empty()) {
            add_meta_state(result.graph, terminals);
            if (config.meta == MetaMode::Train)
                sampler.add_meta_pairs(terminals, meta_state_features(width));
        }
    }

    EmbeddingStreamTrainer trainer(width, config);
    Rng rng = Rng(config.seed).derive(0x5A3);
    GeodesicCache geo(result.graph);
    std::vector<EmbeddingStreamTrainer::Triple> batch(static_cast<std::size_t>(config.batch));

    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        double loss_sum = 0.0;
        double residual_sum = 0.0;
        std::int64_t clamps = 0;
        for (int b = 0; b < config.batches_per_epoch; ++b) {
            for (int i = 0; i < config.batch; ++i) {
                const auto t = sampler.sample(rng);
                batch[i] = {t.s, t.next, t.random};
            }
            const auto stats = trainer.update(batch);
            loss_sum += stats.mean_loss;
            residual_sum += stats.residual_sum;
            clamps += stats.clamps;
        }
        MetricEpochStats stats;
        stats.epoch = epoch;
        stats.mean_loss = loss_sum / config.batches_per_epoch;
        stats.constraint_residual =
            residual_sum / (static_cast<double>(config.batches_per_epoch) * config.batch);
        stats.clamp_count = clamps;
        if (config.audit_triples > 0) {
            const auto latents = embed_nodes(trainer.model(), result.graph);
            const MonoReport audit =
                monotonicity_violation_rate(latents, geo, config.audit_triples,
                                            rng.derive(0xA0D17 + static_cast<std::uint64_t>(epoch)));
            stats.violation_rate_sample = audit.rate;
        }
        result.log.push_back(stats);
    }
    result.model = trainer.model();
    return result;
}

// Hand-built exact isometry for 1-D line worlds: features (x) with x >= 0 map
// to the latent point (x, 0, ..., 0). Used as a fixture where the theorem's
// hypothesis must hold exactly.
inline EmbeddingModel line_embedding_fixture(int latent_dim = 4) {
    EmbeddingModel model;
    auto passthrough = [](int out_w, int in_w, Activation act) {
        MlpLayer l;
        l.weight = Matrix(out_w, in_w);
        l.weight.at(0, 0) = 1.0;
        l.bias.assign(static_cast<std::size_t>(out_w), 0.0);
        l.act = act;
        return l;
    };
    model.net.layers.push_back(passthrough(4, 1, Activation::Relu));
    model.net.layers.push_back(passthrough(4, 4, Activation::Relu));
    model.net.layers.push_back(passthrough(4, 4, Activation::Relu));
    model.net.layers.push_back(passthrough(latent_dim, 4, Activation::Identity));
    return model;
}

// Mean latent distance over sampled node pairs; used to detect collapse.
inline double mean_pairwise_latent_distance(const std::vector<Vector>& latents, int samples,
                                            Rng rng) {
    if (latents.size() < 2) return 0.0;
    double sum = 0.0;
    for (int i = 0; i < samples; ++i) {
        const auto a = rng.below(latents.size());
        auto b = rng.below(latents.size());
        while (b == a) b = rng.below(latents.size());
        sum += distance(latents[a], latents[b]);
    }
    return sum / samples;
}

}  // namespace metricrl
