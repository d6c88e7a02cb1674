#pragma once

// Policy extraction and baselines over a fixed dataset:
//
//   policy gradient  maximizes E[(V(s') - V(s)) log pi(a|s)] with the value
//                    frozen (no gradient flows into the embedding); actions
//                    come from the dataset only, so the update never queries
//                    out-of-distribution actions.
//   behavior cloning cross-entropy fit to the dataset action labels.
//   DQN              standard TD target r + gamma * (1-terminal) * max_a' Q',
//                    with a periodically synchronized target copy and the
//                    usual Huber (clipped-delta) regression loss. Works both
//                    offline (sampling the dataset) and on a caller-provided
//                    transition stream.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "metricrl/adam.hpp"
#include "metricrl/checkpoint.hpp"
#include "metricrl/dataset.hpp"
#include "metricrl/errors.hpp"
#include "metricrl/mlp.hpp"
#include "metricrl/rng.hpp"

namespace metricrl {

struct PolicyModel {
    MlpParams net;
    std::uint64_t seed = 0;

    Vector logits(const Vector& features) const { return mlp_forward(net, features); }

    Vector probabilities(const Vector& features) const {
        Vector l = logits(features);
        double max_l = l[0];
        for (double v : l) max_l = std::max(max_l, v);
        double sum = 0.0;
        for (auto& v : l) {
            v = std::exp(v - max_l);
            sum += v;
        }
        for (auto& v : l) v /= sum;
        return l;
    }

    int argmax_action(const Vector& features) const {
        const Vector l = logits(features);
        int best = 0;
        for (std::size_t i = 1; i < l.size(); ++i)
            if (l[i] > l[best]) best = static_cast<int>(i);
        return best;
    }

    int sample_action(const Vector& features, Rng& rng) const {
        const Vector p = probabilities(features);
        const double u = rng.uniform01();
        double acc = 0.0;
        for (std::size_t i = 0; i < p.size(); ++i) {
            acc += p[i];
            if (u < acc) return static_cast<int>(i);
        }
        return static_cast<int>(p.size()) - 1;
    }

    Checkpoint checkpoint(const std::string& role) const { return {role, seed, net}; }
};

struct ActorConfig {
    int batch = 256;
    int batches_per_epoch = 500;
    int epochs = 100;
    double lr = 1e-3;
    std::uint64_t seed = 0;
    std::vector<int> hidden = default_hidden();
};

namespace detail {

// Cross-entropy step on (features, action) pairs weighted by w (w = 1 for BC,
// w = advantage for the policy gradient; negative weights push mass away).
inline void weighted_nll_update(MlpParams& net, AdamState& adam, MlpGrads& grads,
                                const std::vector<const Vector*>& features,
                                const std::vector<int>& actions, const std::vector<double>& weights) {
    grads.clear();
    const double scale = 1.0 / static_cast<double>(features.size());
    ForwardCache cache;
    for (std::size_t i = 0; i < features.size(); ++i) {
        const Vector logit = mlp_forward(net, *features[i], &cache);
        double max_l = logit[0];
        for (double v : logit) max_l = std::max(max_l, v);
        double sum = 0.0;
        Vector p = logit;
        for (auto& v : p) {
            v = std::exp(v - max_l);
            sum += v;
        }
        for (auto& v : p) v /= sum;
        // d(-w log p_a)/dlogit_j = -w (1{j=a} - p_j)
        Vector d = p;
        for (auto& v : d) v *= weights[i];
        d[actions[i]] -= weights[i];
        mlp_backward(net, cache, d, grads, scale);
    }
    adam_step(adam, net, grads);
}

}  // namespace detail

inline PolicyModel train_bc(const Dataset& ds, int action_count, const ActorConfig& config) {
    if (ds.records.empty()) throw UsageError("train_bc: empty dataset");
    Rng rng(config.seed);
    PolicyModel policy;
    policy.seed = config.seed;
    const int width = static_cast<int>(ds.records.front().s.size());
    policy.net = make_mlp(width, config.hidden, action_count, rng);
    AdamState adam = AdamState::init(policy.net, config.lr);
    MlpGrads grads = MlpGrads::zeros_like(policy.net);
    std::vector<const Vector*> features(config.batch);
    std::vector<int> actions(config.batch);
    std::vector<double> weights(config.batch, 1.0);
    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        for (int b = 0; b < config.batches_per_epoch; ++b) {
            for (int i = 0; i < config.batch; ++i) {
                const auto& r = ds.records[rng.below(ds.records.size())];
                features[i] = &r.s;
                actions[i] = r.action;
            }
            detail::weighted_nll_update(policy.net, adam, grads, features, actions, weights);
        }
    }
    return policy;
}

// Advantage-weighted likelihood actor; state_value must be the frozen critic.
inline PolicyModel train_pg_actor(const Dataset& ds,
                                  const std::function<double(const Vector&)>& state_value,
                                  int action_count, const ActorConfig& config) {
    if (ds.records.empty()) throw UsageError("train_pg_actor: empty dataset");
    // Advantages are fixed during training; compute once.
    std::vector<double> advantage(ds.records.size());
    for (std::size_t i = 0; i < ds.records.size(); ++i) {
        advantage[i] = state_value(ds.records[i].next) - state_value(ds.records[i].s);
        if (!std::isfinite(advantage[i]))
            throw TrainingError("train_pg_actor: non-finite advantage at record " +
                                std::to_string(i));
    }
    Rng rng(config.seed);
    PolicyModel policy;
    policy.seed = config.seed;
    const int width = static_cast<int>(ds.records.front().s.size());
    policy.net = make_mlp(width, config.hidden, action_count, rng);
    AdamState adam = AdamState::init(policy.net, config.lr);
    MlpGrads grads = MlpGrads::zeros_like(policy.net);
    std::vector<const Vector*> features(config.batch);
    std::vector<int> actions(config.batch);
    std::vector<double> weights(config.batch);
    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        for (int b = 0; b < config.batches_per_epoch; ++b) {
            for (int i = 0; i < config.batch; ++i) {
                const auto idx = rng.below(ds.records.size());
                features[i] = &ds.records[idx].s;
                actions[i] = ds.records[idx].action;
                weights[i] = advantage[idx];
            }
            detail::weighted_nll_update(policy.net, adam, grads, features, actions, weights);
        }
    }
    return policy;
}

// ---- DQN ----

// Defaults tuned for stability: Adam at 1e-3 with a fast-moving target makes
// the clipped TD deltas keep a persistent sign, and the RMS normalisation
// then marches every weight at full speed — the classic blow-up. A smaller
// rate plus a slow target copy keeps the regression converged between syncs.
struct DqnConfig {
    double gamma = 0.95;
    int batch = 256;
    double lr = 3e-4;
    int target_sync = 500;        // updates between target-network copies
    std::uint64_t seed = 0;
    std::vector<int> hidden = default_hidden();
    double divergence_threshold = 1e6;
    int divergence_patience = 50;  // consecutive over-threshold updates
};

// TD backup target for one transition.
inline double dqn_td_target(double gamma, double reward, bool terminal, double max_next_q) {
    return reward + (terminal ? 0.0 : gamma * max_next_q);
}

struct QModel {
    MlpParams net;
    std::uint64_t seed = 0;

    Vector q_values(const Vector& features) const { return mlp_forward(net, features); }

    int greedy(const Vector& features) const {
        const Vector q = q_values(features);
        int best = 0;
        for (std::size_t i = 1; i < q.size(); ++i)
            if (q[i] > q[best]) best = static_cast<int>(i);
        return best;
    }

    Checkpoint checkpoint() const { return {"q", seed, net}; }
};

// Incremental DQN usable on any transition stream.
class DqnTrainer {
  public:
    DqnTrainer(int feature_width, int action_count, DqnConfig config)
        : config_(config), action_count_(action_count) {
        Rng rng(config.seed);
        model_.seed = config.seed;
        model_.net = make_mlp(feature_width, config.hidden, action_count, rng);
        target_ = model_.net;
        adam_ = AdamState::init(model_.net, config.lr);
        grads_ = MlpGrads::zeros_like(model_.net);
    }

    // One optimizer step on a batch of transitions. Returns the batch loss.
    double update(const std::vector<const TransitionRecord*>& batch) {
        grads_.clear();
        const double scale = 1.0 / static_cast<double>(batch.size());
        double loss = 0.0;
        ForwardCache cache;
        for (const auto* r : batch) {
            double max_next = 0.0;
            if (!r->terminal) {
                const Vector qn = mlp_forward(target_, r->next);
                max_next = qn[0];
                for (double v : qn) max_next = std::max(max_next, v);
            }
            const double target = dqn_td_target(config_.gamma, r->reward, r->terminal, max_next);
            const Vector q = mlp_forward(model_.net, r->s, &cache);
            const double delta = q[r->action] - target;
            // Huber loss, transition point 1: quadratic near zero, linear tails.
            loss += std::abs(delta) <= 1.0 ? 0.5 * delta * delta : std::abs(delta) - 0.5;
            Vector d(q.size(), 0.0);
            d[r->action] = std::clamp(delta, -1.0, 1.0);
            mlp_backward(model_.net, cache, d, grads_, scale);
        }
        loss *= scale;
        if (!std::isfinite(loss))
            throw TrainingError("dqn: non-finite loss at update " + std::to_string(updates_));
        adam_step(adam_, model_.net, grads_);
        ++updates_;
        if (updates_ % config_.target_sync == 0) target_ = model_.net;
        over_threshold_ = (loss > config_.divergence_threshold) ? over_threshold_ + 1 : 0;
        if (over_threshold_ >= config_.divergence_patience) diverged_ = true;
        return loss;
    }

    const QModel& model() const { return model_; }
    std::int64_t updates() const { return updates_; }
    bool diverged() const { return diverged_; }
    int action_count() const { return action_count_; }

  private:
    DqnConfig config_;
    int action_count_;
    QModel model_;
    MlpParams target_;
    AdamState adam_;
    MlpGrads grads_;
    std::int64_t updates_ = 0;
    int over_threshold_ = 0;
    bool diverged_ = false;
};

struct DqnResult {
    QModel model;
    bool diverged = false;
    std::int64_t updates = 0;
};

inline DqnResult train_dqn_offline(const Dataset& ds, int action_count, const DqnConfig& config,
                                   int epochs, int batches_per_epoch) {
    if (ds.records.empty()) throw UsageError("train_dqn_offline: empty dataset");
    DqnTrainer trainer(static_cast<int>(ds.records.front().s.size()), action_count, config);
    Rng rng(Rng(config.seed).derive_seed(0xD0));
    std::vector<const TransitionRecord*> batch(config.batch);
    for (int epoch = 0; epoch < epochs; ++epoch) {
        for (int b = 0; b < batches_per_epoch; ++b) {
            for (int i = 0; i < config.batch; ++i)
                batch[i] = &ds.records[rng.below(ds.records.size())];
            trainer.update(batch);
        }
    }
    return {trainer.model(), trainer.diverged(), trainer.updates()};
}

}  // namespace metricrl
