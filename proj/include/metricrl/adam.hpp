#pragma once

// Bias-corrected Adam. The protocol fixes only the learning rate (1e-3);
// beta1=0.9, beta2=0.999, eps=1e-8 are the standard defaults.

#include <cmath>
#include <cstdint>

#include "metricrl/errors.hpp"
#include "metricrl/mlp.hpp"

namespace metricrl {

struct AdamState {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    std::int64_t step_count = 0;
    MlpGrads first_moment;
    MlpGrads second_moment;

    static AdamState init(const MlpParams& params, double lr) {
        AdamState s;
        s.lr = lr;
        s.first_moment = MlpGrads::zeros_like(params);
        s.second_moment = MlpGrads::zeros_like(params);
        return s;
    }
};

inline void adam_step(AdamState& state, MlpParams& params, const MlpGrads& grads) {
    if (grads.weight.size() != params.layers.size())
        throw UsageError("adam_step: gradient shape mismatch");
    if (!grads.finite()) throw TrainingError("adam_step: non-finite gradient");
    state.step_count += 1;
    const double c1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step_count));
    const double c2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step_count));
    auto update = [&](double& p, double g, double& m, double& v) {
        m = state.beta1 * m + (1.0 - state.beta1) * g;
        v = state.beta2 * v + (1.0 - state.beta2) * g * g;
        const double m_hat = m / c1;
        const double v_hat = v / c2;
        p -= state.lr * m_hat / (std::sqrt(v_hat) + state.eps);
    };
    for (std::size_t l = 0; l < params.layers.size(); ++l) {
        auto& w = params.layers[l].weight.data;
        const auto& gw = grads.weight[l].data;
        auto& mw = state.first_moment.weight[l].data;
        auto& vw = state.second_moment.weight[l].data;
        if (w.size() != gw.size()) throw UsageError("adam_step: weight shape mismatch");
        for (std::size_t i = 0; i < w.size(); ++i) update(w[i], gw[i], mw[i], vw[i]);
        auto& b = params.layers[l].bias;
        const auto& gb = grads.bias[l];
        auto& mb = state.first_moment.bias[l];
        auto& vb = state.second_moment.bias[l];
        if (b.size() != gb.size()) throw UsageError("adam_step: bias shape mismatch");
        for (std::size_t i = 0; i < b.size(); ++i) update(b[i], gb[i], mb[i], vb[i]);
    }
}

}  // namespace metricrl
