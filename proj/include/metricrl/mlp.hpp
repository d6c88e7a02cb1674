#pragma once

// Fixed-architecture feed-forward network with exact reverse-mode
// backpropagation. Hidden layers are ReLU, the output layer is linear so
// latent points are unconstrained in R^n. Weights are initialized uniformly
// in [-1/sqrt(fan_in), 1/sqrt(fan_in)], biases at zero, which keeps initial
// latent distances O(1).

#include <cstddef>
#include <string>
#include <vector>

#include "metricrl/errors.hpp"
#include "metricrl/matrix.hpp"
#include "metricrl/rng.hpp"

namespace metricrl {

enum class Activation : int { Relu = 0, Identity = 1 };

struct MlpLayer {
    Matrix weight;  // out x in
    Vector bias;    // out
    Activation act = Activation::Relu;
};

struct MlpParams {
    std::vector<MlpLayer> layers;

    int input_width() const { return layers.empty() ? 0 : layers.front().weight.cols; }
    int output_width() const { return layers.empty() ? 0 : layers.back().weight.rows; }

    std::size_t parameter_count() const {
        std::size_t n = 0;
        for (const auto& l : layers) n += l.weight.data.size() + l.bias.size();
        return n;
    }

    bool operator==(const MlpParams& o) const {
        if (layers.size() != o.layers.size()) return false;
        for (std::size_t i = 0; i < layers.size(); ++i) {
            if (layers[i].weight.rows != o.layers[i].weight.rows ||
                layers[i].weight.cols != o.layers[i].weight.cols ||
                layers[i].weight.data != o.layers[i].weight.data ||
                layers[i].bias != o.layers[i].bias || layers[i].act != o.layers[i].act)
                return false;
        }
        return true;
    }
};

// Parameter-shaped accumulator, used for gradients and Adam moments.
struct MlpGrads {
    std::vector<Matrix> weight;
    std::vector<Vector> bias;

    static MlpGrads zeros_like(const MlpParams& p) {
        MlpGrads g;
        g.weight.reserve(p.layers.size());
        g.bias.reserve(p.layers.size());
        for (const auto& l : p.layers) {
            g.weight.emplace_back(l.weight.rows, l.weight.cols);
            g.bias.emplace_back(l.bias.size(), 0.0);
        }
        return g;
    }

    void clear() {
        for (auto& w : weight) w.fill(0.0);
        for (auto& b : bias) b.assign(b.size(), 0.0);
    }

    bool finite() const {
        for (const auto& w : weight)
            if (!all_finite(w)) return false;
        for (const auto& b : bias)
            if (!all_finite(b)) return false;
        return true;
    }
};

inline void validate_chain(const MlpParams& p) {
    if (p.layers.empty()) throw UsageError("mlp: no layers");
    for (std::size_t i = 1; i < p.layers.size(); ++i) {
        if (p.layers[i].weight.cols != p.layers[i - 1].weight.rows)
            throw UsageError("mlp: layer dimensions do not chain at layer " + std::to_string(i));
    }
    for (const auto& l : p.layers) {
        if (static_cast<int>(l.bias.size()) != l.weight.rows)
            throw UsageError("mlp: bias width does not match weight rows");
    }
}

// Default shape used across the repo: 3 hidden layers of 64 ReLU units.
inline std::vector<int> default_hidden() { return {64, 64, 64}; }

inline MlpParams make_mlp(int input, const std::vector<int>& hidden, int output, Rng& rng) {
    if (input <= 0 || output <= 0) throw UsageError("make_mlp: non-positive width");
    MlpParams p;
    int in = input;
    auto add_layer = [&](int out, Activation act) {
        MlpLayer layer;
        layer.weight = Matrix(out, in);
        const double scale = 1.0 / std::sqrt(static_cast<double>(in));
        for (auto& w : layer.weight.data) w = rng.uniform(-scale, scale);
        layer.bias.assign(static_cast<std::size_t>(out), 0.0);
        layer.act = act;
        p.layers.push_back(std::move(layer));
        in = out;
    };
    for (int h : hidden) add_layer(h, Activation::Relu);
    add_layer(output, Activation::Identity);
    return p;
}

// Per-layer pre-activations plus layer inputs; sufficient for exact backprop.
struct ForwardCache {
    Vector input;
    std::vector<Vector> pre;   // pre[i] = W_i * in_i + b_i
    std::vector<Vector> post;  // post[i] = act(pre[i])
};

inline Vector mlp_forward(const MlpParams& p, const Vector& x, ForwardCache* cache = nullptr) {
    if (p.layers.empty()) throw UsageError("mlp_forward: empty network");
    if (static_cast<int>(x.size()) != p.input_width())
        throw UsageError("mlp_forward: input width " + std::to_string(x.size()) + " != " +
                         std::to_string(p.input_width()));
    if (cache) {
        cache->input = x;
        cache->pre.assign(p.layers.size(), {});
        cache->post.assign(p.layers.size(), {});
    }
    Vector cur = x;
    Vector next;
    for (std::size_t i = 0; i < p.layers.size(); ++i) {
        const auto& l = p.layers[i];
        matvec(l.weight, cur, next);
        for (std::size_t j = 0; j < next.size(); ++j) next[j] += l.bias[j];
        if (cache) cache->pre[i] = next;
        if (l.act == Activation::Relu)
            for (auto& v : next) v = v > 0.0 ? v : 0.0;
        if (cache) cache->post[i] = next;
        cur.swap(next);
    }
    return cur;
}

// Accumulates scale * dL/dtheta into grads given dL/doutput. The cache must
// come from a forward call on the same parameters.
inline void mlp_backward(const MlpParams& p, const ForwardCache& cache, const Vector& d_output,
                         MlpGrads& grads, double scale = 1.0, Vector* d_input = nullptr) {
    if (cache.pre.size() != p.layers.size())
        throw UsageError("mlp_backward: cache does not match network depth");
    if (static_cast<int>(d_output.size()) != p.output_width())
        throw UsageError("mlp_backward: gradient width mismatch");
    Vector delta = d_output;
    Vector prev;
    for (int i = static_cast<int>(p.layers.size()) - 1; i >= 0; --i) {
        const auto& l = p.layers[i];
        if (l.act == Activation::Relu) {
            const Vector& pre = cache.pre[i];
            for (std::size_t j = 0; j < delta.size(); ++j)
                if (pre[j] <= 0.0) delta[j] = 0.0;
        }
        const Vector& layer_in = (i == 0) ? cache.input : cache.post[i - 1];
        add_outer(grads.weight[i], delta, layer_in, scale);
        axpy(scale, delta, grads.bias[i]);
        if (i > 0 || d_input) {
            matvec_transpose(l.weight, delta, prev);
            if (i == 0 && d_input) *d_input = prev;
            delta.swap(prev);
        }
    }
}

}  // namespace metricrl
