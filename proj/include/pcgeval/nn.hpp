#pragma once

#include "pcgeval/rng.hpp"

#include <span>
#include <vector>

namespace pcgeval {

// Feed-forward network: tanh hidden layers, linear output. Parameters live
// in an external flat vector (layer by layer, row-major weights then biases)
// so the optimizer, checkpointing and finite-difference checks all see one
// contiguous block of 64-bit floats.
struct MlpShape {
    int input = 0;
    std::vector<int> hidden;
    int output = 0;

    int param_count() const;
    bool operator==(const MlpShape&) const = default;
};

// Scratch holding per-layer activations from the last forward pass.
struct MlpWorkspace {
    std::vector<std::vector<double>> activations; // [0] = input, back() = output
};

class Mlp {
public:
    explicit Mlp(MlpShape shape);

    const MlpShape& shape() const { return shape_; }
    int param_count() const { return param_count_; }

    // Uniform init scaled per layer: limit = gain * sqrt(6 / (fan_in + fan_out)),
    // biases zero. Hidden layers use hidden_gain, the output layer output_gain.
    void init_params(std::span<double> params, Rng& rng, double hidden_gain,
                     double output_gain) const;

    // Forward pass; activations cached in ws, output view returned.
    std::span<const double> forward(std::span<const double> params,
                                    std::span<const double> input, MlpWorkspace& ws) const;

    // Backward pass from dL/doutput using ws from the matching forward call.
    // Parameter gradients are accumulated into param_grad.
    void backward(std::span<const double> params, const MlpWorkspace& ws,
                  std::span<const double> output_grad, std::span<double> param_grad) const;

private:
    MlpShape shape_;
    std::vector<int> layer_in_;
    std::vector<int> layer_out_;
    std::vector<int> layer_offset_; // offset of each layer's block in the flat vector
    int param_count_ = 0;
};

// Softmax helpers shared by the policy head and its tests.
void softmax_inplace(std::span<double> logits);
double log_softmax_at(std::span<const double> logits, int index);

// Adam with bias correction over a flat parameter vector.
struct AdamState {
    std::vector<double> m;
    std::vector<double> v;
    std::int64_t step = 0;

    explicit AdamState(std::size_t n = 0) : m(n, 0.0), v(n, 0.0) {}
    bool operator==(const AdamState&) const = default;
};

void adam_update(std::span<double> params, std::span<const double> grad, AdamState& state,
                 double learning_rate, double beta1 = 0.9, double beta2 = 0.999,
                 double epsilon = 1e-8);

// Scales grad in place so its global L2 norm is at most max_norm; returns the
// pre-clip norm.
double clip_global_norm(std::span<double> grad, double max_norm);

} // namespace pcgeval
