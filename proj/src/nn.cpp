#include "pcgeval/nn.hpp"

#include <cmath>
#include <stdexcept>

namespace pcgeval {

int MlpShape::param_count() const {
    int count = 0;
    int in = input;
    for (int width : hidden) {
        count += in * width + width;
        in = width;
    }
    count += in * output + output;
    return count;
}

Mlp::Mlp(MlpShape shape) : shape_(std::move(shape)) {
    if (shape_.input <= 0 || shape_.output <= 0) {
        throw std::invalid_argument("Mlp: input and output dims must be positive");
    }
    int in = shape_.input;
    int offset = 0;
    for (int width : shape_.hidden) {
        layer_in_.push_back(in);
        layer_out_.push_back(width);
        layer_offset_.push_back(offset);
        offset += in * width + width;
        in = width;
    }
    layer_in_.push_back(in);
    layer_out_.push_back(shape_.output);
    layer_offset_.push_back(offset);
    offset += in * shape_.output + shape_.output;
    param_count_ = offset;
}

void Mlp::init_params(std::span<double> params, Rng& rng, double hidden_gain,
                      double output_gain) const {
    if (params.size() != static_cast<std::size_t>(param_count_)) {
        throw std::invalid_argument("Mlp::init_params: wrong parameter count");
    }
    const std::size_t layers = layer_in_.size();
    for (std::size_t layer = 0; layer < layers; ++layer) {
        const int in = layer_in_[layer];
        const int out = layer_out_[layer];
        const double gain = layer + 1 == layers ? output_gain : hidden_gain;
        const double limit = gain * std::sqrt(6.0 / (in + out));
        double* block = params.data() + layer_offset_[layer];
        for (int i = 0; i < in * out; ++i) {
            block[i] = rng.uniform(-limit, limit);
        }
        for (int i = 0; i < out; ++i) {
            block[in * out + i] = 0.0;
        }
    }
}

std::span<const double> Mlp::forward(std::span<const double> params,
                                     std::span<const double> input, MlpWorkspace& ws) const {
    const std::size_t layers = layer_in_.size();
    ws.activations.resize(layers + 1);
    ws.activations[0].assign(input.begin(), input.end());

    for (std::size_t layer = 0; layer < layers; ++layer) {
        const int in = layer_in_[layer];
        const int out = layer_out_[layer];
        const double* w = params.data() + layer_offset_[layer];
        const double* b = w + in * out;
        const std::vector<double>& x = ws.activations[layer];
        std::vector<double>& y = ws.activations[layer + 1];
        y.assign(static_cast<std::size_t>(out), 0.0);

        for (int row = 0; row < out; ++row) {
            const double* w_row = w + row * in;
            double acc = b[row];
            for (int col = 0; col < in; ++col) {
                acc += w_row[col] * x[col];
            }
            y[row] = layer + 1 == layers ? acc : std::tanh(acc);
        }
    }
    return ws.activations.back();
}

void Mlp::backward(std::span<const double> params, const MlpWorkspace& ws,
                   std::span<const double> output_grad, std::span<double> param_grad) const {
    const std::size_t layers = layer_in_.size();
    std::vector<double> delta(output_grad.begin(), output_grad.end());

    for (std::size_t layer = layers; layer-- > 0;) {
        const int in = layer_in_[layer];
        const int out = layer_out_[layer];
        const double* w = params.data() + layer_offset_[layer];
        double* gw = param_grad.data() + layer_offset_[layer];
        double* gb = gw + in * out;
        const std::vector<double>& x = ws.activations[layer];

        for (int row = 0; row < out; ++row) {
            const double d = delta[row];
            double* gw_row = gw + row * in;
            for (int col = 0; col < in; ++col) {
                gw_row[col] += d * x[col];
            }
            gb[row] += d;
        }

        if (layer == 0) {
            break;
        }
        std::vector<double> prev(static_cast<std::size_t>(in), 0.0);
        for (int row = 0; row < out; ++row) {
            const double d = delta[row];
            const double* w_row = w + row * in;
            for (int col = 0; col < in; ++col) {
                prev[col] += d * w_row[col];
            }
        }
        // Activation of the previous layer is tanh; derivative from the
        // cached post-activation value.
        for (int col = 0; col < in; ++col) {
            const double a = x[col];
            prev[col] *= 1.0 - a * a;
        }
        delta = std::move(prev);
    }
}

void softmax_inplace(std::span<double> logits) {
    double max_logit = logits[0];
    for (double v : logits) {
        max_logit = std::max(max_logit, v);
    }
    double sum = 0.0;
    for (double& v : logits) {
        v = std::exp(v - max_logit);
        sum += v;
    }
    for (double& v : logits) {
        v /= sum;
    }
}

double log_softmax_at(std::span<const double> logits, int index) {
    double max_logit = logits[0];
    for (double v : logits) {
        max_logit = std::max(max_logit, v);
    }
    double sum = 0.0;
    for (double v : logits) {
        sum += std::exp(v - max_logit);
    }
    return logits[index] - max_logit - std::log(sum);
}

void adam_update(std::span<double> params, std::span<const double> grad, AdamState& state,
                 double learning_rate, double beta1, double beta2, double epsilon) {
    if (state.m.size() != params.size()) {
        throw std::invalid_argument("adam_update: state size mismatch");
    }
    ++state.step;
    const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(state.step));
    for (std::size_t i = 0; i < params.size(); ++i) {
        state.m[i] = beta1 * state.m[i] + (1.0 - beta1) * grad[i];
        state.v[i] = beta2 * state.v[i] + (1.0 - beta2) * grad[i] * grad[i];
        const double m_hat = state.m[i] / bc1;
        const double v_hat = state.v[i] / bc2;
        params[i] -= learning_rate * m_hat / (std::sqrt(v_hat) + epsilon);
    }
}

double clip_global_norm(std::span<double> grad, double max_norm) {
    double sq = 0.0;
    for (double g : grad) {
        sq += g * g;
    }
    const double norm = std::sqrt(sq);
    if (norm > max_norm && norm > 0.0) {
        const double scale = max_norm / norm;
        for (double& g : grad) {
            g *= scale;
        }
    }
    return norm;
}

} // namespace pcgeval
