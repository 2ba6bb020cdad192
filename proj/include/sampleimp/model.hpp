#pragma once

// Fixed-topology regressor (LSTM over a window, dense scalar head) with an
// exact hand-written reverse pass. A bias-free linear probe shares the same
// interface so optimizer and training code can be checked on a convex model.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sampleimp/tensor.hpp"

namespace sampleimp {

enum class ModelKind { lstm, linear_probe };

struct Topology {
    ModelKind kind = ModelKind::lstm;
    std::size_t timesteps = 1;
    std::size_t input_width = 1;
    std::size_t hidden = 32;  // unused by linear_probe
    std::size_t output = 1;

    friend bool operator==(const Topology&, const Topology&) = default;
};

// Throws ConfigError on a zero dimension.
void validate(const Topology& topology);

std::string to_string(ModelKind kind);
ModelKind model_kind_from_string(const std::string& name);

// One contiguous slice of the flat parameter vector.
struct ParamBlock {
    std::string name;
    std::size_t offset = 0;
    std::size_t rows = 0;
    std::size_t cols = 0;
    bool is_bias = false;

    std::size_t size() const noexcept { return rows * cols; }
};

// Parameter layout in storage order. For the LSTM:
//   lstm.W  (4h x (i+h))  gate rows ordered input, forget, cell, output;
//                         columns are [x_t, h_{t-1}]
//   lstm.b  (4h)
//   dense.W (o x h)
//   dense.b (o)
std::vector<ParamBlock> parameter_blocks(const Topology& topology);

// Closed form: 4(h(h+i)+h) + h*o + o for the LSTM, timesteps*i*o for the probe.
std::size_t parameter_count(const Topology& topology);

// Rough multiply-add count for one forward+backward pass on one sample.
std::uint64_t flops_per_sample(const Topology& topology);

struct ModelState {
    Topology topology;
    std::vector<double> params;
    std::uint64_t init_seed = 0;

    std::size_t size() const noexcept { return params.size(); }
    friend bool operator==(const ModelState&, const ModelState&) = default;
};

struct GradientVector {
    std::vector<double> values;

    std::size_t size() const noexcept { return values.size(); }
};

// Xavier-uniform weights (one limit per weight matrix), zero biases. The
// draw order is fixed, so a seed pins the parameters bit-for-bit.
ModelState init_model(const Topology& topology, std::uint64_t seed);

// Scalar prediction for one window of shape (timesteps, input_width).
// Recurrent state starts at zero on every call.
double forward(const ModelState& model, const Tensor& x);

inline double loss_mse(double pred, double target) {
    const double r = pred - target;
    return r * r;
}

// Exact gradient of loss_mse(forward(model, x), y) with respect to every
// parameter. `sample_index` only decorates the NumericalError message.
GradientVector backward_per_sample(const ModelState& model, const Tensor& x, double y,
                                   std::optional<std::size_t> sample_index = std::nullopt);

double grad_norm(std::span<const double> g);
inline double grad_norm(const GradientVector& g) { return grad_norm(g.values); }

// Scratch buffers reused across calls on the hot path.
class GradientWorkspace {
public:
    GradientWorkspace() = default;

private:
    friend struct LstmPass;
    void reserve(const Topology& topology);

    std::vector<double> xh_;     // T x (i+h)
    std::vector<double> gates_;  // T x 4h, activated
    std::vector<double> c_;      // (T+1) x h, c_[0] = 0
    std::vector<double> tanh_c_; // T x h
    std::vector<double> h_;      // (T+1) x h
    std::vector<double> dh_;
    std::vector<double> dc_;
    std::vector<double> dz_;
    std::vector<unsigned char> saturated_;  // T x 4h gate pre-activation clamp flags
    std::vector<unsigned char> c_saturated_;
};

// Hot-path variant: `x` holds timesteps*input_width values, `grad` (length P)
// is overwritten. Returns the loss. Throws NumericalError on non-finite values.
double loss_and_gradient(const ModelState& model, std::span<const double> x, double y,
                         std::span<double> grad, GradientWorkspace& ws,
                         std::optional<std::size_t> sample_index = std::nullopt);

// Forward only; same input convention as loss_and_gradient.
double predict(const ModelState& model, std::span<const double> x, GradientWorkspace& ws);

}  // namespace sampleimp
