#include "sampleimp/model.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "sampleimp/errors.hpp"
#include "sampleimp/rng.hpp"

namespace sampleimp {

// ---------------------------------------------------------------------------
// Tensor
// ---------------------------------------------------------------------------

Tensor::Tensor(std::vector<std::size_t> shape, std::vector<double> values)
    : shape_(std::move(shape)), values_(std::move(values)) {
    std::size_t n = shape_.empty() ? 0 : 1;
    for (auto d : shape_) {
        if (d == 0) throw std::invalid_argument("Tensor: zero dimension in shape");
        n *= d;
    }
    if (n != values_.size()) {
        throw std::invalid_argument("Tensor: shape holds " + std::to_string(n) + " values, got " +
                                    std::to_string(values_.size()));
    }
}

Tensor Tensor::zeros(std::vector<std::size_t> shape) {
    std::size_t n = shape.empty() ? 0 : 1;
    for (auto d : shape) n *= d;
    return Tensor(std::move(shape), std::vector<double>(n, 0.0));
}

double Tensor::at(std::size_t row, std::size_t col) const {
    if (rank() != 2 || row >= shape_[0] || col >= shape_[1]) {
        throw std::out_of_range("Tensor::at: index out of range");
    }
    return values_[row * shape_[1] + col];
}

bool Tensor::all_finite() const noexcept {
    return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

// ---------------------------------------------------------------------------
// Topology
// ---------------------------------------------------------------------------

void validate(const Topology& t) {
    if (t.timesteps == 0 || t.input_width == 0 || t.output == 0) {
        throw ConfigError("topology: timesteps, input_width and output must be positive");
    }
    if (t.kind == ModelKind::lstm && t.hidden == 0) {
        throw ConfigError("topology: LSTM hidden size must be positive");
    }
}

std::string to_string(ModelKind kind) {
    return kind == ModelKind::lstm ? "lstm" : "linear_probe";
}

ModelKind model_kind_from_string(const std::string& name) {
    if (name == "lstm") return ModelKind::lstm;
    if (name == "linear_probe") return ModelKind::linear_probe;
    throw ConfigError("unknown model kind '" + name + "'");
}

std::vector<ParamBlock> parameter_blocks(const Topology& t) {
    validate(t);
    std::vector<ParamBlock> blocks;
    std::size_t offset = 0;
    auto add = [&](std::string name, std::size_t rows, std::size_t cols, bool bias) {
        blocks.push_back({std::move(name), offset, rows, cols, bias});
        offset += rows * cols;
    };
    if (t.kind == ModelKind::linear_probe) {
        add("probe.W", t.output, t.timesteps * t.input_width, false);
        return blocks;
    }
    const std::size_t h = t.hidden;
    add("lstm.W", 4 * h, t.input_width + h, false);
    add("lstm.b", 4 * h, 1, true);
    add("dense.W", t.output, h, false);
    add("dense.b", t.output, 1, true);
    return blocks;
}

std::size_t parameter_count(const Topology& t) {
    validate(t);
    if (t.kind == ModelKind::linear_probe) return t.timesteps * t.input_width * t.output;
    const std::size_t h = t.hidden, i = t.input_width, o = t.output;
    return 4 * (h * (h + i) + h) + h * o + o;
}

std::uint64_t flops_per_sample(const Topology& t) {
    validate(t);
    std::uint64_t fwd = 0;
    if (t.kind == ModelKind::linear_probe) {
        fwd = 2ULL * t.timesteps * t.input_width * t.output;
    } else {
        const std::uint64_t h = t.hidden, k = t.input_width + t.hidden;
        fwd = t.timesteps * (2 * 4 * h * k + 14 * h) + 2 * h * t.output;
    }
    // Reverse pass costs about twice the forward matmuls.
    return 3 * fwd;
}

// ---------------------------------------------------------------------------
// Initialization
// ---------------------------------------------------------------------------

ModelState init_model(const Topology& topology, std::uint64_t seed) {
    ModelState m;
    m.topology = topology;
    m.init_seed = seed;
    m.params.assign(parameter_count(topology), 0.0);
    Rng rng(seed);
    for (const auto& block : parameter_blocks(topology)) {
        if (block.is_bias) continue;
        const double limit = std::sqrt(6.0 / static_cast<double>(block.rows + block.cols));
        for (std::size_t j = 0; j < block.size(); ++j) {
            m.params[block.offset + j] = uniform(rng, -limit, limit);
        }
    }
    return m;
}

// ---------------------------------------------------------------------------
// Forward / reverse passes
// ---------------------------------------------------------------------------

namespace {

constexpr double kActivationClamp = 30.0;

inline double clamp_arg(double z, unsigned char& saturated) {
    if (z > kActivationClamp) {
        saturated = 1;
        return kActivationClamp;
    }
    if (z < -kActivationClamp) {
        saturated = 1;
        return -kActivationClamp;
    }
    saturated = 0;
    return z;
}

inline double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

inline double dot(const double* a, const double* b, std::size_t n) {
    double s = 0.0;
    for (std::size_t k = 0; k < n; ++k) s += a[k] * b[k];
    return s;
}

std::string at_sample(std::optional<std::size_t> idx) {
    return idx ? " (sample " + std::to_string(*idx) + ")" : std::string{};
}

void require_scalar_head(const Topology& t) {
    validate(t);
    if (t.output != 1) throw ConfigError("scalar regression requires output size 1");
}

}  // namespace

void GradientWorkspace::reserve(const Topology& t) {
    const std::size_t T = t.timesteps, H = t.hidden, K = t.input_width + t.hidden;
    xh_.resize(T * K);
    gates_.resize(T * 4 * H);
    c_.resize((T + 1) * H);
    tanh_c_.resize(T * H);
    h_.resize((T + 1) * H);
    dh_.resize(2 * H);
    dc_.resize(H);
    dz_.resize(4 * H);
    saturated_.resize(T * 4 * H);
    c_saturated_.resize(T * H);
}

struct LstmPass {
    static double forward(const ModelState& m, std::span<const double> x, GradientWorkspace& ws) {
        const auto& t = m.topology;
        const std::size_t T = t.timesteps, I = t.input_width, H = t.hidden, K = I + H;
        ws.reserve(t);
        const double* W = m.params.data();
        const double* b = W + 4 * H * K;
        const double* Wd = b + 4 * H;
        const double* bd = Wd + H;

        std::fill_n(ws.c_.begin(), H, 0.0);
        std::fill_n(ws.h_.begin(), H, 0.0);
        for (std::size_t s = 0; s < T; ++s) {
            double* xh = &ws.xh_[s * K];
            std::copy_n(x.data() + s * I, I, xh);
            std::copy_n(&ws.h_[s * H], H, xh + I);

            double* gates = &ws.gates_[s * 4 * H];
            unsigned char* sat = &ws.saturated_[s * 4 * H];
            for (std::size_t r = 0; r < 4 * H; ++r) {
                const double z = clamp_arg(b[r] + dot(W + r * K, xh, K), sat[r]);
                gates[r] = (r >= 2 * H && r < 3 * H) ? std::tanh(z) : sigmoid(z);
            }
            const double* gi = gates;
            const double* gf = gates + H;
            const double* gg = gates + 2 * H;
            const double* go = gates + 3 * H;
            const double* c_prev = &ws.c_[s * H];
            double* c = &ws.c_[(s + 1) * H];
            double* h = &ws.h_[(s + 1) * H];
            double* tc = &ws.tanh_c_[s * H];
            unsigned char* csat = &ws.c_saturated_[s * H];
            for (std::size_t k = 0; k < H; ++k) {
                c[k] = gf[k] * c_prev[k] + gi[k] * gg[k];
                tc[k] = std::tanh(clamp_arg(c[k], csat[k]));
                h[k] = go[k] * tc[k];
            }
        }
        return bd[0] + dot(Wd, &ws.h_[T * H], H);
    }

    // Requires a preceding forward() on the same workspace.
    static void backward(const ModelState& m, double dpred, std::span<double> grad,
                         GradientWorkspace& ws) {
        const auto& t = m.topology;
        const std::size_t T = t.timesteps, I = t.input_width, H = t.hidden, K = I + H;
        const double* W = m.params.data();
        const double* Wd = W + 4 * H * K + 4 * H;

        std::fill(grad.begin(), grad.end(), 0.0);
        double* gW = grad.data();
        double* gb = gW + 4 * H * K;
        double* gWd = gb + 4 * H;
        double* gbd = gWd + H;

        double* dh = ws.dh_.data();
        double* dh_prev = dh + H;
        double* dc = ws.dc_.data();
        double* dz = ws.dz_.data();

        const double* hT = &ws.h_[T * H];
        gbd[0] = dpred;
        for (std::size_t k = 0; k < H; ++k) {
            gWd[k] = dpred * hT[k];
            dh[k] = Wd[k] * dpred;
            dc[k] = 0.0;
        }

        for (std::size_t s = T; s-- > 0;) {
            const double* gates = &ws.gates_[s * 4 * H];
            const unsigned char* sat = &ws.saturated_[s * 4 * H];
            const double* gi = gates;
            const double* gf = gates + H;
            const double* gg = gates + 2 * H;
            const double* go = gates + 3 * H;
            const double* c_prev = &ws.c_[s * H];
            const double* tc = &ws.tanh_c_[s * H];
            const unsigned char* csat = &ws.c_saturated_[s * H];

            for (std::size_t k = 0; k < H; ++k) {
                const double d_o = dh[k] * tc[k];
                if (!csat[k]) dc[k] += dh[k] * go[k] * (1.0 - tc[k] * tc[k]);
                const double d_i = dc[k] * gg[k];
                const double d_f = dc[k] * c_prev[k];
                const double d_g = dc[k] * gi[k];
                dz[k] = sat[k] ? 0.0 : d_i * gi[k] * (1.0 - gi[k]);
                dz[H + k] = sat[H + k] ? 0.0 : d_f * gf[k] * (1.0 - gf[k]);
                dz[2 * H + k] = sat[2 * H + k] ? 0.0 : d_g * (1.0 - gg[k] * gg[k]);
                dz[3 * H + k] = sat[3 * H + k] ? 0.0 : d_o * go[k] * (1.0 - go[k]);
                dc[k] *= gf[k];
            }

            const double* xh = &ws.xh_[s * K];
            std::fill_n(dh_prev, H, 0.0);
            for (std::size_t r = 0; r < 4 * H; ++r) {
                const double d = dz[r];
                if (d == 0.0) continue;
                gb[r] += d;
                double* gw_row = gW + r * K;
                const double* w_row = W + r * K;
                for (std::size_t k = 0; k < K; ++k) gw_row[k] += d * xh[k];
                for (std::size_t j = 0; j < H; ++j) dh_prev[j] += d * w_row[I + j];
            }
            std::copy_n(dh_prev, H, dh);
        }
    }
};

double predict(const ModelState& m, std::span<const double> x, GradientWorkspace& ws) {
    const auto& t = m.topology;
    require_scalar_head(t);
    if (x.size() != t.timesteps * t.input_width) {
        throw std::invalid_argument("predict: input holds " + std::to_string(x.size()) +
                                    " values, topology expects " +
                                    std::to_string(t.timesteps * t.input_width));
    }
    if (m.params.size() != parameter_count(t)) {
        throw std::invalid_argument("predict: parameter vector does not match topology");
    }
    if (t.kind == ModelKind::linear_probe) return dot(m.params.data(), x.data(), x.size());
    return LstmPass::forward(m, x, ws);
}

double loss_and_gradient(const ModelState& m, std::span<const double> x, double y,
                         std::span<double> grad, GradientWorkspace& ws,
                         std::optional<std::size_t> sample_index) {
    if (grad.size() != m.params.size()) {
        throw std::invalid_argument("loss_and_gradient: gradient buffer has wrong length");
    }
    const double pred = predict(m, x, ws);
    const double loss = loss_mse(pred, y);
    if (!std::isfinite(pred) || !std::isfinite(loss)) {
        throw NumericalError("non-finite prediction or loss" + at_sample(sample_index));
    }
    const double dpred = 2.0 * (pred - y);
    if (m.topology.kind == ModelKind::linear_probe) {
        for (std::size_t j = 0; j < x.size(); ++j) grad[j] = dpred * x[j];
    } else {
        LstmPass::backward(m, dpred, grad, ws);
    }
    for (double g : grad) {
        if (!std::isfinite(g)) throw NumericalError("non-finite gradient" + at_sample(sample_index));
    }
    return loss;
}

namespace {

void check_input_shape(const Topology& t, const Tensor& x) {
    const auto& s = x.shape();
    if (s.size() != 2 || s[0] != t.timesteps || s[1] != t.input_width) {
        throw std::invalid_argument("input shape does not match (timesteps, features) of topology");
    }
}

}  // namespace

double forward(const ModelState& model, const Tensor& x) {
    check_input_shape(model.topology, x);
    GradientWorkspace ws;
    return predict(model, x.values(), ws);
}

GradientVector backward_per_sample(const ModelState& model, const Tensor& x, double y,
                                   std::optional<std::size_t> sample_index) {
    check_input_shape(model.topology, x);
    GradientWorkspace ws;
    GradientVector g;
    g.values.assign(model.params.size(), 0.0);
    loss_and_gradient(model, x.values(), y, g.values, ws, sample_index);
    return g;
}

double grad_norm(std::span<const double> g) {
    double s = 0.0;
    for (double v : g) s += v * v;
    return std::sqrt(s);
}

}  // namespace sampleimp
