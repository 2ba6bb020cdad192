#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "sampleimp/model.hpp"

namespace sampleimp {

struct AdamHyper {
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

struct AdamState {
    std::vector<double> m;
    std::vector<double> v;
    std::uint64_t step = 0;

    AdamState() = default;
    explicit AdamState(std::size_t n) : m(n, 0.0), v(n, 0.0) {}
};

// One bias-corrected Adam update. The model and state are only modified if
// every updated value is finite; otherwise NumericalError is thrown and both
// are left as they were.
void adam_step(ModelState& model, std::span<const double> grad, AdamState& state,
               const AdamHyper& hyper);

inline void adam_step(ModelState& model, const GradientVector& grad, AdamState& state,
                      const AdamHyper& hyper) {
    adam_step(model, std::span<const double>(grad.values), state, hyper);
}

}  // namespace sampleimp
