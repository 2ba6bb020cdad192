#include "sampleimp/adam.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "sampleimp/errors.hpp"

namespace sampleimp {

void adam_step(ModelState& model, std::span<const double> grad, AdamState& state,
               const AdamHyper& hyper) {
    const std::size_t n = model.params.size();
    if (grad.size() != n || state.m.size() != n || state.v.size() != n) {
        throw std::invalid_argument("adam_step: gradient/state length does not match parameter count");
    }
    const std::uint64_t t = state.step + 1;
    const double c1 = 1.0 - std::pow(hyper.beta1, static_cast<double>(t));
    const double c2 = 1.0 - std::pow(hyper.beta2, static_cast<double>(t));

    // Staged so a failure leaves everything untouched.
    std::vector<double> m(n), v(n), p(n);
    for (std::size_t j = 0; j < n; ++j) {
        const double g = grad[j];
        m[j] = hyper.beta1 * state.m[j] + (1.0 - hyper.beta1) * g;
        v[j] = hyper.beta2 * state.v[j] + (1.0 - hyper.beta2) * g * g;
        const double m_hat = m[j] / c1;
        const double v_hat = v[j] / c2;
        p[j] = model.params[j] - hyper.learning_rate * m_hat / (std::sqrt(v_hat) + hyper.epsilon);
        if (!std::isfinite(p[j]) || !std::isfinite(v[j])) {
            throw NumericalError("adam_step: non-finite update at parameter " + std::to_string(j) +
                                 " (step " + std::to_string(t) + ")");
        }
    }
    state.m = std::move(m);
    state.v = std::move(v);
    state.step = t;
    model.params = std::move(p);
}

}  // namespace sampleimp
