#include "dured/optimizer.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace dured {

void AdamConfig::validate() const {
    if (!(lr > 0.0)) throw std::invalid_argument("AdamConfig: lr must be positive");
    if (beta1 < 0.0 || beta1 >= 1.0 || beta2 < 0.0 || beta2 >= 1.0)
        throw std::invalid_argument("AdamConfig: betas must lie in [0, 1)");
    if (!(eps > 0.0)) throw std::invalid_argument("AdamConfig: eps must be positive");
}

void adam_step(std::vector<double>& params, const std::vector<double>& grads,
               AdamState& state, const AdamConfig& cfg) {
    cfg.validate();
    const std::size_t n = params.size();
    if (grads.size() != n || state.m.size() != n || state.v.size() != n)
        throw std::invalid_argument("adam_step: parameter/gradient/state sizes differ");
    for (std::size_t i = 0; i < n; ++i)
        if (!std::isfinite(grads[i]))
            throw std::runtime_error("adam_step: non-finite gradient at index " + std::to_string(i));

    state.step_count += 1;
    const double t = static_cast<double>(state.step_count);
    const double bc1 = 1.0 - std::pow(cfg.beta1, t);
    const double bc2 = 1.0 - std::pow(cfg.beta2, t);
    for (std::size_t i = 0; i < n; ++i) {
        state.m[i] = cfg.beta1 * state.m[i] + (1.0 - cfg.beta1) * grads[i];
        state.v[i] = cfg.beta2 * state.v[i] + (1.0 - cfg.beta2) * grads[i] * grads[i];
        const double m_hat = state.m[i] / bc1;
        const double v_hat = state.v[i] / bc2;
        params[i] -= cfg.lr * m_hat / (std::sqrt(v_hat) + cfg.eps);
    }
}

} // namespace dured
