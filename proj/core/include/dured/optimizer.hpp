#pragma once

#include <cstddef>
#include <vector>

namespace dured {

struct AdamConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;

    void validate() const;
};

/// First/second moment accumulators for a flat parameter vector; step_count
/// increments exactly once per adam_step call.
struct AdamState {
    std::vector<double> m;
    std::vector<double> v;
    long step_count = 0;

    static AdamState zeros(std::size_t n) { return {std::vector<double>(n, 0.0), std::vector<double>(n, 0.0), 0}; }
};

/// Standard bias-corrected Adam update applied elementwise in place.
/// Throws std::runtime_error (with the offending index) on a non-finite
/// gradient, leaving params and state untouched.
void adam_step(std::vector<double>& params, const std::vector<double>& grads,
               AdamState& state, const AdamConfig& cfg);

} // namespace dured
