#pragma once

#include "dured/complex_image.hpp"
#include "dured/denoiser.hpp"
#include "dured/forward_model.hpp"

#include <vector>

namespace dured {

struct AdmmRedOptions {
    double lambda = 1.0;
    double beta = 1.0;
    int n_iters = 100;
    int cg_iters = 15;
    double cg_tol = 0.0;
    /// Stop early once the primal residual drops below this (0 = fixed count).
    double stop_tol = 0.0;
    /// false: v = (x + u) - (lambda/beta)(v_prev - f(v_prev)) as printed;
    /// true:  v = (lambda f(v_prev) + beta (x + u)) / (lambda + beta).
    bool exact_v_update = false;

    void validate() const;
};

struct AdmmRedResult {
    ComplexImage x;
    /// Per-iteration primal residual ||x_n - v_n||_2.
    std::vector<double> primal_residual;
    bool diverged = false;
};

/// Plug-and-play ADMM with a fixed denoiser: an inner CG data-consistency
/// solve, the denoising-residual v-update, and the scaled multiplier update.
/// Aborts (returning history so far) if the primal residual exceeds 1e6.
AdmmRedResult admm_red(const ComplexImage& y, const ForwardModel& A, const Denoiser& f,
                       const AdmmRedOptions& opts);

/// 0.5 ||A x - y||^2 + (lambda/2) Re<x, x - f(x)>.
double red_cost(const ComplexImage& x, const ComplexImage& y, const ForwardModel& A,
                const Denoiser& f, double lambda);

/// Aᴴ(A x - y) + lambda (x - f(x)).
ComplexImage red_gradient(const ComplexImage& x, const ComplexImage& y, const ForwardModel& A,
                          const Denoiser& f, double lambda);

} // namespace dured
