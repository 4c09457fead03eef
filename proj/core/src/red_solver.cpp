#include "dured/red_solver.hpp"

#include <cmath>
#include <stdexcept>

namespace dured {

void AdmmRedOptions::validate() const {
    if (!(lambda >= 0.0)) throw std::invalid_argument("AdmmRedOptions: lambda must be >= 0");
    if (!(beta > 0.0)) throw std::invalid_argument("AdmmRedOptions: beta must be positive");
    if (n_iters < 1 || cg_iters < 1)
        throw std::invalid_argument("AdmmRedOptions: iteration counts must be positive");
}

AdmmRedResult admm_red(const ComplexImage& y, const ForwardModel& A, const Denoiser& f,
                       const AdmmRedOptions& opts) {
    opts.validate();
    if (y.height() != A.height() || y.width() != A.width())
        throw std::invalid_argument("admm_red: y shape mismatch");
    validate_finite(y, "admm_red");

    const int h = y.height(), w = y.width();
    ComplexImage zf = apply_adjoint(A, y);
    ComplexImage x = zf;
    ComplexImage v = zf;
    ComplexImage u = ComplexImage::zeros(h, w);

    AdmmRedResult result;
    result.primal_residual.reserve(opts.n_iters);

    for (int n = 0; n < opts.n_iters; ++n) {
        ComplexImage x_reg = v - u;
        x = cg_solve_x(A, y, opts.beta, x_reg, opts.cg_iters, opts.cg_tol);

        ComplexImage fv = denoise(f, v);
        ComplexImage v_new(h, w);
        if (opts.exact_v_update) {
            const double denom = opts.lambda + opts.beta;
            for (int i = 0; i < v.size(); ++i)
                v_new[i] = (opts.lambda * fv[i] + opts.beta * (x[i] + u[i])) / denom;
        } else {
            const double s = opts.lambda / opts.beta;
            for (int i = 0; i < v.size(); ++i) {
                const cplx z = v[i] - fv[i]; // denoising residual
                v_new[i] = (x[i] + u[i]) - s * z;
            }
        }

        double resid_sq = 0.0;
        for (int i = 0; i < u.size(); ++i) {
            const cplx d = x[i] - v_new[i];
            u[i] += d;
            resid_sq += std::norm(d);
        }
        v = v_new;
        const double resid = std::sqrt(resid_sq);
        result.primal_residual.push_back(resid);
        if (!std::isfinite(resid) || resid > 1e6) {
            result.diverged = true;
            break;
        }
        if (opts.stop_tol > 0.0 && resid < opts.stop_tol) break;
    }
    result.x = x;
    return result;
}

double red_cost(const ComplexImage& x, const ComplexImage& y, const ForwardModel& A,
                const Denoiser& f, double lambda) {
    require_same_shape(x, y, "red_cost");
    ComplexImage resid = apply_forward(A, x) - y;
    return 0.5 * norm2sq(resid) + red_regularizer_value(f, x, lambda);
}

ComplexImage red_gradient(const ComplexImage& x, const ComplexImage& y, const ForwardModel& A,
                          const Denoiser& f, double lambda) {
    require_same_shape(x, y, "red_gradient");
    ComplexImage data_grad = apply_adjoint(A, apply_forward(A, x) - y);
    ComplexImage fx = denoise(f, x);
    for (int i = 0; i < x.size(); ++i)
        data_grad[i] += lambda * (x[i] - fx[i]);
    return data_grad;
}

} // namespace dured
