#include "dured/forward_model.hpp"
#include "dured/fft.hpp"

#include <cmath>
#include <stdexcept>

namespace dured {

ForwardModel::ForwardModel(int height, int width,
                           std::vector<std::uint8_t> mask,
                           std::vector<double> weights,
                           DimMode dim_mode)
    : height_(height), width_(width),
      mask_(std::move(mask)), weights_(std::move(weights)),
      dim_mode_(dim_mode) {
    if (height <= 0 || width <= 0)
        throw std::invalid_argument("ForwardModel: dimensions must be positive");
    const std::size_t n = static_cast<std::size_t>(height) * width;
    if (mask_.size() != n || weights_.size() != n)
        throw std::invalid_argument("ForwardModel: mask/weight grids must be H*W");

    const std::size_t dc = static_cast<std::size_t>(dc_index(height)) * width + dc_index(width);
    if (!mask_[dc])
        throw std::invalid_argument("ForwardModel: DC location must be acquired");

    pass_grid_.resize(n);
    normal_grid_.resize(n);
    sampled_count_ = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (mask_[i]) {
            if (!(weights_[i] > 0.0) || !std::isfinite(weights_[i]))
                throw std::invalid_argument("ForwardModel: weights must be strictly positive where sampled");
            pass_grid_[i] = weights_[i];
            normal_grid_[i] = weights_[i] * weights_[i];
            ++sampled_count_;
        } else {
            pass_grid_[i] = 0.0;
            normal_grid_[i] = 0.0;
        }
    }
    full_mask_ = sampled_count_ == static_cast<int>(n);
}

ForwardModel ForwardModel::full(int height, int width) {
    const std::size_t n = static_cast<std::size_t>(height) * width;
    return ForwardModel(height, width,
                        std::vector<std::uint8_t>(n, 1),
                        std::vector<double>(n, 1.0));
}

ComplexImage apply_forward(const ForwardModel& A, const ComplexImage& x) {
    if (x.height() != A.height() || x.width() != A.width())
        throw std::invalid_argument("apply_forward: shape mismatch");
    ComplexImage y = fft2_unitary(x);
    const auto& g = A.pass_grid();
    for (int i = 0; i < y.size(); ++i) y[i] *= g[i];
    return y;
}

ComplexImage apply_adjoint(const ForwardModel& A, const ComplexImage& y) {
    if (y.height() != A.height() || y.width() != A.width())
        throw std::invalid_argument("apply_adjoint: shape mismatch");
    ComplexImage t = y;
    const auto& g = A.pass_grid();
    for (int i = 0; i < t.size(); ++i) t[i] *= g[i];
    return ifft2_unitary(t);
}

namespace {

// AᴴA x + beta x via one FFT round trip.
ComplexImage normal_apply(const ForwardModel& A, const ComplexImage& x, double beta) {
    ComplexImage k = fft2_unitary(x);
    const auto& d = A.normal_grid();
    for (int i = 0; i < k.size(); ++i) k[i] *= d[i];
    ComplexImage out = ifft2_unitary(k);
    for (int i = 0; i < out.size(); ++i) out[i] += beta * x[i];
    return out;
}

// Keeps a fixed-iteration CG finite after exact convergence (r = p = 0).
constexpr double kCgEps = 1e-300;

} // namespace

ComplexImage cg_solve_x(const ForwardModel& A, const ComplexImage& y, double beta,
                        const ComplexImage& x_reg, int iters, double tol) {
    if (y.height() != A.height() || y.width() != A.width())
        throw std::invalid_argument("cg_solve_x: y shape mismatch");
    require_same_shape(y, x_reg, "cg_solve_x");
    if (iters < 1) throw std::invalid_argument("cg_solve_x: iters must be >= 1");
    if (beta < 0.0) throw std::invalid_argument("cg_solve_x: beta must be nonnegative");
    if (beta == 0.0 && !A.full_mask())
        throw std::invalid_argument("cg_solve_x: singular system (beta = 0 with a non-full mask)");

    ComplexImage b = apply_adjoint(A, y);
    for (int i = 0; i < b.size(); ++i) b[i] += beta * x_reg[i];

    ComplexImage x = ComplexImage::zeros(y.height(), y.width());
    ComplexImage r = b;
    ComplexImage p = r;
    double rs = inner_re(r, r);
    const double rs0 = rs;
    if (rs0 == 0.0) return x;

    for (int it = 0; it < iters; ++it) {
        ComplexImage Ap = normal_apply(A, p, beta);
        const double pAp = inner_re(p, Ap);
        const double alpha = rs / (pAp + kCgEps);
        for (int i = 0; i < x.size(); ++i) x[i] += alpha * p[i];
        for (int i = 0; i < r.size(); ++i) r[i] -= alpha * Ap[i];
        const double rs_new = inner_re(r, r);
        if (tol > 0.0 && std::sqrt(rs_new / rs0) < tol) break;
        const double cg_beta = rs_new / (rs + kCgEps);
        for (int i = 0; i < p.size(); ++i) p[i] = r[i] + cg_beta * p[i];
        rs = rs_new;
    }
    return x;
}

} // namespace dured
