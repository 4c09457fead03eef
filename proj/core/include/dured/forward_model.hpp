#pragma once

#include "dured/complex_image.hpp"

#include <cstdint>
#include <vector>

namespace dured {

enum class DimMode { full_2d, rows_1d };

/// The measurement operator A: centered unitary 2D FFT composed with a
/// boolean acquisition mask and a per-location weight. The weight grid is
/// applied once per pass, identically in apply_forward and apply_adjoint,
/// so the normal operator AᴴA compensates by weight² at acquired locations.
/// make_forward_model (sampling.hpp) sets weight = sqrt(1/p) so the round
/// trip compensates by exactly the inverse sampling density.
class ForwardModel {
public:
    /// Direct construction; weights must be strictly positive where the mask
    /// is true (values elsewhere are ignored). The DC location must be masked.
    ForwardModel(int height, int width,
                 std::vector<std::uint8_t> mask,
                 std::vector<double> weights,
                 DimMode dim_mode = DimMode::full_2d);

    /// Fully sampled model with unit weights (A = unitary FFT).
    static ForwardModel full(int height, int width);

    int height() const { return height_; }
    int width() const { return width_; }
    DimMode dim_mode() const { return dim_mode_; }
    bool mask_at(int r, int c) const { return mask_[static_cast<std::size_t>(r) * width_ + c] != 0; }
    double weight_at(int r, int c) const { return weights_[static_cast<std::size_t>(r) * width_ + c]; }
    const std::vector<std::uint8_t>& mask() const { return mask_; }
    const std::vector<double>& weights() const { return weights_; }
    bool full_mask() const { return full_mask_; }
    int sampled_count() const { return sampled_count_; }

    /// mask(k) ? weight(k) : 0, the grid actually multiplied in per pass.
    const std::vector<double>& pass_grid() const { return pass_grid_; }
    /// mask(k) ? weight(k)^2 : 0, the Fourier diagonal of AᴴA.
    const std::vector<double>& normal_grid() const { return normal_grid_; }

private:
    int height_, width_;
    std::vector<std::uint8_t> mask_;
    std::vector<double> weights_;
    std::vector<double> pass_grid_;
    std::vector<double> normal_grid_;
    DimMode dim_mode_;
    bool full_mask_;
    int sampled_count_;
};

/// y = A x: unitary FFT, then pointwise mask-and-weight (zeros off-mask).
ComplexImage apply_forward(const ForwardModel& A, const ComplexImage& x);

/// Aᴴ y: pointwise mask-and-weight, then unitary inverse FFT.
ComplexImage apply_adjoint(const ForwardModel& A, const ComplexImage& y);

/// Solves (AᴴA + beta·I) x = Aᴴ y + beta·x_reg by conjugate gradients from
/// the zero start, stopping after `iters` steps or when the relative
/// residual drops below `tol` (tol = 0 disables the early stop).
/// beta = 0 requires a full mask, otherwise the system is singular.
ComplexImage cg_solve_x(const ForwardModel& A, const ComplexImage& y, double beta,
                        const ComplexImage& x_reg, int iters, double tol);

} // namespace dured
