#pragma once

#include "dured/complex_image.hpp"
#include "dured/forward_model.hpp"

#include <cstdint>
#include <vector>

namespace dured {

/// Variable-density sampling probability p(k) = exp(-(|k|/mu)^alpha), with
/// |k| the distance from DC after mapping each axis to [-0.5, 0.5].
/// In rows_1d mode only the row distance counts and whole rows are sampled
/// together. Probabilities are floored at p_min, which bounds the
/// compensation weights at 1/p_min while keeping them exactly inverse to
/// the probability actually sampled with.
struct SamplingPDF {
    double mu = 0.25;
    double alpha = 2.0;
    int height = 0;
    int width = 0;
    DimMode dim_mode = DimMode::full_2d;
    double p_min = 1e-4;

    void validate() const;
};

/// Effective sampling probability at grid location (r, c); p(DC) = 1.
double pdf_eval(const SamplingPDF& pdf, int r, int c);

/// One Bernoulli realization of a sampling pattern plus its compensation
/// record: weights hold exactly 1/p at sampled locations.
struct MaskDraw {
    SamplingPDF pdf;
    std::uint64_t seed = 0;
    std::vector<std::uint8_t> mask;
    std::vector<double> weights;

    int height() const { return pdf.height; }
    int width() const { return pdf.width; }
};

/// Independent Bernoulli(p(k)) per location (per row in 1D mode); the DC
/// location (DC row in 1D mode) is always sampled. Deterministic per seed.
MaskDraw draw_mask(const SamplingPDF& pdf, std::uint64_t seed);

/// Total grid locations divided by acquired locations.
double acceleration_factor(const MaskDraw& draw);

/// Measurement operator for a draw. Per-pass weight = sqrt(1/p) so that
/// AᴴA compensates acquired locations by exactly 1/p (unbiased round trip).
ForwardModel make_forward_model(const MaskDraw& draw);

/// Aᴴ(A(x_true)): the density-compensated zero-filled reconstruction used
/// as network input and training target.
ComplexImage zero_filled(const ForwardModel& A, const ComplexImage& x_true);

/// Elementwise arithmetic mean, accumulated in list order.
ComplexImage average_images(const std::vector<ComplexImage>& images);

} // namespace dured
