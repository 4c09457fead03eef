#pragma once

#include "dured/complex_image.hpp"
#include "dured/conv_net.hpp"

#include <vector>

namespace dured {

enum class DenoiserKind { gaussian_blur, median, residual_net };

/// The pluggable denoiser f(.). gaussian_blur is a circular (wrap-around)
/// convolution with a normalized per-axis-separable Gaussian kernel, applied
/// independently to the real and imaginary channels; it is a symmetric
/// linear operator. median is a per-channel sliding-window median with
/// wrap-around. residual_net is the implicit denoiser f(v) = v - Z_w(v).
struct Denoiser {
    DenoiserKind kind = DenoiserKind::gaussian_blur;
    double sigma = 1.0;                   // gaussian_blur, pixels
    int window = 3;                       // median, odd
    const ResidualConvNet* net = nullptr; // residual_net (non-owning)

    static Denoiser gaussian(double sigma) { return {DenoiserKind::gaussian_blur, sigma, 3, nullptr}; }
    static Denoiser median_filter(int window) { return {DenoiserKind::median, 1.0, window, nullptr}; }
    static Denoiser residual(const ResidualConvNet* n) { return {DenoiserKind::residual_net, 1.0, 3, n}; }
    static Denoiser identity() { return gaussian(0.0); } // sigma 0 blur = identity
};

ComplexImage denoise(const Denoiser& f, const ComplexImage& x);

/// (lambda/2) * Re<x, x - f(x)>.
double red_regularizer_value(const Denoiser& f, const ComplexImage& x, double lambda);

/// Normalized 1D circular Gaussian kernel over n offsets (circular distance
/// to the origin); the 2D blur kernel is the outer product of the per-axis
/// kernels. Exposed so callers can materialize the blur operator.
std::vector<double> circular_gaussian_kernel(int n, double sigma);

} // namespace dured
