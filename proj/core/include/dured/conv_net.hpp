#pragma once

#include "dured/complex_image.hpp"
#include "dured/tensor.hpp"

#include <cstdint>
#include <vector>

namespace dured {

enum class Nonlinearity { leaky_relu, identity };

/// Architecture of the learned residual Z_w: a stack of zero-padded 2D
/// convolutions over the two real/imaginary channels, nonlinearities
/// between layers, linear final layer (so zero weights give the zero map).
struct ConvNetConfig {
    int layers = 4;
    int hidden_channels = 16;
    int kernel_size = 3;
    Nonlinearity nonlin = Nonlinearity::leaky_relu;
    double leak = 0.01;

    /// Channel counts per layer: 2 -> hidden ... hidden -> 2.
    std::vector<std::pair<int, int>> layer_channels() const;
    void validate() const;
};

struct ResidualConvNet {
    ConvNetConfig cfg;
    std::vector<Tensor> weights; // per layer, (out_ch, in_ch, k, k)
    std::vector<Tensor> biases;  // per layer, (out_ch)

    /// He initialization (variance 2/fan_in), final layer scaled by 0.1 so
    /// the initial implicit denoiser is near identity.
    static ResidualConvNet init(const ConvNetConfig& cfg, std::uint64_t seed);
    static ResidualConvNet zeros(const ConvNetConfig& cfg);

    std::size_t param_count() const;
};

/// z = Z_w(v): splits v into two real channels, runs the convolution stack,
/// recombines to a complex image. The implicit denoiser is f(v) = v - z.
ComplexImage zw_forward(const ResidualConvNet& net, const ComplexImage& v);

namespace detail {
/// Zero-padded same-size convolution kernels shared by the plain forward
/// pass and the autodiff conv2d node.
void conv2d_forward(const double* x, int cin, int h, int w,
                    const double* wt, int cout, int k,
                    const double* bias, double* y);
void conv2d_backward_input(const double* gy, int cout, int h, int w,
                           const double* wt, int cin, int k, double* gx);
void conv2d_backward_weights(const double* x, int cin, int h, int w,
                             const double* gy, int cout, int k,
                             double* gw, double* gb);
void apply_nonlin(Nonlinearity nl, double leak, const double* x, double* y, std::size_t n);
void apply_nonlin_grad(Nonlinearity nl, double leak, const double* x, const double* gy,
                       double* gx, std::size_t n);
} // namespace detail

} // namespace dured
