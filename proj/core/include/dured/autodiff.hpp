#pragma once

#include "dured/conv_net.hpp"
#include "dured/tensor.hpp"

#include <functional>
#include <vector>

namespace dured {

/// Minimal reverse-mode tape covering the closure of the unrolled update
/// graph and its training loss: elementwise add/sub, scaling by scalar
/// nodes, scalar arithmetic with guarded division, inner products and
/// squared norms, masked pointwise multiplies, the centered unitary FFT
/// pair, zero-padded conv2d, pointwise nonlinearities, and channel
/// split/merge.
///
/// Nodes are appended in execution order (a topological order by
/// construction); backward() walks the tape in reverse accumulating exact
/// adjoints. A tape instance is confined to one thread.
class Tape {
public:
    using Id = int;

    /// Input/constant/parameter node. Gradients of every leaf reachable
    /// from the loss are available after backward().
    Id leaf(Tensor value);

    const Tensor& value(Id id) const { return nodes_[id].value; }
    const Tensor& grad(Id id) const { return nodes_[id].grad; }
    std::size_t size() const { return nodes_.size(); }
    void reserve(std::size_t n) { nodes_.reserve(n); }

    Id add(Id a, Id b);
    Id sub(Id a, Id b);
    Id neg(Id a);
    /// Elementwise tensor * scalar-node.
    Id scale(Id t, Id s);
    Id scale_const(Id t, double c);
    /// Multiplies every channel plane pointwise by a fixed real grid.
    Id masked_multiply(Id t, std::vector<double> grid);
    /// Centered unitary FFT pair on (2, H, W) tensors (channels = re, im).
    Id fft2(Id t);
    Id ifft2(Id t);
    /// Zero-padded same-size convolution; x: (Cin,H,W), w: (Cout,Cin,k,k),
    /// b: (Cout).
    Id conv2d(Id x, Id w, Id b);
    Id nonlin(Id x, Nonlinearity nl, double leak);
    /// (C,H,W) -> (1,H,W) single-channel extraction and its inverse.
    Id split_channel(Id x, int channel);
    Id merge_channels(Id a, Id b);

    // Scalar nodes.
    Id s_add(Id a, Id b);
    Id s_sub(Id a, Id b);
    Id s_mul(Id a, Id b);
    /// a / (b + eps); the eps guard keeps exactly-converged CG iterations
    /// finite (0 / eps = 0) without perturbing working magnitudes.
    Id s_div(Id a, Id b, double eps = 0.0);
    Id s_neg(Id a);

    /// sum_i a_i * b_i -> scalar.
    Id inner(Id a, Id b);
    /// sum_i a_i^2 -> scalar.
    Id squared_l2(Id a);
    /// sum_i (a_i - b_i)^2 / denom -> scalar.
    Id mse(Id a, Id b, double denom);

    /// Reverse accumulation from a scalar loss; gradients of unreachable
    /// nodes are zero.
    void backward(Id loss);

private:
    struct Node {
        Tensor value;
        Tensor grad;
        std::function<void(Tape&)> back; // empty for leaves
    };

    Id push(Tensor value, std::function<void(Tape&)> back);
    Tensor& grad_ref(Id id) { return nodes_[id].grad; }

    std::vector<Node> nodes_;
};

} // namespace dured
