#pragma once

#include "dured/complex_image.hpp"

#include <vector>

namespace dured {

/// Dense real tensor, row-major over a small shape vector. Rank 0 is a
/// scalar, complex images travel through the training graph as (2, H, W)
/// with channel 0 = real part, channel 1 = imaginary part.
struct Tensor {
    std::vector<int> shape;
    std::vector<double> data;

    Tensor() = default;
    explicit Tensor(std::vector<int> s);
    static Tensor scalar(double v);
    static Tensor zeros_like(const Tensor& t);

    std::size_t numel() const { return data.size(); }
    bool same_shape(const Tensor& o) const { return shape == o.shape; }
    bool is_scalar() const { return shape.empty() || numel() == 1; }
    double scalar_value() const;

    double& operator[](std::size_t i) { return data[i]; }
    double operator[](std::size_t i) const { return data[i]; }
};

bool all_finite(const Tensor& t);

/// (2, H, W) two-channel view of a complex image.
Tensor image_to_tensor(const ComplexImage& img);
ComplexImage tensor_to_image(const Tensor& t);

} // namespace dured
