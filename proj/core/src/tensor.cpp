#include "dured/tensor.hpp"

#include <cmath>
#include <stdexcept>

namespace dured {

Tensor::Tensor(std::vector<int> s) : shape(std::move(s)) {
    std::size_t n = 1;
    for (int d : shape) {
        if (d <= 0) throw std::invalid_argument("Tensor: dimensions must be positive");
        n *= static_cast<std::size_t>(d);
    }
    data.assign(n, 0.0);
}

Tensor Tensor::scalar(double v) {
    Tensor t;
    t.data.assign(1, v);
    return t;
}

Tensor Tensor::zeros_like(const Tensor& t) {
    Tensor z;
    z.shape = t.shape;
    z.data.assign(t.data.size(), 0.0);
    return z;
}

double Tensor::scalar_value() const {
    if (data.size() != 1) throw std::logic_error("Tensor: not a scalar");
    return data[0];
}

bool all_finite(const Tensor& t) {
    for (double v : t.data)
        if (!std::isfinite(v)) return false;
    return true;
}

Tensor image_to_tensor(const ComplexImage& img) {
    Tensor t({2, img.height(), img.width()});
    const std::size_t n = static_cast<std::size_t>(img.size());
    for (std::size_t i = 0; i < n; ++i) {
        t.data[i] = img[i].real();
        t.data[n + i] = img[i].imag();
    }
    return t;
}

ComplexImage tensor_to_image(const Tensor& t) {
    if (t.shape.size() != 3 || t.shape[0] != 2)
        throw std::invalid_argument("tensor_to_image: expected shape (2, H, W)");
    ComplexImage img(t.shape[1], t.shape[2]);
    const std::size_t n = static_cast<std::size_t>(img.size());
    for (std::size_t i = 0; i < n; ++i)
        img[i] = cplx(t.data[i], t.data[n + i]);
    return img;
}

} // namespace dured
