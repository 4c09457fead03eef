#pragma once

#include <complex>
#include <vector>

namespace dured {

using cplx = std::complex<double>;

/// H x W complex-valued image grid, row-major. The reconstruction variable
/// and every intermediate (x, v, u, z, y-as-grid) use this type.
class ComplexImage {
public:
    ComplexImage() = default;
    ComplexImage(int height, int width);
    ComplexImage(int height, int width, std::vector<cplx> data);

    static ComplexImage zeros(int height, int width) { return {height, width}; }

    int height() const { return height_; }
    int width() const { return width_; }
    int size() const { return height_ * width_; }

    cplx& operator()(int r, int c) { return data_[static_cast<std::size_t>(r) * width_ + c]; }
    const cplx& operator()(int r, int c) const { return data_[static_cast<std::size_t>(r) * width_ + c]; }
    cplx& operator[](std::size_t i) { return data_[i]; }
    const cplx& operator[](std::size_t i) const { return data_[i]; }

    cplx* data() { return data_.data(); }
    const cplx* data() const { return data_.data(); }

    bool same_shape(const ComplexImage& other) const {
        return height_ == other.height_ && width_ == other.width_;
    }

    ComplexImage& operator+=(const ComplexImage& rhs);
    ComplexImage& operator-=(const ComplexImage& rhs);
    ComplexImage& operator*=(double s);
    ComplexImage& operator*=(cplx s);

private:
    int height_ = 0;
    int width_ = 0;
    std::vector<cplx> data_;
};

ComplexImage operator+(ComplexImage lhs, const ComplexImage& rhs);
ComplexImage operator-(ComplexImage lhs, const ComplexImage& rhs);
ComplexImage operator*(double s, ComplexImage img);
ComplexImage operator*(cplx s, ComplexImage img);

/// Complex inner product sum(conj(a)_i * b_i).
cplx inner(const ComplexImage& a, const ComplexImage& b);
/// Real part of the complex inner product, accumulated in one pass.
double inner_re(const ComplexImage& a, const ComplexImage& b);
double norm2sq(const ComplexImage& img);
double norm2(const ComplexImage& img);
/// Sum of complex moduli.
double norm1(const ComplexImage& img);

bool all_finite(const ComplexImage& img);
/// Throws std::invalid_argument naming `what` if any component is NaN/Inf.
void validate_finite(const ComplexImage& img, const char* what);
/// Throws std::invalid_argument if shapes differ.
void require_same_shape(const ComplexImage& a, const ComplexImage& b, const char* what);

} // namespace dured
