#include "dured/complex_image.hpp"
#include "dured/rng.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace dured {
namespace {

std::size_t checked_size(int height, int width) {
    if (height <= 0 || width <= 0)
        throw std::invalid_argument("ComplexImage: dimensions must be positive");
    return static_cast<std::size_t>(height) * static_cast<std::size_t>(width);
}

} // namespace

ComplexImage::ComplexImage(int height, int width)
    : height_(height), width_(width), data_(checked_size(height, width)) {}

ComplexImage::ComplexImage(int height, int width, std::vector<cplx> data)
    : height_(height), width_(width), data_(std::move(data)) {
    if (data_.size() != checked_size(height, width))
        throw std::invalid_argument("ComplexImage: data length must equal height*width");
}

ComplexImage& ComplexImage::operator+=(const ComplexImage& rhs) {
    require_same_shape(*this, rhs, "operator+=");
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += rhs.data_[i];
    return *this;
}

ComplexImage& ComplexImage::operator-=(const ComplexImage& rhs) {
    require_same_shape(*this, rhs, "operator-=");
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= rhs.data_[i];
    return *this;
}

ComplexImage& ComplexImage::operator*=(double s) {
    for (auto& z : data_) z *= s;
    return *this;
}

ComplexImage& ComplexImage::operator*=(cplx s) {
    for (auto& z : data_) z *= s;
    return *this;
}

ComplexImage operator+(ComplexImage lhs, const ComplexImage& rhs) { lhs += rhs; return lhs; }
ComplexImage operator-(ComplexImage lhs, const ComplexImage& rhs) { lhs -= rhs; return lhs; }
ComplexImage operator*(double s, ComplexImage img) { img *= s; return img; }
ComplexImage operator*(cplx s, ComplexImage img) { img *= s; return img; }

cplx inner(const ComplexImage& a, const ComplexImage& b) {
    require_same_shape(a, b, "inner");
    cplx acc = 0.0;
    for (int i = 0; i < a.size(); ++i) acc += std::conj(a[i]) * b[i];
    return acc;
}

double inner_re(const ComplexImage& a, const ComplexImage& b) {
    require_same_shape(a, b, "inner_re");
    double acc = 0.0;
    for (int i = 0; i < a.size(); ++i)
        acc += a[i].real() * b[i].real() + a[i].imag() * b[i].imag();
    return acc;
}

double norm2sq(const ComplexImage& img) {
    double acc = 0.0;
    for (int i = 0; i < img.size(); ++i) acc += std::norm(img[i]);
    return acc;
}

double norm2(const ComplexImage& img) { return std::sqrt(norm2sq(img)); }

double norm1(const ComplexImage& img) {
    double acc = 0.0;
    for (int i = 0; i < img.size(); ++i) acc += std::abs(img[i]);
    return acc;
}

bool all_finite(const ComplexImage& img) {
    for (int i = 0; i < img.size(); ++i)
        if (!std::isfinite(img[i].real()) || !std::isfinite(img[i].imag())) return false;
    return true;
}

void validate_finite(const ComplexImage& img, const char* what) {
    if (!all_finite(img))
        throw std::invalid_argument(std::string(what) + ": non-finite sample in input image");
}

void require_same_shape(const ComplexImage& a, const ComplexImage& b, const char* what) {
    if (!a.same_shape(b))
        throw std::invalid_argument(std::string(what) + ": shape mismatch");
}

double Rng::next_normal() {
    if (has_cached_) {
        has_cached_ = false;
        return cached_;
    }
    // Box-Muller; u1 in (0,1] to keep the log finite.
    double u1 = 1.0 - next_double();
    double u2 = next_double();
    double r = std::sqrt(-2.0 * std::log(u1));
    double theta = 6.283185307179586476925286766559 * u2;
    cached_ = r * std::sin(theta);
    has_cached_ = true;
    return r * std::cos(theta);
}

int Rng::next_int(int lo, int hi) {
    if (hi < lo) throw std::invalid_argument("Rng::next_int: empty range");
    std::uint64_t span = static_cast<std::uint64_t>(hi) - static_cast<std::uint64_t>(lo) + 1;
    return lo + static_cast<int>(next_u64() % span);
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
    Rng r(seed ^ (0x632be59bd9b4e019ULL * (stream + 1)));
    return r.next_u64();
}

} // namespace dured
