#include "dured/fft.hpp"

#include <fftw3.h>

#include <cmath>
#include <map>
#include <mutex>
#include <stdexcept>
#include <vector>

namespace dured {
namespace {

// FFTW plan creation is not thread safe; execution on distinct buffers is.
// Plans are cached per (h, w, sign) and created UNALIGNED so they can be
// executed on any caller buffer.
class PlanCache {
public:
    fftw_plan get(int h, int w, int sign) {
        std::lock_guard<std::mutex> lock(mu_);
        auto key = std::make_tuple(h, w, sign);
        auto it = plans_.find(key);
        if (it != plans_.end()) return it->second;
        std::vector<cplx> scratch_in(static_cast<std::size_t>(h) * w);
        std::vector<cplx> scratch_out(scratch_in.size());
        fftw_plan p = fftw_plan_dft_2d(
            h, w,
            reinterpret_cast<fftw_complex*>(scratch_in.data()),
            reinterpret_cast<fftw_complex*>(scratch_out.data()),
            sign, FFTW_ESTIMATE | FFTW_UNALIGNED);
        if (!p) throw std::runtime_error("fft2: fftw plan creation failed");
        plans_.emplace(key, p);
        return p;
    }

private:
    std::mutex mu_;
    std::map<std::tuple<int, int, int>, fftw_plan> plans_;
};

PlanCache& cache() {
    static PlanCache c;
    return c;
}

} // namespace

namespace detail {

void fft2_centered_raw(const cplx* in, cplx* out, int h, int w, int sign) {
    const int cy = dc_index(h), cx = dc_index(w);
    const std::size_t n = static_cast<std::size_t>(h) * w;
    std::vector<cplx> tmp(n), res(n);
    // ifftshift: move the DC pixel to index (0, 0)
    for (int r = 0; r < h; ++r) {
        int rs = r + cy; if (rs >= h) rs -= h;
        for (int c = 0; c < w; ++c) {
            int cs = c + cx; if (cs >= w) cs -= w;
            tmp[static_cast<std::size_t>(r) * w + c] = in[static_cast<std::size_t>(rs) * w + cs];
        }
    }
    fftw_plan p = cache().get(h, w, sign < 0 ? FFTW_FORWARD : FFTW_BACKWARD);
    fftw_execute_dft(p,
                     reinterpret_cast<fftw_complex*>(tmp.data()),
                     reinterpret_cast<fftw_complex*>(res.data()));
    // fftshift: move index (0, 0) back to the DC pixel
    for (int r = 0; r < h; ++r) {
        int rs = r - cy; if (rs < 0) rs += h;
        for (int c = 0; c < w; ++c) {
            int cs = c - cx; if (cs < 0) cs += w;
            out[static_cast<std::size_t>(r) * w + c] = res[static_cast<std::size_t>(rs) * w + cs];
        }
    }
}

} // namespace detail

namespace {

ComplexImage transform(const ComplexImage& in, int sign, const char* what) {
    validate_finite(in, what);
    ComplexImage out(in.height(), in.width());
    detail::fft2_centered_raw(in.data(), out.data(), in.height(), in.width(), sign);
    const double scale = 1.0 / std::sqrt(static_cast<double>(in.size()));
    out *= scale;
    return out;
}

} // namespace

ComplexImage fft2_unitary(const ComplexImage& img) { return transform(img, -1, "fft2_unitary"); }

ComplexImage ifft2_unitary(const ComplexImage& ksp) { return transform(ksp, +1, "ifft2_unitary"); }

ComplexImage phase_shift_translate(const ComplexImage& ksp, int dx, int dy) {
    const int h = ksp.height(), w = ksp.width();
    const int cy = dc_index(h), cx = dc_index(w);
    ComplexImage out(h, w);
    const double two_pi = 6.283185307179586476925286766559;
    for (int r = 0; r < h; ++r) {
        const double fy = static_cast<double>(r - cy) / h;
        for (int c = 0; c < w; ++c) {
            const double fx = static_cast<double>(c - cx) / w;
            const double phase = -two_pi * (fx * dx + fy * dy);
            out(r, c) = ksp(r, c) * cplx(std::cos(phase), std::sin(phase));
        }
    }
    return out;
}

} // namespace dured
