#include "dured/denoiser.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace dured {

std::vector<double> circular_gaussian_kernel(int n, double sigma) {
    std::vector<double> k(n, 0.0);
    if (sigma <= 0.0) { // degenerate: identity
        k[0] = 1.0;
        return k;
    }
    double sum = 0.0;
    for (int d = 0; d < n; ++d) {
        const double dist = std::min(d, n - d); // circular offset distance
        k[d] = std::exp(-dist * dist / (2.0 * sigma * sigma));
        sum += k[d];
    }
    for (auto& v : k) v /= sum;
    return k;
}

namespace {

// Separable circular convolution with per-axis kernels (full support).
ComplexImage circular_blur(const ComplexImage& x, double sigma) {
    const int h = x.height(), w = x.width();
    const auto krow = circular_gaussian_kernel(h, sigma);
    const auto kcol = circular_gaussian_kernel(w, sigma);

    ComplexImage tmp(h, w);
    for (int r = 0; r < h; ++r) {
        for (int c = 0; c < w; ++c) {
            cplx acc = 0.0;
            for (int d = 0; d < w; ++d) {
                int src = c - d; if (src < 0) src += w;
                acc += kcol[d] * x(r, src);
            }
            tmp(r, c) = acc;
        }
    }
    ComplexImage out(h, w);
    for (int c = 0; c < w; ++c) {
        for (int r = 0; r < h; ++r) {
            cplx acc = 0.0;
            for (int d = 0; d < h; ++d) {
                int src = r - d; if (src < 0) src += h;
                acc += krow[d] * tmp(src, c);
            }
            out(r, c) = acc;
        }
    }
    return out;
}

ComplexImage median_filter(const ComplexImage& x, int window) {
    const int h = x.height(), w = x.width();
    if (window < 1 || window % 2 == 0)
        throw std::invalid_argument("denoise: median window must be odd and positive");
    if (window > h || window > w)
        throw std::invalid_argument("denoise: median window exceeds image size");
    const int half = window / 2;
    ComplexImage out(h, w);
    std::vector<double> re(window * window), im(window * window);
    for (int r = 0; r < h; ++r) {
        for (int c = 0; c < w; ++c) {
            int idx = 0;
            for (int dr = -half; dr <= half; ++dr) {
                int rr = r + dr; rr = (rr % h + h) % h;
                for (int dc = -half; dc <= half; ++dc) {
                    int cc = c + dc; cc = (cc % w + w) % w;
                    re[idx] = x(rr, cc).real();
                    im[idx] = x(rr, cc).imag();
                    ++idx;
                }
            }
            const int mid = (window * window) / 2;
            std::nth_element(re.begin(), re.begin() + mid, re.end());
            std::nth_element(im.begin(), im.begin() + mid, im.end());
            out(r, c) = cplx(re[mid], im[mid]);
        }
    }
    return out;
}

} // namespace

ComplexImage denoise(const Denoiser& f, const ComplexImage& x) {
    validate_finite(x, "denoise");
    switch (f.kind) {
        case DenoiserKind::gaussian_blur:
            return circular_blur(x, f.sigma);
        case DenoiserKind::median:
            return median_filter(x, f.window);
        case DenoiserKind::residual_net: {
            if (!f.net) throw std::invalid_argument("denoise: residual_net denoiser has no network");
            ComplexImage z = zw_forward(*f.net, x);
            return x - z;
        }
    }
    throw std::logic_error("denoise: unknown kind");
}

double red_regularizer_value(const Denoiser& f, const ComplexImage& x, double lambda) {
    ComplexImage fx = denoise(f, x);
    ComplexImage resid = x - fx;
    return 0.5 * lambda * inner_re(x, resid);
}

} // namespace dured
