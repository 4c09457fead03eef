#include "dured/phantom.hpp"
#include "dured/rng.hpp"

#include <cmath>
#include <stdexcept>

namespace dured {
namespace {

struct Ellipse {
    double value;   // additive intensity
    double a, b;    // half axes (x, y)
    double x0, y0;  // center
    double phi_deg; // rotation, counterclockwise
};

// Mirror-symmetric ten-ellipse head phantom (lateral pairs share axes).
constexpr Ellipse kTable[10] = {
    {2.00, 0.6900, 0.9200, 0.00, 0.0000, 0.0},
    {-0.98, 0.6624, 0.8740, 0.00, -0.0184, 0.0},
    {-0.02, 0.1100, 0.3100, 0.22, 0.0000, -18.0},
    {-0.02, 0.1100, 0.3100, -0.22, 0.0000, 18.0},
    {0.01, 0.2100, 0.2500, 0.00, 0.3500, 0.0},
    {0.01, 0.0460, 0.0460, 0.00, 0.1000, 0.0},
    {0.01, 0.0460, 0.0460, 0.00, -0.1000, 0.0},
    {0.01, 0.0460, 0.0230, -0.08, -0.6050, 0.0},
    {0.01, 0.0230, 0.0230, 0.00, -0.6060, 0.0},
    {0.01, 0.0460, 0.0230, 0.08, -0.6050, 0.0},
};

constexpr double kPi = 3.14159265358979323846;
constexpr double kIntensityScale = 0.5; // table max is 2.0

double rasterize_at(const Ellipse* table, int count, double x, double y) {
    double v = 0.0;
    for (int e = 0; e < count; ++e) {
        const double phi = table[e].phi_deg * kPi / 180.0;
        const double ct = std::cos(phi), st = std::sin(phi);
        const double dx = x - table[e].x0, dy = y - table[e].y0;
        const double xr = ct * dx + st * dy;
        const double yr = -st * dx + ct * dy;
        const double q = (xr * xr) / (table[e].a * table[e].a) +
                         (yr * yr) / (table[e].b * table[e].b);
        if (q <= 1.0) v += table[e].value;
    }
    return v * kIntensityScale;
}

ComplexImage rasterize(const Ellipse* table, int count, int h, int w,
                       const double* phase_coef) {
    ComplexImage img(h, w);
    for (int r = 0; r < h; ++r) {
        // symmetric pixel-center mapping: column j -> x in [-1, 1], row 0 at the top
        const double y = (h > 1) ? (static_cast<double>(h - 1 - 2 * r) / (h - 1)) : 0.0;
        for (int c = 0; c < w; ++c) {
            const double x = (w > 1) ? (static_cast<double>(2 * c - (w - 1)) / (w - 1)) : 0.0;
            const double v = rasterize_at(table, count, x, y);
            if (phase_coef) {
                const double ph = phase_coef[0] * x + phase_coef[1] * y +
                                  phase_coef[2] * x * x + phase_coef[3] * y * y +
                                  phase_coef[4] * x * y;
                img(r, c) = v * cplx(std::cos(ph), std::sin(ph));
            } else {
                img(r, c) = v;
            }
        }
    }
    return img;
}

constexpr double kBasePhase[5] = {0.9, -0.7, 0.5, -0.4, 0.3};

} // namespace

ComplexImage shepp_logan(int h, int w, PhaseMode phase_mode) {
    if (h < 8 || w < 8)
        throw std::invalid_argument("shepp_logan: grid must be at least 8x8");
    return rasterize(kTable, 10, h, w,
                     phase_mode == PhaseMode::smooth ? kBasePhase : nullptr);
}

std::vector<ComplexImage> phantom_variants(int h, int w, int n, std::uint64_t seed,
                                           PhaseMode phase_mode, double jitter) {
    if (n < 1) throw std::invalid_argument("phantom_variants: n must be >= 1");
    if (jitter < 0.0 || jitter > 0.5)
        throw std::invalid_argument("phantom_variants: jitter out of range");

    std::vector<ComplexImage> out;
    out.reserve(n);
    Rng rng(mix_seed(seed, 0x7068616eULL));
    for (int v = 0; v < n; ++v) {
        // fixed draw budget per variant keeps the stream aligned for any jitter
        const double rot_deg = 15.0 * (2.0 * rng.next_double() - 1.0) * (jitter > 0.0 ? 1.0 : 0.0);
        Ellipse table[10];
        for (int e = 0; e < 10; ++e) {
            table[e] = kTable[e];
            const double scale = 1.0 + jitter * (2.0 * rng.next_double() - 1.0);
            table[e].value *= scale;
            if (rot_deg != 0.0) {
                const double th = rot_deg * kPi / 180.0;
                const double ct = std::cos(th), st = std::sin(th);
                const double x0 = table[e].x0, y0 = table[e].y0;
                table[e].x0 = ct * x0 - st * y0;
                table[e].y0 = st * x0 + ct * y0;
                table[e].phi_deg += rot_deg;
            }
        }
        double phase[5];
        for (double& p : phase) {
            const double delta = (2.0 * rng.next_double() - 1.0) * (jitter > 0.0 ? 0.8 : 0.0);
            p = delta;
        }
        const double* phase_ptr = nullptr;
        double combined[5];
        if (phase_mode == PhaseMode::smooth) {
            for (int i = 0; i < 5; ++i) combined[i] = kBasePhase[i] + phase[i];
            phase_ptr = combined;
        }
        out.push_back(rasterize(table, 10, h, w, phase_ptr));
    }
    return out;
}

} // namespace dured
