#pragma once

#include "dured/complex_image.hpp"

#include <cstdint>
#include <vector>

namespace dured {

enum class PhaseMode { none, smooth };

/// Ten-ellipse Shepp-Logan head phantom on an h x w grid, intensities in
/// [0, 1], exactly zero outside the outer skull ellipse. The ellipse table
/// is mirror-symmetric about the vertical axis. phase_mode smooth multiplies
/// by a fixed low-order polynomial phase so the image is genuinely complex.
ComplexImage shepp_logan(int h, int w, PhaseMode phase_mode = PhaseMode::none);

/// n deterministic phantom variants: a random global rotation of the ellipse
/// layout, per-ellipse intensity jitter of at most `jitter` (relative), and
/// a random smooth phase. jitter = 0 reproduces shepp_logan(h, w, phase_mode)
/// for every variant.
std::vector<ComplexImage> phantom_variants(int h, int w, int n, std::uint64_t seed,
                                           PhaseMode phase_mode = PhaseMode::smooth,
                                           double jitter = 0.1);

} // namespace dured
