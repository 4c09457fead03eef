#pragma once

#include "dured/complex_image.hpp"

namespace dured {

/// Centered unitary 2D DFT: DC sits at (floor(H/2), floor(W/2)) in both
/// domains, energy is preserved, and ifft2_unitary is the exact inverse.
/// Odd dimensions place DC at index floor(N/2) so masks and phase factors
/// are reproducible bit-for-bit.
ComplexImage fft2_unitary(const ComplexImage& img);
ComplexImage ifft2_unitary(const ComplexImage& ksp);

/// Multiplies each k-space location by the complex exponential implementing
/// a circular spatial shift of (dx, dy) pixels (dx along columns, dy along
/// rows). Shifts are reduced modulo the grid size.
ComplexImage phase_shift_translate(const ComplexImage& ksp, int dx, int dy);

/// DC index for one axis under the centered convention.
inline int dc_index(int n) { return n / 2; }

namespace detail {
/// Unscaled centered transform on interleaved buffers; sign -1 forward,
/// +1 inverse. Exposed for the autodiff FFT node which shares this kernel.
void fft2_centered_raw(const cplx* in, cplx* out, int h, int w, int sign);
} // namespace detail

} // namespace dured
