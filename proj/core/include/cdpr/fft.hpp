#pragma once

#include "cdpr/image.hpp"

namespace cdpr {

// Orthonormal 2-D DFT: both directions carry the 1/sqrt(width*height)
// factor, so Parseval holds exactly and idft2 is the true inverse (and
// adjoint) of dft2. Frequency index (0,0) is DC before any shifting.
// Any side length is supported (radix-2 for powers of two, Bluestein
// otherwise); plans are cached per length and safe for concurrent use.
ComplexImage dft2(const ComplexImage& img);
ComplexImage idft2(const ComplexImage& img);

// Move DC to the grid center (floor(h/2), floor(w/2)); unshift composed
// with fftshift_center is the identity for any dimensions, odd included.
ComplexImage fftshift_center(const ComplexImage& img);
ComplexImage unshift(const ComplexImage& img);

// Signed frequency of unshifted index i on an axis of length n:
// 0..ceil(n/2)-1 map to themselves, the rest wrap to negatives; for even n
// the Nyquist bin reports -n/2.
int centered_index(int i, int n);

// Square high-frequency band shared by the eta statistic and frequency
// truncation: true iff |centered row| > limit_fraction*floor(height/2) or
// |centered col| > limit_fraction*floor(width/2) (strict). (row, col) are
// unshifted grid indices.
bool in_high_band(int row, int col, int width, int height, double limit_fraction);

}  // namespace cdpr
