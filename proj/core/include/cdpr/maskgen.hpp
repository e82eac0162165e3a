#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cdpr/image.hpp"

namespace cdpr {

enum class MaskKind { white, blue, green };

std::string to_string(MaskKind kind);
MaskKind mask_kind_from_string(const std::string& name);

struct BinaryMask {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> bits;  // row-major, each element 0 or 1
  MaskKind kind = MaskKind::white;
  double sigma = 0.0;  // on-off ratio
  double r1 = 0.0;     // inner diffusion radius; green masks only
  std::uint64_t seed = 0;

  std::uint8_t at(int row, int col) const {
    return bits[static_cast<std::size_t>(row) * width + col];
  }
  long long ones() const;
};

// Sparse diffusion kernel over integer pixel offsets. Weights are uniform
// over the support and sum to exactly 1; the center cell is never included.
struct DiffusionKernel {
  struct Tap {
    int dr = 0;
    int dc = 0;
    double weight = 0.0;
  };
  double r1 = 0.0;
  double r2 = 0.0;
  std::vector<Tap> taps;
};

struct SpectralProfile {
  std::vector<double> bin_centers;  // cycles/pixel in [0, sqrt(2)/2]
  std::vector<double> mean_power;   // mean |coefficient|^2 per bin, DC excluded
  double eta = 0.0;                 // high-frequency energy ratio
};

// Ring support r1 < d <= sqrt(2)*r1 over integer offsets (m, n), weights
// renormalized to sum 1. r1 == 0 degenerates to a disk of radius sqrt(2).
// Throws InvalidInput for r1 < 0 or an empty integer support.
DiffusionKernel ring_filter(double r1);

// Disk support 0 < d <= radius; the blue-noise engine kernel.
DiffusionKernel disk_filter(double radius);

// Green-noise mask via multiscale error diffusion with the ring filter:
// a working grid starts at constant sigma; dots are placed at the running
// maximum (found by dyadic max-pyramid descent, exact-value ties resolved
// by a RandomStream draw over the row-major-ordered candidates) and the
// quantization error value-1 is diffused to unprocessed in-bounds
// neighbors through the renormalized kernel until floor(sigma*w*h + 0.5)
// dots exist or no positive mass remains.
BinaryMask fmedg_generate(int width, int height, double sigma, double r1,
                          std::uint64_t seed);

// Exactly round(sigma*w*h) ones placed by a seeded Fisher-Yates shuffle.
BinaryMask white_noise_mask(int width, int height, double sigma, std::uint64_t seed);

// Same engine as fmedg_generate but with disk_filter(1.5), which disperses
// dots into a high-frequency (blue) pattern.
BinaryMask blue_noise_mask(int width, int height, double sigma, std::uint64_t seed);

// Trivial all-zero / all-one masks (the sigma = 0 and sigma = 1 limits).
BinaryMask constant_mask(int width, int height, int value);

// Fraction of spectral energy with |centered index| beyond 80% of the band
// edge on either axis, DC included in the denominator. 0 for constant masks.
double high_freq_ratio(const BinaryMask& mask);

// Radially averaged power spectrum over `bins` equal-width bins spanning
// [0, sqrt(2)/2] cycles/pixel; DC is excluded, empty bins report 0.
SpectralProfile radial_power_spectrum(const BinaryMask& mask, int bins);

}  // namespace cdpr
