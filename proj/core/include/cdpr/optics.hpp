#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "cdpr/image.hpp"
#include "cdpr/maskgen.hpp"
#include "cdpr/random.hpp"

namespace cdpr {

// Defocus geometry; all lengths in meters.
struct DefocusParams {
  double wavelength = 632.8e-9;
  double focal_length = 0.1;
  double distance = 0.13;  // camera-to-lens distance L
  double pitch = 13.68e-6;
};

struct SensorParams {
  double photon_scale = 1e4;    // expected photons at unit intensity
  double gaussian_sigma = 2.0;  // read-noise std, photon units
  int bit_depth = 12;           // 1..16
  double full_well = 0.0;       // photons mapped to code 2^bits-1; <= 0 means
                                // auto: 1.2 x the clean maximum
  std::uint64_t seed = 0;
};

struct Measurement {
  BinaryMask mask;
  RealImage intensity;  // photon-unit values (already truncated/degraded)
};

struct MeasurementSet {
  std::vector<Measurement> items;
  std::optional<DefocusParams> defocus;
  std::optional<SensorParams> sensor;  // nullopt = ideal sensor (no noise, no quantization)
  double truncation_fraction = 0.0;
};

// Phase-only kernel h = exp(i k/(2L) (1 - L/f) r^2) with r measured from the
// grid center floor(n/2) in units of pitch; h at the center is exactly 1.
ComplexImage defocus_kernel(int width, int height, const DefocusParams& params);

// |dft2(mask o kernel o u)|^2; kernel may be null.
RealImage forward_intensity(const ComplexImage& u, const BinaryMask& mask,
                            const ComplexImage* kernel = nullptr);

// Zero every coefficient with |centered index| > (1 - fraction)*floor(n/2)
// on either axis; fraction in [0, 1), 0 is the identity.
RealImage truncate_high_freq(const RealImage& y, double fraction);

// Scale to photons, Poisson-sample, add Gaussian read noise, clip to
// [0, full_well], round to integer codes 0..2^bits-1, then return
// codes * full_well / (2^bits - 1) / photon_scale so downstream math stays
// in the units of the input. The overload without a stream draws from
// RandomStream(sensor.seed, "sensor").
RealImage apply_sensor(const RealImage& y, const SensorParams& sensor);
RealImage apply_sensor(const RealImage& y, const SensorParams& sensor, RandomStream& rs);

// 10 log10(sum clean^2 / sum (clean - noisy)^2), capped at +120 dB.
double snr_of(const RealImage& clean, const RealImage& noisy);

// Full pipeline per mask: forward_intensity -> truncate_high_freq ->
// apply_sensor, with measurement i drawing from the "sensor" stream's
// fork(i). An auto full_well is resolved once against the whole clean stack
// and materialized in the returned set.
MeasurementSet acquire(const ComplexImage& u, const std::vector<BinaryMask>& masks,
                       const std::optional<DefocusParams>& defocus,
                       std::optional<SensorParams> sensor, double truncation_fraction);

// Deterministic bisection on photon_scale until the mean SNR of the stack
// (clean truncated intensities vs. degraded ones) is within tol_db of
// target_db. The sensor's full_well setting is honored (auto stays auto, so
// quantization tracks the exposure); the returned scale is reproducible
// because every probe reuses the same seed-derived streams.
double calibrate_photon_scale(const ComplexImage& u, const std::vector<BinaryMask>& masks,
                              const std::optional<DefocusParams>& defocus,
                              SensorParams sensor, double truncation_fraction,
                              double target_db, double tol_db = 0.1);

}  // namespace cdpr
