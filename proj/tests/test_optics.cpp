#include <algorithm>
#include <cmath>
#include <complex>
#include <numeric>
#include <vector>

#include "cdpr/errors.hpp"
#include "cdpr/fft.hpp"
#include "cdpr/image.hpp"
#include "cdpr/maskgen.hpp"
#include "cdpr/optics.hpp"
#include "doctest.h"
#include "test_support.hpp"

using namespace cdpr;
using cdpr::testing::random_image;
using cdpr::testing::random_nonneg;

namespace {

double stack_snr(const ComplexImage& u, const std::vector<BinaryMask>& masks,
                 const MeasurementSet& ms) {
  double acc = 0.0;
  for (std::size_t i = 0; i < masks.size(); ++i) {
    RealImage clean = truncate_high_freq(forward_intensity(u, masks[i]), ms.truncation_fraction);
    acc += snr_of(clean, ms.items[i].intensity);
  }
  return acc / static_cast<double>(masks.size());
}

}  // namespace

TEST_SUITE("optics") {

TEST_CASE("defocus kernel matches the scalar phase formula") {
  const DefocusParams d;  // 632.8nm, f=0.1, L=0.13, pitch=13.68um
  const ComplexImage h = defocus_kernel(64, 64, d);

  // Center pixel floor(64/2) = (32, 32) carries zero phase.
  CHECK(h.at(32, 32) == cplx(1.0, 0.0));

  // Pixel (42, 32) sits 10 pitches from the center along one axis.
  const double k = 2.0 * M_PI / d.wavelength;
  const double r = 10.0 * d.pitch;
  const double phase = k / (2.0 * d.distance) * (1.0 - d.distance / d.focal_length) * r * r;
  CHECK(std::abs(h.at(42, 32) - std::polar(1.0, phase)) < 1e-12);

  // Same distance left of center, and the diagonal combination.
  CHECK(std::abs(h.at(22, 32) - std::polar(1.0, phase)) < 1e-12);
  const double rd = d.pitch * d.pitch * (9.0 * 9.0 + 20.0 * 20.0);
  const double phase_d = k / (2.0 * d.distance) * (1.0 - d.distance / d.focal_length) * rd;
  CHECK(std::abs(h.at(41, 52) - std::polar(1.0, phase_d)) < 1e-12);

  for (const cplx& v : h.data) CHECK(std::abs(std::abs(v) - 1.0) < 1e-15);
}

TEST_CASE("in-focus geometry collapses the kernel to unity") {
  DefocusParams d;
  d.distance = d.focal_length;
  const ComplexImage h = defocus_kernel(32, 32, d);
  for (const cplx& v : h.data) CHECK(v == cplx(1.0, 0.0));
}

TEST_CASE("defocus parameter validation") {
  DefocusParams d;
  d.wavelength = 0.0;
  CHECK_THROWS_AS(defocus_kernel(16, 16, d), InvalidInput);
  d = DefocusParams{};
  d.pitch = -1e-6;
  CHECK_THROWS_AS(defocus_kernel(16, 16, d), InvalidInput);
  d = DefocusParams{};
  d.distance = 0.0;
  CHECK_THROWS_AS(defocus_kernel(16, 16, d), InvalidInput);
  CHECK_THROWS_AS(defocus_kernel(0, 16, DefocusParams{}), InvalidInput);
}

TEST_CASE("forward intensity conserves energy and handles edge masks") {
  const ComplexImage u = random_image(8, 8, 11);
  const BinaryMask mask = white_noise_mask(8, 8, 0.5, 3);
  const RealImage y = forward_intensity(u, mask);

  double sum_y = 0.0;
  for (double v : y.data) {
    CHECK(v >= 0.0);
    sum_y += v;
  }
  double masked_energy = 0.0;
  for (std::size_t i = 0; i < u.data.size(); ++i) {
    if (mask.bits[i]) masked_energy += std::norm(u.data[i]);
  }
  CHECK(sum_y == doctest::Approx(masked_energy).epsilon(1e-12));

  const RealImage y0 = forward_intensity(u, constant_mask(8, 8, 0));
  for (double v : y0.data) CHECK(v == 0.0);
}

TEST_CASE("uniform field through an open mask is a DC spike") {
  ComplexImage u(8, 8);
  for (cplx& v : u.data) v = cplx(1.0, 0.0);
  const RealImage y = forward_intensity(u, constant_mask(8, 8, 1));
  CHECK(y.at(0, 0) == doctest::Approx(64.0).epsilon(1e-12));
  for (int r = 0; r < 8; ++r) {
    for (int c = 0; c < 8; ++c) {
      if (r != 0 || c != 0) CHECK(y.at(r, c) < 1e-20);
    }
  }
}

TEST_CASE("forward intensity threads the kernel through the product") {
  const ComplexImage u = random_image(16, 16, 4);
  const ComplexImage h = defocus_kernel(16, 16, DefocusParams{});
  const BinaryMask mask = white_noise_mask(16, 16, 0.7, 5);
  const RealImage y = forward_intensity(u, mask, &h);

  ComplexImage prod(16, 16);
  for (std::size_t i = 0; i < u.data.size(); ++i) {
    prod.data[i] = static_cast<double>(mask.bits[i]) * h.data[i] * u.data[i];
  }
  const ComplexImage spec = dft2(prod);
  for (std::size_t i = 0; i < y.data.size(); ++i) {
    CHECK(y.data[i] == doctest::Approx(std::norm(spec.data[i])).epsilon(1e-12));
  }
}

TEST_CASE("truncation zeroes exactly the high band") {
  RealImage ones(10, 10);
  for (double& v : ones.data) v = 1.0;

  const RealImage same = truncate_high_freq(ones, 0.0);
  CHECK(same.data == ones.data);

  const RealImage cut = truncate_high_freq(ones, 0.2);
  double sum = 0.0;
  for (int r = 0; r < 10; ++r) {
    for (int c = 0; c < 10; ++c) {
      const bool banded = in_high_band(r, c, 10, 10, 0.8);
      CHECK(cut.at(r, c) == (banded ? 0.0 : 1.0));
      sum += cut.at(r, c);
    }
  }
  CHECK(sum == 81.0);

  const RealImage twice = truncate_high_freq(cut, 0.2);
  CHECK(twice.data == cut.data);

  const RealImage y = random_nonneg(16, 16, 21);
  double prev = 2.0 * std::accumulate(y.data.begin(), y.data.end(), 0.0);
  for (double f : {0.0, 0.2, 0.5, 0.8}) {
    const RealImage yt = truncate_high_freq(y, f);
    const double e = std::accumulate(yt.data.begin(), yt.data.end(), 0.0);
    CHECK(e <= prev);
    prev = e;
  }

  CHECK_THROWS_AS(truncate_high_freq(ones, 1.0), InvalidInput);
  CHECK_THROWS_AS(truncate_high_freq(ones, -0.1), InvalidInput);
}

TEST_CASE("sensor at extreme exposure reduces to quantization") {
  const RealImage y = random_nonneg(16, 16, 8);
  SensorParams s;
  s.photon_scale = 1e12;
  s.gaussian_sigma = 0.0;
  s.bit_depth = 16;
  s.seed = 2;
  const RealImage out = apply_sensor(y, s);

  const double peak = *std::max_element(y.data.begin(), y.data.end());
  const double step = 1.2 * peak / 65535.0;  // auto full_well, decoded units
  for (std::size_t i = 0; i < y.data.size(); ++i) {
    CHECK(std::abs(out.data[i] - y.data[i]) <= step);
  }
}

TEST_CASE("sensor maps zero input to exact zeros") {
  RealImage y(12, 12);
  SensorParams s;
  s.gaussian_sigma = 0.0;
  const RealImage out = apply_sensor(y, s);
  for (double v : out.data) CHECK(v == 0.0);
}

TEST_CASE("sensor is deterministic in the seed") {
  const RealImage y = random_nonneg(16, 16, 30);
  SensorParams s;
  s.seed = 77;
  const RealImage a = apply_sensor(y, s);
  const RealImage b = apply_sensor(y, s);
  CHECK(a.data == b.data);
  s.seed = 78;
  const RealImage c = apply_sensor(y, s);
  CHECK(a.data != c.data);
}

TEST_CASE("sensor noise statistics follow the Poisson model") {
  // Constant intensity 5 at 1000 photons/unit: decoded mean stays near 5
  // and per-pixel variance near 5/1000, with quantization kept negligible
  // by a 16-bit ADC and a fixed full well.
  const int n = 64;
  RealImage y(n, n);
  for (double& v : y.data) v = 5.0;
  SensorParams s;
  s.photon_scale = 1000.0;
  s.gaussian_sigma = 0.0;
  s.bit_depth = 16;
  s.full_well = 40000.0;
  s.seed = 4;
  const RealImage out = apply_sensor(y, s);

  double mean = 0.0;
  for (double v : out.data) mean += v / (n * n);
  const double mean_tol = 3.0 * std::sqrt(5.0 / (1000.0 * n * n));
  CHECK(std::abs(mean - 5.0) < mean_tol);

  double var = 0.0;
  for (double v : out.data) var += (v - mean) * (v - mean) / (n * n - 1);
  CHECK(var > 0.8 * 5.0 / 1000.0);
  CHECK(var < 1.2 * 5.0 / 1000.0);
}

TEST_CASE("snr_of matches its formula and caps at 120") {
  const RealImage clean = random_nonneg(8, 8, 14);
  CHECK(snr_of(clean, clean) == 120.0);

  RealImage twice = clean;
  for (double& v : twice.data) v *= 2.0;
  CHECK(snr_of(clean, twice) == doctest::Approx(0.0).epsilon(1e-12));

  const RealImage noisy = random_nonneg(8, 8, 15);
  double num = 0.0;
  double den = 0.0;
  for (std::size_t i = 0; i < clean.data.size(); ++i) {
    num += clean.data[i] * clean.data[i];
    const double d = clean.data[i] - noisy.data[i];
    den += d * d;
  }
  CHECK(snr_of(clean, noisy) == doctest::Approx(10.0 * std::log10(num / den)).epsilon(1e-12));
}

TEST_CASE("snr rises strictly with exposure") {
  const ComplexImage u = random_image(32, 32, 6);
  std::vector<BinaryMask> masks;
  masks.push_back(white_noise_mask(32, 32, 0.5, 1));
  masks.push_back(white_noise_mask(32, 32, 0.5, 2));

  double prev = -1e9;
  for (double scale : {1e2, 1e3, 1e4, 1e5}) {
    SensorParams s;
    s.photon_scale = scale;
    s.seed = 9;
    const MeasurementSet ms = acquire(u, masks, std::nullopt, s, 0.2);
    const double snr = stack_snr(u, masks, ms);
    CAPTURE(scale);
    CHECK(snr > prev);
    prev = snr;
  }
}

TEST_CASE("photon-scale calibration hits the requested snr") {
  const ComplexImage u = random_image(32, 32, 19);
  std::vector<BinaryMask> masks;
  masks.push_back(white_noise_mask(32, 32, 0.5, 1));
  masks.push_back(white_noise_mask(32, 32, 0.5, 2));

  for (double target : {22.5, 26.5}) {
    SensorParams s;
    s.seed = 3;
    s.photon_scale = calibrate_photon_scale(u, masks, std::nullopt, s, 0.2, target);
    const MeasurementSet ms = acquire(u, masks, std::nullopt, s, 0.2);
    const double measured = stack_snr(u, masks, ms);
    CAPTURE(target);
    CAPTURE(measured);
    CHECK(std::abs(measured - target) <= 0.3);
  }
}

TEST_CASE("acquire wires masks, truncation, and the sensor together") {
  const ComplexImage u = random_image(16, 16, 23);
  const BinaryMask m = white_noise_mask(16, 16, 0.5, 1);
  std::vector<BinaryMask> masks = {m, m, m};

  SensorParams s;
  s.seed = 11;
  const MeasurementSet ms = acquire(u, masks, std::nullopt, s, 0.0);
  REQUIRE(ms.items.size() == 3);
  // Identical masks, distinct sensor forks: realizations must differ.
  CHECK(ms.items[0].intensity.data != ms.items[1].intensity.data);
  CHECK(ms.items[1].intensity.data != ms.items[2].intensity.data);

  // Auto full well is materialized from the clean truncated stack peak.
  const MeasurementSet mt = acquire(u, masks, std::nullopt, s, 0.2);
  double peak = 0.0;
  for (const auto& mk : masks) {
    const RealImage clean = truncate_high_freq(forward_intensity(u, mk), 0.2);
    for (double v : clean.data) peak = std::max(peak, v);
  }
  REQUIRE(mt.sensor.has_value());
  CHECK(mt.sensor->full_well ==
        doctest::Approx(1.2 * peak * s.photon_scale).epsilon(1e-12));
  CHECK(mt.truncation_fraction == 0.2);

  // Ideal sensor: truncated bins are exactly zero.
  const MeasurementSet ideal = acquire(u, masks, std::nullopt, std::nullopt, 0.2);
  for (const auto& item : ideal.items) {
    for (int r = 0; r < 16; ++r) {
      for (int c = 0; c < 16; ++c) {
        if (in_high_band(r, c, 16, 16, 0.8)) CHECK(item.intensity.at(r, c) == 0.0);
      }
    }
  }
}

}  // TEST_SUITE
