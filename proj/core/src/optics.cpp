#include "cdpr/optics.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "cdpr/errors.hpp"
#include "cdpr/fft.hpp"

namespace cdpr {
namespace {

void require_sensor_valid(const SensorParams& s) {
  if (!(s.photon_scale > 0.0)) throw InvalidInput("SensorParams: photon_scale must be > 0");
  if (!(s.gaussian_sigma >= 0.0)) throw InvalidInput("SensorParams: gaussian_sigma must be >= 0");
  if (s.bit_depth < 1 || s.bit_depth > 16) {
    throw InvalidInput("SensorParams: bit_depth must lie in 1..16");
  }
}

double max_value(const RealImage& img) {
  double m = 0.0;
  for (double v : img.data) m = std::max(m, v);
  return m;
}

RealImage clean_stack_intensity(const ComplexImage& u, const BinaryMask& mask,
                                const ComplexImage* kernel, double truncation_fraction) {
  return truncate_high_freq(forward_intensity(u, mask, kernel), truncation_fraction);
}

}  // namespace

ComplexImage defocus_kernel(int width, int height, const DefocusParams& params) {
  require_dims(width, height, "defocus_kernel");
  if (!(params.wavelength > 0.0 && params.focal_length > 0.0 && params.distance > 0.0 &&
        params.pitch > 0.0)) {
    throw InvalidInput("defocus_kernel: all parameters must be > 0");
  }
  const double k = 2.0 * M_PI / params.wavelength;
  const double factor =
      k / (2.0 * params.distance) * (1.0 - params.distance / params.focal_length);
  const int cr = height / 2;
  const int cc = width / 2;
  ComplexImage h(width, height);
  for (int r = 0; r < height; ++r) {
    const double y = (r - cr) * params.pitch;
    for (int c = 0; c < width; ++c) {
      const double x = (c - cc) * params.pitch;
      const double phase = factor * (x * x + y * y);
      h.at(r, c) = cplx(std::cos(phase), std::sin(phase));
    }
  }
  return h;
}

RealImage forward_intensity(const ComplexImage& u, const BinaryMask& mask,
                            const ComplexImage* kernel) {
  require_same_dims(u.width, u.height, mask.width, mask.height, "forward_intensity");
  if (kernel != nullptr) {
    require_same_dims(u.width, u.height, kernel->width, kernel->height, "forward_intensity");
  }
  ComplexImage t(u.width, u.height);
  for (int r = 0; r < u.height; ++r) {
    for (int c = 0; c < u.width; ++c) {
      cplx v = mask.at(r, c) ? u.at(r, c) : cplx(0.0, 0.0);
      if (kernel != nullptr) v *= kernel->at(r, c);
      t.at(r, c) = v;
    }
  }
  const ComplexImage spec = dft2(t);
  RealImage y(u.width, u.height);
  for (std::size_t i = 0; i < spec.data.size(); ++i) y.data[i] = std::norm(spec.data[i]);
  return y;
}

RealImage truncate_high_freq(const RealImage& y, double fraction) {
  if (!(fraction >= 0.0 && fraction < 1.0)) {
    throw InvalidInput("truncate_high_freq: fraction must lie in [0, 1)");
  }
  if (fraction == 0.0) return y;
  RealImage out = y;
  for (int r = 0; r < y.height; ++r) {
    for (int c = 0; c < y.width; ++c) {
      if (in_high_band(r, c, y.width, y.height, 1.0 - fraction)) out.at(r, c) = 0.0;
    }
  }
  return out;
}

RealImage apply_sensor(const RealImage& y, const SensorParams& sensor, RandomStream& rs) {
  require_sensor_valid(sensor);
  require_finite_nonneg(y, "apply_sensor");
  double full_well = sensor.full_well;
  if (full_well <= 0.0) full_well = 1.2 * max_value(y) * sensor.photon_scale;
  if (full_well <= 0.0) full_well = 1.0;  // all-zero input; codes stay 0
  const double max_code = static_cast<double>((1u << sensor.bit_depth) - 1u);

  RealImage out(y.width, y.height);
  for (std::size_t i = 0; i < y.data.size(); ++i) {
    double photons = static_cast<double>(rs.poisson(y.data[i] * sensor.photon_scale));
    if (sensor.gaussian_sigma > 0.0) photons += sensor.gaussian_sigma * rs.gaussian();
    photons = std::clamp(photons, 0.0, full_well);
    const double code = std::floor(photons / full_well * max_code + 0.5);
    out.data[i] = code * full_well / max_code / sensor.photon_scale;
  }
  return out;
}

RealImage apply_sensor(const RealImage& y, const SensorParams& sensor) {
  RandomStream rs(sensor.seed, "sensor");
  return apply_sensor(y, sensor, rs);
}

double snr_of(const RealImage& clean, const RealImage& noisy) {
  require_same_dims(clean.width, clean.height, noisy.width, noisy.height, "snr_of");
  double signal = 0.0;
  double err = 0.0;
  for (std::size_t i = 0; i < clean.data.size(); ++i) {
    signal += clean.data[i] * clean.data[i];
    const double d = clean.data[i] - noisy.data[i];
    err += d * d;
  }
  if (err <= 0.0) return 120.0;
  const double db = 10.0 * std::log10(signal / err);
  return std::clamp(db, -120.0, 120.0);
}

MeasurementSet acquire(const ComplexImage& u, const std::vector<BinaryMask>& masks,
                       const std::optional<DefocusParams>& defocus,
                       std::optional<SensorParams> sensor, double truncation_fraction) {
  if (masks.empty()) throw InvalidInput("acquire: need at least one mask");
  ComplexImage kernel;
  const ComplexImage* kernel_ptr = nullptr;
  if (defocus.has_value()) {
    kernel = defocus_kernel(u.width, u.height, *defocus);
    kernel_ptr = &kernel;
  }

  std::vector<RealImage> clean;
  clean.reserve(masks.size());
  for (const BinaryMask& m : masks) {
    clean.push_back(clean_stack_intensity(u, m, kernel_ptr, truncation_fraction));
  }

  MeasurementSet ms;
  ms.defocus = defocus;
  ms.truncation_fraction = truncation_fraction;
  if (sensor.has_value()) {
    require_sensor_valid(*sensor);
    if (sensor->full_well <= 0.0) {
      double peak = 0.0;
      for (const RealImage& y : clean) peak = std::max(peak, max_value(y));
      sensor->full_well = peak > 0.0 ? 1.2 * peak * sensor->photon_scale : 1.0;
    }
    RandomStream base(sensor->seed, "sensor");
    for (std::size_t i = 0; i < masks.size(); ++i) {
      RandomStream rs = base.fork(i);
      ms.items.push_back({masks[i], apply_sensor(clean[i], *sensor, rs)});
    }
  } else {
    for (std::size_t i = 0; i < masks.size(); ++i) {
      ms.items.push_back({masks[i], clean[i]});
    }
  }
  ms.sensor = sensor;
  return ms;
}

double calibrate_photon_scale(const ComplexImage& u, const std::vector<BinaryMask>& masks,
                              const std::optional<DefocusParams>& defocus,
                              SensorParams sensor, double truncation_fraction,
                              double target_db, double tol_db) {
  if (masks.empty()) throw InvalidInput("calibrate_photon_scale: need at least one mask");
  ComplexImage kernel;
  const ComplexImage* kernel_ptr = nullptr;
  if (defocus.has_value()) {
    kernel = defocus_kernel(u.width, u.height, *defocus);
    kernel_ptr = &kernel;
  }
  std::vector<RealImage> clean;
  for (const BinaryMask& m : masks) {
    clean.push_back(clean_stack_intensity(u, m, kernel_ptr, truncation_fraction));
  }
  double peak = 0.0;
  for (const RealImage& y : clean) peak = std::max(peak, max_value(y));
  if (peak <= 0.0) {
    throw NumericalFailure("calibrate_photon_scale: clean intensity is identically zero");
  }

  // Deterministic given the sensor seed: every probe replays the same
  // per-measurement substreams, so snr(scale) is a fixed function.
  const auto snr_at = [&](double scale) {
    SensorParams s = sensor;
    s.photon_scale = scale;
    if (s.full_well <= 0.0) s.full_well = 1.2 * peak * scale;
    RandomStream base(s.seed, "sensor");
    double sum = 0.0;
    for (std::size_t i = 0; i < clean.size(); ++i) {
      RandomStream rs = base.fork(i);
      sum += snr_of(clean[i], apply_sensor(clean[i], s, rs));
    }
    return sum / static_cast<double>(clean.size());
  };

  // Bracket the target on a log ladder, then bisect in log space.
  double lo = 1.0 / peak;  // ~1 photon at the brightest bin: far below target
  int guard = 0;
  while (snr_at(lo) >= target_db && ++guard <= 40) lo /= 10.0;
  double hi = lo;
  double snr_hi = snr_at(hi);
  guard = 0;
  while (snr_hi < target_db && ++guard <= 40) {
    hi *= 10.0;
    snr_hi = snr_at(hi);
  }
  if (snr_hi < target_db) {
    throw NumericalFailure("calibrate_photon_scale: target SNR unreachable (saturation?)");
  }
  double best_scale = hi;
  double best_err = std::abs(snr_hi - target_db);
  for (int it = 0; it < 80 && best_err > tol_db; ++it) {
    const double mid = std::sqrt(lo * hi);
    const double snr = snr_at(mid);
    const double err = std::abs(snr - target_db);
    if (err < best_err) {
      best_err = err;
      best_scale = mid;
    }
    (snr < target_db ? lo : hi) = mid;
  }
  if (best_err > tol_db) {
    throw NumericalFailure("calibrate_photon_scale: bisection did not reach tolerance");
  }
  return best_scale;
}

}  // namespace cdpr
