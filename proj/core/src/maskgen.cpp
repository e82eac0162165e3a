#include "cdpr/maskgen.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "cdpr/errors.hpp"
#include "cdpr/fft.hpp"
#include "cdpr/random.hpp"

namespace cdpr {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Dyadic max pyramid over the working grid; level 0 is the grid itself and
// each coarser level holds the max of its (up to) 2x2 children. Processed
// cells are excluded by writing -inf.
struct MaxPyramid {
  struct Level {
    int w = 0;
    int h = 0;
    std::vector<double> v;
  };
  std::vector<Level> levels;

  MaxPyramid(int w, int h, double fill) {
    levels.push_back({w, h, std::vector<double>(static_cast<std::size_t>(w) * h, fill)});
    while (levels.back().w > 1 || levels.back().h > 1) {
      const Level& fine = levels.back();
      Level coarse{(fine.w + 1) / 2, (fine.h + 1) / 2, {}};
      coarse.v.assign(static_cast<std::size_t>(coarse.w) * coarse.h, kNegInf);
      levels.push_back(std::move(coarse));
      const int k = static_cast<int>(levels.size()) - 1;
      for (int r = 0; r < levels[k].h; ++r) {
        for (int c = 0; c < levels[k].w; ++c) {
          levels[k].v[static_cast<std::size_t>(r) * levels[k].w + c] = child_max(k, r, c);
        }
      }
    }
  }

  double child_max(int level, int r, int c) const {
    const Level& fine = levels[static_cast<std::size_t>(level) - 1];
    double m = kNegInf;
    for (int dr = 0; dr < 2; ++dr) {
      for (int dc = 0; dc < 2; ++dc) {
        const int rr = 2 * r + dr;
        const int cc = 2 * c + dc;
        if (rr < fine.h && cc < fine.w) {
          m = std::max(m, fine.v[static_cast<std::size_t>(rr) * fine.w + cc]);
        }
      }
    }
    return m;
  }

  void set(int r, int c, double value) {
    levels[0].v[static_cast<std::size_t>(r) * levels[0].w + c] = value;
    for (std::size_t k = 1; k < levels.size(); ++k) {
      r >>= 1;
      c >>= 1;
      levels[k].v[static_cast<std::size_t>(r) * levels[k].w + c] =
          child_max(static_cast<int>(k), r, c);
    }
  }

  double root() const { return levels.back().v[0]; }

  // Descend from the root choosing the maximum child each level; children
  // are visited in row-major order and exact ties are resolved by one
  // RandomStream draw over the tied candidates, which de-patterns runs of
  // equal values without costing determinism.
  std::pair<int, int> argmax(RandomStream& rs) const {
    int r = 0;
    int c = 0;
    for (int k = static_cast<int>(levels.size()) - 1; k >= 1; --k) {
      const Level& fine = levels[static_cast<std::size_t>(k) - 1];
      int cand_r[4];
      int cand_c[4];
      int count = 0;
      double best = kNegInf;
      for (int dr = 0; dr < 2; ++dr) {
        for (int dc = 0; dc < 2; ++dc) {
          const int rr = 2 * r + dr;
          const int cc = 2 * c + dc;
          if (rr >= fine.h || cc >= fine.w) continue;
          const double v = fine.v[static_cast<std::size_t>(rr) * fine.w + cc];
          if (v > best) {
            best = v;
            count = 0;
          }
          if (v == best) {
            cand_r[count] = rr;
            cand_c[count] = cc;
            ++count;
          }
        }
      }
      int pick = 0;
      if (count > 1) pick = static_cast<int>(rs.below(static_cast<std::uint64_t>(count)));
      r = cand_r[pick];
      c = cand_c[pick];
    }
    return {r, c};
  }
};

DiffusionKernel make_uniform_kernel(double r1, double r2, const char* context) {
  DiffusionKernel k;
  k.r1 = r1;
  k.r2 = r2;
  const int reach = static_cast<int>(std::ceil(r2));
  for (int dr = -reach; dr <= reach; ++dr) {
    for (int dc = -reach; dc <= reach; ++dc) {
      if (dr == 0 && dc == 0) continue;
      const double d = std::sqrt(static_cast<double>(dr) * dr + static_cast<double>(dc) * dc);
      if (d > r1 && d <= r2) k.taps.push_back({dr, dc, 0.0});
    }
  }
  if (k.taps.empty()) {
    throw InvalidInput(std::string(context) + ": no integer offsets satisfy " +
                       std::to_string(r1) + " < d <= " + std::to_string(r2));
  }
  const double w = 1.0 / static_cast<double>(k.taps.size());
  for (auto& tap : k.taps) tap.weight = w;
  // Make the left-to-right sum exactly 1 (a <= 1 ulp nudge on the last tap).
  double s = 0.0;
  for (const auto& tap : k.taps) s += tap.weight;
  k.taps.back().weight += 1.0 - s;
  return k;
}

// Shared multiscale error-diffusion engine: dot placement at the running
// maximum, error = value - 1 diffused through the kernel renormalized over
// in-bounds unprocessed cells.
BinaryMask med_generate(int width, int height, double sigma, const DiffusionKernel& kernel,
                        MaskKind kind, double r1_field, std::uint64_t seed,
                        const std::string& stream_id) {
  require_dims(width, height, "med_generate");
  if (static_cast<long long>(width) * height < 4) {
    throw InvalidInput("med_generate: grid must have at least 4 pixels");
  }
  if (!(sigma > 0.0 && sigma < 1.0)) {
    throw InvalidInput("med_generate: sigma must lie in (0, 1), got " + std::to_string(sigma));
  }

  const std::size_t n = static_cast<std::size_t>(width) * height;
  std::vector<double> value(n, sigma);
  std::vector<std::uint8_t> processed(n, 0);
  BinaryMask mask;
  mask.width = width;
  mask.height = height;
  mask.bits.assign(n, 0);
  mask.kind = kind;
  mask.sigma = sigma;
  mask.r1 = r1_field;
  mask.seed = seed;

  RandomStream rs(seed, stream_id);
  MaxPyramid pyr(width, height, sigma);
  const long long target = std::llround(sigma * static_cast<double>(width) * height);

  long long placed = 0;
  while (placed < target && pyr.root() > 0.0) {
    const auto [r, c] = pyr.argmax(rs);
    const std::size_t idx = static_cast<std::size_t>(r) * width + c;
    const double err = value[idx] - 1.0;
    mask.bits[idx] = 1;
    processed[idx] = 1;
    ++placed;
    pyr.set(r, c, kNegInf);

    double wsum = 0.0;
    for (const auto& tap : kernel.taps) {
      const int rr = r + tap.dr;
      const int cc = c + tap.dc;
      if (rr < 0 || rr >= height || cc < 0 || cc >= width) continue;
      if (processed[static_cast<std::size_t>(rr) * width + cc]) continue;
      wsum += tap.weight;
    }
    if (wsum <= 0.0) continue;  // boundary-starved: residual is discarded
    for (const auto& tap : kernel.taps) {
      const int rr = r + tap.dr;
      const int cc = c + tap.dc;
      if (rr < 0 || rr >= height || cc < 0 || cc >= width) continue;
      const std::size_t ii = static_cast<std::size_t>(rr) * width + cc;
      if (processed[ii]) continue;
      value[ii] += err * (tap.weight / wsum);
      pyr.set(rr, cc, value[ii]);
    }
  }
  return mask;
}

}  // namespace

std::string to_string(MaskKind kind) {
  switch (kind) {
    case MaskKind::white: return "white";
    case MaskKind::blue: return "blue";
    case MaskKind::green: return "green";
  }
  throw InvalidInput("to_string: unknown MaskKind");
}

MaskKind mask_kind_from_string(const std::string& name) {
  if (name == "white") return MaskKind::white;
  if (name == "blue") return MaskKind::blue;
  if (name == "green") return MaskKind::green;
  throw InvalidInput("mask kind must be white, blue, or green; got '" + name + "'");
}

long long BinaryMask::ones() const {
  long long s = 0;
  for (std::uint8_t b : bits) s += b;
  return s;
}

DiffusionKernel ring_filter(double r1) {
  if (r1 < 0.0) throw InvalidInput("ring_filter: r1 must be >= 0");
  if (r1 == 0.0) return make_uniform_kernel(0.0, M_SQRT2, "ring_filter");
  return make_uniform_kernel(r1, M_SQRT2 * r1, "ring_filter");
}

DiffusionKernel disk_filter(double radius) {
  if (radius <= 0.0) throw InvalidInput("disk_filter: radius must be > 0");
  return make_uniform_kernel(0.0, radius, "disk_filter");
}

BinaryMask fmedg_generate(int width, int height, double sigma, double r1, std::uint64_t seed) {
  if (r1 < 0.5) throw InvalidInput("fmedg_generate: r1 must be >= 0.5");
  const DiffusionKernel kernel = ring_filter(r1);
  return med_generate(width, height, sigma, kernel, MaskKind::green, r1, seed, "med/green");
}

BinaryMask blue_noise_mask(int width, int height, double sigma, std::uint64_t seed) {
  const DiffusionKernel kernel = disk_filter(1.5);
  return med_generate(width, height, sigma, kernel, MaskKind::blue, 0.0, seed, "med/blue");
}

BinaryMask white_noise_mask(int width, int height, double sigma, std::uint64_t seed) {
  require_dims(width, height, "white_noise_mask");
  if (!(sigma >= 0.0 && sigma <= 1.0)) {
    throw InvalidInput("white_noise_mask: sigma must lie in [0, 1]");
  }
  const std::size_t n = static_cast<std::size_t>(width) * height;
  BinaryMask mask;
  mask.width = width;
  mask.height = height;
  mask.bits.assign(n, 0);
  mask.kind = MaskKind::white;
  mask.sigma = sigma;
  mask.r1 = 0.0;
  mask.seed = seed;

  const auto count = static_cast<std::size_t>(std::llround(sigma * static_cast<double>(n)));
  std::vector<std::uint32_t> order(n);
  std::iota(order.begin(), order.end(), 0u);
  RandomStream rs(seed, "mask/white");
  for (std::size_t i = n - 1; i > 0; --i) {
    const std::size_t j = rs.below(i + 1);
    std::swap(order[i], order[j]);
  }
  for (std::size_t i = 0; i < count; ++i) mask.bits[order[i]] = 1;
  return mask;
}

BinaryMask constant_mask(int width, int height, int value) {
  require_dims(width, height, "constant_mask");
  if (value != 0 && value != 1) throw InvalidInput("constant_mask: value must be 0 or 1");
  BinaryMask mask;
  mask.width = width;
  mask.height = height;
  mask.bits.assign(static_cast<std::size_t>(width) * height, static_cast<std::uint8_t>(value));
  mask.kind = MaskKind::white;
  mask.sigma = static_cast<double>(value);
  mask.r1 = 0.0;
  mask.seed = 0;
  return mask;
}

namespace {

ComplexImage mask_to_complex(const BinaryMask& mask) {
  ComplexImage img(mask.width, mask.height);
  for (std::size_t i = 0; i < mask.bits.size(); ++i) {
    img.data[i] = cplx(static_cast<double>(mask.bits[i]), 0.0);
  }
  return img;
}

}  // namespace

double high_freq_ratio(const BinaryMask& mask) {
  const ComplexImage spec = dft2(mask_to_complex(mask));
  double total = 0.0;
  double band = 0.0;
  for (int r = 0; r < mask.height; ++r) {
    for (int c = 0; c < mask.width; ++c) {
      const double p = std::norm(spec.at(r, c));
      total += p;
      if (in_high_band(r, c, mask.width, mask.height, 0.8)) band += p;
    }
  }
  if (total <= 0.0) return 0.0;
  return band / total;
}

SpectralProfile radial_power_spectrum(const BinaryMask& mask, int bins) {
  if (bins < 4) throw InvalidInput("radial_power_spectrum: bins must be >= 4");
  const ComplexImage spec = dft2(mask_to_complex(mask));
  const double rmax = M_SQRT2 / 2.0;

  SpectralProfile profile;
  profile.bin_centers.resize(static_cast<std::size_t>(bins));
  profile.mean_power.assign(static_cast<std::size_t>(bins), 0.0);
  for (int b = 0; b < bins; ++b) {
    profile.bin_centers[static_cast<std::size_t>(b)] = (b + 0.5) * rmax / bins;
  }

  std::vector<double> sums(static_cast<std::size_t>(bins), 0.0);
  std::vector<long long> counts(static_cast<std::size_t>(bins), 0);
  double total = 0.0;
  double band = 0.0;
  for (int r = 0; r < mask.height; ++r) {
    for (int c = 0; c < mask.width; ++c) {
      const double p = std::norm(spec.at(r, c));
      total += p;
      if (in_high_band(r, c, mask.width, mask.height, 0.8)) band += p;
      if (r == 0 && c == 0) continue;  // DC excluded from the profile
      const double fr = static_cast<double>(centered_index(r, mask.height)) / mask.height;
      const double fc = static_cast<double>(centered_index(c, mask.width)) / mask.width;
      const double rad = std::sqrt(fr * fr + fc * fc);
      int b = static_cast<int>(rad / rmax * bins);
      if (b >= bins) b = bins - 1;
      sums[static_cast<std::size_t>(b)] += p;
      ++counts[static_cast<std::size_t>(b)];
    }
  }
  for (int b = 0; b < bins; ++b) {
    if (counts[static_cast<std::size_t>(b)] > 0) {
      profile.mean_power[static_cast<std::size_t>(b)] =
          sums[static_cast<std::size_t>(b)] / static_cast<double>(counts[static_cast<std::size_t>(b)]);
    }
  }
  profile.eta = total > 0.0 ? band / total : 0.0;
  return profile;
}

}  // namespace cdpr
