#include "cdpr/random.hpp"

#include <cmath>
#include <utility>

#include "cdpr/errors.hpp"

namespace cdpr {
namespace {

constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ull;

std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

std::uint64_t fnv1a64_str(const std::string& s) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace

RandomStream::RandomStream(std::uint64_t seed, std::string id)
    : seed_(seed), key_(mix64(seed ^ fnv1a64_str(id))), id_(std::move(id)) {}

RandomStream RandomStream::fork(std::uint64_t index) const {
  return RandomStream(seed_, id_ + "/" + std::to_string(index));
}

std::uint64_t RandomStream::next_u64() {
  ++counter_;
  return mix64(key_ + counter_ * kGolden);
}

double RandomStream::uniform() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

std::uint64_t RandomStream::below(std::uint64_t n) {
  if (n == 0) throw InvalidInput("RandomStream::below: n must be >= 1");
  auto k = static_cast<std::uint64_t>(uniform() * static_cast<double>(n));
  return k < n ? k : n - 1;  // guard the u -> 1 rounding edge
}

double RandomStream::gaussian() {
  // Box-Muller; u1 is nudged away from 0 so the log stays finite.
  double u1 = uniform();
  double u2 = uniform();
  if (u1 <= 0.0) u1 = 0x1.0p-53;
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

std::uint64_t RandomStream::poisson(double mean) {
  if (!(mean >= 0.0)) throw InvalidInput("RandomStream::poisson: mean must be >= 0");
  if (mean == 0.0) return 0;
  if (mean <= 30.0) {
    // Knuth's product method; safe from underflow for mean <= 30.
    const double limit = std::exp(-mean);
    std::uint64_t k = 0;
    double prod = 1.0;
    do {
      ++k;
      prod *= uniform();
    } while (prod > limit);
    return k - 1;
  }
  if (mean <= 256.0) {
    // Split into <= 30-mean blocks so each block keeps exact Poisson law.
    const auto blocks = static_cast<std::uint64_t>(std::ceil(mean / 30.0));
    const double part = mean / static_cast<double>(blocks);
    std::uint64_t total = 0;
    for (std::uint64_t b = 0; b < blocks; ++b) total += poisson(part);
    return total;
  }
  // Normal approximation; skewness is < 0.063 past mean 256.
  const double s = mean + std::sqrt(mean) * gaussian();
  if (s <= 0.0) return 0;
  return static_cast<std::uint64_t>(std::llround(s));
}

}  // namespace cdpr
