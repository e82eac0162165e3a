#pragma once

#include <cstdint>
#include <string>

namespace cdpr {

// Deterministic counter-based random stream.
//
// The generator is fully specified so another implementation can reproduce
// the byte-identical sequence from (seed, id):
//
//   key    = mix64(seed ^ fnv1a64(id))
//   draw k = mix64(key + (k + 1) * 0x9e3779b97f4a7c15)
//
// where fnv1a64 is the 64-bit FNV-1a hash (offset 14695981039346656037,
// prime 1099511628211) and mix64 is the SplitMix64 finalizer
// (xor-shift 30, * 0xbf58476d1ce4e5b9, xor-shift 27, * 0x94d049bb133111eb,
// xor-shift 31). There is no hidden state beyond the draw counter.
class RandomStream {
 public:
  RandomStream(std::uint64_t seed, std::string id);

  // Child stream labeled id + "/" + index; used to give measurements,
  // sweep cells, etc. independent substreams of one experiment seed.
  RandomStream fork(std::uint64_t index) const;

  std::uint64_t next_u64();

  // Uniform in [0, 1) with 53-bit resolution.
  double uniform();

  // Uniform integer in {0, ..., n-1} as floor(uniform() * n); n >= 1.
  std::uint64_t below(std::uint64_t n);

  // Standard normal via Box-Muller; consumes exactly two uniforms per call
  // (no cached spare, so the draw count stays position-independent).
  double gaussian();

  // Poisson sample: Knuth product method for mean <= 30, sum of <= 30-mean
  // Knuth blocks up to 256, normal approximation above that.
  std::uint64_t poisson(double mean);

  std::uint64_t seed() const { return seed_; }
  const std::string& id() const { return id_; }

 private:
  std::uint64_t seed_ = 0;
  std::uint64_t key_ = 0;
  std::uint64_t counter_ = 0;
  std::string id_;
};

}  // namespace cdpr
