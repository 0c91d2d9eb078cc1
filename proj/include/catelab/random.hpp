#pragma once

#include <cstdint>
#include <random>

namespace catelab {

/// splitmix64 finalizer (Steele, Lea & Flood; public-domain reference mixer).
/// Bijective on 64-bit words.
std::uint64_t splitmix64(std::uint64_t z);

/// Seed for stream `index` derived from `master`:
///
///   splitmix64(master + index * 0x9E3779B97F4A7C15)
///
/// Streams are independent of the order in which they are created, which is
/// what makes replication scheduling irrelevant to the output bytes.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index);

/// A seeded random stream with pinned output transforms.
///
/// The engine is std::mt19937_64, whose output sequence for a given 64-bit
/// seed is fixed by the C++ standard. The transforms below are implemented
/// here (rather than via std::*_distribution, which varies across standard
/// libraries) so that generated datasets are reproducible across builds:
///
///   uniform01: (next_u64() >> 11) * 2^-53, in [0, 1)
///   normal:    Box-Muller cosine branch; u1 in (0, 1], u2 in [0, 1);
///              returns sqrt(-2 ln u1) * cos(2 pi u2)
///   bernoulli: uniform01() < p
///
/// Not thread-safe; use one stream per thread.
class RandomStream {
public:
  explicit RandomStream(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  double uniform01();
  double normal();
  bool bernoulli(double p);

private:
  std::mt19937_64 engine_;
};

}  // namespace catelab
