#pragma once

#include <array>
#include <cstdint>

#include "mmlstm/mat.hpp"

namespace mmlstm {

// xoshiro256** seeded through splitmix64, gaussians via Box-Muller.
// The algorithm identity is recorded in checkpoint manifests so runs can be
// reproduced bit-for-bit; identical seeds give identical streams.
class Rng {
 public:
  static constexpr const char* kId = "xoshiro256ss+boxmuller-v1";

  explicit Rng(std::uint64_t seed);

  std::uint64_t next_u64();

  // uniform in [0,1) with 53-bit resolution
  double uniform();
  double uniform(double lo, double hi);

  // standard normal; the Box-Muller pair partner is cached
  double normal();
  double normal(double mean, double stddev);

  // true with probability p
  bool bernoulli(double p);

  // uniform integer in [0, n)
  std::uint64_t below(std::uint64_t n);

 private:
  std::array<std::uint64_t, 4> state_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

// Derives an independent stream seed for a named purpose (fixed mixing, so
// the sub-streams of one master seed are stable across runs).
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t tag);

Mat random_uniform_mat(std::size_t rows, std::size_t cols, double radius, Rng& rng);

}  // namespace mmlstm
