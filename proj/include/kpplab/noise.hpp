#pragma once

// Space-time white noise on the lattice dx*Z.
//
// Increments are generated by a counter-based scheme: the Gaussian for
// (seed, stream, step, lattice cell) is a pure function of those four
// integers. Trajectories therefore do not depend on how the window grows,
// and relabelling cells reproduces shifted runs exactly.

#include <cstdint>
#include <span>
#include <vector>

namespace kpplab {

struct NoiseStream {
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;
  /// Added to every lattice index before hashing. Shifting an initial
  /// condition by k cells and the offset by k reproduces the shifted path.
  std::int64_t cell_offset = 0;
};

/// Standard normal for one (stream, step, lattice cell).
double standard_normal(const NoiseStream& noise, std::uint64_t step, std::int64_t cell);

/// Fills out[i] with N(0, dt/dx) increments for lattice cells
/// first_cell + i at the given step.
void white_noise_increment(const NoiseStream& noise, std::uint64_t step, std::int64_t first_cell,
                           double dt, double dx, std::span<double> out);

std::vector<double> white_noise_increment(const NoiseStream& noise, std::uint64_t step,
                                          std::int64_t first_cell, std::size_t n, double dt,
                                          double dx);

/// SplitMix64 generator; satisfies UniformRandomBitGenerator.
class SplitMix64 {
 public:
  using result_type = std::uint64_t;
  explicit SplitMix64(std::uint64_t state) : state_(state) {}
  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return ~result_type{0}; }
  result_type operator()();

 private:
  std::uint64_t state_;
};

/// Sample of the exact time-dt law of the Feller diffusion dX = √(cX) dB
/// from X(0) = x, where c_dt = c·dt: Gamma(N, c_dt/2) with
/// N ~ Poisson(2x/c_dt), and exactly 0 when N = 0. Randomness comes from
/// a SplitMix64 stream seeded with key.
double feller_transition(double x, double c_dt, std::uint64_t key);

/// Seed for feller_transition derived from the bits of a Gaussian increment.
std::uint64_t key_from_increment(double dW);

/// Derives a 64-bit seed for replica r of a run seeded with `seed`
/// (seed + r, the documented replica mapping).
constexpr std::uint64_t replica_seed(std::uint64_t seed, std::uint64_t replica) {
  return seed + replica;
}

}  // namespace kpplab
