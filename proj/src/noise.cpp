#include "kpplab/noise.hpp"

#include <cmath>
#include <bit>
#include <numbers>
#include <random>

namespace kpplab {

namespace {

// SplitMix64 finalizer (Steele, Lea, Flood 2014).
constexpr std::uint64_t mix(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t stream_key(const NoiseStream& noise) {
  return mix(mix(noise.seed) ^ (noise.stream * 0xd1b54a32d192ed03ULL + 0x632be59bd9b4e019ULL));
}

constexpr std::uint64_t step_key(std::uint64_t skey, std::uint64_t step) {
  return mix(skey ^ mix(step + 0x8cb92ba72f3d8dd7ULL));
}

inline double unit_open(std::uint64_t bits) {
  // 53 random bits mapped into (0, 1).
  return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
}

// Box-Muller pair for one even/odd couple of lattice cells.
inline void normal_pair(std::uint64_t key, std::int64_t pair, double& z0, double& z1) {
  const std::uint64_t h1 = mix(key ^ static_cast<std::uint64_t>(pair));
  const std::uint64_t h2 = mix(h1);
  const double r = std::sqrt(-2.0 * std::log(unit_open(h1)));
  const double a = 2.0 * std::numbers::pi * unit_open(h2);
  z0 = r * std::cos(a);
  z1 = r * std::sin(a);
}

inline std::int64_t floor_div2(std::int64_t c) { return c >= 0 ? c / 2 : -((-c + 1) / 2); }

}  // namespace

double standard_normal(const NoiseStream& noise, std::uint64_t step, std::int64_t cell) {
  const std::int64_t c = cell + noise.cell_offset;
  const std::int64_t pair = floor_div2(c);
  double z0 = 0.0;
  double z1 = 0.0;
  normal_pair(step_key(stream_key(noise), step), pair, z0, z1);
  return (c - 2 * pair) == 0 ? z0 : z1;
}

void white_noise_increment(const NoiseStream& noise, std::uint64_t step, std::int64_t first_cell,
                           double dt, double dx, std::span<double> out) {
  const double sd = std::sqrt(dt / dx);
  const std::uint64_t key = step_key(stream_key(noise), step);
  const std::int64_t n = static_cast<std::int64_t>(out.size());
  std::int64_t i = 0;
  while (i < n) {
    const std::int64_t c = first_cell + i + noise.cell_offset;
    const std::int64_t pair = floor_div2(c);
    double z0 = 0.0;
    double z1 = 0.0;
    normal_pair(key, pair, z0, z1);
    if (c - 2 * pair == 0) {
      out[static_cast<std::size_t>(i)] = sd * z0;
      if (i + 1 < n) out[static_cast<std::size_t>(i + 1)] = sd * z1;
      i += 2;
    } else {
      out[static_cast<std::size_t>(i)] = sd * z1;
      i += 1;
    }
  }
}

SplitMix64::result_type SplitMix64::operator()() {
  state_ += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = state_;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

namespace {

// Samplers for the per-cell Feller step. The <random> distributions cost
// 100-300 ns per call here (setup per call, generic rejection), which
// dominated the whole integrator.
class Draws {
 public:
  explicit Draws(std::uint64_t key) : engine_(key) {}
  double uniform() { return unit_open(engine_()); }
  double normal() {
    const double r = std::sqrt(-2.0 * std::log(uniform()));
    return r * std::cos(2.0 * std::numbers::pi * uniform());
  }
  SplitMix64& engine() { return engine_; }

 private:
  SplitMix64 engine_;
};

// Sequential-search inversion; about lambda + 1 iterations.
long long poisson_small(double lambda, Draws& d) {
  const double u = d.uniform();
  double p = std::exp(-lambda);
  double cdf = p;
  long long k = 0;
  const long long cap = static_cast<long long>(10.0 * lambda) + 100;
  while (u > cdf && k < cap) {
    ++k;
    p *= lambda / static_cast<double>(k);
    cdf += p;
  }
  return k;
}

// Gamma(n, 1) for integer n >= 1.
double gamma_integer(long long n, Draws& d) {
  if (n < 8) {
    double prod = 1.0;
    for (long long i = 0; i < n; ++i) prod *= d.uniform();
    return -std::log(prod);
  }
  // Marsaglia and Tsang (2000).
  const double a = static_cast<double>(n) - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * a);
  for (;;) {
    const double z = d.normal();
    double v = 1.0 + c * z;
    if (v <= 0.0) continue;
    v = v * v * v;
    const double u = d.uniform();
    const double z2 = z * z;
    if (u < 1.0 - 0.0331 * z2 * z2) return a * v;
    if (std::log(u) < 0.5 * z2 + a * (1.0 - v + std::log(v))) return a * v;
  }
}

}  // namespace

double feller_transition(double x, double c_dt, std::uint64_t key) {
  if (x <= 0.0) return 0.0;
  Draws d(key);
  const double lambda = 2.0 * x / c_dt;
  long long n = 0;
  if (lambda <= 100.0) {
    n = poisson_small(lambda, d);
  } else {
    std::poisson_distribution<long long> poisson(lambda);
    n = poisson(d.engine());
  }
  if (n == 0) return 0.0;
  return 0.5 * c_dt * gamma_integer(n, d);
}

std::uint64_t key_from_increment(double dW) {
  return mix(std::bit_cast<std::uint64_t>(dW) ^ 0x5851f42d4c957f2dULL);
}

std::vector<double> white_noise_increment(const NoiseStream& noise, std::uint64_t step,
                                          std::int64_t first_cell, std::size_t n, double dt,
                                          double dx) {
  std::vector<double> out(n);
  white_noise_increment(noise, step, first_cell, dt, dx, out);
  return out;
}

}  // namespace kpplab
