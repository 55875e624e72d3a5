#pragma once

// Rescaled long-range contact process on the lattice n^-2 Z. Each site has
// neighbor_count(n, c1) ≈ 2·c1·n^{3/2} neighbors including itself; an
// occupied site places a birth on a uniformly chosen neighbor at total rate
// n + θ and dies at rate n. Densities A_c(ξ) = (2c1 n^{1/2})^-1 · (neighbor
// occupancy count) approximate (1/6)Δu + θu − u² + √(2u)Ẇ for large n.
//
// A family of systems at increasing θ shares birth and death clocks, so the
// occupied sets stay nested.

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "kpplab/field.hpp"
#include "kpplab/spde.hpp"
#include "kpplab/stats.hpp"

namespace kpplab {

struct ParticleConfig {
  int n = 16;
  double c1 = 1.0;
  /// Death rate per occupied site; negative means n.
  double death_rate = -1.0;
  /// Abort once this many events have been processed.
  std::uint64_t max_events = 2'000'000'000ULL;

  void validate() const;
  double deaths() const { return death_rate < 0.0 ? static_cast<double>(n) : death_rate; }
};

/// round(2·c1·n^{3/2}).
long long neighbor_count(int n, double c1);

/// Neighbor weights of the offset k: 1 for |k| < N/2 and, for even N,
/// 1/2 at |k| = N/2. They sum to N.
double neighbor_weight(long long offset, long long count);

/// Diffusion and noise amplitude of the continuum limit of the density.
inline constexpr double kParticleLimitDiffusion = 1.0 / 6.0;
inline constexpr double kParticleLimitNoise = 1.4142135623730951;  // √2

/// 0/1 occupancy on sites lo .. lo + size − 1 of n^-2 Z.
class ParticleState {
 public:
  ParticleState() = default;
  ParticleState(int n, double c1, long long lo, std::vector<std::uint8_t> occupancy);

  int n() const { return n_; }
  double c1() const { return c1_; }
  long long lo() const { return lo_; }
  long long hi() const { return lo_ + static_cast<long long>(occ_.size()) - 1; }
  bool occupied(long long site) const;
  std::size_t count() const { return count_; }
  const std::vector<std::uint8_t>& occupancy() const { return occ_; }
  double position(long long site) const;
  /// Occupied sites in increasing order.
  std::vector<long long> sites() const;

  /// Largest occupied site, if any.
  long long max_site() const;
  long long min_site() const;

  bool subset_of(const ParticleState& other) const;

 private:
  int n_ = 1;
  double c1_ = 1.0;
  long long lo_ = 0;
  std::vector<std::uint8_t> occ_;
  std::size_t count_ = 0;
};

/// Block k covers sites k·N .. k·N + N − 1; with m = ⌊2c1 n^{1/2} f0(kN/n²)⌋,
/// its first m + 1 sites are occupied when m >= 1 (min(m + 1, N)), none
/// otherwise. Blocks cover f0's window.
ParticleState init_particles(const Field& f0, const ParticleConfig& cfg);

/// A_c(ξ) sampled at the sites nearest to a, a + dx, ..., <= b.
Field approx_density(const ParticleState& xi, double a, double b, double dx);

/// A_c(ξ) on the lattice dx·Z covering the occupied sites plus one
/// neighborhood on each side; a single zero cell pair for the empty state.
Field approx_density(const ParticleState& xi, double dx);

/// Right marker of A_c(ξ) on the site lattice: (max site + N/2)/n², −inf if empty.
ExtendedReal density_right_marker(const ParticleState& xi);

/// Total event rate of a single-θ state with K occupied sites:
/// K·death + K·N·(n + θ)/N.
double total_event_rate(std::size_t occupied, const ParticleConfig& cfg, double theta);

struct ParticleOptions {
  /// Marker and count series are recorded at multiples of this interval.
  double sample_dt = 0.01;
  std::vector<double> snapshot_times;
  /// Full nestedness scan at each sample time (per-event local checks are
  /// always on).
  bool full_checks = true;
};

struct ParticleTrajectory {
  std::vector<double> thetas;
  std::vector<double> times;
  /// [system][sample]
  std::vector<std::vector<double>> right_marker;
  std::vector<std::vector<double>> mass;  // count / n
  /// [snapshot][system]
  std::vector<double> snapshot_times;
  std::vector<std::vector<ParticleState>> snapshots;
  std::vector<ParticleState> final_states;
  std::vector<ExtendedReal> extinction_time;
  std::uint64_t events = 0;
  std::uint64_t nested_checks = 0;
  std::uint64_t nested_violations = 0;
};

/// Event-driven run of one system (θ family of size 1). Randomness comes
/// from seed only.
ParticleTrajectory simulate_particles(const ParticleState& xi0, double theta,
                                      const ParticleConfig& cfg, double horizon,
                                      std::uint64_t seed, const ParticleOptions& options = {});

/// Shared P-clocks at θ_1, shared death clocks, and one extra clock family
/// at rate (θ_{i+1} − θ_i)/N per ordered pair for each adjacent pair;
/// system j responds to P and to the extra families i < j.
ParticleTrajectory couple_theta_star_particles(const ParticleState& xi0,
                                               const std::vector<double>& thetas,
                                               const ParticleConfig& cfg, double horizon,
                                               std::uint64_t seed,
                                               const ParticleOptions& options = {});

struct ParticleComparison {
  int n = 0;
  double theta = 0.0;
  double horizon = 0.0;
  /// sup |A_c(ξ0) − f0| on the comparison grid.
  double init_sup_error = 0.0;
  Estimate particle_laplace;
  Estimate spde_laplace;
  Estimate particle_mass;
  Estimate spde_mass;
  double discrepancy = 0.0;
  double joint_std_error = 0.0;
};

/// E[e^{−2⟨u_T, f2⟩}] for particle densities from init_particles(f0) and
/// for grid solutions of (1/6)Δu + θu − u² + √2·√u Ẇ started at f0. The
/// grid reference does not depend on n, so the discrepancy includes the
/// error of the initial particle approximation. Particle replica r uses seed + r; grid replica r
/// uses NoiseStream{seed + r, 7}.
ParticleComparison particle_vs_spde(const Field& f0, double theta, const ParticleConfig& cfg,
                                    const GridSpec& grid, double horizon,
                                    std::size_t particle_replicas, std::size_t spde_replicas,
                                    std::uint64_t seed, unsigned jobs = 0);

/// Header "t n c1 window_lo window_hi", then the run lengths of alternating
/// bits starting with the value of the first site: "<first bit> len len ...".
void write_occupancy(std::ostream& os, double t, const ParticleState& xi);
ParticleState read_occupancy(std::istream& is, double& t);

}  // namespace kpplab
