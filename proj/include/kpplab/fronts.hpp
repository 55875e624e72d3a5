#pragma once

// Front-speed functionals of the upper-left solution: started from a tall
// ramp on the negative half-line, its right marker moves at the asymptotic
// speed B(θ). Estimators here are reductions over independent replicas;
// replica r always uses seed + r.

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "kpplab/field.hpp"
#include "kpplab/spde.hpp"
#include "kpplab/stats.hpp"

namespace kpplab {

/// Grid used by the front estimators unless the caller passes one: the
/// ramp starts on [-15, 5] and cells more than 15 behind the right marker
/// are dropped.
GridSpec default_front_grid();

struct SpeedEstimate {
  double theta = 0.0;
  double horizon = 0.0;
  std::size_t replicas = 0;
  double mean_R0_over_T = 0.0;
  double std_error = 0.0;
  double cap = kDefaultRampCap;
  /// R0(u_T)/T per replica.
  std::vector<double> per_replica;
};

struct WaveSample {
  /// Recentered profile; right_marker(profile) == 0 exactly.
  Field profile;
  double source_time = 0.0;
  double source_horizon = 0.0;
};

/// Solution of the equation with parameter p started from ZetaRamp(cap),
/// noise NoiseStream{seed, 0}.
Trajectory upper_left_solution(const SpdeParams& p, double cap, const GridSpec& grid,
                               double horizon, std::uint64_t seed,
                               const SimulateOptions& options = {});

/// Same field with its origin chosen so the rightmost positive cell sits at
/// x = 0 exactly. Throws UsageError for the zero field.
Field recenter(const Field& f);

/// Both R0(u_T)/T and α_T = (2/T)∫_0^{T/2} R0(u_{T/2+s}) ds from the same
/// replicas. alpha_minus_B is the per-replica α_T/T − (3/4)·R0(u_T)/T.
struct SpeedReport {
  SpeedEstimate speed;
  Estimate alpha;
  Estimate alpha_minus_B;
  std::vector<double> alpha_per_replica;
  /// Replicas whose right marker became −inf (not expected for a ramp start).
  std::size_t extinct = 0;
};

SpeedReport speed_report(const SpdeParams& p, double horizon, std::size_t replicas, double cap,
                         const GridSpec& grid, std::uint64_t seed, unsigned jobs = 0);

SpeedEstimate estimate_B(const SpdeParams& p, double horizon, std::size_t replicas, double cap,
                         const GridSpec& grid, std::uint64_t seed, unsigned jobs = 0);

Estimate estimate_alpha_T(const SpdeParams& p, double horizon, std::size_t replicas, double cap,
                          const GridSpec& grid, std::uint64_t seed, unsigned jobs = 0);

/// Sample i draws s uniformly on [0, T] (snapped to the time step), runs the
/// upper-left solution with seed + i to s and recenters it. The draws of s
/// come from a separate generator seeded with seed.
std::vector<WaveSample> sample_wave(const SpdeParams& p, double horizon, double cap,
                                    const GridSpec& grid, std::size_t count, std::uint64_t seed,
                                    unsigned jobs = 0);

struct SubadditivityReport {
  Estimate lhs;      // E[R0(u_{s+t})]
  Estimate rhs_s;    // E[R0(u_s)]
  Estimate rhs_t;    // E[R0(u'_t)], independent of rhs_s
  double difference = 0.0;  // lhs − rhs_s − rhs_t
  double joint_std_error = 0.0;
  bool pass = false;  // difference <= 3·joint_std_error
};

/// The three expectations use disjoint noise streams 20, 21, 22.
SubadditivityReport check_subadditivity(const SpdeParams& p, double s, double t,
                                        std::size_t replicas, double cap, const GridSpec& grid,
                                        std::uint64_t seed, unsigned jobs = 0);

struct SpeedGap {
  double theta1 = 0.0;
  double theta2 = 0.0;
  Estimate gap;  // per-replica (R0(θ2) − R0(θ1))/T
  Estimate speed1;
  Estimate speed2;
  double min_replica_gap = 0.0;
  std::size_t negative_replicas = 0;
  std::uint64_t order_violations = 0;
};

/// θ-coupled ramp runs (couple_theta), one per replica.
SpeedGap speed_gap(const SpdeParams& p, double theta1, double theta2, double horizon,
                   std::size_t replicas, double cap, const GridSpec& grid, std::uint64_t seed,
                   unsigned jobs = 0);

/// ⟨f(· + R0(f)), 1_{(−2a, ∞)}⟩.
double front_mass(const Field& f, double a);

/// Largest x where the linear interpolant of f equals level, scanning from
/// the right; −inf if f never reaches level.
double level_marker(const Field& f, double level);

struct FrontSeries {
  std::vector<double> times;
  std::vector<double> level_marker;
  std::vector<double> right_marker;
  Field final_field;
};

/// Records the level-set and support markers every record_every steps.
FrontSeries track_front(const InitialCondition& ic, const SpdeParams& p, const GridSpec& grid,
                        double horizon, double level, std::size_t record_every,
                        std::uint64_t seed = 0);

/// Least-squares slope of ys against xs over the samples with xs in [a, b].
double fitted_slope(const std::vector<double>& xs, const std::vector<double>& ys, double a,
                    double b);

/// theta,T,replicas,N_cap,B_hat,stderr,bound_2sqrt_theta
void write_speed_table(std::ostream& os, const std::vector<SpeedEstimate>& rows);

}  // namespace kpplab
