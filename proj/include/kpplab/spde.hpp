#pragma once

// Explicit stochastic stepping of
//
//   ∂t u = D ∂xx u + α + θu − βu − γu² + a·√u Ẇ
//
// on a uniform grid with zero ghost cells and an optionally moving window.
// D = 1 and a = 1 give the noisy KPP equation; a = 0 is the deterministic PDE.

#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "kpplab/field.hpp"
#include "kpplab/noise.hpp"
#include "kpplab/stats.hpp"

namespace kpplab {

/// Space-time dependent coefficient c(t, x) >= 0: a constant, a static
/// field (zero outside its window), or an arbitrary function.
class Coefficient {
 public:
  Coefficient() = default;
  Coefficient(double constant);  // NOLINT: constants convert implicitly
  static Coefficient from_field(Field f);
  static Coefficient from_function(std::function<double(double t, double x)> fn,
                                   std::string label = "function");

  bool is_constant() const { return !fn_; }
  bool is_zero() const { return is_constant() && constant_ == 0.0; }
  double constant_value() const { return constant_; }
  const std::string& label() const { return label_; }

  double at(double t, double x) const;
  void sample(double t, double origin, double dx, std::span<double> out) const;

  /// c(T − t, x).
  Coefficient time_reversed(double horizon) const;

 private:
  double constant_ = 0.0;
  std::function<double(double, double)> fn_;
  std::string label_ = "0";
};

enum class NoiseScheme {
  /// Euler drift step, then the exact Feller transition of du = a√u dW for
  /// cells whose Poisson mean 2u·dx/(a²dt) is at most kGaussianSwitch and
  /// the Gaussian increment a√u·dW above it. Mean preserving; produces
  /// genuine zeros at the front.
  Branching,
  /// u + dt·drift + a√u·dW, clamped at zero.
  EulerMaruyama,
};

inline constexpr double kGaussianSwitch = 50.0;

struct SpdeParams {
  double theta = 1.0;
  Coefficient alpha = 0.0;
  Coefficient beta = 0.0;
  Coefficient gamma = 1.0;
  double noise_amp = 1.0;
  /// Coefficient in front of ∂xx. Only the particle-limit comparison uses D ≠ 1.
  double diffusion = 1.0;
  NoiseScheme scheme = NoiseScheme::Branching;

  void validate() const;
};

struct GridSpec {
  double dx = 0.1;
  double dt = 0.002;
  /// Initial window [a, b]; a fixed window if !moving.
  double a = -10.0;
  double b = 10.0;
  bool moving = true;
  /// Cells added at an edge once a positive cell is within pad/2 of it.
  std::size_t left_pad = 64;
  std::size_t right_pad = 64;
  /// Cells further than this behind the right marker are dropped (moving
  /// window only). Infinite keeps the whole trailing region.
  double max_trail = std::numeric_limits<double>::infinity();

  /// Throws UsageError unless dt <= dx²/(2D), pads > 0 in moving mode, a < b.
  void validate(double diffusion = 1.0) const;
  std::uint64_t steps_for(double horizon) const;
};

/// Window edits decided after a step, applied identically to every component.
struct WindowChange {
  std::size_t prepend = 0;
  std::size_t append = 0;
  std::size_t trim_front = 0;
  bool any() const { return prepend || append || trim_front; }
};

/// Window policy: support is [lo, hi] (cell indices, hi >= lo) of a window
/// of n cells; right_x is the coordinate used as the trail anchor.
WindowChange plan_window(const GridSpec& grid, std::size_t n, std::size_t lo, std::size_t hi,
                         double origin, double right_x);

void apply_window(const WindowChange& change, std::vector<double>& values);

/// Per-cell coefficient arrays; an empty span means "use the constant".
struct CellTerms {
  std::span<const double> alpha;
  double alpha_const = 0.0;
  std::span<const double> beta;
  double beta_const = 0.0;
  std::span<const double> gamma;
  double gamma_const = 1.0;
};

struct KernelParams {
  double theta = 1.0;
  double diffusion = 1.0;
  double noise_amp = 1.0;
  double dx = 0.1;
  double dt = 0.002;
  NoiseScheme scheme = NoiseScheme::Branching;
};

/// One update of all cells with zero ghost cells. The drift part is
///   u_i + dt[D(u_{i−1} − 2u_i + u_{i+1})/dx² + α_i + (θ − β_i)u_i − γ_i u_i²];
/// the noise part is applied per the scheme. Throws RuntimeFailure on
/// NaN/inf or when the reaction rate dt(γu + β) exceeds 1/2.
void euler_kernel(std::span<const double> u, std::span<double> out, std::span<const double> dW,
                  const KernelParams& kp, const CellTerms& terms);

KernelParams kernel_params(const SpdeParams& p, const GridSpec& grid);

/// Single step of the equation from u at time t with increments dW (one per
/// cell, variance dt/dx). Applies the moving-window policy of grid.
Field step(const Field& u, const SpdeParams& p, const GridSpec& grid, std::span<const double> dW,
           double t = 0.0);

struct Snapshot {
  double t = 0.0;
  Field field;
};

struct Trajectory {
  std::vector<double> times;
  std::vector<double> right_marker;  // -inf once extinct
  std::vector<double> left_marker;   // +inf once extinct
  std::vector<double> mass;
  std::vector<Snapshot> snapshots;
  Field final_field;
  ExtendedReal extinction_time = ExtendedReal::plus_infinity();

  /// Index of the recorded sample nearest to t.
  std::size_t index_at(double t) const;
  double right_marker_at(double t) const { return right_marker[index_at(t)]; }
  const Field& snapshot_at(double t) const;
};

using StepObserver = std::function<void(std::uint64_t step, double t, double origin, double dx,
                                        std::span<const double> values)>;

struct SimulateOptions {
  std::vector<double> snapshot_times;
  /// Record the marker/mass series every this many steps.
  std::size_t record_every = 1;
  StepObserver observer;
};

/// Records only t = 0 and the final step.
inline SimulateOptions final_only() {
  SimulateOptions o;
  o.record_every = std::numeric_limits<std::size_t>::max();
  return o;
}

/// Requires u0 to sit on the lattice dx*Z (origin a multiple of dx).
Trajectory simulate(const Field& u0, const SpdeParams& p, const GridSpec& grid, double horizon,
                    const NoiseStream& noise, const SimulateOptions& options = {});

/// Renders ic on the grid's initial window first.
Trajectory simulate(const InitialCondition& ic, const SpdeParams& p, const GridSpec& grid,
                    double horizon, const NoiseStream& noise,
                    const SimulateOptions& options = {});

/// Snaps [a, b] outward to the lattice dx*Z and renders ic there.
Field render_on_grid(const InitialCondition& ic, const GridSpec& grid);

/// Fraction of replicas extinct by time T with its binomial standard error.
/// Replica r uses NoiseStream{seed + r, stream 0}.
Estimate extinction_probability(const InitialCondition& ic, const SpdeParams& p,
                                const GridSpec& grid, double horizon, std::size_t replicas,
                                std::uint64_t seed, unsigned jobs = 0);

/// Trajectory CSV: t,R0,L0,mass,extinct.
void write_trajectory_csv(std::ostream& os, const Trajectory& traj);

}  // namespace kpplab
