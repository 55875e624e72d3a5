#pragma once

// Jointly stepped multi-component systems. Each component solves the
// generalized equation with its own noise stream; immigration and
// annihilation terms are built from earlier components (a triangular
// wiring), evaluated at the values from the start of the step. Reported
// outputs are sums of components, so order relations between them hold
// exactly in floating point.

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <string>
#include <vector>

#include "kpplab/field.hpp"
#include "kpplab/noise.hpp"
#include "kpplab/spde.hpp"

namespace kpplab {

/// coefficient · Π components[sources].
struct ImmigrationTerm {
  double coefficient = 0.0;
  std::vector<std::size_t> sources;
};

/// coefficient · components[source], added to β.
struct AnnihilationTerm {
  double coefficient = 0.0;
  std::size_t source = 0;
};

struct Component {
  std::string name;
  Field initial;
  /// θ, own α/β/γ and noise amplitude.
  SpdeParams params;
  std::uint64_t stream = 0;
  std::vector<ImmigrationTerm> immigration;
  std::vector<AnnihilationTerm> annihilation;
};

/// Named sum of components, summed in the listed order.
struct Output {
  std::string name;
  std::vector<std::size_t> parts;
};

/// Declared pointwise inequality sum(lower) <= sum(upper). The lower parts
/// must be a prefix of the upper parts; then the check is exact because
/// adding nonnegative values never decreases a floating-point sum.
struct OrderRelation {
  std::string lower;
  std::string upper;
};

struct CoupledSystem {
  std::vector<Component> components;
  std::vector<Output> outputs;
  std::vector<OrderRelation> relations;

  /// Throws UsageError on forward references, duplicate streams or names,
  /// unknown outputs, or relations whose parts are not prefix-ordered.
  void validate() const;
  std::size_t output_index(const std::string& name) const;
};

using CoupledObserver = std::function<void(std::uint64_t step, double t, double origin, double dx,
                                           const std::vector<std::vector<double>>& components)>;

struct CoupledOptions {
  std::vector<double> snapshot_times;
  std::size_t record_every = 1;
  CoupledObserver observer;

  static CoupledOptions final_only() {
    CoupledOptions o;
    o.record_every = std::numeric_limits<std::size_t>::max();
    return o;
  }
};

struct CoupledTrajectory {
  std::vector<std::string> names;
  /// One series per output, in the order of CoupledSystem::outputs.
  std::vector<Trajectory> outputs;
  std::uint64_t steps = 0;
  /// Cells checked and cells violating a declared relation, over all steps
  /// (including t = 0).
  std::uint64_t order_checks = 0;
  std::uint64_t order_violations = 0;

  const Trajectory& at(const std::string& name) const;
};

/// All components share one window (the union of the initial windows,
/// moved by the grid policy using the union support).
CoupledTrajectory simulate_coupled(const CoupledSystem& system, const GridSpec& grid,
                                   double horizon, std::uint64_t seed,
                                   const CoupledOptions& options = {});

// ---------------------------------------------------------------------------
// Canned constructions. Stream ids: the base solution uses stream 1, the
// difference components 2, 3, ...

/// u1 from u1_0; v from u2_0 − u1_0 annihilated by 2·u1. Outputs u1, u2 = u1 + v.
CoupledSystem couple_monotone(const Field& u1_0, const Field& u2_0, const SpdeParams& p);

/// u at θ1; v from 0 with immigration (θ2 − θ1)·u and annihilation 2·u at θ2.
/// Outputs u_theta1, u_theta2.
CoupledSystem couple_theta(const Field& u0, const SpdeParams& p, double theta1, double theta2);

/// u1 from u1_0; v from u2_0 annihilated by 2·u1; w from 0 with immigration
/// 2·u1·v and annihilation 2·v. Outputs u1, u2 = v + w, u0 = u1 + v, with
/// relations v ≤ u2 and u0 ≤ u1 + u2.
CoupledSystem couple_two_independent(const Field& u1_0, const Field& u2_0, const SpdeParams& p);

/// u with immigration α1; v from 0 with immigration α2 − α1, annihilation
/// 2·u. Outputs u_alpha1, u_alpha2. α2 − α1 < 0 anywhere it is sampled is
/// a UsageError.
CoupledSystem couple_immigration(const Field& u0, const SpdeParams& p, const Coefficient& alpha1,
                                 const Coefficient& alpha2);

/// Components u1 (from φ), v2 (from Φ − φ), v3 (from ψ), d4 (from 0 with
/// immigration 2·v2·v3). Outputs u_phi = u1, u_Phi = u1 + v2,
/// u_Psi = u1 + v2 + v3, u_phi_plus_psi = u1 + v3 + d4.
CoupledSystem claim2_chain(const Field& phi, const Field& big_phi, const Field& psi,
                           const SpdeParams& p);

/// upper(s)(· + R0(lower(s))) − lower(s)(· + R0(lower(s))) from snapshots
/// taken at time s. Throws UsageError if the lower output is extinct at s
/// or no snapshot was taken at s.
Field delta_field(const CoupledTrajectory& traj, const std::string& lower,
                  const std::string& upper, double s);

/// One R0/L0/mass column group per output.
void write_coupled_csv(std::ostream& os, const CoupledTrajectory& traj);

/// Wiring sidecar (JSON).
void write_wiring_json(std::ostream& os, const CoupledSystem& system, const GridSpec& grid,
                       std::uint64_t seed);

}  // namespace kpplab
