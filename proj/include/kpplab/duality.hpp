#pragma once

// Monte Carlo checks of the duality identities of the equation: both sides
// are estimated from independent replicas and compared by z-score.

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "kpplab/field.hpp"
#include "kpplab/spde.hpp"
#include "kpplab/stats.hpp"

namespace kpplab {

/// Exponent scale λ in E[e^{−λ⟨u, v⟩}]. With λ = 2 the identities hold for
/// the equation with noise √u Ẇ.
inline constexpr double DUALITY_EXPONENT_SCALE = 2.0;

struct DualityReport {
  std::string identity;
  std::string parameters;
  Estimate lhs;
  Estimate rhs;
  double z_score = 0.0;
  std::size_t replicas = 0;
};

DualityReport make_report(std::string identity, std::string parameters, const Estimate& lhs,
                          const Estimate& rhs);

/// e^{−λ⟨f, g⟩}.
double laplace_term(const Field& f, const Field& g);

struct SelfDualityReport {
  std::vector<double> split_times;
  /// E[e^{−2⟨u(s), v(t − s)⟩}] for each s.
  std::vector<Estimate> estimates;
  /// Every pair (i < j) of split times.
  std::vector<DualityReport> pairs;
  double max_z = 0.0;
};

/// For each s the pair (u run to s, v run to t − s) uses its own noise
/// streams (2k and 2k + 1 for the k-th split time), so the estimates are
/// independent. With t = 0 every estimate is the exact e^{−2⟨u0, v0⟩} with
/// zero standard error.
SelfDualityReport self_duality_check(const Field& u0, const Field& v0, const SpdeParams& p,
                                     double t, const std::vector<double>& split_times,
                                     std::size_t replicas, const GridSpec& grid,
                                     std::uint64_t seed, unsigned jobs = 0);

/// lhs = E[e^{−2⟨v(T), z0⟩}] with v carrying annihilation β(t, x);
/// rhs = E[e^{−2⟨v0, z(T)⟩}] with z carrying β read backwards in time,
/// step k of z using the β of step K − 1 − k of v.
DualityReport competition_duality_check(const Field& v0, const Field& z0, const Coefficient& beta,
                                        const SpdeParams& p, double horizon, std::size_t replicas,
                                        const GridSpec& grid, std::uint64_t seed,
                                        unsigned jobs = 0);

/// lhs = P_φ(R0(u_t) <= x); rhs = E[e^{−2⟨φ, u^{*,r}_t(· − x)⟩}]. The
/// right-upper solution is the mirror image of the upper-left one, so the
/// rhs is computed as E[e^{−2⟨φ(x − ·), u^{*,l}_t⟩}]. x must lie on the grid.
DualityReport marker_cdf_via_dual(const Field& phi, double x, double t, const SpdeParams& p,
                                  std::size_t replicas, double cap, const GridSpec& grid,
                                  std::uint64_t seed, unsigned jobs = 0);

/// lhs = E[e^{−2⟨u^{*,l}_T, g⟩}]; rhs = P(every cell at x < 0 of the
/// solution from g is 0 at time T). Requires left_marker(g) > 0 or g = 0.
DualityReport upper_measure_laplace_check(const Field& g, const SpdeParams& p, double horizon,
                                          std::size_t replicas, double cap, const GridSpec& grid,
                                          std::uint64_t seed, unsigned jobs = 0);

/// identity,parameters,lhs,lhs_se,rhs,rhs_se,z
void write_duality_header(std::ostream& os);
void write_duality_row(std::ostream& os, const DualityReport& r);

}  // namespace kpplab
