#include "kpplab/duality.hpp"

#include <cmath>
#include <ostream>

#include "kpplab/error.hpp"
#include "kpplab/fronts.hpp"
#include "kpplab/noise.hpp"

namespace kpplab {

DualityReport make_report(std::string identity, std::string parameters, const Estimate& lhs,
                          const Estimate& rhs) {
  DualityReport r;
  r.identity = std::move(identity);
  r.parameters = std::move(parameters);
  r.lhs = lhs;
  r.rhs = rhs;
  r.z_score = z_score(lhs, rhs);
  r.replicas = std::max(lhs.count, rhs.count);
  return r;
}

double laplace_term(const Field& f, const Field& g) {
  return std::exp(-DUALITY_EXPONENT_SCALE * pairing(f, g));
}

namespace {

Field run_to(const Field& f0, const SpdeParams& p, const GridSpec& grid, double horizon,
             const NoiseStream& noise) {
  if (grid.steps_for(horizon) == 0 || f0.is_zero()) return f0;
  return simulate(f0, p, grid, horizon, noise, final_only()).final_field;
}

Estimate exact(double v, std::size_t n) { return Estimate{v, 0.0, n}; }

std::string params(std::initializer_list<std::pair<const char*, double>> kv) {
  std::string s;
  for (const auto& [k, v] : kv) {
    if (!s.empty()) s += ';';
    s += std::string(k) + '=' + format_double(v);
  }
  return s;
}

}  // namespace

SelfDualityReport self_duality_check(const Field& u0, const Field& v0, const SpdeParams& p,
                                     double t, const std::vector<double>& split_times,
                                     std::size_t replicas, const GridSpec& grid,
                                     std::uint64_t seed, unsigned jobs) {
  require(t >= 0.0, "self_duality: t must be >= 0");
  require(replicas >= 2, "self_duality: need at least 2 replicas");
  require(!split_times.empty(), "self_duality: no split times");
  SelfDualityReport rep;
  rep.split_times = split_times;
  for (std::size_t k = 0; k < split_times.size(); ++k) {
    const double s = split_times[k];
    require(s >= 0.0 && s <= t, "self_duality: split time outside [0, t]");
    if (t == 0.0) {
      rep.estimates.push_back(exact(laplace_term(u0, v0), replicas));
      continue;
    }
    const auto vals = run_replicas<double>(replicas, jobs, [&](std::size_t r) {
      const std::uint64_t rs = replica_seed(seed, r);
      const Field u = run_to(u0, p, grid, s, NoiseStream{rs, 2 * k});
      const Field v = run_to(v0, p, grid, t - s, NoiseStream{rs, 2 * k + 1});
      return laplace_term(u, v);
    });
    rep.estimates.push_back(estimate_mean(vals));
  }
  for (std::size_t i = 0; i < split_times.size(); ++i) {
    for (std::size_t j = i + 1; j < split_times.size(); ++j) {
      rep.pairs.push_back(make_report(
          "self_duality",
          params({{"theta", p.theta}, {"t", t}, {"s_lhs", split_times[i]}, {"s_rhs", split_times[j]}}),
          rep.estimates[i], rep.estimates[j]));
      rep.max_z = std::max(rep.max_z, rep.pairs.back().z_score);
    }
  }
  return rep;
}

DualityReport competition_duality_check(const Field& v0, const Field& z0, const Coefficient& beta,
                                        const SpdeParams& p, double horizon, std::size_t replicas,
                                        const GridSpec& grid, std::uint64_t seed,
                                        unsigned jobs) {
  require(horizon >= 0.0, "competition_duality: T must be >= 0");
  require(replicas >= 2, "competition_duality: need at least 2 replicas");
  const std::string desc = params({{"theta", p.theta}, {"T", horizon}});
  if (grid.steps_for(horizon) == 0) {
    const Estimate e = exact(laplace_term(v0, z0), replicas);
    return make_report("competition_duality", desc, e, e);
  }
  SpdeParams pv = p;
  pv.beta = beta;
  SpdeParams pz = p;
  // Step k of z (time k·dt) reads β at time T − dt − k·dt, the time of the
  // matching step of v.
  const double steps_time = static_cast<double>(grid.steps_for(horizon)) * grid.dt;
  pz.beta = beta.time_reversed(steps_time - grid.dt);
  const auto lhs = run_replicas<double>(replicas, jobs, [&](std::size_t r) {
    return laplace_term(run_to(v0, pv, grid, horizon, NoiseStream{replica_seed(seed, r), 0}), z0);
  });
  const auto rhs = run_replicas<double>(replicas, jobs, [&](std::size_t r) {
    return laplace_term(v0, run_to(z0, pz, grid, horizon, NoiseStream{replica_seed(seed, r), 1}));
  });
  return make_report("competition_duality", desc, estimate_mean(lhs), estimate_mean(rhs));
}

DualityReport marker_cdf_via_dual(const Field& phi, double x, double t, const SpdeParams& p,
                                  std::size_t replicas, double cap, const GridSpec& grid,
                                  std::uint64_t seed, unsigned jobs) {
  require(!phi.is_zero(), "marker_cdf_via_dual: phi must be nonzero");
  require(t > 0.0, "marker_cdf_via_dual: t must be > 0");
  require(replicas >= 2, "marker_cdf_via_dual: need at least 2 replicas");
  const double k = std::round(x / grid.dx);
  require(std::abs(x / grid.dx - k) <= 1e-6, "marker_cdf_via_dual: x must lie on the grid");
  const auto lhs = run_replicas<double>(replicas, jobs, [&](std::size_t r) {
    const Trajectory tr = simulate(phi, p, grid, t, NoiseStream{replica_seed(seed, r), 0},
                                   final_only());
    return right_marker(tr.final_field) <= ExtendedReal(k * grid.dx + 1e-9 * grid.dx) ? 1.0 : 0.0;
  });
  // φ(x − y) as a function of y.
  const Field reflected = reflect(phi);
  const Field test(reflected.origin() + k * grid.dx, reflected.dx(),
                   std::vector<double>(reflected.values().begin(), reflected.values().end()));
  const auto rhs = run_replicas<double>(replicas, jobs, [&](std::size_t r) {
    const Trajectory tr = simulate(ZetaRamp{cap}, p, grid, t, NoiseStream{replica_seed(seed, r), 1},
                                   final_only());
    return laplace_term(tr.final_field, test);
  });
  return make_report("marker_cdf",
                     params({{"theta", p.theta}, {"t", t}, {"x", x}, {"N_cap", cap}}),
                     estimate_mean(lhs), estimate_mean(rhs));
}

DualityReport upper_measure_laplace_check(const Field& g, const SpdeParams& p, double horizon,
                                          std::size_t replicas, double cap, const GridSpec& grid,
                                          std::uint64_t seed, unsigned jobs) {
  require(horizon > 0.0, "upper_measure_laplace: T must be > 0");
  require(replicas >= 2, "upper_measure_laplace: need at least 2 replicas");
  require(g.is_zero() || left_marker(g) > ExtendedReal(0.0),
          "upper_measure_laplace: g must vanish on (-inf, 0]");
  const std::string desc = params({{"theta", p.theta}, {"T", horizon}, {"N_cap", cap}});
  if (g.is_zero()) {
    const Estimate one = exact(1.0, replicas);
    return make_report("upper_measure_laplace", desc, one, one);
  }
  const auto lhs = run_replicas<double>(replicas, jobs, [&](std::size_t r) {
    const Trajectory tr = upper_left_solution(p, cap, grid, horizon, replica_seed(seed, r),
                                              final_only());
    return laplace_term(tr.final_field, g);
  });
  const auto rhs = run_replicas<double>(replicas, jobs, [&](std::size_t r) {
    const Trajectory tr = simulate(g, p, grid, horizon, NoiseStream{replica_seed(seed, r), 1},
                                   final_only());
    const Field& f = tr.final_field;
    for (std::size_t i = 0; i < f.size() && f.x(i) < -1e-9 * f.dx(); ++i) {
      if (f[i] > 0.0) return 0.0;
    }
    return 1.0;
  });
  return make_report("upper_measure_laplace", desc, estimate_mean(lhs), estimate_mean(rhs));
}

void write_duality_header(std::ostream& os) { os << "identity,parameters,lhs,lhs_se,rhs,rhs_se,z\n"; }

void write_duality_row(std::ostream& os, const DualityReport& r) {
  os << r.identity << ',' << r.parameters << ',' << format_double(r.lhs.mean) << ','
     << format_double(r.lhs.std_error) << ',' << format_double(r.rhs.mean) << ','
     << format_double(r.rhs.std_error) << ',' << format_double(r.z_score) << '\n';
}

}  // namespace kpplab
