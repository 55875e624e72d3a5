#include "kpplab/fronts.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <random>

#include "kpplab/coupling.hpp"
#include "kpplab/error.hpp"
#include "kpplab/noise.hpp"

namespace kpplab {

GridSpec default_front_grid() {
  GridSpec g;
  g.a = -15.0;
  g.b = 5.0;
  g.max_trail = 15.0;
  return g;
}

Trajectory upper_left_solution(const SpdeParams& p, double cap, const GridSpec& grid,
                               double horizon, std::uint64_t seed,
                               const SimulateOptions& options) {
  require(cap > 0.0, "upper_left_solution: N_cap must be > 0");
  return simulate(ZetaRamp{cap}, p, grid, horizon, NoiseStream{seed, 0}, options);
}

Field recenter(const Field& f) {
  const ExtendedReal r = right_marker(f);
  require(r.is_finite(), "recenter: zero field has no right marker");
  std::size_t hi = f.size() - 1;
  while (f[hi] <= 0.0) --hi;
  return Field(-(static_cast<double>(hi) * f.dx()), f.dx(),
               std::vector<double>(f.values().begin(), f.values().end()));
}

namespace {

// (2/T)∫_{T/2}^{T} R0 dt by the trapezoid rule on the recorded samples.
double alpha_integral(const Trajectory& tr, double horizon) {
  const double half = 0.5 * horizon;
  double acc = 0.0;
  for (std::size_t i = 1; i < tr.times.size(); ++i) {
    const double t0 = tr.times[i - 1];
    const double t1 = tr.times[i];
    if (t1 <= half + 1e-12) continue;
    double a = tr.right_marker[i - 1];
    double b = tr.right_marker[i];
    double lo = t0;
    if (t0 < half) {
      const double w = (half - t0) / (t1 - t0);
      a = a + w * (b - a);
      lo = half;
    }
    acc += 0.5 * (a + b) * (t1 - lo);
  }
  return 2.0 / horizon * acc;
}

void require_horizon(double horizon, const char* who) {
  require(horizon >= 1.0 && std::isfinite(horizon), std::string(who) + ": T must be >= 1");
}

}  // namespace

SpeedReport speed_report(const SpdeParams& p, double horizon, std::size_t replicas, double cap,
                         const GridSpec& grid, std::uint64_t seed, unsigned jobs) {
  require_horizon(horizon, "speed");
  require(replicas >= 2, "speed: need at least 2 replicas");
  struct One {
    double speed = 0.0;
    double alpha = 0.0;
    bool extinct = false;
  };
  const auto runs = run_replicas<One>(replicas, jobs, [&](std::size_t r) {
    const Trajectory tr = upper_left_solution(p, cap, grid, horizon, replica_seed(seed, r));
    One o;
    o.extinct = tr.extinction_time.is_finite();
    if (o.extinct) {
      throw InvariantError("upper-left solution died out at t = " +
                           format_double(tr.extinction_time.value()) + " (seed " +
                           std::to_string(replica_seed(seed, r)) + ")");
    }
    o.speed = tr.right_marker.back() / horizon;
    o.alpha = alpha_integral(tr, horizon);
    return o;
  });
  SpeedReport rep;
  std::vector<double> diff;
  for (const One& o : runs) {
    rep.speed.per_replica.push_back(o.speed);
    rep.alpha_per_replica.push_back(o.alpha);
    diff.push_back(o.alpha / horizon - 0.75 * o.speed);
  }
  const Estimate b = estimate_mean(rep.speed.per_replica);
  rep.speed.theta = p.theta;
  rep.speed.horizon = horizon;
  rep.speed.replicas = replicas;
  rep.speed.mean_R0_over_T = b.mean;
  rep.speed.std_error = b.std_error;
  rep.speed.cap = cap;
  rep.alpha = estimate_mean(rep.alpha_per_replica);
  rep.alpha_minus_B = estimate_mean(diff);
  return rep;
}

SpeedEstimate estimate_B(const SpdeParams& p, double horizon, std::size_t replicas, double cap,
                         const GridSpec& grid, std::uint64_t seed, unsigned jobs) {
  return speed_report(p, horizon, replicas, cap, grid, seed, jobs).speed;
}

Estimate estimate_alpha_T(const SpdeParams& p, double horizon, std::size_t replicas, double cap,
                          const GridSpec& grid, std::uint64_t seed, unsigned jobs) {
  return speed_report(p, horizon, replicas, cap, grid, seed, jobs).alpha;
}

std::vector<WaveSample> sample_wave(const SpdeParams& p, double horizon, double cap,
                                    const GridSpec& grid, std::size_t count, std::uint64_t seed,
                                    unsigned jobs) {
  require_horizon(horizon, "sample_wave");
  require(count >= 1, "sample_wave: count must be >= 1");
  std::mt19937_64 draw(SplitMix64(seed ^ 0xa0761d6478bd642fULL)());
  std::uniform_real_distribution<double> unif(0.0, horizon);
  std::vector<double> times(count);
  for (double& s : times) s = std::round(unif(draw) / grid.dt) * grid.dt;
  return run_replicas<WaveSample>(count, jobs, [&](std::size_t i) {
    const double s = times[i];
    Field f;
    if (grid.steps_for(s) == 0) {
      f = render_on_grid(ZetaRamp{cap}, grid);
    } else {
      f = upper_left_solution(p, cap, grid, s, replica_seed(seed, i)).final_field;
    }
    if (f.is_zero()) {
      throw InvariantError("sample_wave: extinct at s = " + format_double(s));
    }
    return WaveSample{recenter(f), s, horizon};
  });
}

SubadditivityReport check_subadditivity(const SpdeParams& p, double s, double t,
                                        std::size_t replicas, double cap, const GridSpec& grid,
                                        std::uint64_t seed, unsigned jobs) {
  require(s >= 1.0 && t >= 1.0, "check_subadditivity: s, t must be >= 1");
  require(replicas >= 2, "check_subadditivity: need at least 2 replicas");
  auto run = [&](double horizon, std::uint64_t stream) {
    const auto r0 = run_replicas<double>(replicas, jobs, [&](std::size_t r) {
      const Trajectory tr = simulate(ZetaRamp{cap}, p, grid, horizon,
                                     NoiseStream{replica_seed(seed, r), stream},
                                     final_only());
      const double x = tr.right_marker.back();
      if (!std::isfinite(x)) throw InvariantError("upper-left solution died out");
      return x;
    });
    return estimate_mean(r0);
  };
  SubadditivityReport rep;
  rep.lhs = run(s + t, 20);
  rep.rhs_s = run(s, 21);
  rep.rhs_t = run(t, 22);
  rep.difference = rep.lhs.mean - rep.rhs_s.mean - rep.rhs_t.mean;
  rep.joint_std_error = std::sqrt(rep.lhs.std_error * rep.lhs.std_error +
                                  rep.rhs_s.std_error * rep.rhs_s.std_error +
                                  rep.rhs_t.std_error * rep.rhs_t.std_error);
  rep.pass = rep.difference <= 3.0 * rep.joint_std_error;
  return rep;
}

SpeedGap speed_gap(const SpdeParams& p, double theta1, double theta2, double horizon,
                   std::size_t replicas, double cap, const GridSpec& grid, std::uint64_t seed,
                   unsigned jobs) {
  require(theta1 < theta2, "speed_gap: need theta1 < theta2");
  require_horizon(horizon, "speed_gap");
  require(replicas >= 2, "speed_gap: need at least 2 replicas");
  const Field u0 = render_on_grid(ZetaRamp{cap}, grid);
  const CoupledSystem sys = couple_theta(u0, p, theta1, theta2);
  struct One {
    double r1 = 0.0;
    double r2 = 0.0;
    std::uint64_t violations = 0;
  };
  const auto runs = run_replicas<One>(replicas, jobs, [&](std::size_t r) {
    const CoupledTrajectory tr =
        simulate_coupled(sys, grid, horizon, replica_seed(seed, r), CoupledOptions::final_only());
    One o;
    o.r1 = tr.outputs[0].right_marker.back();
    o.r2 = tr.outputs[1].right_marker.back();
    o.violations = tr.order_violations;
    if (!std::isfinite(o.r1)) throw InvariantError("upper-left solution died out");
    return o;
  });
  SpeedGap g;
  g.theta1 = theta1;
  g.theta2 = theta2;
  std::vector<double> gaps;
  std::vector<double> s1;
  std::vector<double> s2;
  g.min_replica_gap = std::numeric_limits<double>::infinity();
  for (const One& o : runs) {
    const double d = (o.r2 - o.r1) / horizon;
    gaps.push_back(d);
    s1.push_back(o.r1 / horizon);
    s2.push_back(o.r2 / horizon);
    g.min_replica_gap = std::min(g.min_replica_gap, d);
    if (o.r2 < o.r1) ++g.negative_replicas;
    g.order_violations += o.violations;
  }
  g.gap = estimate_mean(gaps);
  g.speed1 = estimate_mean(s1);
  g.speed2 = estimate_mean(s2);
  return g;
}

double front_mass(const Field& f, double a) {
  require(a > 0.0, "front_mass: a must be > 0");
  const Field c = recenter(f);
  std::vector<double> ind(c.size());
  for (std::size_t i = 0; i < c.size(); ++i) ind[i] = c.x(i) > -2.0 * a ? 1.0 : 0.0;
  return pairing(c, Field(c.origin(), c.dx(), std::move(ind)));
}

double level_marker(const Field& f, double level) {
  require(level > 0.0, "level_marker: level must be > 0");
  for (std::size_t i = f.size(); i-- > 0;) {
    if (f[i] >= level) {
      if (i + 1 == f.size()) return f.x(i);
      const double a = f[i];
      const double b = f[i + 1];
      return f.x(i) + (a - level) / (a - b) * f.dx();
    }
  }
  return -std::numeric_limits<double>::infinity();
}

FrontSeries track_front(const InitialCondition& ic, const SpdeParams& p, const GridSpec& grid,
                        double horizon, double level, std::size_t record_every,
                        std::uint64_t seed) {
  require(record_every >= 1, "track_front: record_every must be >= 1");
  FrontSeries out;
  SimulateOptions opt;
  opt.record_every = record_every;
  auto observe = [&](double t, double origin, double dx, std::span<const double> v) {
    const Field f(origin, dx, std::vector<double>(v.begin(), v.end()));
    out.times.push_back(t);
    out.level_marker.push_back(level_marker(f, level));
    out.right_marker.push_back(right_marker(f).value());
  };
  opt.observer = [&](std::uint64_t step, double t, double origin, double dx,
                     std::span<const double> v) {
    if (step % record_every == 0) observe(t, origin, dx, v);
  };
  const Field u0 = render_on_grid(ic, grid);
  observe(0.0, u0.origin(), u0.dx(), u0.values());
  const Trajectory tr = simulate(u0, p, grid, horizon, NoiseStream{seed, 0}, opt);
  out.final_field = tr.final_field;
  return out;
}

double fitted_slope(const std::vector<double>& xs, const std::vector<double>& ys, double a,
                    double b) {
  require(xs.size() == ys.size(), "fitted_slope: size mismatch");
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  std::size_t k = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (xs[i] < a || xs[i] > b || !std::isfinite(ys[i])) continue;
    sx += xs[i];
    sy += ys[i];
    sxx += xs[i] * xs[i];
    sxy += xs[i] * ys[i];
    ++k;
  }
  require(k >= 2, "fitted_slope: fewer than 2 samples in range");
  const double n = static_cast<double>(k);
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

void write_speed_table(std::ostream& os, const std::vector<SpeedEstimate>& rows) {
  os << "theta,T,replicas,N_cap,B_hat,stderr,bound_2sqrt_theta\n";
  for (const auto& r : rows) {
    os << format_double(r.theta) << ',' << format_double(r.horizon) << ',' << r.replicas << ','
       << format_double(r.cap) << ',' << format_double(r.mean_R0_over_T) << ','
       << format_double(r.std_error) << ',' << format_double(2.0 * std::sqrt(r.theta)) << '\n';
  }
}

}  // namespace kpplab
