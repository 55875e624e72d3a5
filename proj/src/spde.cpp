#include "kpplab/spde.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "kpplab/error.hpp"

namespace kpplab {

// ---------------------------------------------------------------------------
// Coefficient

Coefficient::Coefficient(double constant) : constant_(constant), label_(format_double(constant)) {
  require(std::isfinite(constant) && constant >= 0.0, "coefficient must be finite and >= 0");
}

Coefficient Coefficient::from_field(Field f) {
  Coefficient c;
  c.fn_ = [f = std::move(f)](double, double x) { return f.interpolate(x); };
  c.label_ = "field";
  return c;
}

Coefficient Coefficient::from_function(std::function<double(double, double)> fn,
                                       std::string label) {
  require(static_cast<bool>(fn), "coefficient function must be callable");
  Coefficient c;
  c.fn_ = std::move(fn);
  c.label_ = std::move(label);
  return c;
}

double Coefficient::at(double t, double x) const { return fn_ ? fn_(t, x) : constant_; }

void Coefficient::sample(double t, double origin, double dx, std::span<double> out) const {
  if (!fn_) {
    std::fill(out.begin(), out.end(), constant_);
    return;
  }
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double v = fn_(t, origin + static_cast<double>(i) * dx);
    if (!(v >= 0.0) || !std::isfinite(v)) {
      throw UsageError("coefficient '" + label_ + "' is negative or non-finite at t = " +
                       format_double(t));
    }
    out[i] = v;
  }
}

Coefficient Coefficient::time_reversed(double horizon) const {
  if (!fn_) return *this;
  return from_function([fn = fn_, horizon](double t, double x) { return fn(horizon - t, x); },
                       label_ + " (time reversed)");
}

// ---------------------------------------------------------------------------

void SpdeParams::validate() const {
  require(theta > 0.0 && std::isfinite(theta), "theta must be > 0");
  require(noise_amp >= 0.0 && std::isfinite(noise_amp), "noise_amp must be >= 0");
  require(diffusion > 0.0 && std::isfinite(diffusion), "diffusion must be > 0");
}

void GridSpec::validate(double diffusion) const {
  require(dx > 0.0 && std::isfinite(dx), "grid: dx must be > 0");
  require(dt > 0.0 && std::isfinite(dt), "grid: dt must be > 0");
  require(a < b, "grid: window must satisfy a < b");
  const double limit = dx * dx / (2.0 * diffusion);
  if (dt > limit * (1.0 + 1e-12)) {
    throw UsageError("grid: dt = " + format_double(dt) + " exceeds the diffusive limit dx²/(2D) = " +
                     format_double(limit));
  }
  if (moving) require(left_pad > 0 && right_pad > 0, "grid: pads must be > 0 in moving mode");
  require(max_trail > 0.0, "grid: max_trail must be > 0");
}

std::uint64_t GridSpec::steps_for(double horizon) const {
  require(horizon >= 0.0 && std::isfinite(horizon), "horizon must be finite and >= 0");
  return static_cast<std::uint64_t>(std::llround(horizon / dt));
}

WindowChange plan_window(const GridSpec& grid, std::size_t n, std::size_t lo, std::size_t hi,
                         double origin, double right_x) {
  WindowChange c;
  if (!grid.moving || n == 0) return c;
  if (n - 1 - hi < grid.right_pad / 2 + 1) c.append = grid.right_pad;
  const bool trailing = std::isfinite(grid.max_trail) && std::isfinite(right_x);
  const double trail_x = trailing ? right_x - grid.max_trail : -std::numeric_limits<double>::infinity();
  if (trailing) {
    const double cells = std::floor((trail_x - origin) / grid.dx);
    if (cells >= static_cast<double>(grid.left_pad)) {
      c.trim_front = std::min(static_cast<std::size_t>(cells), hi);
      return c;
    }
  }
  if (lo < grid.left_pad / 2 + 1) {
    // never past the trail cut, or the next step would trim it again
    double room = static_cast<double>(grid.left_pad);
    if (trailing) room = std::min(room, std::floor((origin - trail_x) / grid.dx));
    if (room >= 1.0) c.prepend = static_cast<std::size_t>(room);
  }
  return c;
}

void apply_window(const WindowChange& change, std::vector<double>& values) {
  if (change.trim_front) {
    values.erase(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(change.trim_front));
  }
  if (change.prepend) values.insert(values.begin(), change.prepend, 0.0);
  if (change.append) values.insert(values.end(), change.append, 0.0);
}

KernelParams kernel_params(const SpdeParams& p, const GridSpec& grid) {
  return KernelParams{p.theta, p.diffusion, p.noise_amp, grid.dx, grid.dt, p.scheme};
}

void euler_kernel(std::span<const double> u, std::span<double> out, std::span<const double> dW,
                  const KernelParams& kp, const CellTerms& terms) {
  const std::size_t n = u.size();
  const double dt = kp.dt;
  const double r = kp.diffusion * dt / (kp.dx * kp.dx);
  const bool noisy = kp.noise_amp != 0.0;
  const bool branching = kp.scheme == NoiseScheme::Branching;
  // Feller variance rate per unit mass times dt: a²·dt/dx.
  const double c_dt = kp.noise_amp * kp.noise_amp * dt / kp.dx;
  const double switch_mass = 0.5 * kGaussianSwitch * c_dt;
  bool unstable = false;
  for (std::size_t i = 0; i < n; ++i) {
    const double ui = u[i];
    const double left = i > 0 ? u[i - 1] : 0.0;
    const double right = i + 1 < n ? u[i + 1] : 0.0;
    const double alpha = terms.alpha.empty() ? terms.alpha_const : terms.alpha[i];
    const double beta = terms.beta.empty() ? terms.beta_const : terms.beta[i];
    const double gamma = terms.gamma.empty() ? terms.gamma_const : terms.gamma[i];
    unstable |= dt * (gamma * ui + beta) > 0.5;
    double v = ui + r * (left - 2.0 * ui + right) +
               dt * (alpha + (kp.theta - beta) * ui - gamma * ui * ui);
    if (noisy) {
      if (!branching) {
        if (ui > 0.0) v += kp.noise_amp * std::sqrt(ui) * dW[i];
      } else if (v > 0.0) {
        if (v > switch_mass) {
          v += kp.noise_amp * std::sqrt(v) * dW[i];
        } else {
          v = feller_transition(v, c_dt, key_from_increment(dW[i]));
        }
      }
    }
    if (!std::isfinite(v)) {
      throw RuntimeFailure("non-finite value at cell " + std::to_string(i) +
                           " (dt too large for the current state?)");
    }
    out[i] = v > 0.0 ? v : 0.0;
  }
  if (unstable) {
    throw RuntimeFailure("reaction term unstable: dt*(gamma*u + beta) > 0.5; reduce dt");
  }
}

namespace {

long long aligned_first_cell(const Field& f) {
  const double k = f.origin() / f.dx();
  const double r = std::round(k);
  if (std::abs(k - r) > 1e-6) {
    throw UsageError("initial field origin " + format_double(f.origin()) +
                     " is not on the lattice dx*Z");
  }
  return static_cast<long long>(r);
}

struct Support {
  bool any = false;
  std::size_t lo = 0;
  std::size_t hi = 0;
  double sum = 0.0;
};

Support scan(std::span<const double> v) {
  Support s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (v[i] > 0.0) {
      if (!s.any) s.lo = i;
      s.any = true;
      s.hi = i;
      s.sum += v[i];
    }
  }
  return s;
}

double trapezoid_mass(std::span<const double> v, const Support& s, double dx) {
  if (!s.any || v.size() < 2) return 0.0;
  return (s.sum - 0.5 * (v.front() + v.back())) * dx;
}

// Coefficient buffers sampled once per step when not constant.
struct CoefficientBuffers {
  std::vector<double> alpha, beta, gamma;

  CellTerms fill(const SpdeParams& p, double t, double origin, double dx, std::size_t n) {
    CellTerms terms;
    auto one = [&](const Coefficient& c, std::vector<double>& buf, std::span<const double>& span,
                   double& constant) {
      if (c.is_constant()) {
        constant = c.constant_value();
        return;
      }
      buf.resize(n);
      c.sample(t, origin, dx, buf);
      span = buf;
    };
    one(p.alpha, alpha, terms.alpha, terms.alpha_const);
    one(p.beta, beta, terms.beta, terms.beta_const);
    one(p.gamma, gamma, terms.gamma, terms.gamma_const);
    return terms;
  }
};

}  // namespace

Field step(const Field& u, const SpdeParams& p, const GridSpec& grid, std::span<const double> dW,
           double t) {
  p.validate();
  grid.validate(p.diffusion);
  require(dW.size() == u.size() || p.noise_amp == 0.0, "step: need one increment per cell");
  require(std::abs(u.dx() - grid.dx) <= 1e-12 * grid.dx, "step: field dx differs from grid dx");
  CoefficientBuffers buffers;
  const CellTerms terms = buffers.fill(p, t, u.origin(), u.dx(), u.size());
  std::vector<double> out(u.size());
  std::vector<double> zeros;
  if (dW.size() != u.size()) {
    zeros.assign(u.size(), 0.0);
    dW = zeros;
  }
  euler_kernel(u.values(), out, dW, kernel_params(p, grid), terms);
  double origin = u.origin();
  const Support s = scan(out);
  if (s.any) {
    const double rx = origin + static_cast<double>(s.hi) * grid.dx;
    const WindowChange change = plan_window(grid, out.size(), s.lo, s.hi, origin, rx);
    apply_window(change, out);
    origin += (static_cast<double>(change.trim_front) - static_cast<double>(change.prepend)) * grid.dx;
  }
  return Field(origin, grid.dx, std::move(out));
}

// ---------------------------------------------------------------------------

std::size_t Trajectory::index_at(double t) const {
  require(!times.empty(), "trajectory has no samples");
  auto it = std::lower_bound(times.begin(), times.end(), t);
  if (it == times.end()) return times.size() - 1;
  const std::size_t i = static_cast<std::size_t>(it - times.begin());
  if (i > 0 && std::abs(times[i - 1] - t) <= std::abs(times[i] - t)) return i - 1;
  return i;
}

const Field& Trajectory::snapshot_at(double t) const {
  require(!snapshots.empty(), "trajectory has no snapshots");
  const Snapshot* best = &snapshots.front();
  for (const auto& s : snapshots) {
    if (std::abs(s.t - t) < std::abs(best->t - t)) best = &s;
  }
  return best->field;
}

Field render_on_grid(const InitialCondition& ic, const GridSpec& grid) {
  const double first = std::floor(grid.a / grid.dx + 1e-9);
  const double last = std::ceil(grid.b / grid.dx - 1e-9);
  const Field f = render(ic, first * grid.dx, last * grid.dx, grid.dx);
  // render() steps as a + i*dx; re-anchor the origin at first*dx exactly.
  return Field(first * grid.dx, grid.dx, std::vector<double>(f.values().begin(), f.values().end()));
}

Trajectory simulate(const InitialCondition& ic, const SpdeParams& p, const GridSpec& grid,
                    double horizon, const NoiseStream& noise, const SimulateOptions& options) {
  return simulate(render_on_grid(ic, grid), p, grid, horizon, noise, options);
}

Trajectory simulate(const Field& u0, const SpdeParams& p, const GridSpec& grid, double horizon,
                    const NoiseStream& noise, const SimulateOptions& options) {
  p.validate();
  grid.validate(p.diffusion);
  require(horizon > 0.0, "simulate: T must be > 0");
  require(std::abs(u0.dx() - grid.dx) <= 1e-12 * grid.dx, "simulate: field dx differs from grid dx");
  require(u0.size() >= 2, "simulate: field needs at least 2 cells");
  require(options.record_every >= 1, "simulate: record_every must be >= 1");

  const double dx = grid.dx;
  const double dt = grid.dt;
  const std::uint64_t steps = std::max<std::uint64_t>(1, grid.steps_for(horizon));
  long long first = aligned_first_cell(u0);
  std::vector<double> u(u0.values().begin(), u0.values().end());
  std::vector<double> next;
  std::vector<double> dW;
  CoefficientBuffers buffers;
  const KernelParams kp = kernel_params(p, grid);
  const bool absorbing = p.alpha.is_zero();

  std::vector<std::pair<std::uint64_t, double>> snap_steps;
  for (double ts : options.snapshot_times) {
    require(ts >= 0.0 && ts <= horizon + 0.5 * dt, "snapshot time outside [0, T]");
    snap_steps.emplace_back(static_cast<std::uint64_t>(std::llround(ts / dt)), ts);
  }
  std::sort(snap_steps.begin(), snap_steps.end());
  std::size_t next_snap = 0;

  Trajectory traj;
  const std::size_t expected = steps / options.record_every + 2;
  traj.times.reserve(expected);
  traj.right_marker.reserve(expected);
  traj.left_marker.reserve(expected);
  traj.mass.reserve(expected);

  auto origin = [&] { return static_cast<double>(first) * dx; };
  auto record = [&](double t, const Support& s) {
    traj.times.push_back(t);
    if (s.any) {
      traj.right_marker.push_back(origin() + static_cast<double>(s.hi) * dx);
      traj.left_marker.push_back(origin() + static_cast<double>(s.lo) * dx);
    } else {
      traj.right_marker.push_back(-std::numeric_limits<double>::infinity());
      traj.left_marker.push_back(std::numeric_limits<double>::infinity());
    }
    traj.mass.push_back(trapezoid_mass(u, s, dx));
  };
  auto take_snapshots = [&](std::uint64_t k) {
    while (next_snap < snap_steps.size() && snap_steps[next_snap].first <= k) {
      traj.snapshots.push_back({snap_steps[next_snap].second, Field(origin(), dx, u)});
      ++next_snap;
    }
  };

  Support s = scan(u);
  record(0.0, s);
  take_snapshots(0);
  if (!s.any && absorbing) {
    traj.extinction_time = 0.0;
  }

  std::uint64_t k = 0;
  if (s.any || !absorbing) {
    for (; k < steps; ++k) {
      const double t = static_cast<double>(k) * dt;
      const std::size_t n = u.size();
      const CellTerms terms = buffers.fill(p, t, origin(), dx, n);
      dW.resize(n);
      if (p.noise_amp != 0.0) white_noise_increment(noise, k, first, dt, dx, dW);
      next.resize(n);
      euler_kernel(u, next, dW, kp, terms);
      u.swap(next);
      s = scan(u);
      const double t_next = static_cast<double>(k + 1) * dt;
      if (s.any) {
        const double rx = origin() + static_cast<double>(s.hi) * dx;
        const WindowChange change = plan_window(grid, u.size(), s.lo, s.hi, origin(), rx);
        if (change.any()) {
          apply_window(change, u);
          first += static_cast<long long>(change.trim_front) - static_cast<long long>(change.prepend);
          s = scan(u);
        }
      }
      if (options.observer) options.observer(k + 1, t_next, origin(), dx, u);
      if ((k + 1) % options.record_every == 0 || k + 1 == steps) record(t_next, s);
      take_snapshots(k + 1);
      if (!s.any && absorbing) {
        traj.extinction_time = t_next;
        ++k;
        break;
      }
    }
  }

  // Extinct: every later sample is the zero state.
  if (traj.extinction_time.is_finite()) {
    const Support empty;
    for (; k < steps; ++k) {
      if ((k + 1) % options.record_every == 0 || k + 1 == steps) {
        record(static_cast<double>(k + 1) * dt, empty);
      }
      take_snapshots(k + 1);
    }
  }
  take_snapshots(std::numeric_limits<std::uint64_t>::max());
  traj.final_field = Field(origin(), dx, std::move(u));
  return traj;
}

Estimate extinction_probability(const InitialCondition& ic, const SpdeParams& p,
                                const GridSpec& grid, double horizon, std::size_t replicas,
                                std::uint64_t seed, unsigned jobs) {
  require(replicas >= 2, "extinction_probability: need at least 2 replicas");
  const Field u0 = render_on_grid(ic, grid);
  auto died = run_replicas<double>(replicas, jobs, [&](std::size_t r) {
    const Trajectory traj = simulate(u0, p, grid, horizon, NoiseStream{replica_seed(seed, r), 0});
    return traj.extinction_time <= ExtendedReal(horizon) ? 1.0 : 0.0;
  });
  Estimate e;
  e.count = replicas;
  double hits = 0.0;
  for (double d : died) hits += d;
  e.mean = hits / static_cast<double>(replicas);
  e.std_error = std::sqrt(e.mean * (1.0 - e.mean) / static_cast<double>(replicas));
  return e;
}

void write_trajectory_csv(std::ostream& os, const Trajectory& traj) {
  os << "t,R0,L0,mass,extinct\n";
  for (std::size_t i = 0; i < traj.times.size(); ++i) {
    const bool extinct = !std::isfinite(traj.right_marker[i]);
    os << format_double(traj.times[i]) << ',' << format_double(traj.right_marker[i]) << ','
       << format_double(traj.left_marker[i]) << ',' << format_double(traj.mass[i]) << ','
       << (extinct ? 1 : 0) << '\n';
  }
}

}  // namespace kpplab
