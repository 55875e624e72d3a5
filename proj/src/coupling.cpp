#include "kpplab/coupling.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <set>

#include <json.hpp>

#include "kpplab/error.hpp"

namespace kpplab {

void CoupledSystem::validate() const {
  require(!components.empty(), "coupled system: no components");
  std::set<std::uint64_t> streams;
  std::set<std::string> names;
  for (std::size_t j = 0; j < components.size(); ++j) {
    const Component& c = components[j];
    c.params.validate();
    require(names.insert(c.name).second, "coupled system: duplicate component '" + c.name + "'");
    require(streams.insert(c.stream).second,
            "coupled system: component '" + c.name + "' reuses a noise stream");
    require(c.initial.size() >= 2, "coupled system: component '" + c.name + "' has no field");
    require(std::abs(c.initial.dx() - components[0].initial.dx()) <= 1e-12 * c.initial.dx(),
            "coupled system: components must share dx");
    for (const auto& term : c.immigration) {
      require(term.coefficient >= 0.0, "coupled system: negative immigration coefficient");
      require(!term.sources.empty(), "coupled system: immigration term without sources");
      for (std::size_t s : term.sources) {
        require(s < j, "coupled system: '" + c.name + "' references a later component");
      }
    }
    for (const auto& term : c.annihilation) {
      require(term.coefficient >= 0.0, "coupled system: negative annihilation coefficient");
      require(term.source < j, "coupled system: '" + c.name + "' references a later component");
    }
  }
  std::set<std::string> output_names;
  for (const Output& o : outputs) {
    require(output_names.insert(o.name).second, "coupled system: duplicate output '" + o.name + "'");
    require(!o.parts.empty(), "coupled system: output '" + o.name + "' is empty");
    for (std::size_t p : o.parts) {
      require(p < components.size(), "coupled system: output '" + o.name + "' out of range");
    }
  }
  for (const OrderRelation& r : relations) {
    const auto& lo = outputs[output_index(r.lower)].parts;
    const auto& hi = outputs[output_index(r.upper)].parts;
    require(lo.size() <= hi.size() && std::equal(lo.begin(), lo.end(), hi.begin()),
            "coupled system: relation " + r.lower + " <= " + r.upper +
                " needs the lower parts as a prefix of the upper parts");
  }
}

std::size_t CoupledSystem::output_index(const std::string& name) const {
  for (std::size_t i = 0; i < outputs.size(); ++i) {
    if (outputs[i].name == name) return i;
  }
  throw UsageError("coupled system: unknown output '" + name + "'");
}

const Trajectory& CoupledTrajectory::at(const std::string& name) const {
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (names[i] == name) return outputs[i];
  }
  throw UsageError("coupled trajectory: unknown output '" + name + "'");
}

namespace {

long long lattice_index(double x, double dx) {
  const double k = x / dx;
  const double r = std::round(k);
  if (std::abs(k - r) > 1e-6) {
    throw UsageError("coupled system: field origin " + format_double(x) +
                     " is not on the lattice dx*Z");
  }
  return static_cast<long long>(r);
}

void sample_into(const Coefficient& c, double t, double origin, double dx, std::vector<double>& out) {
  if (c.is_constant()) {
    std::fill(out.begin(), out.end(), c.constant_value());
  } else {
    c.sample(t, origin, dx, out);
  }
}

struct Span {
  bool any = false;
  std::size_t lo = 0;
  std::size_t hi = 0;
  // Smallest right edge over the nonzero components; the trail trim is
  // measured from it so a lagging component is never cut away.
  std::size_t trail_hi = 0;
};

Span union_support(const std::vector<std::vector<double>>& comps) {
  Span s;
  bool seen = false;
  for (const auto& u : comps) {
    for (std::size_t i = 0; i < u.size(); ++i) {
      if (u[i] > 0.0) {
        if (!s.any || i < s.lo) s.lo = i;
        if (!s.any || i > s.hi) s.hi = i;
        s.any = true;
        break;
      }
    }
    for (std::size_t i = u.size(); i-- > 0;) {
      if (u[i] > 0.0) {
        if (i > s.hi) s.hi = i;
        if (!seen || i < s.trail_hi) s.trail_hi = i;
        seen = true;
        break;
      }
    }
  }
  return s;
}

}  // namespace

CoupledTrajectory simulate_coupled(const CoupledSystem& system, const GridSpec& grid,
                                   double horizon, std::uint64_t seed,
                                   const CoupledOptions& options) {
  system.validate();
  for (const auto& c : system.components) grid.validate(c.params.diffusion);
  require(horizon > 0.0, "coupled: T must be > 0");
  require(options.record_every >= 1, "coupled: record_every must be >= 1");
  const double dx = grid.dx;
  const double dt = grid.dt;
  require(std::abs(system.components[0].initial.dx() - dx) <= 1e-12 * dx,
          "coupled: field dx differs from grid dx");

  // Common window: union of the initial windows on the lattice.
  long long first = std::numeric_limits<long long>::max();
  long long last = std::numeric_limits<long long>::min();
  for (const auto& c : system.components) {
    const long long f = lattice_index(c.initial.origin(), dx);
    first = std::min(first, f);
    last = std::max(last, f + static_cast<long long>(c.initial.size()) - 1);
  }
  const std::size_t m = system.components.size();
  std::vector<std::vector<double>> u(m);
  for (std::size_t j = 0; j < m; ++j) {
    const Field& f = system.components[j].initial;
    u[j].assign(static_cast<std::size_t>(last - first + 1), 0.0);
    const long long off = lattice_index(f.origin(), dx) - first;
    std::copy(f.values().begin(), f.values().end(), u[j].begin() + off);
  }

  const std::uint64_t steps = std::max<std::uint64_t>(1, grid.steps_for(horizon));
  std::vector<std::pair<std::uint64_t, double>> snap_steps;
  for (double ts : options.snapshot_times) {
    require(ts >= 0.0 && ts <= horizon + 0.5 * dt, "snapshot time outside [0, T]");
    snap_steps.emplace_back(static_cast<std::uint64_t>(std::llround(ts / dt)), ts);
  }
  std::sort(snap_steps.begin(), snap_steps.end());
  std::size_t next_snap = 0;

  CoupledTrajectory out;
  out.steps = steps;
  for (const auto& o : system.outputs) out.names.push_back(o.name);
  out.outputs.resize(system.outputs.size());

  struct Rel {
    std::size_t lower_parts;
    const std::vector<std::size_t>* upper;
  };
  std::vector<Rel> rels;
  for (const auto& r : system.relations) {
    rels.push_back({system.outputs[system.output_index(r.lower)].parts.size(),
                    &system.outputs[system.output_index(r.upper)].parts});
  }

  auto origin = [&] { return static_cast<double>(first) * dx; };
  std::vector<double> sum;
  auto output_sum = [&](const Output& o) {
    sum.assign(u[0].size(), 0.0);
    for (std::size_t part : o.parts) {
      for (std::size_t i = 0; i < sum.size(); ++i) sum[i] += u[part][i];
    }
  };
  auto record = [&](double t) {
    for (std::size_t k = 0; k < system.outputs.size(); ++k) {
      output_sum(system.outputs[k]);
      Trajectory& tr = out.outputs[k];
      std::size_t lo = 0;
      std::size_t hi = 0;
      bool any = false;
      double total = 0.0;
      for (std::size_t i = 0; i < sum.size(); ++i) {
        if (sum[i] > 0.0) {
          if (!any) lo = i;
          any = true;
          hi = i;
          total += sum[i];
        }
      }
      tr.times.push_back(t);
      if (any) {
        tr.right_marker.push_back(origin() + static_cast<double>(hi) * dx);
        tr.left_marker.push_back(origin() + static_cast<double>(lo) * dx);
        tr.mass.push_back((total - 0.5 * (sum.front() + sum.back())) * dx);
      } else {
        tr.right_marker.push_back(-std::numeric_limits<double>::infinity());
        tr.left_marker.push_back(std::numeric_limits<double>::infinity());
        tr.mass.push_back(0.0);
        if (!tr.extinction_time.is_finite()) tr.extinction_time = t;
      }
      if (any && tr.extinction_time.is_finite()) {
        // Revived by immigration: the extinction time only marks a
        // permanent zero.
        tr.extinction_time = ExtendedReal::plus_infinity();
      }
    }
  };
  auto take_snapshots = [&](std::uint64_t k) {
    while (next_snap < snap_steps.size() && snap_steps[next_snap].first <= k) {
      for (std::size_t o = 0; o < system.outputs.size(); ++o) {
        output_sum(system.outputs[o]);
        out.outputs[o].snapshots.push_back({snap_steps[next_snap].second, Field(origin(), dx, sum)});
      }
      ++next_snap;
    }
  };
  auto check_order = [&] {
    const std::size_t n = u[0].size();
    for (const Rel& r : rels) {
      for (std::size_t i = 0; i < n; ++i) {
        double lower = 0.0;
        std::size_t k = 0;
        for (; k < r.lower_parts; ++k) lower += u[(*r.upper)[k]][i];
        double upper = lower;
        for (; k < r.upper->size(); ++k) upper += u[(*r.upper)[k]][i];
        ++out.order_checks;
        if (lower > upper) ++out.order_violations;
      }
    }
  };

  record(0.0);
  take_snapshots(0);
  check_order();

  std::vector<std::vector<double>> next(m);
  std::vector<double> alpha;
  std::vector<double> beta;
  std::vector<double> gamma;
  std::vector<double> dW;
  std::vector<KernelParams> kps;
  for (const auto& c : system.components) kps.push_back(kernel_params(c.params, grid));

  for (std::uint64_t k = 0; k < steps; ++k) {
    const double t = static_cast<double>(k) * dt;
    const std::size_t n = u[0].size();
    for (std::size_t j = 0; j < m; ++j) {
      const Component& c = system.components[j];
      alpha.resize(n);
      beta.resize(n);
      gamma.resize(n);
      sample_into(c.params.alpha, t, origin(), dx, alpha);
      sample_into(c.params.beta, t, origin(), dx, beta);
      sample_into(c.params.gamma, t, origin(), dx, gamma);
      for (const auto& term : c.immigration) {
        for (std::size_t i = 0; i < n; ++i) {
          double prod = term.coefficient;
          for (std::size_t s : term.sources) prod *= u[s][i];
          alpha[i] += prod;
        }
      }
      for (const auto& term : c.annihilation) {
        for (std::size_t i = 0; i < n; ++i) beta[i] += term.coefficient * u[term.source][i];
      }
      CellTerms terms;
      terms.alpha = alpha;
      terms.beta = beta;
      terms.gamma = gamma;
      dW.assign(n, 0.0);
      if (c.params.noise_amp != 0.0) {
        white_noise_increment(NoiseStream{seed, c.stream, 0}, k, first, dt, dx, dW);
      }
      next[j].resize(n);
      try {
        euler_kernel(u[j], next[j], dW, kps[j], terms);
      } catch (const RuntimeFailure& e) {
        throw RuntimeFailure("component '" + c.name + "' at t = " + format_double(t) + ": " +
                             e.what());
      }
    }
    u.swap(next);
    const Span s = union_support(u);
    if (s.any) {
      const double rx = origin() + static_cast<double>(s.trail_hi) * dx;
      const WindowChange change = plan_window(grid, n, s.lo, s.hi, origin(), rx);
      if (change.any()) {
        for (auto& comp : u) apply_window(change, comp);
        first += static_cast<long long>(change.trim_front) - static_cast<long long>(change.prepend);
      }
    }
    check_order();
    const double t_next = static_cast<double>(k + 1) * dt;
    if (options.observer) options.observer(k + 1, t_next, origin(), dx, u);
    if ((k + 1) % options.record_every == 0 || k + 1 == steps) record(t_next);
    take_snapshots(k + 1);
  }
  take_snapshots(std::numeric_limits<std::uint64_t>::max());
  for (std::size_t o = 0; o < system.outputs.size(); ++o) {
    output_sum(system.outputs[o]);
    out.outputs[o].final_field = Field(origin(), dx, sum);
  }
  return out;
}

// ---------------------------------------------------------------------------

namespace {

// Both fields on the union of their windows.
std::pair<Field, Field> common_window(const Field& f, const Field& g) {
  require(std::abs(f.dx() - g.dx()) <= 1e-12 * f.dx(), "coupling: fields must share dx");
  const double a = std::min(f.origin(), g.origin());
  const double b = std::max(f.right_edge(), g.right_edge());
  return {resize(f, a, b), resize(g, a, b)};
}

Component base(std::string name, Field init, const SpdeParams& p, std::uint64_t stream) {
  Component c;
  c.name = std::move(name);
  c.initial = std::move(init);
  c.params = p;
  c.stream = stream;
  return c;
}

}  // namespace

CoupledSystem couple_monotone(const Field& u1_0, const Field& u2_0, const SpdeParams& p) {
  auto [a, b] = common_window(u1_0, u2_0);
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] > b[i]) {
      throw UsageError("couple_monotone: u1(0) > u2(0) at x = " + format_double(a.x(i)));
    }
  }
  CoupledSystem s;
  s.components.push_back(base("u1", a, p, 1));
  Component v = base("v", subtract(b, a, true), p, 2);
  v.annihilation.push_back({2.0, 0});
  s.components.push_back(std::move(v));
  s.outputs = {{"u1", {0}}, {"u2", {0, 1}}};
  s.relations = {{"u1", "u2"}};
  return s;
}

CoupledSystem couple_theta(const Field& u0, const SpdeParams& p, double theta1, double theta2) {
  require(theta1 > 0.0 && theta1 < theta2, "couple_theta: need 0 < theta1 < theta2");
  CoupledSystem s;
  SpdeParams p1 = p;
  p1.theta = theta1;
  s.components.push_back(base("u", u0, p1, 1));
  SpdeParams p2 = p;
  p2.theta = theta2;
  p2.alpha = 0.0;
  Component v = base("v", Field::zeros(u0.origin(), u0.dx(), u0.size()), p2, 2);
  v.immigration.push_back({theta2 - theta1, {0}});
  v.annihilation.push_back({2.0, 0});
  s.components.push_back(std::move(v));
  s.outputs = {{"u_theta1", {0}}, {"u_theta2", {0, 1}}};
  s.relations = {{"u_theta1", "u_theta2"}};
  return s;
}

CoupledSystem couple_two_independent(const Field& u1_0, const Field& u2_0, const SpdeParams& p) {
  auto [a, b] = common_window(u1_0, u2_0);
  CoupledSystem s;
  s.components.push_back(base("u1", a, p, 1));
  Component v = base("v", b, p, 2);
  v.annihilation.push_back({2.0, 0});
  s.components.push_back(std::move(v));
  SpdeParams pw = p;
  pw.alpha = 0.0;
  Component w = base("w", Field::zeros(a.origin(), a.dx(), a.size()), pw, 3);
  w.immigration.push_back({2.0, {0, 1}});
  w.annihilation.push_back({2.0, 1});
  s.components.push_back(std::move(w));
  s.outputs = {{"u1", {0}},         {"u2", {1, 2}},          {"u0", {0, 1}},
               {"v", {1}},          {"u1_plus_u2", {0, 1, 2}}};
  s.relations = {{"v", "u2"}, {"u0", "u1_plus_u2"}};
  return s;
}

CoupledSystem couple_immigration(const Field& u0, const SpdeParams& p, const Coefficient& alpha1,
                                 const Coefficient& alpha2) {
  CoupledSystem s;
  SpdeParams p1 = p;
  p1.alpha = alpha1;
  s.components.push_back(base("u", u0, p1, 1));
  SpdeParams p2 = p;
  if (alpha1.is_constant() && alpha2.is_constant()) {
    const double d = alpha2.constant_value() - alpha1.constant_value();
    require(d >= 0.0, "couple_immigration: alpha1 > alpha2");
    p2.alpha = d;
  } else {
    p2.alpha = Coefficient::from_function(
        [alpha1, alpha2](double t, double x) {
          const double d = alpha2.at(t, x) - alpha1.at(t, x);
          if (d < 0.0) {
            throw UsageError("couple_immigration: alpha1 > alpha2 at t = " + format_double(t) +
                             ", x = " + format_double(x));
          }
          return d;
        },
        "alpha2 - alpha1");
  }
  Component v = base("v", Field::zeros(u0.origin(), u0.dx(), u0.size()), p2, 2);
  v.annihilation.push_back({2.0, 0});
  s.components.push_back(std::move(v));
  s.outputs = {{"u_alpha1", {0}}, {"u_alpha2", {0, 1}}};
  s.relations = {{"u_alpha1", "u_alpha2"}};
  return s;
}

CoupledSystem claim2_chain(const Field& phi, const Field& big_phi, const Field& psi,
                           const SpdeParams& p) {
  require(std::abs(phi.dx() - big_phi.dx()) <= 1e-12 * phi.dx() &&
              std::abs(phi.dx() - psi.dx()) <= 1e-12 * phi.dx(),
          "claim2_chain: fields must share dx");
  const double lo = std::min({phi.origin(), big_phi.origin(), psi.origin()});
  const double hi = std::max({phi.right_edge(), big_phi.right_edge(), psi.right_edge()});
  const Field a = resize(phi, lo, hi);
  const Field b2 = resize(big_phi, lo, hi);
  const Field c2 = resize(psi, lo, hi);
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] > b2[i]) {
      throw UsageError("claim2_chain: phi > Phi at x = " + format_double(a.x(i)));
    }
  }
  CoupledSystem s;
  s.components.push_back(base("u1", a, p, 1));
  Component v2 = base("v2", subtract(b2, a, true), p, 2);
  v2.annihilation.push_back({2.0, 0});
  s.components.push_back(std::move(v2));
  Component v3 = base("v3", c2, p, 3);
  v3.annihilation = {{2.0, 0}, {2.0, 1}};
  s.components.push_back(std::move(v3));
  SpdeParams pd = p;
  pd.alpha = 0.0;
  Component d4 = base("d4", Field::zeros(a.origin(), a.dx(), a.size()), pd, 4);
  d4.immigration.push_back({2.0, {1, 2}});
  d4.annihilation = {{2.0, 0}, {2.0, 2}};
  s.components.push_back(std::move(d4));
  s.outputs = {{"u_phi", {0}},
               {"u_Phi", {0, 1}},
               {"u_Psi", {0, 1, 2}},
               {"u_phi_plus_psi", {0, 2, 3}}};
  s.relations = {{"u_phi", "u_Phi"}, {"u_Phi", "u_Psi"}, {"u_phi", "u_phi_plus_psi"}};
  return s;
}

Field delta_field(const CoupledTrajectory& traj, const std::string& lower,
                  const std::string& upper, double s) {
  const Trajectory& lo = traj.at(lower);
  const Trajectory& hi = traj.at(upper);
  require(!lo.snapshots.empty() && !hi.snapshots.empty(), "delta_field: no snapshots recorded");
  const Field& fl = lo.snapshot_at(s);
  const Field& fh = hi.snapshot_at(s);
  bool found = false;
  for (const auto& snap : lo.snapshots) found |= std::abs(snap.t - s) <= 1e-9 * std::max(1.0, s);
  require(found, "delta_field: no snapshot at s = " + format_double(s));
  const ExtendedReal r = right_marker(fl);
  require(r.is_finite(), "delta_field: lower component is extinct at s = " + format_double(s));
  return subtract(shift(fh, r.value()), shift(fl, r.value()));
}

void write_coupled_csv(std::ostream& os, const CoupledTrajectory& traj) {
  os << 't';
  for (const auto& n : traj.names) os << ',' << n << "_R0," << n << "_L0," << n << "_mass";
  os << '\n';
  if (traj.outputs.empty()) return;
  const std::size_t rows = traj.outputs[0].times.size();
  for (std::size_t i = 0; i < rows; ++i) {
    os << format_double(traj.outputs[0].times[i]);
    for (const auto& tr : traj.outputs) {
      os << ',' << format_double(tr.right_marker[i]) << ',' << format_double(tr.left_marker[i])
         << ',' << format_double(tr.mass[i]);
    }
    os << '\n';
  }
}

void write_wiring_json(std::ostream& os, const CoupledSystem& system, const GridSpec& grid,
                       std::uint64_t seed) {
  using nlohmann::ordered_json;
  ordered_json j;
  j["seed"] = seed;
  j["grid"] = {{"dx", grid.dx}, {"dt", grid.dt}, {"moving", grid.moving}};
  ordered_json comps = ordered_json::array();
  for (const auto& c : system.components) {
    ordered_json cj;
    cj["name"] = c.name;
    cj["stream"] = c.stream;
    cj["theta"] = c.params.theta;
    cj["alpha"] = c.params.alpha.label();
    cj["beta"] = c.params.beta.label();
    cj["gamma"] = c.params.gamma.label();
    cj["noise_amp"] = c.params.noise_amp;
    cj["initial_mass"] = mass(c.initial);
    ordered_json imm = ordered_json::array();
    for (const auto& t : c.immigration) {
      ordered_json src = ordered_json::array();
      for (std::size_t s : t.sources) src.push_back(system.components[s].name);
      imm.push_back({{"coefficient", t.coefficient}, {"product_of", src}});
    }
    cj["immigration"] = imm;
    ordered_json ann = ordered_json::array();
    for (const auto& t : c.annihilation) {
      ann.push_back({{"coefficient", t.coefficient}, {"source", system.components[t.source].name}});
    }
    cj["annihilation"] = ann;
    comps.push_back(cj);
  }
  j["components"] = comps;
  ordered_json outs = ordered_json::array();
  for (const auto& o : system.outputs) {
    ordered_json parts = ordered_json::array();
    for (std::size_t p : o.parts) parts.push_back(system.components[p].name);
    outs.push_back({{"name", o.name}, {"sum_of", parts}});
  }
  j["outputs"] = outs;
  ordered_json rels = ordered_json::array();
  for (const auto& r : system.relations) rels.push_back({{"lower", r.lower}, {"upper", r.upper}});
  j["relations"] = rels;
  os << j.dump(2) << '\n';
}

}  // namespace kpplab
