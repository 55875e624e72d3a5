#include <doctest.h>

#include <cmath>

#include "kpplab/coupling.hpp"
#include "kpplab/error.hpp"
#include "kpplab/stats.hpp"

using namespace kpplab;

namespace {

GridSpec small_grid() {
  GridSpec g;
  g.a = -3;
  g.b = 3;
  return g;
}

SpdeParams theta(double th) {
  SpdeParams p;
  p.theta = th;
  return p;
}

}  // namespace

TEST_CASE("monotone coupling") {
  const GridSpec g = small_grid();
  const Field b = render_on_grid(Bump{}, g);
  CoupledOptions o;
  o.snapshot_times = {0.5};

  const auto same = simulate_coupled(couple_monotone(b, b, theta(3)), g, 1.0, 4, o);
  CHECK(same.at("u1").final_field == same.at("u2").final_field);
  CHECK(same.order_violations == 0);
  CHECK(delta_field(same, "u1", "u2", 0.5).is_zero());

  const Field zero = scale(b, 0.0);
  const auto lower0 = simulate_coupled(couple_monotone(zero, b, theta(3)), g, 1.0, 4);
  CHECK(lower0.at("u1").final_field.is_zero());

  const auto half = simulate_coupled(couple_monotone(scale(b, 0.5), b, theta(3)), g, 1.0, 4);
  CHECK(half.order_checks > 0);
  CHECK(half.order_violations == 0);

  CHECK_THROWS_AS(couple_monotone(b, scale(b, 0.5), theta(3)), UsageError);
}

TEST_CASE("theta coupling") {
  const GridSpec g = small_grid();
  const Field b = render_on_grid(Bump{}, g);
  CHECK_THROWS_AS(couple_theta(b, theta(1), 2.0, 2.0), UsageError);
  CHECK_THROWS_AS(couple_theta(b, theta(1), 3.0, 2.0), UsageError);

  const auto z = simulate_coupled(couple_theta(scale(b, 0.0), theta(1), 2, 5), g, 1.0, 2);
  CHECK(z.at("u_theta1").final_field.is_zero());
  CHECK(z.at("u_theta2").final_field.is_zero());

  const auto r = simulate_coupled(couple_theta(b, theta(1), 2, 5), g, 1.0, 2);
  CHECK(r.order_violations == 0);
  for (std::size_t i = 0; i < r.at("u_theta1").times.size(); ++i) {
    CHECK(r.at("u_theta1").right_marker[i] <= r.at("u_theta2").right_marker[i]);
  }
}

TEST_CASE("two independent coupling") {
  const GridSpec g = small_grid();
  const Field b = render_on_grid(Bump{}, g);
  const Field zero = scale(b, 0.0);

  const auto a = simulate_coupled(couple_two_independent(b, zero, theta(2)), g, 1.0, 8);
  CHECK(a.at("u2").final_field.is_zero());
  CHECK(a.at("u0").final_field == a.at("u1").final_field);

  const auto c = simulate_coupled(couple_two_independent(zero, b, theta(2)), g, 1.0, 8);
  CHECK(c.at("u1").final_field.is_zero());
  CHECK(c.at("u0").final_field == c.at("u2").final_field);

  const auto d = simulate_coupled(couple_two_independent(b, shift(b, -0.5), theta(2)), g, 1.0, 8);
  CHECK(d.order_violations == 0);
}

TEST_CASE("immigration coupling") {
  const GridSpec g = small_grid();
  const Field b = render_on_grid(Bump{}, g);
  const auto eq = simulate_coupled(couple_immigration(b, theta(2), 0.5, 0.5), g, 1.0, 3);
  CHECK(eq.at("u_alpha1").final_field == eq.at("u_alpha2").final_field);

  const Coefficient window = Coefficient::from_function(
      [](double, double x) { return (x >= 0 && x <= 1) ? 1.0 : 0.0; }, "window");
  const auto up = simulate_coupled(couple_immigration(b, theta(2), 0.0, window), g, 1.0, 3);
  CHECK(up.order_violations == 0);
  CHECK_THROWS_AS(couple_immigration(b, theta(2), 1.0, 0.5), UsageError);
}

TEST_CASE("wiring validation") {
  const GridSpec g = small_grid();
  const Field b = render_on_grid(Bump{}, g);
  CoupledSystem s = couple_monotone(scale(b, 0.5), b, theta(2));
  s.components[0].immigration.push_back({1.0, {1}});
  CHECK_THROWS_AS(s.validate(), UsageError);

  CoupledSystem dup = couple_monotone(scale(b, 0.5), b, theta(2));
  dup.components[1].stream = dup.components[0].stream;
  CHECK_THROWS_AS(dup.validate(), UsageError);

  CoupledSystem rel = couple_monotone(scale(b, 0.5), b, theta(2));
  rel.relations.push_back({"u2", "u1"});
  CHECK_THROWS_AS(rel.validate(), UsageError);
}

TEST_CASE("coupled runs are reproducible") {
  const GridSpec g = small_grid();
  const Field b = render_on_grid(Bump{}, g);
  const auto s = claim2_chain(scale(b, 0.5), b, shift(b, -1.0), theta(2));
  const auto x = simulate_coupled(s, g, 0.5, 77);
  const auto y = simulate_coupled(s, g, 0.5, 77);
  for (const auto& name : x.names) CHECK(x.at(name).final_field == y.at(name).final_field);
  CHECK(x.order_violations == 0);
}

TEST_CASE("theta coupling leaves the base path untouched") {
  const GridSpec g = small_grid();
  const Field b = render_on_grid(Bump{}, g);
  const auto x = simulate_coupled(couple_theta(b, theta(1), 2, 3), g, 0.5, 12);
  const auto y = simulate_coupled(couple_theta(b, theta(1), 2, 6), g, 0.5, 12);
  const auto plain = simulate(b, theta(2), g, 0.5, NoiseStream{12, 1});
  CHECK(x.at("u_theta1").final_field == y.at("u_theta1").final_field);
  CHECK(x.at("u_theta1").right_marker == y.at("u_theta1").right_marker);
  CHECK(x.at("u_theta1").final_field == plain.final_field);
}

TEST_CASE("delta field is nonnegative") {
  const GridSpec g = small_grid();
  const Field b = render_on_grid(Bump{}, g);
  CoupledOptions o;
  o.snapshot_times = {0.25, 0.5};
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto t = simulate_coupled(couple_theta(b, theta(1), 2, 5), g, 0.5, seed, o);
    for (double s : {0.25, 0.5}) {
      if (t.at("u_theta1").snapshot_at(s).is_zero()) continue;
      const Field d = delta_field(t, "u_theta1", "u_theta2", s);
      for (double v : d.values()) CHECK(v >= 0.0);
    }
  }
}

TEST_CASE("two independent components are uncorrelated") {
  const GridSpec g = small_grid();
  const Field b = render_on_grid(Bump{}, g);
  const auto sys = couple_two_independent(b, b, theta(3));
  const auto rs = run_replicas<std::pair<double, double>>(2000, 0, [&](std::size_t r) {
    const auto t = simulate_coupled(sys, g, 0.5, replica_seed(1, r), CoupledOptions::final_only());
    return std::pair{pairing(t.at("u1").final_field, b), pairing(t.at("u2").final_field, b)};
  });
  std::vector<double> a, c;
  for (const auto& [x, y] : rs) {
    a.push_back(x);
    c.push_back(y);
  }
  CHECK(std::abs(sample_correlation(a, c)) < 3.0 / std::sqrt(2000.0));
}

TEST_CASE("immigration builds mass at rate c") {
  const GridSpec g = small_grid();
  const Field zero = Field::zeros(g.a, g.dx, 61);
  const double c = 1.0, t = 0.1;
  const Coefficient window = Coefficient::from_function(
      [c](double, double x) { return (x >= 0 && x <= 1) ? c : 0.0; }, "window");
  const auto sys = couple_immigration(zero, theta(2), 0.0, window);
  const auto ms = run_replicas<double>(400, 0, [&](std::size_t r) {
    return mass(simulate_coupled(sys, g, t, replica_seed(3, r), CoupledOptions::final_only())
                    .at("u_alpha2")
                    .final_field);
  });
  const Estimate e = estimate_mean(ms);
  // the window covers 1 + dx of trapezoid mass on the grid
  CHECK(e.mean >= 0.9 * c * t);
  CHECK(e.mean <= 1.5 * c * t);
}
