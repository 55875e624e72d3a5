#include <doctest.h>

#include <cmath>

#include "kpplab/coupling.hpp"
#include "kpplab/error.hpp"
#include "kpplab/fronts.hpp"

using namespace kpplab;

TEST_CASE("recenter") {
  const Field f = render(Bump{1.3}, -4, 4, 0.1);
  const Field r = recenter(f);
  CHECK(right_marker(r).value() == 0.0);
  CHECK(r.values().size() == f.values().size());
  CHECK_THROWS_AS(recenter(Field::zeros(-1, 0.1, 21)), UsageError);
}

TEST_CASE("front_mass") {
  // broad mass far behind the front plus a thin spike at the front
  std::vector<double> v(201, 0.0);
  for (std::size_t i = 0; i < 50; ++i) v[i] = 1.0;
  v[200] = 10.0;
  const Field f(-10, 0.1, v);
  CHECK(front_mass(f, 0.5) == doctest::Approx(10.0 * 0.1 / 2).epsilon(1e-9));

  const Field b = render(Bump{}, -3, 3, 0.1);
  double prev = -1;
  for (double a : {0.1, 0.25, 0.5, 1.0, 2.0}) {
    const double m = front_mass(b, a);
    CHECK(m >= prev);
    prev = m;
  }
  CHECK(front_mass(b, 2.0) == doctest::Approx(mass(b)));
  CHECK_THROWS_AS(front_mass(Field::zeros(0, 0.1, 5), 1.0), UsageError);
}

TEST_CASE("level marker and slope fit") {
  const Field f(0, 1, {3, 2, 1, 0});
  CHECK(level_marker(f, 1.5) == doctest::Approx(1.5));
  CHECK(level_marker(f, 5.0) == -INFINITY);
  const std::vector<double> t{0, 1, 2, 3, 4};
  const std::vector<double> y{1, 3, 5, 7, 9};
  CHECK(fitted_slope(t, y, 1, 4) == doctest::Approx(2.0));
}

TEST_CASE("upper-left solution") {
  const GridSpec g = default_front_grid();
  SpdeParams p;
  p.theta = 5;
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    const Trajectory t = upper_left_solution(p, 50, g, 2.0, seed);
    for (double r : t.right_marker) CHECK(std::isfinite(r));
  }

  // cap 25 stays below cap 50 under the monotone coupling
  const Field z25 = render_on_grid(ZetaRamp{25}, g);
  const Field z50 = render_on_grid(ZetaRamp{50}, g);
  const auto c = simulate_coupled(couple_monotone(z25, z50, p), g, 1.0, 5);
  CHECK(c.order_violations == 0);
  for (std::size_t i = 0; i < c.at("u1").times.size(); ++i) {
    CHECK(c.at("u1").right_marker[i] <= c.at("u2").right_marker[i]);
  }
}

TEST_CASE("speed estimators") {
  const GridSpec g = default_front_grid();
  SpdeParams p;
  p.theta = 5;
  const SpeedReport r = speed_report(p, 2.0, 12, 50, g, 3);
  CHECK(r.extinct == 0);
  CHECK(r.speed.per_replica.size() == 12);
  CHECK(r.speed.mean_R0_over_T > 0);
  CHECK(r.speed.mean_R0_over_T < 2 * std::sqrt(5.0) + 3 * r.speed.std_error);

  const SpeedEstimate b = estimate_B(p, 2.0, 12, 50, g, 3);
  CHECK(b.mean_R0_over_T == r.speed.mean_R0_over_T);
  CHECK_THROWS_AS(estimate_B(p, 0.5, 12, 50, g, 3), UsageError);

  const SpeedGap gap = speed_gap(p, 4, 6, 2.0, 8, 50, g, 3);
  CHECK(gap.min_replica_gap >= 0.0);
  CHECK(gap.order_violations == 0);
  CHECK_THROWS_AS(speed_gap(p, 4, 4, 2.0, 8, 50, g, 3), UsageError);
}

TEST_CASE("wave samples") {
  SpdeParams p;
  p.theta = 5;
  const auto w = sample_wave(p, 2.0, 50, default_front_grid(), 6, 4);
  REQUIRE(w.size() == 6);
  for (const auto& s : w) {
    CHECK(right_marker(s.profile).value() == 0.0);
    CHECK(s.profile.max_value() > 0.0);
    CHECK(s.source_time >= 0.0);
    CHECK(s.source_time <= 2.0);
  }
}

TEST_CASE("deterministic front speed") {
  GridSpec g;
  g.dx = 0.1;
  g.dt = 0.002;
  g.a = -5;
  g.b = 5;
  SpdeParams p;
  p.theta = 4;
  p.noise_amp = 0;
  const FrontSeries s = track_front(Bump{}, p, g, 20, 1.0, 50);
  CHECK(fitted_slope(s.times, s.level_marker, 10, 20) == doctest::Approx(4.0).epsilon(0.05));
}

TEST_CASE("ramp cap saturation and the near-infimum property") {
  const GridSpec g = default_front_grid();
  SpdeParams p;
  p.theta = 5;
  const SpeedEstimate c50 = estimate_B(p, 5.0, 40, 50, g, 1);
  const SpeedEstimate c100 = estimate_B(p, 5.0, 40, 100, g, 1);
  CHECK(std::abs(c50.mean_R0_over_T - c100.mean_R0_over_T) <
        2 * joint_std_error(c50.std_error, c100.std_error));

  const SpeedEstimate t2 = estimate_B(p, 2.0, 40, 50, g, 101);
  const SpeedEstimate t10 = estimate_B(p, 10.0, 40, 50, g, 201);
  CHECK(t10.mean_R0_over_T <= t2.mean_R0_over_T + 3 * joint_std_error(t2.std_error, t10.std_error));
}
