#include <doctest.h>

#include <cmath>
#include <vector>

#include "kpplab/error.hpp"
#include "kpplab/noise.hpp"
#include "kpplab/spde.hpp"
#include "kpplab/stats.hpp"

using namespace kpplab;

TEST_CASE("white noise moments") {
  const double dt = 0.002, dx = 0.1;
  const std::size_t n = 1'000'000;
  const auto w = white_noise_increment(NoiseStream{42, 3, 0}, 7, -500, n, dt, dx);
  double s = 0, s2 = 0;
  for (double v : w) {
    s += v;
    s2 += v * v;
  }
  const double mean = s / n;
  const double var = s2 / n - mean * mean;
  CHECK(std::abs(mean) < 4 * std::sqrt(dt / dx / n));
  CHECK(var == doctest::Approx(dt / dx).epsilon(0.01));

  const auto again = white_noise_increment(NoiseStream{42, 3, 0}, 7, -500, n, dt, dx);
  CHECK(again == w);
  const auto other = white_noise_increment(NoiseStream{42, 4, 0}, 7, -500, 16, dt, dx);
  CHECK(other != std::vector<double>(w.begin(), w.begin() + 16));
  // a cell's value depends on its absolute index only
  const auto tail = white_noise_increment(NoiseStream{42, 3, 0}, 7, -400, 16, dt, dx);
  CHECK(tail == std::vector<double>(w.begin() + 100, w.begin() + 116));
}

TEST_CASE("feller transition moments") {
  // X' has mean x and variance x·c_dt
  for (double x : {0.05, 0.5, 3.0}) {
    const double c = 0.02;
    const std::size_t m = 200'000;
    double s = 0, s2 = 0;
    std::size_t zeros = 0;
    for (std::size_t k = 0; k < m; ++k) {
      const double v = feller_transition(x, c, 0x9e3779b97f4a7c15ULL * (k + 1));
      CHECK_FALSE(v < 0.0);
      zeros += v == 0.0;
      s += v;
      s2 += v * v;
    }
    const double mean = s / m;
    const double var = s2 / m - mean * mean;
    INFO("x = " << x);
    CHECK(std::abs(mean - x) < 4 * std::sqrt(x * c / m));
    CHECK(var == doctest::Approx(x * c).epsilon(0.03));
    const double p0 = std::exp(-2 * x / c);
    CHECK(std::abs(static_cast<double>(zeros) / m - p0) < 4 * std::sqrt(p0 * (1 - p0) / m) + 1e-9);
  }
  CHECK(feller_transition(0.0, 0.1, 5) == 0.0);
}

TEST_CASE("stats helpers") {
  const std::vector<double> xs{1, 2, 3, 4};
  const Estimate e = estimate_mean(xs);
  CHECK(e.mean == 2.5);
  CHECK(e.std_error == doctest::Approx(std::sqrt(5.0 / 3.0 / 4.0)));
  CHECK(joint_std_error(3, 4) == 5);
  CHECK(ks_two_sample({1, 2, 3}, {1, 2, 3}).statistic == 0.0);
  CHECK(ks_two_sample({1, 2, 3}, {10, 11, 12}).statistic == 1.0);
  CHECK(kolmogorov_tail(0.0) == doctest::Approx(1.0));
  CHECK(kolmogorov_tail(1.36) == doctest::Approx(0.049).epsilon(0.05));

  // replica results do not depend on the number of workers
  auto body = [](std::size_t r) { return standard_normal(NoiseStream{replica_seed(9, r)}, 0, 0); };
  CHECK(run_replicas<double>(50, 1, body) == run_replicas<double>(50, 4, body));
}

TEST_CASE("step examples") {
  GridSpec g;
  g.dx = 0.1;
  g.dt = 0.002;
  g.moving = false;
  const std::vector<double> dw(41, 0.0);

  SpdeParams p;
  const Field zero = Field::zeros(-2, 0.1, 41);
  CHECK(step(zero, p, g, dw).is_zero());

  SpdeParams det;
  det.noise_amp = 0;
  det.theta = 3;
  GridSpec g2 = g;
  g2.dt = 0.001;
  // interior cells of a constant field see no Laplacian
  const Field two(-2, 0.1, std::vector<double>(41, 2.0));
  const Field s2 = step(two, det, g2, dw);
  CHECK(s2[20] == doctest::Approx(2.0 + 0.001 * 2 * (3 - 2)));
  const Field three(-2, 0.1, std::vector<double>(41, 3.0));
  CHECK(step(three, det, g2, dw)[20] == doctest::Approx(3.0));
}

TEST_CASE("simulate") {
  GridSpec g;
  g.a = -3;
  g.b = 3;
  SpdeParams p;
  p.theta = 2;
  const Trajectory z = simulate(Field::zeros(-3, 0.1, 61), p, g, 1.0, NoiseStream{1});
  CHECK(z.extinction_time == ExtendedReal(0.0));
  CHECK(z.final_field.is_zero());

  const Trajectory a = simulate(Bump{}, p, g, 0.5, NoiseStream{5});
  const Trajectory b = simulate(Bump{}, p, g, 0.5, NoiseStream{5});
  CHECK(a.final_field == b.final_field);
  CHECK(a.right_marker == b.right_marker);
  const Trajectory c = simulate(Bump{}, p, g, 0.5, NoiseStream{6});
  CHECK_FALSE(a.final_field == c.final_field);
  for (double v : a.final_field.values()) CHECK(v >= 0.0);

  CHECK_THROWS_AS(extinction_probability(Bump{}, p, g, 1.0, 0, 1), UsageError);
  GridSpec bad = g;
  bad.dt = 0.01;
  CHECK_THROWS_AS(bad.validate(), UsageError);
}

TEST_CASE("expected mass grows like exp(theta t)") {
  // no γ term, so E⟨u_t,1⟩ = e^{θt}⟨u_0,1⟩ up to boundary loss
  GridSpec g;
  g.a = -6;
  g.b = 6;
  g.moving = false;
  SpdeParams p;
  p.theta = 1;
  p.gamma = 0.0;
  const double T = 0.5;
  const auto masses = run_replicas<double>(2000, 0, [&](std::size_t r) {
    return mass(simulate(Bump{}, p, g, T, NoiseStream{replica_seed(11, r)}, final_only()).final_field);
  });
  const Estimate e = estimate_mean(masses);
  CHECK(std::abs(e.mean - std::exp(T)) < 4 * e.std_error);
}

TEST_CASE("extinction probability") {
  GridSpec g;
  g.a = -3;
  g.b = 3;
  SpdeParams low;
  low.theta = 0.1;
  CHECK(extinction_probability(Bump{}, low, g, 10, 60, 1).mean >= 0.9);
}

TEST_CASE("deterministic front is second order in dx") {
  SpdeParams p;
  p.theta = 4;
  p.noise_amp = 0;
  std::vector<Field> fs;
  for (double dx : {0.2, 0.1, 0.05}) {
    GridSpec g;
    g.dx = dx;
    g.dt = 0.2 * dx * dx;
    g.a = -10;
    g.b = 10;
    g.moving = false;
    fs.push_back(simulate(Bump{}, p, g, 1.0, NoiseStream{}, final_only()).final_field);
  }
  double e[2] = {0, 0};
  for (int k = 0; k < 2; ++k) {
    for (std::size_t i = 0; i < fs[0].size(); ++i) {
      const double x = fs[0].x(i);
      e[k] = std::max(e[k], std::abs(fs[k].interpolate(x) - fs[k + 1].interpolate(x)));
    }
  }
  CHECK(e[0] / e[1] == doctest::Approx(4.0).epsilon(0.1));
}

TEST_CASE("translation equivariance") {
  GridSpec g;
  g.a = -3;
  g.b = 3;
  SpdeParams p;
  p.theta = 2;
  const Field u0 = render_on_grid(Bump{}, g);
  const Field moved = shift(u0, -1.0);  // x ↦ u0(x − 1), ten cells to the right
  const Trajectory a = simulate(u0, p, g, 0.5, NoiseStream{3, 0, 0});
  const Trajectory b = simulate(moved, p, g, 0.5, NoiseStream{3, 0, -10});
  REQUIRE(a.final_field.size() == b.final_field.size());
  CHECK(b.final_field.origin() == doctest::Approx(a.final_field.origin() + 1.0));
  for (std::size_t i = 0; i < a.final_field.size(); ++i) CHECK(a.final_field[i] == b.final_field[i]);
}

TEST_CASE("deterministic heat plus growth keeps e^{theta t} mass") {
  GridSpec g;
  g.a = -8;
  g.b = 8;
  g.moving = false;
  SpdeParams p;
  p.theta = 1;
  p.gamma = 0.0;
  p.noise_amp = 0;
  const Trajectory t = simulate(Bump{}, p, g, 1.0, NoiseStream{}, final_only());
  CHECK(mass(t.final_field) == doctest::Approx(std::exp(1.0)).epsilon(0.01));
}

TEST_CASE("the ramp solution does not die out") {
  SpdeParams p;
  p.theta = 10;
  GridSpec g;
  g.a = -15;
  g.b = 5;
  g.max_trail = 15;
  CHECK(extinction_probability(ZetaRamp{50}, p, g, 10, 3, 1).mean == 0.0);
}

TEST_CASE("window extends left up to the trail cut") {
  GridSpec g;
  g.dx = 0.2;
  g.dt = 0.008;
  g.max_trail = 15;
  const double origin = 0.4, right_x = 2.8;
  const WindowChange c = plan_window(g, 20, 3, 10, origin, right_x);
  CHECK(c.prepend > 0);
  CHECK(c.prepend < g.left_pad);
  const double new_origin = origin - static_cast<double>(c.prepend) * g.dx;
  CHECK(new_origin >= right_x - g.max_trail - 1e-9);
  CHECK(plan_window(g, 20 + c.prepend, 3 + c.prepend, 10 + c.prepend, new_origin, right_x).trim_front == 0);

  // compact data on a trailing grid spreads left past its initial window
  GridSpec w = g;
  w.a = 0.5;
  w.b = 3.5;
  SpdeParams p;
  p.theta = 5;
  const Trajectory t = simulate(Bump{2.0}, p, w, 1.0, NoiseStream{1, 1}, final_only());
  CHECK(left_marker(t.final_field) < ExtendedReal(0.0));
}
