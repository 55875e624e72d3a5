#include <doctest.h>

#include <cmath>
#include <sstream>

#include "kpplab/error.hpp"
#include "kpplab/particle.hpp"

using namespace kpplab;

namespace {

Field constant(double a, double b, double dx, double v) {
  const auto n = static_cast<std::size_t>(std::llround((b - a) / dx)) + 1;
  return Field(a, dx, std::vector<double>(n, v));
}

double sup_error(const Field& f0, int n) {
  ParticleConfig cfg;
  cfg.n = n;
  const Field d = approx_density(init_particles(f0, cfg), -1.5, 1.5, f0.dx());
  double e = 0;
  for (std::size_t i = 0; i < d.size(); ++i) e = std::max(e, std::abs(d[i] - f0.interpolate(d.x(i))));
  return e;
}

}  // namespace

TEST_CASE("neighborhoods") {
  CHECK(neighbor_count(4, 1.0) == 16);
  CHECK(neighbor_count(16, 1.0) == 128);
  double s = 0;
  for (long long k = -10; k <= 10; ++k) s += neighbor_weight(k, 16);
  CHECK(s == 16.0);
  CHECK(neighbor_weight(8, 16) == 0.5);
  CHECK(neighbor_weight(9, 16) == 0.0);
}

TEST_CASE("init_particles") {
  ParticleConfig cfg;
  cfg.n = 4;
  CHECK(init_particles(constant(-1, 1, 0.0625, 0.0), cfg).count() == 0);

  const ParticleState xi = init_particles(constant(-1, 1, 0.0625, 1.0), cfg);
  REQUIRE(xi.count() > 0);
  // every block of 16 sites has its first 5 occupied
  for (long long site = xi.lo(); site <= xi.hi(); ++site) {
    const long long r = ((site % 16) + 16) % 16;
    CHECK(xi.occupied(site) == (r < 5));
  }
}

TEST_CASE("approx_density") {
  ParticleConfig cfg;
  cfg.n = 4;
  const ParticleState empty(4, 1.0, 0, std::vector<std::uint8_t>(64, 0));
  CHECK(approx_density(empty, -1, 1, 0.25).is_zero());

  const ParticleState full(4, 1.0, -160, std::vector<std::uint8_t>(321, 1));
  const Field d = approx_density(full, -2, 2, 0.25);
  for (std::size_t i = 0; i < d.size(); ++i) CHECK(d[i] == doctest::Approx(4.0));

  CHECK(density_right_marker(empty).is_minus_infinity());
}

TEST_CASE("initial round trip error shrinks like n^-1/2") {
  const Field f0 = render(Bump{}, -2, 2, 1.0 / 256);
  double prev = 1e9;
  for (int n : {16, 64, 256}) {
    const double e = sup_error(f0, n);
    // slope times the neighborhood half-width, the floor, and one site of
    // lattice offset from sampling at the nearest site
    const double bound = 1.5 / std::sqrt(n) + std::pow(n, -1.5);
    INFO("n = " << n);
    CHECK(e <= bound + 1e-12);
    CHECK(e < prev);
    prev = e;
  }
}

TEST_CASE("event rates") {
  ParticleConfig cfg;
  cfg.n = 16;
  CHECK(total_event_rate(10, cfg, 2.0) == doctest::Approx(10 * 16 + 10 * (16 + 2.0)));
  cfg.death_rate = 3.0;
  CHECK(total_event_rate(10, cfg, 2.0) == doctest::Approx(10 * 3.0 + 10 * (16 + 2.0)));
}

TEST_CASE("dynamics") {
  ParticleConfig cfg;
  cfg.n = 16;
  const ParticleState empty(16, 1.0, 0, std::vector<std::uint8_t>(64, 0));
  const auto e = simulate_particles(empty, 2.0, cfg, 1.0, 3);
  CHECK(e.events == 0);
  CHECK(e.final_states[0].count() == 0);

  const ParticleState xi0 = init_particles(render(Bump{}, -1.5, 1.5, 0.05), cfg);
  const auto a = simulate_particles(xi0, 2.0, cfg, 0.3, 3);
  const auto b = simulate_particles(xi0, 2.0, cfg, 0.3, 3);
  CHECK(a.events > 0);
  CHECK(a.final_states[0].occupancy() == b.final_states[0].occupancy());
  CHECK(a.right_marker == b.right_marker);
}

TEST_CASE("theta star coupling keeps the systems nested") {
  ParticleConfig cfg;
  cfg.n = 16;
  const ParticleState xi0 = init_particles(render(Bump{}, -1.5, 1.5, 0.05), cfg);
  CHECK_THROWS_AS(couple_theta_star_particles(xi0, {2.0, 2.0}, cfg, 0.1, 1), UsageError);
  CHECK_THROWS_AS(couple_theta_star_particles(xi0, {3.0, 2.0}, cfg, 0.1, 1), UsageError);

  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto r = couple_theta_star_particles(xi0, {2.0, 4.0}, cfg, 0.5, seed);
    CHECK(r.nested_checks > 0);
    CHECK(r.nested_violations == 0);
    CHECK(r.final_states[0].subset_of(r.final_states[1]));
    for (std::size_t k = 0; k < r.times.size(); ++k) CHECK(r.right_marker[0][k] <= r.right_marker[1][k]);
  }
}

TEST_CASE("occupancy files round trip") {
  ParticleConfig cfg;
  cfg.n = 8;
  const ParticleState xi = init_particles(render(Bump{}, -1.5, 1.5, 0.05), cfg);
  std::stringstream ss;
  write_occupancy(ss, 0.25, xi);
  double t = 0;
  const ParticleState back = read_occupancy(ss, t);
  CHECK(t == 0.25);
  CHECK(back.lo() == xi.lo());
  CHECK(back.occupancy() == xi.occupancy());
}
