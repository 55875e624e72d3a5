#include <doctest.h>

#include <cmath>
#include <sstream>

#include "kpplab/duality.hpp"
#include "kpplab/fronts.hpp"

using namespace kpplab;

namespace {

GridSpec small_grid() {
  GridSpec g;
  g.a = -3;
  g.b = 3;
  return g;
}

}  // namespace

TEST_CASE("laplace term") {
  const Field f = render(Bump{}, -3, 3, 0.1);
  CHECK(laplace_term(f, f) == doctest::Approx(std::exp(-2 * pairing(f, f))));
  CHECK(laplace_term(f, scale(f, 0.0)) == 1.0);
}

TEST_CASE("self duality degenerate cases") {
  const GridSpec g = small_grid();
  const Field f = render_on_grid(Bump{}, g);
  SpdeParams p;
  p.theta = 2;

  const auto zero = self_duality_check(f, scale(f, 0.0), p, 0.5, {0.0, 0.5}, 20, g, 1);
  for (const auto& e : zero.estimates) CHECK(e.mean == 1.0);

  const auto t0 = self_duality_check(f, f, p, 0.0, {0.0}, 5, g, 1);
  CHECK(t0.estimates[0].mean == doctest::Approx(std::exp(-2 * pairing(f, f))));
  CHECK(t0.estimates[0].std_error == 0.0);
  CHECK(std::abs(t0.estimates[0].mean - std::exp(-4.0 / 3.0)) < 1e-2);
}

TEST_CASE("competition duality at T = 0") {
  const GridSpec g = small_grid();
  const Field f = render_on_grid(Bump{}, g);
  SpdeParams p;
  p.theta = 2;
  const auto r = competition_duality_check(f, f, Coefficient(1.0), p, 0.0, 10, g, 1);
  CHECK(r.lhs.mean == doctest::Approx(std::exp(-2 * pairing(f, f))));
  CHECK(r.rhs.mean == doctest::Approx(r.lhs.mean));
}

TEST_CASE("marker cdf far ahead of the front") {
  const GridSpec g = default_front_grid();
  SpdeParams p;
  p.theta = 5;
  const Field phi = render(Bump{}, -2, 2, g.dx);
  const auto r = marker_cdf_via_dual(phi, 30.0, 0.2, p, 20, 50, g, 1);
  CHECK(r.lhs.mean == 1.0);
  CHECK(r.rhs.mean == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("upper measure laplace identity with g = 0") {
  const GridSpec g = default_front_grid();
  SpdeParams p;
  p.theta = 5;
  const Field zero = Field::zeros(0.5, g.dx, 36);
  const auto r = upper_measure_laplace_check(zero, p, 0.5, 20, 50, g, 1);
  CHECK(r.lhs.mean == 1.0);
  CHECK(r.rhs.mean == 1.0);
}

TEST_CASE("duality csv row") {
  const DualityReport r = make_report("self", "theta=2", Estimate{0.5, 0.01, 100}, Estimate{0.52, 0.01, 100});
  CHECK(r.z_score == doctest::Approx(0.02 / std::sqrt(2e-4)));
  std::ostringstream os;
  write_duality_header(os);
  write_duality_row(os, r);
  CHECK(os.str().rfind("identity,parameters", 0) == 0);
}
