#include <doctest.h>

#include <cmath>
#include <sstream>

#include "kpplab/error.hpp"
#include "kpplab/field.hpp"

using namespace kpplab;

namespace {

Field indicator(double lo, double hi, double a, double b, double dx) {
  Field z = render(Bump{}, a, b, dx);
  std::vector<double> v(z.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double x = z.x(i);
    v[i] = (x >= lo - 1e-12 && x <= hi + 1e-12) ? 1.0 : 0.0;
  }
  return Field(a, dx, v);
}

}  // namespace

TEST_CASE("pairing") {
  const double dx = 0.01;
  const Field one = indicator(0, 1, -2, 2, dx);
  CHECK(pairing(Field::zeros(-2, dx, one.size()), one) == 0.0);
  CHECK(pairing(one, one) == doctest::Approx(1.0).epsilon(2 * dx));

  const Field h0 = render(Heavyside{}, -2, 2, dx);
  const Field ind = indicator(-1, 0, -2, 2, dx);
  CHECK(pairing(h0, ind) == doctest::Approx(0.5).epsilon(2 * dx));

  // symmetric and bilinear
  const Field b = render(Bump{0.3}, -2, 2, dx);
  CHECK(pairing(h0, b) == pairing(b, h0));
  CHECK(pairing(add(h0, b), b) == doctest::Approx(pairing(h0, b) + pairing(b, b)).epsilon(1e-12));
  CHECK(pairing(scale(h0, 3.0), b) == doctest::Approx(3.0 * pairing(h0, b)).epsilon(1e-12));

  CHECK_THROWS_AS(pairing(h0, render(Bump{}, -2, 2, 0.02)), UsageError);
  // disjoint windows pair to zero
  CHECK(pairing(render(Bump{}, -2, 2, dx), render(Bump{10}, 8, 12, dx)) == 0.0);
}

TEST_CASE("markers") {
  const Field zero = Field::zeros(0, 1, 6);
  CHECK(right_marker(zero).is_minus_infinity());
  CHECK(left_marker(zero).is_plus_infinity());

  const Field h0 = render(Heavyside{}, -2, 2, 0.5);
  CHECK(right_marker(h0).value() == -0.5);

  CHECK(right_marker(Field(0, 1, {0, 0, 0.2, 0, 0.5, 0})).value() == 4.0);
  CHECK(left_marker(Field(0, 1, {0, 0.2, 0, 0.5})).value() == 1.0);

  // domination
  const Field f = render(Bump{}, -3, 3, 0.1);
  const Field g = add(f, render(Bump{1.5}, -3, 3, 0.1));
  CHECK(right_marker(f) <= right_marker(g));
  CHECK(left_marker(f) >= left_marker(g));
}

TEST_CASE("render") {
  const Heavyside h{1.0, 0.0};
  CHECK(evaluate(h, -2.0, 0.1) == 1.0);
  CHECK(evaluate(h, -0.25, 0.1) == doctest::Approx(0.25));
  CHECK(evaluate(h, 1.0, 0.1) == 0.0);
  CHECK(evaluate(Bump{}, 0.0, 0.1) == 1.0);
  CHECK(evaluate(Bump{}, 1.0, 0.1) == 0.0);
  CHECK(evaluate(Bump{}, -1.5, 0.1) == 0.0);

  const Field z25 = render(ZetaRamp{25}, -10, 2, 0.1);
  const Field z50 = render(ZetaRamp{50}, -10, 2, 0.1);
  for (std::size_t i = 0; i < z25.size(); ++i) CHECK(z25[i] <= z50[i]);

  const Field hf = render(Heavyside{0.5, -1.0}, -4, 4, 0.1);
  CHECK(in_class_H(hf, 0.5, -1.0));
}

TEST_CASE("class H and M") {
  const Field h = render(Heavyside{}, -4, 4, 0.05);
  CHECK(in_class_H(h, 1.0, 0.0));
  CHECK_FALSE(in_class_H(h, 2.0, 0.0));
  CHECK(in_class_H(h, 0.5, -1.0));

  const double m0 = 0.7;
  std::vector<double> v(41, m0);
  CHECK(in_M(Field(-1, 0.05, v), 0.25, m0));
  CHECK_FALSE(in_M(Field::zeros(-1, 0.05, 41), 0.25, m0));
  CHECK(in_M(render(Bump{-0.25}, -3, 3, 0.05), 0.2, 0.5));
}

TEST_CASE("lambda norm") {
  CHECK(lambda_norm(Field::zeros(-1, 0.1, 21), 1.0) == 0.0);
  std::vector<double> ones(21, 1.0);
  CHECK(lambda_norm(Field(-1, 0.1, ones), 1.0) == doctest::Approx(1.0));
  std::vector<double> spike(21, 0.0);
  spike[20] = 2.0;  // x = 1
  CHECK(lambda_norm(Field(-1, 0.1, spike), 0.5) == doctest::Approx(2.0 * std::exp(-0.5)));
}

TEST_CASE("shift") {
  const Field f = render(Bump{0.4}, -3, 3, 0.1);
  CHECK(shift(f, 0.0) == f);
  CHECK(right_marker(shift(f, 0.7)).value() ==
        doctest::Approx(right_marker(f).value() - 0.7).epsilon(1e-12));
  const Field ab = shift(shift(f, 0.3), 0.5);
  const Field c = shift(f, 0.8);
  REQUIRE(ab.size() == c.size());
  CHECK(ab.origin() == doctest::Approx(c.origin()));
  for (std::size_t i = 0; i < c.size(); ++i) CHECK(ab[i] == c[i]);
  CHECK_THROWS_AS(shift(f, 0.05), UsageError);

  const Field g = render(Bump{-0.5}, -3, 3, 0.1);
  CHECK(pairing(shift(f, 1.0), shift(g, 1.0)) == doctest::Approx(pairing(f, g)).epsilon(1e-12));
  const Field back = shift(shift(f, 1.2), -1.2);
  for (std::size_t i = 0; i < f.size(); ++i) CHECK(back[i] == f[i]);
}

TEST_CASE("snapshot round trip") {
  const Field f = render(Bump{0.4}, -3, 3, 0.1);
  std::stringstream ss;
  write_snapshot(ss, 1.25, f);
  double t = 0;
  const Field g = read_snapshot(ss, t);
  CHECK(t == 1.25);
  CHECK(g == f);
}
