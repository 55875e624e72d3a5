#pragma once

// Grid samples of nonnegative functions on a finite window of the real line,
// the initial conditions used throughout the lab, and the functionals
// (markers, pairings, norms) evaluated on them.

#include <compare>
#include <cstddef>
#include <iosfwd>
#include <limits>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace kpplab {

/// A real number or one of the two infinities. Markers of the zero field
/// are infinite: right_marker gives -inf, left_marker gives +inf.
class ExtendedReal {
 public:
  constexpr ExtendedReal() = default;
  constexpr ExtendedReal(double v) : value_(v) {}  // NOLINT: implicit by design of the type

  static constexpr ExtendedReal minus_infinity() {
    return ExtendedReal(-std::numeric_limits<double>::infinity());
  }
  static constexpr ExtendedReal plus_infinity() {
    return ExtendedReal(std::numeric_limits<double>::infinity());
  }

  constexpr double value() const { return value_; }
  constexpr bool is_finite() const {
    return value_ > -std::numeric_limits<double>::infinity() &&
           value_ < std::numeric_limits<double>::infinity();
  }
  constexpr bool is_minus_infinity() const {
    return value_ == -std::numeric_limits<double>::infinity();
  }
  constexpr bool is_plus_infinity() const {
    return value_ == std::numeric_limits<double>::infinity();
  }

  friend constexpr auto operator<=>(ExtendedReal a, ExtendedReal b) {
    return a.value_ <=> b.value_;
  }
  friend constexpr bool operator==(ExtendedReal a, ExtendedReal b) = default;

 private:
  double value_ = 0.0;
};

std::string to_string(ExtendedReal v);

/// Uniform-grid sample x0 + i*dx, i = 0..n-1, of a nonnegative finite function.
/// Construction validates nonnegativity and finiteness.
class Field {
 public:
  Field() = default;
  Field(double origin, double dx, std::vector<double> values);

  static Field zeros(double origin, double dx, std::size_t n);

  double origin() const { return origin_; }
  double dx() const { return dx_; }
  std::size_t size() const { return values_.size(); }
  bool empty() const { return values_.empty(); }

  double x(std::size_t i) const { return origin_ + static_cast<double>(i) * dx_; }
  double right_edge() const { return x(size() - 1); }

  double operator[](std::size_t i) const { return values_[i]; }
  std::span<const double> values() const { return values_; }

  /// Linear interpolation between grid points, zero outside the window.
  double interpolate(double x) const;

  /// Index of the lattice dx*Z containing x0, i.e. round(x0/dx).
  long long lattice_offset() const;

  bool is_zero() const;
  double max_value() const;

  friend bool operator==(const Field&, const Field&) = default;

 private:
  double origin_ = 0.0;
  double dx_ = 1.0;
  std::vector<double> values_;
};

// ---------------------------------------------------------------------------
// Initial conditions

/// eps * H0(x - x0) with H0(x) = 1 ∧ (−x ∨ 0).
struct Heavyside {
  double eps = 1.0;
  double x0 = 0.0;
};
/// 0 ∨ (1 − |x − center|).
struct Bump {
  double center = 0.0;
};
/// H0(x + 1) + H0(−x − 1).
struct SplitHeavyside {};
/// min(N, N·(−x)/dx) for x < 0, 0 for x >= 0; approximates +inf on the
/// negative half-line from below, monotone in N.
struct ZetaRamp {
  double cap = 50.0;
};
/// ZetaRamp(N) on x < 0 plus psi on x >= 0.
struct ZetaRampPlus {
  double cap = 50.0;
  Field psi;
};
struct Custom {
  Field field;
};

using InitialCondition =
    std::variant<Heavyside, Bump, SplitHeavyside, ZetaRamp, ZetaRampPlus, Custom>;

inline constexpr double kDefaultRampCap = 50.0;

/// Heaviside-type function H0(x) = 1 ∧ (−x ∨ 0).
double heavyside_h0(double x);

/// Evaluate ic at x on a grid of spacing dx (the ramp width of ZetaRamp).
double evaluate(const InitialCondition& ic, double x, double dx);

/// Pointwise sample of ic on the grid a, a+dx, ... <= b.
Field render(const InitialCondition& ic, double a, double b, double dx);

std::string describe(const InitialCondition& ic);

// ---------------------------------------------------------------------------
// Functionals

/// Trapezoidal ∫ f g dx over the overlap of the two windows; 0 if disjoint.
/// Throws UsageError on different dx or misaligned lattices.
double pairing(const Field& f, const Field& g);

/// ∫ f dx (trapezoid).
double mass(const Field& f);

/// Coordinate of the rightmost strictly positive cell; -inf for the zero field.
ExtendedReal right_marker(const Field& f);
/// Coordinate of the leftmost strictly positive cell; +inf for the zero field.
ExtendedReal left_marker(const Field& f);

/// True iff f(x) >= eps·H0(x − x0) at every grid point of f.
bool in_class_H(const Field& f, double eps, double x0);

/// True iff some [l0, l0 + d0] inside [−1/2, 0] (l0 on the grid) has every
/// cell >= m0.
bool in_M(const Field& f, double d0, double m0);

/// max_i |f_i| e^{−λ|x_i|}.
double lambda_norm(const Field& f, double lambda);

/// x ↦ f(x + h). h must be an integer multiple of dx.
Field shift(const Field& f, double h);

/// x ↦ f(−x).
Field reflect(const Field& f);

/// Same values, restricted or zero-extended to the window [a, b] of the
/// same lattice.
Field resize(const Field& f, double a, double b);

/// Pointwise f − g on f's window; negative parts are an error unless clip.
Field subtract(const Field& f, const Field& g, bool clip = false);
Field add(const Field& f, const Field& g);
Field scale(const Field& f, double c);

/// Linear resampling onto a new grid.
Field resample(const Field& f, double a, double b, double dx);

// ---------------------------------------------------------------------------
// Snapshot text format: "t x0 dx n" header line, then n values.

void write_snapshot(std::ostream& os, double t, const Field& f);
/// Returns the snapshot time through t.
Field read_snapshot(std::istream& is, double& t);

/// Shortest round-trip decimal representation.
std::string format_double(double v);

}  // namespace kpplab
