#include "kpplab/field.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

#include "kpplab/error.hpp"

namespace kpplab {

namespace {

constexpr double kAlignTol = 1e-6;

// Integer offset (in cells) of g's origin relative to f's origin.
long long aligned_offset(const Field& f, const Field& g) {
  if (std::abs(f.dx() - g.dx()) > 1e-12 * f.dx()) {
    throw UsageError("fields have different grid spacings (" + format_double(f.dx()) +
                     " vs " + format_double(g.dx()) + "); resample first");
  }
  const double k = (g.origin() - f.origin()) / f.dx();
  const double r = std::round(k);
  if (std::abs(k - r) > kAlignTol) {
    throw UsageError("fields live on different lattices (origin offset " +
                     format_double(k) + " cells)");
  }
  return static_cast<long long>(r);
}

double g_at(const Field& g, long long index) {
  if (index < 0 || index >= static_cast<long long>(g.size())) return 0.0;
  return g[static_cast<std::size_t>(index)];
}

}  // namespace

std::string format_double(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return "nan";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::string to_string(ExtendedReal v) { return format_double(v.value()); }

Field::Field(double origin, double dx, std::vector<double> values)
    : origin_(origin), dx_(dx), values_(std::move(values)) {
  if (!(dx_ > 0.0) || !std::isfinite(dx_)) throw UsageError("Field: dx must be > 0");
  if (!std::isfinite(origin_)) throw UsageError("Field: origin must be finite");
  for (std::size_t i = 0; i < values_.size(); ++i) {
    const double v = values_[i];
    if (!std::isfinite(v)) {
      throw UsageError("Field: non-finite value at index " + std::to_string(i));
    }
    if (v < 0.0) {
      throw UsageError("Field: negative value " + format_double(v) + " at index " +
                       std::to_string(i));
    }
  }
}

Field Field::zeros(double origin, double dx, std::size_t n) {
  return Field(origin, dx, std::vector<double>(n, 0.0));
}

double Field::interpolate(double x) const {
  if (values_.empty()) return 0.0;
  const double s = (x - origin_) / dx_;
  if (s < 0.0) return std::abs(s) < 1e-9 ? values_.front() : 0.0;
  const double last = static_cast<double>(values_.size() - 1);
  if (s > last) return std::abs(s - last) < 1e-9 ? values_.back() : 0.0;
  const auto i = static_cast<std::size_t>(std::floor(s));
  if (i + 1 >= values_.size()) return values_.back();
  const double w = s - static_cast<double>(i);
  return (1.0 - w) * values_[i] + w * values_[i + 1];
}

long long Field::lattice_offset() const { return std::llround(origin_ / dx_); }

bool Field::is_zero() const {
  return std::all_of(values_.begin(), values_.end(), [](double v) { return v == 0.0; });
}

double Field::max_value() const {
  return values_.empty() ? 0.0 : *std::max_element(values_.begin(), values_.end());
}

// ---------------------------------------------------------------------------

double heavyside_h0(double x) { return std::min(1.0, std::max(-x, 0.0)); }

double evaluate(const InitialCondition& ic, double x, double dx) {
  struct Visitor {
    double x;
    double dx;
    double operator()(const Heavyside& h) const { return h.eps * heavyside_h0(x - h.x0); }
    double operator()(const Bump& b) const { return std::max(0.0, 1.0 - std::abs(x - b.center)); }
    double operator()(const SplitHeavyside&) const {
      return heavyside_h0(x + 1.0) + heavyside_h0(-x - 1.0);
    }
    double operator()(const ZetaRamp& z) const {
      if (x >= 0.0) return 0.0;
      return std::min(z.cap, z.cap * (-x) / dx);
    }
    double operator()(const ZetaRampPlus& z) const {
      if (x < 0.0) return std::min(z.cap, z.cap * (-x) / dx);
      return z.psi.interpolate(x);
    }
    double operator()(const Custom& c) const { return c.field.interpolate(x); }
  };
  return std::visit(Visitor{x, dx}, ic);
}

Field render(const InitialCondition& ic, double a, double b, double dx) {
  require(a < b, "render: window must satisfy a < b");
  require(dx > 0.0, "render: dx must be > 0");
  const auto n = static_cast<std::size_t>(std::floor((b - a) / dx + 1e-9)) + 1;
  std::vector<double> v(n);
  for (std::size_t i = 0; i < n; ++i) {
    // Snap near-zero coordinates so the ramp/heaviside kinks land on grid points.
    double x = a + static_cast<double>(i) * dx;
    if (std::abs(x) < 1e-12 * dx) x = 0.0;
    v[i] = evaluate(ic, x, dx);
  }
  return Field(a, dx, std::move(v));
}

std::string describe(const InitialCondition& ic) {
  struct Visitor {
    std::string operator()(const Heavyside& h) const {
      return "heavyside(" + format_double(h.eps) + "," + format_double(h.x0) + ")";
    }
    std::string operator()(const Bump& b) const {
      return "bump(" + format_double(b.center) + ")";
    }
    std::string operator()(const SplitHeavyside&) const { return "split_heavyside"; }
    std::string operator()(const ZetaRamp& z) const {
      return "zeta_ramp(" + format_double(z.cap) + ")";
    }
    std::string operator()(const ZetaRampPlus& z) const {
      return "zeta_ramp_plus(" + format_double(z.cap) + ",custom)";
    }
    std::string operator()(const Custom&) const { return "custom"; }
  };
  return std::visit(Visitor{}, ic);
}

// ---------------------------------------------------------------------------

double pairing(const Field& f, const Field& g) {
  if (f.empty() || g.empty()) return 0.0;
  const long long off = aligned_offset(f, g);
  // Overlap in f's index space: [lo, hi].
  const long long lo = std::max<long long>(0, off);
  const long long hi =
      std::min<long long>(static_cast<long long>(f.size()) - 1,
                          off + static_cast<long long>(g.size()) - 1);
  if (hi <= lo) return 0.0;
  double sum = 0.0;
  for (long long i = lo; i <= hi; ++i) {
    const double w = (i == lo || i == hi) ? 0.5 : 1.0;
    sum += w * f[static_cast<std::size_t>(i)] * g_at(g, i - off);
  }
  return sum * f.dx();
}

double mass(const Field& f) {
  if (f.size() < 2) return 0.0;
  double sum = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) sum += f[i];
  sum -= 0.5 * (f[0] + f[f.size() - 1]);
  return sum * f.dx();
}

ExtendedReal right_marker(const Field& f) {
  for (std::size_t i = f.size(); i-- > 0;) {
    if (f[i] > 0.0) return f.x(i);
  }
  return ExtendedReal::minus_infinity();
}

ExtendedReal left_marker(const Field& f) {
  for (std::size_t i = 0; i < f.size(); ++i) {
    if (f[i] > 0.0) return f.x(i);
  }
  return ExtendedReal::plus_infinity();
}

bool in_class_H(const Field& f, double eps, double x0) {
  require(eps > 0.0, "in_class_H: eps must be > 0");
  for (std::size_t i = 0; i < f.size(); ++i) {
    double x = f.x(i);
    if (std::abs(x) < 1e-12 * f.dx()) x = 0.0;
    const double bound = eps * heavyside_h0(x - x0);
    if (f[i] < bound - 1e-12 * std::max(1.0, bound)) return false;
  }
  return true;
}

bool in_M(const Field& f, double d0, double m0) {
  require(d0 > 0.0 && d0 <= 0.5, "in_M: d0 must lie in (0, 1/2]");
  require(m0 > 0.0, "in_M: m0 must be > 0");
  const double tol = 1e-9 * f.dx();
  const long long n = static_cast<long long>(f.size());
  for (long long s = 0; s < n; ++s) {
    const double l0 = f.x(static_cast<std::size_t>(s));
    if (l0 < -0.5 - tol) continue;
    if (l0 + d0 > tol) break;
    bool ok = true;
    bool covered = false;
    for (long long j = s; j < n; ++j) {
      const double x = f.x(static_cast<std::size_t>(j));
      if (x > l0 + d0 + tol) break;
      covered = true;
      if (f[static_cast<std::size_t>(j)] < m0) {
        ok = false;
        break;
      }
    }
    // The interval must lie inside the window for the check to be meaningful.
    if (ok && covered && l0 + d0 <= f.right_edge() + tol) return true;
  }
  return false;
}

double lambda_norm(const Field& f, double lambda) {
  require(lambda > 0.0, "lambda_norm: lambda must be > 0");
  double best = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) {
    best = std::max(best, std::abs(f[i]) * std::exp(-lambda * std::abs(f.x(i))));
  }
  return best;
}

Field shift(const Field& f, double h) {
  const double k = h / f.dx();
  const double r = std::round(k);
  if (std::abs(k - r) > 1e-9 * std::max(1.0, std::abs(k))) {
    throw UsageError("shift: h = " + format_double(h) + " is not a multiple of dx = " +
                     format_double(f.dx()));
  }
  std::vector<double> v(f.values().begin(), f.values().end());
  return Field(f.origin() - r * f.dx(), f.dx(), std::move(v));
}

Field reflect(const Field& f) {
  std::vector<double> v(f.values().rbegin(), f.values().rend());
  const double origin = f.empty() ? -f.origin() : -f.right_edge();
  return Field(origin, f.dx(), std::move(v));
}

Field resize(const Field& f, double a, double b) {
  require(a <= b, "resize: window must satisfy a <= b");
  const long long first = std::llround((a - f.origin()) / f.dx());
  const long long last = std::llround((b - f.origin()) / f.dx());
  std::vector<double> v(static_cast<std::size_t>(last - first + 1));
  for (long long i = first; i <= last; ++i) v[static_cast<std::size_t>(i - first)] = g_at(f, i);
  return Field(f.origin() + static_cast<double>(first) * f.dx(), f.dx(), std::move(v));
}

Field subtract(const Field& f, const Field& g, bool clip) {
  const long long off = aligned_offset(f, g);
  std::vector<double> v(f.size());
  for (std::size_t i = 0; i < f.size(); ++i) {
    double d = f[i] - g_at(g, static_cast<long long>(i) - off);
    if (d < 0.0) {
      if (!clip) {
        throw UsageError("subtract: result negative at x = " + format_double(f.x(i)));
      }
      d = 0.0;
    }
    v[i] = d;
  }
  return Field(f.origin(), f.dx(), std::move(v));
}

Field add(const Field& f, const Field& g) {
  const long long off = aligned_offset(f, g);
  std::vector<double> v(f.size());
  for (std::size_t i = 0; i < f.size(); ++i) {
    v[i] = f[i] + g_at(g, static_cast<long long>(i) - off);
  }
  return Field(f.origin(), f.dx(), std::move(v));
}

Field scale(const Field& f, double c) {
  require(c >= 0.0, "scale: factor must be >= 0");
  std::vector<double> v(f.values().begin(), f.values().end());
  for (double& x : v) x *= c;
  return Field(f.origin(), f.dx(), std::move(v));
}

Field resample(const Field& f, double a, double b, double dx) {
  return render(Custom{f}, a, b, dx);
}

// ---------------------------------------------------------------------------

void write_snapshot(std::ostream& os, double t, const Field& f) {
  os << format_double(t) << ' ' << format_double(f.origin()) << ' ' << format_double(f.dx())
     << ' ' << f.size() << '\n';
  for (std::size_t i = 0; i < f.size(); ++i) {
    if (i) os << ' ';
    os << format_double(f[i]);
  }
  os << '\n';
}

Field read_snapshot(std::istream& is, double& t) {
  double x0 = 0.0;
  double dx = 0.0;
  std::size_t n = 0;
  if (!(is >> t >> x0 >> dx >> n)) throw UsageError("snapshot: malformed header");
  std::vector<double> v(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!(is >> v[i])) throw UsageError("snapshot: expected " + std::to_string(n) + " values");
  }
  return Field(x0, dx, std::move(v));
}

}  // namespace kpplab
