#include "kpplab/particle.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <random>
#include <sstream>

#include "kpplab/error.hpp"
#include "kpplab/noise.hpp"

namespace kpplab {

void ParticleConfig::validate() const {
  require(n >= 1, "particle: n must be >= 1");
  require(c1 > 0.0 && std::isfinite(c1), "particle: c1 must be > 0");
  require(neighbor_count(n, c1) >= 1, "particle: neighborhood is empty");
  require(std::isfinite(death_rate), "particle: death rate must be finite");
  require(max_events > 0, "particle: event budget must be > 0");
}

long long neighbor_count(int n, double c1) {
  return std::llround(2.0 * c1 * std::pow(static_cast<double>(n), 1.5));
}

double neighbor_weight(long long offset, long long count) {
  const long long a = offset < 0 ? -offset : offset;
  if (count % 2 == 1) return a <= (count - 1) / 2 ? 1.0 : 0.0;
  if (a < count / 2) return 1.0;
  return a == count / 2 ? 0.5 : 0.0;
}

// ---------------------------------------------------------------------------

ParticleState::ParticleState(int n, double c1, long long lo, std::vector<std::uint8_t> occupancy)
    : n_(n), c1_(c1), lo_(lo), occ_(std::move(occupancy)) {
  for (auto& b : occ_) {
    require(b <= 1, "particle state: occupancy must be 0/1");
    count_ += b;
  }
}

bool ParticleState::occupied(long long site) const {
  if (site < lo_ || site > hi()) return false;
  return occ_[static_cast<std::size_t>(site - lo_)] != 0;
}

double ParticleState::position(long long site) const {
  return static_cast<double>(site) / (static_cast<double>(n_) * static_cast<double>(n_));
}

std::vector<long long> ParticleState::sites() const {
  std::vector<long long> out;
  out.reserve(count_);
  for (std::size_t i = 0; i < occ_.size(); ++i) {
    if (occ_[i]) out.push_back(lo_ + static_cast<long long>(i));
  }
  return out;
}

long long ParticleState::max_site() const {
  for (std::size_t i = occ_.size(); i-- > 0;) {
    if (occ_[i]) return lo_ + static_cast<long long>(i);
  }
  throw UsageError("particle state is empty");
}

long long ParticleState::min_site() const {
  for (std::size_t i = 0; i < occ_.size(); ++i) {
    if (occ_[i]) return lo_ + static_cast<long long>(i);
  }
  throw UsageError("particle state is empty");
}

bool ParticleState::subset_of(const ParticleState& other) const {
  for (std::size_t i = 0; i < occ_.size(); ++i) {
    if (occ_[i] && !other.occupied(lo_ + static_cast<long long>(i))) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------

ParticleState init_particles(const Field& f0, const ParticleConfig& cfg) {
  cfg.validate();
  const long long N = neighbor_count(cfg.n, cfg.c1);
  const double n2 = static_cast<double>(cfg.n) * static_cast<double>(cfg.n);
  const double per_block = 2.0 * cfg.c1 * std::sqrt(static_cast<double>(cfg.n));
  const double block_len = static_cast<double>(N) / n2;
  const long long k_lo = static_cast<long long>(std::floor(f0.origin() / block_len));
  const long long k_hi = static_cast<long long>(std::ceil(f0.right_edge() / block_len));
  const long long lo = k_lo * N;
  std::vector<std::uint8_t> occ(static_cast<std::size_t>((k_hi - k_lo + 1) * N), 0);
  for (long long k = k_lo; k <= k_hi; ++k) {
    const double x = static_cast<double>(k * N) / n2;
    const double m = std::floor(per_block * f0.interpolate(x));
    if (m < 1.0) continue;
    const long long fill = std::min<long long>(static_cast<long long>(m) + 1, N);
    const std::size_t start = static_cast<std::size_t>(k * N - lo);
    std::fill_n(occ.begin() + static_cast<std::ptrdiff_t>(start), fill, 1);
  }
  return ParticleState(cfg.n, cfg.c1, lo, std::move(occ));
}

namespace {

double density_at(const ParticleState& xi, const std::vector<long long>& prefix, long long N,
                  double scale, long long z) {
  // prefix[i] = occupied count of sites lo .. lo + i − 1.
  const long long lo = xi.lo();
  const long long size = static_cast<long long>(xi.occupancy().size());
  auto count_upto = [&](long long site) {  // sites < site
    const long long i = std::clamp<long long>(site - lo, 0, size);
    return prefix[static_cast<std::size_t>(i)];
  };
  double total = 0.0;
  if (N % 2 == 1) {
    const long long h = (N - 1) / 2;
    total = static_cast<double>(count_upto(z + h + 1) - count_upto(z - h));
  } else {
    const long long h = N / 2;
    total = static_cast<double>(count_upto(z + h) - count_upto(z - h + 1)) +
            0.5 * ((xi.occupied(z - h) ? 1.0 : 0.0) + (xi.occupied(z + h) ? 1.0 : 0.0));
  }
  return total * scale;
}

std::vector<long long> prefix_counts(const ParticleState& xi) {
  const auto& occ = xi.occupancy();
  std::vector<long long> prefix(occ.size() + 1, 0);
  for (std::size_t i = 0; i < occ.size(); ++i) prefix[i + 1] = prefix[i] + occ[i];
  return prefix;
}

}  // namespace

Field approx_density(const ParticleState& xi, double a, double b, double dx) {
  require(dx > 0.0 && a <= b, "approx_density: need dx > 0 and a <= b");
  const long long N = neighbor_count(xi.n(), xi.c1());
  const double n2 = static_cast<double>(xi.n()) * static_cast<double>(xi.n());
  const double scale = 1.0 / (2.0 * xi.c1() * std::sqrt(static_cast<double>(xi.n())));
  const auto prefix = prefix_counts(xi);
  const std::size_t cells = static_cast<std::size_t>(std::floor((b - a) / dx + 1e-9)) + 1;
  std::vector<double> v(std::max<std::size_t>(cells, 2));
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double x = a + static_cast<double>(i) * dx;
    v[i] = xi.count() ? density_at(xi, prefix, N, scale, std::llround(x * n2)) : 0.0;
  }
  return Field(a, dx, std::move(v));
}

Field approx_density(const ParticleState& xi, double dx) {
  if (xi.count() == 0) return Field::zeros(0.0, dx, 2);
  const long long N = neighbor_count(xi.n(), xi.c1());
  const double n2 = static_cast<double>(xi.n()) * static_cast<double>(xi.n());
  const double left = static_cast<double>(xi.min_site() - N / 2 - 1) / n2;
  const double right = static_cast<double>(xi.max_site() + N / 2 + 1) / n2;
  const double a = std::floor(left / dx) * dx;
  const long long cells = static_cast<long long>(std::ceil(right / dx) - std::floor(left / dx)) + 1;
  return approx_density(xi, a, a + static_cast<double>(cells - 1) * dx, dx);
}

ExtendedReal density_right_marker(const ParticleState& xi) {
  if (xi.count() == 0) return ExtendedReal::minus_infinity();
  const long long N = neighbor_count(xi.n(), xi.c1());
  return xi.position(xi.max_site() + N / 2);
}

double total_event_rate(std::size_t occupied, const ParticleConfig& cfg, double theta) {
  const double k = static_cast<double>(occupied);
  const double N = static_cast<double>(neighbor_count(cfg.n, cfg.c1));
  return k * cfg.deaths() + k * N * ((static_cast<double>(cfg.n) + theta) / N);
}

// ---------------------------------------------------------------------------

namespace {

class FamilyEngine {
 public:
  FamilyEngine(const ParticleState& xi0, std::vector<double> thetas, const ParticleConfig& cfg,
               std::uint64_t seed)
      : thetas_(std::move(thetas)),
        cfg_(cfg),
        N_(neighbor_count(cfg.n, cfg.c1)),
        rng_(SplitMix64(seed)()),
        lo_(xi0.lo()),
        occ_(thetas_.size(), xi0.occupancy()),
        counts_(thetas_.size(), xi0.count()),
        index_(xi0.occupancy().size(), -1) {
    for (std::size_t i = 0; i < xi0.occupancy().size(); ++i) {
      if (xi0.occupancy()[i]) {
        index_[i] = static_cast<long long>(top_sites_.size());
        top_sites_.push_back(lo_ + static_cast<long long>(i));
      }
    }
    const double n = static_cast<double>(cfg.n);
    // Per-occupied-site rate of each clock family: death, P, Q_1 .. Q_{m−1}.
    family_rate_.push_back(cfg.deaths());
    family_rate_.push_back(n + thetas_.front());
    for (std::size_t i = 0; i + 1 < thetas_.size(); ++i) {
      family_rate_.push_back(thetas_[i + 1] - thetas_[i]);
    }
    per_site_rate_ = 0.0;
    for (double r : family_rate_) per_site_rate_ += r;
  }

  std::size_t systems() const { return thetas_.size(); }
  std::size_t count(std::size_t j) const { return counts_[j]; }
  std::size_t top_count() const { return top_sites_.size(); }
  double total_rate() const { return per_site_rate_ * static_cast<double>(top_sites_.size()); }

  double waiting_time() {
    std::exponential_distribution<double> e(total_rate());
    return e(rng_);
  }

  // One event of the aggregate clock. Returns the site that changed (or
  // nothing changed when a birth lands on an occupied site).
  void fire(std::uint64_t& local_checks, std::uint64_t& violations) {
    std::uniform_int_distribution<std::size_t> pick(0, top_sites_.size() - 1);
    const long long x = top_sites_[pick(rng_)];
    std::uniform_real_distribution<double> unit(0.0, per_site_rate_);
    double u = unit(rng_);
    std::size_t family = 0;
    while (family + 1 < family_rate_.size() && u >= family_rate_[family]) {
      u -= family_rate_[family];
      ++family;
    }
    if (family == 0) {
      for (std::size_t j = 0; j < systems(); ++j) clear(j, x);
      check_site(x, local_checks, violations);
      return;
    }
    // P (family 1) drives every system; Q_i (family i + 1) drives systems > i − 1.
    const std::size_t first_system = family == 1 ? 0 : family - 1;
    const long long y = x + offset();
    ensure(y);
    for (std::size_t j = first_system; j < systems(); ++j) {
      if (is_set(j, x)) set(j, y);
    }
    check_site(y, local_checks, violations);
  }

  bool is_set(std::size_t j, long long site) const {
    if (site < lo_ || site >= lo_ + static_cast<long long>(occ_[j].size())) return false;
    return occ_[j][static_cast<std::size_t>(site - lo_)] != 0;
  }

  ParticleState state(std::size_t j) const { return ParticleState(cfg_.n, cfg_.c1, lo_, occ_[j]); }

  double right_marker(std::size_t j) const {
    const auto& o = occ_[j];
    for (std::size_t i = o.size(); i-- > 0;) {
      if (o[i]) {
        const double n2 = static_cast<double>(cfg_.n) * static_cast<double>(cfg_.n);
        return static_cast<double>(lo_ + static_cast<long long>(i) + N_ / 2) / n2;
      }
    }
    return -std::numeric_limits<double>::infinity();
  }

  void full_check(std::uint64_t& checks, std::uint64_t& violations) const {
    for (std::size_t j = 0; j + 1 < systems(); ++j) {
      for (std::size_t i = 0; i < occ_[j].size(); ++i) {
        ++checks;
        if (occ_[j][i] > occ_[j + 1][i]) ++violations;
      }
    }
  }

 private:
  long long offset() {
    if (N_ % 2 == 1) {
      std::uniform_int_distribution<long long> d(-(N_ - 1) / 2, (N_ - 1) / 2);
      return d(rng_);
    }
    std::uniform_int_distribution<long long> d(-N_ / 2, N_ / 2 - 1);
    long long k = d(rng_);
    if (k == -N_ / 2) {
      std::bernoulli_distribution flip(0.5);
      if (flip(rng_)) k = N_ / 2;
    }
    return k;
  }

  void ensure(long long site) {
    const long long size = static_cast<long long>(occ_[0].size());
    if (site >= lo_ && site < lo_ + size) return;
    const long long grow = std::max<long long>(2 * N_, size / 2);
    if (site < lo_) {
      const long long add = std::max(grow, lo_ - site);
      for (auto& o : occ_) o.insert(o.begin(), static_cast<std::size_t>(add), 0);
      index_.insert(index_.begin(), static_cast<std::size_t>(add), -1);
      lo_ -= add;
    } else {
      const long long add = std::max(grow, site - (lo_ + size) + 1);
      for (auto& o : occ_) o.insert(o.end(), static_cast<std::size_t>(add), 0);
      index_.insert(index_.end(), static_cast<std::size_t>(add), -1);
    }
  }

  void set(std::size_t j, long long site) {
    const std::size_t i = static_cast<std::size_t>(site - lo_);
    if (occ_[j][i]) return;
    occ_[j][i] = 1;
    ++counts_[j];
    if (j + 1 == systems()) {
      index_[i] = static_cast<long long>(top_sites_.size());
      top_sites_.push_back(site);
    }
  }

  void clear(std::size_t j, long long site) {
    const std::size_t i = static_cast<std::size_t>(site - lo_);
    if (!occ_[j][i]) return;
    occ_[j][i] = 0;
    --counts_[j];
    if (j + 1 == systems()) {
      const long long k = index_[i];
      const long long moved = top_sites_.back();
      top_sites_[static_cast<std::size_t>(k)] = moved;
      index_[static_cast<std::size_t>(moved - lo_)] = k;
      top_sites_.pop_back();
      index_[i] = -1;
    }
  }

  void check_site(long long site, std::uint64_t& checks, std::uint64_t& violations) const {
    for (std::size_t j = 0; j + 1 < systems(); ++j) {
      ++checks;
      if (is_set(j, site) && !is_set(j + 1, site)) ++violations;
    }
  }

  std::vector<double> thetas_;
  ParticleConfig cfg_;
  long long N_;
  std::mt19937_64 rng_;
  long long lo_;
  std::vector<std::vector<std::uint8_t>> occ_;
  std::vector<std::size_t> counts_;
  std::vector<long long> index_;  // position in top_sites_, −1 if absent
  std::vector<long long> top_sites_;
  std::vector<double> family_rate_;
  double per_site_rate_ = 0.0;
};

}  // namespace

ParticleTrajectory couple_theta_star_particles(const ParticleState& xi0,
                                               const std::vector<double>& thetas,
                                               const ParticleConfig& cfg, double horizon,
                                               std::uint64_t seed,
                                               const ParticleOptions& options) {
  cfg.validate();
  require(!thetas.empty(), "particle: theta list is empty");
  for (std::size_t i = 0; i < thetas.size(); ++i) {
    require(std::isfinite(thetas[i]) && thetas[i] >= 0.0, "particle: theta must be >= 0");
    if (i > 0) require(thetas[i] > thetas[i - 1], "particle: theta list must be strictly increasing");
  }
  require(horizon > 0.0, "particle: T must be > 0");
  require(options.sample_dt > 0.0, "particle: sample_dt must be > 0");
  require(xi0.n() == cfg.n && xi0.c1() == cfg.c1, "particle: state and config disagree on n/c1");

  FamilyEngine eng(xi0, thetas, cfg, seed);
  const std::size_t m = thetas.size();
  ParticleTrajectory out;
  out.thetas = thetas;
  out.right_marker.resize(m);
  out.mass.resize(m);
  out.extinction_time.assign(m, ExtendedReal::plus_infinity());
  for (std::size_t j = 0; j < m; ++j) {
    if (eng.count(j) == 0) out.extinction_time[j] = 0.0;
  }

  std::vector<double> snaps = options.snapshot_times;
  std::sort(snaps.begin(), snaps.end());
  for (double s : snaps) require(s >= 0.0 && s <= horizon, "particle: snapshot outside [0, T]");
  std::size_t next_snap = 0;
  const auto samples = static_cast<std::uint64_t>(std::floor(horizon / options.sample_dt + 1e-9));
  std::uint64_t next_sample = 0;

  auto sample_time = [&](std::uint64_t k) {
    return k == samples + 1 ? horizon : static_cast<double>(k) * options.sample_dt;
  };
  // Records everything scheduled at or before time t (state is constant
  // since the previous event).
  auto observe_until = [&](double t) {
    for (;;) {
      const bool more_samples = next_sample <= samples + 1;
      const double ts = more_samples ? sample_time(next_sample) : horizon + 1.0;
      const double tsnap = next_snap < snaps.size() ? snaps[next_snap] : horizon + 1.0;
      const double tnext = std::min(ts, tsnap);
      if (tnext > t) break;
      if (ts <= tsnap) {
        // The final sample (index samples + 1) is at T; skip it if T is itself a multiple.
        if (!(next_sample == samples + 1 && !out.times.empty() && out.times.back() >= horizon)) {
          out.times.push_back(ts);
          for (std::size_t j = 0; j < m; ++j) {
            out.right_marker[j].push_back(eng.right_marker(j));
            out.mass[j].push_back(static_cast<double>(eng.count(j)) / static_cast<double>(cfg.n));
          }
          if (options.full_checks) eng.full_check(out.nested_checks, out.nested_violations);
        }
        ++next_sample;
      } else {
        out.snapshot_times.push_back(tsnap);
        std::vector<ParticleState> states;
        for (std::size_t j = 0; j < m; ++j) states.push_back(eng.state(j));
        out.snapshots.push_back(std::move(states));
        ++next_snap;
      }
    }
  };

  double t = 0.0;
  observe_until(0.0);
  while (eng.top_count() > 0) {
    const double t_next = t + eng.waiting_time();
    if (t_next > horizon) break;
    observe_until(std::nextafter(t_next, 0.0));
    t = t_next;
    if (++out.events > cfg.max_events) {
      throw RuntimeFailure("particle: event budget of " + std::to_string(cfg.max_events) +
                           " exhausted at t = " + format_double(t) + " (seed " +
                           std::to_string(seed) + ")");
    }
    eng.fire(out.nested_checks, out.nested_violations);
    for (std::size_t j = 0; j < m; ++j) {
      if (eng.count(j) == 0 && !out.extinction_time[j].is_finite()) out.extinction_time[j] = t;
    }
  }
  observe_until(horizon);
  for (std::size_t j = 0; j < m; ++j) out.final_states.push_back(eng.state(j));
  return out;
}

ParticleTrajectory simulate_particles(const ParticleState& xi0, double theta,
                                      const ParticleConfig& cfg, double horizon,
                                      std::uint64_t seed, const ParticleOptions& options) {
  return couple_theta_star_particles(xi0, {theta}, cfg, horizon, seed, options);
}

// ---------------------------------------------------------------------------

ParticleComparison particle_vs_spde(const Field& f0, double theta, const ParticleConfig& cfg,
                                    const GridSpec& grid, double horizon,
                                    std::size_t particle_replicas, std::size_t spde_replicas,
                                    std::uint64_t seed, unsigned jobs) {
  require(particle_replicas >= 2 && spde_replicas >= 2, "particle_vs_spde: need >= 2 replicas");
  const ParticleState xi0 = init_particles(f0, cfg);
  const Field u0 = approx_density(xi0, grid.dx);
  const Field f2 = render(Bump{}, -1.0, 1.0, grid.dx);

  ParticleComparison rep;
  rep.n = cfg.n;
  rep.theta = theta;
  rep.horizon = horizon;
  for (std::size_t i = 0; i < u0.size(); ++i) {
    rep.init_sup_error = std::max(rep.init_sup_error, std::abs(u0[i] - f0.interpolate(u0.x(i))));
  }

  ParticleOptions popt;
  popt.sample_dt = horizon;
  popt.full_checks = false;
  using Pair = std::pair<double, double>;
  const auto particles = run_replicas<Pair>(particle_replicas, jobs, [&](std::size_t r) {
    const ParticleTrajectory tr =
        simulate_particles(xi0, theta, cfg, horizon, replica_seed(seed, r), popt);
    const ParticleState& xi = tr.final_states.front();
    const Field d = approx_density(xi, grid.dx);
    return Pair{std::exp(-2.0 * pairing(d, f2)), static_cast<double>(xi.count()) / cfg.n};
  });

  SpdeParams p;
  p.theta = theta;
  p.diffusion = kParticleLimitDiffusion;
  p.noise_amp = kParticleLimitNoise;
  const auto spde = run_replicas<Pair>(spde_replicas, jobs, [&](std::size_t r) {
    const Trajectory tr = simulate(f0, p, grid, horizon, NoiseStream{replica_seed(seed, r), 7},
                                   final_only());
    return Pair{std::exp(-2.0 * pairing(tr.final_field, f2)), tr.mass.back()};
  });

  auto split = [](const std::vector<Pair>& v, bool first) {
    std::vector<double> out;
    for (const auto& p : v) out.push_back(first ? p.first : p.second);
    return estimate_mean(out);
  };
  rep.particle_laplace = split(particles, true);
  rep.particle_mass = split(particles, false);
  rep.spde_laplace = split(spde, true);
  rep.spde_mass = split(spde, false);
  rep.discrepancy = std::abs(rep.particle_laplace.mean - rep.spde_laplace.mean);
  rep.joint_std_error = joint_std_error(rep.particle_laplace.std_error, rep.spde_laplace.std_error);
  return rep;
}

// ---------------------------------------------------------------------------

void write_occupancy(std::ostream& os, double t, const ParticleState& xi) {
  os << format_double(t) << ' ' << xi.n() << ' ' << format_double(xi.c1()) << ' ' << xi.lo()
     << ' ' << xi.hi() << '\n';
  const auto& occ = xi.occupancy();
  if (occ.empty()) {
    os << "0\n";
    return;
  }
  os << static_cast<int>(occ[0]);
  std::size_t run = 1;
  for (std::size_t i = 1; i < occ.size(); ++i) {
    if (occ[i] == occ[i - 1]) {
      ++run;
    } else {
      os << ' ' << run;
      run = 1;
    }
  }
  os << ' ' << run << '\n';
}

ParticleState read_occupancy(std::istream& is, double& t) {
  int n = 0;
  double c1 = 0.0;
  long long lo = 0;
  long long hi = 0;
  std::string line;
  if (!std::getline(is, line)) throw UsageError("occupancy: missing header");
  std::istringstream header(line);
  if (!(header >> t >> n >> c1 >> lo >> hi)) throw UsageError("occupancy: malformed header");
  require(hi >= lo - 1, "occupancy: window_hi < window_lo - 1");
  if (!std::getline(is, line)) throw UsageError("occupancy: missing body");
  std::istringstream body(line);
  int bit = 0;
  if (!(body >> bit) || (bit != 0 && bit != 1)) throw UsageError("occupancy: bad first bit");
  std::vector<std::uint8_t> occ;
  std::size_t run = 0;
  while (body >> run) {
    occ.insert(occ.end(), run, static_cast<std::uint8_t>(bit));
    bit ^= 1;
  }
  require(static_cast<long long>(occ.size()) == hi - lo + 1,
          "occupancy: run lengths do not match the window");
  return ParticleState(n, c1, lo, std::move(occ));
}

}  // namespace kpplab
