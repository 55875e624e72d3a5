#include "kpplab/harness.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iomanip>
#include <limits>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "kpplab/coupling.hpp"
#include "kpplab/duality.hpp"
#include "kpplab/error.hpp"
#include "kpplab/fronts.hpp"
#include "kpplab/noise.hpp"
#include "kpplab/particle.hpp"
#include "kpplab/stats.hpp"

namespace kpplab {

namespace fs = std::filesystem;

std::string to_string(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::Simulate: return "simulate";
    case ExperimentKind::Couple: return "couple";
    case ExperimentKind::Particle: return "particle";
    case ExperimentKind::Speed: return "speed";
    case ExperimentKind::Wave: return "wave";
    case ExperimentKind::Duality: return "duality";
    case ExperimentKind::Sweep: return "sweep";
  }
  return "?";
}

ExperimentKind parse_kind(const std::string& s) {
  for (auto k : {ExperimentKind::Simulate, ExperimentKind::Couple, ExperimentKind::Particle,
                 ExperimentKind::Speed, ExperimentKind::Wave, ExperimentKind::Duality,
                 ExperimentKind::Sweep}) {
    if (to_string(k) == s) return k;
  }
  throw UsageError("kind: unknown experiment kind '" + s + "'");
}

Field IcSpec::render_on(const GridSpec& grid) const {
  if (type == "bump") return render_on_grid(Bump{center}, grid);
  if (type == "heavyside") return render_on_grid(Heavyside{eps, x0}, grid);
  if (type == "split_heavyside") return render_on_grid(SplitHeavyside{}, grid);
  if (type == "ramp") return render_on_grid(ZetaRamp{cap}, grid);
  if (type == "zero") return scale(render_on_grid(Bump{}, grid), 0.0);
  if (type == "file") {
    std::ifstream in(file);
    if (!in) throw UsageError("ic_file: cannot open '" + file + "'");
    double t = 0.0;
    Field f = read_snapshot(in, t);
    require(std::abs(f.dx() - grid.dx) <= 1e-12 * grid.dx,
            "ic_file: snapshot dx differs from the grid dx");
    return f;
  }
  throw UsageError("ic: unknown initial condition '" + type + "'");
}

// ---------------------------------------------------------------------------
// Config keys

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double parse_double(const std::string& key, const std::string& v) {
  double out = 0.0;
  const std::string s = trim(v);
  if (s == "inf") return std::numeric_limits<double>::infinity();
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  if (ec != std::errc() || p != s.data() + s.size() || !std::isfinite(out)) {
    throw UsageError(key + ": expected a number, got '" + v + "'");
  }
  return out;
}

std::uint64_t parse_uint(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  const std::string s = trim(v);
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  if (ec != std::errc() || p != s.data() + s.size()) {
    throw UsageError(key + ": expected a nonnegative integer, got '" + v + "'");
  }
  return out;
}

bool parse_bool(const std::string& key, const std::string& v) {
  const std::string s = trim(v);
  if (s == "true" || s == "1" || s == "yes") return true;
  if (s == "false" || s == "0" || s == "no") return false;
  throw UsageError(key + ": expected true or false, got '" + v + "'");
}

std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  const std::string s = trim(v);
  if (s.empty()) return out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(trim(item));
  return out;
}

std::vector<double> parse_doubles(const std::string& key, const std::string& v) {
  std::vector<double> out;
  for (const auto& s : split_list(v)) out.push_back(parse_double(key, s));
  return out;
}

std::string choice(const std::string& key, const std::string& v,
                   std::initializer_list<const char*> allowed) {
  const std::string s = trim(v);
  for (const char* a : allowed) {
    if (s == a) return s;
  }
  std::string msg = key + ": '" + s + "' is not one of";
  for (const char* a : allowed) msg += std::string(" ") + a;
  throw UsageError(msg);
}

template <class T>
std::string join(const std::vector<T>& xs) {
  std::string s;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) s += ',';
    if constexpr (std::is_floating_point_v<T>) {
      s += format_double(xs[i]);
    } else {
      s += std::to_string(xs[i]);
    }
  }
  return s;
}

std::string num(double v) { return std::isinf(v) ? "inf" : format_double(v); }

struct KeyDef {
  const char* name;
  std::function<void(ExperimentConfig&, const std::string&)> set;
  std::function<std::string(const ExperimentConfig&)> get;
};

#define KPP_DOUBLE(key, member)                                                          \
  KeyDef {                                                                               \
    key, [](ExperimentConfig& c, const std::string& v) { c.member = parse_double(key, v); }, \
        [](const ExperimentConfig& c) { return num(c.member); }                          \
  }
#define KPP_UINT(key, member, type)                                                             \
  KeyDef {                                                                                      \
    key,                                                                                        \
        [](ExperimentConfig& c, const std::string& v) {                                         \
          c.member = static_cast<type>(parse_uint(key, v));                                     \
        },                                                                                      \
        [](const ExperimentConfig& c) { return std::to_string(c.member); }                      \
  }
#define KPP_COEF(key, member)                                                               \
  KeyDef {                                                                                  \
    key,                                                                                    \
        [](ExperimentConfig& c, const std::string& v) { c.member = parse_double(key, v); }, \
        [](const ExperimentConfig& c) { return num(c.member.constant_value()); }            \
  }

const std::vector<KeyDef>& key_table() {
  static const std::vector<KeyDef> table = {
      {"schema_version",
       [](ExperimentConfig& c, const std::string& v) {
         c.schema_version = static_cast<int>(parse_uint("schema_version", v));
       },
       [](const ExperimentConfig& c) { return std::to_string(c.schema_version); }},
      {"kind", [](ExperimentConfig& c, const std::string& v) { c.kind = parse_kind(trim(v)); },
       [](const ExperimentConfig& c) { return to_string(c.kind); }},
      KPP_UINT("seed", seed, std::uint64_t),
      KPP_UINT("jobs", jobs, unsigned),
      {"out", [](ExperimentConfig& c, const std::string& v) { c.out = trim(v); },
       [](const ExperimentConfig& c) { return c.out; }},
      KPP_UINT("replicas", replicas, std::size_t),
      KPP_DOUBLE("T", horizon),
      {"theta", [](ExperimentConfig& c, const std::string& v) { c.thetas = parse_doubles("theta", v); },
       [](const ExperimentConfig& c) { return join(c.thetas); }},
      KPP_COEF("alpha", params.alpha),
      KPP_COEF("beta", params.beta),
      KPP_COEF("gamma", params.gamma),
      KPP_DOUBLE("noise_amp", params.noise_amp),
      KPP_DOUBLE("diffusion", params.diffusion),
      {"scheme",
       [](ExperimentConfig& c, const std::string& v) {
         c.params.scheme = choice("scheme", v, {"branching", "euler"}) == "branching"
                               ? NoiseScheme::Branching
                               : NoiseScheme::EulerMaruyama;
       },
       [](const ExperimentConfig& c) {
         return std::string(c.params.scheme == NoiseScheme::Branching ? "branching" : "euler");
       }},
      KPP_DOUBLE("dx", grid.dx),
      KPP_DOUBLE("dt", grid.dt),
      KPP_DOUBLE("a", grid.a),
      KPP_DOUBLE("b", grid.b),
      {"moving", [](ExperimentConfig& c, const std::string& v) { c.grid.moving = parse_bool("moving", v); },
       [](const ExperimentConfig& c) { return std::string(c.grid.moving ? "true" : "false"); }},
      KPP_UINT("left_pad", grid.left_pad, std::size_t),
      KPP_UINT("right_pad", grid.right_pad, std::size_t),
      KPP_DOUBLE("max_trail", grid.max_trail),
      KPP_UINT("record_every", record_every, std::size_t),
      {"snapshot_times",
       [](ExperimentConfig& c, const std::string& v) {
         c.snapshot_times = parse_doubles("snapshot_times", v);
       },
       [](const ExperimentConfig& c) { return join(c.snapshot_times); }},
      {"ic",
       [](ExperimentConfig& c, const std::string& v) {
         c.ic.type = choice("ic", v, {"bump", "heavyside", "split_heavyside", "ramp", "zero", "file"});
       },
       [](const ExperimentConfig& c) { return c.ic.type; }},
      KPP_DOUBLE("ic_center", ic.center),
      KPP_DOUBLE("ic_eps", ic.eps),
      KPP_DOUBLE("ic_x0", ic.x0),
      KPP_DOUBLE("ic_cap", ic.cap),
      {"ic_file", [](ExperimentConfig& c, const std::string& v) { c.ic.file = trim(v); },
       [](const ExperimentConfig& c) { return c.ic.file; }},
      KPP_DOUBLE("N_cap", cap),
      {"coupling",
       [](ExperimentConfig& c, const std::string& v) {
         c.coupling = choice("coupling", v,
                             {"monotone", "theta", "two_independent", "immigration", "claim2"});
       },
       [](const ExperimentConfig& c) { return c.coupling; }},
      KPP_DOUBLE("lower_scale", lower_scale),
      KPP_DOUBLE("ic2_shift", ic2_shift),
      KPP_DOUBLE("alpha2", alpha2),
      {"alpha_window",
       [](ExperimentConfig& c, const std::string& v) {
         c.alpha_window = parse_doubles("alpha_window", v);
       },
       [](const ExperimentConfig& c) { return join(c.alpha_window); }},
      {"particle_mode",
       [](ExperimentConfig& c, const std::string& v) {
         c.particle_mode = choice("particle_mode", v, {"simulate", "star", "compare"});
       },
       [](const ExperimentConfig& c) { return c.particle_mode; }},
      {"particle_n",
       [](ExperimentConfig& c, const std::string& v) {
         c.particle_n.clear();
         for (const auto& s : split_list(v)) {
           c.particle_n.push_back(static_cast<int>(parse_uint("particle_n", s)));
         }
       },
       [](const ExperimentConfig& c) { return join(c.particle_n); }},
      KPP_DOUBLE("c1", c1),
      KPP_DOUBLE("death_rate", death_rate),
      KPP_DOUBLE("sample_dt", sample_dt),
      KPP_UINT("spde_replicas", spde_replicas, std::size_t),
      {"identity",
       [](ExperimentConfig& c, const std::string& v) {
         c.identity = choice("identity", v, {"self", "competition", "marker_cdf", "upper_laplace"});
       },
       [](const ExperimentConfig& c) { return c.identity; }},
      {"split_times",
       [](ExperimentConfig& c, const std::string& v) { c.split_times = parse_doubles("split_times", v); },
       [](const ExperimentConfig& c) { return join(c.split_times); }},
      KPP_DOUBLE("x", x),
      KPP_DOUBLE("beta_amp", beta_amp),
      KPP_DOUBLE("beta_until", beta_until),
      KPP_DOUBLE("g_center", g_center),
      KPP_DOUBLE("z_threshold", z_threshold),
  };
  return table;
}

#undef KPP_DOUBLE
#undef KPP_UINT
#undef KPP_COEF

const KeyDef* find_key(const std::string& key) {
  for (const auto& k : key_table()) {
    if (key == k.name) return &k;
  }
  return nullptr;
}

}  // namespace

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> out;
    for (const auto& k : key_table()) out.emplace_back(k.name);
    return out;
  }();
  return keys;
}

void set_config_value(ExperimentConfig& cfg, const std::string& key, const std::string& value) {
  const KeyDef* k = find_key(key);
  if (!k) throw UsageError("unknown config key '" + key + "'");
  k->set(cfg, value);
}

ExperimentConfig ExperimentConfig::defaults(ExperimentKind kind) {
  ExperimentConfig c;
  c.kind = kind;
  switch (kind) {
    case ExperimentKind::Speed:
    case ExperimentKind::Wave:
      c.grid = default_front_grid();
      c.thetas = {5.0};
      c.horizon = 10.0;
      c.replicas = 100;
      c.record_every = 10;
      break;
    case ExperimentKind::Duality:
      c.grid.a = -15.0;
      c.grid.b = 5.0;
      c.replicas = 400;
      c.thetas = {2.0};
      c.horizon = 0.5;
      break;
    case ExperimentKind::Sweep:
      c.replicas = 200;
      c.thetas = {0.5, 1.0, 2.0, 3.0};
      break;
    case ExperimentKind::Particle:
      c.grid.dx = 0.05;
      c.grid.dt = 0.002;
      c.grid.a = -3.0;
      c.grid.b = 3.0;
      c.thetas = {2.0};
      c.horizon = 0.5;
      break;
    default:
      break;
  }
  return c;
}

void ExperimentConfig::validate() const {
  require(schema_version == kConfigSchemaVersion,
          "schema_version: expected " + std::to_string(kConfigSchemaVersion) + ", got " +
              std::to_string(schema_version));
  require(!out.empty(), "out: output directory must not be empty");
  require(replicas >= 1, "replicas: must be >= 1");
  require(horizon > 0.0, "T: must be > 0");
  require(record_every >= 1, "record_every: must be >= 1");
  require(cap > 0.0, "N_cap: must be > 0");
  for (double s : snapshot_times) {
    require(s >= 0.0 && s <= horizon, "snapshot_times: every time must lie in [0, T]");
  }
  for (double th : thetas) require(std::isfinite(th), "theta: values must be finite");
  if (kind != ExperimentKind::Sweep && kind != ExperimentKind::Speed) {
    require(!thetas.empty(), "theta: at least one value is required");
  }
  SpdeParams p = params;
  if (!thetas.empty()) p.theta = thetas.front();
  p.validate();
  // Particle comparisons integrate the particle-limit equation, whatever
  // diffusion the config names.
  grid.validate(kind == ExperimentKind::Particle ? kParticleLimitDiffusion : params.diffusion);
  require(alpha_window.empty() || (alpha_window.size() == 2 && alpha_window[0] < alpha_window[1]),
          "alpha_window: expected two values lo < hi");
  require(alpha2 >= 0.0, "alpha2: must be >= 0");
  const bool unbounded_immigration =
      alpha_window.empty() &&
      (params.alpha.constant_value() > 0.0 || (kind == ExperimentKind::Couple && alpha2 > 0.0));
  require(!(unbounded_immigration && grid.moving),
          "alpha: immigration on the whole line keeps growing a moving window; set alpha_window "
          "or moving = false");

  switch (kind) {
    case ExperimentKind::Couple:
      if (coupling == "theta") {
        require(thetas.size() == 2 && thetas[0] > 0.0 && thetas[0] < thetas[1],
                "theta: the theta coupling needs two values 0 < theta1 < theta2");
      }
      if (coupling == "immigration") {
        require(alpha2 >= params.alpha.constant_value(), "alpha2: must be >= alpha");
      }
      if (coupling == "monotone" || coupling == "claim2") {
        require(lower_scale >= 0.0 && lower_scale <= 1.0, "lower_scale: must lie in [0, 1]");
      }
      break;
    case ExperimentKind::Particle:
      require(!particle_n.empty(), "particle_n: at least one value is required");
      for (int n : particle_n) require(n >= 1, "particle_n: values must be >= 1");
      require(c1 > 0.0, "c1: must be > 0");
      require(sample_dt > 0.0, "sample_dt: must be > 0");
      if (particle_mode == "star") {
        for (std::size_t i = 1; i < thetas.size(); ++i) {
          require(thetas[i] > thetas[i - 1], "theta: the star coupling needs increasing values");
        }
      }
      if (particle_mode == "compare") {
        require(replicas >= 2 && spde_replicas >= 2, "replicas: compare needs >= 2 per side");
      }
      break;
    case ExperimentKind::Speed:
      require(replicas >= 2, "replicas: speed needs >= 2");
      require(horizon >= 1.0, "T: speed needs T >= 1");
      break;
    case ExperimentKind::Wave:
      require(horizon >= 1.0, "T: wave sampling needs T >= 1");
      break;
    case ExperimentKind::Duality:
      require(replicas >= 2, "replicas: duality needs >= 2");
      if (identity == "self") {
        require(!split_times.empty(), "split_times: at least one value is required");
        for (double s : split_times) {
          require(s >= 0.0 && s <= horizon, "split_times: every time must lie in [0, T]");
        }
      }
      if (identity == "upper_laplace") require(g_center > 1.0, "g_center: must be > 1");
      if (identity == "marker_cdf") {
        const double k = x / grid.dx;
        require(std::abs(k - std::round(k)) <= 1e-6, "x: must lie on the grid");
      }
      require(z_threshold > 0.0, "z_threshold: must be > 0");
      break;
    case ExperimentKind::Sweep:
      require(replicas >= 2, "replicas: sweep needs >= 2");
      break;
    default:
      break;
  }
}

Coefficient ExperimentConfig::immigration(double c) const {
  if (alpha_window.empty() || c == 0.0) return Coefficient(c);
  const double lo = alpha_window[0];
  const double hi = alpha_window[1];
  return Coefficient::from_function(
      [c, lo, hi](double, double x) { return x >= lo && x <= hi ? c : 0.0; },
      format_double(c) + "*1[" + format_double(lo) + "," + format_double(hi) + "]");
}

std::string ExperimentConfig::to_text(bool run_keys) const {
  std::string s;
  for (const auto& k : key_table()) {
    const std::string name = k.name;
    if (!run_keys && (name == "out" || name == "jobs")) continue;
    s += name + " = " + k.get(*this) + '\n';
  }
  return s;
}

std::map<std::string, std::string> parse_config_text(const std::string& text,
                                                     const std::string& origin) {
  std::map<std::string, std::string> out;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    const std::string where = origin + ":" + std::to_string(lineno);
    if (eq == std::string::npos) throw UsageError(where + ": expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    if (!find_key(key)) throw UsageError(where + ": unknown config key '" + key + "'");
    if (out.count(key)) throw UsageError(where + ": duplicate key '" + key + "'");
    out[key] = trim(line.substr(eq + 1));
  }
  return out;
}

ExperimentConfig load_config(ExperimentKind kind, const std::string& config_path,
                             const std::map<std::string, std::string>& overrides,
                             bool read_environment) {
  std::map<std::string, std::string> values;
  if (!config_path.empty()) {
    std::ifstream in(config_path);
    if (!in) throw UsageError("--config: cannot open '" + config_path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    values = parse_config_text(ss.str(), config_path);
  }
  if (read_environment) {
    for (const auto& key : config_keys()) {
      std::string env = "KPPLAB_";
      for (char ch : key) env += static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
      if (const char* v = std::getenv(env.c_str())) values[key] = v;
    }
  }
  for (const auto& [k, v] : overrides) {
    if (!find_key(k)) throw UsageError("unknown config key '" + k + "'");
    values[k] = v;
  }
  if (auto it = values.find("kind"); it != values.end() && parse_kind(trim(it->second)) != kind) {
    throw UsageError("kind: config says '" + it->second + "' but the subcommand is '" +
                     to_string(kind) + "'");
  }
  ExperimentConfig cfg = ExperimentConfig::defaults(kind);
  for (const auto& [k, v] : values) set_config_value(cfg, k, v);
  cfg.kind = kind;
  cfg.validate();
  return cfg;
}

// ---------------------------------------------------------------------------
// Manifest

std::string sha256_hex(const fs::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw RuntimeFailure("cannot read '" + file.string() + "' for hashing");
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  if (!ctx || EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) != 1) {
    EVP_MD_CTX_free(ctx);
    throw RuntimeFailure("sha256: digest init failed");
  }
  std::vector<char> buf(1 << 16);
  while (in) {
    in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (in.gcount() > 0) EVP_DigestUpdate(ctx, buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx, md, &len);
  EVP_MD_CTX_free(ctx);
  std::ostringstream hex;
  for (unsigned int i = 0; i < len; ++i) {
    hex << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(md[i]);
  }
  return hex.str();
}

void RunManifest::write(const fs::path& file) const {
  nlohmann::ordered_json j;
  j["kind"] = kind;
  j["tool_version"] = tool_version;
  j["schema_version"] = kConfigSchemaVersion;
  j["config"] = config_echo;
  j["replicas"] = replicas;
  j["wall_seconds"] = wall_seconds;
  j["status"] = failures.empty() ? "pass" : "assertion_failure";
  j["failures"] = failures;
  auto arts = nlohmann::ordered_json::array();
  for (const auto& a : artifacts) {
    arts.push_back({{"path", a.path}, {"sha256", a.sha256}, {"bytes", a.bytes}});
  }
  j["artifacts"] = arts;
  std::ofstream out(file);
  if (!out) throw RuntimeFailure("cannot write '" + file.string() + "'");
  out << j.dump(2) << '\n';
}

int exit_status(const RunManifest& manifest) { return manifest.failures.empty() ? 0 : 2; }

// ---------------------------------------------------------------------------
// Experiments

namespace {

std::string indexed(const std::string& stem, std::size_t i, const std::string& ext) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "_%04zu", i);
  return stem + buf + ext;
}

class RunContext {
 public:
  RunContext(const ExperimentConfig& cfg, RunManifest& m) : cfg_(cfg), m_(m) {}

  const ExperimentConfig& cfg() const { return cfg_; }

  void write(const std::string& rel, const std::function<void(std::ostream&)>& body) {
    const fs::path path = m_.out_dir / rel;
    fs::create_directories(path.parent_path());
    {
      std::ofstream out(path);
      if (!out) throw RuntimeFailure("cannot write '" + path.string() + "'");
      body(out);
      if (!out) throw RuntimeFailure("write failed for '" + path.string() + "'");
    }
    paths_.push_back(rel);
  }

  void fail(const std::string& msg) { m_.failures.push_back(msg); }

  void finish() {
    for (const auto& rel : paths_) {
      const fs::path p = m_.out_dir / rel;
      m_.artifacts.push_back({rel, sha256_hex(p), fs::file_size(p)});
    }
  }

  SpdeParams params(double theta) const {
    SpdeParams p = cfg_.params;
    p.theta = theta;
    p.alpha = cfg_.immigration(cfg_.params.alpha.constant_value());
    return p;
  }
  SpdeParams params() const { return params(cfg_.thetas.front()); }

 private:
  const ExperimentConfig& cfg_;
  RunManifest& m_;
  std::vector<std::string> paths_;
};

// x ↦ f(x − h), h a multiple of dx.
Field shifted_right(const Field& f, double h) { return h == 0.0 ? f : shift(f, -h); }

void write_snapshots(RunContext& ctx, const std::string& stem, std::size_t r,
                     const std::vector<Snapshot>& snaps) {
  for (std::size_t k = 0; k < snaps.size(); ++k) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "_%04zu_%03zu.txt", r, k);
    ctx.write("snapshots/" + stem + buf,
              [&](std::ostream& os) { write_snapshot(os, snaps[k].t, snaps[k].field); });
  }
}

void run_simulate(RunContext& ctx) {
  const auto& cfg = ctx.cfg();
  const SpdeParams p = ctx.params();
  const Field u0 = cfg.ic.render_on(cfg.grid);
  SimulateOptions opt;
  opt.record_every = cfg.record_every;
  opt.snapshot_times = cfg.snapshot_times;
  const auto trs = run_replicas<Trajectory>(cfg.replicas, cfg.jobs, [&](std::size_t r) {
    return simulate(u0, p, cfg.grid, cfg.horizon, NoiseStream{replica_seed(cfg.seed, r), 0}, opt);
  });
  for (std::size_t r = 0; r < trs.size(); ++r) {
    ctx.write(indexed("trajectory", r, ".csv"),
              [&](std::ostream& os) { write_trajectory_csv(os, trs[r]); });
    write_snapshots(ctx, "u", r, trs[r].snapshots);
  }
  ctx.write("summary.csv", [&](std::ostream& os) {
    os << "replica,seed,extinct,extinction_time,R0_T,L0_T,mass_T\n";
    for (std::size_t r = 0; r < trs.size(); ++r) {
      const Trajectory& t = trs[r];
      os << r << ',' << replica_seed(cfg.seed, r) << ',' << (t.extinction_time.is_finite() ? 1 : 0)
         << ',' << format_double(t.extinction_time.value()) << ','
         << format_double(t.right_marker.back()) << ',' << format_double(t.left_marker.back())
         << ',' << format_double(t.mass.back()) << '\n';
    }
  });
  if (cfg.replicas > 1) {
    const Estimate e = extinction_probability(Custom{u0}, p, cfg.grid, cfg.horizon, cfg.replicas,
                                              cfg.seed, cfg.jobs);
    ctx.write("extinction.csv", [&](std::ostream& os) {
      os << "theta,T,replicas,p_extinct,stderr\n"
         << format_double(p.theta) << ',' << format_double(cfg.horizon) << ',' << cfg.replicas
         << ',' << format_double(e.mean) << ',' << format_double(e.std_error) << '\n';
    });
  }
}

CoupledSystem build_coupling(const ExperimentConfig& cfg, const SpdeParams& p, const Field& u0) {
  if (cfg.coupling == "monotone") return couple_monotone(scale(u0, cfg.lower_scale), u0, p);
  if (cfg.coupling == "theta") return couple_theta(u0, p, cfg.thetas[0], cfg.thetas[1]);
  if (cfg.coupling == "two_independent") {
    return couple_two_independent(u0, shifted_right(u0, cfg.ic2_shift), p);
  }
  if (cfg.coupling == "immigration") {
    SpdeParams q = p;
    q.alpha = 0.0;
    return couple_immigration(u0, q, p.alpha, cfg.immigration(cfg.alpha2));
  }
  return claim2_chain(scale(u0, cfg.lower_scale), u0, shifted_right(u0, cfg.ic2_shift), p);
}

void run_couple(RunContext& ctx) {
  const auto& cfg = ctx.cfg();
  const SpdeParams p = ctx.params();
  const Field u0 = cfg.ic.render_on(cfg.grid);
  const CoupledSystem sys = build_coupling(cfg, p, u0);
  sys.validate();
  CoupledOptions opt;
  opt.record_every = cfg.record_every;
  opt.snapshot_times = cfg.snapshot_times;
  const auto trs = run_replicas<CoupledTrajectory>(cfg.replicas, cfg.jobs, [&](std::size_t r) {
    return simulate_coupled(sys, cfg.grid, cfg.horizon, replica_seed(cfg.seed, r), opt);
  });
  ctx.write("wiring.json",
            [&](std::ostream& os) { write_wiring_json(os, sys, cfg.grid, cfg.seed); });
  std::uint64_t violations = 0;
  for (std::size_t r = 0; r < trs.size(); ++r) {
    ctx.write(indexed("coupled", r, ".csv"),
              [&](std::ostream& os) { write_coupled_csv(os, trs[r]); });
    for (std::size_t o = 0; o < trs[r].names.size(); ++o) {
      write_snapshots(ctx, trs[r].names[o], r, trs[r].outputs[o].snapshots);
    }
    violations += trs[r].order_violations;
  }
  ctx.write("order.csv", [&](std::ostream& os) {
    os << "replica,seed,order_checks,order_violations\n";
    for (std::size_t r = 0; r < trs.size(); ++r) {
      os << r << ',' << replica_seed(cfg.seed, r) << ',' << trs[r].order_checks << ','
         << trs[r].order_violations << '\n';
    }
  });
  if (violations > 0) {
    ctx.fail("coupling order violated at " + std::to_string(violations) + " cell-steps");
  }
}

ParticleConfig particle_config(const ExperimentConfig& cfg, int n) {
  ParticleConfig pc;
  pc.n = n;
  pc.c1 = cfg.c1;
  pc.death_rate = cfg.death_rate;
  return pc;
}

void run_particle(RunContext& ctx) {
  const auto& cfg = ctx.cfg();
  const Field f0 = cfg.ic.render_on(cfg.grid);
  if (cfg.particle_mode == "compare") {
    std::vector<ParticleComparison> rows;
    for (int n : cfg.particle_n) {
      rows.push_back(particle_vs_spde(f0, cfg.thetas.front(), particle_config(cfg, n), cfg.grid,
                                      cfg.horizon, cfg.replicas, cfg.spde_replicas, cfg.seed,
                                      cfg.jobs));
    }
    ctx.write("comparison.csv", [&](std::ostream& os) {
      os << "n,theta,T,init_sup_error,particle_laplace,particle_se,spde_laplace,spde_se,"
            "discrepancy,joint_se,particle_mass,spde_mass\n";
      for (const auto& r : rows) {
        os << r.n << ',' << format_double(r.theta) << ',' << format_double(r.horizon) << ','
           << format_double(r.init_sup_error) << ',' << format_double(r.particle_laplace.mean)
           << ',' << format_double(r.particle_laplace.std_error) << ','
           << format_double(r.spde_laplace.mean) << ',' << format_double(r.spde_laplace.std_error)
           << ',' << format_double(r.discrepancy) << ',' << format_double(r.joint_std_error)
           << ',' << format_double(r.particle_mass.mean) << ','
           << format_double(r.spde_mass.mean) << '\n';
      }
    });
    return;
  }

  const ParticleConfig pc = particle_config(cfg, cfg.particle_n.front());
  const ParticleState xi0 = init_particles(f0, pc);
  ParticleOptions opt;
  opt.sample_dt = cfg.sample_dt;
  opt.snapshot_times = cfg.snapshot_times;
  const bool star = cfg.particle_mode == "star";
  const std::vector<double> thetas = star ? cfg.thetas : std::vector<double>{cfg.thetas.front()};
  const auto trs = run_replicas<ParticleTrajectory>(cfg.replicas, cfg.jobs, [&](std::size_t r) {
    const std::uint64_t s = replica_seed(cfg.seed, r);
    return star ? couple_theta_star_particles(xi0, thetas, pc, cfg.horizon, s, opt)
                : simulate_particles(xi0, thetas.front(), pc, cfg.horizon, s, opt);
  });
  std::uint64_t violations = 0;
  for (std::size_t r = 0; r < trs.size(); ++r) {
    const ParticleTrajectory& tr = trs[r];
    ctx.write(indexed(star ? "star" : "particles", r, ".csv"), [&](std::ostream& os) {
      os << 't';
      for (double th : tr.thetas) {
        const std::string tag = star ? "_theta" + format_double(th) : "";
        os << ",R0" << tag << ",mass" << tag;
      }
      os << '\n';
      for (std::size_t i = 0; i < tr.times.size(); ++i) {
        os << format_double(tr.times[i]);
        for (std::size_t j = 0; j < tr.thetas.size(); ++j) {
          os << ',' << format_double(tr.right_marker[j][i]) << ',' << format_double(tr.mass[j][i]);
        }
        os << '\n';
      }
    });
    for (std::size_t k = 0; k < tr.snapshots.size(); ++k) {
      for (std::size_t j = 0; j < tr.snapshots[k].size(); ++j) {
        char buf[64];
        std::snprintf(buf, sizeof buf, "snapshots/occupancy_%04zu_%03zu_%zu.txt", r, k, j);
        ctx.write(buf, [&](std::ostream& os) {
          write_occupancy(os, tr.snapshot_times[k], tr.snapshots[k][j]);
        });
      }
    }
    violations += tr.nested_violations;
  }
  ctx.write("events.csv", [&](std::ostream& os) {
    os << "replica,seed,events,nested_checks,nested_violations\n";
    for (std::size_t r = 0; r < trs.size(); ++r) {
      os << r << ',' << replica_seed(cfg.seed, r) << ',' << trs[r].events << ','
         << trs[r].nested_checks << ',' << trs[r].nested_violations << '\n';
    }
  });
  if (violations > 0) {
    ctx.fail("particle nestedness violated " + std::to_string(violations) + " times");
  }
}

void run_speed(RunContext& ctx) {
  const auto& cfg = ctx.cfg();
  std::vector<double> thetas = cfg.thetas;
  std::sort(thetas.begin(), thetas.end());
  std::vector<SpeedReport> reps;
  for (double th : thetas) {
    reps.push_back(speed_report(ctx.params(th), cfg.horizon, cfg.replicas, cfg.cap, cfg.grid,
                                cfg.seed, cfg.jobs));
  }
  std::vector<SpeedEstimate> rows;
  for (const auto& r : reps) rows.push_back(r.speed);
  ctx.write("speed_table.csv", [&](std::ostream& os) { write_speed_table(os, rows); });
  ctx.write("alpha.csv", [&](std::ostream& os) {
    os << "theta,T,replicas,alpha_T,alpha_se,alpha_over_T,alpha_over_T_minus_0.75B,diff_se\n";
    for (const auto& r : reps) {
      os << format_double(r.speed.theta) << ',' << format_double(cfg.horizon) << ','
         << cfg.replicas << ',' << format_double(r.alpha.mean) << ','
         << format_double(r.alpha.std_error) << ',' << format_double(r.alpha.mean / cfg.horizon)
         << ',' << format_double(r.alpha_minus_B.mean) << ','
         << format_double(r.alpha_minus_B.std_error) << '\n';
    }
  });
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& s = rows[i];
    if (s.mean_R0_over_T > 2.0 * std::sqrt(s.theta) + 3.0 * s.std_error) {
      ctx.fail("B_hat(theta=" + format_double(s.theta) + ") = " + format_double(s.mean_R0_over_T) +
               " exceeds 2*sqrt(theta) + 3 stderr");
    }
    if (i > 0) {
      const auto& q = rows[i - 1];
      const double se = joint_std_error(s.std_error, q.std_error);
      if (s.mean_R0_over_T < q.mean_R0_over_T - 3.0 * se) {
        ctx.fail("B_hat decreases from theta=" + format_double(q.theta) + " to theta=" +
                 format_double(s.theta) + " beyond 3 joint stderr");
      }
    }
  }
}

void run_wave(RunContext& ctx) {
  const auto& cfg = ctx.cfg();
  const auto samples = sample_wave(ctx.params(), cfg.horizon, cfg.cap, cfg.grid, cfg.replicas,
                                   cfg.seed, cfg.jobs);
  std::size_t off_zero = 0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    ctx.write(indexed("waves/wave", i, ".txt"), [&](std::ostream& os) {
      write_snapshot(os, samples[i].source_time, samples[i].profile);
    });
    if (right_marker(samples[i].profile) != ExtendedReal(0.0)) ++off_zero;
  }
  ctx.write("wave_stats.csv", [&](std::ostream& os) {
    os << "sample,s,R0,pairing_bump_minus1,front_mass_1\n";
    for (std::size_t i = 0; i < samples.size(); ++i) {
      const Field& f = samples[i].profile;
      const Field test = render(Bump{-1.0}, f.origin(), 0.0, f.dx());
      os << i << ',' << format_double(samples[i].source_time) << ','
         << format_double(right_marker(f).value()) << ',' << format_double(pairing(f, test))
         << ',' << format_double(front_mass(f, 1.0)) << '\n';
    }
  });
  if (off_zero > 0) ctx.fail(std::to_string(off_zero) + " wave samples have right marker != 0");
}

void run_duality(RunContext& ctx) {
  const auto& cfg = ctx.cfg();
  const SpdeParams p = ctx.params();
  std::vector<DualityReport> rows;
  if (cfg.identity == "self") {
    const Field u0 = cfg.ic.render_on(cfg.grid);
    const SelfDualityReport r = self_duality_check(u0, u0, p, cfg.horizon, cfg.split_times,
                                                   cfg.replicas, cfg.grid, cfg.seed, cfg.jobs);
    rows = r.pairs;
    if (rows.empty()) {
      rows.push_back(make_report("self_duality", "single split time", r.estimates.front(),
                                 r.estimates.front()));
    }
  } else if (cfg.identity == "competition") {
    const Field u0 = cfg.ic.render_on(cfg.grid);
    const double amp = cfg.beta_amp;
    const double until = cfg.beta_until * cfg.horizon;
    const Coefficient beta = Coefficient::from_function(
        [amp, until](double t, double x) {
          return t <= until ? amp * std::max(0.0, 1.0 - std::abs(x)) : 0.0;
        },
        "pulse");
    rows.push_back(competition_duality_check(u0, u0, beta, p, cfg.horizon, cfg.replicas, cfg.grid,
                                             cfg.seed, cfg.jobs));
  } else if (cfg.identity == "marker_cdf") {
    const Field phi = cfg.ic.render_on(cfg.grid);
    rows.push_back(marker_cdf_via_dual(phi, cfg.x, cfg.horizon, p, cfg.replicas, cfg.cap,
                                       cfg.grid, cfg.seed, cfg.jobs));
  } else {
    GridSpec g = cfg.grid;
    g.a = cfg.g_center - 1.5;
    g.b = cfg.g_center + 1.5;
    const Field gf = render_on_grid(Bump{cfg.g_center}, g);
    rows.push_back(upper_measure_laplace_check(gf, p, cfg.horizon, cfg.replicas, cfg.cap,
                                               cfg.grid, cfg.seed, cfg.jobs));
  }
  ctx.write("duality.csv", [&](std::ostream& os) {
    write_duality_header(os);
    for (const auto& r : rows) write_duality_row(os, r);
  });
  for (const auto& r : rows) {
    if (!(r.z_score < cfg.z_threshold)) {
      ctx.fail(r.identity + " (" + r.parameters + "): z = " + format_double(r.z_score) +
               " >= " + format_double(cfg.z_threshold));
    }
  }
}

void run_sweep(RunContext& ctx) {
  const auto& cfg = ctx.cfg();
  const Field u0 = cfg.ic.render_on(cfg.grid);
  std::vector<Estimate> ps;
  for (double th : cfg.thetas) {
    ps.push_back(extinction_probability(Custom{u0}, ctx.params(th), cfg.grid, cfg.horizon,
                                        cfg.replicas, cfg.seed, cfg.jobs));
  }
  ctx.write("sweep.csv", [&](std::ostream& os) {
    os << "theta,T,replicas,p_extinct,stderr\n";
    for (std::size_t i = 0; i < ps.size(); ++i) {
      os << format_double(cfg.thetas[i]) << ',' << format_double(cfg.horizon) << ','
         << cfg.replicas << ',' << format_double(ps[i].mean) << ','
         << format_double(ps[i].std_error) << '\n';
    }
  });
}

}  // namespace

RunManifest run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  const auto start = std::chrono::steady_clock::now();
  RunManifest m;
  m.kind = to_string(cfg.kind);
  m.config_echo = cfg.to_text();
  m.out_dir = cfg.out;
  m.replicas = cfg.replicas;
  fs::create_directories(m.out_dir);
  RunContext ctx(cfg, m);
  ctx.write("config.txt", [&](std::ostream& os) { os << cfg.to_text(false); });
  switch (cfg.kind) {
    case ExperimentKind::Simulate: run_simulate(ctx); break;
    case ExperimentKind::Couple: run_couple(ctx); break;
    case ExperimentKind::Particle: run_particle(ctx); break;
    case ExperimentKind::Speed: run_speed(ctx); break;
    case ExperimentKind::Wave: run_wave(ctx); break;
    case ExperimentKind::Duality: run_duality(ctx); break;
    case ExperimentKind::Sweep: run_sweep(ctx); break;
  }
  ctx.finish();
  m.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  m.write(m.out_dir / "manifest.json");
  return m;
}

// ---------------------------------------------------------------------------
// Plot data

namespace {

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t column(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (header[i] == name) return i;
    }
    throw UsageError("plot: column '" + name + "' missing");
  }
};

Table read_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("plot: missing artifact '" + path.string() + "'");
  Table t;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (first) {
      t.header = std::move(cells);
      first = false;
    } else {
      t.rows.push_back(std::move(cells));
    }
  }
  return t;
}

double cell_value(const std::string& s) {
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  double v = 0.0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc()) return std::numeric_limits<double>::quiet_NaN();
  return v;
}

struct Series {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
  std::vector<double> err;

  void add(double xv, double yv, double e = std::numeric_limits<double>::quiet_NaN()) {
    if (!std::isfinite(xv) || !std::isfinite(yv)) return;
    x.push_back(xv);
    y.push_back(yv);
    if (std::isfinite(e)) err.push_back(e);
  }
};

Series column_series(const Table& t, const std::string& name, const std::string& xcol,
                     const std::string& ycol, const std::string& ecol = "") {
  Series s{name, {}, {}, {}};
  const std::size_t xi = t.column(xcol);
  const std::size_t yi = t.column(ycol);
  const std::size_t ei = ecol.empty() ? 0 : t.column(ecol);
  for (const auto& row : t.rows) {
    s.add(cell_value(row.at(xi)), cell_value(row.at(yi)),
          ecol.empty() ? std::numeric_limits<double>::quiet_NaN() : cell_value(row.at(ei)));
  }
  return s;
}

void write_dat(std::ostream& os, const Series& s) {
  const bool with_err = s.err.size() == s.x.size() && !s.x.empty();
  for (std::size_t i = 0; i < s.x.size(); ++i) {
    os << format_double(s.x[i]) << ' ' << format_double(s.y[i]);
    if (with_err) os << ' ' << format_double(s.err[i]);
    os << '\n';
  }
}

std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      default: out += c;
    }
  }
  return out;
}

void write_svg(std::ostream& os, const std::string& title, const std::vector<Series>& series) {
  constexpr double W = 640, H = 400, L = 60, R = 20, T = 40, B = 40;
  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
  for (const auto& s : series) {
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      x0 = std::min(x0, s.x[i]);
      x1 = std::max(x1, s.x[i]);
      y0 = std::min(y0, s.y[i]);
      y1 = std::max(y1, s.y[i]);
    }
  }
  if (!std::isfinite(x0)) x0 = 0, x1 = 1, y0 = 0, y1 = 1;
  if (x1 == x0) x1 = x0 + 1;
  if (y1 == y0) y1 = y0 + 1;
  auto px = [&](double x) { return L + (x - x0) / (x1 - x0) * (W - L - R); };
  auto py = [&](double y) { return H - B - (y - y0) / (y1 - y0) * (H - T - B); };
  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"};
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
     << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  os << "<rect x=\"" << L << "\" y=\"" << T << "\" width=\"" << W - L - R << "\" height=\""
     << H - T - B << "\" fill=\"none\" stroke=\"black\"/>\n";
  os << "<text x=\"" << L << "\" y=\"20\">" << xml_escape(title) << "</text>\n";
  os << "<text x=\"" << L << "\" y=\"" << H - 20 << "\">" << format_double(x0) << "</text>\n";
  os << "<text x=\"" << W - R << "\" y=\"" << H - 20 << "\" text-anchor=\"end\">"
     << format_double(x1) << "</text>\n";
  os << "<text x=\"" << L - 5 << "\" y=\"" << H - B << "\" text-anchor=\"end\">"
     << format_double(y0) << "</text>\n";
  os << "<text x=\"" << L - 5 << "\" y=\"" << T + 10 << "\" text-anchor=\"end\">"
     << format_double(y1) << "</text>\n";
  for (std::size_t k = 0; k < series.size(); ++k) {
    const auto& s = series[k];
    const char* c = colors[k % 5];
    os << "<polyline fill=\"none\" stroke=\"" << c << "\" points=\"";
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      os << (i ? " " : "") << format_double(std::round(px(s.x[i]) * 10) / 10) << ','
         << format_double(std::round(py(s.y[i]) * 10) / 10);
    }
    os << "\"/>\n";
    os << "<text x=\"" << W - R - 5 << "\" y=\"" << T + 15 + 15 * static_cast<double>(k)
       << "\" text-anchor=\"end\" fill=\"" << c << "\">" << xml_escape(s.name) << "</text>\n";
  }
  os << "</svg>\n";
}

bool has_artifact(const RunManifest& m, const std::string& rel) {
  return std::any_of(m.artifacts.begin(), m.artifacts.end(),
                     [&](const ArtifactRecord& a) { return a.path == rel; });
}

std::vector<Series> marker_series(const RunManifest& m) {
  for (const char* stem : {"trajectory", "coupled", "particles", "star"}) {
    const std::string rel = indexed(stem, 0, ".csv");
    if (!has_artifact(m, rel)) continue;
    const Table t = read_csv(m.out_dir / rel);
    std::vector<Series> out;
    for (const auto& h : t.header) {
      if (h == "R0" || (h.size() > 3 && h.rfind("_R0") == h.size() - 3) || h.rfind("R0_", 0) == 0) {
        out.push_back(column_series(t, h, "t", h));
      }
    }
    return out;
  }
  throw UsageError("plot markers: no trajectory artifact in the manifest");
}

std::vector<Series> wave_series(const RunManifest& m) {
  std::vector<Field> profiles;
  for (const auto& a : m.artifacts) {
    if (a.path.rfind("waves/wave_", 0) != 0) continue;
    std::ifstream in(m.out_dir / a.path);
    double t = 0.0;
    profiles.push_back(read_snapshot(in, t));
  }
  if (profiles.empty() && !has_artifact(m, "wave_stats.csv")) {
    throw UsageError("plot wave: no wave samples in the manifest");
  }
  Series mean{"mean profile", {}, {}, {}};
  if (profiles.empty()) return {mean};
  double lo = 0.0;
  for (const auto& f : profiles) lo = std::min(lo, f.origin());
  const double dx = profiles.front().dx();
  const auto cells = static_cast<std::size_t>(std::llround(-lo / dx)) + 1;
  for (std::size_t i = 0; i < cells; ++i) {
    const double x = lo + static_cast<double>(i) * dx;
    std::vector<double> vals;
    for (const auto& f : profiles) vals.push_back(f.interpolate(x));
    const Estimate e = estimate_mean(vals);
    mean.add(x, e.mean, vals.size() > 1 ? e.std_error : 0.0);
  }
  return {mean};
}

}  // namespace

std::string default_plot_kind(const ExperimentConfig& cfg) {
  switch (cfg.kind) {
    case ExperimentKind::Simulate:
    case ExperimentKind::Couple: return "markers";
    case ExperimentKind::Particle:
      return cfg.particle_mode == "compare" ? "comparison" : "markers";
    case ExperimentKind::Speed: return "speed";
    case ExperimentKind::Wave: return "wave";
    case ExperimentKind::Duality: return "duality";
    case ExperimentKind::Sweep: return "sweep";
  }
  return "";
}

void emit_plot_data(RunManifest& m, const std::string& kind) {
  std::vector<Series> series;
  std::string title;
  auto table = [&](const std::string& rel) {
    if (!has_artifact(m, rel)) throw UsageError("plot " + kind + ": missing artifact '" + rel + "'");
    return read_csv(m.out_dir / rel);
  };
  if (kind == "markers") {
    series = marker_series(m);
    title = "right marker vs time";
  } else if (kind == "speed") {
    const Table t = table("speed_table.csv");
    series.push_back(column_series(t, "B_hat", "theta", "B_hat", "stderr"));
    series.push_back(column_series(t, "2sqrt_theta", "theta", "bound_2sqrt_theta"));
    title = "B_hat vs theta";
  } else if (kind == "duality") {
    const Table t = table("duality.csv");
    Series s{"z", {}, {}, {}};
    const std::size_t zi = t.column("z");
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
      s.add(static_cast<double>(i), cell_value(t.rows[i].at(zi)));
    }
    series.push_back(s);
    title = "duality z-scores";
  } else if (kind == "wave") {
    series = wave_series(m);
    title = "recentered wave profile";
  } else if (kind == "sweep") {
    series.push_back(column_series(table("sweep.csv"), "p_extinct", "theta", "p_extinct", "stderr"));
    title = "extinction probability vs theta";
  } else if (kind == "comparison") {
    series.push_back(
        column_series(table("comparison.csv"), "discrepancy", "n", "discrepancy", "joint_se"));
    title = "particle vs grid discrepancy";
  } else {
    throw UsageError("plot: unknown plot kind '" + kind + "'");
  }

  std::vector<std::string> written;
  for (const auto& s : series) {
    std::string tag;
    for (char c : s.name) tag += std::isalnum(static_cast<unsigned char>(c)) ? c : '_';
    const std::string rel = "plots/" + kind + "_" + tag + ".dat";
    fs::create_directories(m.out_dir / "plots");
    std::ofstream out(m.out_dir / rel);
    write_dat(out, s);
    written.push_back(rel);
  }
  const std::string svg = "plots/" + kind + ".svg";
  fs::create_directories(m.out_dir / "plots");
  {
    std::ofstream out(m.out_dir / svg);
    write_svg(out, title, series);
  }
  written.push_back(svg);
  for (const auto& rel : written) {
    const fs::path p = m.out_dir / rel;
    auto it = std::find_if(m.artifacts.begin(), m.artifacts.end(),
                           [&](const ArtifactRecord& a) { return a.path == rel; });
    ArtifactRecord rec{rel, sha256_hex(p), fs::file_size(p)};
    if (it != m.artifacts.end()) {
      *it = rec;
    } else {
      m.artifacts.push_back(rec);
    }
  }
  m.write(m.out_dir / "manifest.json");
}

}  // namespace kpplab
