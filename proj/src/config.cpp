#include "mmv/config.hpp"

#include <cstdlib>
#include <sstream>

#include "mmv/io.hpp"

namespace mmv {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

bool valid_key(const std::string& k) {
  if (k.empty()) return false;
  for (char c : k) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') ||
                    c == '.' || c == '-' || c == '_';
    if (!ok) return false;
  }
  return true;
}

double parse_real(const std::string& key, const std::string& text) {
  const std::string t = trim(text);
  if (t.empty()) throw ConfigError("key '" + key + "': empty number");
  char* end = nullptr;
  const double v = std::strtod(t.c_str(), &end);
  if (end != t.c_str() + t.size())
    throw ConfigError("key '" + key + "': cannot parse real '" + t + "'");
  return v;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

std::string join_reals(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ", ";
    out += format_double(v[i]);
  }
  return out;
}

}  // namespace

ConfigMap ConfigMap::parse(const std::string& text, const std::string& origin) {
  ConfigMap cfg;
  cfg.origin_ = origin;
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
    if (eq == std::string::npos)
      throw ConfigError(origin + ":" + std::to_string(lineno) +
                        ": expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (!valid_key(key))
      throw ConfigError(origin + ":" + std::to_string(lineno) +
                        ": bad key '" + key + "'");
    if (value.empty())
      throw ConfigError(origin + ":" + std::to_string(lineno) +
                        ": key '" + key + "' has an empty value");
    if (!cfg.raw_.emplace(key, value).second)
      throw ConfigError(origin + ":" + std::to_string(lineno) +
                        ": duplicate key '" + key + "'");
  }
  return cfg;
}

std::string ConfigMap::take(const std::string& key) {
  const auto it = raw_.find(key);
  if (it == raw_.end())
    throw ConfigError("missing required key: " + key);
  consumed_.insert(key);
  return it->second;
}

void ConfigMap::record(const std::string& key, const std::string& canonical) {
  resolved_[key] = canonical;
}

std::string ConfigMap::get_string(const std::string& key) {
  const std::string v = take(key);
  record(key, v);
  return v;
}

std::string ConfigMap::get_string(const std::string& key,
                                  const std::string& fallback) {
  const std::string v = has(key) ? take(key) : fallback;
  record(key, v);
  return v;
}

std::string ConfigMap::get_choice(const std::string& key,
                                  const std::vector<std::string>& allowed) {
  const std::string v = get_string(key);
  for (const auto& a : allowed)
    if (v == a) return v;
  std::string opts;
  for (const auto& a : allowed) opts += (opts.empty() ? "" : " | ") + a;
  throw ConfigError("key '" + key + "': unknown id '" + v +
                    "' (expected " + opts + ")");
}

std::string ConfigMap::get_choice(const std::string& key,
                                  const std::vector<std::string>& allowed,
                                  const std::string& fallback) {
  if (!has(key)) {
    record(key, fallback);
    return fallback;
  }
  return get_choice(key, allowed);
}

double ConfigMap::get_real(const std::string& key) {
  const double v = parse_real(key, take(key));
  record(key, format_double(v));
  return v;
}

double ConfigMap::get_real(const std::string& key, double fallback) {
  if (!has(key)) {
    record(key, format_double(fallback));
    return fallback;
  }
  return get_real(key);
}

int ConfigMap::get_int(const std::string& key) {
  const std::string t = trim(take(key));
  char* end = nullptr;
  const long v = std::strtol(t.c_str(), &end, 10);
  if (end != t.c_str() + t.size() || t.empty())
    throw ConfigError("key '" + key + "': cannot parse integer '" + t + "'");
  if (v < -2147483647L || v > 2147483647L)
    throw ConfigError("key '" + key + "': integer out of range");
  record(key, std::to_string(v));
  return static_cast<int>(v);
}

int ConfigMap::get_int(const std::string& key, int fallback) {
  if (!has(key)) {
    record(key, std::to_string(fallback));
    return fallback;
  }
  return get_int(key);
}

bool ConfigMap::get_bool(const std::string& key, bool fallback) {
  if (!has(key)) {
    record(key, fallback ? "true" : "false");
    return fallback;
  }
  const std::string v = take(key);
  bool out;
  if (v == "true" || v == "1")
    out = true;
  else if (v == "false" || v == "0")
    out = false;
  else
    throw ConfigError("key '" + key + "': expected true or false, got '" + v +
                      "'");
  record(key, out ? "true" : "false");
  return out;
}

std::uint64_t ConfigMap::get_seed(const std::string& key) {
  const std::string t = trim(take(key));
  char* end = nullptr;
  const unsigned long long v = std::strtoull(t.c_str(), &end, 10);
  if (end != t.c_str() + t.size() || t.empty() || t[0] == '-')
    throw ConfigError("key '" + key + "': cannot parse seed '" + t + "'");
  record(key, std::to_string(v));
  return static_cast<std::uint64_t>(v);
}

std::vector<double> ConfigMap::get_reals(const std::string& key,
                                         int expected) {
  const std::string raw = take(key);
  std::vector<double> out;
  for (const std::string& piece : split(raw, ','))
    out.push_back(parse_real(key, piece));
  if (expected >= 0 && static_cast<int>(out.size()) != expected)
    throw ConfigError("key '" + key + "': expected " +
                      std::to_string(expected) + " values, got " +
                      std::to_string(out.size()));
  record(key, join_reals(out));
  return out;
}

std::vector<double> ConfigMap::get_reals(const std::string& key, int expected,
                                         const std::vector<double>& fallback) {
  if (!has(key)) {
    record(key, join_reals(fallback));
    return fallback;
  }
  return get_reals(key, expected);
}

Vec ConfigMap::get_vec(const std::string& key, int expected) {
  const auto vals = get_reals(key, expected);
  Vec v(static_cast<int>(vals.size()));
  for (std::size_t i = 0; i < vals.size(); ++i)
    v[static_cast<int>(i)] = vals[i];
  return v;
}

Vec ConfigMap::get_vec(const std::string& key, int expected,
                       const Vec& fallback) {
  if (!has(key)) {
    std::vector<double> f(fallback.data(), fallback.data() + fallback.size());
    record(key, join_reals(f));
    return fallback;
  }
  return get_vec(key, expected);
}

Mat ConfigMap::get_mat(const std::string& key) {
  const std::string raw = take(key);
  std::vector<std::vector<double>> rows;
  for (const std::string& row : split(raw, ';')) {
    rows.emplace_back();
    for (const std::string& piece : split(row, ','))
      rows.back().push_back(parse_real(key, piece));
    if (rows.back().size() != rows.front().size())
      throw ConfigError("key '" + key + "': ragged matrix rows");
  }
  Mat m(static_cast<int>(rows.size()), static_cast<int>(rows[0].size()));
  std::string canonical;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (i) canonical += "; ";
    canonical += join_reals(rows[i]);
    for (std::size_t j = 0; j < rows[i].size(); ++j)
      m(static_cast<int>(i), static_cast<int>(j)) = rows[i][j];
  }
  record(key, canonical);
  return m;
}

void ConfigMap::finish() const {
  std::string stray;
  for (const auto& [key, value] : raw_)
    if (!consumed_.count(key)) stray += (stray.empty() ? "" : ", ") + key;
  if (!stray.empty())
    throw ConfigError(origin_ + ": unknown or unused key(s): " + stray +
                      " (unknown keys are hard errors; check spelling and "
                      "task applicability)");
}

std::string ConfigMap::resolved_text() const {
  std::string out;
  for (const auto& [key, value] : resolved_)
    out += key + " = " + value + "\n";
  return out;
}

namespace {

ConvexDomain read_domain(ConfigMap& cfg, int dim) {
  const std::string kind = cfg.get_choice(
      "problem.domain", {"whole-space", "box", "ball", "polyhedron"},
      "whole-space");
  if (kind == "box") {
    const Vec lo = cfg.get_vec("problem.domain.lo", dim);
    const Vec hi = cfg.get_vec("problem.domain.hi", dim);
    return ConvexDomain::box(lo, hi);
  }
  if (kind == "ball") {
    const Vec c = cfg.get_vec("problem.domain.center", dim);
    const double r = cfg.get_real("problem.domain.radius");
    return ConvexDomain::ball(c, r);
  }
  if (kind == "polyhedron") {
    const Mat normals = cfg.get_mat("problem.domain.normals");
    const Vec offsets =
        cfg.get_vec("problem.domain.offsets", static_cast<int>(normals.rows()));
    const Vec interior = cfg.get_vec("problem.domain.interior", dim);
    if (normals.cols() != dim)
      throw ConfigError("problem.domain.normals: need " +
                        std::to_string(dim) + " columns");
    return ConvexDomain::polyhedron(normals, offsets, interior);
  }
  return ConvexDomain::whole_space(dim);
}

DriftKernel read_drift(ConfigMap& cfg, int dim) {
  const std::string kind = cfg.get_choice(
      "problem.drift", {"zero", "constant", "mean-field-ou", "affine"},
      "zero");
  if (kind == "constant")
    return DriftKernel::constant(cfg.get_vec("problem.drift.c0", dim));
  if (kind == "mean-field-ou")
    return DriftKernel::mean_field_ou(dim, cfg.get_real("problem.drift.alpha"),
                                      cfg.get_real("problem.drift.beta"));
  if (kind == "affine")
    return DriftKernel::affine(cfg.get_vec("problem.drift.c0", dim),
                               cfg.get_real("problem.drift.cx"),
                               cfg.get_real("problem.drift.cy"));
  return DriftKernel::zero(dim);
}

DiffusionKernel read_diffusion(ConfigMap& cfg, int dim) {
  const std::string kind = cfg.get_choice(
      "problem.diffusion", {"zero", "constant", "scalar", "affine-diag"},
      "zero");
  if (kind == "constant") {
    const Mat m = cfg.get_mat("problem.diffusion.matrix");
    if (m.rows() != dim || m.cols() != dim)
      throw ConfigError("problem.diffusion.matrix: need a " +
                        std::to_string(dim) + "x" + std::to_string(dim) +
                        " matrix");
    return DiffusionKernel::constant(m);
  }
  if (kind == "scalar")
    return DiffusionKernel::scalar(dim, cfg.get_real("problem.diffusion.sigma"));
  if (kind == "affine-diag") {
    const Mat m = cfg.get_mat("problem.diffusion.sigma0");
    if (m.rows() != dim || m.cols() != dim)
      throw ConfigError("problem.diffusion.sigma0: need a " +
                        std::to_string(dim) + "x" + std::to_string(dim) +
                        " matrix");
    return DiffusionKernel::affine_diag(m, cfg.get_real("problem.diffusion.s1"),
                                        cfg.get_real("problem.diffusion.s2"));
  }
  return DiffusionKernel::zero(dim);
}

JumpAmplitudeKernel read_jump_kernel(ConfigMap& cfg, int dim) {
  const std::string kind =
      cfg.get_choice("problem.jump", {"none", "affine"}, "none");
  if (kind == "affine")
    return JumpAmplitudeKernel::affine(cfg.get_vec("problem.jump.c0", dim),
                                       cfg.get_real("problem.jump.c1"),
                                       cfg.get_real("problem.jump.c2"));
  return JumpAmplitudeKernel::none(dim);
}

JumpModel read_jump_model(ConfigMap& cfg) {
  const std::string kind =
      cfg.get_choice("problem.jumps", {"none", "finite"}, "none");
  if (kind == "none") return JumpModel();
  const auto marks = cfg.get_reals("problem.jumps.marks", -1);
  const int m = static_cast<int>(marks.size());
  const auto weights = cfg.get_reals("problem.jumps.weights", m);
  const auto gamma = cfg.get_reals("problem.jumps.gamma", m);
  return JumpModel::finite(marks, weights, gamma);
}

ConcaveModulus read_modulus(ConfigMap& cfg) {
  const std::string kind = cfg.get_choice(
      "problem.modulus", {"linear", "log-cap", "power"}, "linear");
  if (kind == "log-cap")
    return ConcaveModulus::log_cap(cfg.get_real("problem.modulus.delta"));
  if (kind == "power")
    return ConcaveModulus::power(cfg.get_real("problem.modulus.scale", 1.0),
                                 cfg.get_real("problem.modulus.exponent"));
  return ConcaveModulus::linear(cfg.get_real("problem.modulus.slope", 1.0));
}

DecayProfile read_decay(ConfigMap& cfg, const std::string& base) {
  const std::string kind = cfg.get_choice(base, {"zero", "power"}, "zero");
  if (kind == "power")
    return DecayProfile::power(cfg.get_real(base + ".c"),
                               cfg.get_real(base + ".p"));
  return DecayProfile::zero();
}

DirectionField read_direction(ConfigMap& cfg, const std::string& base) {
  const std::string kind = cfg.get_choice(base, {"none", "sine"}, "none");
  if (kind == "sine")
    return DirectionField::sine(cfg.get_real(base + ".phase", 0.0));
  return DirectionField::none();
}

PerturbationFamily read_family(ConfigMap& cfg) {
  PerturbationFamily f;
  f.rho_b = read_decay(cfg, "problem.rho-b");
  f.rho_sigma = read_decay(cfg, "problem.rho-sigma");
  f.rho_g = read_decay(cfg, "problem.rho-g");
  f.h_b = read_direction(cfg, "problem.h-b");
  f.h_sigma = read_direction(cfg, "problem.h-sigma");
  f.h_g = read_direction(cfg, "problem.h-g");
  return f;
}

Event read_event(ConfigMap& cfg, int dim) {
  const std::string kind = cfg.get_choice(
      "event.kind", {"terminal-point", "halfspace", "sup-norm"});
  if (kind == "terminal-point")
    return Event::terminal_point(cfg.get_vec("event.target", dim));
  if (kind == "halfspace")
    return Event::halfspace(cfg.get_vec("event.normal", dim),
                            cfg.get_real("event.offset"));
  return Event::sup_norm(cfg.get_real("event.threshold"));
}

// Control table in the shape the rate task exports: header
// step,time,phi0..[,psi0..], one numeric row per step.  Either block may be
// absent; both come back as (components x steps) matrices.
struct ControlTable {
  Mat phi;
  Mat psi;
};

ControlTable load_control_table(const std::string& path) {
  std::string text;
  try {
    text = read_text_file(path);
  } catch (const std::runtime_error& e) {
    throw ConfigError(std::string("control file: ") + e.what());
  }
  std::vector<std::vector<std::string>> lines;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string::npos) end = text.size();
    std::string line = text.substr(pos, end - pos);
    pos = end + 1;
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::size_t c = 0;
    while (true) {
      const std::size_t comma = line.find(',', c);
      cells.push_back(line.substr(c, comma - c));
      if (comma == std::string::npos) break;
      c = comma + 1;
    }
    lines.push_back(std::move(cells));
  }
  if (lines.empty()) throw ConfigError(path + ": empty control file");
  const auto& header = lines.front();
  if (header.size() < 3 || header[0] != "step" || header[1] != "time")
    throw ConfigError(path + ": control file must start step,time,phi...");
  int d = 0, marks = 0;
  std::size_t col = 2;
  while (col < header.size() && header[col] == "phi" + std::to_string(d)) {
    ++d;
    ++col;
  }
  while (col < header.size() && header[col] == "psi" + std::to_string(marks)) {
    ++marks;
    ++col;
  }
  if (col != header.size())
    throw ConfigError(path + ": unrecognized control column '" + header[col] +
                      "'");
  const int n = static_cast<int>(lines.size()) - 1;
  ControlTable table;
  table.phi = Mat::Zero(d, n);
  table.psi = Mat::Zero(marks, n);
  for (int k = 0; k < n; ++k) {
    const auto& row = lines[static_cast<std::size_t>(k) + 1];
    if (row.size() != header.size())
      throw ConfigError(path + ": row " + std::to_string(k + 1) +
                        " has the wrong width");
    for (int i = 0; i < d; ++i)
      table.phi(i, k) = parse_real(path + " phi" + std::to_string(i),
                                   row[static_cast<std::size_t>(2 + i)]);
    for (int m = 0; m < marks; ++m)
      table.psi(m, k) =
          parse_real(path + " psi" + std::to_string(m),
                     row[static_cast<std::size_t>(2 + d + m)]);
  }
  return table;
}

Control read_phi(ConfigMap& cfg, int dim, int n_steps) {
  const std::string kind =
      cfg.get_choice("control.phi", {"zero", "constant", "file"}, "zero");
  if (kind == "constant")
    return Control::constant(cfg.get_vec("control.phi.value", dim), n_steps);
  if (kind == "file") {
    const ControlTable table =
        load_control_table(cfg.get_string("control.phi.file"));
    if (table.phi.rows() != dim || table.phi.cols() != n_steps)
      throw ConfigError("control.phi.file: need " + std::to_string(dim) +
                        " phi components over " + std::to_string(n_steps) +
                        " steps");
    Control phi(dim, n_steps);
    phi.values() = table.phi;
    return phi;
  }
  return Control::zero(dim, n_steps);
}

// LDP jump controls default to the unit field (zero entropy cost); the
// moderate skeleton's signed field defaults to zero.
ControlField read_psi(ConfigMap& cfg, int n_steps, int n_marks,
                      double default_value) {
  const std::string def = default_value == 1.0 ? "unit" : "zero";
  const std::string kind =
      cfg.get_choice("control.psi", {"zero", "unit", "constant", "file"}, def);
  if (kind == "file") {
    const ControlTable table =
        load_control_table(cfg.get_string("control.psi.file"));
    if (table.psi.rows() != n_marks || table.psi.cols() != n_steps)
      throw ConfigError("control.psi.file: need " + std::to_string(n_marks) +
                        " psi components over " + std::to_string(n_steps) +
                        " steps");
    ControlField psi(n_steps, n_marks, 0.0);
    psi.values() = table.psi;
    return psi;
  }
  double fill = default_value;
  if (kind == "zero") fill = 0.0;
  if (kind == "unit") fill = 1.0;
  ControlField psi(n_steps, n_marks, fill);
  if (kind == "constant") {
    const auto vals = cfg.get_reals("control.psi.value", n_marks);
    for (int m = 0; m < n_marks; ++m)
      for (int k = 0; k < n_steps; ++k)
        psi.set(k, m, vals[static_cast<std::size_t>(m)]);
  }
  return psi;
}

MdpConstraint read_constraint(ConfigMap& cfg, const std::string& key) {
  const std::string kind =
      cfg.get_choice(key, {"none", "translated-domain"}, "none");
  return kind == "none" ? MdpConstraint::None : MdpConstraint::TranslatedDomain;
}

TaskKind task_from_name(const std::string& name) {
  if (name == "simulate") return TaskKind::Simulate;
  if (name == "limit") return TaskKind::Limit;
  if (name == "skeleton-ldp") return TaskKind::SkeletonLdp;
  if (name == "skeleton-mdp") return TaskKind::SkeletonMdp;
  if (name == "rate") return TaskKind::Rate;
  if (name == "tail") return TaskKind::Tail;
  if (name == "converge") return TaskKind::Converge;
  if (name == "check-hypotheses") return TaskKind::CheckHypotheses;
  return TaskKind::Bihari;
}

}  // namespace

Experiment resolve_experiment(ConfigMap& cfg) {
  Experiment ex;
  ex.task_name = cfg.get_choice(
      "task", {"simulate", "limit", "skeleton-ldp", "skeleton-mdp", "rate",
               "tail", "converge", "check-hypotheses", "bihari"});
  ex.task = task_from_name(ex.task_name);

  ex.seed = cfg.get_seed("run.seed");
  ex.problem.T = cfg.get_real("run.t");
  ex.problem.dt = cfg.get_real("run.dt");
  TimeGrid grid(ex.problem.T, ex.problem.dt);  // rejects dt not dividing T
  const int n_steps = grid.n_steps;

  ex.out_dir = cfg.get_string("output.dir", "out");
  ex.prefix = cfg.get_string("output.prefix", "mmv");

  const bool has_problem = ex.task != TaskKind::Bihari;
  int dim = 0;
  if (has_problem) {
    dim = cfg.get_int("problem.dim");
    if (dim < 1) throw ConfigError("problem.dim: must be >= 1");
    ex.problem.x0 = cfg.get_vec("problem.x0", dim);
    ex.problem.domain = read_domain(cfg, dim);
    ex.problem.coeffs.drift = read_drift(cfg, dim);
    ex.problem.coeffs.diffusion = read_diffusion(cfg, dim);
    ex.problem.coeffs.jump = read_jump_kernel(cfg, dim);
    ex.problem.jumps = read_jump_model(cfg);
    ex.problem.coeffs.growth_L = cfg.get_real("problem.growth-l", 1.0);
  }

  const bool noisy = ex.task == TaskKind::Simulate ||
                     ex.task == TaskKind::Tail ||
                     ex.task == TaskKind::Converge ||
                     ex.task == TaskKind::CheckHypotheses;
  if (noisy) ex.problem.family = read_family(cfg);

  if (ex.task == TaskKind::CheckHypotheses || ex.task == TaskKind::Bihari)
    ex.problem.coeffs.modulus = read_modulus(cfg);

  switch (ex.task) {
    case TaskKind::Simulate:
      ex.epsilon = cfg.get_real("run.epsilon");
      ex.particles = cfg.get_int("run.particles", 1);
      break;
    case TaskKind::Limit:
      break;
    case TaskKind::SkeletonLdp:
      ex.phi = read_phi(cfg, dim, n_steps);
      if (!ex.problem.jumps.empty())
        ex.psi = read_psi(cfg, n_steps, ex.problem.jumps.n_marks(), 1.0);
      break;
    case TaskKind::SkeletonMdp:
      ex.phi = read_phi(cfg, dim, n_steps);
      if (!ex.problem.jumps.empty())
        ex.psi = read_psi(cfg, n_steps, ex.problem.jumps.n_marks(), 0.0);
      ex.skeleton_constraint = read_constraint(cfg, "skeleton.constraint");
      break;
    case TaskKind::Rate: {
      ex.event = read_event(cfg, dim);
      ex.rate.event = ex.event;
      const std::string regime =
          cfg.get_choice("rate.regime", {"ldp", "mdp"}, "ldp");
      ex.rate.regime = regime == "ldp" ? Regime::LDP : Regime::MDP;
      ex.rate.control_stride = cfg.get_int("rate.stride", 1);
      ex.rate.iterations = cfg.get_int("rate.iterations", 60);
      ex.rate.restarts = cfg.get_int("rate.restarts", 4);
      ex.rate.penalty_rounds = cfg.get_int("rate.penalty-rounds", 4);
      ex.rate.penalty0 = cfg.get_real("rate.penalty0", 100.0);
      ex.rate.residual_tol = cfg.get_real("rate.residual-tol", 1e-3);
      ex.rate.half_q2 = cfg.get_bool("rate.half-q2", false);
      if (ex.rate.regime == Regime::MDP)
        ex.rate.mdp_constraint = read_constraint(cfg, "rate.constraint");
      ex.rate.seed = ex.seed;
      break;
    }
    case TaskKind::Tail: {
      ex.event = read_event(cfg, dim);
      ex.eps_grid = cfg.get_reals("run.epsilon-grid", -1);
      ex.replicas = cfg.get_int("run.replicas");
      const std::string regime =
          cfg.get_choice("tail.regime", {"ldp", "mdp"}, "ldp");
      ex.tail_regime = regime == "ldp" ? Regime::LDP : Regime::MDP;
      if (ex.tail_regime == Regime::MDP) ex.theta = cfg.get_real("run.theta");
      break;
    }
    case TaskKind::Converge: {
      const std::string mode = cfg.get_choice(
          "converge.mode", {"limit", "rate", "controlled"}, "limit");
      ex.converge_mode = mode == "limit"  ? StudyMode::Limit
                         : mode == "rate" ? StudyMode::Rate
                                          : StudyMode::Controlled;
      ex.eps_grid = cfg.get_reals("run.epsilon-grid", -1);
      ex.replicas = cfg.get_int("run.replicas");
      if (ex.converge_mode == StudyMode::Controlled) {
        ex.phi = read_phi(cfg, dim, n_steps);
        if (!ex.problem.jumps.empty())
          ex.psi = read_psi(cfg, n_steps, ex.problem.jumps.n_marks(), 1.0);
      }
      break;
    }
    case TaskKind::CheckHypotheses: {
      ex.epsilon = cfg.get_real("run.epsilon", 0.1);
      ex.check.samples = cfg.get_int("check.samples", 200);
      ex.check.measure_particles = cfg.get_int("check.particles", 8);
      ex.check.sample_scale = cfg.get_real("check.scale", 2.0);
      ex.check.seed = ex.seed;
      ex.check.theta = cfg.get_real("check.theta", 0.25);
      ex.check.lip_L = cfg.get_real("check.lip-l", -1.0);
      ex.check.grad_L = cfg.get_real("check.grad-l", -1.0);
      ex.check.grad_q = cfg.get_real("check.grad-q", 2.0);
      ex.check.eps_grid =
          cfg.get_reals("check.epsilon-grid", -1, {0.4, 0.2, 0.1, 0.05});
      ex.check_ball_center =
          cfg.get_vec("check.ball-center", dim, ex.problem.domain.anchor());
      ex.check_ball_radius = cfg.get_real("check.ball-radius", 0.25);
      ex.check_mu = cfg.get_real("check.mu", 1.0);
      break;
    }
    case TaskKind::Bihari: {
      ex.bihari.C = cfg.get_real("bihari.c");
      ex.bihari.rho = ex.problem.coeffs.modulus;
      ex.bihari.grid = grid;
      auto q = cfg.get_reals("bihari.q", -1);
      if (static_cast<int>(q.size()) == 1)
        q.assign(static_cast<std::size_t>(n_steps), q[0]);
      if (static_cast<int>(q.size()) != n_steps)
        throw ConfigError("bihari.q: expected 1 or " +
                          std::to_string(n_steps) + " values");
      ex.bihari.q = std::move(q);
      break;
    }
  }

  cfg.finish();
  return ex;
}

}  // namespace mmv
