// Desk-scale acceptance drive.  Ten independent checks, one verdict line
// each; the process exits nonzero if any of them fails.  argv[1] names the
// CLI binary, used by the reproducibility check.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "mmv/analysis.hpp"
#include "mmv/config.hpp"
#include "mmv/dynamics.hpp"
#include "mmv/geometry.hpp"
#include "mmv/io.hpp"
#include "mmv/jumps.hpp"
#include "mmv/rate.hpp"
#include "mmv/rng.hpp"
#include "mmv/skeleton.hpp"

using namespace mmv;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;

  void fail(const std::string& why) {
    pass = false;
    if (!detail.empty()) detail += "; ";
    detail += why;
  }
  void note(const std::string& what) {
    if (!detail.empty()) detail += "; ";
    detail += what;
  }
  void expect(bool ok, const std::string& why) {
    if (!ok) fail(why);
  }
};

std::string fmt(double v) { return format_double(v); }

double gauss_tail(double s) { return 0.5 * std::erfc(s / std::sqrt(2.0)); }

Vec vec1(double x) {
  Vec v(1);
  v[0] = x;
  return v;
}

// ---------------------------------------------------------------- check 1

void check_domain(const ConvexDomain& domain, const std::string& name,
                  double scale, Outcome& out) {
  const int d = domain.dim();
  const int n = 1000;
  RngStream rng(derive_seed(1234, name, 0));
  std::vector<Vec> points(n), proj(n);
  for (int i = 0; i < n; ++i) {
    Vec x(d);
    for (int j = 0; j < d; ++j) x[j] = scale * rng.normal();
    points[i] = x;
    proj[i] = domain.project(x);
  }

  double worst_idem = 0.0, worst_exp = 0.0, worst_kkt = 0.0;
  for (int i = 0; i < n; ++i) {
    worst_idem =
        std::max(worst_idem, (domain.project(proj[i]) - proj[i]).norm());
    if (i + 1 < n)
      worst_exp = std::max(worst_exp,
                           (proj[i] - proj[i + 1]).norm() -
                               (points[i] - points[i + 1]).norm());
    // Variational characterization of the metric projection: the residual
    // direction makes a non-positive inner product with every feasible
    // displacement.
    const Vec v = points[i] - proj[i];
    if (v.norm() > 0.0)
      for (int j = 0; j < n; ++j)
        worst_kkt = std::max(worst_kkt, v.dot(proj[j] - proj[i]));
  }
  out.expect(worst_idem <= 1e-9,
             name + ": projection not idempotent, drift " + fmt(worst_idem));
  out.expect(worst_exp <= 1e-9,
             name + ": projection expanded a pair by " + fmt(worst_exp));
  out.expect(worst_kkt <= 1e-9,
             name + ": optimality residual " + fmt(worst_kkt));

  const auto graph = domain.sample_graph(n, derive_seed(1234, name, 1));
  double worst_mono = 0.0;
  for (std::size_t i = 0; i < graph.size(); ++i)
    for (std::size_t j = i + 1; j < graph.size(); ++j)
      worst_mono = std::max(
          worst_mono,
          -(graph[i].x - graph[j].x).dot(graph[i].y - graph[j].y));
  out.expect(worst_mono <= 1e-12,
             name + ": graph monotonicity violated by " + fmt(worst_mono));
}

Outcome check_geometry() {
  Outcome out;
  Vec lo(2), hi(2), center(2);
  lo << -1.0, -0.5;
  hi << 0.75, 1.2;
  center << 0.3, -0.2;
  check_domain(ConvexDomain::box(lo, hi), "box", 3.0, out);
  check_domain(ConvexDomain::ball(center, 1.1), "ball", 3.0, out);
  Mat normals(3, 2);
  normals << 1.0, 0.0, 0.0, 1.0, -std::sqrt(0.5), -std::sqrt(0.5);
  Vec offsets(3);
  offsets << 1.0, 1.0, 0.6;
  check_domain(ConvexDomain::polyhedron(normals, offsets, Vec::Zero(2)),
               "polyhedron", 3.0, out);
  check_domain(ConvexDomain::whole_space(3), "whole-space", 3.0, out);
  return out;
}

// ---------------------------------------------------------------- check 2

Outcome check_energy_identities() {
  Outcome out;
  out.expect(ell(1.0) == 0.0, "ell(1) != 0");
  out.expect(ell(0.0) == 1.0, "ell(0) != 1");

  const TimeGrid grid(1.0, 0.1);
  out.expect(q1(Control::zero(2, grid.n_steps), grid) == 0.0,
             "quadratic energy of the null control is not exactly zero");
  const JumpModel model =
      JumpModel::finite({-1.0, 1.0}, {1.0, 2.0}, {0.5, 0.7});
  out.expect(q2(ControlField(grid.n_steps, 2, 1.0), model, grid) == 0.0,
             "entropy energy of the unit field is not exactly zero");

  double worst = 0.0;
  for (int i = 0; i + 2 <= 600; i += 1) {
    const double a = 0.01 * i, b = 0.01 * (i + 2);
    worst = std::max(worst, ell(0.01 * (i + 1)) - 0.5 * (ell(a) + ell(b)));
  }
  out.expect(worst <= 1e-12,
             "entropy integrand convexity violated by " + fmt(worst));
  return out;
}

// ---------------------------------------------------------------- check 3

Outcome check_bihari() {
  Outcome out;
  const int n = 1000;
  const double dt = 1e-3;

  BihariSpec lin;
  lin.C = 0.3;
  lin.rho = ConcaveModulus::linear(0.7);
  lin.grid = TimeGrid(1.0, dt);
  lin.q.resize(n);
  for (int k = 0; k < n; ++k) lin.q[k] = 0.5 + 0.25 * (k * dt);
  const auto g = bihari_bound(lin);
  double cum = 0.0, worst_lin = 0.0;
  for (int k = 0; k <= n; ++k) {
    const double exact = lin.C * std::exp(0.7 * cum);
    worst_lin = std::max(worst_lin, std::abs(g[k] - exact) / exact);
    if (k < n) cum += lin.q[k] * dt;
  }
  out.expect(worst_lin <= 1e-9,
             "linear modulus drifts from the exponential by " +
                 fmt(worst_lin));

  BihariSpec root;
  root.C = 0.25;
  root.rho = ConcaveModulus::power(1.0, 0.5);
  root.grid = TimeGrid(1.0, dt);
  root.q.assign(n, 1.0);
  const auto h = bihari_bound(root);
  double worst_root = 0.0;
  for (int k = 0; k <= n; ++k) {
    const double s = 0.5 + 0.5 * (k * dt);  // sqrt(C) + (1/2) int q
    worst_root = std::max(worst_root, std::abs(h[k] - s * s));
  }
  out.expect(worst_root <= 1e-8,
             "square-root modulus misses its closed form by " +
                 fmt(worst_root));
  return out;
}

// ---------------------------------------------------------------- check 4

// Linear deviation dynamics around a stationary limit have an exact per-cell
// flow: V_{k+1} = e^{a dt} V_k + (e^{a dt} - 1)/a * c_k with the same frozen
// forcing the solver uses, so the Euler error is measurable directly.
double mdp_sup_error(double dt) {
  KernelCoefficients coeffs;
  coeffs.drift = DriftKernel::affine(Vec::Zero(1), -1.1, 0.4);
  coeffs.diffusion = DiffusionKernel::scalar(1, 0.8);
  coeffs.jump = JumpAmplitudeKernel::affine(vec1(0.3), 0.2, 0.1);
  const JumpModel jumps =
      JumpModel::finite({-1.0, 1.0}, {1.0, 2.0}, {0.5, 0.7});
  const ConvexDomain domain = ConvexDomain::whole_space(1);

  const PathBundle limit = solve_limit(coeffs, domain, Vec::Zero(1), 1.0, dt);
  const int n = limit.grid.n_steps;
  Control phi(1, n);
  ControlField psi(n, 2, 0.0);
  for (int k = 0; k < n; ++k) {
    const double t = k * dt;
    phi.set(k, vec1(std::cos(2.0 * M_PI * t)));
    for (int m = 0; m < 2; ++m) psi.set(k, m, 0.4 * std::sin(t + 0.5 + m));
  }
  const SkeletonSolution sol = solve_mdp_skeleton(
      coeffs, domain, jumps, limit, phi, psi, MdpConstraint::None);

  const double a = -1.1;
  const double grow = std::exp(a * dt);
  const double gain = (grow - 1.0) / a;
  double v = 0.0, worst = 0.0;
  for (int k = 0; k < n; ++k) {
    double c = 0.8 * phi.at(k)[0];
    for (int m = 0; m < 2; ++m)
      c += psi.at(k, m) * jumps.weight(m) * jumps.gamma(m) * 0.3;
    v = grow * v + gain * c;
    worst = std::max(worst, std::abs(sol.path(0, k + 1) - v));
  }
  return worst;
}

Outcome check_skeleton_oracles() {
  Outcome out;
  const double e1 = mdp_sup_error(0.02);
  const double e2 = mdp_sup_error(0.01);
  const double e3 = mdp_sup_error(0.005);
  const double order1 = std::log2(e1 / e2);
  const double order2 = std::log2(e2 / e3);
  out.expect(order1 >= 0.9 && order2 >= 0.9,
             "deviation solver order under halving: " + fmt(order1) + ", " +
                 fmt(order2));
  out.note("orders " + fmt(order1) + "/" + fmt(order2));

  // Minimum-energy steering: the descent minimizer must reproduce the exact
  // Gramian solve on randomized interior instances.
  double worst_rel = 0.0;
  for (int i = 0; i < 12; ++i) {
    RngStream rng(derive_seed(777, "lq", i));
    const int d = 1 + (i % 2);
    KernelCoefficients coeffs;
    Vec c0(d), x0(d), v(d);
    for (int j = 0; j < d; ++j) {
      c0[j] = 0.3 * rng.normal();
      x0[j] = 0.4 * rng.normal();
      v[j] = 0.3 + 0.4 * rng.uniform01();
    }
    coeffs.drift = DriftKernel::affine(c0, -(0.3 + 1.2 * rng.uniform01()),
                                       0.2 * rng.uniform01());
    coeffs.diffusion = DiffusionKernel::scalar(d, 0.5 + 0.5 * rng.uniform01());
    JumpModel jumps;
    if (i % 3 != 0) {
      Vec j0(d);
      for (int j = 0; j < d; ++j) j0[j] = 0.3 * rng.normal();
      coeffs.jump = JumpAmplitudeKernel::affine(j0, 0.1, 0.05);
      jumps = JumpModel::finite({-1.0, 1.0}, {1.0, 1.5}, {0.4, 0.8});
    }
    const ConvexDomain domain = ConvexDomain::whole_space(d);
    const PathBundle limit = solve_limit(coeffs, domain, x0, 1.0, 0.1);

    const double oracle = lq_from_problem(coeffs, jumps, limit, v).value;

    RateQuery query;
    query.regime = Regime::MDP;
    query.event = Event::terminal_point(v);
    query.iterations = 80;
    query.restarts = 3;
    query.penalty_rounds = 6;
    query.penalty0 = 50.0;
    query.residual_tol = 1e-4;
    query.seed = 100 + i;
    const RateResult res = minimize_rate(query, coeffs, domain, jumps, limit);

    const double rel = std::abs(res.value - oracle) / oracle;
    worst_rel = std::max(worst_rel, rel);
    if (rel > 1e-3) {
      out.fail("instance " + std::to_string(i) + ": descent " +
               fmt(res.value) + " vs exact " + fmt(oracle));
      break;
    }
  }
  out.note("worst steering mismatch " + fmt(worst_rel));
  return out;
}

// ---------------------------------------------------------------- check 5

ProblemSpec gaussian_problem(double dt) {
  ProblemSpec p;
  p.coeffs.drift = DriftKernel::zero(1);
  p.coeffs.diffusion = DiffusionKernel::scalar(1, 1.0);
  p.coeffs.jump = JumpAmplitudeKernel::none(1);
  p.domain = ConvexDomain::whole_space(1);
  p.x0 = Vec::Zero(1);
  p.T = 1.0;
  p.dt = dt;
  return p;
}

Outcome check_gaussian_rate() {
  Outcome out;

  // Variational side: cheapest way to push sqrt(eps) W past level 1.
  {
    const ProblemSpec p = gaussian_problem(0.05);
    const PathBundle limit = solve_limit(p.coeffs, p.domain, p.x0, p.T, p.dt);
    RateQuery query;
    query.event = Event::halfspace(vec1(1.0), 1.0);
    query.iterations = 80;
    query.restarts = 3;
    query.seed = 21;
    const RateResult res =
        minimize_rate(query, p.coeffs, p.domain, JumpModel(), limit);
    out.expect(std::abs(res.value - 0.5) <= 1e-3,
               "variational level cost " + fmt(res.value) + " not 0.500");
    out.note("rate " + fmt(res.value));
  }

  // Sampling side: hit frequencies against the exact normal tail.
  const Event event = Event::halfspace(vec1(1.0), 1.0);
  {
    const TailEstimate est =
        estimate_tail(gaussian_problem(0.25), event, {0.5, 0.25}, 1000000,
                      nullptr, 515151, 1);
    for (const TailPoint& pt : est.points) {
      const double p = gauss_tail(1.0 / std::sqrt(pt.epsilon));
      const double sigma = std::sqrt(p * (1.0 - p) / pt.replicas);
      out.expect(std::abs(pt.p_hat - p) <= 3.0 * sigma,
                 "eps " + fmt(pt.epsilon) + ": hit rate " + fmt(pt.p_hat) +
                     " vs exact " + fmt(p));
    }
  }

  // Extrapolation side: the fitted intercept approaches the rate.
  {
    const TailEstimate est =
        estimate_tail(gaussian_problem(0.25), event, {0.4, 0.25, 0.15, 0.1},
                      200000, nullptr, 626262, 1);
    const double got = -est.intercept;
    out.expect(std::abs(got - 0.5) <= 0.15,
               "extrapolated intercept " + fmt(got) + " not within 30%");
    out.note("intercept " + fmt(got));
  }
  return out;
}

// ---------------------------------------------------------------- check 6

ProblemSpec lipschitz_problem(double dt) {
  ProblemSpec p;
  p.coeffs.drift = DriftKernel::mean_field_ou(1, 1.0, 0.4);
  p.coeffs.diffusion = DiffusionKernel::scalar(1, 0.8);
  p.coeffs.jump = JumpAmplitudeKernel::affine(vec1(0.25), 0.05, 0.0);
  p.jumps = JumpModel::finite({-1.0, 1.0}, {0.5, 0.5}, {0.3, 0.3});
  p.domain = ConvexDomain::ball(Vec::Zero(1), 8.0);
  p.x0 = vec1(0.6);
  p.T = 1.0;
  p.dt = dt;
  return p;
}

Outcome check_convergence_lemmas() {
  Outcome out;
  const StudyReport rep =
      convergence_study(lipschitz_problem(1e-3), {0.2, 0.1, 0.05, 0.025},
                        2000, StudyMode::Limit, 99, nullptr, nullptr, 1);
  out.expect(std::abs(rep.slope - 1.0) <= 0.2,
             "mean-square slope " + fmt(rep.slope) + " not 1.0 +- 0.2");
  out.expect(rep.strictly_decreasing,
             "mean-square distances not strictly decreasing");
  out.note("slope " + fmt(rep.slope));
  return out;
}

// ---------------------------------------------------------------- check 7

Outcome check_controlled_limit() {
  Outcome out;
  const ProblemSpec p = lipschitz_problem(0.01);
  const Control phi = Control::constant(vec1(0.9), 100);
  const ControlField psi(100, 2, 1.3);
  const StudyReport rep =
      convergence_study(p, {0.2, 0.1, 0.05, 0.025}, 400,
                        StudyMode::Controlled, 424242, &phi, &psi, 1);
  out.expect(rep.strictly_decreasing,
             "controlled distances to the skeleton not strictly decreasing");
  std::string vals;
  for (const StudyPoint& pt : rep.points)
    vals += (vals.empty() ? "" : " > ") + fmt(pt.mean_sq_sup);
  out.note(vals);
  return out;
}

// ---------------------------------------------------------------- check 8

void check_bundle(const ProblemSpec& p, const PathBundle& b,
                  const std::string& name, double r, double mu,
                  Outcome& out) {
  double worst_out = 0.0, max_norm = 0.0;
  for (int i = 0; i < b.n_particles(); ++i)
    for (int k = 0; k <= b.grid.n_steps; ++k) {
      const Vec x = b.states[static_cast<std::size_t>(i)].col(k);
      worst_out = std::max(worst_out, (x - p.domain.project(x)).norm());
      max_norm = std::max(max_norm, x.norm());
    }
  out.expect(worst_out <= 1e-9,
             name + ": state escaped the domain by " + fmt(worst_out));

  const double tol = 10.0 * p.dt * (1.0 + max_norm);
  const auto graph = p.domain.sample_graph(400, derive_seed(5, name, 0));
  for (int i = 0; i < b.n_particles(); ++i) {
    const auto& si = b.states[static_cast<std::size_t>(i)];
    const auto& ki = b.k_increments[static_cast<std::size_t>(i)];
    const MonotonicityReport mono =
        check_pair_monotonicity(si, ki, p.dt, graph, tol);
    out.expect(mono.pass, name + ": graph monotonicity failed at step " +
                              std::to_string(mono.worst_step));
    for (int j = i + 1; j < b.n_particles(); ++j) {
      const MonotonicityReport pair = check_pair_monotonicity(
          si, ki, b.states[static_cast<std::size_t>(j)],
          b.k_increments[static_cast<std::size_t>(j)], p.dt, tol);
      out.expect(pair.pass, name + ": pairwise monotonicity failed");
    }
    const VariationBoundReport vb = check_variation_bound(
        p.domain, si, ki, p.dt, Vec::Zero(p.domain.dim()), r, mu);
    out.expect(vb.pass, name + ": correction variation bound failed, slack " +
                            fmt(vb.slack));
  }
}

Outcome check_constrained_dynamics() {
  Outcome out;

  ProblemSpec box;
  Vec lo(2), hi(2), push(2);
  lo << -0.5, -0.5;
  hi << 0.5, 0.5;
  push << 1.0, 0.7;
  box.coeffs.drift = DriftKernel::constant(push);
  box.coeffs.diffusion = DiffusionKernel::scalar(2, 0.4);
  box.coeffs.jump = JumpAmplitudeKernel::affine(0.1 * Vec::Ones(2), 0.0, 0.0);
  box.jumps = JumpModel::finite({1.0}, {1.0}, {0.5});
  box.domain = ConvexDomain::box(lo, hi);
  box.x0 = Vec::Zero(2);
  box.T = 1.0;
  box.dt = 0.01;
  const PathBundle bb = simulate_particles(box.coeffs, box.family, box.domain,
                                           box.jumps, box.x0, box.T, box.dt,
                                           0.3, 4, 808);
  check_bundle(box, bb, "box", 0.2, 5.0, out);

  ProblemSpec ball;
  ball.coeffs.drift = DriftKernel::affine(Vec::Zero(2), 1.2, 0.0);
  ball.coeffs.diffusion = DiffusionKernel::scalar(2, 0.5);
  ball.coeffs.jump = JumpAmplitudeKernel::none(2);
  ball.domain = ConvexDomain::ball(Vec::Zero(2), 1.0);
  ball.x0 = vec1(0.3).replicate(2, 1);
  ball.T = 1.0;
  ball.dt = 0.01;
  const PathBundle pb =
      simulate_particles(ball.coeffs, ball.family, ball.domain, ball.jumps,
                         ball.x0, ball.T, ball.dt, 0.3, 4, 909);
  check_bundle(ball, pb, "ball", 0.3, 5.0, out);
  return out;
}

// ---------------------------------------------------------------- check 9

Outcome check_moderate_scaling() {
  Outcome out;
  const ModerateScale scale(0.25);

  // Terminal variance of the rescaled deviation.
  {
    const ProblemSpec p = gaussian_problem(0.05);
    const PathBundle limit = solve_limit(p.coeffs, p.domain, p.x0, p.T, p.dt);
    const double eps = 0.04;
    const int n_rep = 10000;
    double sum = 0.0, sumsq = 0.0;
    for (int r = 0; r < n_rep; ++r) {
      const PathBundle b = simulate_particles(
          p.coeffs, p.family, p.domain, p.jumps, p.x0, p.T, p.dt, eps, 1,
          derive_seed(31337, "var", r));
      const auto dev = moderate_rescale(b, limit, scale);
      const double m = dev[0](0, b.grid.n_steps);
      sum += m;
      sumsq += m * m;
    }
    const double mean = sum / n_rep;
    const double var = (sumsq - n_rep * mean * mean) / (n_rep - 1);
    const double target = std::sqrt(eps) * 1.0;
    const double sigma = var * std::sqrt(2.0 / (n_rep - 1));
    out.expect(std::abs(var - target) <= 4.0 * sigma,
               "deviation variance " + fmt(var) + " vs " + fmt(target));
    out.note("variance " + fmt(var) + " target " + fmt(target));
  }

  // Tail extrapolation at the moderate speed.
  {
    const Event event = Event::halfspace(vec1(1.0), 1.0);
    const TailEstimate est =
        estimate_tail(gaussian_problem(0.25), event, {0.04, 0.02, 0.01},
                      200000, &scale, 737373, 1);
    const double got = -est.intercept;
    out.expect(std::abs(got - 0.5) <= 0.15,
               "moderate intercept " + fmt(got) + " not within 30% of 0.5");
    out.note("intercept " + fmt(got));
  }
  return out;
}

// --------------------------------------------------------------- check 10

int run_cli(const std::string& bin, const std::string& args) {
  const std::string cmd = bin + " " + args + " > /dev/null 2>&1";
  return std::system(cmd.c_str());
}

Outcome check_reproducibility(const std::string& bin) {
  Outcome out;
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "mmv-acceptance-repro";
  fs::remove_all(dir);
  fs::create_directories(dir);

  const std::string cfg = (dir / "exp.cfg").string();
  write_text_file(cfg,
                  "task = converge\n"
                  "run.seed = 2024\n"
                  "run.t = 0.5\n"
                  "run.dt = 0.05\n"
                  "run.epsilon-grid = 0.2, 0.1\n"
                  "run.replicas = 24\n"
                  "problem.dim = 1\n"
                  "problem.x0 = 0.3\n"
                  "problem.domain = ball\n"
                  "problem.domain.center = 0\n"
                  "problem.domain.radius = 4\n"
                  "problem.drift = mean-field-ou\n"
                  "problem.drift.alpha = 1.0\n"
                  "problem.drift.beta = 0.4\n"
                  "problem.diffusion = scalar\n"
                  "problem.diffusion.sigma = 0.6\n"
                  "problem.jump = affine\n"
                  "problem.jump.c0 = 0.1\n"
                  "problem.jump.c1 = 0.0\n"
                  "problem.jump.c2 = 0.0\n"
                  "problem.jumps = finite\n"
                  "problem.jumps.marks = 1.0\n"
                  "problem.jumps.weights = 1.0\n"
                  "problem.jumps.gamma = 0.4\n");

  const std::string a = (dir / "a").string();
  const std::string b = (dir / "b").string();
  const std::string c = (dir / "c").string();
  out.expect(run_cli(bin, "run " + cfg + " --out " + a + " --workers 1") == 0,
             "first run failed");
  out.expect(run_cli(bin, "run " + a + "/mmv-manifest.cfg --out " + b +
                              " --workers 4") == 0,
             "manifest re-run failed");
  out.expect(run_cli(bin, "run " + a + "/mmv-manifest.cfg --out " + c +
                              " --workers 3") == 0,
             "second manifest re-run failed");
  if (!out.pass) return out;

  int compared = 0;
  for (const auto& entry : fs::directory_iterator(a)) {
    const std::string name = entry.path().filename().string();
    if (name.size() < 4 || name.substr(name.size() - 4) != ".csv") continue;
    const std::string original = read_text_file(entry.path().string());
    out.expect(read_text_file(b + "/" + name) == original,
               name + " differs after manifest re-run with 4 workers");
    out.expect(read_text_file(c + "/" + name) == original,
               name + " differs after manifest re-run with 3 workers");
    ++compared;
  }
  out.expect(compared >= 1, "no CSV artifacts found to compare");
  out.note(std::to_string(compared) + " artifacts byte-identical");
  fs::remove_all(dir);
  return out;
}

// ----------------------------------------------------------------- driver

int g_failures = 0;

void run_check(int idx, const std::string& name, double budget_s,
               const std::function<Outcome()>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome out;
  try {
    out = body();
  } catch (const std::exception& e) {
    out.fail(std::string("exception: ") + e.what());
  }
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  if (budget_s > 0.0 && secs > budget_s)
    out.fail("took " + fmt(secs) + "s, budget " + fmt(budget_s) + "s");
  if (!out.pass) ++g_failures;
  std::printf("%s %2d %-38s %7.1fs  %s\n", out.pass ? "PASS" : "FAIL", idx,
              name.c_str(), secs, out.detail.c_str());
  std::fflush(stdout);
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 2) {
    std::fprintf(stderr, "usage: acceptance <path-to-cli-binary>\n");
    return 1;
  }
  const std::string bin = argv[1];

  run_check(1, "projection and normal-cone geometry", 10.0, check_geometry);
  run_check(2, "energy and entropy identities", 0.0, check_energy_identities);
  run_check(3, "nonlinear Gronwall reductions", 1.0, check_bihari);
  run_check(4, "deviation skeleton vs exact steering", 120.0,
            check_skeleton_oracles);
  run_check(5, "level-crossing cost and sampled tails", 600.0,
            check_gaussian_rate);
  run_check(6, "mean-square convergence scaling", 900.0,
            check_convergence_lemmas);
  run_check(7, "controlled paths track the skeleton", 0.0,
            check_controlled_limit);
  run_check(8, "constrained dynamics stay reflected", 0.0,
            check_constrained_dynamics);
  run_check(9, "moderate-deviation scaling", 0.0, check_moderate_scaling);
  run_check(10, "manifest re-runs are bit-identical", 0.0,
            [&] { return check_reproducibility(bin); });

  std::printf("acceptance: %d/10 passed\n", 10 - g_failures);
  return g_failures == 0 ? 0 : 1;
}
