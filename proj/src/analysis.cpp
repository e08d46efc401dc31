#include "mmv/analysis.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <functional>
#include <limits>
#include <thread>
#include <vector>

#include "mmv/dynamics.hpp"
#include "mmv/rng.hpp"
#include "mmv/skeleton.hpp"

namespace mmv {

W2Result wasserstein2(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu) {
  require(mu.dim() == nu.dim(), "wasserstein2: dimension mismatch");
  if (mu.dim() == 1) {
    // Quantile coupling over the merged breakpoints i/N and j/M.
    std::vector<double> xs(mu.size()), ys(nu.size());
    for (int i = 0; i < mu.size(); ++i) xs[i] = mu.particles()(0, i);
    for (int j = 0; j < nu.size(); ++j) ys[j] = nu.particles()(0, j);
    std::sort(xs.begin(), xs.end());
    std::sort(ys.begin(), ys.end());
    const double n = static_cast<double>(xs.size());
    const double m = static_cast<double>(ys.size());
    double acc = 0.0, u = 0.0;
    std::size_t i = 0, j = 0;
    while (i < xs.size() && j < ys.size()) {
      const double next = std::min((i + 1) / n, (j + 1) / m);
      const double diff = xs[i] - ys[j];
      acc += diff * diff * (next - u);
      u = next;
      if (next == (i + 1) / n) ++i;
      if (next == (j + 1) / m) ++j;
    }
    return {std::sqrt(std::max(0.0, acc)), false};
  }
  require(mu.size() == nu.size(),
          "wasserstein2: paired bound needs equal particle counts");
  double acc = 0.0;
  for (int i = 0; i < mu.size(); ++i)
    acc += (mu.particles().col(i) - nu.particles().col(i)).squaredNorm();
  return {std::sqrt(acc / mu.size()), true};
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Adaptive Simpson quadrature of 1/rho over [a, b] (a <= b), recursing until
// the local Richardson error estimate drops below tol.
double simpson_cell(double a, double fa, double b, double fb, double fm) {
  return (b - a) / 6.0 * (fa + 4.0 * fm + fb);
}

double inv_rho(const ConcaveModulus& rho, double s) {
  const double v = rho(s);
  require(v > 0.0, "modulus must stay positive on the integration range");
  return 1.0 / v;
}

double adaptive(const ConcaveModulus& rho, double a, double fa, double b,
                double fb, double m, double fm, double whole, double tol,
                int depth) {
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double flm = inv_rho(rho, lm), frm = inv_rho(rho, rm);
  const double left = simpson_cell(a, fa, m, fm, flm);
  const double right = simpson_cell(m, fm, b, fb, frm);
  if (depth <= 0 || std::abs(left + right - whole) <= 15.0 * tol)
    return left + right + (left + right - whole) / 15.0;
  return adaptive(rho, a, fa, m, fm, lm, flm, left, 0.5 * tol, depth - 1) +
         adaptive(rho, m, fm, b, fb, rm, frm, right, 0.5 * tol, depth - 1);
}

// f(b) - f(a) where f(r) = int_1^r ds/rho(s); a, b > 0 in either order.
double f_increment(const ConcaveModulus& rho, double a, double b) {
  if (a == b) return 0.0;
  const double lo = std::min(a, b), hi = std::max(a, b);
  const double flo = inv_rho(rho, lo), fhi = inv_rho(rho, hi);
  const double m = 0.5 * (lo + hi);
  const double fm = inv_rho(rho, m);
  const double whole = simpson_cell(lo, flo, hi, fhi, fm);
  const double val =
      adaptive(rho, lo, flo, hi, fhi, m, fm, whole, 1e-13, 48);
  return b > a ? val : -val;
}

}  // namespace

std::vector<double> bihari_bound(const BihariSpec& spec) {
  require(spec.C > 0.0, "bihari_bound: C must be positive");
  require(static_cast<int>(spec.q.size()) == spec.grid.n_steps,
          "bihari_bound: q must carry one value per step");
  for (double v : spec.q) require(v >= 0.0, "bihari_bound: q must be >= 0");

  std::vector<double> out(spec.grid.n_steps + 1, spec.C);
  // Walk the nondecreasing targets y_k = f(C) + cum_k, tracking the current
  // bound r and its f-value so each inversion integrates a short interval.
  double r = spec.C;
  double fr = 0.0;  // f(r) - f(C)
  double cum = 0.0;
  bool blown = false;
  for (int k = 1; k <= spec.grid.n_steps; ++k) {
    cum += spec.q[k - 1] * spec.grid.dt;
    if (blown) {
      out[k] = kInf;
      continue;
    }
    const double target = cum;  // relative to f(C)
    // Bracket [r, hi] with f(hi) - f(C) >= target.
    double lo = r, flo = fr;
    double hi = lo, fhi = flo;
    double width = std::max(1.0, 0.5 * lo);
    while (fhi < target) {
      lo = hi;
      flo = fhi;
      hi += width;
      width *= 2.0;
      if (hi > 1e12) break;
      fhi += f_increment(spec.rho, lo, hi);
    }
    if (fhi < target) {
      blown = true;
      out[k] = kInf;
      continue;
    }
    // Monotone bisection on f to tolerance 1e-10.
    while (hi - lo > 1e-10 * (1.0 + std::abs(lo))) {
      const double mid = 0.5 * (lo + hi);
      const double fmid = flo + f_increment(spec.rho, lo, mid);
      if (fmid < target) {
        lo = mid;
        flo = fmid;
      } else {
        hi = mid;
        fhi = fmid;
      }
    }
    r = 0.5 * (lo + hi);
    fr = flo + f_increment(spec.rho, lo, r);
    out[k] = r;
  }
  return out;
}

namespace {

void check_eps_grid(const std::vector<double>& eps_grid) {
  require(!eps_grid.empty(), "epsilon grid must be nonempty");
  for (std::size_t i = 0; i < eps_grid.size(); ++i) {
    require(eps_grid[i] > 0.0 && eps_grid[i] <= 1.0,
            "epsilon must lie in (0, 1]");
    if (i > 0)
      require(eps_grid[i] < eps_grid[i - 1],
              "epsilon grid must be strictly decreasing");
  }
}

// Runs body(r) for r in [0, replicas) across up to `workers` threads.  Each
// body call writes only its own slot, so any schedule gives the same slots;
// the callers then reduce the slots in index order.
void for_each_replica(int replicas, int workers,
                      const std::function<void(int)>& body) {
  workers = std::max(1, std::min(workers, replicas));
  if (workers == 1) {
    for (int r = 0; r < replicas; ++r) body(r);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (int r = next.fetch_add(1); r < replicas; r = next.fetch_add(1))
        body(r);
    });
  for (auto& t : pool) t.join();
}

struct WlsFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_se = 0.0;
  double intercept_se = 0.0;
};

// Weighted least squares y ~ intercept + slope * x with weights 1/var.
WlsFit wls(const std::vector<double>& x, const std::vector<double>& y,
           const std::vector<double>& var) {
  double s = 0, sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double w = 1.0 / var[i];
    s += w;
    sx += w * x[i];
    sy += w * y[i];
    sxx += w * x[i] * x[i];
    sxy += w * x[i] * y[i];
  }
  const double det = s * sxx - sx * sx;
  require(det > 0.0, "degenerate regression design");
  WlsFit fit;
  fit.slope = (s * sxy - sx * sy) / det;
  fit.intercept = (sxx * sy - sx * sxy) / det;
  fit.slope_se = std::sqrt(s / det);
  fit.intercept_se = std::sqrt(sxx / det);
  return fit;
}

}  // namespace

TailEstimate estimate_tail(const ProblemSpec& prob, const Event& event,
                           const std::vector<double>& eps_grid, int replicas,
                           const ModerateScale* scale, std::uint64_t seed,
                           int workers) {
  check_eps_grid(eps_grid);
  require(replicas >= 1, "need at least one replica");
  const PathBundle limit =
      solve_limit(prob.coeffs, prob.domain, prob.x0, prob.T, prob.dt);

  TailEstimate est;
  std::vector<char> hit_flags(static_cast<std::size_t>(replicas));
  for (double eps : eps_grid) {
    for_each_replica(replicas, workers, [&](int r) {
      const PathBundle b = simulate_particles(
          prob.coeffs, prob.family, prob.domain, prob.jumps, prob.x0, prob.T,
          prob.dt, eps, 1, derive_seed(seed, "rep", r));
      bool in;
      if (scale) {
        const std::vector<Mat> dev = moderate_rescale(b, limit, *scale);
        in = event.hit(dev[0]);
      } else {
        const Mat* ref =
            event.kind == Event::Kind::SupNorm ? &limit.states[0] : nullptr;
        in = event.hit(b.states[0], ref);
      }
      hit_flags[static_cast<std::size_t>(r)] = in ? 1 : 0;
    });
    int hits = 0;
    for (int r = 0; r < replicas; ++r)
      hits += hit_flags[static_cast<std::size_t>(r)];
    TailPoint pt;
    pt.epsilon = eps;
    pt.speed = scale ? scale->speed(eps) : eps;
    pt.hits = hits;
    pt.replicas = replicas;
    pt.p_hat = static_cast<double>(hits) / replicas;
    pt.std_err = std::sqrt(pt.p_hat * (1.0 - pt.p_hat) / replicas);
    pt.dropped = hits < 10;
    if (pt.dropped) {
      est.warnings.push_back("epsilon " + std::to_string(eps) +
                             " dropped from the fit: " +
                             std::to_string(hits) + " hits (< 10)");
    } else {
      pt.scaled_log = pt.speed * std::log(pt.p_hat);
    }
    est.points.push_back(pt);
  }

  std::vector<double> xs, ys, vars;
  for (const TailPoint& pt : est.points) {
    if (pt.dropped) continue;
    xs.push_back(pt.speed);
    ys.push_back(pt.scaled_log);
    // Delta-method variance of speed * log(p_hat), floored away from zero
    // so a saturated estimate (p_hat = 1) cannot blow up the weights.
    vars.push_back(pt.speed * pt.speed *
                   ((1.0 - pt.p_hat) + 0.5 / pt.replicas) /
                   (pt.replicas * pt.p_hat));
  }
  est.n_used = static_cast<int>(xs.size());
  if (est.n_used == 0)
    throw std::runtime_error(
        "estimate_tail: event too rare at desk scale, every epsilon dropped");
  if (est.n_used == 1) {
    est.slope = 0.0;
    est.intercept = ys[0];
    est.intercept_se = std::sqrt(vars[0]);
    est.warnings.push_back(
        "single usable epsilon: reporting its scaled log without a fit");
    return est;
  }
  const WlsFit fit = wls(xs, ys, vars);
  est.slope = fit.slope;
  est.intercept = fit.intercept;
  est.intercept_se = fit.intercept_se;
  return est;
}

StudyReport convergence_study(const ProblemSpec& prob,
                              const std::vector<double>& eps_grid,
                              int replicas, StudyMode mode, std::uint64_t seed,
                              const Control* phi, const ControlField* psi,
                              int workers) {
  check_eps_grid(eps_grid);
  require(replicas >= 2, "need at least two replicas for a variance");
  const PathBundle limit =
      solve_limit(prob.coeffs, prob.domain, prob.x0, prob.T, prob.dt);

  Mat reference = limit.states[0];
  Control u_phi;
  ControlField u_psi;
  if (mode == StudyMode::Controlled) {
    require(phi != nullptr, "controlled mode needs a drift control");
    u_phi = *phi;
    if (psi)
      u_psi = *psi;
    else if (!prob.jumps.empty())
      u_psi = ControlField(limit.grid.n_steps, prob.jumps.n_marks(), 1.0);
    const SkeletonSolution skel = solve_ldp_skeleton(
        prob.coeffs, prob.domain, prob.jumps, limit, u_phi, u_psi);
    reference = skel.path;
  }

  StudyReport rep;
  rep.mode = mode;
  std::vector<double> vals(static_cast<std::size_t>(replicas));
  for (double eps : eps_grid) {
    for_each_replica(replicas, workers, [&](int r) {
      const std::uint64_t rs = derive_seed(seed, "rep", r);
      PathBundle b;
      if (mode == StudyMode::Controlled) {
        // The controlled equation freezes the mean-field argument at the law
        // of the uncontrolled path; reusing the replica seed makes the null
        // control reproduce that path bit for bit.
        const PathBundle comp =
            simulate_particles(prob.coeffs, prob.family, prob.domain,
                               prob.jumps, prob.x0, prob.T, prob.dt, eps, 1,
                               rs);
        b = simulate_controlled(prob.coeffs, prob.family, prob.domain,
                                prob.jumps, law_path(comp), u_phi, u_psi,
                                prob.x0, prob.T, prob.dt, eps, rs);
      } else {
        b = simulate_particles(prob.coeffs, prob.family, prob.domain,
                               prob.jumps, prob.x0, prob.T, prob.dt, eps, 1,
                               rs);
      }
      double sup = 0.0;
      for (int k = 0; k < b.states[0].cols(); ++k)
        sup = std::max(sup,
                       (b.states[0].col(k) - reference.col(k)).squaredNorm());
      vals[static_cast<std::size_t>(r)] = sup;
    });
    StudyPoint pt;
    pt.epsilon = eps;
    double acc = 0.0;
    for (int r = 0; r < replicas; ++r) acc += vals[r];  // ordered reduction
    pt.mean_sq_sup = acc / replicas;
    double var = 0.0;
    for (int r = 0; r < replicas; ++r) {
      const double d = vals[r] - pt.mean_sq_sup;
      var += d * d;
    }
    var /= (replicas - 1);
    pt.std_err = std::sqrt(var / replicas);
    rep.points.push_back(pt);
  }

  rep.strictly_decreasing = true;
  for (std::size_t i = 1; i < rep.points.size(); ++i)
    if (rep.points[i].mean_sq_sup >= rep.points[i - 1].mean_sq_sup)
      rep.strictly_decreasing = false;

  std::vector<double> xs, ys, vars;
  for (const StudyPoint& pt : rep.points) {
    require(pt.mean_sq_sup > 0.0,
            "degenerate study: zero mean-square distance");
    xs.push_back(std::log(pt.epsilon));
    ys.push_back(std::log(pt.mean_sq_sup));
    const double rel = pt.std_err / pt.mean_sq_sup;
    vars.push_back(std::max(rel * rel, 1e-12));
  }
  if (xs.size() >= 2) {
    const WlsFit fit = wls(xs, ys, vars);
    rep.slope = fit.slope;
    rep.slope_se = fit.slope_se;
    rep.log_intercept = fit.intercept;
  }

  if (mode == StudyMode::Rate) {
    for (const StudyPoint& pt : rep.points) {
      const double eps = pt.epsilon;
      const double rb = prob.family.rho_b(eps);
      const double rs = prob.family.rho_sigma(eps);
      const double rg = prob.family.rho_g(eps);
      const double denom = eps + rb * rb + eps * rs * rs + eps * rg * rg;
      rep.c_hat = std::max(rep.c_hat, pt.mean_sq_sup / denom);
    }
  }
  return rep;
}

}  // namespace mmv
