#include "mmv/coefficients.hpp"

#include <cmath>
#include <sstream>

#include "mmv/analysis.hpp"
#include "mmv/rng.hpp"

namespace mmv {

ConcaveModulus ConcaveModulus::linear(double slope) {
  require(slope >= 0.0, "ConcaveModulus::linear: slope must be >= 0");
  ConcaveModulus m;
  m.kind_ = Kind::Linear;
  m.slope_ = slope;
  return m;
}

ConcaveModulus ConcaveModulus::log_cap(double delta) {
  require(delta > 0.0 && delta <= std::exp(-1.0),
          "ConcaveModulus::log_cap: delta must lie in (0, 1/e]");
  ConcaveModulus m;
  m.kind_ = Kind::LogCap;
  m.delta_ = delta;
  return m;
}

ConcaveModulus ConcaveModulus::power(double scale, double exponent) {
  require(scale > 0.0, "ConcaveModulus::power: scale must be positive");
  require(exponent > 0.0 && exponent <= 1.0,
          "ConcaveModulus::power: exponent must lie in (0, 1]");
  ConcaveModulus m;
  m.kind_ = Kind::Power;
  m.slope_ = scale;
  m.delta_ = exponent;
  return m;
}

double ConcaveModulus::operator()(double u) const {
  require(u >= 0.0, "ConcaveModulus: argument must be nonnegative");
  switch (kind_) {
    case Kind::Linear:
      return slope_ * u;
    case Kind::Power:
      return slope_ * std::pow(u, delta_);
    case Kind::LogCap:
      break;
  }
  if (u == 0.0) return 0.0;
  if (u <= delta_) return u * std::log(1.0 / u);
  // Affine continuation with the tangent slope at delta.
  return delta_ * std::log(1.0 / delta_) +
         (std::log(1.0 / delta_) - 1.0) * (u - delta_);
}

EmpiricalMeasure::EmpiricalMeasure(Mat particles) : particles_(std::move(particles)) {
  require(particles_.rows() >= 1 && particles_.cols() >= 1,
          "EmpiricalMeasure: need at least one particle");
}

EmpiricalMeasure EmpiricalMeasure::dirac(const Vec& x) {
  Mat p(x.size(), 1);
  p.col(0) = x;
  return EmpiricalMeasure(std::move(p));
}

DriftKernel DriftKernel::zero(int dim) { return {Vec::Zero(dim), 0.0, 0.0}; }

DriftKernel DriftKernel::constant(const Vec& c) { return {c, 0.0, 0.0}; }

DriftKernel DriftKernel::mean_field_ou(int dim, double alpha, double beta) {
  return {Vec::Zero(dim), -(alpha + beta), beta};
}

DriftKernel DriftKernel::affine(const Vec& c0, double cx, double cy) {
  return {c0, cx, cy};
}

Vec DriftKernel::eval(const Vec& x, const Vec& y) const {
  // A default-constructed kernel has no stored dimension: it is zero.
  Vec out = c0.size() ? c0 : Vec::Zero(x.size());
  if (cx != 0.0) out += cx * x;
  if (cy != 0.0) out += cy * y;
  return out;
}

Mat DriftKernel::jacobian_x() const {
  return cx * Mat::Identity(dim(), dim());
}

DiffusionKernel DiffusionKernel::zero(int dim) {
  return {Mat::Zero(dim, dim), 0.0, 0.0};
}

DiffusionKernel DiffusionKernel::constant(const Mat& sigma) {
  require(sigma.rows() == sigma.cols(), "DiffusionKernel: sigma must be square");
  return {sigma, 0.0, 0.0};
}

DiffusionKernel DiffusionKernel::scalar(int dim, double s) {
  return {s * Mat::Identity(dim, dim), 0.0, 0.0};
}

DiffusionKernel DiffusionKernel::affine_diag(const Mat& sigma0, double s1,
                                             double s2) {
  require(sigma0.rows() == sigma0.cols(), "DiffusionKernel: sigma must be square");
  return {sigma0, s1, s2};
}

bool DiffusionKernel::is_zero() const {
  return s1 == 0.0 && s2 == 0.0 && sigma0.isZero(0.0);
}

Mat DiffusionKernel::eval(const Vec& x, const Vec& y) const {
  Mat out = sigma0.size() ? sigma0 : Mat::Zero(x.size(), x.size());
  if (s1 != 0.0) out.diagonal() += s1 * x;
  if (s2 != 0.0) out.diagonal() += s2 * y;
  return out;
}

JumpAmplitudeKernel JumpAmplitudeKernel::none(int dim) {
  return {Vec::Zero(dim), 0.0, 0.0};
}

JumpAmplitudeKernel JumpAmplitudeKernel::affine(const Vec& c0, double c1,
                                                double c2) {
  return {c0, c1, c2};
}

Vec JumpAmplitudeKernel::eval(const Vec& x, const Vec& y, double gamma_z) const {
  Vec out = c0.size() ? c0 : Vec::Zero(x.size());
  if (c1 != 0.0) out += c1 * x;
  if (c2 != 0.0) out += c2 * y;
  return gamma_z * out;
}

DecayProfile DecayProfile::power(double c, double p) {
  require(c >= 0.0 && p > 0.0, "DecayProfile: need c >= 0 and p > 0");
  return {c, p};
}

double DecayProfile::operator()(double eps) const {
  require(eps > 0.0, "DecayProfile: eps must be positive");
  if (c == 0.0) return 0.0;
  return c * std::pow(eps, p);
}

DirectionField DirectionField::sine(double phase) { return {true, phase}; }

Vec DirectionField::eval(const Vec& x, const Vec& y) const {
  if (!active) return Vec::Zero(x.size());
  const double norm = 1.0 / std::sqrt(static_cast<double>(x.size()));
  Vec out(x.size());
  for (int i = 0; i < x.size(); ++i)
    out[i] = norm * std::sin(x[i] + y[i] + phase);
  return out;
}

namespace {

void check_args(const KernelCoefficients& k, const Vec& x,
                const EmpiricalMeasure& mu) {
  require(x.size() == k.dim() && mu.dim() == k.dim(),
          "coefficient evaluation: dimension mismatch");
}

// Mean of a two-argument kernel over the cloud; O(N), collapsing to one
// evaluation when the kernel ignores its second argument.
template <class Eval>
auto mean_field(const EmpiricalMeasure& mu, bool depends_on_y, Eval&& f) {
  if (!depends_on_y || mu.size() == 1) return f(mu.particles().col(0));
  auto acc = f(mu.particles().col(0));
  for (int j = 1; j < mu.size(); ++j) acc += f(mu.particles().col(j));
  acc /= static_cast<double>(mu.size());
  return acc;
}

}  // namespace

Vec eval_drift(const KernelCoefficients& k, const Vec& x,
               const EmpiricalMeasure& mu) {
  check_args(k, x, mu);
  return mean_field(mu, k.drift.depends_on_y(),
                    [&](const auto& y) -> Vec { return k.drift.eval(x, y); });
}

Mat eval_diffusion(const KernelCoefficients& k, const Vec& x,
                   const EmpiricalMeasure& mu) {
  check_args(k, x, mu);
  return mean_field(mu, k.diffusion.depends_on_y(), [&](const auto& y) -> Mat {
    return k.diffusion.eval(x, y);
  });
}

Vec eval_jump(const KernelCoefficients& k, const Vec& x,
              const EmpiricalMeasure& mu, double gamma_z) {
  check_args(k, x, mu);
  return mean_field(mu, k.jump.depends_on_y(), [&](const auto& y) -> Vec {
    return k.jump.eval(x, y, gamma_z);
  });
}

Mat grad_drift(const KernelCoefficients& k, const Vec& x,
               const EmpiricalMeasure& mu) {
  check_args(k, x, mu);
  if (k.analytic_jacobian) return k.drift.jacobian_x();
  const int d = k.dim();
  Mat jac(d, d);
  const double h = 1e-6 * (1.0 + x.norm());
  Vec xp = x, xm = x;
  for (int j = 0; j < d; ++j) {
    xp[j] = x[j] + h;
    xm[j] = x[j] - h;
    jac.col(j) = (eval_drift(k, xp, mu) - eval_drift(k, xm, mu)) / (2.0 * h);
    xp[j] = x[j];
    xm[j] = x[j];
  }
  return jac;
}

Vec eval_drift_eps(const KernelCoefficients& k, const PerturbationFamily& f,
                   double eps, const Vec& x, const EmpiricalMeasure& mu) {
  Vec base = eval_drift(k, x, mu);
  if (f.rho_b.is_zero() || !f.h_b.active) return base;
  const double rho = f.rho_b(eps);
  Vec dir = mean_field(mu, true,
                       [&](const auto& y) -> Vec { return f.h_b.eval(x, y); });
  return base + rho * dir;
}

Mat eval_diffusion_eps(const KernelCoefficients& k, const PerturbationFamily& f,
                       double eps, const Vec& x, const EmpiricalMeasure& mu) {
  Mat base = eval_diffusion(k, x, mu);
  if (f.rho_sigma.is_zero() || !f.h_sigma.active) return base;
  const double rho = f.rho_sigma(eps);
  Vec dir = mean_field(mu, true, [&](const auto& y) -> Vec {
    return f.h_sigma.eval(x, y);
  });
  base.diagonal() += rho * dir;
  return base;
}

Vec eval_jump_eps(const KernelCoefficients& k, const PerturbationFamily& f,
                  double eps, const Vec& x, const EmpiricalMeasure& mu,
                  double gamma_z, double l3_z) {
  Vec base = eval_jump(k, x, mu, gamma_z);
  if (f.rho_g.is_zero() || !f.h_g.active) return base;
  const double rho = f.rho_g(eps);
  Vec dir = mean_field(mu, true,
                       [&](const auto& y) -> Vec { return f.h_g.eval(x, y); });
  return base + (rho * l3_z) * dir;
}

bool HypothesisReport::all_pass() const {
  for (auto& c : checks)
    if (!c.pass) return false;
  return true;
}

const HypothesisCheck* HypothesisReport::find(const std::string& name) const {
  for (auto& c : checks)
    if (c.name == name) return &c;
  return nullptr;
}

namespace {

std::string witness_at(int sample, double violation) {
  std::ostringstream os;
  os << "sample " << sample << ", violation " << violation;
  return os.str();
}

// Fitted decay exponent of positive values over a decreasing eps grid; a
// positive exponent certifies convergence to zero for the power-law family.
bool decays_to_zero(const std::vector<double>& eps_grid,
                    const std::vector<double>& values, double* exponent) {
  *exponent = 0.0;
  double vmax = 0.0;
  for (double v : values) vmax = std::max(vmax, v);
  if (vmax == 0.0) return true;
  double e_lo = eps_grid.front(), e_hi = eps_grid.front();
  double v_lo = values.front(), v_hi = values.front();
  for (std::size_t i = 0; i < eps_grid.size(); ++i) {
    if (eps_grid[i] < e_lo) {
      e_lo = eps_grid[i];
      v_lo = values[i];
    }
    if (eps_grid[i] > e_hi) {
      e_hi = eps_grid[i];
      v_hi = values[i];
    }
  }
  if (e_lo == e_hi) return false;
  if (v_lo <= 0.0) return true;  // already vanished at the small end
  *exponent = std::log(v_lo / v_hi) / std::log(e_lo / e_hi);
  return *exponent > 1e-9;
}

}  // namespace

HypothesisReport check_hypotheses(const KernelCoefficients& k,
                                  const PerturbationFamily& f,
                                  const JumpModel& jumps,
                                  const ConvexDomain& domain,
                                  const HypothesisCheckConfig& cfg) {
  require(domain.dim() == k.dim(), "check_hypotheses: dimension mismatch");
  require(cfg.samples >= 1 && cfg.measure_particles >= 1,
          "check_hypotheses: need positive sample counts");
  const int d = k.dim();
  RngStream rng(derive_seed(cfg.seed, "hypotheses", 0));
  const Vec anchor = domain.anchor();

  auto random_point = [&]() {
    Vec g(d);
    for (int i = 0; i < d; ++i) g[i] = cfg.sample_scale * rng.normal();
    return domain.project(anchor + g);
  };
  auto random_measure = [&]() {
    Mat p(d, cfg.measure_particles);
    for (int j = 0; j < cfg.measure_particles; ++j) p.col(j) = random_point();
    return EmpiricalMeasure(std::move(p));
  };

  const double lip_L = cfg.lip_L > 0 ? cfg.lip_L : k.growth_L;
  const double grad_L = cfg.grad_L > 0 ? cfg.grad_L : k.growth_L;
  const double tol = 1e-9;

  HypothesisCheck h2, h2p, h3, h4, h5, h6, h7, c0, c1, c2;
  h2.name = "H2";
  h2p.name = "H2'";
  h3.name = "H3";
  h4.name = "H4";
  h5.name = "H5";
  h6.name = "H6";
  h7.name = "H7";
  c0.name = "C0";
  c1.name = "C1";
  c2.name = "C2";
  h2.conservative = h2p.conservative = h6.conservative = (d > 1);

  auto track = [&](HypothesisCheck& c, double violation, int sample) {
    if (violation > c.worst) {
      c.worst = violation;
      c.witness = witness_at(sample, violation);
    }
    if (violation > tol) c.pass = false;
  };

  for (int s = 0; s < cfg.samples; ++s) {
    const Vec x = random_point();
    const Vec xp = random_point();
    const Vec y = random_point();
    const EmpiricalMeasure mu = random_measure();
    const EmpiricalMeasure nup = random_measure();
    const double dx2 = (x - xp).squaredNorm();
    const double w2 = wasserstein2(mu, nup).value;
    const double mod_rhs = k.modulus(dx2) + k.modulus(w2 * w2);

    // (H2): one-sided drift bound and squared bounds for diffusion and jumps
    // against the shared concave modulus.
    {
      const double drift_lhs =
          (x - xp).dot(eval_drift(k, x, mu) - eval_drift(k, xp, nup));
      const double diff_lhs =
          (eval_diffusion(k, x, mu) - eval_diffusion(k, xp, nup)).squaredNorm();
      double jump_lhs = 0.0;
      for (int m = 0; m < jumps.n_marks(); ++m)
        jump_lhs += (eval_jump(k, x, mu, jumps.gamma(m)) -
                     eval_jump(k, xp, nup, jumps.gamma(m)))
                        .squaredNorm() *
                    jumps.weight(m);
      track(h2, std::max({drift_lhs, diff_lhs, jump_lhs}) - mod_rhs, s);
    }

    // (H2)': plain one-sided Lipschitz in state, Lipschitz in the measure.
    {
      const double same_mu =
          (x - xp).dot(eval_drift(k, x, mu) - eval_drift(k, xp, mu)) -
          lip_L * dx2;
      const double w2ab = wasserstein2(mu, nup).value;
      const double meas =
          (eval_drift(k, x, mu) - eval_drift(k, x, nup)).norm() - lip_L * w2ab;
      track(h2p, std::max(same_mu, meas), s);
    }

    // (H3): kernel-level quadratic growth.
    {
      const double cap = k.growth_L * (1.0 + x.squaredNorm() + y.squaredNorm());
      const double vb = k.drift.eval(x, y).squaredNorm() - cap;
      const double vs = k.diffusion.eval(x, y).squaredNorm() - cap;
      double jump_mass = 0.0;
      for (int m = 0; m < jumps.n_marks(); ++m)
        jump_mass +=
            k.jump.eval(x, y, jumps.gamma(m)).squaredNorm() * jumps.weight(m);
      track(h3, std::max({vb, vs, jump_mass - cap}), s);
    }

    // (H4): jumps do not leave the domain.
    for (int m = 0; m < jumps.n_marks(); ++m) {
      const Vec landed = x + k.jump.eval(x, y, jumps.gamma(m));
      track(h4, (landed - domain.project(landed)).norm(), s);
    }

    // (H6): Lipschitz with L1, reference bound with L2, perturbation with L3.
    for (int m = 0; m < jumps.n_marks(); ++m) {
      const double lhs = (eval_jump(k, x, mu, jumps.gamma(m)) -
                          eval_jump(k, xp, nup, jumps.gamma(m)))
                             .squaredNorm();
      track(h6, lhs - jumps.l1(m) * jumps.l1(m) * mod_rhs, s);
    }
    for (std::size_t e = 0; e < cfg.eps_grid.size(); ++e) {
      const double eps = cfg.eps_grid[e];
      for (int m = 0; m < jumps.n_marks(); ++m) {
        const double dist =
            (eval_jump_eps(k, f, eps, x, mu, jumps.gamma(m), jumps.l3(m)) -
             eval_jump(k, x, mu, jumps.gamma(m)))
                .norm();
        track(h6, dist - f.rho_g(eps) * jumps.l3(m), s);
      }
    }

    // (H7): the perturbed jump kernel preserves the domain and keeps
    // square-integrable growth (Minkowski headroom over H3 + H6).
    for (std::size_t e = 0; e < cfg.eps_grid.size(); ++e) {
      const double eps = cfg.eps_grid[e];
      double mass_eps = 0.0, l3_mass = 0.0;
      for (int m = 0; m < jumps.n_marks(); ++m) {
        const Vec ge = eval_jump_eps(k, f, eps, x, EmpiricalMeasure::dirac(y),
                                     jumps.gamma(m), jumps.l3(m));
        const Vec landed = x + ge;
        track(h7, (landed - domain.project(landed)).norm(), s);
        mass_eps += ge.squaredNorm() * jumps.weight(m);
        l3_mass += jumps.l3(m) * jumps.l3(m) * jumps.weight(m);
      }
      const double cap = k.growth_L * (1.0 + x.squaredNorm() + y.squaredNorm());
      const double allowed = std::sqrt(cap) + f.rho_g(eps) * std::sqrt(l3_mass);
      track(h7, mass_eps - allowed * allowed, s);
    }

    // (C0): local Hoelder-type continuity of the drift gradient.
    {
      const double cap = grad_L *
                         (1.0 + std::pow(x.norm(), cfg.grad_q) +
                          std::pow(xp.norm(), cfg.grad_q)) *
                         (x - xp).norm();
      const double lhs =
          (grad_drift(k, x, mu) - grad_drift(k, xp, mu)).norm();
      track(c0, lhs - cap, s);
    }
  }

  // (H6) part two: boundedness at the reference point.
  {
    const Vec ref = domain.project(Vec::Zero(d));
    const EmpiricalMeasure dref = EmpiricalMeasure::dirac(ref);
    for (int m = 0; m < jumps.n_marks(); ++m)
      track(h6, eval_jump(k, ref, dref, jumps.gamma(m)).norm() - jumps.l2(m),
            -1);
  }

  // (H5): vanishing coefficient perturbations along the experiment grid.
  {
    std::vector<double> rb, rs;
    for (double e : cfg.eps_grid) {
      rb.push_back(f.rho_b(e));
      rs.push_back(f.rho_sigma(e));
    }
    double pb = 0.0, ps = 0.0;
    const bool ok_b = decays_to_zero(cfg.eps_grid, rb, &pb);
    const bool ok_s = decays_to_zero(cfg.eps_grid, rs, &ps);
    h5.pass = ok_b && ok_s;
    std::ostringstream os;
    os << "fitted exponents: rho_b " << pb << ", rho_sigma " << ps;
    h5.witness = os.str();
  }

  // (C1): square-integrated drift gradient along the supplied limit path.
  if (cfg.limit_path != nullptr) {
    require(cfg.dt > 0.0, "check_hypotheses: dt required with a limit path");
    const Mat& path = *cfg.limit_path;
    require(path.rows() == d, "check_hypotheses: limit path dimension mismatch");
    double integral = 0.0;
    for (int kk = 0; kk < path.cols(); ++kk) {
      const Vec xt = path.col(kk);
      integral +=
          grad_drift(k, xt, EmpiricalMeasure::dirac(xt)).squaredNorm() * cfg.dt;
    }
    c1.pass = std::isfinite(integral);
    std::ostringstream os;
    os << "integral " << integral;
    c1.witness = os.str();
  } else {
    c1.witness = "no limit path supplied; not evaluated";
  }

  // (C2): rho_b decays faster than the moderate scale lambda = eps^theta.
  {
    std::vector<double> ratio;
    for (double e : cfg.eps_grid)
      ratio.push_back(f.rho_b(e) / std::pow(e, cfg.theta));
    double pr = 0.0;
    c2.pass = decays_to_zero(cfg.eps_grid, ratio, &pr);
    std::ostringstream os;
    os << "fitted exponent of rho_b / lambda: " << pr;
    c2.witness = os.str();
  }

  HypothesisReport report;
  report.checks = {h2, h2p, h3, h4, h5, h6, h7, c0, c1, c2};
  return report;
}

}  // namespace mmv
