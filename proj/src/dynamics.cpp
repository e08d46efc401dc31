#include "mmv/dynamics.hpp"

#include <cmath>
#include <utility>

#include "mmv/rng.hpp"

namespace mmv {

Control Control::constant(const Vec& value, int n_steps) {
  require(n_steps >= 1, "control needs at least one step");
  Control c(static_cast<int>(value.size()), n_steps);
  c.values_.colwise() = value;
  return c;
}

Mat PathBundle::k_path(int particle) const {
  const Mat& inc = k_increments.at(particle);
  Mat k(inc.rows(), inc.cols() + 1);
  k.col(0).setZero();
  for (int j = 0; j < inc.cols(); ++j) k.col(j + 1) = k.col(j) + inc.col(j);
  return k;
}

EmpiricalMeasure PathBundle::measure_at(int node) const {
  require(!states.empty(), "empty bundle");
  require(node >= 0 && node <= grid.n_steps, "grid node out of range");
  Mat cloud(dim(), n_particles());
  for (int i = 0; i < n_particles(); ++i) cloud.col(i) = states[i].col(node);
  return EmpiricalMeasure(std::move(cloud));
}

double PathBundle::max_state_norm() const {
  double m = 0.0;
  for (const Mat& s : states)
    for (int j = 0; j < s.cols(); ++j) m = std::max(m, s.col(j).norm());
  return m;
}

std::vector<EmpiricalMeasure> law_path(const PathBundle& bundle) {
  std::vector<EmpiricalMeasure> law;
  law.reserve(bundle.grid.n_steps + 1);
  for (int k = 0; k <= bundle.grid.n_steps; ++k)
    law.push_back(bundle.measure_at(k));
  return law;
}

ModerateScale::ModerateScale(double theta_in) : theta(theta_in) {
  // theta = 0 is admitted as the unscaled deviation X - X0 (lambda = 1);
  // the vanishing-scale regime proper is 0 < theta < 1/2.
  require(theta >= 0.0 && theta < 0.5, "theta must lie in [0, 1/2)");
}

double ModerateScale::lambda(double eps) const {
  require(eps > 0.0, "eps must be positive");
  return std::pow(eps, theta);
}

double ModerateScale::speed(double eps) const {
  require(eps > 0.0, "eps must be positive");
  return std::pow(eps, 1.0 - 2.0 * theta);
}

ProjectedStepper::ProjectedStepper(const ConvexDomain& domain, const Vec& x0,
                                   int n_steps)
    : domain_(&domain),
      states_(x0.size(), n_steps + 1),
      k_incs_(Mat::Zero(x0.size(), n_steps)),
      current_(x0) {
  require(x0.size() == domain.dim(), "start point dimension mismatch");
  require(domain.contains(x0, 1e-9), "start point outside the domain closure");
  states_.col(0) = x0;
}

void ProjectedStepper::advance(const Vec& increment) {
  require(cursor_ < k_incs_.cols(), "stepped past the end of the grid");
  const Vec xhat = current_ + increment;
  Vec xnext = domain_->project(xhat);
  if (!domain_->contains(xnext, 1e-9))
    throw std::runtime_error("projection left the domain");
  k_incs_.col(cursor_) = xhat - xnext;
  current_ = std::move(xnext);
  ++cursor_;
  states_.col(cursor_) = current_;
}

namespace {

// nu-weighted jump field sum_m G_eps(x, mu, gamma_m) w_m; multiplied by dt it
// is the per-step compensator of the eps-scaled rate-1/eps jump integral.
Vec jump_mean_field(const KernelCoefficients& coeffs,
                    const PerturbationFamily& family, double eps, const Vec& x,
                    const EmpiricalMeasure& mu, const JumpModel& jumps) {
  Vec total = Vec::Zero(x.size());
  for (int m = 0; m < jumps.n_marks(); ++m)
    total += jumps.weight(m) * eval_jump_eps(coeffs, family, eps, x, mu,
                                             jumps.gamma(m), jumps.l3(m));
  return total;
}

PathBundle make_bundle(const TimeGrid& grid, double epsilon,
                       std::uint64_t seed) {
  PathBundle out;
  out.grid = grid;
  out.epsilon = epsilon;
  out.seed = seed;
  return out;
}

}  // namespace

PathBundle solve_limit(const KernelCoefficients& coeffs,
                       const ConvexDomain& domain, const Vec& x0, double T,
                       double dt) {
  TimeGrid grid(T, dt);
  require(coeffs.dim() == domain.dim(), "coefficient dimension mismatch");
  PathBundle out = make_bundle(grid, 0.0, 0);
  ProjectedStepper stepper(domain, x0, grid.n_steps);
  for (int k = 0; k < grid.n_steps; ++k) {
    const Vec x = stepper.current();
    stepper.advance(eval_drift(coeffs, x, EmpiricalMeasure::dirac(x)) * dt);
  }
  out.states.push_back(stepper.take_states());
  out.k_increments.push_back(stepper.take_k_increments());
  out.jump_logs.emplace_back();
  return out;
}

PathBundle simulate_particles(const KernelCoefficients& coeffs,
                              const PerturbationFamily& family,
                              const ConvexDomain& domain,
                              const JumpModel& jumps, const Vec& x0, double T,
                              double dt, double epsilon, int n_particles,
                              std::uint64_t seed) {
  TimeGrid grid(T, dt);
  require(epsilon >= 0.0 && epsilon <= 1.0, "epsilon must lie in [0, 1]");
  require(n_particles >= 1, "need at least one particle");
  require(coeffs.dim() == domain.dim(), "coefficient dimension mismatch");

  const int d = domain.dim();
  const int n = grid.n_steps;
  const int N = n_particles;
  const bool noisy = epsilon > 0.0;
  const double sqeps = std::sqrt(epsilon);

  PathBundle out = make_bundle(grid, epsilon, seed);
  out.jump_logs.resize(N);

  std::vector<ProjectedStepper> steppers;
  std::vector<RngStream> wiener;
  steppers.reserve(N);
  wiener.reserve(N);
  std::vector<std::size_t> next_event(N, 0);
  for (int i = 0; i < N; ++i) {
    steppers.emplace_back(domain, x0, n);
    wiener.emplace_back(derive_seed(seed, "W", i));
    if (noisy && !jumps.empty())
      out.jump_logs[i] =
          sample_prm(jumps, T, 1.0 / epsilon, derive_seed(seed, "N", i));
  }

  Mat cloud(d, N);
  Vec dw(d);
  for (int k = 0; k < n; ++k) {
    for (int i = 0; i < N; ++i) cloud.col(i) = steppers[i].current();
    const EmpiricalMeasure mu(cloud);
    const double t_next = grid.time(k + 1);
    for (int i = 0; i < N; ++i) {
      const Vec x = steppers[i].current();
      Vec inc = eval_drift_eps(coeffs, family, epsilon, x, mu) * dt;
      if (noisy) {
        for (int c = 0; c < d; ++c) dw[c] = wiener[i].normal();
        inc += sqeps * std::sqrt(dt) *
               (eval_diffusion_eps(coeffs, family, epsilon, x, mu) * dw);
        const JumpLog& log = out.jump_logs[i];
        std::size_t& j = next_event[i];
        while (j < log.size() && (log[j].time < t_next || k == n - 1)) {
          const int m = log[j].mark;
          const Vec g = eval_jump_eps(coeffs, family, epsilon, x, mu,
                                      jumps.gamma(m), jumps.l3(m));
          if (!domain.contains(x + epsilon * g, 1e-9)) ++out.jump_violations;
          inc += epsilon * g;
          ++j;
        }
        if (!jumps.empty())
          inc -= dt * jump_mean_field(coeffs, family, epsilon, x, mu, jumps);
      }
      steppers[i].advance(inc);
    }
  }

  out.states.reserve(N);
  out.k_increments.reserve(N);
  for (int i = 0; i < N; ++i) {
    out.states.push_back(steppers[i].take_states());
    out.k_increments.push_back(steppers[i].take_k_increments());
  }
  return out;
}

PathBundle simulate_controlled(
    const KernelCoefficients& coeffs, const PerturbationFamily& family,
    const ConvexDomain& domain, const JumpModel& jumps,
    const std::vector<EmpiricalMeasure>& companion_law, const Control& phi,
    const ControlField& psi, const Vec& x0, double T, double dt,
    double epsilon, std::uint64_t seed) {
  TimeGrid grid(T, dt);
  require(epsilon > 0.0 && epsilon <= 1.0, "epsilon must lie in (0, 1]");
  require(coeffs.dim() == domain.dim(), "coefficient dimension mismatch");
  const int d = domain.dim();
  const int n = grid.n_steps;
  require(static_cast<int>(companion_law.size()) == n + 1,
          "companion law does not match the grid");
  for (const auto& m : companion_law)
    require(m.dim() == d, "companion law dimension mismatch");
  require(phi.dim() == d && phi.n_steps() == n,
          "control grid mismatch");
  if (!jumps.empty())
    require(psi.n_steps() == n && psi.n_marks() == jumps.n_marks(),
            "control field grid mismatch");

  const double sqeps = std::sqrt(epsilon);
  PathBundle out = make_bundle(grid, epsilon, seed);
  out.scheme = "projected-euler+control";
  out.jump_logs.emplace_back();
  if (!jumps.empty())
    out.jump_logs[0] = sample_controlled_prm(jumps, psi, grid, 1.0 / epsilon,
                                             derive_seed(seed, "N", 0));

  ProjectedStepper stepper(domain, x0, n);
  RngStream wiener(derive_seed(seed, "W", 0));
  const bool phi_zero = phi.is_zero();
  std::size_t j = 0;
  Vec dw(d);
  for (int k = 0; k < n; ++k) {
    const EmpiricalMeasure& mu = companion_law[k];
    const double t_next = grid.time(k + 1);
    const Vec x = stepper.current();
    Vec inc = eval_drift_eps(coeffs, family, epsilon, x, mu) * dt;
    if (!phi_zero)
      inc += (eval_diffusion_eps(coeffs, family, epsilon, x, mu) * phi.at(k)) *
             dt;
    for (int c = 0; c < d; ++c) dw[c] = wiener.normal();
    inc += sqeps * std::sqrt(dt) *
           (eval_diffusion_eps(coeffs, family, epsilon, x, mu) * dw);
    const JumpLog& log = out.jump_logs[0];
    while (j < log.size() && (log[j].time < t_next || k == n - 1)) {
      const int m = log[j].mark;
      const Vec g = eval_jump_eps(coeffs, family, epsilon, x, mu,
                                  jumps.gamma(m), jumps.l3(m));
      if (!domain.contains(x + epsilon * g, 1e-9)) ++out.jump_violations;
      inc += epsilon * g;
      ++j;
    }
    if (!jumps.empty())
      inc -= dt * jump_mean_field(coeffs, family, epsilon, x, mu, jumps);
    stepper.advance(inc);
  }
  out.states.push_back(stepper.take_states());
  out.k_increments.push_back(stepper.take_k_increments());
  return out;
}

std::vector<Mat> moderate_rescale(const PathBundle& bundle_eps,
                                  const PathBundle& bundle_limit,
                                  const ModerateScale& scale) {
  require(bundle_eps.grid.n_steps == bundle_limit.grid.n_steps &&
              std::abs(bundle_eps.grid.T - bundle_limit.grid.T) <= 1e-12,
          "grid mismatch between the two bundles");
  require(bundle_limit.n_particles() >= 1, "empty limit bundle");
  require(bundle_eps.dim() == bundle_limit.dim(), "dimension mismatch");
  const double lam = scale.lambda(bundle_eps.epsilon);
  const Mat& base = bundle_limit.states[0];
  std::vector<Mat> scaled;
  scaled.reserve(bundle_eps.n_particles());
  for (const Mat& s : bundle_eps.states) scaled.push_back((s - base) / lam);
  return scaled;
}

}  // namespace mmv
