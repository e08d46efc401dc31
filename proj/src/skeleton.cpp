#include "mmv/skeleton.hpp"

#include <cmath>

namespace mmv {

Mat SkeletonSolution::k_path() const {
  Mat k(k_increments.rows(), k_increments.cols() + 1);
  k.col(0).setZero();
  for (int j = 0; j < k_increments.cols(); ++j)
    k.col(j + 1) = k.col(j) + k_increments.col(j);
  return k;
}

double SkeletonSolution::sup_norm() const {
  double m = 0.0;
  for (int j = 0; j < path.cols(); ++j) m = std::max(m, path.col(j).norm());
  return m;
}

double q1(const Control& phi, const TimeGrid& grid) {
  require(phi.n_steps() == grid.n_steps, "control grid mismatch");
  return 0.5 * grid.dt * phi.values().squaredNorm();
}

namespace {

void check_inputs(const KernelCoefficients& coeffs, const ConvexDomain& domain,
                  const JumpModel& jumps, const PathBundle& limit,
                  const Control& phi, const ControlField& psi) {
  require(coeffs.dim() == domain.dim(), "coefficient dimension mismatch");
  require(limit.n_particles() >= 1, "empty limit bundle");
  require(limit.dim() == domain.dim(), "limit path dimension mismatch");
  const int n = limit.grid.n_steps;
  require(phi.dim() == domain.dim() && phi.n_steps() == n,
          "control grid mismatch");
  if (!jumps.empty())
    require(psi.n_steps() == n && psi.n_marks() == jumps.n_marks(),
            "control field grid mismatch");
}

}  // namespace

SkeletonSolution solve_ldp_skeleton(const KernelCoefficients& coeffs,
                                    const ConvexDomain& domain,
                                    const JumpModel& jumps,
                                    const PathBundle& limit,
                                    const Control& phi,
                                    const ControlField& psi) {
  check_inputs(coeffs, domain, jumps, limit, phi, psi);
  const TimeGrid& grid = limit.grid;
  const int n = grid.n_steps;
  const double dt = grid.dt;
  const Mat& x0_path = limit.states[0];
  const bool phi_zero = phi.is_zero();

  SkeletonSolution out;
  out.grid = grid;
  out.cost_phi = q1(phi, grid);
  out.cost_psi = jumps.empty() ? 0.0 : q2(psi, jumps, grid);

  ProjectedStepper stepper(domain, x0_path.col(0), n);
  for (int k = 0; k < n; ++k) {
    const EmpiricalMeasure law0 = EmpiricalMeasure::dirac(x0_path.col(k));
    const Vec y = stepper.current();
    Vec inc = eval_drift(coeffs, y, law0) * dt;
    if (!phi_zero)
      inc += (eval_diffusion(coeffs, y, law0) * phi.at(k)) * dt;
    for (int m = 0; m < jumps.n_marks(); ++m) {
      const double tilt = psi.at(k, m) - 1.0;
      if (tilt != 0.0)
        inc += tilt * jumps.weight(m) * dt *
               eval_jump(coeffs, y, law0, jumps.gamma(m));
    }
    stepper.advance(inc);
  }
  out.path = stepper.take_states();
  out.k_increments = stepper.take_k_increments();
  return out;
}

SkeletonSolution solve_mdp_skeleton(const KernelCoefficients& coeffs,
                                    const ConvexDomain& domain,
                                    const JumpModel& jumps,
                                    const PathBundle& limit,
                                    const Control& phi,
                                    const ControlField& psi,
                                    MdpConstraint constraint) {
  check_inputs(coeffs, domain, jumps, limit, phi, psi);
  const TimeGrid& grid = limit.grid;
  const int n = grid.n_steps;
  const int d = domain.dim();
  const double dt = grid.dt;
  const Mat& x0_path = limit.states[0];

  SkeletonSolution out;
  out.grid = grid;
  out.mdp_mode = true;
  out.constrained = constraint == MdpConstraint::TranslatedDomain;
  out.cost_phi = q1(phi, grid);
  out.cost_psi = 0.0;
  for (int k = 0; k < n; ++k)
    for (int m = 0; m < jumps.n_marks(); ++m)
      out.cost_psi +=
          0.5 * dt * psi.at(k, m) * psi.at(k, m) * jumps.weight(m);

  out.path = Mat::Zero(d, n + 1);
  out.k_increments = Mat::Zero(d, n);
  Vec v = Vec::Zero(d);
  for (int k = 0; k < n; ++k) {
    const EmpiricalMeasure law0 = EmpiricalMeasure::dirac(x0_path.col(k));
    Vec inc = (grad_drift(coeffs, x0_path.col(k), law0) * v) * dt;
    if (!phi.is_zero())
      inc += (eval_diffusion(coeffs, x0_path.col(k), law0) * phi.at(k)) * dt;
    for (int m = 0; m < jumps.n_marks(); ++m) {
      const double w = psi.at(k, m);
      if (w != 0.0)
        inc += w * jumps.weight(m) * dt *
               eval_jump(coeffs, x0_path.col(k), law0, jumps.gamma(m));
    }
    Vec vhat = v + inc;
    if (constraint == MdpConstraint::TranslatedDomain) {
      // The correction acts on X0 + V; project there and pull back.
      const Vec shifted = domain.project(x0_path.col(k + 1) + vhat);
      Vec vnext = shifted - x0_path.col(k + 1);
      out.k_increments.col(k) = vhat - vnext;
      v = std::move(vnext);
    } else {
      v = std::move(vhat);
    }
    out.path.col(k + 1) = v;
  }
  return out;
}

LevelSetReport level_set_check(const Control& phi, const ControlField& psi,
                               const JumpModel& jumps, const TimeGrid& grid,
                               double m, double lambda) {
  require(m >= 0.0, "level must be nonnegative");
  require(lambda > 0.0, "lambda must be positive");
  LevelSetReport rep;
  rep.q1_value = q1(phi, grid);
  rep.q2_value = jumps.empty() ? 0.0 : q2(psi, jumps, grid);
  rep.q1_bound = m;
  rep.q2_bound = m * lambda * lambda;
  rep.q1_ok = rep.q1_value <= rep.q1_bound;
  rep.q2_ok = rep.q2_value <= rep.q2_bound;
  return rep;
}

}  // namespace mmv
