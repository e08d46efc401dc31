#pragma once

#include "mmv/dynamics.hpp"

namespace mmv {

// Deterministic controlled path with its correction and control energies.
// For the small-noise skeleton cost_phi / cost_psi hold (1/2) int |phi|^2 and
// the entropy energy of psi; in moderate mode both are quadratic energies.
struct SkeletonSolution {
  TimeGrid grid{1.0, 1.0};
  Mat path;          // d x (n+1)
  Mat k_increments;  // d x n
  double cost_phi = 0.0;
  double cost_psi = 0.0;
  bool mdp_mode = false;
  bool constrained = false;  // moderate mode: deviation projection enabled

  double cost() const { return cost_phi + cost_psi; }
  Mat k_path() const;
  double terminal(int component = 0) const {
    return path(component, grid.n_steps);
  }
  double sup_norm() const;
};

// (1/2) dt sum_k |phi_k|^2, the quadratic energy of a piecewise-constant
// control on the grid.
double q1(const Control& phi, const TimeGrid& grid);

// Small-noise skeleton: projected Euler for
//   dY = b(Y, law0) dt + sigma(Y, law0) phi dt
//        + sum_m G(Y, law0, z_m)(psi_m - 1) nu_m dt - dK,
// with law0 the Dirac path of the supplied deterministic limit.  With the
// null control this reproduces the limit bundle exactly.
SkeletonSolution solve_ldp_skeleton(const KernelCoefficients& coeffs,
                                    const ConvexDomain& domain,
                                    const JumpModel& jumps,
                                    const PathBundle& limit,
                                    const Control& phi,
                                    const ControlField& psi);

enum class MdpConstraint {
  None,              // deviation treated as interior: correction stays zero
  TranslatedDomain,  // project X0 + V back onto the domain each step
};

// Moderate-deviation skeleton: linear projected Euler for
//   dV = grad_b(X0, law0) V dt + sigma(X0, law0) phi dt
//        + sum_m G(X0, law0, z_m) psi_m nu_m dt - dKhat,   V_0 = 0,
// with psi a signed field.  Coefficients are frozen along the limit path.
SkeletonSolution solve_mdp_skeleton(const KernelCoefficients& coeffs,
                                    const ConvexDomain& domain,
                                    const JumpModel& jumps,
                                    const PathBundle& limit,
                                    const Control& phi,
                                    const ControlField& psi,
                                    MdpConstraint constraint = MdpConstraint::None);

struct LevelSetReport {
  double q1_value = 0.0;
  double q2_value = 0.0;
  double q1_bound = 0.0;
  double q2_bound = 0.0;
  bool q1_ok = false;
  bool q2_ok = false;
  bool ok() const { return q1_ok && q2_ok; }
};

// Level-set membership of a control pair: Q1(phi) <= m and Q2(psi) <= m
// lambda^2.  lambda defaults to 1 (small-noise regime); pass the moderate
// scale value to shrink the jump-energy budget accordingly.
LevelSetReport level_set_check(const Control& phi, const ControlField& psi,
                               const JumpModel& jumps, const TimeGrid& grid,
                               double m, double lambda = 1.0);

}  // namespace mmv
