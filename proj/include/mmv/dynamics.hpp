#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mmv/coefficients.hpp"
#include "mmv/geometry.hpp"
#include "mmv/jumps.hpp"
#include "mmv/types.hpp"

namespace mmv {

// Piecewise-constant vector control on the step grid, one column per step.
class Control {
 public:
  Control() = default;
  Control(int dim, int n_steps) : values_(Mat::Zero(dim, n_steps)) {}
  static Control zero(int dim, int n_steps) { return Control(dim, n_steps); }
  static Control constant(const Vec& value, int n_steps);

  int dim() const { return static_cast<int>(values_.rows()); }
  int n_steps() const { return static_cast<int>(values_.cols()); }
  Vec at(int step) const { return values_.col(step); }
  void set(int step, const Vec& v) { values_.col(step) = v; }
  Mat& values() { return values_; }
  const Mat& values() const { return values_; }
  bool is_zero() const { return values_.size() == 0 || values_.isZero(0.0); }

 private:
  Mat values_;
};

// One reflected trajectory set on a shared grid.  states[i] is d x (n+1),
// k_increments[i] is d x n with the per-step correction X_hat - X_{k+1};
// cumulative corrections start at zero by construction.
struct PathBundle {
  TimeGrid grid{1.0, 1.0};
  double epsilon = 0.0;
  std::uint64_t seed = 0;
  std::string scheme = "projected-euler";
  int jump_violations = 0;  // pre-projection jump landings outside the domain
  std::vector<Mat> states;
  std::vector<Mat> k_increments;
  std::vector<JumpLog> jump_logs;

  int n_particles() const { return static_cast<int>(states.size()); }
  int dim() const { return states.empty() ? 0 : static_cast<int>(states[0].rows()); }
  // Cumulative correction path, d x (n+1), first column zero.
  Mat k_path(int particle) const;
  // Cloud snapshot at grid node k as an empirical measure.
  EmpiricalMeasure measure_at(int node) const;
  double max_state_norm() const;
};

// Start-of-node cloud law for every grid node, usable as a companion law.
std::vector<EmpiricalMeasure> law_path(const PathBundle& bundle);

// Moderate-deviation scaling lambda(eps) = eps^theta with theta in (0, 1/2);
// the associated speed eps / lambda^2 = eps^(1 - 2 theta) vanishes with eps.
struct ModerateScale {
  double theta;
  explicit ModerateScale(double theta_in);
  double lambda(double eps) const;
  double speed(double eps) const;
};

// Shared projected explicit Euler core: accumulate an increment, project back
// onto the domain, record the correction.  Used by the noisy propagators and
// by the deterministic skeleton solvers so all of them apply the identical
// discrete Skorokhod treatment.
class ProjectedStepper {
 public:
  ProjectedStepper(const ConvexDomain& domain, const Vec& x0, int n_steps);

  void advance(const Vec& increment);
  const Vec& current() const { return current_; }
  int step() const { return cursor_; }
  Mat take_states() { return std::move(states_); }
  Mat take_k_increments() { return std::move(k_incs_); }

 private:
  const ConvexDomain* domain_;
  Mat states_;
  Mat k_incs_;
  Vec current_;
  int cursor_ = 0;
};

// Deterministic limit path: projected Euler on x' = b(x, delta_x) with the
// measure argument frozen to the path's own Dirac law.
PathBundle solve_limit(const KernelCoefficients& coeffs,
                       const ConvexDomain& domain, const Vec& x0, double T,
                       double dt);

// Interacting cloud at noise level eps: per step and particle, drift plus
// sqrt(eps) diffusion plus compensated eps-scaled jumps from a rate 1/eps
// Poisson measure, then one projection.  The cloud's own start-of-step
// empirical measure replaces the law.  eps = 0 degenerates to the limit
// dynamics.  Deterministic given the seed.
PathBundle simulate_particles(const KernelCoefficients& coeffs,
                              const PerturbationFamily& family,
                              const ConvexDomain& domain,
                              const JumpModel& jumps, const Vec& x0, double T,
                              double dt, double epsilon, int n_particles,
                              std::uint64_t seed);

// Single controlled trajectory: adds the control drift sigma(Z, mu) phi,
// thins the jump measure by psi, and keeps the uncontrolled compensator.
// The measure argument is the law of the uncontrolled system, supplied per
// grid node as companion_law (n_points entries on the same grid).  With the
// null control (phi = 0, psi = 1) and the same seed this reproduces particle
// zero of simulate_particles bit for bit.
PathBundle simulate_controlled(const KernelCoefficients& coeffs,
                               const PerturbationFamily& family,
                               const ConvexDomain& domain,
                               const JumpModel& jumps,
                               const std::vector<EmpiricalMeasure>& companion_law,
                               const Control& phi, const ControlField& psi,
                               const Vec& x0, double T, double dt,
                               double epsilon, std::uint64_t seed);

// Per-particle rescaled deviation paths (X^eps - X^0) / lambda(eps).
std::vector<Mat> moderate_rescale(const PathBundle& bundle_eps,
                                  const PathBundle& bundle_limit,
                                  const ModerateScale& scale);

}  // namespace mmv
