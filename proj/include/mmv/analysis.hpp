#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mmv/coefficients.hpp"
#include "mmv/rate.hpp"
#include "mmv/types.hpp"

namespace mmv {

struct W2Result {
  double value = 0.0;
  bool bound_only = false;  // paired-coupling upper bound (dimension > 1)
};

// Order-2 Wasserstein distance between uniform particle clouds.  In one
// dimension the quantile coupling is exact and particle counts may differ;
// in higher dimension the identity pairing gives an upper bound and counts
// must match.
W2Result wasserstein2(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu);

// Data of the nonlinear Gronwall bound g(t) <= f^{-1}(f(C) + int_0^t q),
// where f(r) = int_1^r ds / rho(s) and rho is a positive nondecreasing
// modulus.  q is piecewise constant per step (size grid.n_steps).
struct BihariSpec {
  double C = 1.0;
  std::vector<double> q;
  ConcaveModulus rho = ConcaveModulus::linear(1.0);
  TimeGrid grid{1.0, 1.0};
};

// Nodewise bound values (size grid.n_steps + 1, starting at C).  Where
// f(C) + int q leaves the range of f the bound is +infinity from that node
// onward (finite-time blowup of the comparison equation).
std::vector<double> bihari_bound(const BihariSpec& spec);

// One experiment's model data: everything needed to run the particle system
// or its deterministic limit at a given noise level.
struct ProblemSpec {
  KernelCoefficients coeffs;
  PerturbationFamily family;
  ConvexDomain domain = ConvexDomain::whole_space(1);
  JumpModel jumps;
  Vec x0;
  double T = 1.0;
  double dt = 0.01;
};

struct TailPoint {
  double epsilon = 0.0;
  double speed = 0.0;       // epsilon, or epsilon / lambda(epsilon)^2
  double p_hat = 0.0;
  int hits = 0;
  int replicas = 0;
  double std_err = 0.0;     // binomial standard error of p_hat
  double scaled_log = 0.0;  // speed * log(p_hat); 0 when dropped
  bool dropped = false;     // fewer than 10 hits
};

struct TailEstimate {
  std::vector<TailPoint> points;
  double slope = 0.0;      // d(scaled log)/d(speed) of the WLS fit
  double intercept = 0.0;  // extrapolated scaled log at speed 0
  double intercept_se = 0.0;
  int n_used = 0;
  std::vector<std::string> warnings;
};

// Monte Carlo tail probabilities of the event at each epsilon, with the
// deviation-speed extrapolation.  Pass scale = nullptr for the small-noise
// regime (speed epsilon, event read on the state path) or a ModerateScale
// for the moderate regime (speed epsilon / lambda^2, event read on the
// rescaled deviation path).  Deterministic given the seed; every epsilon
// with fewer than 10 hits is dropped from the fit with a warning, and an
// estimate with no surviving epsilon throws.  Replicas may run on several
// worker threads; results are reduced in replica order, so the output is
// bit-identical for every worker count.
TailEstimate estimate_tail(const ProblemSpec& prob, const Event& event,
                           const std::vector<double>& eps_grid, int replicas,
                           const ModerateScale* scale, std::uint64_t seed,
                           int workers = 1);

enum class StudyMode { Limit, Rate, Controlled };

struct StudyPoint {
  double epsilon = 0.0;
  double mean_sq_sup = 0.0;  // E sup_t |path - reference|^2 estimate
  double std_err = 0.0;
};

struct StudyReport {
  StudyMode mode = StudyMode::Limit;
  std::vector<StudyPoint> points;
  double slope = 0.0;  // log-log WLS slope of mean_sq_sup against epsilon
  double slope_se = 0.0;
  double log_intercept = 0.0;
  double c_hat = 0.0;  // Rate mode: max of mean_sq_sup over its upper bound
  bool strictly_decreasing = false;
};

// Mean-square sup-distance study across the epsilon grid under common random
// numbers (replica r reuses one seed stream at every epsilon).  Limit/Rate
// modes compare the noisy path against the deterministic limit; Controlled
// mode compares the controlled equation against the controlled skeleton and
// requires phi (and psi when jumps are present).  Rate mode also reports the
// empirical constant of the bound epsilon + rho_b^2 + eps rho_sigma^2 +
// eps rho_G^2.  Replica work may spread over worker threads with ordered
// reduction: output is bit-identical for every worker count.
StudyReport convergence_study(const ProblemSpec& prob,
                              const std::vector<double>& eps_grid,
                              int replicas, StudyMode mode, std::uint64_t seed,
                              const Control* phi = nullptr,
                              const ControlField* psi = nullptr,
                              int workers = 1);

}  // namespace mmv
