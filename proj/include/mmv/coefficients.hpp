#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mmv/geometry.hpp"
#include "mmv/jumps.hpp"
#include "mmv/types.hpp"

namespace mmv {

// Concave modulus kappa with kappa(0) = 0, nondecreasing.  LogCap is the
// non-Lipschitz profile u log(1/u) below delta, extended affinely above it;
// delta <= 1/e keeps the extension nondecreasing.
class ConcaveModulus {
 public:
  static ConcaveModulus linear(double slope);
  static ConcaveModulus log_cap(double delta);
  // c * u^p with p in (0, 1]; concave and nondecreasing but, unlike the two
  // variants above, integrable against 1/u at zero for p < 1.  Meant for the
  // nonlinear Gronwall machinery, not as a continuity modulus.
  static ConcaveModulus power(double scale, double exponent);

  double operator()(double u) const;
  bool is_linear() const { return kind_ == Kind::Linear; }
  double linear_slope() const { return slope_; }

 private:
  enum class Kind { Linear, LogCap, Power };
  Kind kind_ = Kind::Linear;
  double slope_ = 1.0;  // Linear slope or Power scale
  double delta_ = 0.0;  // LogCap cap or Power exponent
};

// Uniformly weighted particle cloud; columns are particles.
class EmpiricalMeasure {
 public:
  explicit EmpiricalMeasure(Mat particles);
  static EmpiricalMeasure dirac(const Vec& x);

  int dim() const { return static_cast<int>(particles_.rows()); }
  int size() const { return static_cast<int>(particles_.cols()); }
  const Mat& particles() const { return particles_; }
  Vec mean() const { return particles_.rowwise().mean(); }

 private:
  Mat particles_;
};

// Drift kernel b~(x, y).  The affine form c0 + cx x + cy y covers the whole
// catalog; the named constructors keep configs readable.
struct DriftKernel {
  Vec c0;
  double cx = 0.0;
  double cy = 0.0;

  static DriftKernel zero(int dim);
  static DriftKernel constant(const Vec& c);
  // b~(x, y) = -alpha x + beta (y - x)
  static DriftKernel mean_field_ou(int dim, double alpha, double beta);
  static DriftKernel affine(const Vec& c0, double cx, double cy);

  int dim() const { return static_cast<int>(c0.size()); }
  bool depends_on_y() const { return cy != 0.0; }
  Vec eval(const Vec& x, const Vec& y) const;
  Mat jacobian_x() const;  // cx * I, exact
};

// Diffusion kernel sigma~(x, y): a constant matrix plus an optional diagonal
// affine part diag(s1 x + s2 y).
struct DiffusionKernel {
  Mat sigma0;
  double s1 = 0.0;
  double s2 = 0.0;

  static DiffusionKernel zero(int dim);
  static DiffusionKernel constant(const Mat& sigma);
  static DiffusionKernel scalar(int dim, double s);
  static DiffusionKernel affine_diag(const Mat& sigma0, double s1, double s2);

  int dim() const { return static_cast<int>(sigma0.rows()); }
  bool depends_on_y() const { return s2 != 0.0; }
  bool is_zero() const;
  Mat eval(const Vec& x, const Vec& y) const;
};

// Jump amplitude kernel G~(x, y, z) = gamma(z) (c0 + c1 x + c2 y); gamma is
// looked up per mark in the JumpModel.
struct JumpAmplitudeKernel {
  Vec c0;
  double c1 = 0.0;
  double c2 = 0.0;

  static JumpAmplitudeKernel none(int dim);
  static JumpAmplitudeKernel affine(const Vec& c0, double c1, double c2);

  int dim() const { return static_cast<int>(c0.size()); }
  bool depends_on_y() const { return c2 != 0.0; }
  Vec eval(const Vec& x, const Vec& y, double gamma_z) const;
};

struct KernelCoefficients {
  DriftKernel drift;
  DiffusionKernel diffusion;
  JumpAmplitudeKernel jump;
  ConcaveModulus modulus = ConcaveModulus::linear(1.0);
  double growth_L = 1.0;
  bool analytic_jacobian = true;

  int dim() const { return drift.dim(); }
};

// Decay profile rho(eps) for the coefficient perturbations: zero or c eps^p.
struct DecayProfile {
  double c = 0.0;
  double p = 1.0;

  static DecayProfile zero() { return {0.0, 1.0}; }
  static DecayProfile power(double c, double p);
  double operator()(double eps) const;
  bool is_zero() const { return c == 0.0; }
};

// Bounded perturbation direction with Euclidean sup-norm at most one.
struct DirectionField {
  bool active = false;
  double phase = 0.0;

  static DirectionField none() { return {}; }
  static DirectionField sine(double phase);
  Vec eval(const Vec& x, const Vec& y) const;  // zero vector when inactive
};

// Vanishing coefficient family: b_eps = b + rho_b(eps) h_b, likewise for the
// diagonal diffusion direction, and G_eps = G + rho_g(eps) L3(z) h_g.
struct PerturbationFamily {
  DecayProfile rho_b = DecayProfile::zero();
  DecayProfile rho_sigma = DecayProfile::zero();
  DecayProfile rho_g = DecayProfile::zero();
  DirectionField h_b = DirectionField::none();
  DirectionField h_sigma = DirectionField::none();
  DirectionField h_g = DirectionField::none();

  bool is_zero() const {
    return rho_b.is_zero() && rho_sigma.is_zero() && rho_g.is_zero();
  }
};

// Mean-field evaluations (1/N) sum_j kernel(x, X^j).  Kernels that ignore y
// collapse to a single evaluation; both routes agree exactly for the affine
// catalog on a Dirac measure.
Vec eval_drift(const KernelCoefficients& k, const Vec& x,
               const EmpiricalMeasure& mu);
Mat eval_diffusion(const KernelCoefficients& k, const Vec& x,
                   const EmpiricalMeasure& mu);
Vec eval_jump(const KernelCoefficients& k, const Vec& x,
              const EmpiricalMeasure& mu, double gamma_z);

// Jacobian of the mean-field drift in x: analytic when the catalog provides
// it, otherwise a central difference with h = 1e-6 (1 + |x|).
Mat grad_drift(const KernelCoefficients& k, const Vec& x,
               const EmpiricalMeasure& mu);

// Perturbed evaluations at noise level eps; the zero family reproduces the
// unperturbed values bit for bit.
Vec eval_drift_eps(const KernelCoefficients& k, const PerturbationFamily& f,
                   double eps, const Vec& x, const EmpiricalMeasure& mu);
Mat eval_diffusion_eps(const KernelCoefficients& k, const PerturbationFamily& f,
                       double eps, const Vec& x, const EmpiricalMeasure& mu);
Vec eval_jump_eps(const KernelCoefficients& k, const PerturbationFamily& f,
                  double eps, const Vec& x, const EmpiricalMeasure& mu,
                  double gamma_z, double l3_z);

struct HypothesisCheck {
  std::string name;
  bool pass = true;
  bool conservative = false;  // a W2 upper bound stood in for the exact value
  double worst = 0.0;         // most positive violation found
  std::string witness;
};

struct HypothesisReport {
  std::vector<HypothesisCheck> checks;
  bool all_pass() const;
  const HypothesisCheck* find(const std::string& name) const;
};

struct HypothesisCheckConfig {
  int samples = 200;
  int measure_particles = 8;
  double sample_scale = 2.0;
  std::uint64_t seed = 1;
  std::vector<double> eps_grid = {0.4, 0.2, 0.1, 0.05};
  double theta = 0.25;    // moderate scale exponent for the rho_b / lambda ratio
  double lip_L = -1.0;    // one-sided Lipschitz constant; < 0 uses growth_L
  double grad_L = -1.0;   // gradient continuity constant; < 0 uses growth_L
  double grad_q = 2.0;    // gradient continuity exponent
  const Mat* limit_path = nullptr;  // d x (n+1) states for the integral check
  double dt = 0.0;
};

// Sampling-based falsification of the standing assumptions.  Reports per
// hypothesis; never throws on a violation.
HypothesisReport check_hypotheses(const KernelCoefficients& k,
                                  const PerturbationFamily& f,
                                  const JumpModel& jumps,
                                  const ConvexDomain& domain,
                                  const HypothesisCheckConfig& cfg);

}  // namespace mmv
