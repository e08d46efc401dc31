#include "mmv/jumps.hpp"

#include <algorithm>
#include <cmath>

#include "mmv/rng.hpp"

namespace mmv {

namespace {

void check_finite(const std::vector<double>& v, const char* what) {
  for (double x : v)
    require(std::isfinite(x), std::string("JumpModel: non-finite ") + what);
}

}  // namespace

JumpModel JumpModel::finite(std::vector<double> marks,
                            std::vector<double> weights,
                            std::vector<double> gamma, std::vector<double> l1,
                            std::vector<double> l2, std::vector<double> l3) {
  const std::size_t m = marks.size();
  require(weights.size() == m && gamma.size() == m,
          "JumpModel: marks, weights, gamma must align");
  for (double w : weights) require(w > 0.0, "JumpModel: weights must be positive");
  check_finite(marks, "mark");
  check_finite(weights, "weight");
  check_finite(gamma, "gamma");

  auto fill = [&](std::vector<double>& dst, const char* what) {
    if (dst.empty()) {
      dst.resize(m);
      for (std::size_t i = 0; i < m; ++i) dst[i] = std::abs(gamma[i]);
    }
    require(dst.size() == m, std::string("JumpModel: bad length for ") + what);
    check_finite(dst, what);
    for (double x : dst)
      require(x >= 0.0, std::string("JumpModel: ") + what + " must be >= 0");
  };
  fill(l1, "L1");
  fill(l2, "L2");
  fill(l3, "L3");

  JumpModel jm;
  jm.marks_ = std::move(marks);
  jm.weights_ = std::move(weights);
  jm.gamma_ = std::move(gamma);
  jm.l1_ = std::move(l1);
  jm.l2_ = std::move(l2);
  jm.l3_ = std::move(l3);
  // Square-integrability against a finite measure is a finite-sum check here.
  double mass = 0.0, m2 = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    mass += jm.weights_[i];
    m2 += (jm.l1_[i] * jm.l1_[i] + jm.l2_[i] * jm.l2_[i] +
           jm.l3_[i] * jm.l3_[i] + jm.gamma_[i] * jm.gamma_[i]) *
          jm.weights_[i];
  }
  require(std::isfinite(mass) && std::isfinite(m2),
          "JumpModel: bounding values not square integrable");
  jm.total_mass_ = mass;
  return jm;
}

JumpModel JumpModel::interval(double a, double b, int cells,
                              const std::function<double(double)>& density,
                              const std::function<double(double)>& gamma) {
  require(b > a, "JumpModel::interval: need b > a");
  require(cells >= 1, "JumpModel::interval: need at least one cell");
  const double dz = (b - a) / cells;
  std::vector<double> marks(cells), weights(cells), g(cells);
  for (int i = 0; i < cells; ++i) {
    const double z = a + (i + 0.5) * dz;
    marks[i] = z;
    const double dens = density(z);
    require(dens > 0.0, "JumpModel::interval: density must be positive");
    weights[i] = dens * dz;
    g[i] = gamma(z);
  }
  return finite(std::move(marks), std::move(weights), std::move(g));
}

ControlField::ControlField(int n_steps, int n_marks, double value) {
  require(n_steps >= 1 && n_marks >= 0, "ControlField: bad shape");
  values_ = Mat::Constant(n_marks, n_steps, value);
}

double ControlField::max_value() const {
  if (values_.size() == 0) return 0.0;
  return values_.maxCoeff();
}

bool ControlField::nonnegative() const {
  return values_.size() == 0 || values_.minCoeff() >= 0.0;
}

bool ControlField::identically_one() const {
  if (values_.size() == 0) return true;
  return (values_.array() == 1.0).all();
}

double ell(double x) {
  require(x >= 0.0, "ell: argument must be nonnegative");
  if (x == 0.0) return 1.0;
  return x * std::log(x) - x + 1.0;
}

double q2(const ControlField& psi, const JumpModel& model, const TimeGrid& grid,
          bool half) {
  if (model.empty()) return 0.0;
  require(psi.n_marks() == model.n_marks() && psi.n_steps() == grid.n_steps,
          "q2: control field shape must match model and grid");
  double acc = 0.0;
  for (int k = 0; k < psi.n_steps(); ++k)
    for (int m = 0; m < psi.n_marks(); ++m)
      acc += ell(psi.at(k, m)) * model.weight(m);
  acc *= grid.dt;
  return half ? 0.5 * acc : acc;
}

JumpLog sample_prm(const JumpModel& model, double T, double rate_scale,
                   std::uint64_t seed) {
  require(T > 0.0 && rate_scale > 0.0, "sample_prm: T and rate must be positive");
  JumpLog log;
  if (model.empty()) return log;
  RngStream rng(seed);
  const long n = rng.poisson(rate_scale * model.total_mass() * T);
  std::vector<double> times(n);
  for (long i = 0; i < n; ++i) times[i] = T * rng.uniform01();
  std::sort(times.begin(), times.end());
  log.reserve(n);
  for (long i = 0; i < n; ++i) {
    const int mark = rng.pick_weighted(model.weights(), model.total_mass());
    log.push_back({times[i], mark});
  }
  return log;
}

JumpLog sample_controlled_prm(const JumpModel& model, const ControlField& psi,
                              const TimeGrid& grid, double rate_scale,
                              std::uint64_t seed) {
  JumpLog log;
  if (model.empty()) return log;
  require(psi.n_marks() == model.n_marks() && psi.n_steps() == grid.n_steps,
          "sample_controlled_prm: control field shape mismatch");
  require(psi.nonnegative(), "sample_controlled_prm: psi must be nonnegative");
  // The null control must reproduce the base measure draw for draw, so the
  // uncontrolled sampler handles it without spending thinning variates.
  if (psi.identically_one()) return sample_prm(model, grid.T, rate_scale, seed);

  const double psi_max = psi.max_value();
  if (psi_max == 0.0) return log;

  RngStream rng(seed);
  const long n = rng.poisson(rate_scale * psi_max * model.total_mass() * grid.T);
  std::vector<double> times(n);
  for (long i = 0; i < n; ++i) times[i] = grid.T * rng.uniform01();
  std::sort(times.begin(), times.end());
  log.reserve(n);
  for (long i = 0; i < n; ++i) {
    const int mark = rng.pick_weighted(model.weights(), model.total_mass());
    const int cell = std::min(static_cast<int>(times[i] / grid.dt),
                              grid.n_steps - 1);
    if (rng.uniform01() * psi_max < psi.at(cell, mark))
      log.push_back({times[i], mark});
  }
  return log;
}

}  // namespace mmv
