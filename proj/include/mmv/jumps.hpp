#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "mmv/types.hpp"

namespace mmv {

// Finite-activity mark space: a list of atoms, each carrying its intensity
// weight, jump amplitude gamma, and the bounding values L1, L2, L3 used by
// the hypothesis checker and the perturbation machinery.  An interval mark
// space reduces to midpoint quadrature cells at construction, so downstream
// code only ever sees atoms.
class JumpModel {
 public:
  JumpModel() = default;  // no jumps

  static JumpModel finite(std::vector<double> marks, std::vector<double> weights,
                          std::vector<double> gamma,
                          std::vector<double> l1 = {},
                          std::vector<double> l2 = {},
                          std::vector<double> l3 = {});

  static JumpModel interval(double a, double b, int cells,
                            const std::function<double(double)>& density,
                            const std::function<double(double)>& gamma);

  int n_marks() const { return static_cast<int>(marks_.size()); }
  bool empty() const { return marks_.empty(); }
  double total_mass() const { return total_mass_; }

  double mark(int i) const { return marks_[i]; }
  double weight(int i) const { return weights_[i]; }
  double gamma(int i) const { return gamma_[i]; }
  double l1(int i) const { return l1_[i]; }
  double l2(int i) const { return l2_[i]; }
  double l3(int i) const { return l3_[i]; }
  const std::vector<double>& weights() const { return weights_; }

 private:
  std::vector<double> marks_, weights_, gamma_, l1_, l2_, l3_;
  double total_mass_ = 0.0;
};

// Piecewise-constant control field psi(t, z) on time cells x marks.  LDP
// controls are nonnegative; the moderate-deviation regime reuses the same
// container with signed entries.
class ControlField {
 public:
  ControlField() = default;
  ControlField(int n_steps, int n_marks, double value);

  int n_steps() const { return static_cast<int>(values_.cols()); }
  int n_marks() const { return static_cast<int>(values_.rows()); }

  double at(int step, int mark) const { return values_(mark, step); }
  void set(int step, int mark, double v) { values_(mark, step) = v; }

  double max_value() const;
  bool nonnegative() const;
  bool identically_one() const;

  const Mat& values() const { return values_; }
  Mat& values() { return values_; }

 private:
  Mat values_;  // n_marks rows, n_steps columns
};

// Pointwise entropy integrand: ell(x) = x log x - x + 1, ell(0) = 1.
double ell(double x);

// Time-and-mark quadrature of ell(psi) against nu; zero exactly at psi == 1.
// The optional factor-half convention is off by default.
double q2(const ControlField& psi, const JumpModel& model, const TimeGrid& grid,
          bool half = false);

struct JumpEvent {
  double time;
  int mark;
};
using JumpLog = std::vector<JumpEvent>;

// Poisson random measure on [0, T] x marks with intensity
// rate_scale * weight(i); events returned in time order, pinned by the seed.
JumpLog sample_prm(const JumpModel& model, double T, double rate_scale,
                   std::uint64_t seed);

// Thinned measure with intensity rate_scale * psi(t, z) * weight(z).
// Requires psi >= 0.  With psi identically one this reproduces sample_prm
// event for event at equal seeds.
JumpLog sample_controlled_prm(const JumpModel& model, const ControlField& psi,
                              const TimeGrid& grid, double rate_scale,
                              std::uint64_t seed);

}  // namespace mmv
