#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace mmv {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw std::invalid_argument(msg);
}

// Uniform time grid on [0, T].  dt must divide T (grids are never stretched
// to fit; a mismatch is a configuration error).
struct TimeGrid {
  double T = 1.0;
  double dt = 1e-2;
  int n_steps = 100;

  TimeGrid() = default;
  TimeGrid(double T_, double dt_) : T(T_), dt(dt_) {
    require(T_ > 0.0 && dt_ > 0.0, "TimeGrid: T and dt must be positive");
    double n_real = T_ / dt_;
    double n_round = std::round(n_real);
    require(std::abs(n_round * dt_ - T_) <= 1e-12 * std::max(1.0, T_),
            "TimeGrid: dt must divide T");
    n_steps = static_cast<int>(n_round);
    require(n_steps >= 1, "TimeGrid: need at least one step");
  }

  double time(int k) const { return dt * k; }
  int n_points() const { return n_steps + 1; }
};

}  // namespace mmv
