#pragma once

#include <cstdint>
#include <limits>
#include <vector>

#include "mmv/skeleton.hpp"

namespace mmv {

enum class Regime { LDP, MDP };

// Target event for rare-event queries.  Terminal events read the final state
// of the (deviation) path; the sup-norm event asks the path to leave a tube
// around its reference (the deterministic limit in LDP mode, zero in MDP
// mode).
struct Event {
  enum class Kind { TerminalPoint, TerminalHalfspace, SupNorm };
  Kind kind = Kind::TerminalPoint;
  Vec target;           // TerminalPoint
  Vec normal;           // TerminalHalfspace <normal, Y_T> >= offset
  double offset = 0.0;
  double threshold = 0.0;  // SupNorm: sup_t |Y_t - ref_t| >= threshold

  static Event terminal_point(const Vec& target);
  static Event halfspace(const Vec& normal, double offset);
  static Event sup_norm(double threshold);

  // Distance-to-event of a path (d x (n+1)); ref may be null (zero path).
  double residual(const Mat& path, const Mat* ref = nullptr) const;
  // Signed boundary gap: equals the residual outside the event set, goes
  // negative inside it.  The optimizer penalizes this so the landscape stays
  // smooth on both sides of the boundary (minimizers touch the boundary).
  double signed_gap(const Mat& path, const Mat* ref = nullptr) const;
  // Monte Carlo indicator; rejects TerminalPoint (a null event for sampling).
  bool hit(const Mat& path, const Mat* ref = nullptr) const;
};

struct RateQuery {
  Regime regime = Regime::LDP;
  Event event;
  int control_stride = 1;   // control cells are stride simulation steps wide
  int iterations = 60;      // descent sweeps per penalty round
  int restarts = 4;
  int penalty_rounds = 4;   // penalty grows tenfold per round
  double penalty0 = 100.0;
  double residual_tol = 1e-3;
  std::uint64_t seed = 1;
  bool half_q2 = false;
  MdpConstraint mdp_constraint = MdpConstraint::None;
};

struct RateResult {
  double value = std::numeric_limits<double>::infinity();
  bool reachable = false;  // coarse feasibility scan outcome
  bool converged = false;  // event met within residual_tol
  double residual = std::numeric_limits<double>::infinity();
  double objective = std::numeric_limits<double>::infinity();
  int winner_start = -1;
  std::vector<double> restart_objectives;
  Control phi;
  ControlField psi;  // positive tilt field (LDP) or signed field (MDP)
  SkeletonSolution solution;
};

// Energy of a control pair under the given regime: quadratic plus entropy in
// the small-noise regime, quadratic plus quadratic in the moderate regime.
double control_cost(const Control& phi, const ControlField& psi,
                    const JumpModel& jumps, const TimeGrid& grid,
                    Regime regime, bool half_q2 = false);

// Penalized multi-start coordinate descent over piecewise-constant controls.
// Deterministic given query.seed; infeasible events return the infinity
// sentinel with reachable = false.
RateResult minimize_rate(const RateQuery& query,
                         const KernelCoefficients& coeffs,
                         const ConvexDomain& domain, const JumpModel& jumps,
                         const PathBundle& limit);

// Minimum-energy terminal steering for the frozen linear deviation dynamics
//   V_{k+1} = (I + A_k dt) V_k + B_k u_k dt,
// where B_k collects the diffusion columns and the per-mark jump columns
// weighted by sqrt(nu_m).  Exact discrete solve via the controllability
// Gramian; throws when the target is unreachable (singular Gramian).
struct LqSolution {
  double value = 0.0;
  Control phi;
  ControlField psi;  // signed field per mark
};

LqSolution lq_oracle(const std::vector<Mat>& a_path,
                     const std::vector<Mat>& sigma_path,
                     const std::vector<Mat>& jump_cols_path,
                     const std::vector<double>& jump_weights, const Vec& v,
                     double T, double dt);

// Assemble the frozen-coefficient paths along a deterministic limit bundle
// and run the oracle against terminal target v.
LqSolution lq_from_problem(const KernelCoefficients& coeffs,
                           const JumpModel& jumps, const PathBundle& limit,
                           const Vec& v);

}  // namespace mmv
