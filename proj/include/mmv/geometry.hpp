#pragma once

#include <cstdint>
#include <limits>
#include <vector>

#include "mmv/types.hpp"

namespace mmv {

enum class DomainKind { WholeSpace, Box, Ball, Polyhedron };

// A point of the graph of the normal-cone operator: y lies in the exterior
// normal cone of the domain at x (y = 0 whenever x is interior).
struct GraphSample {
  Vec x;
  Vec y;
};

// Closed convex domain K with an exact metric projection.  Polyhedra carry a
// strictly feasible point, validated at construction, which seeds the
// active-set solver.  Instances are immutable.
class ConvexDomain {
 public:
  static ConvexDomain whole_space(int dim);
  static ConvexDomain box(const Vec& lo, const Vec& hi);
  static ConvexDomain ball(const Vec& center, double radius);
  static ConvexDomain polyhedron(const Mat& normals, const Vec& offsets,
                                 const Vec& interior_point);

  DomainKind kind() const { return kind_; }
  int dim() const { return dim_; }

  bool contains(const Vec& x, double tol = 0.0) const;

  // Radius of the largest ball centered at x inside the domain; negative when
  // x is outside, +inf on the whole space.
  double interior_radius(const Vec& x) const;

  // A deterministic interior point (origin, box midpoint, ball center, or the
  // polyhedron's validated seed point).
  Vec anchor() const;

  Vec project(const Vec& x) const;

  // (I + lambda * dI_K)^{-1} x; independent of lambda > 0 for indicator
  // subdifferentials.
  Vec resolvent(double lambda, const Vec& x) const;

  // Optimality diagnostic for px as the projection of x: feasibility plus the
  // stationarity leftover of x - px against the active normal cone.
  double projection_kkt_residual(const Vec& x, const Vec& px) const;

  // n pairs (x, y) with y in the normal cone at x, half of them interior
  // (y = 0).  Built by projecting ambient draws: for any raw point p,
  // p - project(p) is an exterior normal at project(p).
  std::vector<GraphSample> sample_graph(int n, std::uint64_t seed) const;

  const Vec& box_lo() const { return lo_; }
  const Vec& box_hi() const { return hi_; }
  const Vec& ball_center() const { return center_; }
  double ball_radius() const { return radius_; }
  const Mat& poly_normals() const { return normals_; }
  const Vec& poly_offsets() const { return offsets_; }

 private:
  ConvexDomain() = default;

  Vec project_polyhedron(const Vec& x) const;

  DomainKind kind_ = DomainKind::WholeSpace;
  int dim_ = 0;
  Vec lo_, hi_;        // box
  Vec center_;         // ball
  double radius_ = 0;  // ball
  Mat normals_;        // polyhedron rows a_i
  Vec offsets_;        // polyhedron c_i
  Vec interior_;       // strictly feasible seed point
};

struct MonotonicityReport {
  bool pass = true;
  double min_inner = std::numeric_limits<double>::infinity();
  int worst_step = -1;
  int worst_sample = -1;  // graph mode only
  double tol = 0.0;
};

// Discrete monotonicity of a reflected path (states d x (n+1), k_increments
// d x n) against normal-cone graph samples: for every step k and sample
// (x, y), <X_{k+1} - x, dK_k - y dt> >= -tol.  A negative tol requests the
// default 10 * dt * (1 + max ||X||).
MonotonicityReport check_pair_monotonicity(const Mat& states,
                                           const Mat& k_increments, double dt,
                                           const std::vector<GraphSample>& graph,
                                           double tol = -1.0);

// Pairwise form for two reflected paths on the same grid:
// <X_{k+1} - X'_{k+1}, dK_k - dK'_k> >= -tol.
MonotonicityReport check_pair_monotonicity(const Mat& states_a,
                                           const Mat& k_increments_a,
                                           const Mat& states_b,
                                           const Mat& k_increments_b, double dt,
                                           double tol = -1.0);

struct VariationBoundReport {
  bool pass = false;
  double lhs = 0.0;          // sum <X_{k+1} - a, dK_k>
  double rhs = 0.0;          // r |K| - mu int |X - a| - r mu (t - s)
  double k_variation = 0.0;  // total variation of K on the window
  double slack = 0.0;        // lhs - rhs
};

// Discrete lower bound on the correction pairing over steps
// [step_begin, step_end): requires the ball B(a, r) to sit inside the domain
// and checks
//   sum <X_{k+1} - a, dK_k>
//     >= r |K| - mu sum ||X_{k+1} - a|| dt - r mu (t - s).
VariationBoundReport check_variation_bound(const ConvexDomain& domain,
                                           const Mat& states,
                                           const Mat& k_increments, double dt,
                                           const Vec& a, double r, double mu,
                                           int step_begin = 0,
                                           int step_end = -1);

}  // namespace mmv
