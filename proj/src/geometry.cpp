#include "mmv/geometry.hpp"

#include <algorithm>
#include <cmath>

#include "mmv/rng.hpp"

namespace mmv {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Small nonnegative least squares by projected coordinate descent:
// minimize ||A^T lambda - h|| over lambda >= 0.  Returns the residual norm.
double nnls_residual(const Mat& a_rows, const Vec& h) {
  const int m = static_cast<int>(a_rows.rows());
  if (m == 0) return h.norm();
  Vec lambda = Vec::Zero(m);
  Vec r = -h;  // r = A^T lambda - h
  for (int sweep = 0; sweep < 200 * m + 200; ++sweep) {
    double change = 0.0;
    for (int i = 0; i < m; ++i) {
      const double nn = a_rows.row(i).squaredNorm();
      if (nn == 0.0) continue;
      const double g = a_rows.row(i).dot(r);
      double next = std::max(0.0, lambda[i] - g / nn);
      const double delta = next - lambda[i];
      if (delta != 0.0) {
        r += delta * a_rows.row(i).transpose();
        lambda[i] = next;
        change = std::max(change, std::abs(delta));
      }
    }
    if (change <= 1e-15 * (1.0 + lambda.lpNorm<Eigen::Infinity>())) break;
  }
  return r.norm();
}

}  // namespace

ConvexDomain ConvexDomain::whole_space(int dim) {
  require(dim >= 1, "whole_space: dim must be positive");
  ConvexDomain d;
  d.kind_ = DomainKind::WholeSpace;
  d.dim_ = dim;
  return d;
}

ConvexDomain ConvexDomain::box(const Vec& lo, const Vec& hi) {
  require(lo.size() == hi.size() && lo.size() >= 1, "box: lo/hi size mismatch");
  require((lo.array() < hi.array()).all(), "box: need lo < hi componentwise");
  ConvexDomain d;
  d.kind_ = DomainKind::Box;
  d.dim_ = static_cast<int>(lo.size());
  d.lo_ = lo;
  d.hi_ = hi;
  return d;
}

ConvexDomain ConvexDomain::ball(const Vec& center, double radius) {
  require(center.size() >= 1, "ball: empty center");
  require(radius > 0.0, "ball: radius must be positive");
  ConvexDomain d;
  d.kind_ = DomainKind::Ball;
  d.dim_ = static_cast<int>(center.size());
  d.center_ = center;
  d.radius_ = radius;
  return d;
}

ConvexDomain ConvexDomain::polyhedron(const Mat& normals, const Vec& offsets,
                                      const Vec& interior_point) {
  require(normals.rows() == offsets.size(), "polyhedron: rows/offsets mismatch");
  require(normals.rows() >= 1 && normals.cols() >= 1, "polyhedron: empty system");
  require(interior_point.size() == normals.cols(),
          "polyhedron: interior point dimension mismatch");
  for (int i = 0; i < normals.rows(); ++i)
    require(normals.row(i).norm() > 0.0, "polyhedron: zero normal row");
  Vec slack = offsets - normals * interior_point;
  require((slack.array() > 0.0).all(),
          "polyhedron: supplied point is not strictly feasible");
  ConvexDomain d;
  d.kind_ = DomainKind::Polyhedron;
  d.dim_ = static_cast<int>(normals.cols());
  d.normals_ = normals;
  d.offsets_ = offsets;
  d.interior_ = interior_point;
  return d;
}

bool ConvexDomain::contains(const Vec& x, double tol) const {
  require(x.size() == dim_, "contains: dimension mismatch");
  switch (kind_) {
    case DomainKind::WholeSpace:
      return true;
    case DomainKind::Box:
      return (x.array() >= lo_.array() - tol).all() &&
             (x.array() <= hi_.array() + tol).all();
    case DomainKind::Ball:
      return (x - center_).norm() <= radius_ + tol;
    case DomainKind::Polyhedron: {
      for (int i = 0; i < normals_.rows(); ++i) {
        if (normals_.row(i).dot(x) > offsets_[i] + tol * normals_.row(i).norm())
          return false;
      }
      return true;
    }
  }
  return false;
}

double ConvexDomain::interior_radius(const Vec& x) const {
  require(x.size() == dim_, "interior_radius: dimension mismatch");
  switch (kind_) {
    case DomainKind::WholeSpace:
      return kInf;
    case DomainKind::Box: {
      double r = kInf;
      for (int i = 0; i < dim_; ++i)
        r = std::min(r, std::min(x[i] - lo_[i], hi_[i] - x[i]));
      return r;
    }
    case DomainKind::Ball:
      return radius_ - (x - center_).norm();
    case DomainKind::Polyhedron: {
      double r = kInf;
      for (int i = 0; i < normals_.rows(); ++i)
        r = std::min(r, (offsets_[i] - normals_.row(i).dot(x)) /
                            normals_.row(i).norm());
      return r;
    }
  }
  return -kInf;
}

Vec ConvexDomain::anchor() const {
  switch (kind_) {
    case DomainKind::WholeSpace:
      return Vec::Zero(dim_);
    case DomainKind::Box:
      return 0.5 * (lo_ + hi_);
    case DomainKind::Ball:
      return center_;
    case DomainKind::Polyhedron:
      return interior_;
  }
  return Vec::Zero(dim_);
}

Vec ConvexDomain::project(const Vec& x) const {
  require(x.size() == dim_, "project: dimension mismatch");
  switch (kind_) {
    case DomainKind::WholeSpace:
      return x;
    case DomainKind::Box:
      return x.cwiseMax(lo_).cwiseMin(hi_);
    case DomainKind::Ball: {
      Vec u = x - center_;
      double n = u.norm();
      if (n <= radius_) return x;
      return center_ + (radius_ / n) * u;
    }
    case DomainKind::Polyhedron:
      return project_polyhedron(x);
  }
  return x;
}

// Primal active-set solve of min ||w - x||^2 subject to A w <= c, seeded at
// the stored strictly feasible point.  Constraint selection uses smallest
// index (Bland) for both entering and leaving faces, which rules out cycling.
Vec ConvexDomain::project_polyhedron(const Vec& x) const {
  if (contains(x, 0.0)) return x;

  const int m = static_cast<int>(normals_.rows());
  Vec w = interior_;
  std::vector<int> active;
  const int max_iters = 12 * (m + dim_) + 64;

  for (int iter = 0; iter < max_iters; ++iter) {
    // Candidate minimizer with the working set held as equalities:
    //   v = x - A_W^T lambda,  (A_W A_W^T) lambda = A_W x - c_W.
    const int k = static_cast<int>(active.size());
    Vec v;
    Vec lambda = Vec::Zero(k);
    if (k == 0) {
      v = x;
    } else {
      Mat aw(k, dim_);
      Vec rhs(k);
      for (int j = 0; j < k; ++j) {
        aw.row(j) = normals_.row(active[j]);
        rhs[j] = normals_.row(active[j]).dot(x) - offsets_[active[j]];
      }
      Mat gram = aw * aw.transpose();
      auto dec = gram.completeOrthogonalDecomposition();
      lambda = dec.solve(rhs);
      lambda += dec.solve(rhs - gram * lambda);  // one refinement pass
      v = x - aw.transpose() * lambda;
    }

    Vec p = v - w;
    if (p.norm() <= 1e-13 * (1.0 + v.norm())) {
      // Stationary on the working set; drop the lowest-index negative
      // multiplier or accept.
      int drop = -1;
      for (int j = 0; j < k; ++j) {
        if (lambda[j] < -1e-12) {
          drop = j;
          break;
        }
      }
      if (drop < 0) return v;
      active.erase(active.begin() + drop);
      continue;
    }

    // Step toward the candidate, stopping at the first blocking face.
    double alpha = 1.0;
    int blocker = -1;
    for (int i = 0; i < m; ++i) {
      if (std::find(active.begin(), active.end(), i) != active.end()) continue;
      const double s = normals_.row(i).dot(p);
      if (s <= 1e-15 * normals_.row(i).norm() * p.norm()) continue;
      const double room = std::max(0.0, offsets_[i] - normals_.row(i).dot(w));
      const double step = room / s;
      if (step < alpha) {
        alpha = step;
        blocker = i;
      }
    }
    if (blocker >= 0) {
      w += alpha * p;
      active.insert(std::lower_bound(active.begin(), active.end(), blocker),
                    blocker);
    } else {
      w = v;
    }
  }
  throw std::runtime_error("project: active-set iteration limit reached");
}

Vec ConvexDomain::resolvent(double lambda, const Vec& x) const {
  require(lambda > 0.0, "resolvent: lambda must be positive");
  return project(x);
}

double ConvexDomain::projection_kkt_residual(const Vec& x, const Vec& px) const {
  require(x.size() == dim_ && px.size() == dim_,
          "projection_kkt_residual: dimension mismatch");
  const Vec h = x - px;  // must decompose over active exterior normals
  switch (kind_) {
    case DomainKind::WholeSpace:
      return h.norm();
    case DomainKind::Box: {
      // Variational inequality residual, exact via the support function.
      double sup = 0.0;
      for (int i = 0; i < dim_; ++i)
        sup += h[i] > 0 ? h[i] * hi_[i] : h[i] * lo_[i];
      double feas = 0.0;
      for (int i = 0; i < dim_; ++i)
        feas = std::max({feas, lo_[i] - px[i], px[i] - hi_[i]});
      return std::max(0.0, sup - h.dot(px)) + std::max(0.0, feas);
    }
    case DomainKind::Ball: {
      const double sup = h.dot(center_) + radius_ * h.norm();
      const double feas = (px - center_).norm() - radius_;
      return std::max(0.0, sup - h.dot(px)) + std::max(0.0, feas);
    }
    case DomainKind::Polyhedron: {
      double feas = 0.0;
      std::vector<int> act;
      for (int i = 0; i < normals_.rows(); ++i) {
        const double slack = offsets_[i] - normals_.row(i).dot(px);
        feas = std::max(feas, -slack);
        if (slack <= 1e-8 * (1.0 + std::abs(offsets_[i])) * normals_.row(i).norm())
          act.push_back(i);
      }
      Mat a_act(act.size(), dim_);
      for (std::size_t j = 0; j < act.size(); ++j)
        a_act.row(static_cast<int>(j)) = normals_.row(act[j]);
      return nnls_residual(a_act, h) + std::max(0.0, feas);
    }
  }
  return kInf;
}

std::vector<GraphSample> ConvexDomain::sample_graph(int n,
                                                    std::uint64_t seed) const {
  require(n >= 1, "sample_graph: n must be positive");
  RngStream rng(derive_seed(seed, "graph", 0));

  Vec anchor;
  double scale = 1.0;
  switch (kind_) {
    case DomainKind::WholeSpace:
      anchor = Vec::Zero(dim_);
      break;
    case DomainKind::Box:
      anchor = 0.5 * (lo_ + hi_);
      scale = 0.75 * (hi_ - lo_).norm();
      break;
    case DomainKind::Ball:
      anchor = center_;
      scale = 1.5 * radius_;
      break;
    case DomainKind::Polyhedron:
      anchor = interior_;
      scale = 1.0 + interior_.norm();
      break;
  }

  std::vector<GraphSample> out;
  out.reserve(n);
  for (int i = 0; i < n; ++i) {
    Vec g(dim_);
    for (int j = 0; j < dim_; ++j) g[j] = rng.normal();
    Vec raw;
    if (i % 2 == 0) {
      // Interior sample: contract a feasible point toward the interior
      // anchor, which keeps a strict margin to the boundary.
      Vec w = project(anchor + scale * g);
      raw = anchor + (0.95 * rng.uniform01()) * (w - anchor);
    } else {
      // Push well outside so the sample lands on the boundary with a
      // nontrivial normal (no effect on the whole space).
      raw = anchor + (2.0 * scale) * g + scale * g.normalized() * (g.norm() + 1.0);
    }
    Vec px = project(raw);
    Vec y = raw - px;
    const double t = 2.0 * rng.uniform01();
    y *= t;
    if (y.norm() <= 1e-12 * (1.0 + px.norm())) y.setZero();
    out.push_back({std::move(px), std::move(y)});
  }
  return out;
}

namespace {

double default_tol(double dt, double requested, const Mat& states_a,
                   const Mat* states_b) {
  if (requested >= 0.0) return requested;
  double mx = 0.0;
  for (int k = 0; k < states_a.cols(); ++k)
    mx = std::max(mx, states_a.col(k).norm());
  if (states_b)
    for (int k = 0; k < states_b->cols(); ++k)
      mx = std::max(mx, states_b->col(k).norm());
  return 10.0 * dt * (1.0 + mx);
}

}  // namespace

MonotonicityReport check_pair_monotonicity(const Mat& states,
                                           const Mat& k_increments, double dt,
                                           const std::vector<GraphSample>& graph,
                                           double tol) {
  require(states.cols() == k_increments.cols() + 1,
          "check_pair_monotonicity: states must have one more column than "
          "increments");
  require(dt > 0.0, "check_pair_monotonicity: dt must be positive");
  MonotonicityReport rep;
  rep.tol = default_tol(dt, tol, states, nullptr);
  for (int k = 0; k < k_increments.cols(); ++k) {
    const Vec xk = states.col(k + 1);
    const Vec dk = k_increments.col(k);
    for (std::size_t s = 0; s < graph.size(); ++s) {
      const double v = (xk - graph[s].x).dot(dk - dt * graph[s].y);
      if (v < rep.min_inner) {
        rep.min_inner = v;
        rep.worst_step = k;
        rep.worst_sample = static_cast<int>(s);
      }
    }
  }
  rep.pass = rep.min_inner >= -rep.tol;
  return rep;
}

MonotonicityReport check_pair_monotonicity(const Mat& states_a,
                                           const Mat& k_increments_a,
                                           const Mat& states_b,
                                           const Mat& k_increments_b, double dt,
                                           double tol) {
  require(states_a.cols() == k_increments_a.cols() + 1 &&
              states_b.cols() == k_increments_b.cols() + 1 &&
              states_a.cols() == states_b.cols(),
          "check_pair_monotonicity: path shape mismatch");
  MonotonicityReport rep;
  rep.tol = default_tol(dt, tol, states_a, &states_b);
  for (int k = 0; k < k_increments_a.cols(); ++k) {
    const double v = (states_a.col(k + 1) - states_b.col(k + 1))
                         .dot(k_increments_a.col(k) - k_increments_b.col(k));
    if (v < rep.min_inner) {
      rep.min_inner = v;
      rep.worst_step = k;
    }
  }
  rep.pass = rep.min_inner >= -rep.tol;
  return rep;
}

VariationBoundReport check_variation_bound(const ConvexDomain& domain,
                                           const Mat& states,
                                           const Mat& k_increments, double dt,
                                           const Vec& a, double r, double mu,
                                           int step_begin, int step_end) {
  require(states.cols() == k_increments.cols() + 1,
          "check_variation_bound: path shape mismatch");
  require(r > 0.0 && mu >= 0.0, "check_variation_bound: need r > 0, mu >= 0");
  require(domain.interior_radius(a) >= r - 1e-12,
          "check_variation_bound: ball B(a, r) must sit inside the domain");
  const int n = static_cast<int>(k_increments.cols());
  if (step_end < 0) step_end = n;
  require(0 <= step_begin && step_begin < step_end && step_end <= n,
          "check_variation_bound: bad step window");

  VariationBoundReport rep;
  double path_integral = 0.0;
  for (int k = step_begin; k < step_end; ++k) {
    const Vec xk = states.col(k + 1);
    rep.lhs += (xk - a).dot(k_increments.col(k));
    rep.k_variation += k_increments.col(k).norm();
    path_integral += (xk - a).norm() * dt;
  }
  const double window = (step_end - step_begin) * dt;
  rep.rhs = r * rep.k_variation - mu * path_integral - r * mu * window;
  rep.slack = rep.lhs - rep.rhs;
  rep.pass = rep.slack >= -1e-12 * (1.0 + std::abs(rep.lhs));
  return rep;
}

}  // namespace mmv
