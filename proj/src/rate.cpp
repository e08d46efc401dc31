#include "mmv/rate.hpp"

#include <algorithm>
#include <cmath>

#include "mmv/rng.hpp"

namespace mmv {

Event Event::terminal_point(const Vec& target) {
  require(target.size() > 0, "empty target");
  Event e;
  e.kind = Kind::TerminalPoint;
  e.target = target;
  return e;
}

Event Event::halfspace(const Vec& normal, double offset) {
  require(normal.size() > 0 && normal.norm() > 0.0, "degenerate halfspace");
  Event e;
  e.kind = Kind::TerminalHalfspace;
  e.normal = normal;
  e.offset = offset;
  return e;
}

Event Event::sup_norm(double threshold) {
  require(threshold > 0.0, "threshold must be positive");
  Event e;
  e.kind = Kind::SupNorm;
  e.threshold = threshold;
  return e;
}

double Event::signed_gap(const Mat& path, const Mat* ref) const {
  const int last = static_cast<int>(path.cols()) - 1;
  switch (kind) {
    case Kind::TerminalPoint:
      require(target.size() == path.rows(), "event dimension mismatch");
      return (path.col(last) - target).norm();
    case Kind::TerminalHalfspace:
      require(normal.size() == path.rows(), "event dimension mismatch");
      return offset - normal.dot(path.col(last));
    case Kind::SupNorm: {
      if (ref)
        require(ref->rows() == path.rows() && ref->cols() == path.cols(),
                "reference path shape mismatch");
      double sup = 0.0;
      for (int j = 0; j <= last; ++j) {
        const double dist =
            ref ? (path.col(j) - ref->col(j)).norm() : path.col(j).norm();
        sup = std::max(sup, dist);
      }
      return threshold - sup;
    }
  }
  return 0.0;
}

double Event::residual(const Mat& path, const Mat* ref) const {
  return std::max(0.0, signed_gap(path, ref));
}

bool Event::hit(const Mat& path, const Mat* ref) const {
  require(kind != Kind::TerminalPoint,
          "terminal point events have zero probability; sample halfspace or "
          "sup-norm events");
  return residual(path, ref) == 0.0;
}

double control_cost(const Control& phi, const ControlField& psi,
                    const JumpModel& jumps, const TimeGrid& grid,
                    Regime regime, bool half_q2) {
  double cost = q1(phi, grid);
  if (jumps.empty()) return cost;
  require(psi.n_steps() == grid.n_steps && psi.n_marks() == jumps.n_marks(),
          "control field grid mismatch");
  if (regime == Regime::LDP) return cost + q2(psi, jumps, grid, half_q2);
  double acc = 0.0;
  for (int k = 0; k < grid.n_steps; ++k)
    for (int m = 0; m < jumps.n_marks(); ++m)
      acc += psi.at(k, m) * psi.at(k, m) * jumps.weight(m);
  return cost + 0.5 * grid.dt * acc;
}

namespace {

struct Layout {
  int d = 0;
  int nc = 0;     // control cells
  int marks = 0;  // jump control rows (0 when no jumps)
  int stride = 1;
  int n = 0;  // simulation steps
  int size() const { return nc * (d + marks); }
};

struct EvalOut {
  double cost = 0.0;
  double residual = 0.0;
  double objective = 0.0;
};

class Objective {
 public:
  Objective(const RateQuery& query, const KernelCoefficients& coeffs,
            const ConvexDomain& domain, const JumpModel& jumps,
            const PathBundle& limit, const Layout& layout)
      : q_(query),
        coeffs_(coeffs),
        domain_(domain),
        jumps_(jumps),
        limit_(limit),
        lay_(layout) {}

  void unpack(const std::vector<double>& u, Control& phi,
              ControlField& psi) const {
    phi = Control(lay_.d, lay_.n);
    for (int k = 0; k < lay_.n; ++k) {
      const int cell = k / lay_.stride;
      for (int i = 0; i < lay_.d; ++i)
        phi.values()(i, k) = u[cell * lay_.d + i];
    }
    if (lay_.marks > 0) {
      psi = ControlField(lay_.n, lay_.marks, 0.0);
      const int off = lay_.d * lay_.nc;
      for (int k = 0; k < lay_.n; ++k) {
        const int cell = k / lay_.stride;
        for (int m = 0; m < lay_.marks; ++m) {
          const double raw = u[off + cell * lay_.marks + m];
          psi.set(k, m, q_.regime == Regime::LDP ? std::exp(raw) : raw);
        }
      }
    } else {
      psi = ControlField();
    }
  }

  SkeletonSolution solve(const Control& phi, const ControlField& psi) const {
    if (q_.regime == Regime::LDP)
      return solve_ldp_skeleton(coeffs_, domain_, jumps_, limit_, phi, psi);
    return solve_mdp_skeleton(coeffs_, domain_, jumps_, limit_, phi, psi,
                              q_.mdp_constraint);
  }

  EvalOut eval(const std::vector<double>& u, double penalty) const {
    Control phi;
    ControlField psi;
    unpack(u, phi, psi);
    const SkeletonSolution sol = solve(phi, psi);
    EvalOut out;
    out.cost = control_cost(phi, psi, jumps_, limit_.grid, q_.regime,
                            q_.half_q2);
    const double gap = q_.event.signed_gap(sol.path, reference());
    out.residual = std::max(0.0, gap);
    out.objective = out.cost + penalty * gap * gap;
    return out;
  }

  const Mat* reference() const {
    if (q_.regime == Regime::LDP && q_.event.kind == Event::Kind::SupNorm)
      return &limit_.states[0];
    return nullptr;
  }

 private:
  const RateQuery& q_;
  const KernelCoefficients& coeffs_;
  const ConvexDomain& domain_;
  const JumpModel& jumps_;
  const PathBundle& limit_;
  Layout lay_;
};

// Coarse reachability probe: constant controls of growing magnitude along
// each axis plus uniform jump tilts.  The event counts as reachable when a
// probe attains it, the null control already sits on it, or some probe
// strictly shrinks the null residual.
bool feasibility_scan(const Objective& obj, const Layout& lay,
                      const RateQuery& query) {
  std::vector<std::vector<double>> probes;
  probes.emplace_back(lay.size(), 0.0);
  for (int axis = 0; axis < lay.d; ++axis)
    for (double amp : {1.0, 4.0, 16.0})
      for (double sign : {1.0, -1.0}) {
        std::vector<double> u(lay.size(), 0.0);
        for (int cell = 0; cell < lay.nc; ++cell)
          u[cell * lay.d + axis] = sign * amp;
        probes.push_back(std::move(u));
      }
  if (lay.marks > 0) {
    const std::vector<double> tilts = query.regime == Regime::LDP
                                          ? std::vector<double>{0.7, 2.0}
                                          : std::vector<double>{1.0, 4.0};
    for (double amp : tilts)
      for (double sign : {1.0, -1.0}) {
        std::vector<double> u(lay.size(), 0.0);
        for (int i = lay.d * lay.nc; i < lay.size(); ++i) u[i] = sign * amp;
        probes.push_back(std::move(u));
      }
  }
  const double null_res = obj.eval(probes[0], 0.0).residual;
  if (null_res <= query.residual_tol) return true;
  for (std::size_t p = 1; p < probes.size(); ++p) {
    const double r = obj.eval(probes[p], 0.0).residual;
    if (r == 0.0 || r < null_res - 1e-12) return true;
  }
  return false;
}

struct LineResult {
  double t = 0.0;  // accepted displacement along the direction, 0 = no move
  EvalOut at;
};

// Derivative-free minimization along one direction: probe both sides at the
// given scale, fit a parabola, and expand the bracket geometrically while
// the objective keeps dropping.  Exact for quadratic sections up to the
// parabolic fit, robust near the hinge of an inactive event residual.
LineResult line_min(const Objective& obj, const std::vector<double>& u,
                    const std::vector<double>& dir, double scale,
                    double penalty, const EvalOut& cur) {
  std::vector<double> trial(u.size());
  auto probe = [&](double t) {
    for (std::size_t i = 0; i < u.size(); ++i) trial[i] = u[i] + t * dir[i];
    return obj.eval(trial, penalty);
  };
  LineResult best;
  best.at = cur;
  auto consider = [&](double t, const EvalOut& f) {
    if (f.objective < best.at.objective) {
      best.t = t;
      best.at = f;
    }
  };
  const EvalOut fp = probe(scale);
  consider(scale, fp);
  const EvalOut fm = probe(-scale);
  consider(-scale, fm);
  const double denom = fp.objective - 2.0 * cur.objective + fm.objective;
  if (denom > 1e-300 && std::isfinite(denom)) {
    double tv = 0.5 * scale * (fm.objective - fp.objective) / denom;
    tv = std::clamp(tv, -2.0 * scale, 2.0 * scale);
    if (std::abs(tv) > 1e-14 * scale) consider(tv, probe(tv));
  }
  if (best.t != 0.0) {
    // Expand from the better side while improving, then refine once.
    double a = 0.0, b = best.t;
    EvalOut fb = best.at;
    double fa_obj = cur.objective;
    for (int g = 0; g < 7; ++g) {
      const double c = 2.0 * b;
      const EvalOut fc = probe(c);
      if (fc.objective >= fb.objective) {
        // Vertex of the parabola through (a, fa), (b, fb), (c, fc).
        const double d1 = (b - a) * (fb.objective - fc.objective);
        const double d2 = (b - c) * (fb.objective - fa_obj);
        const double num = (b - a) * d1 - (b - c) * d2;
        const double den = 2.0 * (d1 - d2);
        if (std::abs(den) > 1e-300) {
          const double tv = b - num / den;
          if (std::isfinite(tv) && tv != b) consider(tv, probe(tv));
        }
        break;
      }
      a = b;
      fa_obj = fb.objective;
      b = c;
      fb = fc;
      consider(b, fb);
    }
  }
  // Treat numerically negligible gains as no move so scales keep shrinking.
  if (best.at.objective >=
      cur.objective - 1e-15 * (1.0 + std::abs(cur.objective))) {
    best.t = 0.0;
    best.at = cur;
  }
  return best;
}

// Powell-style direction-set descent: line-minimize along each direction in
// turn, then test the cycle's net displacement and adopt it into the set in
// place of the direction that contributed most.  The pattern directions are
// what lets the iterate slide along the narrow valley a stiff penalty digs.
EvalOut powell(const Objective& obj, std::vector<double>& u, double penalty,
               int max_cycles, EvalOut cur) {
  const std::size_t n = u.size();
  struct Direction {
    std::vector<double> d;
    double scale = 0.5;
  };
  std::vector<Direction> dirs(n);
  for (std::size_t i = 0; i < n; ++i) {
    dirs[i].d.assign(n, 0.0);
    dirs[i].d[i] = 1.0;
  }
  for (int cycle = 0; cycle < max_cycles; ++cycle) {
    const std::vector<double> u0 = u;
    const double f0 = cur.objective;
    std::size_t i_big = 0;
    double drop_big = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const LineResult lr =
          line_min(obj, u, dirs[i].d, dirs[i].scale, penalty, cur);
      if (lr.t != 0.0) {
        const double drop = cur.objective - lr.at.objective;
        if (drop > drop_big) {
          drop_big = drop;
          i_big = i;
        }
        for (std::size_t j = 0; j < n; ++j) u[j] += lr.t * dirs[i].d[j];
        cur = lr.at;
        dirs[i].scale = std::clamp(std::abs(lr.t), 1e-10, 4.0);
      } else {
        dirs[i].scale = std::max(dirs[i].scale * 0.5, 1e-10);
      }
    }
    const double f1 = cur.objective;
    if (2.0 * (f0 - f1) <= 1e-11 * (std::abs(f0) + std::abs(f1)) + 1e-300) {
      // Only conclude once the probe scales are exhausted: an all-fail cycle
      // with coarse scales just means the steps were too large.
      double widest = 0.0;
      for (const Direction& dir : dirs) widest = std::max(widest, dir.scale);
      if (widest < 1e-8) break;
      continue;
    }
    std::vector<double> p(n);
    double pnorm2 = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      p[j] = u[j] - u0[j];
      pnorm2 += p[j] * p[j];
    }
    if (pnorm2 == 0.0 || drop_big == 0.0) continue;
    std::vector<double> ue(n);
    for (std::size_t j = 0; j < n; ++j) ue[j] = 2.0 * u[j] - u0[j];
    const EvalOut fe = obj.eval(ue, penalty);
    if (fe.objective < f0) {
      // Numerical-recipes safeguard: only swap the direction set when the
      // extrapolated drop justifies it.
      const double t1 = f0 - f1 - drop_big;
      const double t2 = f0 - fe.objective;
      if (2.0 * (f0 - 2.0 * f1 + fe.objective) * t1 * t1 <
          drop_big * t2 * t2) {
        const LineResult lr = line_min(obj, u, p, 1.0, penalty, cur);
        if (lr.t != 0.0) {
          for (std::size_t j = 0; j < n; ++j) u[j] += lr.t * p[j];
          cur = lr.at;
        }
        const double nrm = std::sqrt(pnorm2);
        for (std::size_t j = 0; j < n; ++j) p[j] /= nrm;
        dirs[i_big].d = std::move(p);
        dirs[i_big].scale =
            std::clamp(std::abs(lr.t) * nrm, 0.05, 4.0);
      }
    }
  }
  return cur;
}

}  // namespace

RateResult minimize_rate(const RateQuery& query,
                         const KernelCoefficients& coeffs,
                         const ConvexDomain& domain, const JumpModel& jumps,
                         const PathBundle& limit) {
  const TimeGrid& grid = limit.grid;
  require(query.control_stride >= 1 &&
              grid.n_steps % query.control_stride == 0,
          "control stride must divide the step count");
  require(query.restarts >= 1 && query.iterations >= 1 &&
              query.penalty_rounds >= 1,
          "optimizer settings must be positive");
  Layout lay;
  lay.d = domain.dim();
  lay.stride = query.control_stride;
  lay.n = grid.n_steps;
  lay.nc = grid.n_steps / query.control_stride;
  lay.marks = jumps.empty() ? 0 : jumps.n_marks();

  Objective obj(query, coeffs, domain, jumps, limit, lay);
  RateResult out;

  // A null control that already attains the event is optimal outright; the
  // signed-gap penalty must not pull such a solution onto the boundary.
  {
    const std::vector<double> zeros(lay.size(), 0.0);
    const EvalOut at_null = obj.eval(zeros, 0.0);
    if (at_null.residual <= query.residual_tol) {
      out.reachable = true;
      out.converged = true;
      out.value = at_null.cost;
      out.residual = at_null.residual;
      out.objective = at_null.cost;
      out.winner_start = 0;
      out.restart_objectives.assign(1, at_null.cost);
      obj.unpack(zeros, out.phi, out.psi);
      out.solution = obj.solve(out.phi, out.psi);
      return out;
    }
  }

  out.reachable = feasibility_scan(obj, lay, query);
  if (!out.reachable) return out;

  double final_penalty = query.penalty0;
  for (int r = 1; r < query.penalty_rounds; ++r) final_penalty *= 10.0;

  std::vector<double> best_u;
  double best_objective = std::numeric_limits<double>::infinity();
  int best_start = -1;
  for (int r = 0; r < query.restarts; ++r) {
    std::vector<double> u(lay.size(), 0.0);
    if (r > 0) {
      RngStream rng(derive_seed(query.seed, "start", r));
      for (int i = 0; i < lay.d * lay.nc; ++i) u[i] = rng.normal();
      for (int i = lay.d * lay.nc; i < lay.size(); ++i)
        u[i] = 0.5 * rng.normal();
    }
    double penalty = query.penalty0;
    EvalOut cur = obj.eval(u, penalty);
    for (int round = 0; round < query.penalty_rounds; ++round) {
      if (round > 0) {
        penalty *= 10.0;
        cur = obj.eval(u, penalty);
      }
      cur = powell(obj, u, penalty, query.iterations, cur);
    }
    out.restart_objectives.push_back(cur.objective);
    if (cur.objective < best_objective) {
      best_objective = cur.objective;
      best_u = u;
      best_start = r;
    }
  }

  out.winner_start = best_start;
  obj.unpack(best_u, out.phi, out.psi);
  out.solution = obj.solve(out.phi, out.psi);
  const EvalOut fin = obj.eval(best_u, final_penalty);
  out.residual = fin.residual;
  out.objective = fin.objective;
  if (fin.residual <= query.residual_tol) {
    out.converged = true;
    out.value = fin.cost;
  } else if (fin.residual <= 10.0 * query.residual_tol) {
    out.value = fin.cost;  // best effort, flagged by converged = false
  }
  return out;
}

LqSolution lq_oracle(const std::vector<Mat>& a_path,
                     const std::vector<Mat>& sigma_path,
                     const std::vector<Mat>& jump_cols_path,
                     const std::vector<double>& jump_weights, const Vec& v,
                     double T, double dt) {
  TimeGrid grid(T, dt);
  const int n = grid.n_steps;
  const int d = static_cast<int>(v.size());
  require(static_cast<int>(a_path.size()) == n &&
              static_cast<int>(sigma_path.size()) == n,
          "coefficient path length mismatch");
  const int marks = static_cast<int>(jump_weights.size());
  require(jump_cols_path.empty() ||
              static_cast<int>(jump_cols_path.size()) == n,
          "jump path length mismatch");
  require(marks == 0 || !jump_cols_path.empty(),
          "jump weights without jump columns");

  // M_k = Phi(n, k+1) B_k accumulated backward; Phi(n, n) = I.
  std::vector<Mat> m_cols(n);
  Mat acc = Mat::Identity(d, d);
  for (int k = n - 1; k >= 0; --k) {
    require(a_path[k].rows() == d && a_path[k].cols() == d &&
                sigma_path[k].rows() == d && sigma_path[k].cols() == d,
            "coefficient block dimension mismatch");
    Mat b(d, d + marks);
    b.leftCols(d) = sigma_path[k];
    for (int m = 0; m < marks; ++m) {
      require(jump_cols_path[k].rows() == d &&
                  jump_cols_path[k].cols() == marks,
              "jump block dimension mismatch");
      b.col(d + m) = jump_cols_path[k].col(m) * std::sqrt(jump_weights[m]);
    }
    m_cols[k] = acc * b;
    acc = acc * (Mat::Identity(d, d) + a_path[k] * dt);
  }

  Mat gram = Mat::Zero(d, d);
  for (int k = 0; k < n; ++k)
    gram += m_cols[k] * m_cols[k].transpose() * dt;

  Eigen::SelfAdjointEigenSolver<Mat> eigen(gram);
  require(eigen.info() == Eigen::Success, "gramian eigendecomposition failed");
  const double largest = eigen.eigenvalues().maxCoeff();
  if (largest <= 0.0 ||
      eigen.eigenvalues().minCoeff() <= 1e-12 * largest)
    throw std::runtime_error("terminal target unreachable: singular gramian");
  const Vec lambda = eigen.eigenvectors() *
                     (eigen.eigenvectors().transpose() * v).cwiseQuotient(
                         eigen.eigenvalues());

  LqSolution sol;
  sol.value = 0.5 * v.dot(lambda);
  sol.phi = Control(d, n);
  sol.psi = marks > 0 ? ControlField(n, marks, 0.0) : ControlField();
  for (int k = 0; k < n; ++k) {
    const Vec u = m_cols[k].transpose() * lambda;
    sol.phi.set(k, u.head(d));
    for (int m = 0; m < marks; ++m)
      sol.psi.set(k, m, u[d + m] / std::sqrt(jump_weights[m]));
  }
  return sol;
}

LqSolution lq_from_problem(const KernelCoefficients& coeffs,
                           const JumpModel& jumps, const PathBundle& limit,
                           const Vec& v) {
  const int n = limit.grid.n_steps;
  const int d = limit.dim();
  const int marks = jumps.empty() ? 0 : jumps.n_marks();
  std::vector<Mat> a_path(n), sigma_path(n), jump_cols;
  if (marks > 0) jump_cols.assign(n, Mat(d, marks));
  for (int k = 0; k < n; ++k) {
    const Vec x = limit.states[0].col(k);
    const EmpiricalMeasure law = EmpiricalMeasure::dirac(x);
    a_path[k] = grad_drift(coeffs, x, law);
    sigma_path[k] = eval_diffusion(coeffs, x, law);
    for (int m = 0; m < marks; ++m)
      jump_cols[k].col(m) = eval_jump(coeffs, x, law, jumps.gamma(m));
  }
  std::vector<double> weights;
  for (int m = 0; m < marks; ++m) weights.push_back(jumps.weight(m));
  return lq_oracle(a_path, sigma_path, jump_cols, weights, v, limit.grid.T,
                   limit.grid.dt);
}

}  // namespace mmv
