#include "doctest.h"
#include "mmv/rate.hpp"
#include "mmv/rng.hpp"

#include <cmath>

using namespace mmv;

namespace {

Vec vec1(double a) {
  Vec v(1);
  v << a;
  return v;
}

Vec vec2(double a, double b) {
  Vec v(2);
  v << a, b;
  return v;
}

// Drift-free scalar diffusion with unit noise on a wide interval.
struct GaussianProblem {
  KernelCoefficients coeffs;
  ConvexDomain domain = ConvexDomain::box(vec1(-100.0), vec1(100.0));
  JumpModel jumps;
  PathBundle limit;
};

GaussianProblem gaussian_problem(double T, double dt) {
  GaussianProblem p;
  p.coeffs.drift = DriftKernel::affine(Vec::Zero(1), 0.0, 0.0);
  p.coeffs.diffusion = DiffusionKernel::constant(Mat::Identity(1, 1));
  p.limit = solve_limit(p.coeffs, p.domain, vec1(0.0), T, dt);
  return p;
}

double entropy(double x) { return x * std::log(x) - x + 1.0; }

}  // namespace

TEST_CASE("event residuals and indicators") {
  Mat path(1, 3);
  path << 0.0, 0.5, 1.2;

  const Event point = Event::terminal_point(vec1(2.0));
  CHECK(point.residual(path) == doctest::Approx(0.8).epsilon(1e-12));
  CHECK_THROWS_AS((void)point.hit(path), std::invalid_argument);

  const Event half = Event::halfspace(vec1(1.0), 1.0);
  CHECK(half.residual(path) == 0.0);
  CHECK(half.hit(path));
  const Event far = Event::halfspace(vec1(1.0), 2.0);
  CHECK(far.residual(path) == doctest::Approx(0.8).epsilon(1e-12));
  CHECK_FALSE(far.hit(path));

  const Event sup = Event::sup_norm(1.0);
  CHECK(sup.hit(path));  // sup |path| = 1.2 >= 1
  Mat ref = Mat::Zero(1, 3);
  CHECK(sup.hit(path, &ref));
  ref = path;  // zero deviation from itself
  CHECK_FALSE(sup.hit(path, &ref));
  CHECK(sup.residual(path, &ref) == doctest::Approx(1.0));

  CHECK_THROWS_AS(Event::sup_norm(0.0), std::invalid_argument);
  CHECK_THROWS_AS(Event::halfspace(Vec::Zero(2), 1.0), std::invalid_argument);
}

TEST_CASE("control cost in both regimes") {
  const TimeGrid grid(1.0, 0.01);
  const JumpModel two = JumpModel::finite({1.0, -1.0}, {1.0, 1.0}, {0.5, -0.5});

  SUBCASE("null control costs nothing") {
    const Control phi(1, grid.n_steps);
    const ControlField psi(grid.n_steps, 2, 1.0);
    CHECK(control_cost(phi, psi, two, grid, Regime::LDP) == 0.0);
    const ControlField null_psi(grid.n_steps, 2, 0.0);
    CHECK(control_cost(phi, null_psi, two, grid, Regime::MDP) == 0.0);
  }

  SUBCASE("unit drift control over a unit horizon") {
    const Control phi = Control::constant(vec1(1.0), grid.n_steps);
    const ControlField psi(grid.n_steps, 2, 1.0);
    CHECK(control_cost(phi, psi, two, grid, Regime::LDP) ==
          doctest::Approx(0.5).epsilon(1e-12));
    // Without jumps the psi block is ignored entirely.
    CHECK(control_cost(phi, ControlField(), JumpModel(), grid, Regime::LDP) ==
          doctest::Approx(0.5).epsilon(1e-12));
  }

  SUBCASE("moderate regime charges the quadratic jump energy") {
    const Control phi(1, grid.n_steps);
    const ControlField psi(grid.n_steps, 2, 1.0);
    // 1/2 * T * sum_m psi^2 w_m with total mass 2.
    CHECK(control_cost(phi, psi, two, grid, Regime::MDP) ==
          doctest::Approx(1.0).epsilon(1e-12));
  }

  SUBCASE("large-deviation jump energy uses the entropy integrand") {
    const Control phi(1, grid.n_steps);
    const JumpModel one = JumpModel::finite({1.0}, {1.0}, {0.5});
    ControlField psi(grid.n_steps, 1, 2.0);
    const double full = control_cost(phi, psi, one, grid, Regime::LDP);
    CHECK(full == doctest::Approx(entropy(2.0)).epsilon(1e-12));
    CHECK(control_cost(phi, psi, one, grid, Regime::LDP, true) ==
          doctest::Approx(0.5 * entropy(2.0)).epsilon(1e-12));
  }
}

TEST_CASE("linear-quadratic oracle closed forms") {
  SUBCASE("drift-free unit diffusion") {
    const double T = 1.0, dt = 1e-3;
    const int n = 1000;
    const std::vector<Mat> a(n, Mat::Zero(1, 1));
    const std::vector<Mat> s(n, Mat::Identity(1, 1));
    const LqSolution sol = lq_oracle(a, s, {}, {}, vec1(1.0), T, dt);
    CHECK(sol.value == doctest::Approx(0.5).epsilon(1e-12));
    // The optimal drive is constant in time.
    for (int k = 0; k < n; ++k)
      CHECK(sol.phi.at(k)[0] == doctest::Approx(1.0).epsilon(1e-12));
  }

  SUBCASE("scalar linear drift matches the exponential formula") {
    const double T = 1.0, dt = 1e-3, av = 0.8, v = 1.3;
    const int n = 1000;
    const std::vector<Mat> a(n, Mat::Constant(1, 1, av));
    const std::vector<Mat> s(n, Mat::Identity(1, 1));
    const LqSolution sol = lq_oracle(a, s, {}, {}, vec1(v), T, dt);

    // Exact value of the discrete problem, assembled independently.
    double gram = 0.0;
    for (int k = 0; k < n; ++k)
      gram += std::pow(1.0 + av * dt, 2 * (n - 1 - k)) * dt;
    CHECK(sol.value == doctest::Approx(v * v / (2.0 * gram)).epsilon(1e-12));

    const double continuum = av * v * v / (std::exp(2.0 * av * T) - 1.0);
    CHECK(sol.value == doctest::Approx(continuum).epsilon(2e-3));
  }

  SUBCASE("zero target costs nothing") {
    const std::vector<Mat> a(10, Mat::Zero(1, 1));
    const std::vector<Mat> s(10, Mat::Identity(1, 1));
    const LqSolution sol = lq_oracle(a, s, {}, {}, vec1(0.0), 1.0, 0.1);
    CHECK(sol.value == 0.0);
    CHECK(sol.phi.is_zero());
  }

  SUBCASE("no control authority means a singular gramian") {
    const std::vector<Mat> a(10, Mat::Zero(1, 1));
    const std::vector<Mat> s(10, Mat::Zero(1, 1));
    CHECK_THROWS_AS(lq_oracle(a, s, {}, {}, vec1(1.0), 1.0, 0.1),
                    std::runtime_error);
  }
}

TEST_CASE("oracle controls close the loop through the moderate skeleton") {
  // Time-varying coefficients: state-dependent diffusion along a moving
  // limit path, two jump marks.
  KernelCoefficients coeffs;
  coeffs.drift = DriftKernel::affine(Vec::Zero(2), -0.7, 0.0);
  Mat sigma = Mat::Identity(2, 2);
  sigma(0, 1) = 0.3;
  coeffs.diffusion = DiffusionKernel::affine_diag(sigma, 0.2, 0.0);
  coeffs.jump = JumpAmplitudeKernel::affine(vec2(0.4, -0.1), 0.0, 0.0);
  const JumpModel jumps =
      JumpModel::finite({1.0, -1.0}, {0.8, 1.2}, {0.6, -0.5});
  const ConvexDomain domain = ConvexDomain::ball(Vec::Zero(2), 50.0);
  const PathBundle limit =
      solve_limit(coeffs, domain, vec2(0.8, -0.4), 1.0, 0.02);

  const Vec target = vec2(0.35, -0.2);
  const LqSolution sol = lq_from_problem(coeffs, jumps, limit, target);
  CHECK(sol.value > 0.0);

  const SkeletonSolution run =
      solve_mdp_skeleton(coeffs, domain, jumps, limit, sol.phi, sol.psi);
  CHECK((run.path.col(run.path.cols() - 1) - target).norm() < 1e-9);
  CHECK(control_cost(sol.phi, sol.psi, jumps, limit.grid, Regime::MDP) ==
        doctest::Approx(sol.value).epsilon(1e-9));
}

TEST_CASE("gaussian terminal exceedance recovers the quadratic rate") {
  GaussianProblem p = gaussian_problem(1.0, 0.025);
  RateQuery q;
  q.regime = Regime::LDP;
  q.event = Event::halfspace(vec1(1.0), 1.0);
  q.control_stride = 10;  // 4 cells over 40 steps
  q.restarts = 2;
  q.iterations = 50;
  q.seed = 11;
  const RateResult res = minimize_rate(q, p.coeffs, p.domain, p.jumps, p.limit);
  CHECK(res.reachable);
  CHECK(res.converged);
  CHECK(res.value == doctest::Approx(0.5).epsilon(2e-3));
  CHECK(res.residual <= q.residual_tol);
  // The minimizer pushes at constant unit speed.
  CHECK(res.solution.terminal() == doctest::Approx(1.0).epsilon(1e-2));
}

TEST_CASE("events already on the limit path cost zero") {
  GaussianProblem p = gaussian_problem(1.0, 0.05);
  RateQuery q;
  q.event = Event::halfspace(vec1(-1.0), -0.5);  // Y_T <= 0.5, limit sits at 0
  q.control_stride = 20;
  q.restarts = 2;
  q.seed = 3;
  const RateResult res = minimize_rate(q, p.coeffs, p.domain, p.jumps, p.limit);
  CHECK(res.reachable);
  CHECK(res.converged);
  CHECK(res.value == 0.0);
  CHECK(res.winner_start == 0);
  CHECK(res.phi.is_zero());
}

TEST_CASE("jump-only steering matches the scalar entropy optimum") {
  KernelCoefficients coeffs;
  coeffs.drift = DriftKernel::affine(Vec::Zero(1), 0.0, 0.0);
  coeffs.jump = JumpAmplitudeKernel::affine(vec1(0.5), 0.0, 0.0);
  const JumpModel jumps = JumpModel::finite({1.0}, {2.0}, {1.0});
  const ConvexDomain domain = ConvexDomain::box(vec1(-50.0), vec1(50.0));
  const PathBundle limit = solve_limit(coeffs, domain, vec1(0.0), 1.0, 0.05);
  // Drift-free apart from the compensated jump term, which vanishes at
  // psi = 1; tilting to psi moves the terminal to (psi - 1) g nu T.
  RateQuery q;
  q.regime = Regime::LDP;
  q.event = Event::halfspace(vec1(1.0), 0.6);
  q.control_stride = 20;  // single cell: one scalar tilt
  q.restarts = 3;
  q.seed = 5;
  const RateResult res = minimize_rate(q, coeffs, domain, jumps, limit);
  CHECK(res.reachable);
  CHECK(res.converged);
  const double psi_star = 1.0 + 0.6 / (0.5 * 2.0);
  const double expect = 2.0 * entropy(psi_star);
  CHECK(res.value == doctest::Approx(expect).epsilon(1e-3));
}

TEST_CASE("variational value lower-bounds every feasible control") {
  GaussianProblem p = gaussian_problem(1.0, 0.025);
  const int n = p.limit.grid.n_steps;
  RateQuery q;
  q.event = Event::halfspace(vec1(1.0), 1.0);
  q.control_stride = 10;
  q.restarts = 2;
  q.iterations = 50;
  q.seed = 7;
  const RateResult res = minimize_rate(q, p.coeffs, p.domain, p.jumps, p.limit);
  REQUIRE(res.converged);

  RngStream rng(913);
  for (int trial = 0; trial < 20; ++trial) {
    // Unit mean plus a centered perturbation keeps the terminal at >= 1.
    Control phi(1, n);
    for (int k = 0; k < n / 2; ++k) {
      const double w = rng.normal();
      phi.values()(0, k) = 1.0 + w;
      phi.values()(0, n - 1 - k) = 1.0 - w;
    }
    const SkeletonSolution sol = solve_ldp_skeleton(
        p.coeffs, p.domain, p.jumps, p.limit, phi, ControlField());
    REQUIRE(sol.terminal() >= 1.0 - 1e-9);
    const double cost =
        control_cost(phi, ControlField(), p.jumps, p.limit.grid, Regime::LDP);
    CHECK(res.value <= cost + 1e-9);
  }
}

TEST_CASE("nested events never increase the variational value") {
  GaussianProblem p = gaussian_problem(1.0, 0.025);
  std::vector<double> values;
  for (double offset : {0.6, 1.0, 1.4}) {
    RateQuery q;
    q.event = Event::halfspace(vec1(1.0), offset);
    q.control_stride = 10;
    q.restarts = 2;
    q.iterations = 50;
    q.seed = 19;
    const RateResult res =
        minimize_rate(q, p.coeffs, p.domain, p.jumps, p.limit);
    REQUIRE(res.converged);
    values.push_back(res.value);
    CHECK(res.value ==
          doctest::Approx(offset * offset / 2.0).epsilon(5e-3));
  }
  CHECK(values[0] <= values[1] + 1e-9);
  CHECK(values[1] <= values[2] + 1e-9);
}

TEST_CASE("moderate minimization agrees with the oracle") {
  KernelCoefficients coeffs;
  coeffs.drift = DriftKernel::affine(Vec::Zero(2), -0.9, 0.2);
  Mat sigma = Mat::Identity(2, 2);
  sigma(1, 0) = -0.25;
  coeffs.diffusion = DiffusionKernel::constant(sigma);
  const JumpModel jumps = JumpModel::finite({1.0}, {1.5}, {0.45});
  const ConvexDomain domain = ConvexDomain::ball(Vec::Zero(2), 50.0);
  const PathBundle limit =
      solve_limit(coeffs, domain, vec2(0.5, 0.3), 1.0, 0.05);

  RngStream rng(4242);
  for (int inst = 0; inst < 3; ++inst) {
    Vec target(2);
    target << 0.4 * rng.normal(), 0.4 * rng.normal();
    const LqSolution oracle = lq_from_problem(coeffs, jumps, limit, target);

    RateQuery q;
    q.regime = Regime::MDP;
    q.event = Event::terminal_point(target);
    q.restarts = 2;
    q.iterations = 80;
    q.seed = 100 + inst;
    const RateResult res = minimize_rate(q, coeffs, domain, jumps, limit);
    REQUIRE(res.reachable);
    CHECK(res.value ==
          doctest::Approx(oracle.value).epsilon(1e-3));
  }
}

TEST_CASE("events beyond the control authority are flagged unreachable") {
  KernelCoefficients coeffs;  // no noise, no jumps, zero drift
  coeffs.drift = DriftKernel::affine(Vec::Zero(1), 0.0, 0.0);
  const ConvexDomain domain = ConvexDomain::box(vec1(-10.0), vec1(10.0));
  const PathBundle limit = solve_limit(coeffs, domain, vec1(0.0), 1.0, 0.05);
  RateQuery q;
  q.event = Event::halfspace(vec1(1.0), 1.0);
  q.control_stride = 4;
  const RateResult res =
      minimize_rate(q, coeffs, domain, JumpModel(), limit);
  CHECK_FALSE(res.reachable);
  CHECK_FALSE(res.converged);
  CHECK(std::isinf(res.value));
}

TEST_CASE("stride must divide the grid") {
  GaussianProblem p = gaussian_problem(1.0, 0.1);  // 10 steps
  RateQuery q;
  q.event = Event::halfspace(vec1(1.0), 1.0);
  q.control_stride = 3;
  CHECK_THROWS_AS(minimize_rate(q, p.coeffs, p.domain, p.jumps, p.limit),
                  std::invalid_argument);
}
