#include "mmv/runner.hpp"

#include <cmath>
#include <filesystem>
#include <utility>
#include <vector>

#include "mmv/config.hpp"
#include "mmv/dynamics.hpp"
#include "mmv/io.hpp"
#include "mmv/rng.hpp"
#include "mmv/skeleton.hpp"

namespace mmv {

namespace {

struct Artifact {
  std::string name;  // file name inside the output directory
  std::string text;
};

struct RunContext {
  std::vector<Artifact> artifacts;
  std::vector<std::pair<std::string, std::string>> summary;
  std::vector<std::string> warnings;
  int exit_code = 0;

  void kv(const std::string& key, const std::string& value) {
    summary.emplace_back(key, value);
  }
  void kv(const std::string& key, double value) {
    summary.emplace_back(key, format_double(value));
  }
  void kv(const std::string& key, int value) {
    summary.emplace_back(key, std::to_string(value));
  }
  void flag(const std::string& key, bool value) {
    summary.emplace_back(key, value ? "1" : "0");
  }
};

std::vector<std::string> path_header(const std::string& stem, int d,
                                     std::vector<std::string> lead) {
  for (int i = 0; i < d; ++i) lead.push_back(stem + std::to_string(i));
  return lead;
}

void append_vec(std::vector<std::string>& row, const Vec& v) {
  for (int i = 0; i < v.size(); ++i) row.push_back(format_double(v[i]));
}

void run_simulate(const Experiment& ex, RunContext& ctx) {
  const ProblemSpec& p = ex.problem;
  const PathBundle b =
      simulate_particles(p.coeffs, p.family, p.domain, p.jumps, p.x0, p.T,
                         p.dt, ex.epsilon, ex.particles, ex.seed);
  auto header = path_header("x", b.dim(), {"particle", "step", "time"});
  header = path_header("kcum", b.dim(), std::move(header));
  CsvBuilder csv(header);
  for (int i = 0; i < b.n_particles(); ++i) {
    const Mat kcum = b.k_path(i);
    for (int k = 0; k <= b.grid.n_steps; ++k) {
      std::vector<std::string> row{std::to_string(i), std::to_string(k),
                                   format_double(b.grid.time(k))};
      append_vec(row, b.states[static_cast<std::size_t>(i)].col(k));
      append_vec(row, kcum.col(k));
      csv.add_row(row);
    }
  }
  ctx.artifacts.push_back({ex.prefix + "-simulate.csv", csv.text()});
  if (!p.jumps.empty()) {
    CsvBuilder jumps({"particle", "time", "mark", "mark_value"});
    for (int i = 0; i < b.n_particles(); ++i)
      for (const JumpEvent& ev : b.jump_logs[static_cast<std::size_t>(i)])
        jumps.add_row({std::to_string(i), format_double(ev.time),
                       std::to_string(ev.mark),
                       format_double(p.jumps.mark(ev.mark))});
    ctx.artifacts.push_back({ex.prefix + "-jumps.csv", jumps.text()});
  }
  Vec terminal_mean = Vec::Zero(b.dim());
  for (int i = 0; i < b.n_particles(); ++i)
    terminal_mean += b.states[static_cast<std::size_t>(i)].col(b.grid.n_steps);
  terminal_mean /= b.n_particles();
  ctx.kv("epsilon", ex.epsilon);
  ctx.kv("particles", b.n_particles());
  ctx.kv("steps", b.grid.n_steps);
  ctx.kv("jump-violations", b.jump_violations);
  for (int i = 0; i < terminal_mean.size(); ++i)
    ctx.kv("terminal-mean" + std::to_string(i), terminal_mean[i]);
}

void run_limit(const Experiment& ex, RunContext& ctx) {
  const ProblemSpec& p = ex.problem;
  const PathBundle b = solve_limit(p.coeffs, p.domain, p.x0, p.T, p.dt);
  CsvBuilder csv(path_header("x", b.dim(), {"step", "time"}));
  for (int k = 0; k <= b.grid.n_steps; ++k) {
    std::vector<std::string> row{std::to_string(k),
                                 format_double(b.grid.time(k))};
    append_vec(row, b.states[0].col(k));
    csv.add_row(row);
  }
  ctx.artifacts.push_back({ex.prefix + "-limit.csv", csv.text()});
  const Vec terminal = b.states[0].col(b.grid.n_steps);
  for (int i = 0; i < terminal.size(); ++i)
    ctx.kv("terminal" + std::to_string(i), terminal[i]);
}

void emit_skeleton(const Experiment& ex, const SkeletonSolution& sol,
                   RunContext& ctx) {
  auto header = path_header("y", static_cast<int>(sol.path.rows()),
                            {"step", "time"});
  header = path_header("kcum", static_cast<int>(sol.path.rows()),
                       std::move(header));
  CsvBuilder csv(header);
  const Mat kcum = sol.k_path();
  for (int k = 0; k <= sol.grid.n_steps; ++k) {
    std::vector<std::string> row{std::to_string(k),
                                 format_double(sol.grid.time(k))};
    append_vec(row, sol.path.col(k));
    append_vec(row, kcum.col(k));
    csv.add_row(row);
  }
  ctx.artifacts.push_back({ex.prefix + "-" + ex.task_name + ".csv",
                           csv.text()});
  ctx.kv("cost-phi", sol.cost_phi);
  ctx.kv("cost-psi", sol.cost_psi);
  ctx.kv("cost", sol.cost());
  const Vec terminal = sol.path.col(sol.grid.n_steps);
  for (int i = 0; i < terminal.size(); ++i)
    ctx.kv("terminal" + std::to_string(i), terminal[i]);
}

void run_skeleton(const Experiment& ex, RunContext& ctx) {
  const ProblemSpec& p = ex.problem;
  const PathBundle limit = solve_limit(p.coeffs, p.domain, p.x0, p.T, p.dt);
  if (ex.task == TaskKind::SkeletonLdp) {
    emit_skeleton(ex, solve_ldp_skeleton(p.coeffs, p.domain, p.jumps, limit,
                                         ex.phi, ex.psi),
                  ctx);
  } else {
    const SkeletonSolution sol =
        solve_mdp_skeleton(p.coeffs, p.domain, p.jumps, limit, ex.phi, ex.psi,
                           ex.skeleton_constraint);
    emit_skeleton(ex, sol, ctx);
    ctx.flag("constrained", sol.constrained);
  }
}

void run_rate(const Experiment& ex, RunContext& ctx) {
  const ProblemSpec& p = ex.problem;
  const PathBundle limit = solve_limit(p.coeffs, p.domain, p.x0, p.T, p.dt);
  const RateResult res =
      minimize_rate(ex.rate, p.coeffs, p.domain, p.jumps, limit);

  // Infeasible events come back with no minimizer at all; there is nothing
  // to export beyond the summary in that case.
  if (res.phi.dim() > 0) {
    const int marks = res.psi.n_marks();
    auto header = path_header("phi", res.phi.dim(), {"step", "time"});
    header = path_header("psi", marks, std::move(header));
    CsvBuilder controls(header);
    for (int k = 0; k < limit.grid.n_steps; ++k) {
      std::vector<std::string> row{std::to_string(k),
                                   format_double(limit.grid.time(k))};
      append_vec(row, res.phi.at(k));
      for (int m = 0; m < marks; ++m)
        row.push_back(format_double(res.psi.at(k, m)));
      controls.add_row(row);
    }
    ctx.artifacts.push_back({ex.prefix + "-rate-controls.csv",
                             controls.text()});

    CsvBuilder path(path_header("y", limit.dim(), {"step", "time"}));
    for (int k = 0; k <= limit.grid.n_steps; ++k) {
      std::vector<std::string> row{std::to_string(k),
                                   format_double(limit.grid.time(k))};
      append_vec(row, res.solution.path.col(k));
      path.add_row(row);
    }
    ctx.artifacts.push_back({ex.prefix + "-rate-path.csv", path.text()});
  }

  ctx.kv("rate", res.value);
  ctx.flag("reachable", res.reachable);
  ctx.flag("converged", res.converged);
  ctx.kv("residual", res.residual);
  ctx.kv("objective", res.objective);
  ctx.kv("winner-start", res.winner_start);
  if (!res.reachable || !std::isfinite(res.value)) ctx.exit_code = 3;
}

void run_tail(const Experiment& ex, RunContext& ctx, int workers) {
  const ModerateScale scale(ex.theta);
  const ModerateScale* sp =
      ex.tail_regime == Regime::MDP ? &scale : nullptr;
  const TailEstimate est = estimate_tail(ex.problem, ex.event, ex.eps_grid,
                                         ex.replicas, sp, ex.seed, workers);
  CsvBuilder csv({"epsilon", "speed", "p_hat", "hits", "replicas", "std_err",
                  "scaled_log", "dropped"});
  for (const TailPoint& pt : est.points)
    csv.add_row({format_double(pt.epsilon), format_double(pt.speed),
                 format_double(pt.p_hat), std::to_string(pt.hits),
                 std::to_string(pt.replicas), format_double(pt.std_err),
                 format_double(pt.scaled_log), pt.dropped ? "1" : "0"});
  ctx.artifacts.push_back({ex.prefix + "-tail.csv", csv.text()});
  ctx.kv("slope", est.slope);
  ctx.kv("intercept", est.intercept);
  ctx.kv("intercept-se", est.intercept_se);
  ctx.kv("n-used", est.n_used);
  ctx.warnings = est.warnings;
}

void run_converge(const Experiment& ex, RunContext& ctx, int workers) {
  const bool controlled = ex.converge_mode == StudyMode::Controlled;
  const StudyReport rep = convergence_study(
      ex.problem, ex.eps_grid, ex.replicas, ex.converge_mode, ex.seed,
      controlled ? &ex.phi : nullptr,
      controlled && !ex.problem.jumps.empty() ? &ex.psi : nullptr, workers);
  CsvBuilder csv({"epsilon", "mean_sq_sup", "std_err"});
  for (const StudyPoint& pt : rep.points)
    csv.add_row({format_double(pt.epsilon), format_double(pt.mean_sq_sup),
                 format_double(pt.std_err)});
  ctx.artifacts.push_back({ex.prefix + "-converge.csv", csv.text()});
  ctx.kv("slope", rep.slope);
  ctx.kv("slope-se", rep.slope_se);
  ctx.kv("log-intercept", rep.log_intercept);
  if (ex.converge_mode == StudyMode::Rate) ctx.kv("c-hat", rep.c_hat);
  ctx.flag("strictly-decreasing", rep.strictly_decreasing);
}

void run_check(const Experiment& ex, RunContext& ctx) {
  const ProblemSpec& p = ex.problem;
  const PathBundle limit = solve_limit(p.coeffs, p.domain, p.x0, p.T, p.dt);
  HypothesisCheckConfig hcfg = ex.check;
  hcfg.limit_path = &limit.states[0];
  hcfg.dt = p.dt;
  const HypothesisReport rep =
      check_hypotheses(p.coeffs, p.family, p.jumps, p.domain, hcfg);

  const PathBundle b =
      simulate_particles(p.coeffs, p.family, p.domain, p.jumps, p.x0, p.T,
                         p.dt, ex.epsilon, 1, ex.seed);
  const auto graph =
      p.domain.sample_graph(ex.check.samples, derive_seed(ex.seed, "graph", 0));
  const MonotonicityReport mono = check_pair_monotonicity(
      b.states[0], b.k_increments[0], p.dt, graph);
  const VariationBoundReport vb = check_variation_bound(
      p.domain, b.states[0], b.k_increments[0], p.dt, ex.check_ball_center,
      ex.check_ball_radius, ex.check_mu);

  double worst_outside = 0.0;
  for (int k = 0; k <= b.grid.n_steps; ++k) {
    const Vec x = b.states[0].col(k);
    worst_outside =
        std::max(worst_outside, (x - p.domain.project(x)).norm());
  }
  const bool in_domain = worst_outside <= 1e-9;

  CsvBuilder csv({"name", "pass", "conservative", "value"});
  bool all_pass = in_domain && mono.pass && vb.pass;
  for (const HypothesisCheck& c : rep.checks) {
    csv.add_row({c.name, c.pass ? "1" : "0", c.conservative ? "1" : "0",
                 format_double(c.worst)});
    all_pass = all_pass && c.pass;
  }
  csv.add_row({"pair-monotonicity", mono.pass ? "1" : "0", "0",
               format_double(mono.min_inner)});
  csv.add_row({"variation-bound", vb.pass ? "1" : "0", "0",
               format_double(vb.slack)});
  csv.add_row({"in-domain", in_domain ? "1" : "0", "0",
               format_double(worst_outside)});
  ctx.artifacts.push_back({ex.prefix + "-check-hypotheses.csv", csv.text()});
  ctx.flag("all-pass", all_pass);
  ctx.kv("checks", static_cast<int>(rep.checks.size()) + 3);
}

void run_bihari(const Experiment& ex, RunContext& ctx) {
  const std::vector<double> g = bihari_bound(ex.bihari);
  CsvBuilder csv({"step", "time", "bound"});
  for (std::size_t k = 0; k < g.size(); ++k)
    csv.add_row({std::to_string(k),
                 format_double(ex.bihari.grid.time(static_cast<int>(k))),
                 format_double(g[k])});
  ctx.artifacts.push_back({ex.prefix + "-bihari.csv", csv.text()});
  ctx.kv("final", g.back());
}

int execute(const Experiment& ex, const std::string& resolved,
            const std::string& input_hash, int workers, std::ostream& out,
            std::ostream& err) {
  RunContext ctx;
  ctx.kv("task", ex.task_name);
  switch (ex.task) {
    case TaskKind::Simulate:
      run_simulate(ex, ctx);
      break;
    case TaskKind::Limit:
      run_limit(ex, ctx);
      break;
    case TaskKind::SkeletonLdp:
    case TaskKind::SkeletonMdp:
      run_skeleton(ex, ctx);
      break;
    case TaskKind::Rate:
      run_rate(ex, ctx);
      break;
    case TaskKind::Tail:
      run_tail(ex, ctx, workers);
      break;
    case TaskKind::Converge:
      run_converge(ex, ctx, workers);
      break;
    case TaskKind::CheckHypotheses:
      run_check(ex, ctx);
      break;
    case TaskKind::Bihari:
      run_bihari(ex, ctx);
      break;
  }

  std::string summary_line = "summary";
  for (const auto& [key, value] : ctx.summary)
    summary_line += " " + key + "=" + value;

  std::filesystem::create_directories(ex.out_dir);
  std::string manifest =
      "# resolved configuration; re-run with: mmvlab run <this file>\n" +
      resolved + "# input config sha1 " + input_hash + "\n";
  for (const Artifact& a : ctx.artifacts) {
    const std::string path = ex.out_dir + "/" + a.name;
    write_text_file(path, a.text);
    out << "wrote " << path << "\n";
    manifest += "# artifact " + a.name + " sha1 " + content_hash(a.text) +
                "\n";
  }
  manifest += "# " + summary_line + "\n";
  const std::string manifest_path =
      ex.out_dir + "/" + ex.prefix + "-manifest.cfg";
  write_text_file(manifest_path, manifest);
  out << "wrote " << manifest_path << "\n";

  for (const std::string& w : ctx.warnings) err << "warning: " << w << "\n";
  out << summary_line << "\n";
  return ctx.exit_code;
}

}  // namespace

int run_experiment(const RunOptions& opts, std::ostream& out,
                   std::ostream& err) {
  try {
    std::string raw;
    try {
      raw = read_text_file(opts.config_path);
    } catch (const std::runtime_error& e) {
      throw ConfigError(e.what());
    }
    ConfigMap cfg = ConfigMap::parse(raw, opts.config_path);
    if (!opts.out_override.empty()) cfg.set("output.dir", opts.out_override);
    Experiment ex = resolve_experiment(cfg);
    if (opts.validate_only) {
      out << cfg.resolved_text();
      out << "ok: configuration valid\n";
      return 0;
    }
    return execute(ex, cfg.resolved_text(), content_hash(raw), opts.workers,
                   out, err);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    err << "validation error: " << e.what() << "\n";
    return 2;
  } catch (const std::runtime_error& e) {
    err << "numerical failure: " << e.what() << "\n";
    return 3;
  }
}

}  // namespace mmv
