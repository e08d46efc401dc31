#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "mmv/analysis.hpp"
#include "mmv/rate.hpp"

namespace mmv {

// Configuration problems (syntax, schema, invariants) carry this type so the
// driver can map them to the validation exit code; numerical failures stay
// plain std::runtime_error.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Flat `section.key = value` text: one pair per line, `#` starts a comment,
// blank lines ignored, duplicate keys rejected.  Getters mark keys as
// consumed and record the resolved value (including materialized defaults);
// finish() turns every unconsumed key into a hard error, so misspellings can
// never fall back to silent defaults.
class ConfigMap {
 public:
  static ConfigMap parse(const std::string& text, const std::string& origin);

  bool has(const std::string& key) const { return raw_.count(key) != 0; }

  // Driver-side override applied before resolution (e.g. --out replacing
  // output.dir); the resolved dump then records the effective value.
  void set(const std::string& key, const std::string& value) {
    raw_[key] = value;
  }

  std::string get_string(const std::string& key);
  std::string get_string(const std::string& key, const std::string& fallback);
  // Value must be one of `allowed`; the error message lists the options.
  std::string get_choice(const std::string& key,
                         const std::vector<std::string>& allowed);
  std::string get_choice(const std::string& key,
                         const std::vector<std::string>& allowed,
                         const std::string& fallback);
  double get_real(const std::string& key);
  double get_real(const std::string& key, double fallback);
  int get_int(const std::string& key);
  int get_int(const std::string& key, int fallback);
  bool get_bool(const std::string& key, bool fallback);
  std::uint64_t get_seed(const std::string& key);
  // Comma-separated reals; `expected` < 0 accepts any positive length.
  std::vector<double> get_reals(const std::string& key, int expected);
  std::vector<double> get_reals(const std::string& key, int expected,
                                const std::vector<double>& fallback);
  Vec get_vec(const std::string& key, int expected);
  Vec get_vec(const std::string& key, int expected, const Vec& fallback);
  // Semicolon-separated rows of comma-separated reals, equal row lengths.
  Mat get_mat(const std::string& key);

  void finish() const;

  // Canonical sorted `key = value` dump of everything consumed; parses back
  // to the identical resolved configuration.
  std::string resolved_text() const;

 private:
  std::string take(const std::string& key);  // consume or throw
  void record(const std::string& key, const std::string& canonical);

  std::string origin_;
  std::map<std::string, std::string> raw_;
  std::set<std::string> consumed_;
  std::map<std::string, std::string> resolved_;
};

enum class TaskKind {
  Simulate,
  Limit,
  SkeletonLdp,
  SkeletonMdp,
  Rate,
  Tail,
  Converge,
  CheckHypotheses,
  Bihari,
};

// Fully resolved experiment: the task plus every object the runner needs,
// built from a ConfigMap with all invariants checked.
struct Experiment {
  TaskKind task = TaskKind::Limit;
  std::string task_name = "limit";

  ProblemSpec problem;  // coefficients, family, domain, jumps, x0, T, dt
  std::uint64_t seed = 0;

  double epsilon = 0.0;            // simulate, check-hypotheses
  std::vector<double> eps_grid;    // tail, converge
  double theta = 0.25;             // tail (moderate regime)
  int particles = 1;               // simulate
  int replicas = 0;                // tail, converge

  Control phi;                     // skeleton tasks, controlled study
  ControlField psi;
  MdpConstraint skeleton_constraint = MdpConstraint::None;

  Event event;                     // rate, tail
  RateQuery rate;                  // rate
  Regime tail_regime = Regime::LDP;
  StudyMode converge_mode = StudyMode::Limit;

  HypothesisCheckConfig check;     // check-hypotheses
  Vec check_ball_center;
  double check_ball_radius = 0.25;
  double check_mu = 1.0;

  BihariSpec bihari;               // bihari

  std::string out_dir = "out";
  std::string prefix = "mmv";
};

// Consumes the map (so finish() can flag leftovers) and enforces the schema:
// required keys present, catalog ids known, dt dividing T, seed mandatory.
Experiment resolve_experiment(ConfigMap& cfg);

}  // namespace mmv
