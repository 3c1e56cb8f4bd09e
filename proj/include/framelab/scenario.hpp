#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "framelab/measure.hpp"
#include "framelab/rng.hpp"
#include "framelab/space.hpp"
#include "framelab/weights.hpp"

namespace framelab {

enum class ScenarioKind {
  aux,
  orbit,
  genbackward,
  kaczmarzclass,
  mainsingular,
  weights,
  rm_sweep,
  diagnose,
  solve,
};
const char* scenario_kind_name(ScenarioKind k);

// Parsed and bounds-checked experiment description. Scenario files are JSON
// documents; the schema is documented in the README and every field beyond
// `name` and `kind` has a checked default. Measures use the measure module's
// document format under "measure"; weights take {"preset": name},
// {"cells": [...]}, or {"power": p} under "weight", with "grid_cells"
// choosing the realization where one is needed.
struct Scenario {
  std::string name;
  ScenarioKind kind = ScenarioKind::aux;
  std::uint64_t seed = kDefaultSeed;

  long long horizon = 256;
  int depth = 12;
  int trials = 5;
  double tolerance = 1e-6;

  std::optional<MeasureSpec> measure;
  std::optional<Weight> weight;
  int grid_cells = 0; // 0: pick per kind

  std::vector<long long> band_limits; // rm_sweep / diagnose panels
  std::vector<double> eps_grid;       // weights panel
  std::string expect_trend;           // "", "bounded", "growing",
                                      // "stable" (weights kind)

  // Whitened operator parameter for the orbit kinds: "identity", "matrix"
  // (explicit complex entries), or "random" (seeded, condition-targeted).
  std::string v_kind = "identity";
  Eigen::MatrixXcd v_matrix;
  double v_condition = 10.0;

  // mainsingular seed vector, coordinates over the measure's realization.
  std::vector<cxd> g0;

  // solve kind: random consistent systems.
  int rows = 12;
  int cols = 8;
  double condition = 100.0;

  long long max_m = 256; // diagnose band limit
};

Scenario parse_scenario(const std::string& json_text);
std::string read_text_file(const std::string& path);

struct RunResult {
  int exit_code = 0; // 0 verdicts pass, 2 verdict failure
  bool verdicts_pass = true;
  std::string report_path;
  std::string report_json;
  std::vector<std::string> artifacts; // files written, report included
};

// Executes the scenario and writes its artifacts under out_dir (created if
// missing): <name>_report.json plus the kind's CSV curves. CSV bytes are a
// pure function of scenario + seed; wall-clock lives only in the report.
RunResult run_scenario(const Scenario& s, const std::string& out_dir);

// Five-way classification panel behind the diagnose subcommand.
enum class WeightClass { frame, bessel_only, lower_semi_frame_only, neither };
const char* weight_class_name(WeightClass c);

// Exact essential bounds of the weight on its support decide the class;
// the analytic forms make this a closed-form call. No representable weight
// reaches `neither` (grids are bounded with positive support minimum); the
// value exists to keep the panel's contract complete.
WeightClass classify_weight(const Weight& w);

// One-page JSON reports: measured exponential bounds against the oracle,
// weak-A2 constant with trend, the eps panel, and the implied class, every
// claim tagged with the depth/band limit it stabilized at.
std::string diagnose_weight_text(const Weight& w, int depth, long long max_m);
std::string diagnose_measure_text(const MeasureSpec& m, long long horizon);

} // namespace framelab
