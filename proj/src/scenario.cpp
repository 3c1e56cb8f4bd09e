#include "framelab/scenario.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <sstream>
#include <utility>

#include "framelab/frames.hpp"
#include "framelab/kaczmarz.hpp"
#include "framelab/orbits.hpp"
#include "framelab/version.hpp"
#include "json.hpp"

namespace framelab {
namespace {

using nlohmann::json;
namespace stdfs = std::filesystem;

struct KindEntry {
  const char* name;
  ScenarioKind kind;
};
constexpr std::array<KindEntry, 9> kKinds{{
    {"aux", ScenarioKind::aux},
    {"orbit", ScenarioKind::orbit},
    {"genbackward", ScenarioKind::genbackward},
    {"kaczmarzclass", ScenarioKind::kaczmarzclass},
    {"mainsingular", ScenarioKind::mainsingular},
    {"weights", ScenarioKind::weights},
    {"rm_sweep", ScenarioKind::rm_sweep},
    {"diagnose", ScenarioKind::diagnose},
    {"solve", ScenarioKind::solve},
}};

[[noreturn]] void fail_field(const std::string& field, const std::string& why) {
  throw Error(ErrorCode::parse_failure,
              "scenario field \"" + field + "\": " + why);
}

std::string num(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}
std::string num(long long v) { return std::to_string(v); }

// null for non-finite values; JSON has no spelling for them.
json jnum(double x) { return std::isfinite(x) ? json(x) : json(); }

double get_double(const json& j, const std::string& field, double lo,
                  double hi) {
  if (!j.is_number()) fail_field(field, "expected a number");
  const double v = j.get<double>();
  if (!(v >= lo && v <= hi))
    fail_field(field, "value " + num(v) + " outside [" + num(lo) + ", " +
                          num(hi) + "]");
  return v;
}

long long get_int(const json& j, const std::string& field, long long lo,
                  long long hi) {
  if (!j.is_number_integer() && !j.is_number_unsigned())
    fail_field(field, "expected an integer");
  const long long v = j.get<long long>();
  if (v < lo || v > hi)
    fail_field(field, "value " + num(v) + " outside [" + num(lo) + ", " +
                          num(hi) + "]");
  return v;
}

cxd get_complex(const json& j, const std::string& field) {
  if (j.is_number()) return cxd(j.get<double>(), 0.0);
  if (j.is_array() && j.size() == 2 && j[0].is_number() && j[1].is_number())
    return cxd(j[0].get<double>(), j[1].get<double>());
  fail_field(field, "expected a number or an [re, im] pair");
}

MeasureSpec parse_scenario_measure(const json& j) {
  if (!j.is_object()) fail_field("measure", "expected an object");
  if (j.contains("kind") && j["kind"] == "cantor") {
    for (const auto& [key, value] : j.items()) {
      (void)value;
      if (key != "kind" && key != "level")
        fail_field("measure." + key, "unknown field");
    }
    if (!j.contains("level")) fail_field("measure.level", "required");
    const int level = static_cast<int>(get_int(j["level"], "measure.level", 0, 12));
    return cantor_iterate(level);
  }
  return parse_measure(j.dump());
}

Weight parse_scenario_weight(const json& j) {
  if (!j.is_object()) fail_field("weight", "expected an object");
  int forms = 0;
  for (const char* key : {"preset", "cells", "power", "csv"})
    forms += j.contains(key) ? 1 : 0;
  if (forms != 1)
    fail_field("weight",
               "exactly one of \"preset\", \"cells\", \"power\", \"csv\"");
  for (const auto& [key, value] : j.items()) {
    (void)value;
    if (key != "preset" && key != "cells" && key != "power" && key != "csv")
      fail_field("weight." + key, "unknown field");
  }
  if (j.contains("preset")) {
    if (!j["preset"].is_string()) fail_field("weight.preset", "expected a string");
    return Weight::preset(j["preset"].get<std::string>());
  }
  if (j.contains("power"))
    return Weight::power(get_double(j["power"], "weight.power", -8.0, 8.0));
  if (j.contains("csv")) {
    if (!j["csv"].is_string()) fail_field("weight.csv", "expected a path string");
    return weight_from_csv_text(read_text_file(j["csv"].get<std::string>()));
  }
  if (!j["cells"].is_array()) fail_field("weight.cells", "expected an array");
  std::vector<double> cells;
  cells.reserve(j["cells"].size());
  for (const auto& c : j["cells"])
    cells.push_back(get_double(c, "weight.cells", 0.0, 1e12));
  return Weight::grid(std::move(cells));
}

void parse_operator(const json& j, Scenario& sc) {
  if (!j.is_object()) fail_field("v", "expected an object");
  if (!j.contains("type") || !j["type"].is_string())
    fail_field("v.type", "required string, one of identity, matrix, random");
  sc.v_kind = j["type"].get<std::string>();
  for (const auto& [key, value] : j.items()) {
    (void)value;
    if (key != "type" && key != "entries" && key != "condition")
      fail_field("v." + key, "unknown field");
  }
  if (sc.v_kind == "identity") {
    return;
  }
  if (sc.v_kind == "random") {
    if (j.contains("condition"))
      sc.v_condition = get_double(j["condition"], "v.condition", 1.0, 1e6);
    return;
  }
  if (sc.v_kind != "matrix")
    fail_field("v.type", "\"" + sc.v_kind +
                             "\" is not one of identity, matrix, random");
  if (!j.contains("entries") || !j["entries"].is_array())
    fail_field("v.entries", "required array of rows");
  const auto& rows = j["entries"];
  const Eigen::Index n = static_cast<Eigen::Index>(rows.size());
  if (n == 0) fail_field("v.entries", "must not be empty");
  sc.v_matrix.resize(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& row = rows[static_cast<std::size_t>(i)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != n)
      fail_field("v.entries", "row " + num(static_cast<long long>(i)) +
                                  " is not a length-" +
                                  num(static_cast<long long>(n)) + " array");
    for (Eigen::Index k = 0; k < n; ++k)
      sc.v_matrix(i, k) =
          get_complex(row[static_cast<std::size_t>(k)], "v.entries");
  }
}

void check_expect_trend(const Scenario& sc) {
  const std::string& t = sc.expect_trend;
  if (t.empty()) return;
  if (sc.kind == ScenarioKind::rm_sweep) {
    if (t != "bounded" && t != "growing")
      fail_field("expect_trend", "rm_sweep expects \"bounded\" or \"growing\"");
    return;
  }
  if (sc.kind == ScenarioKind::weights) {
    if (t != "stable" && t != "growing")
      fail_field("expect_trend", "weights expects \"stable\" or \"growing\"");
    return;
  }
  fail_field("expect_trend", std::string("not used by kind ") +
                                 scenario_kind_name(sc.kind));
}

// ---------------------------------------------------------------------------
// Run machinery

struct Verdict {
  std::string check;
  bool pass = false;
  double value = 0.0;
  double bound = std::numeric_limits<double>::quiet_NaN();
  std::string note;
};

void check_leq(std::vector<Verdict>& vs, const std::string& name, double value,
               double bound) {
  vs.push_back({name, std::isfinite(value) && value <= bound, value, bound, ""});
}

void check_true(std::vector<Verdict>& vs, const std::string& name, bool ok,
                const std::string& note) {
  vs.push_back({name, ok, ok ? 1.0 : 0.0,
                std::numeric_limits<double>::quiet_NaN(), note});
}

struct RunContext {
  const Scenario& sc;
  stdfs::path dir;
  std::vector<Verdict> verdicts;
  json results = json::object();
  json parameters = json::object();
  std::vector<std::string> csv_names;   // basenames, report order
  std::vector<std::string> full_paths;  // absolute/relative as given

  void write_csv(const std::string& suffix, const std::string& content) {
    const std::string base = sc.name + "_" + suffix + ".csv";
    const stdfs::path p = dir / base;
    std::ofstream out(p, std::ios::binary);
    if (!out)
      throw Error(ErrorCode::io_failure, "cannot open " + p.string());
    out << content;
    out.flush();
    if (!out)
      throw Error(ErrorCode::io_failure, "write failed for " + p.string());
    csv_names.push_back(base);
    full_paths.push_back(p.string());
  }
};

std::string sequence_csv(long long count, Eigen::Index dim,
                         const std::function<const Eigen::VectorXcd&(long long)>& at) {
  std::string out = "n";
  for (Eigen::Index i = 0; i < dim; ++i) {
    const std::string s = num(static_cast<long long>(i));
    out += ",re_" + s + ",im_" + s;
  }
  out += "\n";
  for (long long n = 0; n < count; ++n) {
    const Eigen::VectorXcd& v = at(n);
    out += num(n);
    for (Eigen::Index i = 0; i < dim; ++i)
      out += "," + num(v[i].real()) + "," + num(v[i].imag());
    out += "\n";
  }
  return out;
}

std::string bounds_csv(const FrameSequence& fs, long long horizon,
                       FrameReport* last) {
  std::string out = "horizon,A,B,tail_indicator\n";
  for (long long h = std::max<long long>(fs.space()->dim(), 2); h <= horizon;
       h *= 2) {
    const FrameReport r = frame_bounds(fs, h);
    out += num(h) + "," + num(r.lower) + "," + num(r.upper) + "," +
           num(r.tail_indicator) + "\n";
    if (last) *last = r;
  }
  return out;
}

std::string residual_csv(const EffectivenessReport& r) {
  std::string out = "n,residual,parseval_defect\n";
  for (std::size_t i = 0; i < r.residual_curve.size(); ++i) {
    const double defect =
        i < r.defect_curve.size() ? r.defect_curve[i] : 0.0;
    out += num(static_cast<long long>(i)) + "," + num(r.residual_curve[i]) +
           "," + num(defect) + "\n";
  }
  return out;
}

json frame_report_json(const FrameReport& r) {
  json j;
  j["lower"] = jnum(r.lower);
  j["upper"] = jnum(r.upper);
  j["horizon"] = r.horizon;
  j["tail_indicator"] = jnum(r.tail_indicator);
  j["stable"] = r.stable;
  j["frame"] = r.frame;
  j["bessel"] = r.bessel;
  j["lower_semi_frame"] = r.lower_semi_frame;
  j["tight"] = r.tight;
  j["parseval"] = r.parseval;
  return j;
}

json effectiveness_json(const EffectivenessReport& r) {
  json j;
  j["verdict"] = effectiveness_name(r.verdict);
  j["trials"] = r.trials;
  j["n_max"] = r.n_max;
  j["tolerance"] = r.tolerance;
  j["max_residual"] = jnum(r.max_residual);
  j["parseval_defect"] = jnum(r.parseval_defect);
  j["log_slope_last_decade"] = jnum(r.log_slope_last_decade);
  return j;
}

const char* trend_name(RefinementTrend t) {
  return t == RefinementTrend::stable ? "stable" : "growing";
}

json a2_bound_json(const A2Bound& b) {
  json j;
  j["computed"] = b.computed;
  j["divergent"] = b.divergent;
  j["value"] = b.computed ? jnum(b.value) : json();
  return j;
}

const MeasureSpec& need_measure(const Scenario& sc) {
  if (!sc.measure)
    throw Error(ErrorCode::bad_argument,
                std::string("kind ") + scenario_kind_name(sc.kind) +
                    " needs a measure");
  return *sc.measure;
}

const Weight& need_weight(const Scenario& sc) {
  if (!sc.weight)
    throw Error(ErrorCode::bad_argument,
                std::string("kind ") + scenario_kind_name(sc.kind) +
                    " needs a weight");
  return *sc.weight;
}

void require_probability(const MeasureSpec& m, const Scenario& sc) {
  if (!is_probability(m))
    throw Error(ErrorCode::bad_measure,
                std::string("kind ") + scenario_kind_name(sc.kind) +
                    " needs a probability measure (total mass " +
                    num(total_mass(m)) + ")");
}

Eigen::MatrixXcd haar_unitary(Eigen::Index n, std::mt19937_64& g) {
  Eigen::MatrixXcd a = Eigen::MatrixXcd::Zero(n, n);
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index i = 0; i < n; ++i)
      a(i, j) = cxd(normal01(g), normal01(g));
  Eigen::HouseholderQR<Eigen::MatrixXcd> qr(a);
  Eigen::MatrixXcd q = qr.householderQ() * Eigen::MatrixXcd::Identity(n, n);
  const Eigen::MatrixXcd r = qr.matrixQR();
  for (Eigen::Index j = 0; j < n; ++j) {
    const double ad = std::abs(r(j, j));
    if (ad > 0) q.col(j) *= r(j, j) / ad;
  }
  return q;
}

Eigen::VectorXd log_spaced_singulars(Eigen::Index n, double condition) {
  Eigen::VectorXd sv(n);
  const double steps = n > 1 ? static_cast<double>(n - 1) : 1.0;
  for (Eigen::Index i = 0; i < n; ++i)
    sv[i] = std::pow(condition, -static_cast<double>(i) / steps);
  return sv;
}

LinearMap build_operator(const Scenario& sc, const SpacePtr& s) {
  if (sc.v_kind == "identity") return identity_map(s);
  if (sc.v_kind == "random") {
    std::mt19937_64 g(sc.seed);
    const Eigen::Index n = s->dim();
    const Eigen::MatrixXcd u1 = haar_unitary(n, g);
    const Eigen::MatrixXcd u2 = haar_unitary(n, g);
    const Eigen::VectorXd sv = log_spaced_singulars(n, sc.v_condition);
    return LinearMap{u1 * sv.asDiagonal() * u2.adjoint(), s, s};
  }
  if (sc.v_kind != "matrix")
    throw Error(ErrorCode::bad_argument,
                "operator type \"" + sc.v_kind + "\" is not supported");
  if (sc.v_matrix.rows() != s->dim() || sc.v_matrix.cols() != s->dim())
    throw Error(ErrorCode::dimension_mismatch,
                "operator entries are " + num(static_cast<long long>(sc.v_matrix.rows())) +
                    "x" + num(static_cast<long long>(sc.v_matrix.cols())) +
                    " but the realization has dimension " +
                    num(static_cast<long long>(s->dim())));
  return LinearMap{sc.v_matrix, s, s};
}

// ---------------------------------------------------------------------------
// Kind runners

void run_aux(RunContext& ctx) {
  const Scenario& sc = ctx.sc;
  const MeasureSpec& m = need_measure(sc);
  require_probability(m, sc);
  SpacePtr s = space_of(m);
  const auto e = exponential_stream(m, s);
  const long long h = sc.horizon;

  const AuxiliarySequence aux = auxiliary_sequence(e, h - 1, s);
  ctx.write_csv("aux", sequence_csv(aux.count(), s->dim(),
                                    [&](long long n) -> const Eigen::VectorXcd& {
                                      return aux.at(n);
                                    }));

  const FrameSequence fs = FrameSequence::fromAuxiliary(aux);
  FrameReport last;
  const std::string bcsv = bounds_csv(fs, h, &last);
  ctx.write_csv("bounds", bcsv);
  if (last.horizon > 0) ctx.results["bounds"] = frame_report_json(last);

  const EffectivenessReport eff =
      effectiveness_test(e, s, sc.trials, h, sc.tolerance, sc.seed);
  ctx.write_csv("residual", residual_csv(eff));
  ctx.results["effectiveness"] = effectiveness_json(eff);
  ctx.verdicts.push_back({"effective",
                          eff.verdict == Effectiveness::effective_within_tolerance,
                          eff.max_residual, eff.tolerance,
                          effectiveness_name(eff.verdict)});
}

void run_orbit(RunContext& ctx) {
  const Scenario& sc = ctx.sc;
  const MeasureSpec& m = need_measure(sc);
  require_probability(m, sc);
  const OrbitOperator t = build_singular_shift(m);
  SpacePtr s = t.map.domain;
  const long long h = sc.horizon;

  const FrameSequence orbit = FrameSequence::fromOrbit(t.map, t.g0);
  const AuxiliarySequence aux =
      auxiliary_sequence(exponential_stream(m, s), h - 1, s);
  double gap = 0.0;
  for (long long n = 0; n < h; ++n)
    gap = std::max(gap, norm_raw(*s, orbit.at(n) - aux.at(n)));

  ctx.write_csv("orbit", sequence_csv(h, s->dim(),
                                      [&](long long n) -> const Eigen::VectorXcd& {
                                        return orbit.at(n);
                                      }));
  FrameReport last;
  ctx.write_csv("bounds", bounds_csv(orbit, h, &last));
  if (last.horizon > 0) ctx.results["bounds"] = frame_report_json(last);

  const MultiplicationReport mult = verify_S1_eq_g0(t, h);
  ctx.results["orbit_gap"] = jnum(gap);
  ctx.results["s_one_defect"] = jnum(mult.s_one_defect);
  ctx.results["s_one_pairing"] = {jnum(mult.s_one_pairing.real()),
                                  jnum(mult.s_one_pairing.imag())};
  check_leq(ctx.verdicts, "orbit_matches_corrections", gap, sc.tolerance);
  check_leq(ctx.verdicts, "s_one_defect", mult.s_one_defect, sc.tolerance);
  check_leq(ctx.verdicts, "s_one_pairing",
            std::abs(mult.s_one_pairing - cxd(1.0, 0.0)), sc.tolerance);
}

GenbackwardBundle make_bundle(const Scenario& sc) {
  const MeasureSpec& m = need_measure(sc);
  require_probability(m, sc);
  SpacePtr s = space_of(m);
  return build_perturbed_conjugate(build_operator(sc, s), m);
}

void run_genbackward(RunContext& ctx) {
  const Scenario& sc = ctx.sc;
  const GenbackwardBundle bundle = make_bundle(sc);
  const long long h = sc.horizon;
  const BackwardPairReport rep =
      verify_genbackward(bundle, h, sc.trials, sc.tolerance, sc.seed);

  FrameReport last;
  ctx.write_csv("bounds",
                bounds_csv(FrameSequence::fromOrbit(bundle.t.map, bundle.t.g0),
                           h, &last));
  if (last.horizon > 0) ctx.results["bounds"] = frame_report_json(last);
  ctx.write_csv("residual", residual_csv(rep.effectiveness));

  ctx.results["v_condition"] = jnum(bundle.v_condition);
  ctx.results["unitarity_defect"] = jnum(bundle.unitarity_defect);
  ctx.results["orbit_gap"] = jnum(rep.orbit_gap);
  ctx.results["effectiveness"] = effectiveness_json(rep.effectiveness);

  check_leq(ctx.verdicts, "orbit_matches_pair_corrections", rep.orbit_gap,
            sc.tolerance);
  ctx.verdicts.push_back(
      {"pair_effective",
       rep.effectiveness.verdict == Effectiveness::effective_within_tolerance,
       rep.effectiveness.max_residual, rep.effectiveness.tolerance,
       effectiveness_name(rep.effectiveness.verdict)});
}

void run_kaczmarzclass(RunContext& ctx) {
  const Scenario& sc = ctx.sc;
  const GenbackwardBundle bundle = make_bundle(sc);
  const long long h = sc.horizon;
  const RenormingReport rep = verify_kaczmarzclass(bundle, h);

  SpacePtr hp = renormed_space(bundle.space, bundle.s);
  const FrameSequence orbit_hp =
      FrameSequence::fromOrbit(LinearMap{bundle.t.map.matrix, hp, hp},
                               make_vector(bundle.t.g0.coords, hp));
  FrameReport last;
  ctx.write_csv("bounds", bounds_csv(orbit_hp, h, &last));
  if (last.horizon > 0) ctx.results["bounds_renormed"] = frame_report_json(last);

  ctx.results["parseval_defect"] = jnum(rep.parseval_defect);
  ctx.results["auxiliary_gap"] = jnum(rep.auxiliary_gap);
  ctx.results["unitarity_defect"] = jnum(rep.unitarity_defect);
  ctx.results["commutator_norm"] = jnum(rep.commutator_norm);
  ctx.results["equivalence_agrees"] = rep.equivalence_agrees;
  ctx.results["v_condition"] = jnum(bundle.v_condition);

  check_leq(ctx.verdicts, "renormed_parseval", rep.parseval_defect,
            sc.tolerance);
  check_leq(ctx.verdicts, "orbit_is_renormed_corrections", rep.auxiliary_gap,
            sc.tolerance);
  check_true(ctx.verdicts, "unitarity_equivalence", rep.equivalence_agrees,
             "unitarity defect and commutator norm share zero/nonzero status");
}

void run_mainsingular(RunContext& ctx) {
  const Scenario& sc = ctx.sc;
  const MeasureSpec& m = need_measure(sc);
  require_probability(m, sc);
  SpacePtr s = space_of(m);
  if (static_cast<Eigen::Index>(sc.g0.size()) != s->dim())
    throw Error(ErrorCode::dimension_mismatch,
                "g0 has " + num(static_cast<long long>(sc.g0.size())) +
                    " entries but the realization has dimension " +
                    num(static_cast<long long>(s->dim())));
  Eigen::VectorXcd coords(s->dim());
  for (Eigen::Index i = 0; i < s->dim(); ++i)
    coords[i] = sc.g0[static_cast<std::size_t>(i)];
  const Vector g0 = make_vector(std::move(coords), s);

  const OrbitOperator t = build_mainsingular(m, g0);
  const long long h = sc.horizon;
  const FrameSequence orbit = FrameSequence::fromOrbit(t.map, t.g0);
  ctx.write_csv("orbit", sequence_csv(h, s->dim(),
                                      [&](long long n) -> const Eigen::VectorXcd& {
                                        return orbit.at(n);
                                      }));

  const MultiplicationReport mult = verify_S1_eq_g0(t, h);
  const ProductFormReport prod =
      verify_prop_exist(m, g0, h, sc.trials, sc.seed);

  ctx.results["s_one_defect"] = jnum(mult.s_one_defect);
  ctx.results["s_one_pairing"] = {jnum(mult.s_one_pairing.real()),
                                  jnum(mult.s_one_pairing.imag())};
  ctx.results["g0_nonnegative"] = mult.g0_nonnegative;
  ctx.results["multiplication_defect"] =
      mult.g0_nonnegative ? jnum(mult.multiplication_defect) : json();
  ctx.results["construction_gap"] = jnum(prod.construction_gap);
  ctx.results["reconstruction_residual"] = jnum(prod.reconstruction_residual);

  check_leq(ctx.verdicts, "s_one_matches_g0", mult.s_one_defect, sc.tolerance);
  check_leq(ctx.verdicts, "s_one_pairing",
            std::abs(mult.s_one_pairing - cxd(1.0, 0.0)), sc.tolerance);
  check_leq(ctx.verdicts, "product_form_gap", prod.construction_gap,
            sc.tolerance);
  check_leq(ctx.verdicts, "reconstruction_residual",
            prod.reconstruction_residual, sc.tolerance);
  if (mult.g0_nonnegative)
    check_leq(ctx.verdicts, "multiplication_defect", mult.multiplication_defect,
              sc.tolerance);
}

void run_weights(RunContext& ctx) {
  const Scenario& sc = ctx.sc;
  const Weight& w = need_weight(sc);

  std::string csv = "level,constant,argmax_a,argmax_b\n";
  for (int level = 1; level <= sc.depth; ++level) {
    const A2Report r = weak_a2_constant(w, level);
    csv += num(static_cast<long long>(level)) + "," + num(r.weak_a2.value) +
           "," + num(r.argmax_a) + "," + num(r.argmax_b) + "\n";
  }
  ctx.write_csv("a2", csv);

  const A2Report weak = weak_a2_constant(w, sc.depth);
  const A2Report classical = a2_constant(w, sc.depth);
  json weak_json = a2_bound_json(weak.weak_a2);
  weak_json["trend"] = trend_name(weak.trend);
  weak_json["argmax"] = {weak.argmax_a, weak.argmax_b};
  json classical_json = a2_bound_json(classical.classical_a2);
  classical_json["trend"] = trend_name(classical.trend);
  ctx.results["weak_a2"] = weak_json;
  ctx.results["classical_a2"] = classical_json;

  const std::vector<double>& grid =
      sc.eps_grid.empty() ? eps_default_grid() : sc.eps_grid;
  json panel = json::array();
  for (double eps : grid) {
    const A2Report r = eps_strengthened_check(w, eps, sc.depth);
    json entry = a2_bound_json(r.eps_weak);
    entry["eps"] = eps;
    entry["trend"] = trend_name(r.trend);
    panel.push_back(entry);
  }
  ctx.results["eps_panel"] = panel;
  ctx.results["depth"] = sc.depth;

  if (!sc.expect_trend.empty())
    check_true(ctx.verdicts, "weak_a2_trend",
               sc.expect_trend == trend_name(weak.trend),
               std::string("observed ") + trend_name(weak.trend) +
                   ", expected " + sc.expect_trend);
}

void run_rm_sweep(RunContext& ctx) {
  const Scenario& sc = ctx.sc;
  const Weight& w = need_weight(sc);
  std::vector<long long> ms = sc.band_limits;
  if (ms.empty()) ms = {4, 8, 16, 32, 64, 128};

  Weight grid = [&] {
    if (w.form() == Weight::Form::grid) {
      if (sc.grid_cells != 0 && sc.grid_cells != w.cells())
        throw Error(ErrorCode::bad_argument,
                    "grid_cells " + num(static_cast<long long>(sc.grid_cells)) +
                        " conflicts with the explicit " +
                        num(static_cast<long long>(w.cells())) + "-cell grid");
      return w;
    }
    return w.realized(sc.grid_cells != 0 ? sc.grid_cells : 4096);
  }();

  const RmSweep sweep = rm_norm_sweep(grid, ms);
  std::string csv = "M,norm\n";
  for (std::size_t i = 0; i < sweep.ms.size(); ++i)
    csv += num(sweep.ms[i]) + "," + num(sweep.norms[i]) + "\n";
  ctx.write_csv("rm", csv);

  ctx.results["cells"] = grid.cells();
  ctx.results["last_octave_slope"] = jnum(sweep.last_octave_slope);
  ctx.results["bounded"] = sweep.bounded;

  if (!sc.expect_trend.empty()) {
    const bool expect_bounded = sc.expect_trend == "bounded";
    ctx.verdicts.push_back({"norm_trend", sweep.bounded == expect_bounded,
                            sweep.last_octave_slope, kBoundedSlope,
                            std::string("observed ") +
                                (sweep.bounded ? "bounded" : "growing") +
                                ", expected " + sc.expect_trend});
  }
}

void run_diagnose(RunContext& ctx) {
  const Scenario& sc = ctx.sc;
  if (sc.weight && sc.measure)
    throw Error(ErrorCode::bad_argument,
                "kind diagnose takes a weight or a measure, not both");
  if (sc.weight)
    ctx.results["panel"] =
        json::parse(diagnose_weight_text(*sc.weight, sc.depth, sc.max_m));
  else
    ctx.results["panel"] =
        json::parse(diagnose_measure_text(need_measure(sc), sc.horizon));
}

void run_solve(RunContext& ctx) {
  const Scenario& sc = ctx.sc;
  std::mt19937_64 g(sc.seed);
  const Eigen::Index rows = sc.rows;
  const Eigen::Index cols = sc.cols;
  const Eigen::Index k = std::min(rows, cols);
  const long long max_sweeps = std::clamp<long long>(
      std::llround(10.0 * static_cast<double>(cols) * sc.condition), 64,
      2000000);

  std::string csv = "trial,sweeps,row_updates,residual,distance_to_direct\n";
  double worst_residual = 0.0;
  double worst_distance = 0.0;
  bool all_converged = true;
  for (int t = 0; t < sc.trials; ++t) {
    const Eigen::MatrixXcd u1 = haar_unitary(rows, g).leftCols(k);
    const Eigen::MatrixXcd u2 = haar_unitary(cols, g).leftCols(k);
    const Eigen::VectorXd sv = log_spaced_singulars(k, sc.condition);
    const Eigen::MatrixXcd a = u1 * sv.asDiagonal() * u2.adjoint();
    Eigen::VectorXcd x = random_complex_vector(cols, g);
    x /= x.norm();
    const Eigen::VectorXcd b = a * x;

    const RowActionResult r = row_action_solve(a, b, max_sweeps, sc.tolerance);
    const Eigen::VectorXcd direct =
        a.bdcSvd(Eigen::ComputeThinU | Eigen::ComputeThinV).solve(b);
    const double dist = (r.x - direct).norm();

    csv += num(static_cast<long long>(t)) + "," + num(r.sweeps) + "," +
           num(r.row_updates) + "," + num(r.residual) + "," + num(dist) + "\n";
    worst_residual = std::max(worst_residual, r.residual);
    worst_distance = std::max(worst_distance, dist);
    all_converged = all_converged && r.converged;
  }
  ctx.write_csv("solve", csv);

  ctx.results["max_sweeps"] = max_sweeps;
  ctx.results["worst_residual"] = jnum(worst_residual);
  ctx.results["worst_distance_to_direct"] = jnum(worst_distance);
  ctx.verdicts.push_back({"converged", all_converged, worst_residual,
                          sc.tolerance, ""});
}

json verdicts_json(const std::vector<Verdict>& vs) {
  json arr = json::array();
  for (const Verdict& v : vs) {
    json j;
    j["check"] = v.check;
    j["pass"] = v.pass;
    j["value"] = jnum(v.value);
    if (std::isfinite(v.bound)) j["bound"] = v.bound;
    if (!v.note.empty()) j["note"] = v.note;
    arr.push_back(j);
  }
  return arr;
}

} // namespace

const char* scenario_kind_name(ScenarioKind k) {
  for (const KindEntry& e : kKinds)
    if (e.kind == k) return e.name;
  return "unknown";
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::io_failure, "cannot read " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

Scenario parse_scenario(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::parse_failure, std::string("scenario: ") + e.what());
  }
  if (!j.is_object())
    throw Error(ErrorCode::parse_failure,
                "scenario: top level must be a JSON object");

  static const std::array<const char*, 18> allowed = {
      "name",     "kind",        "seed",      "horizon",      "depth",
      "trials",   "tolerance",   "measure",   "weight",       "grid_cells",
      "band_limits", "eps_grid", "expect_trend", "v",         "g0",
      "rows",     "cols",        "condition",
  };
  for (const auto& [key, value] : j.items()) {
    (void)value;
    if (std::find_if(allowed.begin(), allowed.end(), [&](const char* a) {
          return key == a;
        }) == allowed.end() &&
        key != "max_m")
      fail_field(key, "unknown field");
  }

  Scenario sc;
  if (!j.contains("name") || !j["name"].is_string())
    fail_field("name", "required string");
  sc.name = j["name"].get<std::string>();
  if (sc.name.empty() || sc.name.size() > 64)
    fail_field("name", "must be 1..64 characters");
  for (char c : sc.name)
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_' && c != '-' &&
        c != '.')
      fail_field("name", "allowed characters: letters, digits, '_', '-', '.'");

  if (!j.contains("kind") || !j["kind"].is_string())
    fail_field("kind", "required string");
  const std::string kind_str = j["kind"].get<std::string>();
  bool kind_found = false;
  for (const KindEntry& e : kKinds)
    if (kind_str == e.name) {
      sc.kind = e.kind;
      kind_found = true;
    }
  if (!kind_found) {
    std::string names;
    for (const KindEntry& e : kKinds)
      names += std::string(names.empty() ? "" : ", ") + e.name;
    fail_field("kind", "\"" + kind_str + "\" is not one of: " + names);
  }

  if (j.contains("seed")) {
    if (!j["seed"].is_number_integer() && !j["seed"].is_number_unsigned())
      fail_field("seed", "expected a non-negative integer");
    if (j["seed"].is_number_integer() && j["seed"].get<long long>() < 0)
      fail_field("seed", "must be non-negative");
    sc.seed = j["seed"].get<std::uint64_t>();
  }
  if (j.contains("horizon"))
    sc.horizon = get_int(j["horizon"], "horizon", 1, 1 << 20);
  if (j.contains("depth"))
    sc.depth = static_cast<int>(get_int(j["depth"], "depth", 1, 40));
  if (j.contains("trials"))
    sc.trials = static_cast<int>(get_int(j["trials"], "trials", 1, 64));
  if (j.contains("tolerance"))
    sc.tolerance = get_double(j["tolerance"], "tolerance", 1e-15, 1.0);
  if (j.contains("grid_cells"))
    sc.grid_cells =
        static_cast<int>(get_int(j["grid_cells"], "grid_cells", 0, 65536));
  if (j.contains("max_m"))
    sc.max_m = get_int(j["max_m"], "max_m", 1, 4096);
  if (j.contains("rows"))
    sc.rows = static_cast<int>(get_int(j["rows"], "rows", 1, 64));
  if (j.contains("cols"))
    sc.cols = static_cast<int>(get_int(j["cols"], "cols", 1, 64));
  if (j.contains("condition"))
    sc.condition = get_double(j["condition"], "condition", 1.0, 1e6);

  if (j.contains("band_limits")) {
    if (!j["band_limits"].is_array() || j["band_limits"].empty() ||
        j["band_limits"].size() > 64)
      fail_field("band_limits", "expected a non-empty array (at most 64)");
    for (const auto& e : j["band_limits"])
      sc.band_limits.push_back(get_int(e, "band_limits", 1, 4096));
  }
  if (j.contains("eps_grid")) {
    if (!j["eps_grid"].is_array() || j["eps_grid"].empty() ||
        j["eps_grid"].size() > 16)
      fail_field("eps_grid", "expected a non-empty array (at most 16)");
    for (const auto& e : j["eps_grid"])
      sc.eps_grid.push_back(get_double(e, "eps_grid", 1e-6, 8.0));
  }
  if (j.contains("expect_trend")) {
    if (!j["expect_trend"].is_string())
      fail_field("expect_trend", "expected a string");
    sc.expect_trend = j["expect_trend"].get<std::string>();
  }

  if (j.contains("measure")) sc.measure = parse_scenario_measure(j["measure"]);
  if (j.contains("weight")) sc.weight = parse_scenario_weight(j["weight"]);
  if (j.contains("v")) parse_operator(j["v"], sc);
  if (j.contains("g0")) {
    if (!j["g0"].is_array() || j["g0"].empty())
      fail_field("g0", "expected a non-empty array");
    for (const auto& e : j["g0"]) sc.g0.push_back(get_complex(e, "g0"));
  }

  const bool needs_measure =
      sc.kind == ScenarioKind::aux || sc.kind == ScenarioKind::orbit ||
      sc.kind == ScenarioKind::genbackward ||
      sc.kind == ScenarioKind::kaczmarzclass ||
      sc.kind == ScenarioKind::mainsingular;
  if (needs_measure && !sc.measure)
    fail_field("measure", std::string("required by kind ") + kind_str);
  const bool needs_weight =
      sc.kind == ScenarioKind::weights || sc.kind == ScenarioKind::rm_sweep;
  if (needs_weight && !sc.weight)
    fail_field("weight", std::string("required by kind ") + kind_str);
  if (sc.kind == ScenarioKind::diagnose) {
    if (static_cast<int>(sc.measure.has_value()) +
            static_cast<int>(sc.weight.has_value()) !=
        1)
      fail_field("weight", "kind diagnose takes exactly one of weight, measure");
  }
  if (sc.kind == ScenarioKind::mainsingular && sc.g0.empty())
    fail_field("g0", "required by kind mainsingular");
  check_expect_trend(sc);
  return sc;
}

RunResult run_scenario(const Scenario& sc, const std::string& out_dir) {
  if (sc.name.empty())
    throw Error(ErrorCode::bad_argument, "scenario has no name");
  if (out_dir.empty())
    throw Error(ErrorCode::bad_argument, "output directory is empty");
  std::error_code ec;
  stdfs::create_directories(out_dir, ec);
  if (ec)
    throw Error(ErrorCode::io_failure,
                "cannot create " + out_dir + ": " + ec.message());

  const auto t0 = std::chrono::steady_clock::now();
  RunContext ctx{sc, stdfs::path(out_dir), {}, json::object(), json::object(),
                 {}, {}};
  switch (sc.kind) {
    case ScenarioKind::aux: run_aux(ctx); break;
    case ScenarioKind::orbit: run_orbit(ctx); break;
    case ScenarioKind::genbackward: run_genbackward(ctx); break;
    case ScenarioKind::kaczmarzclass: run_kaczmarzclass(ctx); break;
    case ScenarioKind::mainsingular: run_mainsingular(ctx); break;
    case ScenarioKind::weights: run_weights(ctx); break;
    case ScenarioKind::rm_sweep: run_rm_sweep(ctx); break;
    case ScenarioKind::diagnose: run_diagnose(ctx); break;
    case ScenarioKind::solve: run_solve(ctx); break;
  }

  bool pass = true;
  for (const Verdict& v : ctx.verdicts) pass = pass && v.pass;

  json report;
  report["name"] = sc.name;
  report["kind"] = scenario_kind_name(sc.kind);
  report["seed"] = sc.seed;
  report["versions"] = {{"library", kVersion}, {"report_format", kReportFormat}};
  json params;
  params["horizon"] = sc.horizon;
  params["depth"] = sc.depth;
  params["trials"] = sc.trials;
  params["tolerance"] = sc.tolerance;
  if (sc.grid_cells != 0) params["grid_cells"] = sc.grid_cells;
  if (!sc.band_limits.empty()) params["band_limits"] = sc.band_limits;
  if (!sc.eps_grid.empty()) params["eps_grid"] = sc.eps_grid;
  if (!sc.expect_trend.empty()) params["expect_trend"] = sc.expect_trend;
  if (sc.kind == ScenarioKind::genbackward ||
      sc.kind == ScenarioKind::kaczmarzclass) {
    params["v"] = sc.v_kind;
    if (sc.v_kind == "random") params["v_condition"] = sc.v_condition;
  }
  if (sc.kind == ScenarioKind::solve) {
    params["rows"] = sc.rows;
    params["cols"] = sc.cols;
    params["condition"] = sc.condition;
  }
  if (sc.kind == ScenarioKind::diagnose) params["max_m"] = sc.max_m;
  report["parameters"] = params;
  if (sc.measure) report["measure"] = json::parse(measure_to_text(*sc.measure));
  if (sc.weight) report["weight"] = sc.weight->describe();
  report["results"] = ctx.results;
  report["verdicts"] = verdicts_json(ctx.verdicts);
  report["verdicts_pass"] = pass;
  report["artifacts"] = ctx.csv_names;
  const auto t1 = std::chrono::steady_clock::now();
  report["wall_clock_ms"] =
      std::chrono::duration<double, std::milli>(t1 - t0).count();

  RunResult out;
  out.report_json = report.dump(2) + "\n";
  const stdfs::path rp = ctx.dir / (sc.name + "_report.json");
  std::ofstream rf(rp, std::ios::binary);
  if (!rf) throw Error(ErrorCode::io_failure, "cannot open " + rp.string());
  rf << out.report_json;
  rf.flush();
  if (!rf) throw Error(ErrorCode::io_failure, "write failed for " + rp.string());

  out.report_path = rp.string();
  out.artifacts = ctx.full_paths;
  out.artifacts.push_back(rp.string());
  out.verdicts_pass = pass;
  out.exit_code = pass ? 0 : 2;
  return out;
}

// ---------------------------------------------------------------------------
// Diagnose panels

const char* weight_class_name(WeightClass c) {
  switch (c) {
    case WeightClass::frame: return "frame";
    case WeightClass::bessel_only: return "bessel_only";
    case WeightClass::lower_semi_frame_only: return "lower_semi_frame_only";
    case WeightClass::neither: return "neither";
  }
  return "neither";
}

WeightClass classify_weight(const Weight& w) {
  switch (w.form()) {
    case Weight::Form::grid:
    case Weight::Form::half_indicator:
      return WeightClass::frame;
    case Weight::Form::power: {
      const double p = w.exponent();
      if (p == 0.0) return WeightClass::frame;
      return p > 0.0 ? WeightClass::bessel_only
                     : WeightClass::lower_semi_frame_only;
    }
  }
  return WeightClass::neither;
}

std::string diagnose_weight_text(const Weight& w, int depth, long long max_m) {
  if (max_m < 1 || max_m > 4096)
    throw Error(ErrorCode::bad_argument, "max_m must be in [1, 4096]");
  json doc;
  doc["weight"] = w.describe();
  const WeightClass cls = classify_weight(w);
  doc["class"] = weight_class_name(cls);

  // Oracle essential bounds on the support, with refinement evidence for the
  // analytic forms (their realizations expose an unbounded or vanishing
  // endpoint as movement of the grid extremes under K-doubling).
  json oracle;
  std::vector<std::string> reasons;
  switch (w.form()) {
    case Weight::Form::grid: {
      const FrameBoundOracle fb = exp_frame_bound_oracle(w);
      oracle["lower"] = fb.lower;
      oracle["upper"] = fb.upper;
      oracle["lower_vanishes"] = false;
      oracle["upper_unbounded"] = false;
      reasons.push_back("grid weights are bounded between " + num(fb.lower) +
                        " and " + num(fb.upper) + " on their support");
      break;
    }
    case Weight::Form::half_indicator: {
      oracle["lower"] = 1.0;
      oracle["upper"] = 1.0;
      oracle["lower_vanishes"] = false;
      oracle["upper_unbounded"] = false;
      reasons.push_back("the weight equals 1 on its support");
      break;
    }
    case Weight::Form::power: {
      const double p = w.exponent();
      oracle["lower"] = p > 0.0 ? 0.0 : 1.0;
      oracle["upper"] = p < 0.0 ? json() : json(1.0);
      oracle["lower_vanishes"] = p > 0.0;
      oracle["upper_unbounded"] = p < 0.0;
      if (p == 0.0)
        reasons.push_back("constant weight: both bounds are 1");
      else if (p > 0.0)
        reasons.push_back("x^" + num(p) +
                          " vanishes at 0: no uniform lower bound");
      else
        reasons.push_back("x^" + num(p) +
                          " is unbounded near 0: no upper (Bessel) bound");
      if (p > -1.0) {
        const int k1 = 1024;
        const int k2 = 2048;
        const FrameBoundOracle o1 = exp_frame_bound_oracle(w.realized(k1));
        const FrameBoundOracle o2 = exp_frame_bound_oracle(w.realized(k2));
        json ev;
        ev["grid_cells"] = {k1, k2};
        ev["lower"] = {o1.lower, o2.lower};
        ev["upper"] = {o1.upper, o2.upper};
        oracle["refinement_evidence"] = ev;
      } else {
        oracle["refinement_evidence"] = {
            {"note", "no grid realization: the weight is not integrable near 0"}};
      }
      break;
    }
  }
  doc["oracle"] = oracle;

  switch (cls) {
    case WeightClass::frame:
      reasons.push_back("both bounds finite and positive: the exponentials "
                        "form a frame over the support");
      break;
    case WeightClass::bessel_only:
      reasons.push_back("upper bound finite, lower bound 0: Bessel only");
      break;
    case WeightClass::lower_semi_frame_only:
      reasons.push_back("lower bound positive, upper bound infinite: "
                        "lower semi-frame only");
      break;
    case WeightClass::neither:
      break;
  }
  doc["reasons"] = reasons;

  // Measured bounds on a realization whose cell count keeps the probe
  // blocks resolvable.
  long long k = 1024;
  while (k < 8 * max_m) k *= 2;
  json measured;
  bool measurable = true;
  std::string skip;
  Weight probe = w;
  if (w.form() == Weight::Form::grid) {
    if (w.cells() % 32 != 0) {
      measurable = false;
      skip = "grid has " + num(static_cast<long long>(w.cells())) +
             " cells, not a multiple of 32";
    } else {
      k = w.cells();
    }
  } else if (w.form() == Weight::Form::power && w.exponent() <= -1.0) {
    measurable = false;
    skip = "no grid realization: the weight is not integrable near 0";
  } else {
    probe = w.realized(static_cast<int>(k));
  }
  if (measurable) {
    const MeasuredFrameBounds mb = exp_frame_bound_measured(probe, max_m);
    measured["lower"] = jnum(mb.lower);
    measured["upper"] = jnum(mb.upper);
    measured["band_limit"] = mb.m;
    measured["probe_cells"] = mb.probe_cells;
    measured["grid_cells"] = k;
  } else {
    measured["skipped"] = skip;
  }
  doc["measured"] = measured;

  const A2Report weak = weak_a2_constant(w, depth);
  json weak_json = a2_bound_json(weak.weak_a2);
  weak_json["trend"] = trend_name(weak.trend);
  weak_json["argmax"] = {weak.argmax_a, weak.argmax_b};
  doc["weak_a2"] = weak_json;
  const A2Report classical = a2_constant(w, depth);
  json classical_json = a2_bound_json(classical.classical_a2);
  classical_json["trend"] = trend_name(classical.trend);
  doc["classical_a2"] = classical_json;

  json panel = json::array();
  for (double eps : eps_default_grid()) {
    const A2Report r = eps_strengthened_check(w, eps, depth);
    json entry = a2_bound_json(r.eps_weak);
    entry["eps"] = eps;
    entry["trend"] = trend_name(r.trend);
    panel.push_back(entry);
  }
  doc["eps_panel"] = panel;

  doc["dextrodual_convergence_expected"] =
      weak.trend == RefinementTrend::stable;
  doc["stabilized"] = {{"depth", depth}, {"band_limit", max_m}};
  return doc.dump(2) + "\n";
}

namespace {

MeasureSpec scale_measure(const MeasureSpec& m, double factor) {
  switch (m.kind()) {
    case MeasureSpec::Kind::atomic: {
      auto atoms = m.atoms();
      for (auto& [x, p] : atoms) p *= factor;
      return MeasureSpec::atomic(std::move(atoms));
    }
    case MeasureSpec::Kind::grid: {
      auto weight = m.weight();
      for (double& v : weight) v *= factor;
      return MeasureSpec::grid(std::move(weight));
    }
    case MeasureSpec::Kind::mixture:
      return MeasureSpec::mixture(scale_measure(m.component(0), factor),
                                  scale_measure(m.component(1), factor));
  }
  throw Error(ErrorCode::bad_measure, "unknown measure kind");
}

bool all_atomic(const MeasureSpec& m) {
  switch (m.kind()) {
    case MeasureSpec::Kind::atomic: return true;
    case MeasureSpec::Kind::grid: return false;
    case MeasureSpec::Kind::mixture:
      return all_atomic(m.component(0)) && all_atomic(m.component(1));
  }
  return false;
}

const char* measure_kind_name(MeasureSpec::Kind k) {
  switch (k) {
    case MeasureSpec::Kind::atomic: return "atomic";
    case MeasureSpec::Kind::grid: return "grid";
    case MeasureSpec::Kind::mixture: return "mixture";
  }
  return "unknown";
}

} // namespace

std::string diagnose_measure_text(const MeasureSpec& m, long long horizon) {
  const double mass = total_mass(m);
  const bool normalized = !is_probability(m);
  const MeasureSpec use = normalized ? scale_measure(m, 1.0 / mass) : m;
  SpacePtr s = space_of(use);
  const Eigen::Index dim = s->dim();
  if (dim > 1024)
    throw Error(ErrorCode::bad_argument,
                "diagnose caps the realization at dimension 1024 (got " +
                    num(static_cast<long long>(dim)) + ")");
  const long long cap = std::max(horizon, 2 * static_cast<long long>(dim));

  json doc;
  doc["measure"] = {{"kind", measure_kind_name(m.kind())},
                    {"dim", static_cast<long long>(dim)},
                    {"total_mass", mass},
                    {"normalized", normalized}};

  const auto e = exponential_stream(use, s);
  const FrameSequence fs = FrameSequence::fromStream(e, s);
  const long long init = std::max<long long>(dim, 8);
  const long long hstar = stabilized_horizon(fs, init, cap);
  const FrameReport rep = frame_bounds(fs, hstar);
  doc["bounds"] = frame_report_json(rep);

  if (all_atomic(use)) {
    const EffectivenessReport eff =
        effectiveness_test(e, s, 5, std::max<long long>(hstar, 64), 1e-6);
    doc["effectiveness"] = effectiveness_json(eff);
  } else {
    doc["effectiveness"] = {
        {"skipped", "the exponentials are not unit vectors over this "
                    "realization"}};
  }
  doc["stabilized"] = {{"horizon", hstar}, {"cap", cap}};
  return doc.dump(2) + "\n";
}

} // namespace framelab
