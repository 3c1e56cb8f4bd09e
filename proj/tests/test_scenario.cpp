#include "doctest.h"

#include "framelab/scenario.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "framelab/weights.hpp"
#include "json.hpp"

using namespace framelab;
namespace stdfs = std::filesystem;

namespace {

bool fails_naming(ErrorCode code, const std::string& needle,
                  const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code() == code &&
           std::string(e.what()).find(needle) != std::string::npos;
  }
  return false;
}

stdfs::path fresh_dir(const std::string& tag) {
  const stdfs::path p =
      stdfs::temp_directory_path() / ("framelab_scenario_" + tag);
  stdfs::remove_all(p);
  stdfs::create_directories(p);
  return p;
}

std::string slurp(const stdfs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::vector<std::vector<double>> csv_rows(const std::string& text) {
  std::vector<std::vector<double>> rows;
  std::istringstream lines(text);
  std::string line;
  std::getline(lines, line); // header
  while (std::getline(lines, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::istringstream cells(line);
    std::string cell;
    while (std::getline(cells, cell, ',')) row.push_back(std::stod(cell));
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string two_atom_json(const std::string& extra) {
  return "{\"name\":\"t\",\"kind\":\"aux\",\"measure\":{\"kind\":\"atomic\","
         "\"atoms\":[[0.0,0.5],[0.5,0.5]]}" +
         extra + "}";
}

int run_command(const std::string& cmd) {
  const int status = std::system(cmd.c_str());
  REQUIRE(status != -1);
  return WEXITSTATUS(status);
}

} // namespace

TEST_CASE("scenario parsing validates fields and names the offender") {
  // A full document lands in the struct field for field.
  const Scenario sc = parse_scenario(
      "{\"name\":\"full\",\"kind\":\"rm_sweep\",\"seed\":7,"
      "\"weight\":{\"preset\":\"inv_sqrt_x\"},\"grid_cells\":512,"
      "\"band_limits\":[4,8,16],\"expect_trend\":\"bounded\","
      "\"tolerance\":1e-9,\"horizon\":32,\"depth\":9,\"trials\":2}");
  CHECK(sc.name == "full");
  CHECK(sc.kind == ScenarioKind::rm_sweep);
  CHECK(sc.seed == 7);
  CHECK(sc.weight.has_value());
  CHECK(sc.weight->form() == Weight::Form::power);
  CHECK(sc.grid_cells == 512);
  CHECK(sc.band_limits == std::vector<long long>{4, 8, 16});
  CHECK(sc.expect_trend == "bounded");
  CHECK(sc.tolerance == 1e-9);
  CHECK(sc.depth == 9);
  CHECK(sc.trials == 2);

  const Scenario ms = parse_scenario(
      "{\"name\":\"m\",\"kind\":\"mainsingular\",\"measure\":{\"kind\":"
      "\"atomic\",\"atoms\":[[0.0,0.5],[0.5,0.5]]},\"g0\":[0.5,[1.5,-0.25]]}");
  REQUIRE(ms.g0.size() == 2);
  CHECK(ms.g0[0] == cxd(0.5, 0.0));
  CHECK(ms.g0[1] == cxd(1.5, -0.25));
  CHECK(ms.measure.has_value());

  // Cantor shorthand expands to the atomic iterate.
  const Scenario ca = parse_scenario(
      "{\"name\":\"c\",\"kind\":\"aux\",\"measure\":{\"kind\":\"cantor\","
      "\"level\":2}}");
  REQUIRE(ca.measure.has_value());
  CHECK(ca.measure->atoms().size() == 4);

  CHECK(fails_naming(ErrorCode::parse_failure, "scenario",
                     [] { parse_scenario(""); }));
  CHECK(fails_naming(ErrorCode::parse_failure, "name",
                     [] { parse_scenario("{\"kind\":\"aux\"}"); }));
  CHECK(fails_naming(ErrorCode::parse_failure, "kind",
                     [] { parse_scenario("{\"name\":\"x\"}"); }));
  CHECK(fails_naming(ErrorCode::parse_failure, "rm_sweeep", [] {
    parse_scenario("{\"name\":\"x\",\"kind\":\"rm_sweeep\"}");
  }));
  CHECK(fails_naming(ErrorCode::parse_failure, "horizons", [] {
    parse_scenario(two_atom_json(",\"horizons\":4"));
  }));
  CHECK(fails_naming(ErrorCode::parse_failure, "horizon", [] {
    parse_scenario(two_atom_json(",\"horizon\":0"));
  }));
  CHECK(fails_naming(ErrorCode::parse_failure, "tolerance", [] {
    parse_scenario(two_atom_json(",\"tolerance\":0"));
  }));
  CHECK(fails_naming(ErrorCode::parse_failure, "depth", [] {
    parse_scenario(two_atom_json(",\"depth\":41"));
  }));
  CHECK(fails_naming(ErrorCode::parse_failure, "seed", [] {
    parse_scenario(two_atom_json(",\"seed\":-3"));
  }));
  CHECK(fails_naming(ErrorCode::parse_failure, "name", [] {
    parse_scenario("{\"name\":\"a/b\",\"kind\":\"aux\"}");
  }));
  // Kind requirements.
  CHECK(fails_naming(ErrorCode::parse_failure, "measure", [] {
    parse_scenario("{\"name\":\"x\",\"kind\":\"aux\"}");
  }));
  CHECK(fails_naming(ErrorCode::parse_failure, "weight", [] {
    parse_scenario("{\"name\":\"x\",\"kind\":\"rm_sweep\"}");
  }));
  CHECK(fails_naming(ErrorCode::parse_failure, "g0", [] {
    parse_scenario("{\"name\":\"x\",\"kind\":\"mainsingular\",\"measure\":"
                   "{\"kind\":\"atomic\",\"atoms\":[[0.0,1.0]]}}");
  }));
  // Weight forms are mutually exclusive; operator types are a closed set.
  CHECK(fails_naming(ErrorCode::parse_failure, "weight", [] {
    parse_scenario("{\"name\":\"x\",\"kind\":\"weights\",\"weight\":"
                   "{\"preset\":\"constant\",\"power\":1}}");
  }));
  CHECK(fails_naming(ErrorCode::parse_failure, "v.type", [] {
    parse_scenario(
        "{\"name\":\"x\",\"kind\":\"genbackward\",\"measure\":{\"kind\":"
        "\"atomic\",\"atoms\":[[0.0,1.0]]},\"v\":{\"type\":\"rotation\"}}");
  }));
  CHECK(fails_naming(ErrorCode::parse_failure, "expect_trend", [] {
    parse_scenario(two_atom_json(",\"expect_trend\":\"bounded\""));
  }));
  CHECK(fails_naming(ErrorCode::parse_failure, "weight", [] {
    parse_scenario("{\"name\":\"x\",\"kind\":\"diagnose\"}");
  }));
}

TEST_CASE("aux scenario writes the hand-checked correction sequence") {
  const stdfs::path dir = fresh_dir("aux");
  const Scenario sc = parse_scenario(
      "{\"name\":\"two_atom\",\"kind\":\"aux\",\"measure\":{\"kind\":"
      "\"atomic\",\"atoms\":[[0.0,0.5],[0.5,0.5]]},\"horizon\":8,"
      "\"trials\":2,\"tolerance\":1e-10}");
  const RunResult res = run_scenario(sc, dir.string());
  CHECK(res.exit_code == 0);
  CHECK(res.verdicts_pass);

  const std::string aux_text = slurp(dir / "two_atom_aux.csv");
  CHECK(aux_text.rfind("n,re_0,im_0,re_1,im_1\n", 0) == 0);
  const auto rows = csv_rows(aux_text);
  REQUIRE(rows.size() == 8);
  // g_0 = (1, 1), g_1 = (1, -1), g_2 = 0 over the two-point realization.
  CHECK(rows[0][1] == 1.0);
  CHECK(rows[0][3] == 1.0);
  CHECK(rows[1][1] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(rows[1][3] == doctest::Approx(-1.0).epsilon(1e-12));
  for (std::size_t c = 1; c < 5; ++c) {
    CHECK(std::abs(rows[1][c == 1 ? 2 : 4]) < 1e-12);
    CHECK(std::abs(rows[2][c]) < 1e-12);
  }

  // The correction sequence of an effective system is Parseval at every
  // truncation that spans.
  for (const auto& row : csv_rows(slurp(dir / "two_atom_bounds.csv"))) {
    CHECK(row[1] == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(row[2] == doctest::Approx(1.0).epsilon(1e-9));
  }

  const nlohmann::json report = nlohmann::json::parse(res.report_json);
  CHECK(report["name"] == "two_atom");
  CHECK(report["versions"]["report_format"] == 1);
  CHECK(report["results"]["effectiveness"]["verdict"] ==
        "effective_within_tolerance");
  CHECK(report["artifacts"].size() == 3);
}

TEST_CASE("reruns are byte-identical and reports differ only in wall clock") {
  const stdfs::path d1 = fresh_dir("det1");
  const stdfs::path d2 = fresh_dir("det2");
  const Scenario sc = parse_scenario(
      "{\"name\":\"s\",\"kind\":\"solve\",\"rows\":8,\"cols\":5,"
      "\"condition\":15,\"trials\":3,\"tolerance\":1e-9,\"seed\":11}");
  const RunResult r1 = run_scenario(sc, d1.string());
  const RunResult r2 = run_scenario(sc, d2.string());
  CHECK(r1.exit_code == 0);
  CHECK(slurp(d1 / "s_solve.csv") == slurp(d2 / "s_solve.csv"));

  nlohmann::json j1 = nlohmann::json::parse(r1.report_json);
  nlohmann::json j2 = nlohmann::json::parse(r2.report_json);
  CHECK(j1["seed"] == 11);
  j1.erase("wall_clock_ms");
  j2.erase("wall_clock_ms");
  CHECK(j1.dump() == j2.dump());

  // A different seed reaches different systems.
  Scenario other = sc;
  other.seed = 12;
  const stdfs::path d3 = fresh_dir("det3");
  run_scenario(other, d3.string());
  CHECK(slurp(d1 / "s_solve.csv") != slurp(d3 / "s_solve.csv"));
}

TEST_CASE("rm sweep verdicts mirror the trend expectation") {
  const stdfs::path dir = fresh_dir("rm");
  Scenario sc = parse_scenario(
      "{\"name\":\"flat\",\"kind\":\"rm_sweep\",\"weight\":{\"preset\":"
      "\"constant\"},\"grid_cells\":256,\"band_limits\":[4,8,16,32],"
      "\"expect_trend\":\"bounded\"}");
  const RunResult ok = run_scenario(sc, dir.string());
  CHECK(ok.exit_code == 0);
  const auto rows = csv_rows(slurp(dir / "flat_rm.csv"));
  REQUIRE(rows.size() == 4);
  for (const auto& row : rows)
    CHECK(row[1] == doctest::Approx(1.0).epsilon(1e-9));

  sc.expect_trend = "growing";
  const RunResult bad = run_scenario(sc, fresh_dir("rm2").string());
  CHECK(bad.exit_code == 2);
  CHECK_FALSE(bad.verdicts_pass);

  // Conflicting realization request is an input error, not a verdict.
  CHECK(fails_naming(ErrorCode::bad_argument, "grid_cells", [] {
    Scenario g = parse_scenario(
        "{\"name\":\"g\",\"kind\":\"rm_sweep\",\"weight\":{\"cells\":"
        "[1,2,1,2]},\"grid_cells\":256,\"band_limits\":[1]}");
    run_scenario(g, fresh_dir("rm3").string());
  }));
}

TEST_CASE("solve scenarios converge to the direct minimum-norm solution") {
  const stdfs::path dir = fresh_dir("solve");
  const Scenario sc = parse_scenario(
      "{\"name\":\"sv\",\"kind\":\"solve\",\"rows\":10,\"cols\":6,"
      "\"condition\":20,\"trials\":4,\"tolerance\":1e-10}");
  const RunResult res = run_scenario(sc, dir.string());
  CHECK(res.exit_code == 0);
  const auto rows = csv_rows(slurp(dir / "sv_solve.csv"));
  REQUIRE(rows.size() == 4);
  for (const auto& row : rows) {
    CHECK(row[3] <= 1e-10);       // residual
    CHECK(row[4] < 1e-6);         // distance to the direct solution
  }
  const nlohmann::json report = nlohmann::json::parse(res.report_json);
  CHECK(report["results"]["max_sweeps"] == 1200);
}

TEST_CASE("weight classification panel") {
  CHECK(classify_weight(Weight::preset("constant")) == WeightClass::frame);
  CHECK(classify_weight(Weight::preset("half_indicator")) ==
        WeightClass::frame);
  CHECK(classify_weight(Weight::preset("linear_x")) ==
        WeightClass::bessel_only);
  CHECK(classify_weight(Weight::preset("inv_sqrt_x")) ==
        WeightClass::lower_semi_frame_only);
  CHECK(classify_weight(Weight::grid({2.0, 0.0, 1.0, 1.0})) ==
        WeightClass::frame);
  CHECK(std::string(weight_class_name(WeightClass::neither)) == "neither");

  const nlohmann::json flat =
      nlohmann::json::parse(diagnose_weight_text(Weight::preset("constant"), 6, 32));
  CHECK(flat["class"] == "frame");
  CHECK(flat["oracle"]["lower"] == 1.0);
  CHECK(flat["oracle"]["upper"] == 1.0);
  CHECK(flat["measured"]["upper"].get<double>() <= 1.0 + 1e-9);
  CHECK(flat["weak_a2"]["value"] == doctest::Approx(1.0).epsilon(1e-12));

  const nlohmann::json risq = nlohmann::json::parse(
      diagnose_weight_text(Weight::preset("inv_sqrt_x"), 8, 32));
  CHECK(risq["class"] == "lower_semi_frame_only");
  CHECK(risq["oracle"]["upper_unbounded"] == true);
  CHECK(risq["oracle"]["upper"].is_null());
  const auto uppers = risq["oracle"]["refinement_evidence"]["upper"];
  CHECK(uppers[1].get<double>() ==
        doctest::Approx(std::sqrt(2.0) * uppers[0].get<double>())
            .epsilon(1e-12));
  CHECK(risq["dextrodual_convergence_expected"] == true);
  CHECK(risq["weak_a2"]["value"] ==
        doctest::Approx(4.0 / 3.0).epsilon(1e-10));

  const nlohmann::json lin = nlohmann::json::parse(
      diagnose_weight_text(Weight::preset("linear_x"), 6, 32));
  CHECK(lin["class"] == "bessel_only");
  CHECK(lin["oracle"]["lower_vanishes"] == true);
  const auto lowers = lin["oracle"]["refinement_evidence"]["lower"];
  CHECK(lowers[1].get<double>() < lowers[0].get<double>());
  CHECK(lin["weak_a2"]["trend"] == "growing");
  CHECK(lin["dextrodual_convergence_expected"] == false);

  // Non-realizability and probe-alignment limits surface as skips, never
  // as made-up numbers.
  const nlohmann::json steep =
      nlohmann::json::parse(diagnose_weight_text(Weight::power(-1.5), 6, 32));
  CHECK(steep["measured"].contains("skipped"));
  CHECK(steep["oracle"]["refinement_evidence"].contains("note"));
  const nlohmann::json coarse = nlohmann::json::parse(
      diagnose_weight_text(Weight::grid({2.0, 0.0, 1.0, 1.0}), 6, 32));
  CHECK(coarse["class"] == "frame");
  CHECK(coarse["measured"].contains("skipped"));
  CHECK(coarse["oracle"]["lower"] == 1.0);
  CHECK(coarse["oracle"]["upper"] == 2.0);
}

TEST_CASE("measure diagnose panel") {
  const nlohmann::json atoms = nlohmann::json::parse(diagnose_measure_text(
      MeasureSpec::atomic({{0.0, 0.25}, {0.5, 0.25}}), 512));
  CHECK(atoms["measure"]["normalized"] == true);
  CHECK(atoms["measure"]["total_mass"] == 0.5);
  CHECK(atoms["effectiveness"]["verdict"] == "effective_within_tolerance");
  CHECK(atoms["effectiveness"]["parseval_defect"].get<double>() < 1e-12);
  // Truncated bounds of the raw exponentials grow with the horizon: the
  // family is effective without being Bessel.
  CHECK(atoms["bounds"]["stable"] == false);
  CHECK(atoms["bounds"]["lower"].get<double>() > 1.0);

  const nlohmann::json grid = nlohmann::json::parse(
      diagnose_measure_text(MeasureSpec::grid({1.0, 1.0, 1.0, 1.0}), 64));
  CHECK(grid["effectiveness"].contains("skipped"));
  CHECK(grid["measure"]["kind"] == "grid");
}

TEST_CASE("command line honors the published exit codes") {
  const std::string bin = FRAMELAB_BIN;
  const stdfs::path dir = fresh_dir("cli");
  const std::string quiet = " > /dev/null 2>&1";

  CHECK(run_command(bin + quiet) == 1);
  CHECK(run_command(bin + " presets list" + quiet) == 0);
  CHECK(run_command(bin + " diagnose constant" + quiet) == 0);
  CHECK(run_command(bin + " diagnose no_such_preset" + quiet) == 1);
  CHECK(run_command(bin + " run " + (dir / "missing.json").string() + quiet) ==
        1);

  const stdfs::path empty = dir / "empty.json";
  std::ofstream(empty).close();
  CHECK(run_command(bin + " run " + empty.string() + quiet) == 1);

  const stdfs::path good = dir / "good.json";
  std::ofstream(good) << "{\"name\":\"cli_ok\",\"kind\":\"solve\",\"rows\":6,"
                         "\"cols\":4,\"condition\":10,\"trials\":2,"
                         "\"tolerance\":1e-8}";
  CHECK(run_command(bin + " run " + good.string() + " --out " +
                    (dir / "out").string() + quiet) == 0);
  CHECK(stdfs::exists(dir / "out" / "cli_ok_report.json"));

  const stdfs::path failing = dir / "failing.json";
  std::ofstream(failing)
      << "{\"name\":\"cli_fail\",\"kind\":\"rm_sweep\",\"weight\":{\"preset\":"
         "\"constant\"},\"grid_cells\":128,\"band_limits\":[4,8,16],"
         "\"expect_trend\":\"growing\"}";
  CHECK(run_command(bin + " run " + failing.string() + " --out " +
                    (dir / "out").string() + quiet) == 2);

  // Seed override lands in the report.
  CHECK(run_command(bin + " run " + good.string() + " --out " +
                    (dir / "out2").string() + " --seed 99" + quiet) == 0);
  const nlohmann::json rep =
      nlohmann::json::parse(slurp(dir / "out2" / "cli_ok_report.json"));
  CHECK(rep["seed"] == 99);
}
