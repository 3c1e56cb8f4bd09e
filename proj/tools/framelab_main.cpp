#include <cstdio>
#include <exception>
#include <filesystem>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "framelab/error.hpp"
#include "framelab/scenario.hpp"
#include "framelab/version.hpp"
#include "framelab/weights.hpp"
#include "json.hpp"

namespace {

using framelab::Error;

int do_run(const std::vector<std::string>& files, const std::string& out_dir,
           bool seed_set, std::uint64_t seed) {
  int worst = 0;
  for (const std::string& file : files) {
    framelab::Scenario sc = framelab::parse_scenario(framelab::read_text_file(file));
    if (seed_set) sc.seed = seed;
    const framelab::RunResult res = framelab::run_scenario(sc, out_dir);

    const nlohmann::json report = nlohmann::json::parse(res.report_json);
    std::printf("%s (%s)\n", sc.name.c_str(),
                framelab::scenario_kind_name(sc.kind));
    for (const auto& v : report["verdicts"]) {
      std::string line = v["pass"].get<bool>() ? "  [ok]   " : "  [FAIL] ";
      line += v["check"].get<std::string>();
      if (v.contains("value") && v["value"].is_number())
        line += "  value " + v["value"].dump();
      if (v.contains("bound")) line += "  bound " + v["bound"].dump();
      if (v.contains("note"))
        line += "  (" + v["note"].get<std::string>() + ")";
      std::printf("%s\n", line.c_str());
    }
    if (report["verdicts"].empty()) std::printf("  (no verdicts declared)\n");
    std::printf("  report: %s\n", res.report_path.c_str());
    worst = std::max(worst, res.exit_code);
  }
  return worst;
}

// Accepted forms: a preset name, power:<p>, or a path (JSON documents are
// measures, anything else a one-value-per-line weight CSV).
int do_diagnose(const std::string& spec, int depth, long long max_m) {
  const auto& presets = framelab::weight_preset_names();
  for (const std::string& name : presets) {
    if (spec == name) {
      std::fputs(
          framelab::diagnose_weight_text(framelab::Weight::preset(name), depth,
                                         max_m)
              .c_str(),
          stdout);
      return 0;
    }
  }
  if (spec.rfind("power:", 0) == 0) {
    const std::string arg = spec.substr(6);
    std::size_t used = 0;
    double p = 0;
    try {
      p = std::stod(arg, &used);
    } catch (const std::exception&) {
      throw Error(framelab::ErrorCode::bad_argument,
                  "cannot parse exponent in \"" + spec + "\"");
    }
    if (used != arg.size())
      throw Error(framelab::ErrorCode::bad_argument,
                  "cannot parse exponent in \"" + spec + "\"");
    std::fputs(framelab::diagnose_weight_text(framelab::Weight::power(p), depth,
                                              max_m)
                   .c_str(),
               stdout);
    return 0;
  }
  if (!std::filesystem::exists(spec)) {
    std::string names;
    for (const std::string& name : presets)
      names += (names.empty() ? "" : ", ") + name;
    throw Error(framelab::ErrorCode::bad_argument,
                "\"" + spec + "\" is not a preset (" + names +
                    "), power:<p>, or a readable file");
  }
  const std::string text = framelab::read_text_file(spec);
  const std::size_t first = text.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && text[first] == '{') {
    // Horizon scales with the requested band limit so the two panels probe
    // comparable resolutions.
    const long long horizon = std::max<long long>(8 * max_m, 64);
    std::fputs(
        framelab::diagnose_measure_text(framelab::parse_measure(text), horizon)
            .c_str(),
        stdout);
    return 0;
  }
  std::fputs(framelab::diagnose_weight_text(framelab::weight_from_csv_text(text),
                                            depth, max_m)
                 .c_str(),
             stdout);
  return 0;
}

int do_presets_list() {
  static const std::pair<const char*, const char*> formulas[] = {
      {"constant", "w(x) = 1"},
      {"linear_x", "w(x) = x"},
      {"inv_sqrt_x", "w(x) = x^(-1/2)"},
      {"half_indicator", "w(x) = 1 on [0, 1/2), 0 elsewhere"},
  };
  for (const std::string& name : framelab::weight_preset_names()) {
    const char* formula = "";
    for (const auto& [n, f] : formulas)
      if (name == n) formula = f;
    std::printf("%-16s %s\n", name.c_str(), formula);
  }
  return 0;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"operator-orbit frames and Kaczmarz experiments"};
  app.set_version_flag("--version", framelab::kVersion);
  app.require_subcommand(1);

  std::vector<std::string> files;
  std::string out_dir = "out";
  std::uint64_t seed = 0;
  CLI::App* run = app.add_subcommand("run", "execute scenario files");
  run->add_option("file", files, "scenario JSON file(s)")
      ->required()
      ->expected(1, 64);
  run->add_option("--out", out_dir, "output directory (default: out)");
  CLI::Option* seed_opt =
      run->add_option("--seed", seed, "override the scenario seed");

  std::string spec;
  int depth = 12;
  long long max_m = 256;
  CLI::App* diagnose =
      app.add_subcommand("diagnose", "weight/measure classification panel");
  diagnose
      ->add_option("spec", spec,
                   "preset name, power:<p>, weight CSV path, or measure JSON "
                   "path")
      ->required();
  diagnose->add_option("--depth", depth, "interval scan depth (default: 12)")
      ->check(CLI::Range(1, 40));
  diagnose
      ->add_option("--max-m", max_m,
                   "frame-bound band limit (default: 256)")
      ->check(CLI::Range(1, 4096));

  CLI::App* presets = app.add_subcommand("presets", "built-in weights");
  presets->require_subcommand(1);
  presets->add_subcommand("list", "list weight presets");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (run->parsed())
      return do_run(files, out_dir, seed_opt->count() > 0, seed);
    if (diagnose->parsed()) return do_diagnose(spec, depth, max_m);
    return do_presets_list();
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
