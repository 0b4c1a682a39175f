// Command-line front end: search, replay, calibrate, report, simulate.

#include <iostream>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>

#include "lanestress/commands.hpp"

namespace {

using Overrides = std::vector<std::pair<std::string, std::string>>;

struct RunFlags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<double> lambda;
  std::optional<double> t_delta;
  std::optional<long> steps;
  std::optional<int> vehicles;
  std::optional<int> lanes;
  std::optional<std::string> out;
  std::vector<std::string> set;

  void Attach(CLI::App* app) {
    app->add_option("--config", config, "key = value configuration file");
    app->add_option("--seed", seed, "master random seed");
    app->add_option("--lambda", lambda, "weight of the ego-collision term, in [0, 1]");
    app->add_option("--t-delta", t_delta, "TTC threshold in seconds");
    app->add_option("--steps", steps, "policy-step budget");
    app->add_option("--vehicles", vehicles, "number of vehicles including the ego");
    app->add_option("--lanes", lanes, "number of lanes");
    app->add_option("--out", out, "output directory");
    app->add_option("--set", set, "any config key as key=value (repeatable)");
  }

  // Flags win over --set, which wins over the file.
  Overrides Collect() const {
    Overrides o;
    for (const std::string& kv : set) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) throw lanestress::ConfigError("--set expects key=value, got '" + kv + "'");
      o.emplace_back(kv.substr(0, eq), kv.substr(eq + 1));
    }
    if (seed) o.emplace_back("seed", std::to_string(*seed));
    if (lambda) o.emplace_back("lambda", CLI::detail::to_string(*lambda));
    if (t_delta) o.emplace_back("t_delta", CLI::detail::to_string(*t_delta));
    if (steps) o.emplace_back("steps", std::to_string(*steps));
    if (vehicles) o.emplace_back("vehicles", std::to_string(*vehicles));
    if (lanes) o.emplace_back("lanes", std::to_string(*lanes));
    if (out) o.emplace_back("out", *out);
    return o;
  }

  lanestress::RunConfig Resolve() const {
    std::optional<std::filesystem::path> path;
    if (!config.empty()) path = config;
    return lanestress::ResolveConfig(path, Collect());
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Adaptive stress testing of a uIDM vehicle on a multi-lane highway"};
  app.require_subcommand(1);

  RunFlags search_flags;
  std::string baseline;
  CLI::App* search = app.add_subcommand("search", "train the searcher and record failure traces");
  search_flags.Attach(search);
  search->add_option("--baseline", baseline, "run a baseline instead of training")
      ->check(CLI::IsMember({"random"}));

  std::string trace_path;
  bool render = false;
  CLI::App* replay = app.add_subcommand("replay", "re-simulate a trace and verify it");
  replay->add_option("trace", trace_path, "trace file")->required();
  replay->add_flag("--render", render, "print a text frame per step");

  RunFlags calibrate_flags;
  std::string lambdas;
  CLI::App* calibrate = app.add_subcommand("calibrate", "run the search per lambda and pick the closest");
  calibrate_flags.Attach(calibrate);
  calibrate->add_option("--lambdas", lambdas, "comma-separated lambda values");

  std::string report_dir;
  std::string csv_dir;
  CLI::App* report = app.add_subcommand("report", "crash statistics of a trace directory");
  report->add_option("dir", report_dir, "directory of traces")->required();
  report->add_option("--csv-dir", csv_dir, "also write histogram CSV files here");

  RunFlags simulate_flags;
  CLI::App* simulate = app.add_subcommand("simulate", "one uncontrolled uIDM episode");
  simulate_flags.Attach(simulate);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return lanestress::kExitUsage;
  }

  try {
    if (*search) {
      return lanestress::CmdSearch(search_flags.Resolve(), !baseline.empty(), std::cout, std::cerr);
    }
    if (*replay) return lanestress::CmdReplay(trace_path, render, std::cout, std::cerr);
    if (*calibrate) {
      if (!lambdas.empty()) calibrate_flags.set.push_back("lambdas=" + lambdas);
      return lanestress::CmdCalibrate(calibrate_flags.Resolve(), std::cout, std::cerr);
    }
    if (*report) {
      std::optional<std::filesystem::path> csv;
      if (!csv_dir.empty()) csv = csv_dir;
      return lanestress::CmdReport(report_dir, csv, std::cout, std::cerr);
    }
    if (*simulate) return lanestress::CmdSimulate(simulate_flags.Resolve(), std::cout, std::cerr);
  } catch (const lanestress::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return lanestress::kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return lanestress::kExitFailure;
  }
  return lanestress::kExitUsage;
}
