#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include "lanestress/commands.hpp"
#include "lanestress/trace.hpp"

using namespace lanestress;
namespace fs = std::filesystem;

namespace {

fs::path FreshDir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("lanestress_cmd_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

// Exit status of the command-line tool with the given arguments.
int RunCli(const std::string& args) {
  const std::string cmd = std::string(LANESTRESS_CLI) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  REQUIRE(WIFEXITED(status));
  return WEXITSTATUS(status);
}

std::string ReadFile(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

RunConfig SmallRun(const fs::path& out, long steps) {
  RunConfig cfg = ResolveConfig(std::nullopt, {{"steps", std::to_string(steps)},
                                               {"hidden", "32"},
                                               {"seed", "3"},
                                               {"out", out.string()}});
  return cfg;
}

}  // namespace

TEST_CASE("search writes replayable failure traces") {
  const fs::path dir = FreshDir("search");
  const SearchOutcome o = RunSearch(SmallRun(dir, 1500), false);
  REQUIRE(o.result.failures > 0);
  CHECK(o.traces.size() == static_cast<std::size_t>(o.result.failures));
  CHECK(fs::exists(dir / "learning_curve.csv"));
  CHECK(fs::exists(dir / "checkpoint.txt"));
  CHECK(fs::exists(dir / "summary.json"));
  const nlohmann::json summary = nlohmann::json::parse(ReadFile(dir / "summary.json"));
  CHECK(summary["failures"] == o.result.failures);
  CHECK(summary["steps"] == 1500);

  for (const fs::path& p : o.traces) {
    const ScenarioTrace t = LoadTrace(p);
    CHECK(t.footer.status == EpisodeStatus::kFailure);
    CHECK_FALSE(FindReplayDivergence(t).has_value());
  }
  std::ostringstream out, err;
  CHECK(CmdReplay(o.traces.front(), true, out, err) == kExitOk);
  CHECK_FALSE(out.str().empty());

  SUBCASE("a perturbed state is reported as divergence") {
    ScenarioTrace t = LoadTrace(o.traces.front());
    t.steps.back().vehicles.front().x += 1e-9;
    const fs::path bad = dir / "perturbed.jsonl";
    SaveTrace(bad, t);
    CHECK(FindReplayDivergence(t).has_value());
    CHECK(RunCli("replay " + bad.string()) == kExitDivergence);
  }
  SUBCASE("a changed action is reported as divergence") {
    ScenarioTrace t = LoadTrace(o.traces.front());
    bool changed = false;
    for (auto& a : t.steps.front().action) {
      if (a) {
        a = *a == Maneuver::kDecelerate ? Maneuver::kAccelerate : Maneuver::kDecelerate;
        changed = true;
        break;
      }
    }
    if (changed) CHECK(FindReplayDivergence(t).has_value());
  }
  SUBCASE("a truncated trace is a usage error") {
    const std::string text = ReadFile(o.traces.front());
    const fs::path cut = dir / "cut.jsonl";
    std::ofstream(cut) << text.substr(0, text.size() / 3);
    CHECK(RunCli("replay " + cut.string()) == kExitUsage);
  }
  SUBCASE("report summarizes the directory") {
    std::ostringstream rep, rerr;
    const fs::path csv = dir / "csv";
    CHECK(CmdReport(dir / "traces", csv, rep, rerr) == kExitOk);
    CHECK(rep.str().find("RearEnd") != std::string::npos);
    CHECK(fs::exists(csv));
  }
  fs::remove_all(dir);
}

TEST_CASE("a rerun replaces stale traces") {
  const fs::path dir = FreshDir("stale");
  fs::create_directories(dir / "traces");
  std::ofstream(dir / "traces" / "episode_999999.jsonl") << "old";
  RunSearch(SmallRun(dir, 0), true);
  CHECK(fs::is_empty(dir / "traces"));
  fs::remove_all(dir);
}

TEST_CASE("baseline and simulate commands") {
  const fs::path dir = FreshDir("baseline");
  std::ostringstream out, err;
  CHECK(CmdSearch(SmallRun(dir, 300), true, out, err) == kExitOk);
  const nlohmann::json summary = nlohmann::json::parse(ReadFile(dir / "summary.json"));
  CHECK(summary["source"] == "baseline");

  RunConfig sim = SmallRun(dir, 20);
  CHECK(CmdSimulate(sim, out, err) == kExitOk);
  const fs::path trace = dir / "simulate" / "episode_000000.jsonl";
  REQUIRE(fs::exists(trace));
  const ScenarioTrace t = LoadTrace(trace);
  CHECK(t.steps.size() <= 20u);
  CHECK_FALSE(FindReplayDivergence(t).has_value());
  fs::remove_all(dir);
}

TEST_CASE("command-line exit codes") {
  const fs::path dir = FreshDir("cli");
  CHECK(RunCli("search --config " + (dir / "missing.cfg").string()) == kExitUsage);
  CHECK(RunCli("search --set warp=1 --out " + dir.string()) == kExitUsage);
  CHECK(RunCli("search --lambda 1.5 --steps 0 --out " + dir.string()) == kExitUsage);
  CHECK(RunCli("calibrate --lambdas 1.5 --steps 0 --out " + dir.string()) == kExitUsage);
  CHECK(RunCli("frobnicate") == kExitUsage);
  CHECK(RunCli("replay " + (dir / "none.jsonl").string()) == kExitUsage);

  fs::create_directories(dir / "empty");
  CHECK(RunCli("report " + (dir / "empty").string()) == kExitOk);
  CHECK(RunCli("report " + (dir / "nowhere").string()) == kExitUsage);

  std::ofstream(dir / "run.cfg") << "steps = 0\nvehicles = 10\n";
  CHECK(RunCli("search --config " + (dir / "run.cfg").string() + " --out " + (dir / "zero").string()) ==
        kExitOk);
  CHECK(fs::is_empty(dir / "zero" / "traces"));
  fs::remove_all(dir);
}

TEST_CASE("calibration over a few lambdas") {
  const fs::path dir = FreshDir("calibrate");
  RunConfig cfg = SmallRun(dir, 1500);
  cfg.lambdas = {0.0, 1.0};
  std::ostringstream out, err;
  CHECK(CmdCalibrate(cfg, out, err) == kExitOk);
  CHECK(fs::exists(dir / "calibration.json"));
  CHECK(fs::exists(dir / "lambda_0.00" / "summary.json"));
  CHECK(fs::exists(dir / "lambda_1.00" / "summary.json"));
  const nlohmann::json j = nlohmann::json::parse(ReadFile(dir / "calibration.json"));
  CHECK(j.contains("best_lambda"));
  fs::remove_all(dir);
}
