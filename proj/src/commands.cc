#include "lanestress/commands.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "lanestress/analysis.hpp"
#include "lanestress/trace.hpp"

namespace lanestress {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Everything that identifies a run; the output location is left out so the
// same run written to two places produces identical traces.
json RunSnapshot(const RunConfig& cfg) {
  json j = ConfigToJson(cfg);
  j.erase("out");
  j.erase("lambdas");
  return j;
}

void RemoveStaleTraces(const fs::path& dir) {
  if (!fs::exists(dir)) return;
  for (const auto& entry : fs::directory_iterator(dir)) {
    const std::string name = entry.path().filename().string();
    if (entry.is_regular_file() && name.rfind("episode_", 0) == 0 &&
        entry.path().extension() == ".jsonl") {
      fs::remove(entry.path());
    }
  }
}

void WriteTextFile(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

bool SameVehicle(const VehicleState& a, const VehicleState& b) {
  return a.id == b.id && a.x == b.x && a.y == b.y && a.vx == b.vx && a.vy == b.vy &&
         a.heading == b.heading && a.lane == b.lane;
}

std::optional<std::string> CompareVehicles(const std::vector<VehicleState>& recorded,
                                           const std::vector<VehicleState>& simulated) {
  if (recorded.size() != simulated.size()) return "vehicle count differs";
  for (std::size_t i = 0; i < recorded.size(); ++i) {
    if (!SameVehicle(recorded[i], simulated[i])) {
      return "vehicle " + std::to_string(recorded[i].id) + " state differs";
    }
  }
  return std::nullopt;
}

bool SameDouble(double a, double b) { return a == b || (std::isnan(a) && std::isnan(b)); }

void RenderFrame(const StepRecord& rec, const RoadConfig& road, double radius, std::ostream& out) {
  const VehicleState& ego = rec.vehicles.front();
  out << "step " << rec.step << " status " << StatusName(rec.status) << " reward "
      << rec.reward << '\n';
  out << "  ego x=" << ego.x << " y=" << ego.y << " vx=" << ego.vx << " lane=" << ego.lane << '\n';
  // One row per lane, 5 m per column, ego-centered window of +-radius.
  const int half = static_cast<int>(radius / 5.0);
  for (int lane = 0; lane < road.lane_count; ++lane) {
    std::string row(static_cast<std::size_t>(2 * half + 1), '.');
    for (const VehicleState& v : rec.vehicles) {
      if (v.lane != lane) continue;
      const int col = static_cast<int>(std::lround((v.x - ego.x) / 5.0)) + half;
      if (col < 0 || col > 2 * half) continue;
      row[static_cast<std::size_t>(col)] = v.is_ego ? 'E' : (row[static_cast<std::size_t>(col)] == '.' ? 'o' : '#');
    }
    out << "  " << lane << ' ' << row << '\n';
  }
}

int LaneCountOf(const std::vector<ScenarioTrace>& traces) {
  int lanes = RoadConfig{}.lane_count;
  for (const ScenarioTrace& t : traces) {
    if (t.header.config.contains("lanes")) lanes = std::max(lanes, t.header.config["lanes"].get<int>());
  }
  return lanes;
}

void PrintStats(const CrashStats& stats, std::ostream& out) {
  out << "crashes: " << stats.total << " (ego only " << stats.ego_only << ", with non-ego collision "
      << stats.with_non_ego << ")\n\n";

  out << "maneuver matrix (rows: ego S/R/L, columns: crashed vehicle)\n";
  out << "      ";
  for (int m = 0; m < kManeuverCount; ++m) {
    out << std::setw(8) << CrashedManeuverName(static_cast<Maneuver>(m));
  }
  out << std::setw(8) << "sum" << '\n';
  for (int e = 0; e < kEgoManeuverCount; ++e) {
    out << std::setw(6) << EgoManeuverName(static_cast<EgoManeuver>(e));
    int sum = 0;
    for (int m = 0; m < kManeuverCount; ++m) {
      out << std::setw(8) << stats.maneuver_matrix[e][m];
      sum += stats.maneuver_matrix[e][m];
    }
    out << std::setw(8) << sum << '\n';
  }

  out << "\ncollision types\n";
  for (int t = 0; t < kCollisionTypeCount; ++t) {
    out << "  " << CollisionTypeName(static_cast<CollisionType>(t)) << ' '
        << stats.type_counts[t] << '\n';
  }

  const auto pct = stats.GroupPercentages();
  out << "\ncrash groups\n";
  for (int g = 0; g < kCrashGroupCount; ++g) {
    out << "  " << CrashGroupName(static_cast<CrashGroup>(g)) << ' ' << stats.group_counts[g]
        << " (" << std::fixed << std::setprecision(2) << pct[g] << "%)\n";
    out.unsetf(std::ios::floatfield);
    out << std::setprecision(6);
  }

  out << "\nspeed histogram (m/s)\nbin,count\n";
  for (int b = 0; b < kSpeedBinCount; ++b) {
    out << b * 5 << '-' << (b + 1) * 5 << ',' << stats.speed_histogram[b] << '\n';
  }
  out << "\nlane histogram\nlane,count\n";
  for (std::size_t l = 0; l < stats.lane_counts.size(); ++l) {
    out << l << ',' << stats.lane_counts[l] << '\n';
  }
  out << "\nnon-ego collision fraction: " << stats.NonEgoFraction() << '\n';
}

}  // namespace

RunConfig ResolveConfig(const std::optional<fs::path>& config_path,
                        const std::vector<std::pair<std::string, std::string>>& overrides) {
  RunConfig cfg = config_path ? LoadConfig(*config_path) : RunConfig{};
  for (const auto& [key, value] : overrides) SetConfigValue(&cfg, key, value);
  cfg.Validate();
  return cfg;
}

SearchOutcome RunSearch(const RunConfig& cfg, bool random_baseline) {
  const fs::path out_dir(cfg.out_dir);
  const fs::path trace_dir = out_dir / "traces";
  fs::create_directories(trace_dir);
  RemoveStaleTraces(trace_dir);

  const EnvConfig env_cfg = cfg.ResolvedEnv();
  const json snapshot = RunSnapshot(cfg);
  AstEnv* env = nullptr;
  const EnvFactory factory = [&]() {
    auto made = std::make_unique<AstEnv>(env_cfg);
    made->set_tracing(true);
    env = made.get();
    return made;
  };

  SearchOutcome outcome;
  const std::string source = random_baseline ? "baseline" : "search";
  const EpisodeCallback on_end = [&](const EpisodeSummary& ep) {
    ScenarioTrace trace = env->TakeTrace();
    if (ep.status != EpisodeStatus::kFailure) return;
    trace.header.source = source;
    trace.header.config = snapshot;
    const fs::path path = trace_dir / TraceFileName(ep.episode);
    SaveTrace(path, trace);
    outcome.traces.push_back(path);
  };

  outcome.result = random_baseline ? RandomBaseline(factory, cfg.train, on_end)
                                   : Train(factory, cfg.train, on_end);
  const TrainResult& r = outcome.result;

  std::ostringstream curve;
  WriteLearningCurve(curve, r.curve);
  WriteTextFile(out_dir / "learning_curve.csv", curve.str());
  std::ostringstream checkpoint;
  WriteCheckpoint(checkpoint, r.net, cfg.train);
  WriteTextFile(out_dir / "checkpoint.txt", checkpoint.str());

  int non_ego = 0;
  for (const EpisodeSummary& ep : r.episodes) {
    if (ep.status == EpisodeStatus::kFailure && ep.non_ego_collision) ++non_ego;
  }
  json summary = {{"source", source},
                  {"steps", r.steps},
                  {"episodes", r.episodes.size()},
                  {"failures", r.failures},
                  {"failures_with_non_ego_collision", non_ego},
                  {"aborted_updates", r.aborted_updates},
                  {"config", ConfigToJson(cfg)}};
  WriteTextFile(out_dir / "summary.json", summary.dump(2) + "\n");
  return outcome;
}

int CmdSearch(const RunConfig& cfg, bool random_baseline, std::ostream& out, std::ostream& err) {
  try {
    const SearchOutcome o = RunSearch(cfg, random_baseline);
    out << (random_baseline ? "baseline" : "search") << ": " << o.result.steps << " steps, "
        << o.result.episodes.size() << " finished episodes, " << o.result.failures
        << " ego failures\n";
    if (o.result.aborted_updates > 0) {
      err << "warning: " << o.result.aborted_updates << " updates aborted on non-finite loss\n";
    }
    out << "wrote " << o.traces.size() << " traces to " << (fs::path(cfg.out_dir) / "traces").string()
        << '\n';
    return kExitOk;
  } catch (const PlacementError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }
}

std::optional<std::string> FindReplayDivergence(const ScenarioTrace& trace) {
  const RunConfig cfg = ConfigFromJson(trace.header.config);
  AstEnv env(cfg.ResolvedEnv());
  env.Reset(trace.header.episode_seed, trace.header.episode);
  if (auto d = CompareVehicles(trace.header.initial, env.world().vehicles)) {
    return "initial world: " + *d;
  }
  for (const StepRecord& rec : trace.steps) {
    const std::string at = "step " + std::to_string(rec.step) + ": ";
    if (env.IsTerminal()) return at + "episode already ended";
    const StepResult r = env.Step(rec.action);
    if (env.state().step_index != rec.step) return at + "step index differs";
    if (auto d = CompareVehicles(rec.vehicles, env.world().vehicles)) return at + *d;
    if (env.state().controlled_ids != rec.controlled) return at + "controlled set differs";
    if (!SameDouble(r.reward, rec.reward)) return at + "reward differs";
    if (!SameDouble(r.info.phi, rec.phi) || !SameDouble(r.info.psi, rec.psi)) {
      return at + "reward components differ";
    }
    if (!SameDouble(r.info.min_ttc, rec.min_ttc)) return at + "minimum TTC differs";
    if (r.status != rec.status) return at + "status differs";
    if (r.info.collisions != rec.collisions) return at + "collisions differ";
  }
  if (env.status() != trace.footer.status) return std::string("terminal status differs");
  const ScenarioTrace replayed = env.TakeTrace();
  const bool had_crash = replayed.footer.crash.has_value();
  if (had_crash != trace.footer.crash.has_value() ||
      (had_crash && CrashToJson(*replayed.footer.crash) != CrashToJson(*trace.footer.crash))) {
    return std::string("crash record differs");
  }
  if (replayed.footer.non_ego_collisions != trace.footer.non_ego_collisions) {
    return std::string("non-ego collisions differ");
  }
  return std::nullopt;
}

int CmdReplay(const fs::path& trace_path, bool render, std::ostream& out, std::ostream& err) {
  ScenarioTrace trace;
  try {
    trace = LoadTrace(trace_path);
  } catch (const std::exception& e) {
    err << "error: " << trace_path.string() << ": " << e.what() << '\n';
    return kExitUsage;
  }
  std::optional<std::string> divergence;
  try {
    divergence = FindReplayDivergence(trace);
  } catch (const ConfigError& e) {
    err << "error: trace configuration: " << e.what() << '\n';
    return kExitUsage;
  }
  if (render) {
    const RunConfig cfg = ConfigFromJson(trace.header.config);
    for (const StepRecord& rec : trace.steps) RenderFrame(rec, cfg.env.road, cfg.env.reward.d, out);
  }
  if (divergence) {
    err << "divergence: " << *divergence << '\n';
    return kExitDivergence;
  }
  out << "replay ok: " << trace.steps.size() << " steps, status " << StatusName(trace.footer.status)
      << '\n';
  return kExitOk;
}

int CmdCalibrate(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  if (cfg.lambdas.empty()) {
    err << "error: no lambda values given\n";
    return kExitUsage;
  }
  std::vector<LambdaRun> runs;
  for (double lambda : cfg.lambdas) {
    RunConfig run = cfg;
    run.env.reward.lambda = lambda;
    char name[32];
    std::snprintf(name, sizeof name, "lambda_%.2f", lambda);
    run.out_dir = (fs::path(cfg.out_dir) / name).string();
    try {
      const SearchOutcome o = RunSearch(run, false);
      std::vector<ScenarioTrace> traces;
      for (const fs::path& p : o.traces) traces.push_back(LoadTrace(p));
      const std::vector<CrashRecord> crashes = CollectCrashes(traces);
      const CrashStats stats = Aggregate(crashes, run.env.road.lane_count);
      LambdaRun lr;
      lr.lambda = lambda;
      lr.group_counts = stats.group_counts;
      runs.push_back(lr);
      out << "lambda " << lambda << ": " << stats.total << " crashes\n";
    } catch (const PlacementError& e) {
      err << "error: " << e.what() << '\n';
      return kExitUsage;
    }
  }

  CalibrationResult result;
  try {
    result = CalibrateLambda(runs, cfg.reference_triple);
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  for (const std::string& w : result.warnings) err << "warning: " << w << '\n';

  out << "\nlambda  rear-end  lane-change  other  D_e\n";
  char line[128];
  for (const CalibrationRow& row : result.rows) {
    std::snprintf(line, sizeof line, "%6.2f  %8.2f  %11.2f  %5.2f  %.2f\n", row.lambda,
                  row.percentages[0], row.percentages[1], row.percentages[2], row.distance);
    out << line;
  }
  std::snprintf(line, sizeof line, "best lambda: %.2f\n", result.best_lambda);
  out << line;

  json j = json::array();
  for (const CalibrationRow& row : result.rows) {
    j.push_back({{"lambda", row.lambda}, {"percentages", row.percentages}, {"distance", row.distance}});
  }
  WriteTextFile(fs::path(cfg.out_dir) / "calibration.json",
                json{{"rows", j}, {"best_lambda", result.best_lambda}, {"warnings", result.warnings}}
                        .dump(2) + "\n");
  return kExitOk;
}

int CmdReport(const fs::path& dir, const std::optional<fs::path>& csv_dir, std::ostream& out,
              std::ostream& err) {
  TraceDirectory loaded;
  try {
    loaded = LoadTraceDirectory(dir);
  } catch (const fs::filesystem_error& e) {
    err << "error: cannot read " << dir.string() << ": " << e.what() << '\n';
    return kExitUsage;
  }
  for (const std::string& bad : loaded.malformed) err << "warning: skipped malformed trace " << bad << '\n';

  std::vector<CrashRecord> crashes;
  int skipped = 0;
  for (const ScenarioTrace& t : loaded.traces) {
    if (t.footer.status != EpisodeStatus::kFailure) continue;
    if (!t.footer.crash) {
      ++skipped;
      continue;
    }
    crashes.push_back(*t.footer.crash);
  }
  if (skipped > 0) err << "warning: " << skipped << " failure traces had no crash record\n";
  const CrashStats stats = Aggregate(crashes, LaneCountOf(loaded.traces));
  out << "traces: " << loaded.traces.size() << ", malformed: " << loaded.malformed.size() << '\n';
  PrintStats(stats, out);

  if (csv_dir) {
    try {
      fs::create_directories(*csv_dir);
      std::ostringstream speed, lane;
      speed << "bin_low,bin_high,count\n";
      for (int b = 0; b < kSpeedBinCount; ++b) {
        speed << b * 5 << ',' << (b + 1) * 5 << ',' << stats.speed_histogram[b] << '\n';
      }
      lane << "lane,count\n";
      for (std::size_t l = 0; l < stats.lane_counts.size(); ++l) {
        lane << l << ',' << stats.lane_counts[l] << '\n';
      }
      WriteTextFile(*csv_dir / "speed_histogram.csv", speed.str());
      WriteTextFile(*csv_dir / "lane_histogram.csv", lane.str());
    } catch (const std::exception& e) {
      err << "error: " << e.what() << '\n';
      return kExitUsage;
    }
  }
  return kExitOk;
}

int CmdSimulate(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  try {
    AstEnv env(cfg.ResolvedEnv());
    env.set_tracing(true);
    env.Reset(cfg.train.seed, 0);
    const EnvAction uncontrolled{};
    const long limit = cfg.train.total_env_steps;
    long steps = 0;
    while (!env.IsTerminal() && steps < limit) {
      env.Step(uncontrolled);
      ++steps;
    }
    ScenarioTrace trace = env.TakeTrace();
    trace.header.source = "simulate";
    trace.header.config = RunSnapshot(cfg);
    const fs::path dir = fs::path(cfg.out_dir) / "simulate";
    fs::create_directories(dir);
    const fs::path path = dir / TraceFileName(0);
    SaveTrace(path, trace);
    out << "simulate: " << steps << " steps, status " << StatusName(env.status());
    if (env.had_non_ego_collision()) out << ", non-ego collisions " << trace.footer.non_ego_collisions.size();
    out << "\nwrote " << path.string() << '\n';
    return kExitOk;
  } catch (const PlacementError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }
}

}  // namespace lanestress
