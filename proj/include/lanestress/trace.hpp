#ifndef LANESTRESS_TRACE_HPP_
#define LANESTRESS_TRACE_HPP_

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "lanestress/analysis.hpp"
#include "lanestress/driving.hpp"
#include "lanestress/metrics.hpp"
#include "lanestress/world.hpp"

namespace lanestress {

// Line-delimited JSON: one header line, one line per policy step, one footer
// line. Bump the schema whenever a field changes meaning.
inline constexpr int kTraceSchema = 1;

struct TraceHeader {
  int schema = kTraceSchema;
  std::string source;  // "search", "baseline" or "simulate"
  int episode = 0;
  std::uint64_t episode_seed = 0;
  double lambda = 0.0;
  double t_delta = 0.0;
  nlohmann::json config = nlohmann::json::object();  // run configuration snapshot
  std::vector<VehicleState> initial;                 // world right after reset
};

struct StepRecord {
  int step = 0;  // 1-based policy step
  EnvAction action{};
  std::array<int, kSlotCount> controlled{};  // vehicle id per slot, -1 if empty
  double reward = 0.0;
  double phi = 0.0;
  double psi = 0.0;
  double min_ttc = 0.0;  // +inf is stored as null
  EpisodeStatus status = EpisodeStatus::kRunning;
  std::vector<VehicleState> vehicles;  // post-step states, ego first
  std::vector<Maneuver> activity;      // what each vehicle did during the step
  std::vector<std::pair<int, int>> collisions;
};

struct TraceFooter {
  EpisodeStatus status = EpisodeStatus::kRunning;
  int steps = 0;
  std::optional<CrashRecord> crash;
  std::vector<std::pair<int, int>> non_ego_collisions;
};

struct ScenarioTrace {
  TraceHeader header;
  std::vector<StepRecord> steps;
  TraceFooter footer;
};

class TraceParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string_view StatusName(EpisodeStatus status);
EpisodeStatus ParseStatus(std::string_view name);

void WriteTrace(std::ostream& out, const ScenarioTrace& trace);
ScenarioTrace ReadTrace(std::istream& in);

void SaveTrace(const std::filesystem::path& path, const ScenarioTrace& trace);
ScenarioTrace LoadTrace(const std::filesystem::path& path);

std::string TraceFileName(int episode);

struct TraceDirectory {
  std::vector<ScenarioTrace> traces;
  std::vector<std::string> malformed;  // file names that failed to parse
};

// Loads every *.jsonl file of a directory in name order. Throws
// std::filesystem::filesystem_error if the directory cannot be read.
TraceDirectory LoadTraceDirectory(const std::filesystem::path& dir);

// Crash records of all failure traces.
std::vector<CrashRecord> CollectCrashes(const std::vector<ScenarioTrace>& traces);

nlohmann::json CrashToJson(const CrashRecord& crash);
CrashRecord CrashFromJson(const nlohmann::json& j);

}  // namespace lanestress

#endif  // LANESTRESS_TRACE_HPP_
