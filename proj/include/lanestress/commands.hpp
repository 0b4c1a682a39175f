#ifndef LANESTRESS_COMMANDS_HPP_
#define LANESTRESS_COMMANDS_HPP_

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "lanestress/config.hpp"
#include "lanestress/solver.hpp"

namespace lanestress {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitDivergence = 3;

// Config file (or defaults) plus key/value overrides applied in order.
// Throws ConfigError.
RunConfig ResolveConfig(const std::optional<std::filesystem::path>& config_path,
                        const std::vector<std::pair<std::string, std::string>>& overrides);

struct SearchOutcome {
  TrainResult result;
  std::vector<std::filesystem::path> traces;
};

// Trains the searcher (or runs the random baseline) and writes
//   <out>/traces/episode_NNNNNN.jsonl  one file per ego-failure episode
//   <out>/learning_curve.csv
//   <out>/checkpoint.txt
//   <out>/summary.json
// Stale episode files in <out>/traces are removed first.
SearchOutcome RunSearch(const RunConfig& cfg, bool random_baseline);

// Each command returns a process exit code and prints to out/err.
int CmdSearch(const RunConfig& cfg, bool random_baseline, std::ostream& out, std::ostream& err);
int CmdReplay(const std::filesystem::path& trace_path, bool render, std::ostream& out,
              std::ostream& err);
int CmdCalibrate(const RunConfig& cfg, std::ostream& out, std::ostream& err);
int CmdReport(const std::filesystem::path& dir, const std::optional<std::filesystem::path>& csv_dir,
              std::ostream& out, std::ostream& err);
int CmdSimulate(const RunConfig& cfg, std::ostream& out, std::ostream& err);

// Outcome of re-simulating a trace: empty when every recorded value matches.
std::optional<std::string> FindReplayDivergence(const ScenarioTrace& trace);

}  // namespace lanestress

#endif  // LANESTRESS_COMMANDS_HPP_
