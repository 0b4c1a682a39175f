#ifndef LANESTRESS_ENV_HPP_
#define LANESTRESS_ENV_HPP_

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <set>
#include <utility>
#include <vector>

#include "lanestress/analysis.hpp"
#include "lanestress/driving.hpp"
#include "lanestress/metrics.hpp"
#include "lanestress/trace.hpp"
#include "lanestress/world.hpp"

namespace lanestress {

struct EnvConfig {
  RoadConfig road;
  int n_vehicles = 40;
  SpawnOptions spawn;
  UidmParams uidm;
  MobilParams mobil;
  ControllerParams controller;
  RewardParams reward;
  int observed_count = 6;  // rows of the nearest-vehicle observation

  void Validate() const;
};

// Columns of one observation row: dx, dy, dvx, dvy (relative to the ego,
// normalized by d, road width, speed limit, speed limit) and a presence flag.
inline constexpr int kObservationColumns = 5;

struct Observation {
  std::vector<double> nearest;  // observed_count rows
  std::vector<double> slots;    // kSlotCount rows, one per controlled slot
  std::array<bool, kSlotCount> slot_mask{};

  // nearest followed by slots.
  std::vector<double> Flatten() const;
};

// The n vehicles closest to the ego (Euclidean, ties by id), zero-padded.
std::vector<double> EncodeObservation(const WorldState& world, std::size_t ego_index,
                                      int n, double radius);

// Per-step bookkeeping that mirrors the MDP state (a_ego, a_env, o_env).
struct EnvState {
  KinematicCommand a_ego;
  std::array<std::optional<ManeuverCommand>, kSlotCount> a_env{};
  std::array<int, kSlotCount> controlled_ids{};
  std::vector<double> o_env;
  int step_index = 0;
};

struct StepInfo {
  double min_ttc = 0.0;
  double phi = 0.0;
  double psi = 0.0;
  std::vector<std::pair<int, int>> collisions;
};

struct StepResult {
  Observation observation;
  double reward = 0.0;
  EpisodeStatus status = EpisodeStatus::kRunning;
  StepInfo info;
};

class StepAfterTerminalError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// What the searcher sees of an environment. Implemented by AstEnv and by
// scripted stand-ins in tests.
class SearchEnvironment {
 public:
  virtual ~SearchEnvironment() = default;
  virtual Observation Reset(std::uint64_t seed, int episode) = 0;
  virtual StepResult Step(const EnvAction& action) = 0;
  virtual bool had_non_ego_collision() const { return false; }
};

// The stress-testing MDP around one uIDM ego vehicle. Each step the searcher
// picks maneuvers for the ego's six slot neighbors; every other vehicle,
// including the ego, drives itself with uIDM.
class AstEnv : public SearchEnvironment {
 public:
  explicit AstEnv(EnvConfig config);

  // `episode` only labels crash records and traces.
  Observation Reset(std::uint64_t seed, int episode = 0) override;
  StepResult Step(const EnvAction& action) override;
  bool IsTerminal() const { return status_ != EpisodeStatus::kRunning; }

  EpisodeStatus status() const { return status_; }
  const WorldState& world() const { return world_; }
  const EnvState& state() const { return state_; }
  const EnvConfig& config() const { return config_; }
  const std::optional<CrashRecord>& crash() const { return crash_; }
  bool had_non_ego_collision() const override { return !non_ego_pairs_.empty(); }
  std::uint64_t seed() const { return seed_; }

  // Records every step into a ScenarioTrace until the next Reset.
  void set_tracing(bool on) { tracing_ = on; }
  // Trace of the current episode; header metadata beyond the initial world is
  // left to the caller.
  ScenarioTrace TakeTrace();

  Observation CurrentObservation() const;

 private:
  struct Driver {
    LowLevelTargets targets;
    bool ever_controlled = false;
    bool controlled = false;
    bool crashed = false;
    Maneuver command = Maneuver::kConstantSpeed;
  };

  KinematicCommand Command(const LaneIndex& lanes, std::size_t i) const;
  Maneuver Activity(std::size_t i, double first_accel) const;

  EnvConfig config_;
  WorldState world_;
  std::vector<Driver> drivers_;
  EnvState state_;
  EpisodeStatus status_ = EpisodeStatus::kRunning;
  std::set<std::pair<int, int>> non_ego_pairs_;
  std::optional<CrashRecord> crash_;
  std::uint64_t seed_ = 0;
  int episode_ = 0;
  bool reset_ = false;

  bool tracing_ = false;
  ScenarioTrace trace_;
};

}  // namespace lanestress

#endif  // LANESTRESS_ENV_HPP_
