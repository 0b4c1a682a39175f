#ifndef LANESTRESS_ANALYSIS_HPP_
#define LANESTRESS_ANALYSIS_HPP_

#include <array>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "lanestress/driving.hpp"
#include "lanestress/world.hpp"

namespace lanestress {

enum class EgoManeuver : int { kStraight = 0, kRight = 1, kLeft = 2 };
inline constexpr int kEgoManeuverCount = 3;

// Location of the crashed vehicle relative to the ego: Front/Rear x
// Left/Ego-lane/Right.
enum class CollisionType : int { kFL = 0, kFE = 1, kFR = 2, kRL = 3, kRE = 4, kRR = 5 };
inline constexpr int kCollisionTypeCount = 6;

enum class CrashGroup : int { kRearEnd = 0, kLaneChange = 1, kOther = 2 };
inline constexpr int kCrashGroupCount = 3;

std::string_view EgoManeuverName(EgoManeuver m);
std::string_view CollisionTypeName(CollisionType t);
std::string_view CrashGroupName(CrashGroup g);
// Crashed-vehicle labels: SV_LLC, SV_RLC, SV_CSK, SV_A, SV_D.
std::string_view CrashedManeuverName(Maneuver m);

class DataCorruptionError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

struct CrashRecord {
  int episode = 0;
  int collision_step = 0;  // policy step index (1-based) at which contact happened
  VehicleState ego_pre;    // states at the preceding policy step
  VehicleState other_pre;
  EgoManeuver ego_maneuver = EgoManeuver::kStraight;
  Maneuver other_maneuver = Maneuver::kConstantSpeed;
  CollisionType type = CollisionType::kFE;
  CrashGroup group = CrashGroup::kRearEnd;
  double ego_speed = 0.0;
  int ego_lane = 0;
  // The episode also contained a collision between two non-ego vehicles.
  bool non_ego_collision = false;
};

// Front/rear from the sign of x_other - x_ego (a tie counts as front), side
// from lane_other - lane_ego. Throws DataCorruptionError for lane gaps > 1.
CollisionType ClassifyCollisionType(const VehicleState& ego_pre,
                                    const VehicleState& other_pre);

// Lane-change involvement dominates; otherwise FE/RE are rear-end crashes.
CrashGroup ClassifyGroup(CollisionType type, EgoManeuver ego, Maneuver other);

bool IsLaneChange(Maneuver m);

// Fills type and group from the pre-collision states and maneuvers.
CrashRecord MakeCrashRecord(int episode, int collision_step, const VehicleState& ego_pre,
                            const VehicleState& other_pre, EgoManeuver ego_maneuver,
                            Maneuver other_maneuver, bool non_ego_collision);

inline constexpr int kSpeedBinCount = 5;  // 0-5, 5-10, 10-15, 15-20, 20-25 m/s

struct CrashStats {
  // [ego maneuver S/R/L][crashed maneuver LLC/RLC/CSK/A/D]
  std::array<std::array<int, kManeuverCount>, kEgoManeuverCount> maneuver_matrix{};
  std::array<int, kCollisionTypeCount> type_counts{};
  std::array<int, kCrashGroupCount> group_counts{};
  std::array<int, kSpeedBinCount> speed_histogram{};  // speeds >= 20 land in the last bin
  std::vector<int> lane_counts;
  int ego_only = 0;
  int with_non_ego = 0;
  int total = 0;

  // Rear-end, lane-change, other percentages; zeros when total == 0.
  std::array<double, 3> GroupPercentages() const;
  double NonEgoFraction() const;
};

int SpeedBin(double speed);

CrashStats Aggregate(std::span<const CrashRecord> crashes, int lane_count);

using PercentTriple = std::array<double, 3>;

double EuclideanDistance(const PercentTriple& a, const PercentTriple& b);

// Default observed crash-report triple (rear-end, lane-change, other).
inline constexpr PercentTriple kCaliforniaCrashTriple = {52.46, 26.47, 20.07};

struct LambdaRun {
  double lambda = 0.0;
  std::array<int, 3> group_counts{};  // rear-end, lane-change, other
};

struct CalibrationRow {
  double lambda = 0.0;
  PercentTriple percentages{};
  double distance = 0.0;
};

struct CalibrationResult {
  std::vector<CalibrationRow> rows;
  double best_lambda = 0.0;
  std::vector<std::string> warnings;
};

// Picks the lambda whose group percentages are closest to the observed
// triple. Ties go to the smaller lambda; runs with no crashes are skipped
// with a warning. Throws std::invalid_argument when nothing is left.
CalibrationResult CalibrateLambda(std::span<const LambdaRun> runs, const PercentTriple& observed);

// Same selection on already-computed percentages.
CalibrationResult CalibrateFromPercentages(std::span<const CalibrationRow> rows,
                                           const PercentTriple& observed);

}  // namespace lanestress

#endif  // LANESTRESS_ANALYSIS_HPP_
