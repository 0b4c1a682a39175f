#include "lanestress/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace lanestress {

std::string_view EgoManeuverName(EgoManeuver m) {
  switch (m) {
    case EgoManeuver::kStraight: return "S";
    case EgoManeuver::kRight: return "R";
    case EgoManeuver::kLeft: return "L";
  }
  return "?";
}

std::string_view CollisionTypeName(CollisionType t) {
  static constexpr std::array<std::string_view, kCollisionTypeCount> kNames = {
      "FL", "FE", "FR", "RL", "RE", "RR"};
  return kNames[static_cast<int>(t)];
}

std::string_view CrashGroupName(CrashGroup g) {
  switch (g) {
    case CrashGroup::kRearEnd: return "RearEnd";
    case CrashGroup::kLaneChange: return "LaneChange";
    case CrashGroup::kOther: return "Other";
  }
  return "?";
}

std::string_view CrashedManeuverName(Maneuver m) {
  switch (m) {
    case Maneuver::kLaneLeft: return "SV_LLC";
    case Maneuver::kLaneRight: return "SV_RLC";
    case Maneuver::kConstantSpeed: return "SV_CSK";
    case Maneuver::kAccelerate: return "SV_A";
    case Maneuver::kDecelerate: return "SV_D";
  }
  return "?";
}

CollisionType ClassifyCollisionType(const VehicleState& ego_pre,
                                    const VehicleState& other_pre) {
  const int dl = other_pre.lane - ego_pre.lane;
  if (dl < -1 || dl > 1) {
    std::ostringstream msg;
    msg << "colliding vehicles " << ego_pre.id << " and " << other_pre.id
        << " are " << dl << " lanes apart";
    throw DataCorruptionError(msg.str());
  }
  const bool front = other_pre.x - ego_pre.x >= 0.0;
  return static_cast<CollisionType>((front ? 0 : 3) + (dl + 1));
}

bool IsLaneChange(Maneuver m) {
  return m == Maneuver::kLaneLeft || m == Maneuver::kLaneRight;
}

CrashGroup ClassifyGroup(CollisionType type, EgoManeuver ego, Maneuver other) {
  if (ego != EgoManeuver::kStraight || IsLaneChange(other)) return CrashGroup::kLaneChange;
  if (type == CollisionType::kFE || type == CollisionType::kRE) return CrashGroup::kRearEnd;
  return CrashGroup::kOther;
}

CrashRecord MakeCrashRecord(int episode, int collision_step, const VehicleState& ego_pre,
                            const VehicleState& other_pre, EgoManeuver ego_maneuver,
                            Maneuver other_maneuver, bool non_ego_collision) {
  CrashRecord r;
  r.episode = episode;
  r.collision_step = collision_step;
  r.ego_pre = ego_pre;
  r.other_pre = other_pre;
  r.ego_maneuver = ego_maneuver;
  r.other_maneuver = other_maneuver;
  r.type = ClassifyCollisionType(ego_pre, other_pre);
  r.group = ClassifyGroup(r.type, ego_maneuver, other_maneuver);
  r.ego_speed = ego_pre.Speed();
  r.ego_lane = ego_pre.lane;
  r.non_ego_collision = non_ego_collision;
  return r;
}

std::array<double, 3> CrashStats::GroupPercentages() const {
  std::array<double, 3> out{};
  if (total == 0) return out;
  for (int g = 0; g < kCrashGroupCount; ++g) out[g] = 100.0 * group_counts[g] / total;
  return out;
}

double CrashStats::NonEgoFraction() const {
  return total == 0 ? 0.0 : static_cast<double>(with_non_ego) / total;
}

int SpeedBin(double speed) {
  const int bin = static_cast<int>(std::floor(speed / 5.0));
  return std::clamp(bin, 0, kSpeedBinCount - 1);
}

CrashStats Aggregate(std::span<const CrashRecord> crashes, int lane_count) {
  CrashStats stats;
  stats.lane_counts.assign(std::max(lane_count, 0), 0);
  for (const CrashRecord& c : crashes) {
    ++stats.maneuver_matrix[static_cast<int>(c.ego_maneuver)]
                           [static_cast<int>(c.other_maneuver)];
    ++stats.type_counts[static_cast<int>(c.type)];
    ++stats.group_counts[static_cast<int>(c.group)];
    ++stats.speed_histogram[SpeedBin(c.ego_speed)];
    if (c.ego_lane >= 0 && c.ego_lane < lane_count) ++stats.lane_counts[c.ego_lane];
    if (c.non_ego_collision) {
      ++stats.with_non_ego;
    } else {
      ++stats.ego_only;
    }
    ++stats.total;
  }
  return stats;
}

double EuclideanDistance(const PercentTriple& a, const PercentTriple& b) {
  double sum = 0.0;
  for (int i = 0; i < 3; ++i) sum += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(sum);
}

CalibrationResult CalibrateFromPercentages(std::span<const CalibrationRow> rows,
                                           const PercentTriple& observed) {
  if (rows.empty()) throw std::invalid_argument("no lambda runs with crashes to calibrate");
  CalibrationResult result;
  for (const CalibrationRow& in : rows) {
    CalibrationRow row = in;
    row.distance = EuclideanDistance(row.percentages, observed);
    result.rows.push_back(row);
  }
  const auto it = std::min_element(
      result.rows.begin(), result.rows.end(), [](const CalibrationRow& a, const CalibrationRow& b) {
        return a.distance < b.distance || (a.distance == b.distance && a.lambda < b.lambda);
      });
  result.best_lambda = it->lambda;
  if (result.rows.size() == 1) {
    result.warnings.push_back("only one lambda value available; it is selected by default");
  }
  return result;
}

CalibrationResult CalibrateLambda(std::span<const LambdaRun> runs, const PercentTriple& observed) {
  std::vector<CalibrationRow> rows;
  std::vector<std::string> warnings;
  for (const LambdaRun& run : runs) {
    const int total = run.group_counts[0] + run.group_counts[1] + run.group_counts[2];
    if (total == 0) {
      std::ostringstream msg;
      msg << "lambda " << run.lambda << " produced no crashes and is excluded";
      warnings.push_back(msg.str());
      continue;
    }
    CalibrationRow row;
    row.lambda = run.lambda;
    for (int g = 0; g < 3; ++g) row.percentages[g] = 100.0 * run.group_counts[g] / total;
    rows.push_back(row);
  }
  CalibrationResult result = CalibrateFromPercentages(rows, observed);
  result.warnings.insert(result.warnings.begin(), warnings.begin(), warnings.end());
  return result;
}

}  // namespace lanestress
