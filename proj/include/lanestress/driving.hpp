#ifndef LANESTRESS_DRIVING_HPP_
#define LANESTRESS_DRIVING_HPP_

#include <array>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string_view>

#include "lanestress/world.hpp"

namespace lanestress {

enum class BrakingSign {
  kMinus,          // a_max * (a_acc - a_dec^2), reduces to plain IDM at epsilon = 0
  kPlusAsWritten,  // a_max * (a_acc + a_dec^2), the literal printed form
};

struct UidmParams {
  double v0 = 25.0;
  double s0 = 10.0;
  double mu = 1.5;
  double delta = 4.0;
  double epsilon = 0.4;
  double a_max = 3.0;
  double a_min = -5.0;
  BrakingSign braking_sign = BrakingSign::kMinus;

  void Validate() const;
};

struct MobilParams {
  double a_safe = -2.0;
  double rho = 0.0;
  double delta_a_th = 0.2;

  void Validate() const;
};

enum class Maneuver : int {
  kLaneLeft = 0,
  kLaneRight = 1,
  kConstantSpeed = 2,
  kAccelerate = 3,
  kDecelerate = 4,
};
inline constexpr int kManeuverCount = 5;

std::string_view ManeuverName(Maneuver m);

// One maneuver per neighbor slot of the ego (see Slot); nullopt leaves the
// vehicle in that slot on its own uIDM driver.
using EnvAction = std::array<std::optional<Maneuver>, kSlotCount>;

struct ManeuverCommand {
  Maneuver kind = Maneuver::kConstantSpeed;
  double issued_at = 0.0;
};

// Gains of the low-level tracking controller shared by every vehicle.
struct ControllerParams {
  double speed_gain = 1.0 / 0.6;     // K_v, 1/s
  double lane_change_duration = 2.0;  // s
  double speed_step = 5.0;            // target speed change per Accelerate/Decelerate
  double lateral_cap_factor = 1.5;

  double LateralSpeedCap(double lane_width) const {
    return lane_width / lane_change_duration * lateral_cap_factor;
  }
  void Validate() const;
};

// Per-vehicle tracking targets. A lane change is in progress while
// change_time_left > 0.
struct LowLevelTargets {
  double target_speed = 0.0;
  int target_lane = 0;
  double change_time_left = 0.0;

  bool changing() const { return change_time_left > 0.0; }
};

class NonPositiveGapError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// s* = s0 + mu * v + v * dv / (2 sqrt|a_max a_min|), never below s0.
double DesiredGap(double v_follow, double dv, const UidmParams& p);

struct GapNeighbor {
  double speed = 0.0;
  double gap = 0.0;  // bumper-to-bumper, must be > 0
};

// Back-looking IDM acceleration clamped to [a_min, a_max]. Throws
// NonPositiveGapError if a provided gap is <= 0.
double UidmLongitudinal(double v_ego, const std::optional<GapNeighbor>& leader,
                        const std::optional<GapNeighbor>& follower,
                        const UidmParams& p);

double BumperGap(const VehicleState& rear, const VehicleState& front);

// Accelerations before (a_*) and after (*_new) a candidate lane change for the
// changing vehicle (e), the new follower (n) and the old follower (o).
struct MobilAccelerations {
  double a_e = 0.0, a_e_new = 0.0;
  double a_n = 0.0, a_n_new = 0.0;
  double a_o = 0.0, a_o_new = 0.0;
};

struct MobilVerdict {
  bool safe = false;
  double incentive = 0.0;
  bool accepted = false;
};

MobilVerdict EvaluateMobil(const MobilAccelerations& acc, const MobilParams& p);

enum class LaneDecision { kKeepLane, kChangeLeft, kChangeRight };

// Computes the hypothetical accelerations for both sides with plain
// car-following (no back-looking term) and applies the safety and incentive
// criteria. The larger accepted incentive wins; ties keep the lane.
LaneDecision MobilDecide(const WorldState& world, const LaneIndex& lanes,
                         std::size_t vehicle_index, const UidmParams& p_idm,
                         const MobilParams& p_mobil);

void StartLaneChange(int target_lane, const ControllerParams& ctrl,
                     LowLevelTargets* targets);
void AdvanceLaneChange(double dt, LowLevelTargets* targets);

// Lateral velocity that tracks the target lane center; lane changes spread
// the remaining offset over the remaining time.
double LateralVelocity(const VehicleState& v, const LowLevelTargets& targets,
                       const RoadConfig& road, const ControllerParams& ctrl,
                       double dt);

// Longitudinal uIDM acceleration against the leader/follower of the current
// lane, or of the target lane once a change is underway. Overlapping
// neighbors are treated as already collided (full braking).
double UidmAccel(const WorldState& world, const LaneIndex& lanes,
                 std::size_t vehicle_index, const LowLevelTargets& targets,
                 const UidmParams& p);

// Ego action (a_x, a_y) of a uIDM-driven vehicle for one physics step.
KinematicCommand UidmAct(const WorldState& world, const LaneIndex& lanes,
                         std::size_t vehicle_index, const LowLevelTargets& targets,
                         const UidmParams& p, const ControllerParams& ctrl);

// Updates targets for a discrete maneuver and returns the maneuver actually
// applied: lane changes off the road edge or during an ongoing change become
// ConstantSpeed.
Maneuver ApplyManeuver(Maneuver kind, const VehicleState& v, const RoadConfig& road,
                       const ControllerParams& ctrl, LowLevelTargets* targets);

KinematicCommand TrackTargets(const VehicleState& v, const LowLevelTargets& targets,
                              const RoadConfig& road, const ControllerParams& ctrl,
                              const UidmParams& limits, double dt);

// ApplyManeuver followed by one TrackTargets evaluation.
KinematicCommand ExecuteManeuver(const VehicleState& v, const ManeuverCommand& cmd,
                                 const RoadConfig& road, const ControllerParams& ctrl,
                                 const UidmParams& limits, double dt,
                                 LowLevelTargets* targets);

}  // namespace lanestress

#endif  // LANESTRESS_DRIVING_HPP_
