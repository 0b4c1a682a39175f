#include "lanestress/driving.hpp"

#include <algorithm>
#include <cmath>

namespace lanestress {

void UidmParams::Validate() const {
  if (!(v0 > 0.0)) throw std::invalid_argument("v0 must be > 0");
  if (!(s0 > 0.0)) throw std::invalid_argument("s0 must be > 0");
  if (!(mu >= 0.0)) throw std::invalid_argument("mu must be >= 0");
  if (!(delta > 0.0)) throw std::invalid_argument("delta must be > 0");
  if (!(epsilon >= 0.0 && epsilon < 1.0)) {
    throw std::invalid_argument("epsilon must lie in [0, 1)");
  }
  if (!(a_max > 0.0 && a_min < 0.0)) {
    throw std::invalid_argument("a_max must be > 0 > a_min");
  }
}

void MobilParams::Validate() const {
  if (!(a_safe < 0.0)) throw std::invalid_argument("a_safe must be < 0");
  if (!(rho >= 0.0)) throw std::invalid_argument("rho must be >= 0");
  if (!(delta_a_th >= 0.0)) throw std::invalid_argument("delta_a_th must be >= 0");
}

void ControllerParams::Validate() const {
  if (!(speed_gain > 0.0)) throw std::invalid_argument("speed_gain must be > 0");
  if (!(lane_change_duration > 0.0)) {
    throw std::invalid_argument("lane_change_duration must be > 0");
  }
  if (!(speed_step >= 0.0)) throw std::invalid_argument("speed_step must be >= 0");
  if (!(lateral_cap_factor > 0.0)) {
    throw std::invalid_argument("lateral_cap_factor must be > 0");
  }
}

std::string_view ManeuverName(Maneuver m) {
  switch (m) {
    case Maneuver::kLaneLeft: return "LaneLeft";
    case Maneuver::kLaneRight: return "LaneRight";
    case Maneuver::kConstantSpeed: return "ConstantSpeed";
    case Maneuver::kAccelerate: return "Accelerate";
    case Maneuver::kDecelerate: return "Decelerate";
  }
  return "?";
}

double DesiredGap(double v_follow, double dv, const UidmParams& p) {
  const double dynamic =
      p.mu * v_follow + v_follow * dv / (2.0 * std::sqrt(std::abs(p.a_max * p.a_min)));
  return p.s0 + std::max(dynamic, 0.0);
}

double UidmLongitudinal(double v_ego, const std::optional<GapNeighbor>& leader,
                        const std::optional<GapNeighbor>& follower,
                        const UidmParams& p) {
  const double a_acc = 1.0 - std::pow(v_ego / p.v0, p.delta);
  double a_dec = 0.0;
  if (leader) {
    if (!(leader->gap > 0.0)) throw NonPositiveGapError("leader gap must be > 0");
    a_dec += DesiredGap(v_ego, v_ego - leader->speed, p) / leader->gap;
  }
  if (follower) {
    if (!(follower->gap > 0.0)) throw NonPositiveGapError("follower gap must be > 0");
    a_dec -= p.epsilon *
             DesiredGap(follower->speed, follower->speed - v_ego, p) / follower->gap;
  }
  const double braking = a_dec * a_dec;
  const double a = p.braking_sign == BrakingSign::kMinus ? p.a_max * (a_acc - braking)
                                                         : p.a_max * (a_acc + braking);
  return std::clamp(a, p.a_min, p.a_max);
}

double BumperGap(const VehicleState& rear, const VehicleState& front) {
  return front.x - rear.x - 0.5 * (front.geometry.length + rear.geometry.length);
}

MobilVerdict EvaluateMobil(const MobilAccelerations& acc, const MobilParams& p) {
  MobilVerdict verdict;
  verdict.safe = acc.a_n_new > p.a_safe;
  verdict.incentive =
      (acc.a_e_new - acc.a_e) +
      p.rho * ((acc.a_n_new - acc.a_n) + (acc.a_o_new - acc.a_o));
  verdict.accepted = verdict.safe && verdict.incentive >= p.delta_a_th;
  return verdict;
}

namespace {

// Plain car-following acceleration of `rear` behind `front`, or free-road when
// there is no front vehicle. Returns nullopt when the two overlap.
std::optional<double> FollowAccel(const VehicleState& rear, const VehicleState* front,
                                  const UidmParams& plain) {
  if (front == nullptr) {
    return UidmLongitudinal(rear.vx, std::nullopt, std::nullopt, plain);
  }
  const double gap = BumperGap(rear, *front);
  if (!(gap > 0.0)) return std::nullopt;
  return UidmLongitudinal(rear.vx, GapNeighbor{front->vx, gap}, std::nullopt, plain);
}

const VehicleState* Lookup(const WorldState& world, std::optional<std::size_t> i) {
  return i ? &world.vehicles[*i] : nullptr;
}

}  // namespace

LaneDecision MobilDecide(const WorldState& world, const LaneIndex& lanes,
                         std::size_t vehicle_index, const UidmParams& p_idm,
                         const MobilParams& p_mobil) {
  UidmParams plain = p_idm;
  plain.epsilon = 0.0;

  const VehicleState& ego = world.vehicles[vehicle_index];
  const VehicleState* old_leader =
      Lookup(world, lanes.Leader(ego.lane, ego.x, vehicle_index));
  const VehicleState* old_follower =
      Lookup(world, lanes.Follower(ego.lane, ego.x, vehicle_index));

  const auto a_e = FollowAccel(ego, old_leader, plain);
  if (!a_e) return LaneDecision::kKeepLane;

  LaneDecision best = LaneDecision::kKeepLane;
  double best_incentive = 0.0;
  for (const int side : {-1, +1}) {
    const int target = ego.lane + side;
    if (!world.road.IsValidLane(target)) continue;
    const VehicleState* new_leader =
        Lookup(world, lanes.Leader(target, ego.x, vehicle_index));
    const VehicleState* new_follower =
        Lookup(world, lanes.Follower(target, ego.x, vehicle_index));

    MobilAccelerations acc;
    acc.a_e = *a_e;
    const auto a_e_new = FollowAccel(ego, new_leader, plain);
    if (!a_e_new) continue;
    acc.a_e_new = *a_e_new;
    if (new_follower != nullptr) {
      const auto a_n = FollowAccel(*new_follower, new_leader, plain);
      const auto a_n_new = FollowAccel(*new_follower, &ego, plain);
      if (!a_n || !a_n_new) continue;
      acc.a_n = *a_n;
      acc.a_n_new = *a_n_new;
    }
    if (old_follower != nullptr) {
      const auto a_o = FollowAccel(*old_follower, &ego, plain);
      const auto a_o_new = FollowAccel(*old_follower, old_leader, plain);
      if (a_o && a_o_new) {
        acc.a_o = *a_o;
        acc.a_o_new = *a_o_new;
      }
    }
    const MobilVerdict verdict = EvaluateMobil(acc, p_mobil);
    if (!verdict.accepted) continue;
    if (best == LaneDecision::kKeepLane || verdict.incentive > best_incentive) {
      best = side < 0 ? LaneDecision::kChangeLeft : LaneDecision::kChangeRight;
      best_incentive = verdict.incentive;
    } else if (verdict.incentive == best_incentive) {
      best = LaneDecision::kKeepLane;
    }
  }
  return best;
}

void StartLaneChange(int target_lane, const ControllerParams& ctrl,
                     LowLevelTargets* targets) {
  targets->target_lane = target_lane;
  targets->change_time_left = ctrl.lane_change_duration;
}

void AdvanceLaneChange(double dt, LowLevelTargets* targets) {
  if (!targets->changing()) return;
  targets->change_time_left -= dt;
  if (targets->change_time_left <= 1e-9) targets->change_time_left = 0.0;
}

double LateralVelocity(const VehicleState& v, const LowLevelTargets& targets,
                       const RoadConfig& road, const ControllerParams& ctrl,
                       double dt) {
  const double offset = road.LaneCenter(targets.target_lane) - v.y;
  const double horizon = std::max(targets.change_time_left, dt);
  const double cap = ctrl.LateralSpeedCap(road.lane_width);
  return std::clamp(offset / horizon, -cap, cap);
}

double UidmAccel(const WorldState& world, const LaneIndex& lanes,
                 std::size_t vehicle_index, const LowLevelTargets& targets,
                 const UidmParams& p) {
  const VehicleState& v = world.vehicles[vehicle_index];
  const int lane = targets.changing() ? targets.target_lane : v.lane;
  std::optional<GapNeighbor> leader;
  std::optional<GapNeighbor> follower;
  if (const auto i = lanes.Leader(lane, v.x, vehicle_index)) {
    const VehicleState& l = world.vehicles[*i];
    const double gap = BumperGap(v, l);
    if (!(gap > 0.0)) return p.a_min;
    leader = GapNeighbor{l.vx, gap};
  }
  if (const auto i = lanes.Follower(lane, v.x, vehicle_index)) {
    const VehicleState& f = world.vehicles[*i];
    const double gap = BumperGap(f, v);
    if (!(gap > 0.0)) return p.a_min;
    follower = GapNeighbor{f.vx, gap};
  }
  return UidmLongitudinal(v.vx, leader, follower, p);
}

KinematicCommand UidmAct(const WorldState& world, const LaneIndex& lanes,
                         std::size_t vehicle_index, const LowLevelTargets& targets,
                         const UidmParams& p, const ControllerParams& ctrl) {
  const VehicleState& v = world.vehicles[vehicle_index];
  return {UidmAccel(world, lanes, vehicle_index, targets, p),
          LateralVelocity(v, targets, world.road, ctrl, world.physics_dt)};
}

Maneuver ApplyManeuver(Maneuver kind, const VehicleState& v, const RoadConfig& road,
                       const ControllerParams& ctrl, LowLevelTargets* targets) {
  if (!targets->changing()) targets->target_lane = v.lane;
  switch (kind) {
    case Maneuver::kLaneLeft:
    case Maneuver::kLaneRight: {
      const int target = v.lane + (kind == Maneuver::kLaneLeft ? -1 : +1);
      if (targets->changing() || !road.IsValidLane(target)) {
        return Maneuver::kConstantSpeed;
      }
      StartLaneChange(target, ctrl, targets);
      return kind;
    }
    case Maneuver::kAccelerate:
      targets->target_speed =
          std::clamp(targets->target_speed + ctrl.speed_step, 0.0, road.speed_limit);
      return kind;
    case Maneuver::kDecelerate:
      targets->target_speed =
          std::clamp(targets->target_speed - ctrl.speed_step, 0.0, road.speed_limit);
      return kind;
    case Maneuver::kConstantSpeed:
      return kind;
  }
  return Maneuver::kConstantSpeed;
}

KinematicCommand TrackTargets(const VehicleState& v, const LowLevelTargets& targets,
                              const RoadConfig& road, const ControllerParams& ctrl,
                              const UidmParams& limits, double dt) {
  const double accel = std::clamp(ctrl.speed_gain * (targets.target_speed - v.vx),
                                   limits.a_min, limits.a_max);
  return {accel, LateralVelocity(v, targets, road, ctrl, dt)};
}

KinematicCommand ExecuteManeuver(const VehicleState& v, const ManeuverCommand& cmd,
                                 const RoadConfig& road, const ControllerParams& ctrl,
                                 const UidmParams& limits, double dt,
                                 LowLevelTargets* targets) {
  ApplyManeuver(cmd.kind, v, road, ctrl, targets);
  return TrackTargets(v, *targets, road, ctrl, limits, dt);
}

}  // namespace lanestress
