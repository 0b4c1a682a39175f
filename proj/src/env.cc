#include "lanestress/env.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace lanestress {

void EnvConfig::Validate() const {
  road.Validate();
  uidm.Validate();
  mobil.Validate();
  controller.Validate();
  reward.Validate();
  if (n_vehicles < 1) throw std::invalid_argument("n_vehicles must be >= 1");
  if (observed_count < 0) throw std::invalid_argument("observed_count must be >= 0");
}

std::vector<double> Observation::Flatten() const {
  std::vector<double> out = nearest;
  out.insert(out.end(), slots.begin(), slots.end());
  return out;
}

namespace {

void AppendRow(const WorldState& world, const VehicleState& ego, const VehicleState& v,
               double radius, std::vector<double>* out) {
  const double speed = world.road.speed_limit;
  out->push_back((v.x - ego.x) / radius);
  out->push_back((v.y - ego.y) / world.road.Width());
  out->push_back((v.vx - ego.vx) / speed);
  out->push_back((v.vy - ego.vy) / speed);
  out->push_back(1.0);
}

}  // namespace

std::vector<double> EncodeObservation(const WorldState& world, std::size_t ego_index,
                                      int n, double radius) {
  const VehicleState& ego = world.vehicles[ego_index];
  std::vector<std::pair<double, int>> order;  // (distance, vehicle index)
  for (std::size_t i = 0; i < world.vehicles.size(); ++i) {
    if (i == ego_index) continue;
    const VehicleState& v = world.vehicles[i];
    order.emplace_back(std::hypot(v.x - ego.x, v.y - ego.y), static_cast<int>(i));
  }
  std::sort(order.begin(), order.end(), [&](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first < b.first;
    return world.vehicles[a.second].id < world.vehicles[b.second].id;
  });

  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(n) * kObservationColumns);
  for (int r = 0; r < n; ++r) {
    if (r < static_cast<int>(order.size())) {
      AppendRow(world, ego, world.vehicles[order[r].second], radius, &out);
    } else {
      out.insert(out.end(), kObservationColumns, 0.0);
    }
  }
  return out;
}

AstEnv::AstEnv(EnvConfig config) : config_(std::move(config)) { config_.Validate(); }

Observation AstEnv::Reset(std::uint64_t seed, int episode) {
  seed_ = seed;
  episode_ = episode;
  world_ = InitWorld(config_.road, config_.n_vehicles, seed, config_.spawn);
  drivers_.assign(world_.vehicles.size(), Driver{});
  for (std::size_t i = 0; i < world_.vehicles.size(); ++i) {
    drivers_[i].targets.target_speed = world_.vehicles[i].vx;
    drivers_[i].targets.target_lane = world_.vehicles[i].lane;
  }
  state_ = EnvState{};
  state_.controlled_ids.fill(-1);
  status_ = EpisodeStatus::kRunning;
  non_ego_pairs_.clear();
  crash_.reset();
  reset_ = true;

  trace_ = ScenarioTrace{};
  trace_.header.episode = episode;
  trace_.header.episode_seed = seed;
  trace_.header.lambda = config_.reward.lambda;
  trace_.header.t_delta = config_.reward.t_delta;
  trace_.header.initial = world_.vehicles;

  Observation obs = CurrentObservation();
  state_.o_env = obs.nearest;
  return obs;
}

Observation AstEnv::CurrentObservation() const {
  Observation obs;
  const double radius = config_.reward.d;
  obs.nearest = EncodeObservation(world_, 0, config_.observed_count, radius);
  const NeighborSet n = FindNeighbors(world_, 0, radius);
  obs.slots.reserve(kSlotCount * kObservationColumns);
  for (int k = 0; k < kSlotCount; ++k) {
    if (n.slots[k]) {
      AppendRow(world_, world_.vehicles[0], world_.vehicles[*n.slots[k]], radius, &obs.slots);
      obs.slot_mask[k] = true;
    } else {
      obs.slots.insert(obs.slots.end(), kObservationColumns, 0.0);
    }
  }
  return obs;
}

KinematicCommand AstEnv::Command(const LaneIndex& lanes, std::size_t i) const {
  const Driver& d = drivers_[i];
  const VehicleState& v = world_.vehicles[i];
  if (d.crashed) return {config_.uidm.a_min, 0.0};
  if (d.controlled) {
    return TrackTargets(v, d.targets, world_.road, config_.controller, config_.uidm,
                        world_.physics_dt);
  }
  return UidmAct(world_, lanes, i, d.targets, config_.uidm, config_.controller);
}

Maneuver AstEnv::Activity(std::size_t i, double first_accel) const {
  const Driver& d = drivers_[i];
  if (d.crashed) return Maneuver::kDecelerate;
  if (d.targets.changing()) {
    const double offset = world_.road.LaneCenter(d.targets.target_lane) - world_.vehicles[i].y;
    if (offset < 0.0) return Maneuver::kLaneLeft;
    if (offset > 0.0) return Maneuver::kLaneRight;
  }
  if (d.controlled) {
    return IsLaneChange(d.command) ? Maneuver::kConstantSpeed : d.command;
  }
  if (first_accel > 0.5) return Maneuver::kAccelerate;
  if (first_accel < -0.5) return Maneuver::kDecelerate;
  return Maneuver::kConstantSpeed;
}

StepResult AstEnv::Step(const EnvAction& action) {
  if (!reset_) throw std::logic_error("Step called before Reset");
  if (IsTerminal()) throw StepAfterTerminalError("Step called on a terminal episode");

  const WorldState pre = world_;
  const std::size_t n = world_.vehicles.size();
  const RoadConfig& road = world_.road;

  // Decode the action onto the ego's current slot neighbors.
  const NeighborSet controlled = FindNeighbors(world_, 0, config_.reward.d);
  for (Driver& d : drivers_) d.controlled = false;
  state_.a_env = {};
  state_.controlled_ids.fill(-1);
  for (int k = 0; k < kSlotCount; ++k) {
    if (!controlled.slots[k]) continue;
    const std::size_t i = *controlled.slots[k];
    const VehicleState& v = world_.vehicles[i];
    state_.controlled_ids[k] = v.id;
    Driver& d = drivers_[i];
    if (!action[k] || d.crashed) continue;
    if (!d.ever_controlled) {
      d.targets.target_speed = v.vx;
      d.ever_controlled = true;
    }
    d.command = ApplyManeuver(*action[k], v, road, config_.controller, &d.targets);
    d.controlled = true;
    state_.a_env[k] = ManeuverCommand{*action[k], world_.time()};
  }

  // Lane decisions of the self-driving vehicles, ego included.
  {
    const LaneIndex lanes(world_);
    for (std::size_t i = 0; i < n; ++i) {
      Driver& d = drivers_[i];
      if (d.controlled || d.crashed || d.targets.changing()) continue;
      const VehicleState& v = world_.vehicles[i];
      d.targets.target_lane = v.lane;
      switch (MobilDecide(world_, lanes, i, config_.uidm, config_.mobil)) {
        case LaneDecision::kChangeLeft:
          StartLaneChange(v.lane - 1, config_.controller, &d.targets);
          break;
        case LaneDecision::kChangeRight:
          StartLaneChange(v.lane + 1, config_.controller, &d.targets);
          break;
        case LaneDecision::kKeepLane:
          break;
      }
    }
  }

  std::vector<Maneuver> activity(n, Maneuver::kConstantSpeed);
  std::set<std::pair<int, int>> step_collisions;
  bool failure = false;
  const int substeps = world_.SubstepsPerDecision();
  std::vector<KinematicCommand> commands(n);
  for (int s = 0; s < substeps && !failure; ++s) {
    {
      const LaneIndex lanes(world_);
      for (std::size_t i = 0; i < n; ++i) commands[i] = Command(lanes, i);
    }
    if (s == 0) {
      for (std::size_t i = 0; i < n; ++i) activity[i] = Activity(i, commands[i].accel);
    }
    state_.a_ego = commands[0];
    world_ = StepKinematics(world_, commands, world_.physics_dt);
    for (Driver& d : drivers_) AdvanceLaneChange(world_.physics_dt, &d.targets);

    for (const auto& pair : DetectCollisions(world_)) {
      step_collisions.insert(pair);
      if (pair.first == 0) {
        failure = true;
      } else {
        non_ego_pairs_.insert(pair);
        for (const int id : {pair.first, pair.second}) {
          Driver& d = drivers_[*world_.IndexOf(id)];
          d.crashed = true;
          d.targets.change_time_left = 0.0;
        }
      }
    }
  }

  ++state_.step_index;
  if (failure) {
    status_ = EpisodeStatus::kFailure;
  } else if (state_.step_index >= config_.reward.horizon_T) {
    status_ = EpisodeStatus::kHorizonExceeded;
  }

  StepResult result;
  const RewardBreakdown rb = EvaluateReward(status_, world_, 0, config_.reward);
  result.reward = rb.reward;
  result.status = status_;
  result.info.min_ttc = rb.min_ttc;
  result.info.phi = rb.phi;
  result.info.psi = rb.psi;
  result.info.collisions.assign(step_collisions.begin(), step_collisions.end());

  if (failure) {
    // The ego's partner with the smallest id defines the crash.
    const auto partner = std::find_if(step_collisions.begin(), step_collisions.end(),
                                      [](const auto& p) { return p.first == 0; });
    const std::size_t other = *pre.IndexOf(partner->second);
    const Maneuver ego_activity = activity[0];
    const EgoManeuver ego_maneuver = ego_activity == Maneuver::kLaneLeft    ? EgoManeuver::kLeft
                                     : ego_activity == Maneuver::kLaneRight ? EgoManeuver::kRight
                                                                            : EgoManeuver::kStraight;
    try {
      crash_ = MakeCrashRecord(episode_, state_.step_index, pre.vehicles[0], pre.vehicles[other],
                               ego_maneuver, activity[other], !non_ego_pairs_.empty());
    } catch (const DataCorruptionError&) {
      // Two lanes apart one decision earlier: fall back to the contact state.
      crash_ = MakeCrashRecord(episode_, state_.step_index, world_.vehicles[0],
                               world_.vehicles[*world_.IndexOf(partner->second)], ego_maneuver,
                               activity[other], !non_ego_pairs_.empty());
    }
  }

  result.observation = CurrentObservation();
  state_.o_env = result.observation.nearest;

  if (tracing_) {
    StepRecord rec;
    rec.step = state_.step_index;
    rec.action = action;
    rec.controlled = state_.controlled_ids;
    rec.reward = rb.reward;
    rec.phi = rb.phi;
    rec.psi = rb.psi;
    rec.min_ttc = rb.min_ttc;
    rec.status = status_;
    rec.vehicles = world_.vehicles;
    rec.activity = activity;
    rec.collisions = result.info.collisions;
    trace_.steps.push_back(std::move(rec));
  }
  return result;
}

ScenarioTrace AstEnv::TakeTrace() {
  ScenarioTrace out = std::move(trace_);
  out.footer.status = status_;
  out.footer.steps = static_cast<int>(out.steps.size());
  out.footer.crash = crash_;
  out.footer.non_ego_collisions.assign(non_ego_pairs_.begin(), non_ego_pairs_.end());
  trace_ = ScenarioTrace{};
  return out;
}

}  // namespace lanestress
