#include "lanestress/world.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "lanestress/rng.hpp"

namespace lanestress {

void RoadConfig::Validate() const {
  if (lane_count < 2) throw std::invalid_argument("lane_count must be >= 2");
  if (!(lane_width > 0.0)) throw std::invalid_argument("lane_width must be > 0");
  if (!(speed_limit > 0.0)) throw std::invalid_argument("speed_limit must be > 0");
  if (!(road_length > 0.0)) throw std::invalid_argument("road_length must be > 0");
}

int RoadConfig::NearestLane(double y) const {
  const long lane = std::lround(y / lane_width);
  return static_cast<int>(std::clamp<long>(lane, 0, lane_count - 1));
}

double VehicleGeometry::HalfDiagonal() const {
  return 0.5 * std::hypot(length, width);
}

double VehicleState::Speed() const { return std::hypot(vx, vy); }

int WorldState::SubstepsPerDecision() const {
  return static_cast<int>(std::lround(policy_dt / physics_dt));
}

std::optional<std::size_t> WorldState::IndexOf(int id) const {
  for (std::size_t i = 0; i < vehicles.size(); ++i) {
    if (vehicles[i].id == id) return i;
  }
  return std::nullopt;
}

WorldState InitWorld(const RoadConfig& config, int n_vehicles,
                     std::uint64_t seed, const SpawnOptions& options) {
  config.Validate();
  if (n_vehicles < 1) throw std::invalid_argument("n_vehicles must be >= 1");
  if (!(options.min_gap > 0.0)) throw std::invalid_argument("min_gap must be > 0");
  if (options.geometry.length <= 0.0 || options.geometry.width <= 0.0) {
    throw std::invalid_argument("vehicle geometry must be positive");
  }
  if (options.initial_speed_min > options.initial_speed ||
      options.initial_speed_min < 0.0) {
    throw std::invalid_argument("initial_speed_min must lie in [0, initial_speed]");
  }
  const double ratio = options.policy_dt / options.physics_dt;
  if (!(options.physics_dt > 0.0) || ratio < 1.0 ||
      std::abs(ratio - std::round(ratio)) > 1e-9) {
    throw std::invalid_argument("policy_dt must be an integer multiple of physics_dt");
  }

  Rng rng(seed);
  const int lanes = config.lane_count;
  const int ego_lane = rng.UniformInt(lanes);

  // Round-robin the other vehicles over a shuffled lane order.
  std::vector<int> order(lanes);
  std::iota(order.begin(), order.end(), 0);
  for (int i = lanes - 1; i > 0; --i) {
    std::swap(order[i], order[rng.UniformInt(i + 1)]);
  }
  std::vector<int> members(lanes, 0);
  for (int i = 0; i < n_vehicles - 1; ++i) ++members[order[i % lanes]];
  const int ego_rank = std::min(1, members[ego_lane]);
  ++members[ego_lane];

  const int k_max = *std::max_element(members.begin(), members.end());
  const double gap = options.min_gap;
  const double budget = config.road_length - (k_max - 1) * gap;
  if (budget < 0.0) {
    throw PlacementError("road_length " + std::to_string(config.road_length) +
                         " m cannot hold " + std::to_string(k_max) +
                         " vehicles per lane at " + std::to_string(gap) +
                         " m spacing");
  }
  const double start_spread = std::min(gap, budget);
  const double jitter =
      k_max > 1 ? std::min(options.gap_jitter, (budget - start_spread) / (k_max - 1))
                : 0.0;

  WorldState world;
  world.road = config;
  world.rng_seed = seed;
  world.physics_dt = options.physics_dt;
  world.policy_dt = options.policy_dt;

  VehicleState ego;
  std::vector<VehicleState> others;
  others.reserve(n_vehicles - 1);
  int next_id = 1;
  for (int lane = 0; lane < lanes; ++lane) {
    double x = rng.Uniform(0.0, start_spread);
    for (int rank = 0; rank < members[lane]; ++rank) {
      if (rank > 0) x += gap + rng.Uniform(0.0, std::max(jitter, 0.0));
      VehicleState v;
      v.x = x;
      v.y = config.LaneCenter(lane);
      v.lane = lane;
      v.geometry = options.geometry;
      if (lane == ego_lane && rank == ego_rank) {
        v.id = 0;
        v.is_ego = true;
        ego = v;
      } else {
        v.id = next_id++;
        others.push_back(v);
      }
    }
  }

  world.vehicles.reserve(n_vehicles);
  world.vehicles.push_back(ego);
  world.vehicles.insert(world.vehicles.end(), others.begin(), others.end());
  for (auto& v : world.vehicles) {
    v.vx = options.initial_speed_min < options.initial_speed
               ? rng.Uniform(options.initial_speed_min, options.initial_speed)
               : options.initial_speed;
  }
  return world;
}

WorldState StepKinematics(const WorldState& world,
                          std::span<const KinematicCommand> commands, double dt) {
  if (commands.size() != world.vehicles.size()) {
    throw CommandCountError("expected " + std::to_string(world.vehicles.size()) +
                            " commands, got " + std::to_string(commands.size()));
  }
  WorldState next = world;
  const RoadConfig& road = world.road;
  const double max_speed = road.speed_limit * 1.2;
  for (std::size_t i = 0; i < next.vehicles.size(); ++i) {
    VehicleState& v = next.vehicles[i];
    const KinematicCommand& cmd = commands[i];
    v.vx = std::clamp(v.vx + cmd.accel * dt, 0.0, max_speed);
    v.x += v.vx * dt;
    v.vy = cmd.lateral_velocity;
    v.y += v.vy * dt;
    if (v.y < road.MinY() || v.y > road.MaxY()) {
      v.y = std::clamp(v.y, road.MinY(), road.MaxY());
      v.vy = 0.0;
    }
    v.heading = (v.vx == 0.0 && v.vy == 0.0) ? 0.0 : std::atan2(v.vy, v.vx);
    v.lane = road.NearestLane(v.y);
  }
  ++next.physics_steps;
  return next;
}

std::vector<std::size_t> NeighborSet::Members() const {
  std::vector<std::size_t> out;
  for (const auto& s : slots) {
    if (s) out.push_back(*s);
  }
  return out;
}

std::size_t NeighborSet::size() const {
  return static_cast<std::size_t>(
      std::count_if(slots.begin(), slots.end(), [](const auto& s) { return s.has_value(); }));
}

NeighborSet FindNeighbors(const WorldState& world, std::size_t vehicle_index,
                          double radius) {
  NeighborSet result;
  std::array<double, kSlotCount> best{};
  const VehicleState& self = world.vehicles.at(vehicle_index);
  for (std::size_t j = 0; j < world.vehicles.size(); ++j) {
    if (j == vehicle_index) continue;
    const VehicleState& other = world.vehicles[j];
    const int dl = other.lane - self.lane;
    if (dl < -1 || dl > 1) continue;
    const double dx = other.x - self.x;
    const double dist = std::abs(dx);
    if (dist > radius) continue;
    const int slot = (dx >= 0.0 ? 0 : 3) + (dl + 1);
    auto& current = result.slots[slot];
    if (!current || dist < best[slot] ||
        (dist == best[slot] && other.id < world.vehicles[*current].id)) {
      current = j;
      best[slot] = dist;
    }
  }
  return result;
}

namespace {

struct Box {
  double cx, cy;
  double ux, uy;  // unit longitudinal axis
  double half_length, half_width;
};

Box MakeBox(const VehicleState& v) {
  return {v.x, v.y, std::cos(v.heading), std::sin(v.heading),
          0.5 * v.geometry.length, 0.5 * v.geometry.width};
}

double ProjectedRadius(const Box& b, double ax, double ay) {
  // Lateral axis is (-uy, ux).
  return b.half_length * std::abs(b.ux * ax + b.uy * ay) +
         b.half_width * std::abs(-b.uy * ax + b.ux * ay);
}

}  // namespace

bool RectanglesIntersect(const VehicleState& a, const VehicleState& b) {
  const Box ba = MakeBox(a);
  const Box bb = MakeBox(b);
  const double dx = bb.cx - ba.cx;
  const double dy = bb.cy - ba.cy;
  const std::array<std::array<double, 2>, 4> axes = {{
      {ba.ux, ba.uy},
      {-ba.uy, ba.ux},
      {bb.ux, bb.uy},
      {-bb.uy, bb.ux},
  }};
  for (const auto& axis : axes) {
    const double distance = std::abs(dx * axis[0] + dy * axis[1]);
    if (distance > ProjectedRadius(ba, axis[0], axis[1]) +
                       ProjectedRadius(bb, axis[0], axis[1])) {
      return false;
    }
  }
  return true;
}

std::vector<std::pair<int, int>> DetectCollisions(const WorldState& world) {
  const auto& vs = world.vehicles;
  std::vector<std::size_t> order(vs.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return vs[a].x < vs[b].x; });
  double max_reach = 0.0;
  for (const auto& v : vs) max_reach = std::max(max_reach, v.geometry.HalfDiagonal());

  std::vector<std::pair<int, int>> pairs;
  for (std::size_t i = 0; i < order.size(); ++i) {
    const VehicleState& a = vs[order[i]];
    for (std::size_t j = i + 1; j < order.size(); ++j) {
      const VehicleState& b = vs[order[j]];
      if (b.x - a.x > 2.0 * max_reach) break;
      if (RectanglesIntersect(a, b)) {
        pairs.emplace_back(std::min(a.id, b.id), std::max(a.id, b.id));
      }
    }
  }
  std::sort(pairs.begin(), pairs.end());
  return pairs;
}

LaneIndex::LaneIndex(const WorldState& world)
    : world_(&world), by_lane_(world.road.lane_count) {
  for (std::size_t i = 0; i < world.vehicles.size(); ++i) {
    by_lane_[world.vehicles[i].lane].push_back(i);
  }
  for (auto& lane : by_lane_) {
    std::sort(lane.begin(), lane.end(), [&](std::size_t a, std::size_t b) {
      const auto& va = world.vehicles[a];
      const auto& vb = world.vehicles[b];
      return va.x < vb.x || (va.x == vb.x && va.id < vb.id);
    });
  }
}

std::optional<std::size_t> LaneIndex::Leader(int lane, double x,
                                             std::size_t exclude) const {
  if (lane < 0 || lane >= static_cast<int>(by_lane_.size())) return std::nullopt;
  const auto& ids = by_lane_[lane];
  auto it = std::lower_bound(ids.begin(), ids.end(), x, [&](std::size_t i, double value) {
    return world_->vehicles[i].x < value;
  });
  for (; it != ids.end(); ++it) {
    if (*it != exclude) return *it;
  }
  return std::nullopt;
}

std::optional<std::size_t> LaneIndex::Follower(int lane, double x,
                                               std::size_t exclude) const {
  if (lane < 0 || lane >= static_cast<int>(by_lane_.size())) return std::nullopt;
  const auto& ids = by_lane_[lane];
  auto it = std::lower_bound(ids.begin(), ids.end(), x, [&](std::size_t i, double value) {
    return world_->vehicles[i].x < value;
  });
  while (it != ids.begin()) {
    --it;
    if (*it != exclude) return *it;
  }
  return std::nullopt;
}

}  // namespace lanestress
