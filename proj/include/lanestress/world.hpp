#ifndef LANESTRESS_WORLD_HPP_
#define LANESTRESS_WORLD_HPP_

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

namespace lanestress {

// Straight multi-lane road. Lane k is centered at y = k * lane_width; lane
// index grows towards +y, and "left" means the lower lane index.
struct RoadConfig {
  int lane_count = 4;
  double lane_width = 4.0;
  double speed_limit = 25.0;
  double road_length = 2000.0;  // longitudinal spawn window [0, road_length]

  void Validate() const;

  double LaneCenter(int lane) const { return lane * lane_width; }
  int NearestLane(double y) const;
  // Lateral limits of a vehicle center.
  double MinY() const { return -0.5 * lane_width; }
  double MaxY() const { return (lane_count - 0.5) * lane_width; }
  double Width() const { return lane_count * lane_width; }
  bool IsValidLane(int lane) const { return lane >= 0 && lane < lane_count; }
};

// Rectangular footprint. 5 m x 2 m is a placeholder; the value is exposed in
// the run configuration.
struct VehicleGeometry {
  double length = 5.0;
  double width = 2.0;

  double HalfDiagonal() const;
};

struct VehicleState {
  int id = 0;
  double x = 0.0;
  double y = 0.0;
  double vx = 0.0;
  double vy = 0.0;
  double heading = 0.0;
  int lane = 0;
  VehicleGeometry geometry;
  bool is_ego = false;

  double Speed() const;
};

struct WorldState {
  RoadConfig road;
  std::vector<VehicleState> vehicles;  // ego first
  std::uint64_t rng_seed = 0;
  double physics_dt = 0.1;
  double policy_dt = 1.0;
  std::int64_t physics_steps = 0;

  // Kept as an integer count of physics steps so the clock never drifts.
  double time() const { return static_cast<double>(physics_steps) * physics_dt; }
  int SubstepsPerDecision() const;

  const VehicleState& ego() const { return vehicles.front(); }
  std::optional<std::size_t> IndexOf(int id) const;
};

struct SpawnOptions {
  // Minimum same-lane longitudinal center spacing; defaults to s0 + 2 * length.
  double min_gap = 20.0;
  // Extra random spacing on top of min_gap, shrunk automatically to fit.
  double gap_jitter = 30.0;
  double initial_speed = 25.0;
  // Speeds are drawn uniformly from [initial_speed_min, initial_speed]; equal
  // values mean no jitter.
  double initial_speed_min = 25.0;
  VehicleGeometry geometry;
  double physics_dt = 0.1;
  double policy_dt = 1.0;
};

class PlacementError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class CommandCountError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Places the ego in a random lane with at most one follower behind it and the
// remaining vehicles spread round-robin over the lanes ahead. Deterministic in
// (config, n_vehicles, seed, options).
WorldState InitWorld(const RoadConfig& config, int n_vehicles,
                     std::uint64_t seed, const SpawnOptions& options = {});

struct KinematicCommand {
  double accel = 0.0;        // longitudinal, m/s^2
  double lateral_velocity = 0.0;  // m/s
};

// Forward-Euler step of every vehicle. Throws CommandCountError when the
// command list does not match the vehicle list.
WorldState StepKinematics(const WorldState& world,
                          std::span<const KinematicCommand> commands, double dt);

// Six neighbor slots around a vehicle.
enum class Slot : int {
  kFrontLeft = 0,
  kFrontSame = 1,
  kFrontRight = 2,
  kRearLeft = 3,
  kRearSame = 4,
  kRearRight = 5,
};
inline constexpr int kSlotCount = 6;

struct NeighborSet {
  std::array<std::optional<std::size_t>, kSlotCount> slots;  // vehicle indices

  std::optional<std::size_t> at(Slot s) const {
    return slots[static_cast<int>(s)];
  }
  std::vector<std::size_t> Members() const;
  std::size_t size() const;
  bool empty() const { return size() == 0; }
};

// Nearest vehicle ahead and behind (|dx| <= radius) in the vehicle's own lane
// and the two adjacent lanes. A vehicle level with the query (dx == 0) counts
// as ahead.
NeighborSet FindNeighbors(const WorldState& world, std::size_t vehicle_index,
                          double radius);

// Separating-axis overlap test of the two heading-aligned rectangles.
bool RectanglesIntersect(const VehicleState& a, const VehicleState& b);

// All intersecting vehicle pairs as (smaller id, larger id), sorted.
std::vector<std::pair<int, int>> DetectCollisions(const WorldState& world);

// Per-lane ordering of vehicles for leader/follower lookups.
class LaneIndex {
 public:
  explicit LaneIndex(const WorldState& world);

  // Closest vehicle in `lane` strictly ahead of (or level with) x, skipping
  // `exclude`. Returns a vehicle index.
  std::optional<std::size_t> Leader(int lane, double x, std::size_t exclude) const;
  // Closest vehicle in `lane` strictly behind x, skipping `exclude`.
  std::optional<std::size_t> Follower(int lane, double x, std::size_t exclude) const;

 private:
  const WorldState* world_;
  std::vector<std::vector<std::size_t>> by_lane_;  // sorted by (x, id)
};

}  // namespace lanestress

#endif  // LANESTRESS_WORLD_HPP_
