#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <vector>

#include "lanestress/rng.hpp"
#include "lanestress/world.hpp"
#include "oracles.hpp"

using namespace lanestress;

TEST_CASE("default world has 40 vehicles at 25 m/s with lane spacing") {
  const RoadConfig road;
  const WorldState w = InitWorld(road, 40, 7);
  REQUIRE(w.vehicles.size() == 40);
  CHECK(w.vehicles[0].id == 0);
  CHECK(w.vehicles[0].is_ego);
  std::map<int, std::vector<double>> by_lane;
  for (const VehicleState& v : w.vehicles) {
    CHECK(v.vx == 25.0);
    CHECK(v.vy == 0.0);
    CHECK(v.y == road.LaneCenter(v.lane));
    by_lane[v.lane].push_back(v.x);
  }
  const double min_gap = SpawnOptions{}.min_gap;
  for (auto& [lane, xs] : by_lane) {
    std::sort(xs.begin(), xs.end());
    for (std::size_t i = 1; i < xs.size(); ++i) CHECK(xs[i] - xs[i - 1] >= min_gap);
  }
  // The ego starts near the back of its lane: at most one follower.
  const VehicleState& ego = w.vehicles[0];
  const auto followers = std::count_if(w.vehicles.begin(), w.vehicles.end(), [&](const VehicleState& v) {
    return v.lane == ego.lane && v.x < ego.x;
  });
  CHECK(followers <= 1);
}

TEST_CASE("ids are unique and contiguous") {
  const WorldState w = InitWorld(RoadConfig{}, 40, 3);
  std::vector<int> ids;
  for (const auto& v : w.vehicles) ids.push_back(v.id);
  std::sort(ids.begin(), ids.end());
  for (int i = 0; i < 40; ++i) CHECK(ids[i] == i);
}

TEST_CASE("single vehicle world holds only the ego") {
  const WorldState w = InitWorld(RoadConfig{}, 1, 0);
  REQUIRE(w.vehicles.size() == 1);
  CHECK(w.vehicles[0].is_ego);
  CHECK(w.vehicles[0].vx == 25.0);
  CHECK(RoadConfig{}.IsValidLane(w.vehicles[0].lane));
}

TEST_CASE("initialization is deterministic in the seed") {
  for (std::uint64_t seed : {0ULL, 1ULL, 99ULL}) {
    const WorldState a = InitWorld(RoadConfig{}, 40, seed);
    const WorldState b = InitWorld(RoadConfig{}, 40, seed);
    REQUIRE(a.vehicles.size() == b.vehicles.size());
    for (std::size_t i = 0; i < a.vehicles.size(); ++i) {
      CHECK(a.vehicles[i].x == b.vehicles[i].x);
      CHECK(a.vehicles[i].lane == b.vehicles[i].lane);
      CHECK(a.vehicles[i].id == b.vehicles[i].id);
    }
  }
  const WorldState c = InitWorld(RoadConfig{}, 40, 1);
  const WorldState d = InitWorld(RoadConfig{}, 40, 2);
  bool differs = false;
  for (std::size_t i = 0; i < c.vehicles.size(); ++i) differs |= c.vehicles[i].x != d.vehicles[i].x;
  CHECK(differs);
}

TEST_CASE("speed jitter stays inside the configured range") {
  SpawnOptions opt;
  opt.initial_speed_min = 20.0;
  const WorldState w = InitWorld(RoadConfig{}, 40, 5, opt);
  for (const auto& v : w.vehicles) {
    CHECK(v.vx >= 20.0);
    CHECK(v.vx <= 25.0);
  }
}

TEST_CASE("too many vehicles for the road is a placement error") {
  RoadConfig road;
  road.road_length = 100.0;
  CHECK_THROWS_AS(InitWorld(road, 40, 1), PlacementError);
  road.lane_count = 0;
  CHECK_THROWS_AS(InitWorld(road, 4, 1), std::invalid_argument);
}

TEST_CASE("forward Euler step") {
  WorldState w = oracle::World({oracle::Vehicle(0, 0.0, 0.0, 25.0)});
  const std::vector<KinematicCommand> hold = {{0.0, 0.0}};
  WorldState next = StepKinematics(w, hold, 0.1);
  CHECK(next.vehicles[0].x == doctest::Approx(2.5).epsilon(1e-15));
  CHECK(next.vehicles[0].vx == 25.0);

  const std::vector<KinematicCommand> accel = {{3.0, 0.0}};
  next = StepKinematics(w, accel, 0.1);
  CHECK(next.vehicles[0].vx == doctest::Approx(25.3).epsilon(1e-15));

  const std::vector<KinematicCommand> too_many = {{0.0, 0.0}, {0.0, 0.0}};
  CHECK_THROWS_AS(StepKinematics(w, too_many, 0.1), CommandCountError);
}

TEST_CASE("lateral command moves one lane over two seconds") {
  WorldState w = oracle::World({oracle::Vehicle(0, 0.0, 4.0, 25.0)});
  REQUIRE(w.vehicles[0].lane == 1);
  const std::vector<KinematicCommand> cmd = {{0.0, -2.0}};
  double y = 4.0;  // hand iteration of y += vy * dt
  for (int i = 0; i < 20; ++i) {
    w = StepKinematics(w, cmd, 0.1);
    y += -2.0 * 0.1;
  }
  CHECK(w.vehicles[0].y == doctest::Approx(y).epsilon(1e-12));
  CHECK(std::abs(w.vehicles[0].y) < 1e-12);
  CHECK(w.vehicles[0].lane == 0);
}

TEST_CASE("speed and road edge clamps") {
  const RoadConfig road;
  WorldState w = oracle::World({oracle::Vehicle(0, 0.0, road.MaxY() - 0.05, 0.05)});
  const std::vector<KinematicCommand> cmd = {{-5.0, 3.0}};
  w = StepKinematics(w, cmd, 0.1);
  CHECK(w.vehicles[0].vx == 0.0);
  CHECK(w.vehicles[0].y == road.MaxY());
  CHECK(w.vehicles[0].vy == 0.0);
  const std::vector<KinematicCommand> fast = {{1000.0, 0.0}};
  w = StepKinematics(w, fast, 0.1);
  CHECK(w.vehicles[0].vx == road.speed_limit * 1.2);
}

TEST_CASE("zero commands give exact constant velocity motion") {
  WorldState w = InitWorld(RoadConfig{}, 10, 4);
  const WorldState start = w;
  const std::vector<KinematicCommand> zero(w.vehicles.size());
  const int steps = 1000;
  for (int k = 0; k < steps; ++k) w = StepKinematics(w, zero, 0.1);
  for (std::size_t i = 0; i < w.vehicles.size(); ++i) {
    const double expect = start.vehicles[i].x + start.vehicles[i].vx * 0.1 * steps;
    CHECK(std::abs(w.vehicles[i].x - expect) <= 1e-12 * std::abs(expect) * steps);
  }
  CHECK(w.physics_steps == steps);
}

TEST_CASE("lane index always matches the nearest center") {
  Rng rng(11);
  WorldState w = InitWorld(RoadConfig{}, 20, 8);
  for (int k = 0; k < 300; ++k) {
    std::vector<KinematicCommand> cmd(w.vehicles.size());
    for (auto& c : cmd) c = {rng.Uniform(-5.0, 3.0), rng.Uniform(-3.0, 3.0)};
    w = StepKinematics(w, cmd, 0.1);
    for (const auto& v : w.vehicles) {
      CHECK(std::abs(v.y - w.road.LaneCenter(v.lane)) <= w.road.lane_width / 2 + 1e-9);
      CHECK(w.road.IsValidLane(v.lane));
    }
  }
}

TEST_CASE("neighbor slots") {
  SUBCASE("lone vehicle") {
    const WorldState w = oracle::World({oracle::Vehicle(0, 0, 4, 25)});
    CHECK(FindNeighbors(w, 0, 100.0).empty());
  }
  SUBCASE("one vehicle ahead in the same lane") {
    const WorldState w = oracle::World({oracle::Vehicle(0, 0, 4, 25), oracle::Vehicle(1, 30, 4, 25)});
    const NeighborSet n = FindNeighbors(w, 0, 100.0);
    CHECK(n.size() == 1);
    CHECK(n.at(Slot::kFrontSame) == std::optional<std::size_t>(1));
  }
  SUBCASE("only the nearest of a platoon") {
    std::vector<VehicleState> vs = {oracle::Vehicle(0, 0, 4, 25)};
    for (int i = 1; i <= 10; ++i) vs.push_back(oracle::Vehicle(i, 100.0 - 9.0 * i, 4, 25));
    const WorldState w = oracle::World(vs);
    const NeighborSet n = FindNeighbors(w, 0, 100.0);
    CHECK(n.size() == 1);
    CHECK(n.at(Slot::kFrontSame) == oracle::BruteNeighbors(w, 0, 100.0)[1]);
    CHECK(w.vehicles[*n.at(Slot::kFrontSame)].id == 10);
  }
  SUBCASE("level vehicle counts as ahead, beyond radius ignored") {
    const WorldState w = oracle::World({oracle::Vehicle(0, 0, 4, 25), oracle::Vehicle(1, 0, 0, 25),
                                        oracle::Vehicle(2, -100.5, 8, 25), oracle::Vehicle(3, 10, 12, 25)});
    const NeighborSet n = FindNeighbors(w, 0, 100.0);
    CHECK(n.at(Slot::kFrontLeft) == std::optional<std::size_t>(1));
    CHECK(n.size() == 1);
  }
}

TEST_CASE("neighbor search agrees with a brute-force scan") {
  Rng rng(21);
  const RoadConfig road;
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<VehicleState> vs;
    const int n = 1 + rng.UniformInt(40);
    for (int i = 0; i < n; ++i) {
      // Coarse positions make equal distances (and the id tie-break) common.
      const double x = std::round(rng.Uniform(-150.0, 150.0) / 5.0) * 5.0;
      vs.push_back(oracle::Vehicle(i, x, road.LaneCenter(rng.UniformInt(road.lane_count)), 25.0));
    }
    const WorldState w = oracle::World(vs, road);
    for (std::size_t q = 0; q < w.vehicles.size(); ++q) {
      const NeighborSet got = FindNeighbors(w, q, 100.0);
      CHECK(got.slots == oracle::BruteNeighbors(w, q, 100.0));
      for (std::size_t j : got.Members()) {
        CHECK(j != q);
        CHECK(std::abs(w.vehicles[j].x - w.vehicles[q].x) <= 100.0);
        CHECK(std::abs(w.vehicles[j].lane - w.vehicles[q].lane) <= 1);
      }
    }
  }
}

TEST_CASE("rectangle overlap fixtures") {
  const VehicleState a = oracle::Vehicle(0, 0, 0, 25);
  CHECK(RectanglesIntersect(a, a));
  CHECK_FALSE(RectanglesIntersect(a, oracle::Vehicle(1, 10, 0, 25)));
  CHECK(RectanglesIntersect(a, oracle::Vehicle(1, 4.9, 0, 25)));
  CHECK(RectanglesIntersect(a, oracle::Vehicle(1, 5.0, 0, 25)));  // touching counts
  CHECK_FALSE(RectanglesIntersect(a, oracle::Vehicle(1, 0, 2.01, 25)));
  // A rotated rectangle whose bounding box overlaps but whose body does not.
  VehicleState b = oracle::Vehicle(1, 4.4, 3.4, 25);
  b.heading = M_PI / 4;
  CHECK_FALSE(RectanglesIntersect(a, b));
}

TEST_CASE("rectangle overlap matches point sampling and is symmetric") {
  Rng rng(5);
  int decided = 0;
  for (int trial = 0; trial < 200; ++trial) {
    VehicleState a = oracle::Vehicle(0, 0, 0, 25);
    VehicleState b = oracle::Vehicle(1, rng.Uniform(-6, 6), rng.Uniform(-4, 4), 25);
    a.heading = rng.Uniform(-M_PI, M_PI);
    b.heading = rng.Uniform(-M_PI, M_PI);
    const bool got = RectanglesIntersect(a, b);
    CHECK(got == RectanglesIntersect(b, a));
    const auto sampled = oracle::SampleOverlap(a, b, 0.02, 0.04);
    if (sampled == oracle::SampledOverlap::kAmbiguous) continue;
    ++decided;
    CHECK(got == (sampled == oracle::SampledOverlap::kYes));
  }
  CHECK(decided > 150);
}

TEST_CASE("collision detection matches all pairs") {
  SUBCASE("none") {
    CHECK(DetectCollisions(InitWorld(RoadConfig{}, 40, 2)).empty());
  }
  SUBCASE("one pair") {
    const WorldState w = oracle::World({oracle::Vehicle(0, 0, 0, 25), oracle::Vehicle(1, 4, 0.5, 25),
                                        oracle::Vehicle(2, 40, 0, 25)});
    CHECK(DetectCollisions(w) == std::vector<std::pair<int, int>>{{0, 1}});
  }
  SUBCASE("three mutually overlapping") {
    const WorldState w = oracle::World({oracle::Vehicle(0, 0, 0, 25), oracle::Vehicle(2, 1, 0.5, 25),
                                        oracle::Vehicle(1, 2, 1.0, 25)});
    const auto pairs = DetectCollisions(w);
    CHECK(pairs.size() == 3);
    CHECK(pairs == oracle::BruteCollisions(w, RectanglesIntersect));
  }
  SUBCASE("random crowds") {
    Rng rng(9);
    for (int trial = 0; trial < 100; ++trial) {
      std::vector<VehicleState> vs;
      for (int i = 0; i < 30; ++i) {
        VehicleState v = oracle::Vehicle(i, rng.Uniform(0, 60), rng.Uniform(-2, 14), 25);
        v.heading = rng.Uniform(-0.3, 0.3);
        vs.push_back(v);
      }
      const WorldState w = oracle::World(vs);
      CHECK(DetectCollisions(w) == oracle::BruteCollisions(w, RectanglesIntersect));
    }
  }
}

TEST_CASE("lane index leader and follower lookups") {
  Rng rng(4);
  for (int trial = 0; trial < 50; ++trial) {
    const WorldState w = InitWorld(RoadConfig{}, 30, static_cast<std::uint64_t>(trial));
    const LaneIndex index(w);
    for (int probe = 0; probe < 20; ++probe) {
      const int lane = rng.UniformInt(4);
      const double x = rng.Uniform(-50, 800);
      const std::size_t exclude = static_cast<std::size_t>(rng.UniformInt(30));
      std::optional<std::size_t> lead, follow;
      for (std::size_t j = 0; j < w.vehicles.size(); ++j) {
        const VehicleState& v = w.vehicles[j];
        if (j == exclude || v.lane != lane) continue;
        if (v.x >= x && (!lead || v.x < w.vehicles[*lead].x)) lead = j;
        if (v.x < x && (!follow || v.x > w.vehicles[*follow].x)) follow = j;
      }
      CHECK(index.Leader(lane, x, exclude) == lead);
      CHECK(index.Follower(lane, x, exclude) == follow);
    }
  }
}
