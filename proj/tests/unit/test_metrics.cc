#include <doctest.h>

#include <cmath>
#include <limits>
#include <vector>

#include "lanestress/metrics.hpp"
#include "lanestress/rng.hpp"
#include "oracles.hpp"

using namespace lanestress;

namespace {

const double kR = 2.0 * std::hypot(2.5, 1.0);  // contact distance of two default cars
const double kInf = std::numeric_limits<double>::infinity();

}  // namespace

TEST_CASE("ttc of a closing pair in one lane") {
  // Centers 20 m beyond contact distance, closing at 10 m/s.
  const VehicleState ego = oracle::Vehicle(0, 0, 4, 25);
  const VehicleState lead = oracle::Vehicle(1, kR + 20.0, 4, 15);
  CHECK(TimeToCollision(ego, lead).seconds == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(TimeToCollision(lead, ego).seconds == TimeToCollision(ego, lead).seconds);
}

TEST_CASE("ttc special cases") {
  const VehicleState a = oracle::Vehicle(0, 0, 4, 25);
  CHECK(TimeToCollision(a, oracle::Vehicle(1, 50, 4, 25)).IsInfinite());
  CHECK(TimeToCollision(a, oracle::Vehicle(1, 50, 4, 30)).IsInfinite());
  CHECK(TimeToCollision(a, oracle::Vehicle(1, 3, 4, 30)).seconds == 0.0);
  // Passing in the next-but-one lane never reaches contact distance.
  CHECK(TimeToCollision(a, oracle::Vehicle(1, 50, 12, 0)).IsInfinite());
}

TEST_CASE("ttc agrees with fine time stepping") {
  Rng rng(5);
  int finite = 0;
  const double dt = 1e-4;
  for (int i = 0; i < 400; ++i) {
    const VehicleState a = oracle::Vehicle(0, 0, rng.Uniform(0, 12), rng.Uniform(0, 30), rng.Uniform(-2, 2));
    const VehicleState b = oracle::Vehicle(1, rng.Uniform(-60, 60), rng.Uniform(0, 12), rng.Uniform(0, 30),
                                           rng.Uniform(-2, 2));
    const Ttc t = TimeToCollision(a, b);
    const auto fine = oracle::FineStepTtc(a, b, dt, 30.0);
    CHECK(TimeToCollision(b, a).seconds == t.seconds);
    if (fine) {
      ++finite;
      REQUIRE_FALSE(t.IsInfinite());
      CHECK(t.seconds <= *fine + 1e-9);
      CHECK(t.seconds >= *fine - dt - 1e-9);
    } else {
      CHECK(t.seconds > 30.0 - dt);
    }
  }
  CHECK(finite > 50);
}

TEST_CASE("collision and safety probabilities") {
  CHECK(CollisionProbability({kInf}, 1.5) == 0.0);
  CHECK(CollisionProbability({1.0}, 1.5) == 1.0);
  CHECK(CollisionProbability({1.5}, 1.5) == 1.0);
  CHECK(CollisionProbability({3.0}, 1.5) == 0.5);
  CHECK(SafetyProbability({kInf}, 1.5) == 1.0);
  CHECK(SafetyProbability({1.5}, 1.5) == 0.0);
  CHECK(SafetyProbability({6.0}, 1.5) == 0.75);
  Rng rng(9);
  for (int i = 0; i < 1000; ++i) {
    const Ttc t{rng.Uniform(0, 100)};
    CHECK(CollisionProbability(t, 1.5) + SafetyProbability(t, 1.5) == doctest::Approx(1.0));
  }
}

TEST_CASE("neighbor expectation") {
  CHECK_FALSE(NeighborExpectation({}).has_value());
  const std::vector<double> v = {1.0, 2.0, 6.0};
  CHECK(*NeighborExpectation(v) == 3.0);
}

TEST_CASE("reward terms on a lone ego") {
  const RewardParams rp;
  const WorldState w = oracle::World({oracle::Vehicle(0, 0, 4, 25)});
  CHECK(PhiCollision(w, 0, rp) == std::log(1e-6));
  CHECK(ThetaSafety(w, 0, rp) == 0.0);
  CHECK(PsiSafety(w, 0, rp) == 0.0);
  CHECK(MinCappedTtc(w, 0, rp) == rp.t_cap);
  CHECK(EvaluateReward(EpisodeStatus::kRunning, w, 0, rp).min_ttc == kInf);
  CHECK(Reward(EpisodeStatus::kHorizonExceeded, w, 0, rp) == -10000.0 - 1000.0 * 60.0);
}

TEST_CASE("reward terms against a hand computation") {
  RewardParams rp;
  // Ego between a closing leader and a same-speed follower, both in its lane.
  const VehicleState ego = oracle::Vehicle(0, 0, 4, 25);
  const VehicleState lead = oracle::Vehicle(1, kR + 20.0, 4, 15);  // ttc 2
  const VehicleState tail = oracle::Vehicle(2, -30, 4, 25);         // never
  const WorldState w = oracle::World({ego, lead, tail});

  const double p_lead = 1.5 / 2.0;
  CHECK(PhiCollision(w, 0, rp) == doctest::Approx(std::log((p_lead + 0.0) / 2)).epsilon(1e-12));

  // The ego hides the tail from the lead, so the lead only sees the ego.
  const double theta_lead = std::log(1 - 1.5 / 2.0);
  // Tail's only neighbor is the ego, at equal speed.
  const double theta_tail = std::log(1.0);
  CHECK(ThetaSafety(w, 1, rp) == doctest::Approx(theta_lead).epsilon(1e-12));
  CHECK(ThetaSafety(w, 2, rp) == doctest::Approx(theta_tail));
  CHECK(PsiSafety(w, 0, rp) == doctest::Approx((theta_lead + theta_tail) / 2).epsilon(1e-12));

  CHECK(MinCappedTtc(w, 0, rp) == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(Reward(EpisodeStatus::kHorizonExceeded, w, 0, rp) == doctest::Approx(-12000.0).epsilon(1e-12));
  CHECK(Reward(EpisodeStatus::kFailure, w, 0, rp) == 0.0);

  const RewardBreakdown b = EvaluateReward(EpisodeStatus::kRunning, w, 0, rp);
  CHECK(b.reward == doctest::Approx(0.8 * b.phi + 0.2 * b.psi));
  rp.lambda = 1.0;
  CHECK(Reward(EpisodeStatus::kRunning, w, 0, rp) == b.phi);
  rp.lambda = 0.0;
  CHECK(Reward(EpisodeStatus::kRunning, w, 0, rp) == b.psi);
}

TEST_CASE("running reward mix") {
  CHECK(RunningReward(-0.5, -1.0, 0.8) == doctest::Approx(-0.6).epsilon(1e-15));
  CHECK(RunningReward(-3.0, -7.0, 1.0) == -3.0);
  CHECK(RunningReward(-3.0, -7.0, 0.0) == -7.0);
}

TEST_CASE("running reward is never positive") {
  Rng rng(21);
  RewardParams rp;
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<VehicleState> vs;
    for (int i = 0; i < 8; ++i) {
      vs.push_back(oracle::Vehicle(i, rng.Uniform(-80, 80) * (i > 0), 4.0 * rng.UniformInt(4),
                                   rng.Uniform(0, 30)));
    }
    rp.lambda = rng.Uniform();
    const WorldState w = oracle::World(vs);
    const RewardBreakdown b = EvaluateReward(EpisodeStatus::kRunning, w, 0, rp);
    CHECK(b.phi <= 0.0);
    CHECK(b.psi <= 0.0);
    CHECK(b.reward <= 0.0);
    CHECK(b.phi >= std::log(rp.log_floor));
  }
}

TEST_CASE("reward parameter validation") {
  RewardParams rp;
  CHECK_NOTHROW(rp.Validate());
  rp.lambda = 1.5;
  CHECK_THROWS(rp.Validate());
  rp = {};
  rp.t_delta = 0.0;
  CHECK_THROWS(rp.Validate());
}
