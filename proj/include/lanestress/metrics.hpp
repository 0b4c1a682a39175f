#ifndef LANESTRESS_METRICS_HPP_
#define LANESTRESS_METRICS_HPP_

#include <cstddef>
#include <limits>
#include <optional>
#include <span>

#include "lanestress/world.hpp"

namespace lanestress {

struct RewardParams {
  double alpha = 10000.0;
  double beta = 1000.0;
  double lambda = 0.8;
  double t_delta = 1.5;   // TTC threshold, s
  double d = 100.0;       // neighbor radius, m
  int horizon_T = 500;    // policy steps
  double t_cap = 60.0;    // cap on TTC inside the horizon penalty, s
  double log_floor = 1e-6;

  void Validate() const;
};

// Time-to-collision in seconds; +infinity when the pair never makes contact.
struct Ttc {
  double seconds = std::numeric_limits<double>::infinity();

  bool IsInfinite() const { return seconds == std::numeric_limits<double>::infinity(); }
};

// Constant-velocity contact time of the two bounding circles (radius = half
// diagonal of each footprint). Returns 0 for pairs already within reach.
// This is the single place to swap in a different TTC model.
Ttc TimeToCollision(const VehicleState& a, const VehicleState& b);

double CollisionProbability(Ttc ttc, double t_delta);
double SafetyProbability(Ttc ttc, double t_delta);

// Arithmetic mean; nullopt for an empty list, which each caller maps to its
// own neutral value.
std::optional<double> NeighborExpectation(std::span<const double> values);

double PhiCollision(const WorldState& world, std::size_t ego_index, const RewardParams& rp);
double ThetaSafety(const WorldState& world, std::size_t vehicle_index, const RewardParams& rp);
double PsiSafety(const WorldState& world, std::size_t ego_index, const RewardParams& rp);

// Smallest TTC between the ego and its neighbors, each capped at t_cap; t_cap
// when there are no neighbors.
double MinCappedTtc(const WorldState& world, std::size_t ego_index, const RewardParams& rp);

enum class EpisodeStatus { kRunning, kFailure, kHorizonExceeded };

double RunningReward(double phi, double psi, double lambda);
double HorizonPenalty(double min_ttc, const RewardParams& rp);

struct RewardBreakdown {
  double reward = 0.0;
  double phi = 0.0;
  double psi = 0.0;
  double min_ttc = std::numeric_limits<double>::infinity();  // uncapped
};

// Full reward of a state together with its components.
RewardBreakdown EvaluateReward(EpisodeStatus status, const WorldState& world,
                               std::size_t ego_index, const RewardParams& rp);

inline double Reward(EpisodeStatus status, const WorldState& world,
                     std::size_t ego_index, const RewardParams& rp) {
  return EvaluateReward(status, world, ego_index, rp).reward;
}

}  // namespace lanestress

#endif  // LANESTRESS_METRICS_HPP_
