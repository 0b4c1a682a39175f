#include "lanestress/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace lanestress {

void RewardParams::Validate() const {
  if (!(alpha > 0.0 && beta > 0.0)) throw std::invalid_argument("alpha, beta must be > 0");
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw std::invalid_argument("lambda must lie in [0, 1]");
  if (!(t_delta > 0.0)) throw std::invalid_argument("t_delta must be > 0");
  if (!(t_cap > t_delta)) throw std::invalid_argument("t_cap must exceed t_delta");
  if (!(log_floor > 0.0 && log_floor < 1.0)) {
    throw std::invalid_argument("log_floor must lie in (0, 1)");
  }
  if (!(d > 0.0)) throw std::invalid_argument("d must be > 0");
  if (horizon_T < 1) throw std::invalid_argument("horizon_T must be >= 1");
}

Ttc TimeToCollision(const VehicleState& a, const VehicleState& b) {
  const double px = b.x - a.x;
  const double py = b.y - a.y;
  const double wx = b.vx - a.vx;
  const double wy = b.vy - a.vy;
  const double r = a.geometry.HalfDiagonal() + b.geometry.HalfDiagonal();

  const double c = px * px + py * py - r * r;
  if (c <= 0.0) return {0.0};
  const double qa = wx * wx + wy * wy;
  const double half_b = px * wx + py * wy;
  if (qa == 0.0 || half_b >= 0.0) return {};
  const double disc = half_b * half_b - qa * c;
  if (disc < 0.0) return {};
  // Smaller root of qa t^2 + 2 half_b t + c = 0 in the cancellation-free form.
  return {c / (-half_b + std::sqrt(disc))};
}

double CollisionProbability(Ttc ttc, double t_delta) {
  if (ttc.IsInfinite()) return 0.0;
  if (ttc.seconds <= t_delta) return 1.0;
  return t_delta / ttc.seconds;
}

double SafetyProbability(Ttc ttc, double t_delta) {
  if (ttc.IsInfinite()) return 1.0;
  if (ttc.seconds <= t_delta) return 0.0;
  return 1.0 - t_delta / ttc.seconds;
}

std::optional<double> NeighborExpectation(std::span<const double> values) {
  if (values.empty()) return std::nullopt;
  return std::accumulate(values.begin(), values.end(), 0.0) /
         static_cast<double>(values.size());
}

namespace {

template <typename Prob>
std::optional<double> MeanOverNeighbors(const WorldState& world, std::size_t index,
                                        const RewardParams& rp, Prob prob) {
  const NeighborSet n = FindNeighbors(world, index, rp.d);
  std::vector<double> values;
  values.reserve(kSlotCount);
  for (const std::size_t j : n.Members()) {
    values.push_back(prob(TimeToCollision(world.vehicles[index], world.vehicles[j])));
  }
  return NeighborExpectation(values);
}

}  // namespace

double PhiCollision(const WorldState& world, std::size_t ego_index, const RewardParams& rp) {
  const auto mean = MeanOverNeighbors(world, ego_index, rp, [&](Ttc t) {
    return CollisionProbability(t, rp.t_delta);
  });
  return std::log(std::max(mean.value_or(0.0), rp.log_floor));
}

double ThetaSafety(const WorldState& world, std::size_t vehicle_index, const RewardParams& rp) {
  const auto mean = MeanOverNeighbors(world, vehicle_index, rp, [&](Ttc t) {
    return SafetyProbability(t, rp.t_delta);
  });
  if (!mean) return 0.0;
  return std::log(std::max(*mean, rp.log_floor));
}

double PsiSafety(const WorldState& world, std::size_t ego_index, const RewardParams& rp) {
  const NeighborSet n = FindNeighbors(world, ego_index, rp.d);
  std::vector<double> thetas;
  for (const std::size_t q : n.Members()) thetas.push_back(ThetaSafety(world, q, rp));
  return NeighborExpectation(thetas).value_or(0.0);
}

double MinCappedTtc(const WorldState& world, std::size_t ego_index, const RewardParams& rp) {
  double best = rp.t_cap;
  for (const std::size_t j : FindNeighbors(world, ego_index, rp.d).Members()) {
    best = std::min(best, TimeToCollision(world.vehicles[ego_index], world.vehicles[j]).seconds);
  }
  return best;
}

double RunningReward(double phi, double psi, double lambda) {
  return lambda * phi + (1.0 - lambda) * psi;
}

double HorizonPenalty(double min_ttc, const RewardParams& rp) {
  return -rp.alpha - rp.beta * min_ttc;
}

RewardBreakdown EvaluateReward(EpisodeStatus status, const WorldState& world,
                               std::size_t ego_index, const RewardParams& rp) {
  RewardBreakdown out;
  out.phi = PhiCollision(world, ego_index, rp);
  out.psi = PsiSafety(world, ego_index, rp);
  for (const std::size_t j : FindNeighbors(world, ego_index, rp.d).Members()) {
    out.min_ttc = std::min(
        out.min_ttc, TimeToCollision(world.vehicles[ego_index], world.vehicles[j]).seconds);
  }
  switch (status) {
    case EpisodeStatus::kFailure:
      out.reward = 0.0;
      break;
    case EpisodeStatus::kHorizonExceeded:
      out.reward = HorizonPenalty(MinCappedTtc(world, ego_index, rp), rp);
      break;
    case EpisodeStatus::kRunning:
      out.reward = RunningReward(out.phi, out.psi, rp.lambda);
      break;
  }
  return out;
}

}  // namespace lanestress
