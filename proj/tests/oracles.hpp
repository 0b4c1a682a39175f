// Independent reference implementations used to check the library. They are
// deliberately naive: brute force, dense sampling, small time steps.

#ifndef LANESTRESS_TESTS_ORACLES_HPP_
#define LANESTRESS_TESTS_ORACLES_HPP_

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <optional>
#include <utility>
#include <vector>

#include "lanestress/world.hpp"

namespace oracle {

using lanestress::RoadConfig;
using lanestress::VehicleState;
using lanestress::WorldState;

inline VehicleState Vehicle(int id, double x, double y, double vx, double vy = 0.0,
                            const RoadConfig& road = {}) {
  VehicleState v;
  v.id = id;
  v.x = x;
  v.y = y;
  v.vx = vx;
  v.vy = vy;
  v.heading = (vx == 0.0 && vy == 0.0) ? 0.0 : std::atan2(vy, vx);
  v.lane = road.NearestLane(y);
  v.is_ego = id == 0;
  return v;
}

inline WorldState World(std::vector<VehicleState> vehicles, const RoadConfig& road = {}) {
  WorldState w;
  w.road = road;
  w.vehicles = std::move(vehicles);
  return w;
}

// Is the point inside rectangle v, shrunk (margin > 0) or grown (margin < 0)
// by |margin| on every side?
inline bool PointInRect(const VehicleState& v, double px, double py, double margin) {
  const double c = std::cos(v.heading), s = std::sin(v.heading);
  const double dx = px - v.x, dy = py - v.y;
  const double u = dx * c + dy * s;    // along the heading
  const double w = -dx * s + dy * c;   // across
  return std::abs(u) <= v.geometry.length / 2 - margin && std::abs(w) <= v.geometry.width / 2 - margin;
}

// Does any point of a grid laid over rectangle a fall inside b shrunk by
// `margin_b`?
inline bool SampleOverlapOneWay(const VehicleState& a, const VehicleState& b, double step,
                                double margin_b) {
  const double c = std::cos(a.heading), s = std::sin(a.heading);
  const double hl = a.geometry.length / 2, hw = a.geometry.width / 2;
  const int nu = static_cast<int>(std::ceil(2 * hl / step));
  const int nw = static_cast<int>(std::ceil(2 * hw / step));
  for (int i = 0; i <= nu; ++i) {
    const double u = std::min(-hl + i * step, hl);
    for (int j = 0; j <= nw; ++j) {
      const double w = std::min(-hw + j * step, hw);
      const double px = a.x + u * c - w * s;
      const double py = a.y + u * s + w * c;
      if (PointInRect(b, px, py, margin_b)) return true;
    }
  }
  return false;
}

enum class SampledOverlap { kNo, kYes, kAmbiguous };

// Dense point sampling in both directions. Pairs whose answer flips when b is
// grown or shrunk by `guard` are reported ambiguous.
inline SampledOverlap SampleOverlap(const VehicleState& a, const VehicleState& b, double step,
                                    double guard) {
  const bool strict = SampleOverlapOneWay(a, b, step, guard) || SampleOverlapOneWay(b, a, step, guard);
  const bool loose = SampleOverlapOneWay(a, b, step, -guard) || SampleOverlapOneWay(b, a, step, -guard);
  if (strict) return SampledOverlap::kYes;
  if (!loose) return SampledOverlap::kNo;
  return SampledOverlap::kAmbiguous;
}

// Propagates both centers at constant velocity with step dt until they come
// within the sum of half-diagonals. nullopt if that never happens before
// `horizon` seconds.
inline std::optional<double> FineStepTtc(const VehicleState& a, const VehicleState& b, double dt,
                                         double horizon) {
  const double r = std::hypot(a.geometry.length / 2, a.geometry.width / 2) +
                   std::hypot(b.geometry.length / 2, b.geometry.width / 2);
  const long steps = static_cast<long>(horizon / dt);
  for (long k = 0; k <= steps; ++k) {
    const double t = k * dt;
    const double dx = (b.x + b.vx * t) - (a.x + a.vx * t);
    const double dy = (b.y + b.vy * t) - (a.y + a.vy * t);
    if (std::hypot(dx, dy) <= r) return t;
  }
  return std::nullopt;
}

// Nearest vehicle per slot by scanning every vehicle.
inline std::array<std::optional<std::size_t>, lanestress::kSlotCount> BruteNeighbors(
    const WorldState& w, std::size_t i, double radius) {
  std::array<std::optional<std::size_t>, lanestress::kSlotCount> out;
  std::array<double, lanestress::kSlotCount> best;
  best.fill(std::numeric_limits<double>::infinity());
  const VehicleState& q = w.vehicles[i];
  for (std::size_t j = 0; j < w.vehicles.size(); ++j) {
    if (j == i) continue;
    const VehicleState& v = w.vehicles[j];
    const int dl = v.lane - q.lane;
    const double dx = v.x - q.x;
    if (std::abs(dl) > 1 || std::abs(dx) > radius) continue;
    const int slot = (dx >= 0 ? 0 : 3) + (dl + 1);
    const double dist = std::abs(dx);
    if (dist < best[slot] ||
        (dist == best[slot] && out[slot] && v.id < w.vehicles[*out[slot]].id)) {
      best[slot] = dist;
      out[slot] = j;
    }
  }
  return out;
}

// All overlapping id pairs by checking every pair with the given predicate.
template <typename Overlap>
std::vector<std::pair<int, int>> BruteCollisions(const WorldState& w, Overlap overlap) {
  std::vector<std::pair<int, int>> out;
  for (std::size_t i = 0; i < w.vehicles.size(); ++i) {
    for (std::size_t j = i + 1; j < w.vehicles.size(); ++j) {
      if (overlap(w.vehicles[i], w.vehicles[j])) {
        out.emplace_back(std::min(w.vehicles[i].id, w.vehicles[j].id),
                         std::max(w.vehicles[i].id, w.vehicles[j].id));
      }
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace oracle

#endif  // LANESTRESS_TESTS_ORACLES_HPP_
