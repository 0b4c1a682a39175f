#ifndef LANESTRESS_SOLVER_HPP_
#define LANESTRESS_SOLVER_HPP_

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "lanestress/env.hpp"
#include "lanestress/policy_net.hpp"
#include "lanestress/rng.hpp"

namespace lanestress {

enum class Algorithm {
  kPpo,  // clipped surrogate, several epochs per rollout
  kA2c,  // unclipped policy gradient, one pass per rollout
};

std::string_view AlgorithmName(Algorithm a);
Algorithm ParseAlgorithm(std::string_view name);

struct TrainConfig {
  double gamma = 0.8;
  double learning_rate = 5e-4;
  int batch_size = 32;
  int rollout_length = 500;
  double clip_ratio = 0.2;
  int epochs_per_update = 4;
  long total_env_steps = 40000;  // policy steps
  double value_coef = 0.5;
  double entropy_coef = 0.01;
  std::uint64_t seed = 0;
  // Rewards are multiplied by this before they reach the critic; the -1e4
  // horizon penalty would otherwise dominate the value regression.
  double reward_scale = 1e-3;
  double max_grad_norm = 0.5;  // <= 0 disables clipping
  int hidden = 256;
  Algorithm algorithm = Algorithm::kPpo;

  void Validate() const;
};

// R + gamma * v_next * (1 - done) - v_t
double TdError(double reward_next, double v_t, double v_next, double gamma, bool done);

class RolloutBuffer {
 public:
  void Push(std::vector<double> observation, std::vector<int> actions, double reward,
            double value, double log_prob, bool done, std::vector<double> next_observation);
  void Clear();
  std::size_t size() const { return rewards_.size(); }
  bool empty() const { return rewards_.empty(); }

  const std::vector<std::vector<double>>& observations() const { return observations_; }
  const std::vector<std::vector<double>>& next_observations() const { return next_observations_; }
  const std::vector<std::vector<int>>& actions() const { return actions_; }
  const std::vector<double>& rewards() const { return rewards_; }
  const std::vector<double>& values() const { return values_; }
  const std::vector<double>& log_probs() const { return log_probs_; }
  const std::vector<bool>& dones() const { return dones_; }

  // Values of the next observations, refreshed by whoever owns the critic.
  std::vector<double>& next_values() { return next_values_; }
  const std::vector<double>& next_values() const { return next_values_; }

 private:
  std::vector<std::vector<double>> observations_;
  std::vector<std::vector<double>> next_observations_;
  std::vector<std::vector<int>> actions_;  // -1 for an empty slot
  std::vector<double> rewards_;
  std::vector<double> values_;
  std::vector<double> log_probs_;
  std::vector<bool> dones_;
  std::vector<double> next_values_;
};

// Raw TD(0) advantages from the stored values and next_values().
std::vector<double> ComputeAdvantages(const RolloutBuffer& buffer, double gamma);

// Shifts to zero mean and scales to unit variance; a constant sequence
// becomes all zeros.
void NormalizeAdvantages(std::vector<double>* advantages);

class Adam {
 public:
  Adam() = default;
  Adam(Eigen::Index size, double learning_rate);

  void Step(NetParams<double>* params, const VectorT<double>& grad);

 private:
  double lr_ = 0.0;
  double beta1_ = 0.9;
  double beta2_ = 0.999;
  double eps_ = 1e-8;
  long t_ = 0;
  Eigen::VectorXd m_;
  Eigen::VectorXd v_;
};

struct UpdateStats {
  double surrogate = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
  double clip_fraction = 0.0;
  int minibatches = 0;
  bool aborted = false;
  std::string error;
};

// One policy/critic improvement from a full buffer. On a non-finite loss the
// parameters are restored and the stats report the abort.
UpdateStats Update(PolicyNet* net, Adam* optimizer, RolloutBuffer* buffer,
                   const TrainConfig& cfg, Rng& rng);

struct EpisodeSummary {
  int episode = 0;
  std::uint64_t seed = 0;
  EpisodeStatus status = EpisodeStatus::kRunning;
  int steps = 0;
  double total_reward = 0.0;  // unscaled
  bool non_ego_collision = false;
};

struct CurvePoint {
  long step = 0;
  double mean_episode_reward = 0.0;  // NaN if no episode ended in the window
  int crash_count = 0;               // cumulative ego failures
};

struct TrainResult {
  PolicyNet net;
  std::vector<EpisodeSummary> episodes;
  std::vector<CurvePoint> curve;
  int failures = 0;
  int aborted_updates = 0;
  long steps = 0;
};

using EnvFactory = std::function<std::unique_ptr<SearchEnvironment>()>;
// Called after every finished episode, before the environment is reset.
using EpisodeCallback = std::function<void(const EpisodeSummary&)>;

// Episode i of a run always starts from the same seed for a given
// cfg.seed, so Train and RandomBaseline see matched initial worlds.
TrainResult Train(const EnvFactory& make_env, const TrainConfig& cfg,
                  const EpisodeCallback& on_episode_end = {});

// Same step budget and episode seeds; each filled slot gets a uniformly drawn
// maneuver. The returned net is the untrained initialization.
TrainResult RandomBaseline(const EnvFactory& make_env, const TrainConfig& cfg,
                           const EpisodeCallback& on_episode_end = {});

void WriteLearningCurve(std::ostream& out, const std::vector<CurvePoint>& curve);

// Text checkpoint: the training configuration followed by the network dump.
void WriteCheckpoint(std::ostream& out, const PolicyNet& net, const TrainConfig& cfg);
PolicyNet ReadCheckpoint(std::istream& in, TrainConfig* cfg = nullptr);

}  // namespace lanestress

#endif  // LANESTRESS_SOLVER_HPP_
