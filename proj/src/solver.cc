#include "lanestress/solver.hpp"

#include <cmath>
#include <cstdio>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>

namespace lanestress {

namespace {

// Decorrelates the policy's random stream from the episode-seed stream.
constexpr std::uint64_t kPolicyStream = 0x9E3779B97F4A7C15ULL;

constexpr const char* kCheckpointMagic = "lanestress-checkpoint";
constexpr int kCheckpointVersion = 1;

int SampleIndex(const std::vector<double>& probs, Rng& rng) {
  const double u = rng.Uniform();
  double acc = 0.0;
  int last = 0;
  for (std::size_t j = 0; j < probs.size(); ++j) {
    if (probs[j] <= 0.0) continue;
    acc += probs[j];
    last = static_cast<int>(j);
    if (u < acc) return last;
  }
  return last;  // rounding left u above the final partial sum
}

Eigen::MatrixXd Columns(const std::vector<std::vector<double>>& rows, int dim) {
  Eigen::MatrixXd x(dim, static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (static_cast<int>(rows[i].size()) != dim) throw std::invalid_argument("ragged observations");
    x.col(static_cast<Eigen::Index>(i)) = Eigen::Map<const Eigen::VectorXd>(rows[i].data(), dim);
  }
  return x;
}

std::string FormatDouble(double v) {
  if (std::isnan(v)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

TrainResult RunLoop(const EnvFactory& make_env, const TrainConfig& cfg,
                    const EpisodeCallback& on_episode_end, bool learn) {
  cfg.Validate();
  std::unique_ptr<SearchEnvironment> env = make_env();
  if (!env) throw std::invalid_argument("environment factory returned null");
  Rng episode_seeds(cfg.seed);
  Rng rng(cfg.seed ^ kPolicyStream);

  int episode = 0;
  EpisodeSummary current;
  current.seed = episode_seeds.NextU64();
  Observation obs = env->Reset(current.seed, episode);
  std::vector<double> x = obs.Flatten();

  NetShape shape;
  shape.input_dim = static_cast<int>(x.size());
  shape.hidden = cfg.hidden;
  TrainResult result;
  result.net = PolicyNet(shape, rng);
  Adam adam(result.net.params().Size(), cfg.learning_rate);
  RolloutBuffer buffer;

  double window_sum = 0.0;
  int window_count = 0;
  for (long t = 0; t < cfg.total_env_steps; ++t) {
    EnvAction action{};
    std::vector<int> chosen(kSlotCount, -1);
    double log_prob = 0.0;
    double value = 0.0;
    if (learn) {
      const PolicyOutput out = result.net.Forward(x);
      value = out.value;
      for (int k = 0; k < kSlotCount; ++k) {
        if (!obs.slot_mask[k]) continue;
        const int a = SampleIndex(out.probs[k], rng);
        chosen[k] = a;
        log_prob += out.log_probs[k][a];
        action[k] = static_cast<Maneuver>(a);
      }
    } else {
      for (int k = 0; k < kSlotCount; ++k) {
        if (!obs.slot_mask[k]) continue;
        chosen[k] = rng.UniformInt(kManeuverCount);
        action[k] = static_cast<Maneuver>(chosen[k]);
      }
    }

    StepResult step = env->Step(action);
    ++result.steps;
    ++current.steps;
    current.total_reward += step.reward;
    const bool done = step.status != EpisodeStatus::kRunning;
    std::vector<double> next_x = step.observation.Flatten();
    if (learn) {
      buffer.Push(std::move(x), std::move(chosen), step.reward * cfg.reward_scale, value,
                  log_prob, done, next_x);
    }

    if (done) {
      current.episode = episode;
      current.status = step.status;
      current.non_ego_collision = env->had_non_ego_collision();
      if (step.status == EpisodeStatus::kFailure) ++result.failures;
      window_sum += current.total_reward;
      ++window_count;
      result.episodes.push_back(current);
      if (on_episode_end) on_episode_end(current);
      current = EpisodeSummary{};
      current.seed = episode_seeds.NextU64();
      ++episode;
      if (t + 1 < cfg.total_env_steps) {
        obs = env->Reset(current.seed, episode);
        x = obs.Flatten();
      }
    } else {
      obs = std::move(step.observation);
      x = std::move(next_x);
    }

    if (result.steps % cfg.rollout_length == 0 || result.steps == cfg.total_env_steps) {
      if (learn) {
        const UpdateStats stats = Update(&result.net, &adam, &buffer, cfg, rng);
        if (stats.aborted) ++result.aborted_updates;
        buffer.Clear();
      }
      CurvePoint point;
      point.step = result.steps;
      point.mean_episode_reward = window_count > 0 ? window_sum / window_count
                                                   : std::numeric_limits<double>::quiet_NaN();
      point.crash_count = result.failures;
      result.curve.push_back(point);
      window_sum = 0.0;
      window_count = 0;
    }
  }
  return result;
}

}  // namespace

std::string_view AlgorithmName(Algorithm a) { return a == Algorithm::kPpo ? "ppo" : "a2c"; }

Algorithm ParseAlgorithm(std::string_view name) {
  if (name == "ppo") return Algorithm::kPpo;
  if (name == "a2c") return Algorithm::kA2c;
  throw std::invalid_argument("unknown algorithm '" + std::string(name) + "'");
}

void TrainConfig::Validate() const {
  if (!(gamma > 0.0 && gamma <= 1.0)) throw std::invalid_argument("gamma must be in (0, 1]");
  if (!(learning_rate >= 0.0)) throw std::invalid_argument("learning_rate must be >= 0");
  if (batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
  if (rollout_length < 1) throw std::invalid_argument("rollout_length must be >= 1");
  if (!(clip_ratio > 0.0)) throw std::invalid_argument("clip_ratio must be > 0");
  if (epochs_per_update < 1) throw std::invalid_argument("epochs_per_update must be >= 1");
  if (total_env_steps < 0) throw std::invalid_argument("total_env_steps must be >= 0");
  if (!(value_coef >= 0.0) || !(entropy_coef >= 0.0)) {
    throw std::invalid_argument("loss coefficients must be >= 0");
  }
  if (!(reward_scale > 0.0)) throw std::invalid_argument("reward_scale must be > 0");
  if (hidden < 1) throw std::invalid_argument("hidden must be >= 1");
}

double TdError(double reward_next, double v_t, double v_next, double gamma, bool done) {
  return reward_next + gamma * v_next * (done ? 0.0 : 1.0) - v_t;
}

void RolloutBuffer::Push(std::vector<double> observation, std::vector<int> actions,
                         double reward, double value, double log_prob, bool done,
                         std::vector<double> next_observation) {
  observations_.push_back(std::move(observation));
  actions_.push_back(std::move(actions));
  rewards_.push_back(reward);
  values_.push_back(value);
  log_probs_.push_back(log_prob);
  dones_.push_back(done);
  next_observations_.push_back(std::move(next_observation));
  next_values_.push_back(0.0);
}

void RolloutBuffer::Clear() {
  observations_.clear();
  next_observations_.clear();
  actions_.clear();
  rewards_.clear();
  values_.clear();
  log_probs_.clear();
  dones_.clear();
  next_values_.clear();
}

std::vector<double> ComputeAdvantages(const RolloutBuffer& buffer, double gamma) {
  std::vector<double> out(buffer.size());
  for (std::size_t t = 0; t < buffer.size(); ++t) {
    out[t] = TdError(buffer.rewards()[t], buffer.values()[t], buffer.next_values()[t], gamma,
                     buffer.dones()[t]);
  }
  return out;
}

void NormalizeAdvantages(std::vector<double>* advantages) {
  if (advantages->empty()) return;
  const double n = static_cast<double>(advantages->size());
  const double mean = std::accumulate(advantages->begin(), advantages->end(), 0.0) / n;
  double var = 0.0;
  for (double a : *advantages) var += (a - mean) * (a - mean);
  const double sd = std::sqrt(var / n);
  for (double& a : *advantages) a = sd > 1e-12 ? (a - mean) / sd : 0.0;
}

Adam::Adam(Eigen::Index size, double learning_rate)
    : lr_(learning_rate), m_(Eigen::VectorXd::Zero(size)), v_(Eigen::VectorXd::Zero(size)) {}

void Adam::Step(NetParams<double>* params, const VectorT<double>& grad) {
  if (grad.size() != m_.size()) throw std::invalid_argument("gradient size mismatch");
  ++t_;
  m_ = beta1_ * m_ + (1.0 - beta1_) * grad;
  v_ = beta2_ * v_ + (1.0 - beta2_) * grad.cwiseProduct(grad);
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  Eigen::VectorXd theta = params->Flatten();
  theta.array() -= lr_ * (m_.array() / c1) / ((v_.array() / c2).sqrt() + eps_);
  params->Assign(theta);
}

UpdateStats Update(PolicyNet* net, Adam* optimizer, RolloutBuffer* buffer,
                   const TrainConfig& cfg, Rng& rng) {
  UpdateStats stats;
  const std::size_t n = buffer->size();
  if (n == 0) return stats;
  const NetShape& shape = net->shape();
  const Eigen::MatrixXd x = Columns(buffer->observations(), shape.input_dim);
  const Eigen::MatrixXd x_next = Columns(buffer->next_observations(), shape.input_dim);
  const Eigen::Index cols = static_cast<Eigen::Index>(n);

  Eigen::MatrixXi actions(shape.slots, cols);
  for (std::size_t i = 0; i < n; ++i) {
    for (int k = 0; k < shape.slots; ++k) {
      actions(k, static_cast<Eigen::Index>(i)) = buffer->actions()[i][k];
    }
  }

  const NetParams<double> backup = net->params();
  const Adam optimizer_backup = *optimizer;
  const bool ppo = cfg.algorithm == Algorithm::kPpo;
  LossConfig loss_cfg;
  loss_cfg.clip_ratio = cfg.clip_ratio;
  loss_cfg.clip = ppo;
  loss_cfg.value_coef = cfg.value_coef;
  loss_cfg.entropy_coef = cfg.entropy_coef;

  try {
    Eigen::RowVectorXd v_next = net->Values(x_next);
    for (std::size_t i = 0; i < n; ++i) buffer->next_values()[i] = v_next(static_cast<Eigen::Index>(i));
    std::vector<double> advantages = ComputeAdvantages(*buffer, cfg.gamma);
    NormalizeAdvantages(&advantages);

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    const int epochs = ppo ? cfg.epochs_per_update : 1;
    for (int epoch = 0; epoch < epochs; ++epoch) {
      // Critic targets come from a snapshot taken at the start of each epoch.
      if (epoch > 0) v_next = net->Values(x_next);
      Eigen::VectorXd targets(cols);
      for (std::size_t i = 0; i < n; ++i) {
        targets(static_cast<Eigen::Index>(i)) =
            buffer->rewards()[i] +
            cfg.gamma * v_next(static_cast<Eigen::Index>(i)) * (buffer->dones()[i] ? 0.0 : 1.0);
      }
      for (std::size_t i = n; i > 1; --i) {
        std::swap(order[i - 1], order[static_cast<std::size_t>(rng.UniformInt(static_cast<int>(i)))]);
      }
      for (std::size_t start = 0; start < n; start += static_cast<std::size_t>(cfg.batch_size)) {
        const std::size_t end = std::min(n, start + static_cast<std::size_t>(cfg.batch_size));
        const Eigen::Index m = static_cast<Eigen::Index>(end - start);
        LossBatch<double> batch;
        batch.x.resize(shape.input_dim, m);
        batch.actions.resize(shape.slots, m);
        batch.old_log_prob.resize(m);
        batch.advantage.resize(m);
        batch.value_target.resize(m);
        for (Eigen::Index j = 0; j < m; ++j) {
          const std::size_t i = order[start + static_cast<std::size_t>(j)];
          const Eigen::Index c = static_cast<Eigen::Index>(i);
          batch.x.col(j) = x.col(c);
          batch.actions.col(j) = actions.col(c);
          batch.old_log_prob(j) = buffer->log_probs()[i];
          batch.advantage(j) = advantages[i];
          batch.value_target(j) = targets(c);
        }
        NetParams<double> grad;
        const LossTerms<double> terms = Loss(net->params(), shape, batch, loss_cfg, &grad);
        Eigen::VectorXd g = grad.Flatten();
        if (!g.allFinite()) throw NonFiniteError("non-finite gradient");
        const double norm = g.norm();
        if (cfg.max_grad_norm > 0.0 && norm > cfg.max_grad_norm) g *= cfg.max_grad_norm / norm;
        optimizer->Step(&net->mutable_params(), g);

        stats.surrogate += terms.surrogate;
        stats.value_loss += terms.value;
        stats.entropy += terms.entropy;
        stats.clip_fraction += terms.clip_fraction;
        ++stats.minibatches;
      }
    }
  } catch (const NonFiniteError& e) {
    net->mutable_params() = backup;
    *optimizer = optimizer_backup;
    stats = UpdateStats{};
    stats.aborted = true;
    stats.error = e.what();
    return stats;
  }
  const double k = static_cast<double>(stats.minibatches);
  stats.surrogate /= k;
  stats.value_loss /= k;
  stats.entropy /= k;
  stats.clip_fraction /= k;
  return stats;
}

TrainResult Train(const EnvFactory& make_env, const TrainConfig& cfg,
                  const EpisodeCallback& on_episode_end) {
  return RunLoop(make_env, cfg, on_episode_end, true);
}

TrainResult RandomBaseline(const EnvFactory& make_env, const TrainConfig& cfg,
                           const EpisodeCallback& on_episode_end) {
  return RunLoop(make_env, cfg, on_episode_end, false);
}

void WriteLearningCurve(std::ostream& out, const std::vector<CurvePoint>& curve) {
  out << "step,mean_episode_reward,crash_count\n";
  for (const CurvePoint& p : curve) {
    out << p.step << ',' << FormatDouble(p.mean_episode_reward) << ',' << p.crash_count << '\n';
  }
}

void WriteCheckpoint(std::ostream& out, const PolicyNet& net, const TrainConfig& cfg) {
  out << kCheckpointMagic << ' ' << kCheckpointVersion << '\n';
  out << "gamma " << FormatDouble(cfg.gamma) << '\n'
      << "learning_rate " << FormatDouble(cfg.learning_rate) << '\n'
      << "batch_size " << cfg.batch_size << '\n'
      << "rollout_length " << cfg.rollout_length << '\n'
      << "clip_ratio " << FormatDouble(cfg.clip_ratio) << '\n'
      << "epochs_per_update " << cfg.epochs_per_update << '\n'
      << "total_env_steps " << cfg.total_env_steps << '\n'
      << "value_coef " << FormatDouble(cfg.value_coef) << '\n'
      << "entropy_coef " << FormatDouble(cfg.entropy_coef) << '\n'
      << "seed " << cfg.seed << '\n'
      << "reward_scale " << FormatDouble(cfg.reward_scale) << '\n'
      << "max_grad_norm " << FormatDouble(cfg.max_grad_norm) << '\n'
      << "hidden " << cfg.hidden << '\n'
      << "algorithm " << AlgorithmName(cfg.algorithm) << '\n'
      << "end-config\n";
  net.Write(out);
}

PolicyNet ReadCheckpoint(std::istream& in, TrainConfig* cfg) {
  std::string magic;
  int version = 0;
  if (!(in >> magic >> version) || magic != kCheckpointMagic) {
    throw std::runtime_error("not a checkpoint file");
  }
  if (version != kCheckpointVersion) {
    throw std::runtime_error("unsupported checkpoint version " + std::to_string(version));
  }
  TrainConfig parsed;
  std::string key;
  while (in >> key && key != "end-config") {
    std::string value;
    if (!(in >> value)) throw std::runtime_error("truncated checkpoint config");
    std::istringstream v(value);
    if (key == "gamma") v >> parsed.gamma;
    else if (key == "learning_rate") v >> parsed.learning_rate;
    else if (key == "batch_size") v >> parsed.batch_size;
    else if (key == "rollout_length") v >> parsed.rollout_length;
    else if (key == "clip_ratio") v >> parsed.clip_ratio;
    else if (key == "epochs_per_update") v >> parsed.epochs_per_update;
    else if (key == "total_env_steps") v >> parsed.total_env_steps;
    else if (key == "value_coef") v >> parsed.value_coef;
    else if (key == "entropy_coef") v >> parsed.entropy_coef;
    else if (key == "seed") v >> parsed.seed;
    else if (key == "reward_scale") v >> parsed.reward_scale;
    else if (key == "max_grad_norm") v >> parsed.max_grad_norm;
    else if (key == "hidden") v >> parsed.hidden;
    else if (key == "algorithm") parsed.algorithm = ParseAlgorithm(value);
    else throw std::runtime_error("unknown checkpoint key '" + key + "'");
    if (v.fail()) throw std::runtime_error("bad checkpoint value for " + key);
  }
  if (key != "end-config") throw std::runtime_error("truncated checkpoint config");
  if (cfg != nullptr) *cfg = parsed;
  return PolicyNet::Read(in);
}

}  // namespace lanestress
