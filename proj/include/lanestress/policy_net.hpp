#ifndef LANESTRESS_POLICY_NET_HPP_
#define LANESTRESS_POLICY_NET_HPP_

#include <algorithm>
#include <cmath>
#include <iosfwd>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "lanestress/driving.hpp"
#include "lanestress/env.hpp"
#include "lanestress/rng.hpp"

namespace lanestress {

// Layer sizes. The observation is assumed to end with `slots` rows of
// `slot_features` values, one row per controlled slot; the actor head sees the
// shared features plus that row plus a one-hot slot code.
struct NetShape {
  int input_dim = 0;
  int hidden = 256;
  int slots = kSlotCount;
  int slot_features = kObservationColumns;
  int actions = kManeuverCount;

  int ActorInputs() const { return hidden + slot_features + slots; }
  int SlotOffset() const { return input_dim - slots * slot_features; }
  void Validate() const;

  bool operator==(const NetShape&) const = default;
};

class NonFiniteError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

template <typename T>
using MatrixT = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;
template <typename T>
using VectorT = Eigen::Matrix<T, Eigen::Dynamic, 1>;

template <typename T>
struct NetParams {
  MatrixT<T> w1;  // hidden x input
  VectorT<T> b1;
  MatrixT<T> w2;  // hidden x hidden
  VectorT<T> b2;
  MatrixT<T> wa;  // actions x ActorInputs()
  VectorT<T> ba;
  MatrixT<T> wc;  // 1 x hidden
  VectorT<T> bc;  // size 1

  static NetParams Zeros(const NetShape& s) {
    NetParams p;
    p.w1 = MatrixT<T>::Zero(s.hidden, s.input_dim);
    p.b1 = VectorT<T>::Zero(s.hidden);
    p.w2 = MatrixT<T>::Zero(s.hidden, s.hidden);
    p.b2 = VectorT<T>::Zero(s.hidden);
    p.wa = MatrixT<T>::Zero(s.actions, s.ActorInputs());
    p.ba = VectorT<T>::Zero(s.actions);
    p.wc = MatrixT<T>::Zero(1, s.hidden);
    p.bc = VectorT<T>::Zero(1);
    return p;
  }

  // f(name, tensor) for every tensor in a fixed order.
  template <typename F>
  void ForEach(F&& f) {
    f("w1", w1); f("b1", b1); f("w2", w2); f("b2", b2);
    f("wa", wa); f("ba", ba); f("wc", wc); f("bc", bc);
  }
  template <typename F>
  void ForEach(F&& f) const {
    f("w1", w1); f("b1", b1); f("w2", w2); f("b2", b2);
    f("wa", wa); f("ba", ba); f("wc", wc); f("bc", bc);
  }

  Eigen::Index Size() const {
    Eigen::Index n = 0;
    ForEach([&](const char*, const auto& t) { n += t.size(); });
    return n;
  }

  VectorT<T> Flatten() const {
    VectorT<T> out(Size());
    Eigen::Index at = 0;
    ForEach([&](const char*, const auto& t) {
      std::copy(t.data(), t.data() + t.size(), out.data() + at);
      at += t.size();
    });
    return out;
  }

  void Assign(const VectorT<T>& flat) {
    if (flat.size() != Size()) throw std::invalid_argument("parameter vector size mismatch");
    Eigen::Index at = 0;
    ForEach([&](const char*, auto& t) {
      std::copy(flat.data() + at, flat.data() + at + t.size(), t.data());
      at += t.size();
    });
  }

  template <typename U>
  NetParams<U> Cast() const {
    NetParams<U> p;
    p.w1 = w1.template cast<U>(); p.b1 = b1.template cast<U>();
    p.w2 = w2.template cast<U>(); p.b2 = b2.template cast<U>();
    p.wa = wa.template cast<U>(); p.ba = ba.template cast<U>();
    p.wc = wc.template cast<U>(); p.bc = bc.template cast<U>();
    return p;
  }
};

// Hidden layers uniform in +-1/sqrt(fan_in); both heads start at zero so the
// initial policy is uniform and the initial value is 0.
NetParams<double> InitParams(const NetShape& shape, Rng& rng);

// Intermediate values of a batched forward pass; columns are samples.
template <typename T>
struct ForwardCache {
  MatrixT<T> x;
  MatrixT<T> h1;
  MatrixT<T> h2;
  std::vector<MatrixT<T>> log_probs;  // per slot, actions x batch
  Eigen::Matrix<T, 1, Eigen::Dynamic> value;
};

template <typename T>
void LogSoftmaxColumns(MatrixT<T>* m) {
  for (Eigen::Index c = 0; c < m->cols(); ++c) {
    auto col = m->col(c);
    const T mx = col.maxCoeff();
    T sum = 0;
    for (Eigen::Index r = 0; r < col.size(); ++r) sum += std::exp(col(r) - mx);
    col.array() -= mx + std::log(sum);
  }
}

template <typename T>
ForwardCache<T> Forward(const NetParams<T>& p, const NetShape& s, const MatrixT<T>& x) {
  if (x.rows() != s.input_dim) throw std::invalid_argument("observation size does not match the network");
  if (!x.allFinite()) throw NonFiniteError("non-finite network input");
  ForwardCache<T> c;
  c.x = x;
  c.h1 = ((p.w1 * x).colwise() + p.b1).array().tanh().matrix();
  c.h2 = ((p.w2 * c.h1).colwise() + p.b2).array().tanh().matrix();
  const MatrixT<T> shared = (p.wa.leftCols(s.hidden) * c.h2).colwise() + p.ba;
  const auto wf = p.wa.middleCols(s.hidden, s.slot_features);
  c.log_probs.resize(static_cast<std::size_t>(s.slots));
  for (int k = 0; k < s.slots; ++k) {
    MatrixT<T> logits = shared + wf * x.middleRows(s.SlotOffset() + k * s.slot_features,
                                                   s.slot_features);
    logits.colwise() += p.wa.col(s.hidden + s.slot_features + k);
    LogSoftmaxColumns(&logits);
    c.log_probs[static_cast<std::size_t>(k)] = std::move(logits);
  }
  c.value = (p.wc * c.h2).array() + p.bc(0);
  if (!c.value.allFinite()) throw NonFiniteError("non-finite network output");
  return c;
}

// One minibatch of the clipped-surrogate loss. actions(k, i) < 0 marks an
// empty slot; the sample's log-probability is the sum over filled slots.
template <typename T>
struct LossBatch {
  MatrixT<T> x;
  Eigen::MatrixXi actions;  // slots x batch
  VectorT<T> old_log_prob;
  VectorT<T> advantage;
  VectorT<T> value_target;
};

struct LossConfig {
  double clip_ratio = 0.2;
  bool clip = true;  // false gives the plain importance-weighted policy gradient
  double value_coef = 0.5;
  double entropy_coef = 0.01;
};

template <typename T>
struct LossTerms {
  T total = 0;
  T surrogate = 0;  // mean clipped surrogate (maximized)
  T value = 0;      // mean squared value error
  T entropy = 0;    // mean summed entropy over filled slots
  T clip_fraction = 0;
};

// Loss = -surrogate + value_coef * value - entropy_coef * entropy, averaged
// over the batch. Writes dLoss/dparams into *grad when grad is not null.
template <typename T>
LossTerms<T> Loss(const NetParams<T>& p, const NetShape& s, const LossBatch<T>& b,
                  const LossConfig& cfg, NetParams<T>* grad) {
  const Eigen::Index n = b.x.cols();
  if (n == 0) throw std::invalid_argument("empty loss batch");
  const ForwardCache<T> c = Forward(p, s, b.x);
  const T inv_n = T(1) / static_cast<T>(n);
  const T eps = static_cast<T>(cfg.clip_ratio);

  LossTerms<T> out;
  std::vector<MatrixT<T>> dlogits(static_cast<std::size_t>(s.slots),
                                  MatrixT<T>::Zero(s.actions, n));
  Eigen::Matrix<T, 1, Eigen::Dynamic> dvalue(n);

  for (Eigen::Index i = 0; i < n; ++i) {
    T log_prob = 0;
    for (int k = 0; k < s.slots; ++k) {
      const int a = b.actions(k, i);
      if (a >= 0) log_prob += c.log_probs[static_cast<std::size_t>(k)](a, i);
    }
    const T ratio = std::exp(log_prob - b.old_log_prob(i));
    const T adv = b.advantage(i);
    const T unclipped = ratio * adv;
    T surrogate = unclipped;
    bool pass_gradient = true;
    if (cfg.clip) {
      const T clipped = std::clamp(ratio, T(1) - eps, T(1) + eps) * adv;
      if (clipped < unclipped) {
        surrogate = clipped;
        pass_gradient = false;  // the clamp is active and flat in the ratio
      }
      if (ratio < T(1) - eps || ratio > T(1) + eps) out.clip_fraction += inv_n;
    }
    out.surrogate += surrogate * inv_n;
    // d(-surrogate)/d(log_prob) = -ratio * adv on the unclipped branch.
    const T dlogp = pass_gradient ? -unclipped * inv_n : T(0);

    for (int k = 0; k < s.slots; ++k) {
      const int a = b.actions(k, i);
      if (a < 0) continue;
      const auto lp = c.log_probs[static_cast<std::size_t>(k)].col(i);
      T entropy = 0;
      for (int j = 0; j < s.actions; ++j) entropy -= std::exp(lp(j)) * lp(j);
      out.entropy += entropy * inv_n;
      auto d = dlogits[static_cast<std::size_t>(k)].col(i);
      const T went = static_cast<T>(cfg.entropy_coef) * inv_n;
      for (int j = 0; j < s.actions; ++j) {
        const T pj = std::exp(lp(j));
        d(j) += dlogp * ((j == a ? T(1) : T(0)) - pj);
        // dH/dz_j = -p_j (log p_j + H)
        d(j) += went * pj * (lp(j) + entropy);
      }
    }

    const T err = c.value(i) - b.value_target(i);
    out.value += err * err * inv_n;
    dvalue(i) = T(2) * static_cast<T>(cfg.value_coef) * err * inv_n;
  }
  out.total = -out.surrogate + static_cast<T>(cfg.value_coef) * out.value -
              static_cast<T>(cfg.entropy_coef) * out.entropy;
  if (!std::isfinite(static_cast<double>(out.total))) throw NonFiniteError("non-finite loss");
  if (grad == nullptr) return out;

  *grad = NetParams<T>::Zeros(s);
  MatrixT<T> dh2 = p.wc.transpose() * dvalue;
  grad->wc = dvalue * c.h2.transpose();
  grad->bc(0) = dvalue.sum();
  for (int k = 0; k < s.slots; ++k) {
    const MatrixT<T>& d = dlogits[static_cast<std::size_t>(k)];
    grad->wa.leftCols(s.hidden) += d * c.h2.transpose();
    grad->wa.middleCols(s.hidden, s.slot_features) +=
        d * b.x.middleRows(s.SlotOffset() + k * s.slot_features, s.slot_features).transpose();
    grad->wa.col(s.hidden + s.slot_features + k) += d.rowwise().sum();
    grad->ba += d.rowwise().sum();
    dh2 += p.wa.leftCols(s.hidden).transpose() * d;
  }
  const MatrixT<T> dz2 = dh2.cwiseProduct((T(1) - c.h2.array().square()).matrix());
  grad->w2 = dz2 * c.h1.transpose();
  grad->b2 = dz2.rowwise().sum();
  const MatrixT<T> dz1 =
      (p.w2.transpose() * dz2).cwiseProduct((T(1) - c.h1.array().square()).matrix());
  grad->w1 = dz1 * b.x.transpose();
  grad->b1 = dz1.rowwise().sum();
  return out;
}

struct PolicyOutput {
  std::vector<std::vector<double>> probs;  // per slot, sums to 1
  std::vector<std::vector<double>> log_probs;
  double value = 0.0;
};

class PolicyNet {
 public:
  PolicyNet() = default;
  PolicyNet(const NetShape& shape, Rng& rng);
  PolicyNet(const NetShape& shape, NetParams<double> params);

  PolicyOutput Forward(const std::vector<double>& observation) const;
  // Values of a batch of observations stored as columns.
  Eigen::RowVectorXd Values(const Eigen::MatrixXd& x) const;

  const NetShape& shape() const { return shape_; }
  const NetParams<double>& params() const { return params_; }
  NetParams<double>& mutable_params() { return params_; }

  // Plain-text tensor dump: a version line, the shape, then one line per
  // tensor ("name rows cols v0 v1 ...") in round-trip precision.
  void Write(std::ostream& out) const;
  static PolicyNet Read(std::istream& in);

 private:
  NetShape shape_;
  NetParams<double> params_;
};

}  // namespace lanestress

#endif  // LANESTRESS_POLICY_NET_HPP_
