#include "lanestress/policy_net.hpp"

#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

namespace lanestress {

namespace {

constexpr const char* kNetMagic = "lanestress-policy-net";
constexpr int kNetVersion = 1;

}  // namespace

void NetShape::Validate() const {
  if (hidden < 1 || slots < 1 || slot_features < 1 || actions < 2) {
    throw std::invalid_argument("invalid network shape");
  }
  if (SlotOffset() < 0) throw std::invalid_argument("input too small for the slot rows");
}

NetParams<double> InitParams(const NetShape& shape, Rng& rng) {
  shape.Validate();
  NetParams<double> p = NetParams<double>::Zeros(shape);
  const auto fill = [&rng](Eigen::MatrixXd& m) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(m.cols()));
    // Column-major fill order keeps the draw sequence independent of Eigen internals.
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      for (Eigen::Index r = 0; r < m.rows(); ++r) m(r, c) = rng.Uniform(-bound, bound);
    }
  };
  fill(p.w1);
  fill(p.w2);
  return p;
}

PolicyNet::PolicyNet(const NetShape& shape, Rng& rng)
    : shape_(shape), params_(InitParams(shape, rng)) {}

PolicyNet::PolicyNet(const NetShape& shape, NetParams<double> params)
    : shape_(shape), params_(std::move(params)) {
  shape_.Validate();
  const NetParams<double> ref = NetParams<double>::Zeros(shape_);
  if (params_.Size() != ref.Size() || params_.wa.cols() != ref.wa.cols() ||
      params_.w1.cols() != ref.w1.cols()) {
    throw std::invalid_argument("parameters do not match the network shape");
  }
}

PolicyOutput PolicyNet::Forward(const std::vector<double>& observation) const {
  const Eigen::Map<const Eigen::MatrixXd> x(observation.data(),
                                            static_cast<Eigen::Index>(observation.size()), 1);
  const ForwardCache<double> c = lanestress::Forward(params_, shape_, Eigen::MatrixXd(x));
  PolicyOutput out;
  out.value = c.value(0);
  for (const Eigen::MatrixXd& lp : c.log_probs) {
    std::vector<double> logs(lp.data(), lp.data() + lp.rows());
    std::vector<double> probs(logs.size());
    for (std::size_t j = 0; j < logs.size(); ++j) probs[j] = std::exp(logs[j]);
    out.probs.push_back(std::move(probs));
    out.log_probs.push_back(std::move(logs));
  }
  return out;
}

Eigen::RowVectorXd PolicyNet::Values(const Eigen::MatrixXd& x) const {
  if (x.rows() != shape_.input_dim) throw std::invalid_argument("observation size does not match the network");
  const Eigen::MatrixXd h1 = ((params_.w1 * x).colwise() + params_.b1).array().tanh().matrix();
  const Eigen::MatrixXd h2 = ((params_.w2 * h1).colwise() + params_.b2).array().tanh().matrix();
  return (params_.wc * h2).array() + params_.bc(0);
}

void PolicyNet::Write(std::ostream& out) const {
  out << kNetMagic << ' ' << kNetVersion << '\n';
  out << "shape " << shape_.input_dim << ' ' << shape_.hidden << ' ' << shape_.slots << ' '
      << shape_.slot_features << ' ' << shape_.actions << '\n';
  char buf[32];
  params_.ForEach([&](const char* name, const auto& t) {
    out << name << ' ' << t.rows() << ' ' << t.cols();
    for (Eigen::Index i = 0; i < t.size(); ++i) {
      std::snprintf(buf, sizeof buf, "%.17g", t.data()[i]);
      out << ' ' << buf;
    }
    out << '\n';
  });
}

PolicyNet PolicyNet::Read(std::istream& in) {
  std::string magic;
  int version = 0;
  if (!(in >> magic >> version) || magic != kNetMagic) {
    throw std::runtime_error("not a policy network dump");
  }
  if (version != kNetVersion) {
    throw std::runtime_error("unsupported policy network version " + std::to_string(version));
  }
  std::string word;
  NetShape shape;
  if (!(in >> word >> shape.input_dim >> shape.hidden >> shape.slots >> shape.slot_features >>
        shape.actions) ||
      word != "shape") {
    throw std::runtime_error("missing network shape");
  }
  shape.Validate();
  NetParams<double> p = NetParams<double>::Zeros(shape);
  p.ForEach([&](const char* name, auto& t) {
    Eigen::Index rows = 0, cols = 0;
    if (!(in >> word >> rows >> cols) || word != name || rows != t.rows() || cols != t.cols()) {
      throw std::runtime_error(std::string("bad tensor header for ") + name);
    }
    for (Eigen::Index i = 0; i < t.size(); ++i) {
      if (!(in >> t.data()[i])) throw std::runtime_error(std::string("truncated tensor ") + name);
    }
  });
  return PolicyNet(shape, std::move(p));
}

}  // namespace lanestress
