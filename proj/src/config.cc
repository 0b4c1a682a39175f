#include "lanestress/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>

namespace lanestress {

namespace {

using nlohmann::json;

struct Field {
  std::string key;
  std::function<void(RunConfig&, std::string_view)> set;
  std::function<json(const RunConfig&)> get;
  std::function<void(RunConfig&, const json&)> set_json;
};

std::string_view Trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

template <typename T>
T ParseNumber(std::string_view key, std::string_view text) {
  text = Trim(text);
  T value{};
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size() || text.empty()) {
    throw ConfigError("invalid value '" + std::string(text) + "' for " + std::string(key));
  }
  return value;
}

template <typename T, typename Access>
Field Number(std::string key, Access access) {
  Field f;
  f.key = key;
  f.set = [key, access](RunConfig& c, std::string_view v) { access(c) = ParseNumber<T>(key, v); };
  f.get = [access](const RunConfig& c) { return json(access(c)); };
  f.set_json = [key, access](RunConfig& c, const json& j) {
    if (!j.is_number()) throw ConfigError("expected a number for " + key);
    access(c) = j.get<T>();
  };
  return f;
}

template <typename Access>
Field Real(std::string key, Access access) {
  return Number<double>(std::move(key), access);
}

std::vector<Field> BuildFields() {
  std::vector<Field> f;
  f.push_back(Number<int>("lanes", [](auto& c) -> auto& { return c.env.road.lane_count; }));
  f.push_back(Real("lane_width", [](auto& c) -> auto& { return c.env.road.lane_width; }));
  f.push_back(Real("speed_limit", [](auto& c) -> auto& { return c.env.road.speed_limit; }));
  f.push_back(Real("road_length", [](auto& c) -> auto& { return c.env.road.road_length; }));
  f.push_back(Number<int>("vehicles", [](auto& c) -> auto& { return c.env.n_vehicles; }));
  f.push_back(Real("vehicle_length", [](auto& c) -> auto& { return c.env.spawn.geometry.length; }));
  f.push_back(Real("vehicle_width", [](auto& c) -> auto& { return c.env.spawn.geometry.width; }));
  f.push_back(Real("physics_dt", [](auto& c) -> auto& { return c.env.spawn.physics_dt; }));
  f.push_back(Real("policy_dt", [](auto& c) -> auto& { return c.env.spawn.policy_dt; }));

  Field min_gap;
  min_gap.key = "min_gap";
  min_gap.set = [](RunConfig& c, std::string_view v) { c.min_gap = ParseNumber<double>("min_gap", v); };
  min_gap.get = [](const RunConfig& c) { return json(c.ResolvedEnv().spawn.min_gap); };
  min_gap.set_json = [](RunConfig& c, const json& j) {
    if (!j.is_number()) throw ConfigError("expected a number for min_gap");
    c.min_gap = j.get<double>();
  };
  f.push_back(min_gap);

  f.push_back(Real("gap_jitter", [](auto& c) -> auto& { return c.env.spawn.gap_jitter; }));
  f.push_back(Real("initial_speed", [](auto& c) -> auto& { return c.env.spawn.initial_speed; }));
  f.push_back(Real("initial_speed_min", [](auto& c) -> auto& { return c.env.spawn.initial_speed_min; }));
  f.push_back(Number<int>("observed_count", [](auto& c) -> auto& { return c.env.observed_count; }));

  f.push_back(Real("v0", [](auto& c) -> auto& { return c.env.uidm.v0; }));
  f.push_back(Real("s0", [](auto& c) -> auto& { return c.env.uidm.s0; }));
  f.push_back(Real("mu", [](auto& c) -> auto& { return c.env.uidm.mu; }));
  f.push_back(Real("delta", [](auto& c) -> auto& { return c.env.uidm.delta; }));
  f.push_back(Real("epsilon", [](auto& c) -> auto& { return c.env.uidm.epsilon; }));
  f.push_back(Real("a_max", [](auto& c) -> auto& { return c.env.uidm.a_max; }));
  f.push_back(Real("a_min", [](auto& c) -> auto& { return c.env.uidm.a_min; }));

  Field sign;
  sign.key = "braking_sign";
  sign.set = [](RunConfig& c, std::string_view v) {
    v = Trim(v);
    if (v == "minus") c.env.uidm.braking_sign = BrakingSign::kMinus;
    else if (v == "plus") c.env.uidm.braking_sign = BrakingSign::kPlusAsWritten;
    else throw ConfigError("braking_sign must be 'minus' or 'plus'");
  };
  sign.get = [](const RunConfig& c) {
    return json(c.env.uidm.braking_sign == BrakingSign::kMinus ? "minus" : "plus");
  };
  sign.set_json = [set = sign.set](RunConfig& c, const json& j) {
    if (!j.is_string()) throw ConfigError("expected a string for braking_sign");
    set(c, j.get<std::string>());
  };
  f.push_back(sign);

  f.push_back(Real("a_safe", [](auto& c) -> auto& { return c.env.mobil.a_safe; }));
  f.push_back(Real("rho", [](auto& c) -> auto& { return c.env.mobil.rho; }));
  f.push_back(Real("delta_a_th", [](auto& c) -> auto& { return c.env.mobil.delta_a_th; }));

  f.push_back(Real("speed_gain", [](auto& c) -> auto& { return c.env.controller.speed_gain; }));
  f.push_back(Real("lane_change_duration", [](auto& c) -> auto& { return c.env.controller.lane_change_duration; }));
  f.push_back(Real("speed_step", [](auto& c) -> auto& { return c.env.controller.speed_step; }));
  f.push_back(Real("lateral_cap_factor", [](auto& c) -> auto& { return c.env.controller.lateral_cap_factor; }));

  f.push_back(Real("alpha", [](auto& c) -> auto& { return c.env.reward.alpha; }));
  f.push_back(Real("beta", [](auto& c) -> auto& { return c.env.reward.beta; }));
  f.push_back(Real("lambda", [](auto& c) -> auto& { return c.env.reward.lambda; }));
  f.push_back(Real("t_delta", [](auto& c) -> auto& { return c.env.reward.t_delta; }));
  f.push_back(Real("d", [](auto& c) -> auto& { return c.env.reward.d; }));
  f.push_back(Number<int>("horizon", [](auto& c) -> auto& { return c.env.reward.horizon_T; }));
  f.push_back(Real("t_cap", [](auto& c) -> auto& { return c.env.reward.t_cap; }));
  f.push_back(Real("log_floor", [](auto& c) -> auto& { return c.env.reward.log_floor; }));

  f.push_back(Real("gamma", [](auto& c) -> auto& { return c.train.gamma; }));
  f.push_back(Real("learning_rate", [](auto& c) -> auto& { return c.train.learning_rate; }));
  f.push_back(Number<int>("batch_size", [](auto& c) -> auto& { return c.train.batch_size; }));
  f.push_back(Number<int>("rollout_length", [](auto& c) -> auto& { return c.train.rollout_length; }));
  f.push_back(Real("clip_ratio", [](auto& c) -> auto& { return c.train.clip_ratio; }));
  f.push_back(Number<int>("epochs_per_update", [](auto& c) -> auto& { return c.train.epochs_per_update; }));
  f.push_back(Number<long>("steps", [](auto& c) -> auto& { return c.train.total_env_steps; }));
  f.push_back(Real("value_coef", [](auto& c) -> auto& { return c.train.value_coef; }));
  f.push_back(Real("entropy_coef", [](auto& c) -> auto& { return c.train.entropy_coef; }));
  f.push_back(Number<std::uint64_t>("seed", [](auto& c) -> auto& { return c.train.seed; }));
  f.push_back(Real("reward_scale", [](auto& c) -> auto& { return c.train.reward_scale; }));
  f.push_back(Real("max_grad_norm", [](auto& c) -> auto& { return c.train.max_grad_norm; }));
  f.push_back(Number<int>("hidden", [](auto& c) -> auto& { return c.train.hidden; }));

  Field algorithm;
  algorithm.key = "algorithm";
  algorithm.set = [](RunConfig& c, std::string_view v) {
    try {
      c.train.algorithm = ParseAlgorithm(Trim(v));
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
  };
  algorithm.get = [](const RunConfig& c) { return json(std::string(AlgorithmName(c.train.algorithm))); };
  algorithm.set_json = [set = algorithm.set](RunConfig& c, const json& j) {
    if (!j.is_string()) throw ConfigError("expected a string for algorithm");
    set(c, j.get<std::string>());
  };
  f.push_back(algorithm);

  Field out;
  out.key = "out";
  out.set = [](RunConfig& c, std::string_view v) { c.out_dir = std::string(Trim(v)); };
  out.get = [](const RunConfig& c) { return json(c.out_dir); };
  out.set_json = [](RunConfig& c, const json& j) {
    if (!j.is_string()) throw ConfigError("expected a string for out");
    c.out_dir = j.get<std::string>();
  };
  f.push_back(out);

  Field lambdas;
  lambdas.key = "lambdas";
  lambdas.set = [](RunConfig& c, std::string_view v) {
    std::vector<double> parsed;
    std::size_t start = 0;
    while (start <= v.size()) {
      const std::size_t comma = v.find(',', start);
      const std::string_view item = v.substr(start, comma == std::string_view::npos ? v.npos : comma - start);
      parsed.push_back(ParseNumber<double>("lambdas", item));
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    c.lambdas = std::move(parsed);
  };
  lambdas.get = [](const RunConfig& c) { return json(c.lambdas); };
  lambdas.set_json = [](RunConfig& c, const json& j) {
    if (!j.is_array()) throw ConfigError("expected an array for lambdas");
    c.lambdas = j.get<std::vector<double>>();
  };
  f.push_back(lambdas);

  f.push_back(Real("reference_rear_end", [](auto& c) -> auto& { return c.reference_triple[0]; }));
  f.push_back(Real("reference_lane_change", [](auto& c) -> auto& { return c.reference_triple[1]; }));
  f.push_back(Real("reference_other", [](auto& c) -> auto& { return c.reference_triple[2]; }));
  return f;
}

const std::vector<Field>& Fields() {
  static const std::vector<Field> fields = BuildFields();
  return fields;
}

const Field& FindField(std::string_view key) {
  for (const Field& f : Fields()) {
    if (f.key == key) return f;
  }
  throw ConfigError("unknown config key '" + std::string(key) + "'");
}

}  // namespace

EnvConfig RunConfig::ResolvedEnv() const {
  EnvConfig out = env;
  out.spawn.min_gap = min_gap.value_or(env.uidm.s0 + 2.0 * env.spawn.geometry.length);
  return out;
}

void RunConfig::Validate() const {
  try {
    ResolvedEnv().Validate();
    train.Validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  const SpawnOptions& s = env.spawn;
  if (!(s.physics_dt > 0.0) || !(s.policy_dt >= s.physics_dt)) {
    throw ConfigError("need 0 < physics_dt <= policy_dt");
  }
  if (!(s.geometry.length > 0.0) || !(s.geometry.width > 0.0)) {
    throw ConfigError("vehicle dimensions must be positive");
  }
  if (!(s.initial_speed_min <= s.initial_speed) || !(s.initial_speed_min >= 0.0)) {
    throw ConfigError("need 0 <= initial_speed_min <= initial_speed");
  }
  if (!(s.gap_jitter >= 0.0)) throw ConfigError("gap_jitter must be >= 0");
  if (min_gap && !(*min_gap > 0.0)) throw ConfigError("min_gap must be > 0");
  for (double l : lambdas) {
    if (!(l >= 0.0 && l <= 1.0)) throw ConfigError("every lambda must lie in [0, 1]");
  }
  for (double q : reference_triple) {
    if (!(q >= 0.0)) throw ConfigError("reference percentages must be >= 0");
  }
  if (out_dir.empty()) throw ConfigError("out must not be empty");
}

void SetConfigValue(RunConfig* cfg, std::string_view key, std::string_view value) {
  FindField(Trim(key)).set(*cfg, value);
}

RunConfig ParseConfig(std::string_view text) {
  RunConfig cfg;
  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t nl = text.find('\n', pos);
    std::string_view line = text.substr(pos, nl == std::string_view::npos ? text.npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = Trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError("line " + std::to_string(line_no) + ": expected 'key = value'");
    }
    try {
      SetConfigValue(&cfg, line.substr(0, eq), line.substr(eq + 1));
    } catch (const ConfigError& e) {
      throw ConfigError("line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return cfg;
}

RunConfig LoadConfig(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return ParseConfig(text.str());
}

nlohmann::json ConfigToJson(const RunConfig& cfg) {
  json j = json::object();
  for (const Field& f : Fields()) j[f.key] = f.get(cfg);
  return j;
}

RunConfig ConfigFromJson(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("config snapshot must be an object");
  RunConfig cfg;
  for (const auto& [key, value] : j.items()) FindField(key).set_json(cfg, value);
  return cfg;
}

std::vector<std::string> ConfigKeys() {
  std::vector<std::string> keys;
  for (const Field& f : Fields()) keys.push_back(f.key);
  return keys;
}

}  // namespace lanestress
