#ifndef LANESTRESS_CONFIG_HPP_
#define LANESTRESS_CONFIG_HPP_

#include <array>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "lanestress/env.hpp"
#include "lanestress/solver.hpp"

namespace lanestress {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Everything a command needs. Defaults are the experiment settings of the
// reference study: 4 lanes, 40 vehicles, lambda 0.8, t_delta 1.5 s, T = 500.
struct RunConfig {
  EnvConfig env;
  TrainConfig train;
  // Same-lane spawn spacing; unset means s0 + 2 * vehicle length.
  std::optional<double> min_gap;
  std::string out_dir = "out";
  std::vector<double> lambdas = {0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
  std::array<double, 3> reference_triple = {52.46, 26.47, 20.07};

  // Environment configuration with derived fields filled in and validated.
  EnvConfig ResolvedEnv() const;
  void Validate() const;
};

// Sets one field from its textual value. Throws ConfigError for unknown keys
// and malformed values.
void SetConfigValue(RunConfig* cfg, std::string_view key, std::string_view value);

// Reads "key = value" lines; '#' starts a comment. An empty file yields the
// defaults.
RunConfig ParseConfig(std::string_view text);
RunConfig LoadConfig(const std::filesystem::path& path);

// Flat JSON object with every key; FromJson ignores nothing and rejects
// unknown keys, so a trace header always restores the exact run settings.
nlohmann::json ConfigToJson(const RunConfig& cfg);
RunConfig ConfigFromJson(const nlohmann::json& j);

// Names of all accepted keys, in documentation order.
std::vector<std::string> ConfigKeys();

}  // namespace lanestress

#endif  // LANESTRESS_CONFIG_HPP_
