#include "lanestress/trace.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

namespace lanestress {

using nlohmann::json;

namespace {

json VehicleToJson(const VehicleState& v) {
  return json::array({v.id, v.x, v.y, v.vx, v.vy, v.heading, v.lane});
}

VehicleState VehicleFromJson(const json& j, const VehicleGeometry& geometry) {
  if (!j.is_array() || j.size() != 7) throw TraceParseError("vehicle record must have 7 fields");
  VehicleState v;
  v.id = j[0].get<int>();
  v.x = j[1].get<double>();
  v.y = j[2].get<double>();
  v.vx = j[3].get<double>();
  v.vy = j[4].get<double>();
  v.heading = j[5].get<double>();
  v.lane = j[6].get<int>();
  v.geometry = geometry;
  v.is_ego = v.id == 0;
  return v;
}

json VehiclesToJson(const std::vector<VehicleState>& vs) {
  json out = json::array();
  for (const auto& v : vs) out.push_back(VehicleToJson(v));
  return out;
}

std::vector<VehicleState> VehiclesFromJson(const json& j, const VehicleGeometry& geometry) {
  std::vector<VehicleState> out;
  for (const auto& e : j) out.push_back(VehicleFromJson(e, geometry));
  return out;
}

json PairsToJson(const std::vector<std::pair<int, int>>& pairs) {
  json out = json::array();
  for (const auto& [a, b] : pairs) out.push_back(json::array({a, b}));
  return out;
}

std::vector<std::pair<int, int>> PairsFromJson(const json& j) {
  std::vector<std::pair<int, int>> out;
  for (const auto& e : j) out.emplace_back(e.at(0).get<int>(), e.at(1).get<int>());
  return out;
}

json NullableDouble(double v) {
  return std::isfinite(v) ? json(v) : json(nullptr);
}

double DoubleOrInfinity(const json& j) {
  return j.is_null() ? std::numeric_limits<double>::infinity() : j.get<double>();
}

VehicleGeometry GeometryFromConfig(const json& config) {
  VehicleGeometry g;
  if (config.contains("vehicle_length")) g.length = config["vehicle_length"].get<double>();
  if (config.contains("vehicle_width")) g.width = config["vehicle_width"].get<double>();
  return g;
}

template <typename Enum, std::size_t N>
Enum EnumFromName(std::string_view name, const std::array<std::string_view, N>& names,
                  const char* what) {
  for (std::size_t i = 0; i < N; ++i) {
    if (names[i] == name) return static_cast<Enum>(i);
  }
  throw TraceParseError(std::string("unknown ") + what + " '" + std::string(name) + "'");
}

constexpr std::array<std::string_view, 3> kEgoManeuverNames = {"S", "R", "L"};
constexpr std::array<std::string_view, 6> kTypeNames = {"FL", "FE", "FR", "RL", "RE", "RR"};
constexpr std::array<std::string_view, 3> kGroupNames = {"RearEnd", "LaneChange", "Other"};
constexpr std::array<std::string_view, 5> kCrashedNames = {"SV_LLC", "SV_RLC", "SV_CSK",
                                                           "SV_A", "SV_D"};

}  // namespace

std::string_view StatusName(EpisodeStatus status) {
  switch (status) {
    case EpisodeStatus::kRunning: return "running";
    case EpisodeStatus::kFailure: return "failure";
    case EpisodeStatus::kHorizonExceeded: return "horizon_exceeded";
  }
  return "?";
}

EpisodeStatus ParseStatus(std::string_view name) {
  if (name == "running") return EpisodeStatus::kRunning;
  if (name == "failure") return EpisodeStatus::kFailure;
  if (name == "horizon_exceeded") return EpisodeStatus::kHorizonExceeded;
  throw TraceParseError("unknown status '" + std::string(name) + "'");
}

json CrashToJson(const CrashRecord& c) {
  return json{
      {"episode", c.episode},
      {"collision_step", c.collision_step},
      {"ego_pre", VehicleToJson(c.ego_pre)},
      {"other_pre", VehicleToJson(c.other_pre)},
      {"ego_maneuver", EgoManeuverName(c.ego_maneuver)},
      {"other_maneuver", CrashedManeuverName(c.other_maneuver)},
      {"type", CollisionTypeName(c.type)},
      {"group", CrashGroupName(c.group)},
      {"ego_speed", c.ego_speed},
      {"ego_lane", c.ego_lane},
      {"non_ego_collision", c.non_ego_collision},
  };
}

CrashRecord CrashFromJson(const json& j) {
  CrashRecord c;
  c.episode = j.at("episode").get<int>();
  c.collision_step = j.at("collision_step").get<int>();
  c.ego_pre = VehicleFromJson(j.at("ego_pre"), {});
  c.other_pre = VehicleFromJson(j.at("other_pre"), {});
  c.ego_maneuver = EnumFromName<EgoManeuver>(j.at("ego_maneuver").get<std::string>(),
                                             kEgoManeuverNames, "ego maneuver");
  c.other_maneuver = EnumFromName<Maneuver>(j.at("other_maneuver").get<std::string>(),
                                            kCrashedNames, "crashed-vehicle maneuver");
  c.type = EnumFromName<CollisionType>(j.at("type").get<std::string>(), kTypeNames,
                                       "collision type");
  c.group = EnumFromName<CrashGroup>(j.at("group").get<std::string>(), kGroupNames,
                                     "crash group");
  c.ego_speed = j.at("ego_speed").get<double>();
  c.ego_lane = j.at("ego_lane").get<int>();
  c.non_ego_collision = j.at("non_ego_collision").get<bool>();
  return c;
}

void WriteTrace(std::ostream& out, const ScenarioTrace& trace) {
  const TraceHeader& h = trace.header;
  json header{
      {"record", "header"},
      {"schema", h.schema},
      {"source", h.source},
      {"episode", h.episode},
      {"episode_seed", h.episode_seed},
      {"lambda", h.lambda},
      {"t_delta", h.t_delta},
      {"config", h.config},
      {"initial", VehiclesToJson(h.initial)},
  };
  out << header.dump() << '\n';

  for (const StepRecord& s : trace.steps) {
    json action = json::array();
    for (const auto& a : s.action) {
      action.push_back(a ? json(static_cast<int>(*a)) : json(nullptr));
    }
    json activity = json::array();
    for (const Maneuver m : s.activity) activity.push_back(static_cast<int>(m));
    json step{
        {"record", "step"},
        {"step", s.step},
        {"action", action},
        {"controlled", s.controlled},
        {"reward", s.reward},
        {"phi", s.phi},
        {"psi", s.psi},
        {"min_ttc", NullableDouble(s.min_ttc)},
        {"status", StatusName(s.status)},
        {"vehicles", VehiclesToJson(s.vehicles)},
        {"activity", activity},
        {"collisions", PairsToJson(s.collisions)},
    };
    out << step.dump() << '\n';
  }

  const TraceFooter& f = trace.footer;
  json footer{
      {"record", "footer"},
      {"status", StatusName(f.status)},
      {"steps", f.steps},
      {"crash", f.crash ? CrashToJson(*f.crash) : json(nullptr)},
      {"non_ego_collisions", PairsToJson(f.non_ego_collisions)},
  };
  out << footer.dump() << '\n';
}

ScenarioTrace ReadTrace(std::istream& in) {
  ScenarioTrace trace;
  std::string line;
  int line_no = 0;
  bool have_header = false;
  bool have_footer = false;
  VehicleGeometry geometry;
  try {
    while (std::getline(in, line)) {
      ++line_no;
      if (line.empty()) continue;
      if (have_footer) throw TraceParseError("content after footer");
      const json j = json::parse(line);
      const std::string record = j.at("record").get<std::string>();
      if (record == "header") {
        if (have_header) throw TraceParseError("duplicate header");
        TraceHeader& h = trace.header;
        h.schema = j.at("schema").get<int>();
        if (h.schema != kTraceSchema) {
          throw TraceParseError("unsupported trace schema " + std::to_string(h.schema));
        }
        h.source = j.at("source").get<std::string>();
        h.episode = j.at("episode").get<int>();
        h.episode_seed = j.at("episode_seed").get<std::uint64_t>();
        h.lambda = j.at("lambda").get<double>();
        h.t_delta = j.at("t_delta").get<double>();
        h.config = j.at("config");
        geometry = GeometryFromConfig(h.config);
        h.initial = VehiclesFromJson(j.at("initial"), geometry);
        have_header = true;
      } else if (record == "step") {
        if (!have_header) throw TraceParseError("step before header");
        StepRecord s;
        s.step = j.at("step").get<int>();
        const json& action = j.at("action");
        const json& controlled = j.at("controlled");
        if (action.size() != kSlotCount || controlled.size() != kSlotCount) {
          throw TraceParseError("action and controlled lists need one entry per slot");
        }
        for (int k = 0; k < kSlotCount; ++k) {
          if (!action[k].is_null()) {
            const int a = action[k].get<int>();
            if (a < 0 || a >= kManeuverCount) throw TraceParseError("maneuver out of range");
            s.action[k] = static_cast<Maneuver>(a);
          }
          s.controlled[k] = controlled[k].get<int>();
        }
        s.reward = j.at("reward").get<double>();
        s.phi = j.at("phi").get<double>();
        s.psi = j.at("psi").get<double>();
        s.min_ttc = DoubleOrInfinity(j.at("min_ttc"));
        s.status = ParseStatus(j.at("status").get<std::string>());
        s.vehicles = VehiclesFromJson(j.at("vehicles"), geometry);
        for (const auto& a : j.at("activity")) {
          const int m = a.get<int>();
          if (m < 0 || m >= kManeuverCount) throw TraceParseError("activity out of range");
          s.activity.push_back(static_cast<Maneuver>(m));
        }
        s.collisions = PairsFromJson(j.at("collisions"));
        trace.steps.push_back(std::move(s));
      } else if (record == "footer") {
        if (!have_header) throw TraceParseError("footer before header");
        TraceFooter& f = trace.footer;
        f.status = ParseStatus(j.at("status").get<std::string>());
        f.steps = j.at("steps").get<int>();
        if (!j.at("crash").is_null()) f.crash = CrashFromJson(j.at("crash"));
        f.non_ego_collisions = PairsFromJson(j.at("non_ego_collisions"));
        have_footer = true;
      } else {
        throw TraceParseError("unknown record type '" + record + "'");
      }
    }
  } catch (const json::exception& e) {
    throw TraceParseError("line " + std::to_string(line_no) + ": " + e.what());
  } catch (const TraceParseError& e) {
    throw TraceParseError("line " + std::to_string(line_no) + ": " + e.what());
  }
  if (!have_header) throw TraceParseError("missing header");
  if (!have_footer) throw TraceParseError("missing footer (truncated trace)");
  if (static_cast<int>(trace.steps.size()) != trace.footer.steps) {
    throw TraceParseError("footer step count does not match the step records");
  }
  return trace;
}

void SaveTrace(const std::filesystem::path& path, const ScenarioTrace& trace) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  WriteTrace(out, trace);
}

ScenarioTrace LoadTrace(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw TraceParseError("cannot open " + path.string());
  return ReadTrace(in);
}

std::string TraceFileName(int episode) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "episode_%06d.jsonl", episode);
  return buf;
}

TraceDirectory LoadTraceDirectory(const std::filesystem::path& dir) {
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".jsonl") {
      files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end());
  TraceDirectory out;
  for (const auto& f : files) {
    try {
      out.traces.push_back(LoadTrace(f));
    } catch (const TraceParseError&) {
      out.malformed.push_back(f.filename().string());
    }
  }
  return out;
}

std::vector<CrashRecord> CollectCrashes(const std::vector<ScenarioTrace>& traces) {
  std::vector<CrashRecord> out;
  for (const auto& t : traces) {
    if (t.footer.status == EpisodeStatus::kFailure && t.footer.crash) {
      out.push_back(*t.footer.crash);
    }
  }
  return out;
}

}  // namespace lanestress
