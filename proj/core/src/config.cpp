#include "uavnet/config.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace uavnet::config {

using nlohmann::json;

namespace {

json cell_json(mobility::Cell c) { return json::array({c.x, c.y}); }

mobility::Cell cell_from(const json& j, const char* key) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number_integer() || !j[1].is_number_integer()) {
    throw ConfigError(std::string("env.") + key + " must be a pair of integers");
  }
  return {j[0].get<int>(), j[1].get<int>()};
}

json to_json(const ExperimentConfig& c) {
  const env::EnvConfig& e = c.env;
  const training::MarlConfig& m = c.marl;
  json env_section = {
      {"num_uavs", e.num_uavs},
      {"num_gts", e.num_gts},
      {"num_slots", e.num_slots},
      {"grid_x", e.limits.grid_x},
      {"grid_y", e.limits.grid_y},
      {"cell_size", e.limits.cell_size},
      {"level_height", e.limits.level_height},
      {"min_altitude", e.limits.min_altitude},
      {"max_altitude", e.limits.max_altitude},
      {"max_horizontal_speed", e.limits.max_horizontal_speed},
      {"max_vertical_speed", e.limits.max_vertical_speed},
      {"min_slot", e.limits.min_slot},
      {"max_slot", e.limits.max_slot},
      {"comm_radius", e.comm_radius},
      {"start_cell", cell_json(e.start_cell)},
      {"final_cell", cell_json(e.final_cell)},
      {"initial_level", e.initial_level},
      {"ris_position", json::array({e.ris.position.x / e.limits.cell_size,
                                    e.ris.position.y / e.limits.cell_size})},
      {"ris_level", e.ris.height / e.limits.level_height},
      {"ris_rows", e.ris.rows},
      {"ris_cols", e.ris.cols},
      {"ris_row_spacing", e.ris.row_spacing},
      {"ris_col_spacing", e.ris.col_spacing},
      {"wavelength", e.ris.wavelength},
      {"reflection_amplitude", e.ris.reflection_amplitude},
      {"pathloss_const", e.ris.pathloss_const},
      {"steering_convention", channel::to_string(e.ris.convention)},
      {"antenna_side", e.antenna.side},
      {"antenna_spacing", e.antenna.spacing},
      {"bandwidth_hz", e.bandwidth_hz},
      {"tx_power_w", e.tx_power_w},
      {"noise_dbm_per_hz", e.noise_dbm_per_hz},
      {"blockage_a", e.blockage_a},
      {"blockage_b", e.blockage_b},
      {"demand_bits", e.demand_bits},
      {"tip_speed", e.power.tip_speed},
      {"hover_induced_speed", e.power.hover_induced_speed},
      {"drag_ratio", e.power.drag_ratio},
      {"rotor_solidity", e.power.rotor_solidity},
      {"air_density", e.power.air_density},
      {"disc_area", e.power.disc_area},
      {"climb_power", e.power.climb_power},
  };
  json marl_section = {
      {"variant", policy::to_string(m.variant)},
      {"gamma", m.gamma},
      {"beta", m.beta},
      {"alpha", m.alpha},
      {"lr_actor", m.lr_actor},
      {"lr_critic", m.lr_critic},
      {"batch_size", m.batch_size},
      {"hidden_size", m.hidden_size},
      {"encoder_size", m.encoder_size},
      {"max_degree", m.max_degree},
      {"episodes", m.episodes},
      {"entropy_sign", training::to_string(m.entropy_sign)},
      {"reward_scale", m.reward_scale},
      {"bootstrap", training::to_string(m.bootstrap)},
      {"log_std_init", m.log_std_init},
      {"share_parameters", m.share_parameters},
      {"checkpoint_every", m.checkpoint_every},
      {"divergence_threshold", m.divergence_threshold},
  };
  json run_section = {{"seeds", c.run.seeds}, {"output_dir", c.run.output_dir}};
  return json{{"env", env_section}, {"marl", marl_section}, {"run", run_section}};
}

template <typename T>
T read_as(const json& j, const std::string& where) {
  try {
    if constexpr (std::is_same_v<T, double>) {
      if (!j.is_number()) throw ConfigError(where + " must be a number");
    } else if constexpr (std::is_same_v<T, int>) {
      if (!j.is_number_integer()) throw ConfigError(where + " must be an integer");
    } else if constexpr (std::is_same_v<T, bool>) {
      if (!j.is_boolean()) throw ConfigError(where + " must be true or false");
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (!j.is_string()) throw ConfigError(where + " must be a string");
    }
    return j.get<T>();
  } catch (const json::exception& ex) {
    throw ConfigError(where + ": " + ex.what());
  }
}

ExperimentConfig from_json(const json& root) {
  ExperimentConfig c;
  const json& e = root.at("env");
  const json& m = root.at("marl");
  const json& r = root.at("run");
  const auto num = [&](const json& s, const char* sec, const char* key) {
    return read_as<double>(s.at(key), std::string(sec) + "." + key);
  };
  const auto integer = [&](const json& s, const char* sec, const char* key) {
    return read_as<int>(s.at(key), std::string(sec) + "." + key);
  };

  env::EnvConfig& ec = c.env;
  ec.num_uavs = integer(e, "env", "num_uavs");
  ec.num_gts = integer(e, "env", "num_gts");
  ec.num_slots = integer(e, "env", "num_slots");
  ec.limits.grid_x = integer(e, "env", "grid_x");
  ec.limits.grid_y = integer(e, "env", "grid_y");
  ec.limits.cell_size = num(e, "env", "cell_size");
  ec.limits.level_height = num(e, "env", "level_height");
  ec.limits.min_altitude = num(e, "env", "min_altitude");
  ec.limits.max_altitude = num(e, "env", "max_altitude");
  ec.limits.max_horizontal_speed = num(e, "env", "max_horizontal_speed");
  ec.limits.max_vertical_speed = num(e, "env", "max_vertical_speed");
  ec.limits.min_slot = num(e, "env", "min_slot");
  ec.limits.max_slot = num(e, "env", "max_slot");
  ec.comm_radius = num(e, "env", "comm_radius");
  ec.start_cell = cell_from(e.at("start_cell"), "start_cell");
  ec.final_cell = cell_from(e.at("final_cell"), "final_cell");
  ec.initial_level = integer(e, "env", "initial_level");
  const json& ris_pos = e.at("ris_position");
  if (!ris_pos.is_array() || ris_pos.size() != 2 || !ris_pos[0].is_number() || !ris_pos[1].is_number()) {
    throw ConfigError("env.ris_position must be a pair of numbers (cells)");
  }
  ec.ris.position = {ris_pos[0].get<double>() * ec.limits.cell_size,
                     ris_pos[1].get<double>() * ec.limits.cell_size};
  ec.ris.height = num(e, "env", "ris_level") * ec.limits.level_height;
  ec.ris.rows = integer(e, "env", "ris_rows");
  ec.ris.cols = integer(e, "env", "ris_cols");
  ec.ris.row_spacing = num(e, "env", "ris_row_spacing");
  ec.ris.col_spacing = num(e, "env", "ris_col_spacing");
  ec.ris.wavelength = num(e, "env", "wavelength");
  ec.ris.reflection_amplitude = num(e, "env", "reflection_amplitude");
  ec.ris.pathloss_const = num(e, "env", "pathloss_const");
  try {
    ec.ris.convention = channel::parse_steering_convention(
        read_as<std::string>(e.at("steering_convention"), "env.steering_convention"));
  } catch (const std::invalid_argument& ex) {
    throw ConfigError(std::string("env.steering_convention: ") + ex.what());
  }
  ec.antenna.side = integer(e, "env", "antenna_side");
  ec.antenna.spacing = num(e, "env", "antenna_spacing");
  ec.bandwidth_hz = num(e, "env", "bandwidth_hz");
  ec.tx_power_w = num(e, "env", "tx_power_w");
  ec.noise_dbm_per_hz = num(e, "env", "noise_dbm_per_hz");
  ec.blockage_a = num(e, "env", "blockage_a");
  ec.blockage_b = num(e, "env", "blockage_b");
  ec.demand_bits = num(e, "env", "demand_bits");
  ec.power.tip_speed = num(e, "env", "tip_speed");
  ec.power.hover_induced_speed = num(e, "env", "hover_induced_speed");
  ec.power.drag_ratio = num(e, "env", "drag_ratio");
  ec.power.rotor_solidity = num(e, "env", "rotor_solidity");
  ec.power.air_density = num(e, "env", "air_density");
  ec.power.disc_area = num(e, "env", "disc_area");
  ec.power.climb_power = num(e, "env", "climb_power");
  ec.power.profile_power = mobility::hover_profile_power(ec.power.air_density,
                                                         ec.power.rotor_solidity, ec.power.disc_area);
  ec.power.induced_power = mobility::hover_induced_power(ec.power.air_density, ec.power.disc_area);

  training::MarlConfig& mc = c.marl;
  try {
    mc.variant = policy::parse_variant(read_as<std::string>(m.at("variant"), "marl.variant"));
    mc.entropy_sign =
        training::parse_entropy_sign(read_as<std::string>(m.at("entropy_sign"), "marl.entropy_sign"));
    mc.bootstrap = training::parse_bootstrap(read_as<std::string>(m.at("bootstrap"), "marl.bootstrap"));
  } catch (const std::invalid_argument& ex) {
    throw ConfigError(ex.what());
  }
  mc.gamma = num(m, "marl", "gamma");
  mc.beta = num(m, "marl", "beta");
  mc.alpha = num(m, "marl", "alpha");
  mc.lr_actor = num(m, "marl", "lr_actor");
  mc.lr_critic = num(m, "marl", "lr_critic");
  mc.batch_size = integer(m, "marl", "batch_size");
  mc.hidden_size = integer(m, "marl", "hidden_size");
  mc.encoder_size = integer(m, "marl", "encoder_size");
  mc.max_degree = integer(m, "marl", "max_degree");
  mc.episodes = integer(m, "marl", "episodes");
  mc.reward_scale = num(m, "marl", "reward_scale");
  mc.log_std_init = num(m, "marl", "log_std_init");
  mc.share_parameters = read_as<bool>(m.at("share_parameters"), "marl.share_parameters");
  mc.checkpoint_every = integer(m, "marl", "checkpoint_every");
  mc.divergence_threshold = num(m, "marl", "divergence_threshold");

  const json& seeds = r.at("seeds");
  if (!seeds.is_array() || seeds.empty()) throw ConfigError("run.seeds must be a nonempty array");
  c.run.seeds.clear();
  for (const json& s : seeds) {
    if (!s.is_number_unsigned() && !(s.is_number_integer() && s.get<long long>() >= 0)) {
      throw ConfigError("run.seeds entries must be nonnegative integers");
    }
    c.run.seeds.push_back(s.get<std::uint64_t>());
  }
  c.run.output_dir = read_as<std::string>(r.at("output_dir"), "run.output_dir");
  c.validate();
  return c;
}

void merge_section(json& target, const json& source, const std::string& section) {
  if (!source.is_object()) throw ConfigError("section '" + section + "' must be an object");
  for (const auto& [key, value] : source.items()) {
    if (!target.contains(key)) throw ConfigError("unknown key '" + section + "." + key + "'");
    target[key] = value;
  }
}

json merge(const json& user) {
  json base = to_json(ExperimentConfig{});
  if (user.is_null()) return base;
  if (!user.is_object()) throw ConfigError("configuration root must be an object");
  for (const auto& [section, body] : user.items()) {
    if (!base.contains(section)) throw ConfigError("unknown section '" + section + "'");
    merge_section(base[section], body, section);
  }
  return base;
}

void override_json(json& root, const std::string& assignment) {
  const auto eq = assignment.find('=');
  const auto dot = assignment.find('.');
  if (eq == std::string::npos || dot == std::string::npos || dot > eq) {
    throw ConfigError("override '" + assignment + "' must look like section.key=value");
  }
  const std::string section = assignment.substr(0, dot);
  const std::string key = assignment.substr(dot + 1, eq - dot - 1);
  const std::string text = assignment.substr(eq + 1);
  if (!root.contains(section)) throw ConfigError("unknown section '" + section + "'");
  if (!root[section].contains(key)) throw ConfigError("unknown key '" + section + "." + key + "'");
  json value = json::parse(text, nullptr, false);
  if (value.is_discarded()) value = text;
  root[section][key] = value;
}

}  // namespace

void ExperimentConfig::validate() const {
  try {
    env.validate();
    marl.validate();
  } catch (const std::invalid_argument& ex) {
    throw ConfigError(ex.what());
  }
  if (marl.max_degree >= 0 && marl.max_degree < env.num_uavs - 1) {
    throw ConfigError("marl.max_degree must be -1 or at least num_uavs - 1");
  }
  if (run.seeds.empty()) throw ConfigError("run.seeds must not be empty");
  if (marl.variant == policy::Variant::kDial) {
    const int onehot = 5 + 3 + env.antenna.positions() + env.num_gts;
    if (marl.encoder_size < onehot) {
      throw ConfigError("marl.encoder_size must be at least " + std::to_string(onehot) + " for DIAL");
    }
  }
}

ExperimentConfig parse_text(const std::string& text, const std::vector<std::string>& overrides) {
  json user;
  if (!text.empty()) {
    try {
      user = json::parse(text);
    } catch (const json::parse_error& ex) {
      throw ConfigError(std::string("malformed configuration: ") + ex.what());
    }
  }
  json merged = merge(user);
  for (const auto& o : overrides) override_json(merged, o);
  ExperimentConfig config;
  try {
    config = from_json(merged);
  } catch (const json::exception& ex) {
    throw ConfigError(ex.what());
  }
  config.validate();
  return config;
}

ExperimentConfig parse_file(const std::filesystem::path& path, const std::vector<std::string>& overrides) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open configuration " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_text(ss.str(), overrides);
}

void apply_override(ExperimentConfig& config, const std::string& assignment) {
  json root = to_json(config);
  override_json(root, assignment);
  config = from_json(root);
}

std::string serialize(const ExperimentConfig& config) { return to_json(config).dump(2) + "\n"; }

std::string hash(const ExperimentConfig& config) {
  const std::string canonical = to_json(config).dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : canonical) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

bool operator==(const ExperimentConfig& a, const ExperimentConfig& b) {
  return to_json(a) == to_json(b);
}

}  // namespace uavnet::config
