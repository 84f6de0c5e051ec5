#include "simo/scenario.hpp"

#include <array>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace simo {

using nlohmann::json;

std::string to_string(ReceiverMode mode) {
  switch (mode) {
    case ReceiverMode::conventional:
      return "conventional";
    case ReceiverMode::proposed_perfect:
      return "proposed_perfect";
    case ReceiverMode::proposed_estimated:
      return "proposed_estimated";
  }
  return "unknown";
}

ReceiverMode parse_receiver_mode(std::string_view text) {
  std::string s(text);
  for (auto& c : s) {
    if (c == '-') c = '_';
  }
  if (s == "conventional") return ReceiverMode::conventional;
  if (s == "proposed_perfect") return ReceiverMode::proposed_perfect;
  if (s == "proposed_estimated") return ReceiverMode::proposed_estimated;
  throw ConfigError("unknown receiver mode '" + std::string(text) + "'");
}

void Scenario::set_p_len(Index p) {
  if (p < 1) throw ConfigError("p_len must be >= 1");
  p_len = p;
  cfg.cp_len = channel.tau_max + p;
}

void Scenario::validate() const {
  cfg.validate();
  array.validate();
  channel.validate(cfg);
  if (p_len < 1) throw ConfigError("p_len must be >= 1");
  if (cfg.cp_len != channel.tau_max + p_len) throw ConfigError("cp_len must equal tau_max + p_len");
  if (train_speed < 0) throw ConfigError("train_speed must be >= 0");
}

namespace {

struct PresetDef {
  std::string_view name;
  double carrier_freq;
  std::array<double, 3> dopplers;
};

constexpr std::array<PresetDef, 3> kPresets{{
    {"fc3", 3e9, {1000.0, 833.0, 500.0}},
    {"fc6", 6e9, {2000.0, 1667.0, 1000.0}},
    {"fc9", 9e9, {3000.0, 2500.0, 1500.0}},
}};

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
  return j.contains(key) ? j.at(key).get<T>() : fallback;
}

}  // namespace

bool is_preset_name(std::string_view name) {
  for (const auto& p : kPresets) {
    if (p.name == name) return true;
  }
  return false;
}

Scenario preset_scenario(std::string_view name) {
  for (const auto& p : kPresets) {
    if (p.name != name) continue;
    Scenario s;
    s.cfg.n_subcarriers = 512;
    s.cfg.subcarrier_spacing = 15e3;
    s.cfg.carrier_freq = p.carrier_freq;
    s.cfg.symbol_power = 1.0;
    s.array = {5, 0.5};
    const std::array<double, 3> doas{1.0, 35.0, 60.0};
    const std::array<Index, 3> delays{0, 2, 6};
    const std::array<double, 3> gains{1.0, 0.6, 0.36};
    for (std::size_t l = 0; l < 3; ++l) s.channel.paths.push_back({doas[l], delays[l], p.dopplers[l], gains[l]});
    s.channel.tau_max = 28;
    s.train_speed = 100.0;
    s.receiver_mode = ReceiverMode::proposed_perfect;
    s.set_p_len(100);
    return s;
  }
  throw ConfigError("unknown scenario preset '" + std::string(name) + "'");
}

Scenario scenario_from_json(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("scenario JSON: ") + e.what());
  }
  try {
    Scenario s;
    const json& cfg = j.at("cfg");
    s.cfg.n_subcarriers = cfg.at("n_subcarriers").get<Index>();
    s.cfg.subcarrier_spacing = cfg.at("subcarrier_spacing").get<double>();
    s.cfg.carrier_freq = cfg.at("carrier_freq").get<double>();
    s.cfg.symbol_power = get_or(cfg, "symbol_power", 1.0);

    const json& array = j.at("array");
    s.array.n_antennas = array.at("n_antennas").get<Index>();
    s.array.spacing_over_wavelength = get_or(array, "spacing_over_wavelength", 0.5);

    s.train_speed = get_or(j, "train_speed", 0.0);
    const json& channel = j.at("channel");
    for (const json& p : channel.at("paths")) {
      PathParams<double> path;
      path.doa = p.at("doa").get<double>();
      path.delay = p.at("delay").get<Index>();
      path.gain_magnitude = get_or(p, "gain", 1.0);
      // Doppler defaults to the value implied by the train speed along the path direction
      path.doppler = p.contains("doppler") ? p.at("doppler").get<double>()
                                           : doppler_of(s.train_speed, s.cfg.carrier_freq, path.doa);
      s.channel.paths.push_back(path);
    }
    s.channel.tau_max = get_or(channel, "tau_max", s.channel.max_delay());

    s.receiver_mode = parse_receiver_mode(get_or<std::string>(j, "receiver_mode", "proposed_perfect"));
    s.set_p_len(j.at("p_len").get<Index>());
    if (cfg.contains("cp_len") && cfg.at("cp_len").get<Index>() != s.cfg.cp_len) {
      throw ConfigError("scenario JSON: cp_len must equal tau_max + p_len");
    }
    s.validate();
    return s;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("scenario JSON: ") + e.what());
  }
}

std::string scenario_to_json(const Scenario& s) {
  json paths = json::array();
  for (const auto& p : s.channel.paths) {
    paths.push_back({{"doa", p.doa}, {"delay", p.delay}, {"doppler", p.doppler}, {"gain", p.gain_magnitude}});
  }
  const json j = {
      {"cfg",
       {{"n_subcarriers", s.cfg.n_subcarriers},
        {"cp_len", s.cfg.cp_len},
        {"subcarrier_spacing", s.cfg.subcarrier_spacing},
        {"carrier_freq", s.cfg.carrier_freq},
        {"symbol_power", s.cfg.symbol_power}}},
      {"array", {{"n_antennas", s.array.n_antennas}, {"spacing_over_wavelength", s.array.spacing_over_wavelength}}},
      {"channel", {{"paths", paths}, {"tau_max", s.channel.tau_max}}},
      {"p_len", s.p_len},
      {"train_speed", s.train_speed},
      {"receiver_mode", to_string(s.receiver_mode)},
  };
  return j.dump(2);
}

Scenario load_scenario(const std::string& name_or_path) {
  if (is_preset_name(name_or_path)) return preset_scenario(name_or_path);
  std::ifstream in(name_or_path);
  if (!in) throw ConfigError("cannot open scenario file '" + name_or_path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return scenario_from_json(buf.str());
}

}  // namespace simo
