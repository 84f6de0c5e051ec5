#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "simo/channel.hpp"
#include "simo/ofdm.hpp"

namespace simo {

enum class ReceiverMode { conventional, proposed_perfect, proposed_estimated };

std::string to_string(ReceiverMode mode);

/// Accepts both `proposed_perfect` and `proposed-perfect` spellings.
ReceiverMode parse_receiver_mode(std::string_view text);

struct Scenario {
  OfdmConfig<double> cfg;
  ArrayConfig<double> array;
  MultipathChannelSpec<double> channel;
  Index p_len = 100;
  double train_speed = 100.0;  // m/s
  ReceiverMode receiver_mode = ReceiverMode::proposed_perfect;

  /// Sets P and the cyclic prefix Ng = tau_max + P.
  void set_p_len(Index p);

  void validate() const;
};

/// Built-in scenarios `fc3`, `fc6`, `fc9`: M = 5 half-wavelength ULA, Nc = 512, df = 15 kHz,
/// three paths at (1, 35, 60) deg with delays (0, 2, 6) and gains (1, 0.6, 0.36).
Scenario preset_scenario(std::string_view name);

bool is_preset_name(std::string_view name);

Scenario scenario_from_json(std::string_view text);
std::string scenario_to_json(const Scenario& scenario);

/// Preset name or path to a JSON file.
Scenario load_scenario(const std::string& name_or_path);

}  // namespace simo
