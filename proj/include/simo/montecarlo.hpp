#pragma once

// Seeded Monte Carlo drivers for the estimation (mean / RMSE) and BER experiments.
//
// One trial is a random preceding symbol plus one measured symbol, with fresh payload,
// path phases and noise. Each trial draws from its own engine seeded by (seed, trial),
// and the noise engine is replayed for every Eb/N0 point, so all points of one run share
// payloads and noise shapes. Results do not depend on the worker count.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "simo/esprit.hpp"
#include "simo/scenario.hpp"

namespace simo {

struct ReportRow {
  double ebn0_db = 0;
  std::string metric;
  std::optional<int> path;  // 1-based path index for per-path metrics
  double value = 0;
  long trials = 0;
  std::uint64_t seed = 0;

  bool operator==(const ReportRow&) const = default;
};

struct SimulationReport {
  std::vector<ReportRow> rows;

  /// ebn0 ascending, then metric name, then path (rows without a path first).
  void sort();

  std::optional<double> value(double ebn0_db, const std::string& metric, std::optional<int> path = {}) const;

  /// Any Eb/N0 point where estimation failed in more than half the trials.
  bool has_failure_flag() const;

  bool operator==(const SimulationReport&) const = default;
};

struct RunOptions {
  std::vector<double> ebn0_db;
  long trials = 500;
  std::uint64_t seed = 1;
  unsigned workers = 1;
};

/// Metric names used in reports.
namespace metric {
inline constexpr const char* kDoaMean = "doa_mean";
inline constexpr const char* kDoaRmse = "doa_rmse";
inline constexpr const char* kDopplerMean = "doppler_mean";
inline constexpr const char* kDopplerRmse = "doppler_rmse";
inline constexpr const char* kFailureRate = "failure_rate";
inline constexpr const char* kFailureFlag = "estimation_failure_flag";
inline constexpr const char* kBer = "ber";
}  // namespace metric

/// Engine for one trial and stream (0: payload and phases, 1: noise).
std::mt19937_64 trial_rng(std::uint64_t seed, std::uint64_t trial, std::uint32_t stream);

/// Assigns estimates to true paths by the permutation minimising the normalised squared
/// distance. Returns, for each true path l, the index of its estimate.
std::vector<std::size_t> associate_paths(const std::vector<PathEstimate<double>>& estimates,
                                         const MultipathChannelSpec<double>& channel, double subcarrier_spacing);

SimulationReport run_estimation_experiment(const Scenario& scenario, const RunOptions& options);

SimulationReport run_ber_experiment(const Scenario& scenario, const RunOptions& options);

void write_report_csv(const SimulationReport& report, const std::filesystem::path& path);

SimulationReport read_report_csv(const std::filesystem::path& path);

/// Parses `start:step:stop` (inclusive), a single value, or a comma-separated list. `inf` is accepted.
std::vector<double> parse_ebn0_range(const std::string& text);

}  // namespace simo
