#include "simo/montecarlo.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <numeric>
#include <thread>

#include "simo/channel.hpp"
#include "simo/esprit.hpp"
#include "simo/ofdm.hpp"
#include "simo/receivers.hpp"

namespace simo {

std::mt19937_64 trial_rng(std::uint64_t seed, std::uint64_t trial, std::uint32_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(trial), static_cast<std::uint32_t>(trial >> 32), stream};
  return std::mt19937_64(seq);
}

std::vector<std::size_t> associate_paths(const std::vector<PathEstimate<double>>& estimates,
                                         const MultipathChannelSpec<double>& channel, double subcarrier_spacing) {
  const std::size_t q = channel.paths.size();
  if (estimates.size() != q) throw InputShapeError("associate_paths: estimate count differs from path count");
  std::vector<std::size_t> perm(q);
  std::iota(perm.begin(), perm.end(), 0);
  std::vector<std::size_t> best = perm;
  double best_cost = std::numeric_limits<double>::infinity();
  do {
    double cost = 0;
    for (std::size_t l = 0; l < q; ++l) {
      const auto& e = estimates[perm[l]];
      const auto& p = channel.paths[l];
      cost += std::pow((e.doa_est - p.doa) / 180.0, 2) + std::pow((e.doppler_est - p.doppler) / subcarrier_spacing, 2);
    }
    if (cost < best_cost) {
      best_cost = cost;
      best = perm;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

namespace {

struct TrialSignal {
  BitVector bits;  // measured symbol payload
  CVector<double> gains;
  RxBlock<double> rx;  // noise free
};

TrialSignal make_trial(const Scenario& s, std::mt19937_64& rng) {
  const auto nbits = static_cast<std::size_t>(2 * s.cfg.n_subcarriers);
  std::uniform_int_distribution<int> coin(0, 1);
  BitVector prev(nbits);
  BitVector cur(nbits);
  for (auto& b : prev) b = static_cast<std::uint8_t>(coin(rng));
  for (auto& b : cur) b = static_cast<std::uint8_t>(coin(rng));
  TrialSignal t;
  t.gains = draw_path_gains(s.channel, rng);
  const auto tx_prev = ofdm_modulate(map_qpsk(prev, s.cfg), s.cfg);
  const auto tx_cur = ofdm_modulate(map_qpsk(cur, s.cfg), s.cfg);
  t.rx = apply_channel(tx_prev, tx_cur, s.channel, t.gains, s.cfg, s.array);
  t.bits = std::move(cur);
  return t;
}

/// Runs fn(trial) for all trials; results must be written to per-trial slots.
template <typename Fn>
void for_each_trial(long trials, unsigned workers, Fn&& fn) {
  if (workers <= 1 || trials <= 1) {
    for (long t = 0; t < trials; ++t) fn(t);
    return;
  }
  std::atomic<long> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  const unsigned n = std::min<unsigned>(workers, static_cast<unsigned>(trials));
  for (unsigned w = 0; w < n; ++w) {
    pool.emplace_back([&] {
      for (long t = next++; t < trials; t = next++) {
        try {
          fn(t);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

void check_options(const Scenario& s, const RunOptions& o) {
  s.validate();
  if (o.trials < 1) throw ConfigError("trials must be >= 1");
  if (o.ebn0_db.empty()) throw ConfigError("at least one Eb/N0 point is required");
}

void check_estimable(const Scenario& s) {
  if (s.channel.n_paths() > std::min(s.array.n_antennas - 1, s.p_len)) {
    throw ConfigError("number of paths exceeds min(M-1, P)");
  }
}

struct EstimateTally {
  bool ok = false;
  std::vector<double> doa;
  std::vector<double> doppler;
};

void add_failure_rows(SimulationReport& report, double ebn0, long failures, const RunOptions& o) {
  const double rate = static_cast<double>(failures) / static_cast<double>(o.trials);
  report.rows.push_back({ebn0, metric::kFailureRate, std::nullopt, rate, o.trials, o.seed});
  if (rate > 0.5) report.rows.push_back({ebn0, metric::kFailureFlag, std::nullopt, rate, o.trials, o.seed});
}

}  // namespace

SimulationReport run_estimation_experiment(const Scenario& s, const RunOptions& o) {
  check_options(s, o);
  check_estimable(s);
  const std::size_t npts = o.ebn0_db.size();
  const Index q = s.channel.n_paths();
  std::vector<std::vector<EstimateTally>> tallies(static_cast<std::size_t>(o.trials));

  for_each_trial(o.trials, o.workers, [&](long t) {
    auto rng = trial_rng(o.seed, static_cast<std::uint64_t>(t), 0);
    const TrialSignal sig = make_trial(s, rng);
    const auto noise_rng = trial_rng(o.seed, static_cast<std::uint64_t>(t), 1);
    auto& out = tallies[static_cast<std::size_t>(t)];
    out.resize(npts);
    for (std::size_t e = 0; e < npts; ++e) {
      auto nrng = noise_rng;
      const auto rx = add_awgn(sig.rx, o.ebn0_db[e], s.channel, s.cfg, nrng);
      const auto y = build_data_matrix(rx, s.p_len, s.channel.tau_max, s.cfg, s.array);
      try {
        const auto est = unitary_esprit_2d(y, q);
        const auto assoc = associate_paths(est, s.channel, s.cfg.subcarrier_spacing);
        out[e].ok = true;
        for (std::size_t l = 0; l < assoc.size(); ++l) {
          out[e].doa.push_back(est[assoc[l]].doa_est);
          out[e].doppler.push_back(est[assoc[l]].doppler_est);
        }
      } catch (const EstimationFailure&) {
        out[e].ok = false;
      }
    }
  });

  SimulationReport report;
  for (std::size_t e = 0; e < npts; ++e) {
    const double ebn0 = o.ebn0_db[e];
    long ok = 0;
    const auto nq = static_cast<std::size_t>(q);
    std::vector<double> doa_sum(nq, 0.0), doa_sq(nq, 0.0), dop_sum(nq, 0.0), dop_sq(nq, 0.0);
    for (const auto& trial : tallies) {
      const auto& tally = trial[e];
      if (!tally.ok) continue;
      ++ok;
      for (std::size_t l = 0; l < static_cast<std::size_t>(q); ++l) {
        const auto& p = s.channel.paths[l];
        doa_sum[l] += tally.doa[l];
        doa_sq[l] += std::pow(tally.doa[l] - p.doa, 2);
        dop_sum[l] += tally.doppler[l];
        dop_sq[l] += std::pow(tally.doppler[l] - p.doppler, 2);
      }
    }
    add_failure_rows(report, ebn0, o.trials - ok, o);
    if (ok == 0) continue;
    const auto n = static_cast<double>(ok);
    for (std::size_t l = 0; l < static_cast<std::size_t>(q); ++l) {
      const int path = static_cast<int>(l) + 1;
      report.rows.push_back({ebn0, metric::kDoaMean, path, doa_sum[l] / n, ok, o.seed});
      report.rows.push_back({ebn0, metric::kDoaRmse, path, std::sqrt(doa_sq[l] / n), ok, o.seed});
      report.rows.push_back({ebn0, metric::kDopplerMean, path, dop_sum[l] / n, ok, o.seed});
      report.rows.push_back({ebn0, metric::kDopplerRmse, path, std::sqrt(dop_sq[l] / n), ok, o.seed});
    }
  }
  report.sort();
  return report;
}

SimulationReport run_ber_experiment(const Scenario& s, const RunOptions& o) {
  check_options(s, o);
  if (s.receiver_mode == ReceiverMode::proposed_estimated) check_estimable(s);
  const std::size_t npts = o.ebn0_db.size();
  const Index q = s.channel.n_paths();
  const long bits_per_trial = 2 * s.cfg.n_subcarriers;

  std::optional<SpatialFilterBank<double>> true_bank;
  std::vector<double> true_dopplers;
  if (s.receiver_mode == ReceiverMode::proposed_perfect) {
    true_bank = build_spatial_filters(s.channel.doas(), s.array);
    for (const auto& p : s.channel.paths) true_dopplers.push_back(p.doppler);
  }

  struct BerTally {
    long errors = 0;
    bool failed = false;
  };
  std::vector<std::vector<BerTally>> tallies(static_cast<std::size_t>(o.trials));

  for_each_trial(o.trials, o.workers, [&](long t) {
    auto rng = trial_rng(o.seed, static_cast<std::uint64_t>(t), 0);
    const TrialSignal sig = make_trial(s, rng);
    const auto noise_rng = trial_rng(o.seed, static_cast<std::uint64_t>(t), 1);
    const CMatrix<double> genie = s.receiver_mode == ReceiverMode::conventional
                                      ? genie_conventional_all(s.channel, sig.gains, s.cfg, s.array)
                                      : genie_proposed_all(s.channel, sig.gains, s.cfg, s.array);
    auto& out = tallies[static_cast<std::size_t>(t)];
    out.resize(npts);
    for (std::size_t e = 0; e < npts; ++e) {
      auto nrng = noise_rng;
      const auto rx = add_awgn(sig.rx, o.ebn0_db[e], s.channel, s.cfg, nrng);
      DetectionResult<double> det;
      switch (s.receiver_mode) {
        case ReceiverMode::conventional:
          det = conventional_detect(rx, genie, s.cfg);
          break;
        case ReceiverMode::proposed_perfect:
          det = proposed_detect(rx, *true_bank, true_dopplers, genie, s.cfg);
          break;
        case ReceiverMode::proposed_estimated: {
          const auto y = build_data_matrix(rx, s.p_len, s.channel.tau_max, s.cfg, s.array);
          try {
            const auto est = unitary_esprit_2d(y, q);
            std::vector<double> doas, dopplers;
            for (const auto& pe : est) {
              doas.push_back(pe.doa_est);
              dopplers.push_back(pe.doppler_est);
            }
            det = proposed_detect(rx, build_spatial_filters(doas, s.array), dopplers, genie, s.cfg);
          } catch (const EstimationFailure&) {
            out[e].failed = true;
          } catch (const IllConditionedFilter&) {
            out[e].failed = true;
          }
          break;
        }
      }
      if (out[e].failed) {
        // no usable estimate: equivalent to guessing every bit
        out[e].errors = bits_per_trial / 2;
        continue;
      }
      long errors = 0;
      for (std::size_t b = 0; b < sig.bits.size(); ++b) errors += det.bits[b] != sig.bits[b];
      out[e].errors = errors;
    }
  });

  SimulationReport report;
  const double total_bits = static_cast<double>(bits_per_trial) * static_cast<double>(o.trials);
  for (std::size_t e = 0; e < npts; ++e) {
    long errors = 0;
    long failures = 0;
    for (const auto& trial : tallies) {
      errors += trial[e].errors;
      failures += trial[e].failed ? 1 : 0;
    }
    report.rows.push_back({o.ebn0_db[e], metric::kBer, std::nullopt, static_cast<double>(errors) / total_bits,
                           o.trials, o.seed});
    if (s.receiver_mode == ReceiverMode::proposed_estimated) add_failure_rows(report, o.ebn0_db[e], failures, o);
  }
  report.sort();
  return report;
}

}  // namespace simo
