#pragma once

// Shared fixtures and brute-force oracles for the test suites. Nothing here calls
// the FFT or the closed-form channel expressions under test.

#include <random>

#include "simo/channel.hpp"
#include "simo/ofdm.hpp"
#include "simo/scenario.hpp"

namespace simo::test {

using C = std::complex<double>;

inline BitVector random_bits(std::size_t n, std::mt19937_64& rng) {
  std::uniform_int_distribution<int> coin(0, 1);
  BitVector b(n);
  for (auto& x : b) x = static_cast<std::uint8_t>(coin(rng));
  return b;
}

inline CVector<double> random_qpsk(Index n, std::mt19937_64& rng, double power = 1.0) {
  return map_qpsk<double>(random_bits(static_cast<std::size_t>(2 * n), rng), power);
}

inline CVector<double> random_complex(Index n, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  CVector<double> v(n);
  for (auto& x : v) x = C(g(rng), g(rng));
  return v;
}

/// sum_k d(k) e^{j 2 pi n k / N} evaluated term by term.
inline C direct_idft(const CVector<double>& d, Index n) {
  const auto nc = static_cast<double>(d.size());
  C acc = 0;
  for (Index k = 0; k < d.size(); ++k) acc += d(k) * std::polar(1.0, 2 * M_PI * double(n) * double(k) / nc);
  return acc;
}

/// (1/N) sum_n y(n) e^{-j 2 pi n m / N} evaluated term by term.
inline C direct_dft(const CVector<double>& y, Index m) {
  const auto nc = static_cast<double>(y.size());
  C acc = 0;
  for (Index n = 0; n < y.size(); ++n) acc += y(n) * std::polar(1.0, -2 * M_PI * double(n) * double(m) / nc);
  return acc / nc;
}

/// Time-varying channel of path sum for subcarrier k at time n, term by term.
inline CVector<double> direct_channel_at(const MultipathChannelSpec<double>& spec, const CVector<double>& gains,
                                         const OfdmConfig<double>& cfg, const ArrayConfig<double>& array, Index k,
                                         Index n) {
  const double nc = static_cast<double>(cfg.n_subcarriers);
  CVector<double> h = CVector<double>::Zero(array.n_antennas);
  for (std::size_t l = 0; l < spec.paths.size(); ++l) {
    const auto& p = spec.paths[l];
    const double mu = -2 * M_PI * array.spacing_over_wavelength * std::sin(p.doa * M_PI / 180);
    const double ph = 2 * M_PI * double(n - p.delay) * p.doppler / (nc * cfg.subcarrier_spacing) -
                      2 * M_PI * double(p.delay) * double(k) / nc;
    for (Index m = 0; m < array.n_antennas; ++m) h(m) += gains(Index(l)) * std::polar(1.0, ph + mu * double(m));
  }
  return h;
}

/// The three-path railway scenario at the given preset with P = 25.
inline Scenario railway(const char* preset = "fc9", Index p_len = 25) {
  Scenario s = preset_scenario(preset);
  s.set_p_len(p_len);
  return s;
}

inline double max_rel_diff(const CMatrix<double>& a, const CMatrix<double>& b) {
  return (a - b).cwiseAbs().maxCoeff() / std::max(1e-300, b.cwiseAbs().maxCoeff());
}

}  // namespace simo::test
