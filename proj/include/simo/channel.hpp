#pragma once

// Sparse time-varying multipath SIMO channel.
//
// Each path l contributes beta_l * a(theta_l) * e^{j 2 pi (n - tau_l) f_l / (Nc df)} * s(n - tau_l)
// to the array output, with integer delays tau_l in samples. The transmit stream is
// the previous OFDM symbol followed by the current one, so the head of the current
// cyclic prefix carries real inter-symbol interference.

#include <algorithm>
#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "simo/ofdm.hpp"
#include "simo/types.hpp"

namespace simo {

inline constexpr double kSpeedOfLight = 299'792'458.0;  // m/s

template <typename Scalar>
struct ArrayConfig {
  Index n_antennas = 5;
  Scalar spacing_over_wavelength = Scalar(0.5);

  void validate() const {
    if (n_antennas < 2) throw ConfigError("n_antennas must be >= 2");
    if (!(spacing_over_wavelength > 0) || spacing_over_wavelength > Scalar(0.5)) {
      throw ConfigError("spacing_over_wavelength must be in (0, 0.5]");
    }
  }
};

template <typename Scalar>
struct PathParams {
  Scalar doa = 0;             // degrees
  Index delay = 0;            // samples
  Scalar doppler = 0;         // Hz
  Scalar gain_magnitude = 1;  // |beta|
};

template <typename Scalar>
struct MultipathChannelSpec {
  std::vector<PathParams<Scalar>> paths;
  /// Declared channel length in samples; at least the largest path delay.
  Index tau_max = 0;

  Index n_paths() const { return static_cast<Index>(paths.size()); }

  Index max_delay() const {
    Index d = 0;
    for (const auto& p : paths) d = std::max(d, p.delay);
    return d;
  }

  Scalar total_power() const {
    Scalar s = 0;
    for (const auto& p : paths) s += p.gain_magnitude * p.gain_magnitude;
    return s;
  }

  std::vector<Scalar> doas() const {
    std::vector<Scalar> out;
    for (const auto& p : paths) out.push_back(p.doa);
    return out;
  }

  void validate(const OfdmConfig<Scalar>& cfg) const {
    if (paths.empty()) throw ConfigError("channel needs at least one path");
    if (tau_max < max_delay()) throw ConfigError("tau_max is smaller than the largest path delay");
    for (std::size_t l = 0; l < paths.size(); ++l) {
      const auto& p = paths[l];
      const std::string tag = "path " + std::to_string(l) + ": ";
      if (!(std::abs(p.doa) < Scalar(90))) throw ConfigError(tag + "|doa| must be < 90 deg");
      if (p.delay < 0) throw ConfigError(tag + "delay must be >= 0");
      if (!(std::abs(p.doppler) < cfg.subcarrier_spacing / Scalar(2))) {
        throw ConfigError(tag + "|doppler| must be < subcarrier_spacing / 2");
      }
      if (!(p.gain_magnitude > 0)) throw ConfigError(tag + "gain magnitude must be positive");
      for (std::size_t m = 0; m < l; ++m) {
        if (paths[m].doa == p.doa) throw ConfigError(tag + "DOAs must be pairwise distinct");
      }
    }
  }
};

/// Received samples for one OFDM symbol: M x (Ng + Nc), column 0 is n = -Ng.
template <typename Scalar>
struct RxBlock {
  CMatrix<Scalar> samples;
  Index cp_len = 0;

  Index n_antennas() const { return samples.rows(); }
  Index n_subcarriers() const { return samples.cols() - cp_len; }

  auto col(Index n) { return samples.col(n + cp_len); }
  auto col(Index n) const { return samples.col(n + cp_len); }

  /// Columns n = 0 .. Nc-1.
  auto body() const { return samples.rightCols(n_subcarriers()); }
};

// ---------------------------------------------------------------------------

/// f_d = (f_c v / c) cos(angle).
template <typename Scalar>
Scalar doppler_of(Scalar speed, Scalar carrier_freq, Scalar angle_deg) {
  // cos(90 deg) is not exactly zero in floating point
  if (std::abs(angle_deg) == Scalar(90)) return Scalar(0);
  return carrier_freq * speed / static_cast<Scalar>(kSpeedOfLight) * std::cos(deg2rad(angle_deg));
}

/// a(theta)_m = e^{-j 2 pi m (d/lambda) sin(theta)}, m = 0 .. M-1.
template <typename Scalar>
CVector<Scalar> steering_vector(Scalar doa_deg, const ArrayConfig<Scalar>& array) {
  const Scalar mu = -kTwoPi<Scalar> * array.spacing_over_wavelength * std::sin(deg2rad(doa_deg));
  CVector<Scalar> a(array.n_antennas);
  for (Index m = 0; m < a.size(); ++m) a(m) = cis(mu * static_cast<Scalar>(m));
  return a;
}

template <typename Scalar>
CMatrix<Scalar> steering_matrix(const std::vector<Scalar>& doas_deg, const ArrayConfig<Scalar>& array) {
  CMatrix<Scalar> a(array.n_antennas, static_cast<Index>(doas_deg.size()));
  for (std::size_t l = 0; l < doas_deg.size(); ++l) {
    a.col(static_cast<Index>(l)) = steering_vector(doas_deg[l], array);
  }
  return a;
}

/// Complex path gains beta_l = |beta_l| e^{-j phi_l}, phi_l ~ U[0, 2 pi).
template <typename Scalar, typename Rng>
CVector<Scalar> draw_path_gains(const MultipathChannelSpec<Scalar>& spec, Rng& rng) {
  std::uniform_real_distribution<Scalar> phase(Scalar(0), kTwoPi<Scalar>);
  CVector<Scalar> beta(spec.n_paths());
  for (Index l = 0; l < beta.size(); ++l) {
    beta(l) = spec.paths[static_cast<std::size_t>(l)].gain_magnitude * cis(-phase(rng));
  }
  return beta;
}

/// Noise-free array output for the current symbol `current`, preceded in the stream by `previous`.
template <typename Scalar>
RxBlock<Scalar> apply_channel(const TimeBlock<Scalar>& previous, const TimeBlock<Scalar>& current,
                              const MultipathChannelSpec<Scalar>& spec, const CVector<Scalar>& gains,
                              const OfdmConfig<Scalar>& cfg, const ArrayConfig<Scalar>& array) {
  const Index nc = cfg.n_subcarriers;
  const Index ng = cfg.cp_len;
  if (current.cp_len != ng || previous.cp_len != ng || current.samples.size() != ng + nc ||
      previous.samples.size() != ng + nc) {
    throw InputShapeError("apply_channel: time blocks do not match the OFDM configuration");
  }
  if (gains.size() != spec.n_paths()) throw InputShapeError("apply_channel: one gain per path required");
  if (spec.max_delay() > ng) {
    throw ConfigError("apply_channel: path delay " + std::to_string(spec.max_delay()) +
                      " exceeds cyclic prefix " + std::to_string(ng));
  }

  const Index len = ng + nc;
  RxBlock<Scalar> rx;
  rx.cp_len = ng;
  rx.samples = CMatrix<Scalar>::Zero(array.n_antennas, len);

  const Scalar norm = Scalar(1) / (static_cast<Scalar>(nc) * cfg.subcarrier_spacing);
  CVector<Scalar> stream(len);  // beta * Doppler * delayed signal for one path
  for (Index l = 0; l < spec.n_paths(); ++l) {
    const auto& path = spec.paths[static_cast<std::size_t>(l)];
    const Index tau = path.delay;
    for (Index n = -ng; n < nc; ++n) {
      const Index m = n - tau;
      const Complex<Scalar> s = m >= -ng ? current(m) : previous(m + len);
      const Scalar phase = kTwoPi<Scalar> * static_cast<Scalar>(m) * path.doppler * norm;
      stream(n + ng) = gains(l) * cis(phase) * s;
    }
    rx.samples.noalias() += steering_vector(path.doa, array) * stream.transpose();
  }
  return rx;
}

/// sigma^2 = sigma_d^2 * sum |beta_l|^2 / (2 * 10^(EbN0/10)); zero for EbN0 = +inf.
template <typename Scalar>
Scalar noise_variance(Scalar ebn0_db, const MultipathChannelSpec<Scalar>& spec, const OfdmConfig<Scalar>& cfg) {
  if (std::isinf(ebn0_db) && ebn0_db > 0) return Scalar(0);
  return cfg.symbol_power * spec.total_power() / (Scalar(2) * std::pow(Scalar(10), ebn0_db / Scalar(10)));
}

/// Circular complex white Gaussian noise with variance `variance` per entry.
template <typename Scalar, typename Rng>
CMatrix<Scalar> complex_gaussian(Index rows, Index cols, Scalar variance, Rng& rng) {
  std::normal_distribution<Scalar> normal(Scalar(0), std::sqrt(variance / Scalar(2)));
  CMatrix<Scalar> w(rows, cols);
  for (Index j = 0; j < cols; ++j) {
    for (Index i = 0; i < rows; ++i) {
      const Scalar re = normal(rng);
      const Scalar im = normal(rng);
      w(i, j) = Complex<Scalar>(re, im);
    }
  }
  return w;
}

template <typename Scalar, typename Rng>
RxBlock<Scalar> add_awgn(const RxBlock<Scalar>& block, Scalar ebn0_db, const MultipathChannelSpec<Scalar>& spec,
                         const OfdmConfig<Scalar>& cfg, Rng& rng) {
  const Scalar var = noise_variance(ebn0_db, spec, cfg);
  RxBlock<Scalar> out = block;
  if (var == Scalar(0)) return out;
  out.samples += complex_gaussian(block.samples.rows(), block.samples.cols(), var, rng);
  return out;
}

// ---------------------------------------------------------------------------
// Genie effective channels

namespace detail {

/// sum_{n=0}^{Nc-1} e^{j 2 pi n f / (Nc df)} in Dirichlet-kernel form.
template <typename Scalar>
Complex<Scalar> doppler_sum(Scalar doppler, const OfdmConfig<Scalar>& cfg) {
  const auto nc = static_cast<Scalar>(cfg.n_subcarriers);
  const Scalar x = kPi<Scalar> * doppler / cfg.subcarrier_spacing;  // pi f / df
  const Scalar den = std::sin(x / nc);
  if (den == Scalar(0)) return Complex<Scalar>(nc, 0);
  return cis(x * (nc - Scalar(1)) / nc) * (std::sin(x) / den);
}

}  // namespace detail

/// Time average over n = 0..Nc-1 of H_k(n) for subcarrier k.
template <typename Scalar>
CVector<Scalar> genie_channel_conventional(const MultipathChannelSpec<Scalar>& spec, const CVector<Scalar>& gains,
                                           const OfdmConfig<Scalar>& cfg, const ArrayConfig<Scalar>& array,
                                           Index k) {
  const auto nc = static_cast<Scalar>(cfg.n_subcarriers);
  const Scalar norm = Scalar(1) / (nc * cfg.subcarrier_spacing);
  CVector<Scalar> h = CVector<Scalar>::Zero(array.n_antennas);
  for (Index l = 0; l < spec.n_paths(); ++l) {
    const auto& p = spec.paths[static_cast<std::size_t>(l)];
    const auto tau = static_cast<Scalar>(p.delay);
    const Complex<Scalar> coef = gains(l) * cis(-kTwoPi<Scalar> * tau * p.doppler * norm) *
                                 cis(-kTwoPi<Scalar> * tau * static_cast<Scalar>(k) / nc) *
                                 detail::doppler_sum(p.doppler, cfg) / nc;
    h += coef * steering_vector(p.doa, array);
  }
  return h;
}

/// Time-invariant channel after per-path Doppler compensation:
/// sum_l beta_l a(theta_l) e^{-j 2 pi tau_l (f_l / (Nc df) + k / Nc)}.
template <typename Scalar>
CVector<Scalar> genie_channel_proposed(const MultipathChannelSpec<Scalar>& spec, const CVector<Scalar>& gains,
                                       const OfdmConfig<Scalar>& cfg, const ArrayConfig<Scalar>& array, Index k) {
  const auto nc = static_cast<Scalar>(cfg.n_subcarriers);
  CVector<Scalar> h = CVector<Scalar>::Zero(array.n_antennas);
  for (Index l = 0; l < spec.n_paths(); ++l) {
    const auto& p = spec.paths[static_cast<std::size_t>(l)];
    const auto tau = static_cast<Scalar>(p.delay);
    const Scalar phase = -kTwoPi<Scalar> * tau * (p.doppler / (nc * cfg.subcarrier_spacing) + static_cast<Scalar>(k) / nc);
    h += gains(l) * cis(phase) * steering_vector(p.doa, array);
  }
  return h;
}

/// All subcarriers at once, M x Nc.
template <typename Scalar>
CMatrix<Scalar> genie_conventional_all(const MultipathChannelSpec<Scalar>& spec, const CVector<Scalar>& gains,
                                       const OfdmConfig<Scalar>& cfg, const ArrayConfig<Scalar>& array) {
  CMatrix<Scalar> h(array.n_antennas, cfg.n_subcarriers);
  for (Index k = 0; k < cfg.n_subcarriers; ++k) h.col(k) = genie_channel_conventional(spec, gains, cfg, array, k);
  return h;
}

template <typename Scalar>
CMatrix<Scalar> genie_proposed_all(const MultipathChannelSpec<Scalar>& spec, const CVector<Scalar>& gains,
                                   const OfdmConfig<Scalar>& cfg, const ArrayConfig<Scalar>& array) {
  CMatrix<Scalar> h(array.n_antennas, cfg.n_subcarriers);
  for (Index k = 0; k < cfg.n_subcarriers; ++k) h.col(k) = genie_channel_proposed(spec, gains, cfg, array, k);
  return h;
}

}  // namespace simo
