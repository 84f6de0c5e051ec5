#pragma once

// QPSK mapping and CP-OFDM modulation.
//
// Transform convention: the modulator is an unscaled inverse DFT,
//   s(n) = sum_k d(k) e^{j 2 pi n k / Nc},  n = -Ng .. Nc-1,
// and the demodulator carries the 1/Nc factor, so demodulate(modulate(d)) = d.

#include <cmath>
#include <string>

#include <unsupported/Eigen/FFT>

#include "simo/types.hpp"

namespace simo {

template <typename Scalar>
struct OfdmConfig {
  Index n_subcarriers = 512;
  Index cp_len = 128;
  Scalar subcarrier_spacing = Scalar(15e3);  // Hz
  Scalar carrier_freq = Scalar(9e9);         // Hz
  Scalar symbol_power = Scalar(1);           // E|d(k)|^2

  /// Baseband sample period 1/(Nc * df).
  Scalar sample_period() const {
    return Scalar(1) / (static_cast<Scalar>(n_subcarriers) * subcarrier_spacing);
  }

  Index block_len() const { return n_subcarriers + cp_len; }

  void validate() const {
    if (n_subcarriers < 2) throw ConfigError("n_subcarriers must be >= 2");
    if (cp_len < 1) throw ConfigError("cp_len must be >= 1");
    if (cp_len >= n_subcarriers) throw ConfigError("cp_len must be < n_subcarriers");
    if (!(subcarrier_spacing > 0)) throw ConfigError("subcarrier_spacing must be positive");
    if (!(carrier_freq > 0)) throw ConfigError("carrier_freq must be positive");
    if (!(symbol_power > 0)) throw ConfigError("symbol_power must be positive");
  }
};

/// Frequency-domain OFDM symbol d(0..Nc-1).
template <typename Scalar>
using FreqBlock = CVector<Scalar>;

/// Time-domain OFDM symbol including its cyclic prefix, indexed n = -Ng .. Nc-1.
template <typename Scalar>
struct TimeBlock {
  CVector<Scalar> samples;  // length Ng + Nc, samples(0) is n = -Ng
  Index cp_len = 0;

  Index n_subcarriers() const { return samples.size() - cp_len; }
  Complex<Scalar> operator()(Index n) const { return samples(n + cp_len); }
  Complex<Scalar>& operator()(Index n) { return samples(n + cp_len); }

  /// The CP-free part n = 0 .. Nc-1.
  auto body() const { return samples.tail(n_subcarriers()); }
};

// ---------------------------------------------------------------------------
// QPSK

/// Gray QPSK: (b0, b1) -> sqrt(power/2) * ((1 - 2 b0) + j (1 - 2 b1)).
template <typename Scalar = double>
FreqBlock<Scalar> map_qpsk(const BitVector& bits, Scalar power = Scalar(1)) {
  if (bits.size() % 2 != 0) {
    throw InputShapeError("map_qpsk: bit count must be even, got " + std::to_string(bits.size()));
  }
  const Scalar amp = std::sqrt(power / Scalar(2));
  FreqBlock<Scalar> out(static_cast<Index>(bits.size() / 2));
  for (Index k = 0; k < out.size(); ++k) {
    const auto b0 = bits[static_cast<std::size_t>(2 * k)];
    const auto b1 = bits[static_cast<std::size_t>(2 * k + 1)];
    if (b0 > 1 || b1 > 1) throw InputShapeError("map_qpsk: bits must be 0 or 1");
    out(k) = amp * Complex<Scalar>(Scalar(1) - Scalar(2 * b0), Scalar(1) - Scalar(2 * b1));
  }
  return out;
}

/// Checked variant for a configured block length of n_subcarriers symbols.
template <typename Scalar>
FreqBlock<Scalar> map_qpsk(const BitVector& bits, const OfdmConfig<Scalar>& cfg) {
  if (static_cast<Index>(bits.size()) != 2 * cfg.n_subcarriers) {
    throw InputShapeError("map_qpsk: expected " + std::to_string(2 * cfg.n_subcarriers) +
                          " bits, got " + std::to_string(bits.size()));
  }
  return map_qpsk<Scalar>(bits, cfg.symbol_power);
}

/// Sign-based hard decision; a value exactly on an axis decides bit 0.
template <typename Derived>
BitVector demap_qpsk(const Eigen::MatrixBase<Derived>& symbols) {
  BitVector bits(static_cast<std::size_t>(2 * symbols.size()));
  for (Index k = 0; k < symbols.size(); ++k) {
    const auto s = symbols(k);
    bits[static_cast<std::size_t>(2 * k)] = s.real() < 0 ? 1 : 0;
    bits[static_cast<std::size_t>(2 * k + 1)] = s.imag() < 0 ? 1 : 0;
  }
  return bits;
}

// ---------------------------------------------------------------------------
// Modulation

template <typename Scalar>
TimeBlock<Scalar> ofdm_modulate(const FreqBlock<Scalar>& block, const OfdmConfig<Scalar>& cfg) {
  const Index nc = cfg.n_subcarriers;
  if (block.size() != nc) {
    throw InputShapeError("ofdm_modulate: expected " + std::to_string(nc) + " symbols");
  }
  Eigen::FFT<Scalar> fft;
  fft.SetFlag(Eigen::FFT<Scalar>::Unscaled);
  CVector<Scalar> body(nc);
  fft.inv(body, block);

  TimeBlock<Scalar> out;
  out.cp_len = cfg.cp_len;
  out.samples.resize(nc + cfg.cp_len);
  out.samples.head(cfg.cp_len) = body.tail(cfg.cp_len);
  out.samples.tail(nc) = body;
  return out;
}

/// Y(m) = (1/Nc) sum_n y(n) e^{-j 2 pi n m / Nc} for one antenna's CP-free samples.
template <typename Derived>
CVector<typename Derived::RealScalar> ofdm_demodulate(const Eigen::MatrixBase<Derived>& samples) {
  using Scalar = typename Derived::RealScalar;
  const Index nc = samples.size();
  CVector<Scalar> in = samples;
  CVector<Scalar> out(nc);
  Eigen::FFT<Scalar> fft;
  fft.fwd(out, in);
  out /= static_cast<Scalar>(nc);
  return out;
}

/// Per-antenna demodulation of an M x Nc sample matrix, returning M x Nc.
template <typename Derived>
CMatrix<typename Derived::RealScalar> ofdm_demodulate_rows(const Eigen::MatrixBase<Derived>& samples) {
  using Scalar = typename Derived::RealScalar;
  const Index nc = samples.cols();
  Eigen::FFT<Scalar> fft;
  CMatrix<Scalar> out(samples.rows(), nc);
  CVector<Scalar> in(nc);
  CVector<Scalar> spec(nc);
  for (Index m = 0; m < samples.rows(); ++m) {
    in = samples.row(m).transpose();
    fft.fwd(spec, in);
    out.row(m) = spec.transpose() / static_cast<Scalar>(nc);
  }
  return out;
}

}  // namespace simo
