#pragma once

// Detection chains.
//
// Conventional: FFT of the CP-free samples, then per-subcarrier MRC against the
// time-averaged channel. Residual ICI stays in the decision statistic.
//
// Proposed: isolate each path spatially, undo its Doppler ramp in the time domain,
// sum the branches and only then take the FFT. With exact parameters the summed
// signal sees a time-invariant channel, so the FFT output has no ICI.

#include <cmath>
#include <string>
#include <vector>

#include <Eigen/SVD>

#include "simo/channel.hpp"
#include "simo/ofdm.hpp"
#include "simo/types.hpp"

namespace simo {

/// Singular values below this fraction of the largest are dropped in the pseudo-inverse.
inline constexpr double kPinvTolerance = 1e-10;

/// DOAs closer than this (degrees) cannot be separated.
inline constexpr double kMinDoaSeparationDeg = 1e-6;

template <typename Scalar>
struct SpatialFilterBank {
  /// F_l = I - T_l T_l^+, the orthogonal projector onto the complement of the other paths.
  std::vector<CMatrix<Scalar>> filters;
  /// a_l (a_l^H F_l a_l)^{-1} a_l^H F_l: oblique projector onto a_l along the other paths.
  std::vector<CMatrix<Scalar>> extractors;
  std::vector<Scalar> doas;

  Index size() const { return static_cast<Index>(filters.size()); }
};

template <typename Scalar>
struct DetectionResult {
  CVector<Scalar> symbol_estimates;        // d_hat(k)
  BitVector bits;                          // demap_qpsk(symbol_estimates)
  CMatrix<Scalar> per_subcarrier_channel;  // M x Nc channel used for MRC
  CMatrix<Scalar> freq_samples;            // M x Nc demodulated array output
};

template <typename Derived>
CMatrix<typename Derived::RealScalar> pseudo_inverse(const Eigen::MatrixBase<Derived>& t) {
  using C = typename Derived::Scalar;
  using Scalar = typename Derived::RealScalar;
  Eigen::JacobiSVD<CMatrix<Scalar>> svd(t, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  RVector<Scalar> inv = RVector<Scalar>::Zero(sv.size());
  const Scalar cutoff = sv.size() > 0 ? Scalar(kPinvTolerance) * sv(0) : Scalar(0);
  for (Index i = 0; i < sv.size(); ++i) {
    if (sv(i) > cutoff) inv(i) = Scalar(1) / sv(i);
  }
  return svd.matrixV() * inv.template cast<C>().asDiagonal() * svd.matrixU().adjoint();
}

template <typename Scalar>
SpatialFilterBank<Scalar> build_spatial_filters(const std::vector<Scalar>& doas, const ArrayConfig<Scalar>& array) {
  const auto q = static_cast<Index>(doas.size());
  const Index m = array.n_antennas;
  if (q < 1) throw ConfigError("build_spatial_filters: need at least one DOA");
  if (q > m) throw ConfigError("build_spatial_filters: more paths than antennas");
  for (Index l = 0; l < q; ++l) {
    for (Index k = 0; k < l; ++k) {
      if (std::abs(doas[static_cast<std::size_t>(l)] - doas[static_cast<std::size_t>(k)]) <
          Scalar(kMinDoaSeparationDeg)) {
        throw IllConditionedFilter("build_spatial_filters: DOAs " + std::to_string(k) + " and " +
                                   std::to_string(l) + " coincide");
      }
    }
  }

  const CMatrix<Scalar> a = steering_matrix(doas, array);
  const CMatrix<Scalar> eye = CMatrix<Scalar>::Identity(m, m);
  SpatialFilterBank<Scalar> bank;
  bank.doas = doas;
  for (Index l = 0; l < q; ++l) {
    CMatrix<Scalar> f = eye;
    if (q > 1) {
      CMatrix<Scalar> t(m, q - 1);
      for (Index c = 0, k = 0; k < q; ++k) {
        if (k != l) t.col(c++) = a.col(k);
      }
      f -= t * pseudo_inverse(t);
    }
    const CVector<Scalar> fa = f * a.col(l);
    const Scalar gain = a.col(l).dot(fa).real();
    if (!(gain > Scalar(kPinvTolerance) * static_cast<Scalar>(m))) {
      throw IllConditionedFilter("build_spatial_filters: path " + std::to_string(l) +
                                 " lies in the span of the others");
    }
    bank.extractors.push_back(a.col(l) * fa.adjoint() / gain);
    bank.filters.push_back(std::move(f));
  }
  return bank;
}

/// x_l(n) = e^{-j 2 pi n f_l / (Nc df)} * E_l * y(n), n = 0 .. Nc-1, as an M x Nc matrix.
template <typename Scalar>
CMatrix<Scalar> filter_and_compensate(const RxBlock<Scalar>& rx, const CMatrix<Scalar>& extractor,
                                      Scalar doppler_est, const OfdmConfig<Scalar>& cfg) {
  const Index nc = cfg.n_subcarriers;
  CMatrix<Scalar> x = extractor * rx.body();
  const Scalar step = -kTwoPi<Scalar> * doppler_est / (static_cast<Scalar>(nc) * cfg.subcarrier_spacing);
  for (Index n = 0; n < nc; ++n) x.col(n) *= cis(step * static_cast<Scalar>(n));
  return x;
}

namespace detail {

template <typename Scalar>
DetectionResult<Scalar> mrc_detect(CMatrix<Scalar> freq, const CMatrix<Scalar>& channel) {
  if (channel.rows() != freq.rows() || channel.cols() != freq.cols()) {
    throw InputShapeError("mrc_detect: channel must be M x Nc");
  }
  DetectionResult<Scalar> out;
  out.symbol_estimates.resize(freq.cols());
  for (Index k = 0; k < freq.cols(); ++k) {
    const Scalar energy = channel.col(k).squaredNorm();
    if (!(energy > 0)) throw DegenerateChannel("zero channel norm on subcarrier " + std::to_string(k));
    out.symbol_estimates(k) = channel.col(k).dot(freq.col(k)) / energy;
  }
  out.bits = demap_qpsk(out.symbol_estimates);
  out.per_subcarrier_channel = channel;
  out.freq_samples = std::move(freq);
  return out;
}

}  // namespace detail

/// FFT after CP removal, then d_hat(k) = H_k^H Y_k / (H_k^H H_k).
template <typename Scalar>
DetectionResult<Scalar> conventional_detect(const RxBlock<Scalar>& rx, const CMatrix<Scalar>& genie,
                                            const OfdmConfig<Scalar>& cfg) {
  if (rx.n_subcarriers() != cfg.n_subcarriers) throw InputShapeError("conventional_detect: block length");
  return detail::mrc_detect<Scalar>(ofdm_demodulate_rows(rx.body()), genie);
}

/// Sums the compensated branches, demodulates, and combines with the time-invariant channel.
template <typename Scalar>
DetectionResult<Scalar> combine_detect(const std::vector<CMatrix<Scalar>>& parts, const CMatrix<Scalar>& genie,
                                       const OfdmConfig<Scalar>& cfg) {
  if (parts.empty()) throw InputShapeError("combine_detect: no branches");
  CMatrix<Scalar> xc = parts.front();
  for (std::size_t l = 1; l < parts.size(); ++l) xc += parts[l];
  if (xc.cols() != cfg.n_subcarriers) throw InputShapeError("combine_detect: branch length");
  return detail::mrc_detect<Scalar>(ofdm_demodulate_rows(xc), genie);
}

/// Full proposed chain for given path parameters (DOA from the bank, Doppler per path).
template <typename Scalar>
DetectionResult<Scalar> proposed_detect(const RxBlock<Scalar>& rx, const SpatialFilterBank<Scalar>& bank,
                                        const std::vector<Scalar>& dopplers, const CMatrix<Scalar>& genie,
                                        const OfdmConfig<Scalar>& cfg) {
  if (static_cast<Index>(dopplers.size()) != bank.size()) {
    throw InputShapeError("proposed_detect: one Doppler per filter required");
  }
  std::vector<CMatrix<Scalar>> parts;
  parts.reserve(dopplers.size());
  for (Index l = 0; l < bank.size(); ++l) {
    parts.push_back(filter_and_compensate(rx, bank.extractors[static_cast<std::size_t>(l)],
                                          dopplers[static_cast<std::size_t>(l)], cfg));
  }
  return combine_detect(parts, genie, cfg);
}

}  // namespace simo
