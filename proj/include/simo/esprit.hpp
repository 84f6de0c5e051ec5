#pragma once

// Joint DOA / Doppler estimation from the ISI-free tail of the cyclic prefix.
//
// Each column of the 2M x P spatio-temporal matrix is y(n) stacked on y(n + Nc),
// n = -P .. -1. Since s(n) = s(n + Nc) in that range, every path contributes the
// manifold column [1, e^{j nu}]^T (x) a(theta) with
//   spatial frequency  mu = -2 pi (d/lambda) sin(theta)
//   temporal frequency nu =  2 pi f_d / df.
// 2-D unitary ESPRIT recovers both frequencies from one real-valued signal
// subspace, and the eigenvalues of Psi_mu + j Psi_nu pair them automatically.

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "simo/channel.hpp"
#include "simo/ofdm.hpp"
#include "simo/types.hpp"

namespace simo {

template <typename Scalar>
struct SpatioTemporalMatrix {
  CMatrix<Scalar> data;  // 2M x P
  Index p_len = 0;
  Index n_antennas = 0;
  Index n_subcarriers = 0;
  Scalar subcarrier_spacing = 0;
  Scalar spacing_over_wavelength = 0;

  auto top() const { return data.topRows(n_antennas); }
  auto bottom() const { return data.bottomRows(n_antennas); }
};

template <typename Scalar>
struct PathEstimate {
  Scalar doa_est = 0;      // degrees
  Scalar doppler_est = 0;  // Hz
};

/// Stacks y(-P..-1) over y(Nc-P..Nc-1). Requires P <= Ng - tau_max so no column sees ISI.
template <typename Scalar>
SpatioTemporalMatrix<Scalar> build_data_matrix(const RxBlock<Scalar>& rx, Index p_len, Index tau_max,
                                               const OfdmConfig<Scalar>& cfg, const ArrayConfig<Scalar>& array) {
  if (p_len < 1) throw ConfigError("build_data_matrix: P must be >= 1");
  if (p_len > cfg.cp_len - tau_max) {
    throw ConfigError("build_data_matrix: P = " + std::to_string(p_len) + " exceeds the ISI-free CP length " +
                      std::to_string(cfg.cp_len - tau_max));
  }
  if (rx.cp_len != cfg.cp_len || rx.n_subcarriers() != cfg.n_subcarriers || rx.n_antennas() != array.n_antennas) {
    throw InputShapeError("build_data_matrix: rx block does not match configuration");
  }
  const Index m = array.n_antennas;
  const Index nc = cfg.n_subcarriers;
  SpatioTemporalMatrix<Scalar> y;
  y.data.resize(2 * m, p_len);
  y.data.topRows(m) = rx.samples.middleCols(rx.cp_len - p_len, p_len);
  y.data.bottomRows(m) = rx.samples.middleCols(rx.cp_len + nc - p_len, p_len);
  y.p_len = p_len;
  y.n_antennas = m;
  y.n_subcarriers = nc;
  y.subcarrier_spacing = cfg.subcarrier_spacing;
  y.spacing_over_wavelength = array.spacing_over_wavelength;
  return y;
}

// ---------------------------------------------------------------------------
// Unitary ESPRIT building blocks

/// n x n anti-identity.
template <typename Scalar>
RMatrix<Scalar> exchange_matrix(Index n) {
  return RMatrix<Scalar>::Identity(n, n).rowwise().reverse();
}

/// Left Pi-real unitary matrix Q_n: Pi_n * conj(Q_n) = Q_n.
template <typename Scalar>
CMatrix<Scalar> left_real_unitary(Index n) {
  const Index half = n / 2;
  const Scalar s = Scalar(1) / std::sqrt(Scalar(2));
  const Complex<Scalar> j(0, 1);
  CMatrix<Scalar> q = CMatrix<Scalar>::Zero(n, n);
  const auto eye = RMatrix<Scalar>::Identity(half, half);
  const auto pi = exchange_matrix<Scalar>(half);
  const Index lo = n - half;  // start row of the bottom block
  q.block(0, 0, half, half) = eye.template cast<Complex<Scalar>>() * s;
  q.block(0, lo, half, half) = eye.template cast<Complex<Scalar>>() * (j * s);
  q.block(lo, 0, half, half) = pi.template cast<Complex<Scalar>>() * s;
  q.block(lo, lo, half, half) = pi.template cast<Complex<Scalar>>() * (-j * s);
  if (n % 2 == 1) q(half, half) = Complex<Scalar>(1, 0);
  return q;
}

/// Q_{2M}^H [Y, Pi conj(Y) Pi] Q_{2P}. Real up to round-off; returned complex so the residue can be inspected.
template <typename Derived>
CMatrix<typename Derived::RealScalar> forward_backward_transform(const Eigen::MatrixBase<Derived>& y) {
  using Scalar = typename Derived::RealScalar;
  const Index rows = y.rows();
  const Index cols = y.cols();
  CMatrix<Scalar> z(rows, 2 * cols);
  z.leftCols(cols) = y;
  z.rightCols(cols) = y.conjugate().reverse();
  return left_real_unitary<Scalar>(rows).adjoint() * z * left_real_unitary<Scalar>(2 * cols);
}

/// Real selection pair (K1, K2) from complex selectors J1, J2 satisfying Pi J2 Pi = J1.
/// With J1 a e^{j w} = J2 a the real invariance equation is K1 E tan(w/2) = K2 E.
template <typename Scalar>
std::pair<RMatrix<Scalar>, RMatrix<Scalar>> real_selection_pair(const RMatrix<Scalar>& j1, const RMatrix<Scalar>& j2) {
  const Complex<Scalar> j(0, 1);
  const CMatrix<Scalar> ql = left_real_unitary<Scalar>(j1.rows()).adjoint();
  const CMatrix<Scalar> qr = left_real_unitary<Scalar>(j1.cols());
  const CMatrix<Scalar> sum = (j1 + j2).template cast<Complex<Scalar>>();
  const CMatrix<Scalar> diff = (j1 - j2).template cast<Complex<Scalar>>();
  RMatrix<Scalar> k1 = (ql * sum * qr).real();
  RMatrix<Scalar> k2 = (ql * (j * diff) * qr).real();
  return {std::move(k1), std::move(k2)};
}

/// Spatial selectors: antennas {0..M-2} vs {1..M-1} inside each of the two M-blocks.
template <typename Scalar>
std::pair<RMatrix<Scalar>, RMatrix<Scalar>> spatial_selectors(Index m) {
  RMatrix<Scalar> j1 = RMatrix<Scalar>::Zero(2 * (m - 1), 2 * m);
  RMatrix<Scalar> j2 = j1;
  for (Index b = 0; b < 2; ++b) {
    for (Index r = 0; r < m - 1; ++r) {
      j1(b * (m - 1) + r, b * m + r) = 1;
      j2(b * (m - 1) + r, b * m + r + 1) = 1;
    }
  }
  return {std::move(j1), std::move(j2)};
}

/// Temporal selectors: top block vs bottom block.
template <typename Scalar>
std::pair<RMatrix<Scalar>, RMatrix<Scalar>> temporal_selectors(Index m) {
  RMatrix<Scalar> j1 = RMatrix<Scalar>::Zero(m, 2 * m);
  RMatrix<Scalar> j2 = j1;
  j1.leftCols(m).setIdentity();
  j2.rightCols(m).setIdentity();
  return {std::move(j1), std::move(j2)};
}

/// Relative floor on sigma_Q / sigma_1 below which the subspace is considered deficient.
inline constexpr double kSubspaceTolerance = 1e-8;

template <typename Scalar>
std::vector<PathEstimate<Scalar>> unitary_esprit_2d(const SpatioTemporalMatrix<Scalar>& y, Index n_paths) {
  const Index m = y.n_antennas;
  if (n_paths < 1) throw ConfigError("unitary_esprit_2d: need at least one path");
  if (n_paths > std::min(m - 1, y.p_len)) {
    throw ConfigError("unitary_esprit_2d: Q = " + std::to_string(n_paths) + " exceeds min(M-1, P)");
  }
  if (y.data.rows() != 2 * m) throw InputShapeError("unitary_esprit_2d: data must have 2M rows");

  const Scalar scale = y.data.cwiseAbs().maxCoeff();
  if (!(scale > 0)) throw EstimationFailure("unitary_esprit_2d: all-zero data", {});

  // (1)-(2) forward-backward extension and real transform
  const RMatrix<Scalar> zr = forward_backward_transform(y.data / scale).real();

  // (3) signal subspace
  Eigen::JacobiSVD<RMatrix<Scalar>> svd(zr, Eigen::ComputeThinU);
  const auto& sv = svd.singularValues();
  if (sv.size() < n_paths || sv(n_paths - 1) < Scalar(kSubspaceTolerance) * sv(0)) {
    std::vector<double> profile(sv.data(), sv.data() + sv.size());
    throw EstimationFailure("unitary_esprit_2d: signal subspace rank below Q", std::move(profile));
  }
  const RMatrix<Scalar> es = svd.matrixU().leftCols(n_paths);

  // (4) real invariance equations, least squares
  const auto [js1, js2] = spatial_selectors<Scalar>(m);
  const auto [jt1, jt2] = temporal_selectors<Scalar>(m);
  const auto [ks1, ks2] = real_selection_pair(js1, js2);
  const auto [kt1, kt2] = real_selection_pair(jt1, jt2);
  const RMatrix<Scalar> psi_mu = (ks1 * es).colPivHouseholderQr().solve(ks2 * es);
  const RMatrix<Scalar> psi_nu = (kt1 * es).colPivHouseholderQr().solve(kt2 * es);

  // (5) auto-pairing
  CMatrix<Scalar> joint(n_paths, n_paths);
  joint.real() = psi_mu;
  joint.imag() = psi_nu;
  Eigen::ComplexEigenSolver<CMatrix<Scalar>> eig(joint, false);
  if (eig.info() != Eigen::Success) throw EstimationFailure("unitary_esprit_2d: eigen decomposition failed", {});

  // (6) back-map
  std::vector<PathEstimate<Scalar>> out;
  out.reserve(static_cast<std::size_t>(n_paths));
  for (Index l = 0; l < n_paths; ++l) {
    const Complex<Scalar> lambda = eig.eigenvalues()(l);
    const Scalar mu = Scalar(2) * std::atan(lambda.real());
    const Scalar nu = Scalar(2) * std::atan(lambda.imag());
    const Scalar sin_theta = std::clamp(-mu / (kTwoPi<Scalar> * y.spacing_over_wavelength), Scalar(-1), Scalar(1));
    out.push_back({rad2deg(std::asin(sin_theta)), nu * y.subcarrier_spacing / kTwoPi<Scalar>});
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.doa_est < b.doa_est; });
  return out;
}

// ---------------------------------------------------------------------------
// Grid-search (MUSIC) cross-check

/// Uniform grid start + i * step, i = 0 .. count-1.
template <typename Scalar>
struct Grid {
  Scalar start = 0;
  Scalar step = 1;
  Index count = 0;

  Scalar operator[](Index i) const { return start + static_cast<Scalar>(i) * step; }

  /// Multiples of `step` lying strictly inside (lo, hi).
  static Grid open_interval(Scalar lo, Scalar hi, Scalar step) {
    const auto first = static_cast<Index>(std::floor(lo / step)) + 1;
    const auto last = static_cast<Index>(std::ceil(hi / step)) - 1;
    return {static_cast<Scalar>(first) * step, step, std::max<Index>(0, last - first + 1)};
  }
};

/// MUSIC pseudospectrum over a (theta, f) grid; returns the Q strongest local maxima
/// that are at least two cells apart, sorted by DOA.
template <typename Scalar>
std::vector<PathEstimate<Scalar>> grid_search_oracle(const SpatioTemporalMatrix<Scalar>& y, Index n_paths,
                                                     const Grid<Scalar>& theta_grid, const Grid<Scalar>& freq_grid) {
  const Index m = y.n_antennas;
  if (n_paths < 1 || n_paths >= 2 * m) throw ConfigError("grid_search_oracle: invalid Q");
  if (theta_grid.count < 1 || freq_grid.count < 1) throw ConfigError("grid_search_oracle: empty grid");

  const CMatrix<Scalar> r = y.data * y.data.adjoint();
  Eigen::SelfAdjointEigenSolver<CMatrix<Scalar>> eig(r);
  const CMatrix<Scalar> en = eig.eigenvectors().leftCols(2 * m - n_paths);
  const CMatrix<Scalar> c = en * en.adjoint();
  const CMatrix<Scalar> c_diag = c.topLeftCorner(m, m) + c.bottomRightCorner(m, m);
  const CMatrix<Scalar> c_cross = c.topRightCorner(m, m);

  const ArrayConfig<Scalar> array{m, y.spacing_over_wavelength};
  CVector<Scalar> rot(freq_grid.count);
  for (Index j = 0; j < freq_grid.count; ++j) {
    rot(j) = cis(kTwoPi<Scalar> * freq_grid[j] / y.subcarrier_spacing);
  }

  // score(theta, f) = 1 / (alpha(theta) + 2 Re(e^{j nu} gamma(theta)))
  const auto row_scores = [&](Index i, RVector<Scalar>& out) {
    const CVector<Scalar> a = steering_vector(theta_grid[i], array);
    const Scalar alpha = (a.adjoint() * c_diag * a)(0).real();
    const Complex<Scalar> gamma = (a.adjoint() * c_cross * a)(0);
    for (Index j = 0; j < freq_grid.count; ++j) {
      const Scalar den = alpha + Scalar(2) * (rot(j) * gamma).real();
      out(j) = Scalar(1) / std::max(den, std::numeric_limits<Scalar>::min());
    }
  };

  struct Peak {
    Scalar score;
    Index i;
    Index j;
  };
  std::vector<Peak> peaks;

  const Index nt = theta_grid.count;
  const Index nf = freq_grid.count;
  RVector<Scalar> prev(nf), cur(nf), next(nf);
  row_scores(0, cur);
  for (Index i = 0; i < nt; ++i) {
    if (i + 1 < nt) row_scores(i + 1, next);
    for (Index j = 0; j < nf; ++j) {
      const Scalar v = cur(j);
      bool is_max = true;
      for (Index di = -1; di <= 1 && is_max; ++di) {
        if (i + di < 0 || i + di >= nt) continue;
        const RVector<Scalar>& row = di < 0 ? prev : (di > 0 ? next : cur);
        for (Index dj = -1; dj <= 1; ++dj) {
          if ((di == 0 && dj == 0) || j + dj < 0 || j + dj >= nf) continue;
          if (row(j + dj) > v) {
            is_max = false;
            break;
          }
        }
      }
      if (is_max) peaks.push_back({v, i, j});
    }
    std::swap(prev, cur);
    std::swap(cur, next);
  }

  std::sort(peaks.begin(), peaks.end(), [](const Peak& a, const Peak& b) { return a.score > b.score; });
  std::vector<Peak> chosen;
  for (const auto& p : peaks) {
    const bool separated = std::all_of(chosen.begin(), chosen.end(), [&](const Peak& q) {
      return std::abs(p.i - q.i) >= 2 || std::abs(p.j - q.j) >= 2;
    });
    if (separated) chosen.push_back(p);
    if (static_cast<Index>(chosen.size()) == n_paths) break;
  }
  if (static_cast<Index>(chosen.size()) < n_paths) {
    throw OracleFailure("grid_search_oracle: found " + std::to_string(chosen.size()) + " separated peaks, need " +
                        std::to_string(n_paths));
  }

  std::vector<PathEstimate<Scalar>> out;
  for (const auto& p : chosen) out.push_back({theta_grid[p.i], freq_grid[p.j]});
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.doa_est < b.doa_est; });
  return out;
}

}  // namespace simo
