#pragma once

#include <complex>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace simo {

using Index = Eigen::Index;

template <typename Scalar>
using Complex = std::complex<Scalar>;

template <typename Scalar>
using CVector = Eigen::Matrix<std::complex<Scalar>, Eigen::Dynamic, 1>;

template <typename Scalar>
using CMatrix = Eigen::Matrix<std::complex<Scalar>, Eigen::Dynamic, Eigen::Dynamic>;

template <typename Scalar>
using RVector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
using RMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

/// One bit per element, values 0 or 1.
using BitVector = std::vector<std::uint8_t>;

template <typename Scalar>
inline constexpr Scalar kPi = std::numbers::pi_v<Scalar>;

template <typename Scalar>
inline constexpr Scalar kTwoPi = Scalar(2) * std::numbers::pi_v<Scalar>;

template <typename Scalar>
constexpr Scalar deg2rad(Scalar deg) {
  return deg * kPi<Scalar> / Scalar(180);
}

template <typename Scalar>
constexpr Scalar rad2deg(Scalar rad) {
  return rad * Scalar(180) / kPi<Scalar>;
}

/// e^{j*phase}
template <typename Scalar>
Complex<Scalar> cis(Scalar phase) {
  return std::polar(Scalar(1), phase);
}

// ---------------------------------------------------------------------------
// Error types

/// Invalid numerology, array or channel description.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Input container has the wrong length or shape.
class InputShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// The signal subspace could not be resolved from the data.
class EstimationFailure : public std::runtime_error {
 public:
  EstimationFailure(const std::string& what, std::vector<double> singular_values)
      : std::runtime_error(what), singular_values_(std::move(singular_values)) {}

  const std::vector<double>& singular_values() const noexcept { return singular_values_; }

 private:
  std::vector<double> singular_values_;
};

/// Grid search could not find enough separated peaks.
class OracleFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Zero-norm effective channel on some subcarrier.
class DegenerateChannel : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Two DOAs too close to build distinct spatial filters.
class IllConditionedFilter : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace simo
