#pragma once

#include <Eigen/Core>

#include <stdexcept>
#include <string>

namespace tpmg {

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using Vector3 = Eigen::Matrix<Scalar, 3, 1>;
template <typename Scalar>
using Matrix3X = Eigen::Matrix<Scalar, 3, Eigen::Dynamic>;

using Index = Eigen::Index;
using IndexVector = Eigen::Matrix<Index, Eigen::Dynamic, 1>;
using Index3X = Eigen::Matrix<Index, 3, Eigen::Dynamic>;
using Index2X = Eigen::Matrix<Index, 2, Eigen::Dynamic>;

/// Invalid run/build configuration (bad level count, nonpositive depth, ...).
class config_error : public std::runtime_error {
 public:
  explicit config_error(const std::string& what) : std::runtime_error(what) {}
};

/// Array shapes inconsistent with the active grid.
class shape_error : public std::runtime_error {
 public:
  explicit shape_error(const std::string& what) : std::runtime_error(what) {}
};

/// NaN or infinity where a finite value is required.
class nonfinite_error : public std::runtime_error {
 public:
  explicit nonfinite_error(const std::string& what) : std::runtime_error(what) {}
};

/// Profile file does not belong to the active grid.
class fingerprint_error : public std::runtime_error {
 public:
  explicit fingerprint_error(const std::string& what) : std::runtime_error(what) {}
};

/// Zero pivot in a direct solve.
class singular_error : public std::runtime_error {
 public:
  explicit singular_error(const std::string& what) : std::runtime_error(what) {}
};

/// Problem too large for a dense verification path.
class cap_error : public std::runtime_error {
 public:
  explicit cap_error(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace tpmg
