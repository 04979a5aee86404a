#pragma once

#include <Eigen/Core>

#include <array>
#include <stdexcept>
#include <string>

namespace polarsep {

using Index = Eigen::Index;

// One row per pixel, raster order (y * width + x), columns R, G, B.
template <typename Scalar>
using PixelMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, 3>;

template <typename Scalar>
using PixelVector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
using Rgb = Eigen::Matrix<Scalar, 1, 3>;

template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

// Base of all library errors. The two subfamilies map to process exit
// codes: user/input errors exit 1, numeric failures exit 2.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct IoError : Error {
  using Error::Error;
};

struct DimensionError : Error {
  using Error::Error;
};

struct TagError : Error {
  using Error::Error;
};

// Invalid user-provided specification or argument (synth specs, CLI args).
struct SpecError : Error {
  using Error::Error;
};

// Non-finite data or a failed decomposition.
struct NumericError : Error {
  using Error::Error;
};

inline int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const NumericError*>(&e) != nullptr) return 2;
  return 1;
}

inline const char* error_category(const std::exception& e) {
  if (dynamic_cast<const IoError*>(&e)) return "io";
  if (dynamic_cast<const TagError*>(&e)) return "tag";
  if (dynamic_cast<const DimensionError*>(&e)) return "dimension";
  if (dynamic_cast<const SpecError*>(&e)) return "spec";
  if (dynamic_cast<const NumericError*>(&e)) return "numeric";
  return "internal";
}

}  // namespace polarsep
