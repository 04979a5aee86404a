#pragma once

#include "polarsep/types.hpp"

#include <array>
#include <cmath>
#include <numbers>

namespace polarsep {

// Linear-intensity RGB raster. Samples live in [0, 1] after ingestion;
// intermediate results may exceed 1 but must stay finite and nonnegative.
template <typename Scalar>
struct RgbImageT {
  Index width = 0;
  Index height = 0;
  PixelMatrix<Scalar> samples;  // (width * height) x 3

  Index pixels() const { return width * height; }
};

template <typename Scalar>
struct GrayImageT {
  Index width = 0;
  Index height = 0;
  PixelVector<Scalar> samples;  // (width * height) x 1

  Index pixels() const { return width * height; }
};

inline constexpr std::array<double, 4> kCanonicalAnglesDeg = {0.0, 45.0, 90.0, 135.0};

template <typename Scalar>
constexpr std::array<Scalar, 4> canonical_angles_rad() {
  constexpr Scalar deg = std::numbers::pi_v<Scalar> / Scalar(180);
  return {Scalar(0), Scalar(45) * deg, Scalar(90) * deg, Scalar(135) * deg};
}

// Four co-registered RGB frames at polarizer angles 0/45/90/135 degrees,
// always stored in that order regardless of how the files were given.
template <typename Scalar>
struct PolarizedStackT {
  Index width = 0;
  Index height = 0;
  std::array<Scalar, 4> angles_rad = canonical_angles_rad<Scalar>();
  std::array<PixelMatrix<Scalar>, 4> frames;

  Index pixels() const { return width * height; }

  bool has_canonical_angles() const {
    const auto ref = canonical_angles_rad<Scalar>();
    for (int i = 0; i < 4; ++i) {
      if (std::abs(angles_rad[i] - ref[i]) > Scalar(1e-12)) return false;
    }
    return true;
  }
};

template <typename Scalar>
void check_valid(const RgbImageT<Scalar>& img) {
  if (img.width <= 0 || img.height <= 0)
    throw DimensionError("image has empty extent");
  if (img.samples.rows() != img.pixels())
    throw DimensionError("sample count does not match width*height");
  if (!img.samples.allFinite())
    throw NumericError("image contains non-finite samples");
  if ((img.samples.array() < Scalar(0)).any())
    throw NumericError("image contains negative samples");
}

template <typename Scalar>
void check_valid(const PolarizedStackT<Scalar>& stack) {
  if (stack.width <= 0 || stack.height <= 0)
    throw DimensionError("stack has empty extent");
  for (const auto& frame : stack.frames) {
    if (frame.rows() != stack.pixels())
      throw DimensionError("stack frame size does not match width*height");
    if (!frame.allFinite())
      throw NumericError("stack contains non-finite samples");
  }
}

}  // namespace polarsep
