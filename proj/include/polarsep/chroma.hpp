#pragma once

#include "polarsep/trs.hpp"

#include <cstdint>
#include <vector>

namespace polarsep {

// Polarization chromaticity image: raw_d normalized per pixel by its
// channel sum plus the global stabilizer i_min_bar (the mean over pixels
// of the per-pixel channel minimum of raw_d).
template <typename Scalar>
struct ChromaticityImageT {
  Index width = 0;
  Index height = 0;
  PixelMatrix<Scalar> samples;
  Scalar i_min_bar = 0;

  Index pixels() const { return width * height; }
};

enum class PixelClass : std::uint8_t { PureDiffuse, Combined };

struct PixelClassMap {
  Index width = 0;
  Index height = 0;
  std::vector<PixelClass> labels;

  Index pixels() const { return width * height; }
};

template <typename Scalar>
ChromaticityImageT<Scalar> chromaticity(const RgbImageT<Scalar>& raw_d) {
  check_valid(raw_d);
  ChromaticityImageT<Scalar> chro;
  chro.width = raw_d.width;
  chro.height = raw_d.height;
  // Eigen reduces in a fixed order, so the stabilizer is reproducible.
  chro.i_min_bar = raw_d.samples.rowwise().minCoeff().mean();
  const PixelVector<Scalar> denom =
      raw_d.samples.rowwise().sum().array() + chro.i_min_bar;
  chro.samples.resize(raw_d.pixels(), 3);
  for (Index p = 0; p < raw_d.pixels(); ++p) {
    if (denom(p) > Scalar(0))
      chro.samples.row(p) = raw_d.samples.row(p) / denom(p);
    else
      chro.samples.row(p).setZero();
  }
  return chro;
}

// Labels a pixel PureDiffuse when its polarized energy 2*i_sv is small
// relative to the constant radiance: mean_ch(2*i_sv) < tau_s * mean_ch(i_c).
template <typename Scalar>
PixelClassMap classify_pixels(const TrsMapsT<Scalar>& maps,
                              const RawComponentsT<Scalar>& raw,
                              Scalar tau_s = Scalar(0.02)) {
  constexpr Scalar eps_div = Scalar(1e-6);
  if (raw.raw_d.width != maps.width || raw.raw_d.height != maps.height)
    throw DimensionError("TRS maps and raw components disagree in size");
  PixelClassMap map;
  map.width = maps.width;
  map.height = maps.height;
  map.labels.resize(static_cast<std::size_t>(maps.pixels()));
  for (Index p = 0; p < maps.pixels(); ++p) {
    const Scalar polarized = Scalar(2) * maps.i_sv.row(p).mean();
    const Scalar constant = std::max(maps.i_c.row(p).mean(), eps_div);
    map.labels[static_cast<std::size_t>(p)] = polarized < tau_s * constant
                                                  ? PixelClass::PureDiffuse
                                                  : PixelClass::Combined;
  }
  return map;
}

}  // namespace polarsep
