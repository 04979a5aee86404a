#pragma once

#include "polarsep/image.hpp"

#include <Eigen/Cholesky>

#include <cmath>
#include <numbers>

namespace polarsep {

// Per-pixel, per-channel transmitted radiance sinusoid parameters:
// I(phi) = i_c + i_sv * cos 2(phi - alpha).
template <typename Scalar>
struct TrsMapsT {
  Index width = 0;
  Index height = 0;
  PixelMatrix<Scalar> i_c;       // constant radiance, >= 0
  PixelMatrix<Scalar> i_sv;      // polarized amplitude, >= 0
  PixelMatrix<Scalar> alpha;     // phase, [0, pi)
  PixelMatrix<Scalar> residual;  // per-sample least-squares residual
  Index negative_ic_clamped = 0;

  Index pixels() const { return width * height; }
};

template <typename Scalar>
struct RawComponentsT {
  RgbImageT<Scalar> raw_d;  // I_c - 2*I_sv, clamped at 0
  RgbImageT<Scalar> raw_s;  // 2*I_sv
  Index clamp_count = 0;    // pixels where any raw_d channel was clamped
};

namespace trs_detail {

// Amplitude below which the phase is considered undefined and pinned to 0.
template <typename Scalar>
inline constexpr Scalar kPhaseAmplitudeFloor = Scalar(1e-9);

template <typename Scalar>
Scalar canonical_phase(Scalar s, Scalar c) {
  Scalar a = Scalar(0.5) * std::atan2(s, c);
  constexpr Scalar pi = std::numbers::pi_v<Scalar>;
  if (a < Scalar(0)) a += pi;
  if (a >= pi) a -= pi;
  return a;
}

}  // namespace trs_detail

// Least-squares fit of the sinusoid at the stack's four angles. The
// canonical 0/45/90/135 set reduces to the closed form
//   i_c = (I0 + I45 + I90 + I135) / 4
//   c   = (I0 - I90) / 2,  s = (I45 - I135) / 2
//   i_sv = sqrt(c^2 + s^2),  alpha = atan2(s, c) / 2
// other angle sets fall back to normal equations on (1, cos 2phi, sin 2phi).
template <typename Scalar>
TrsMapsT<Scalar> fit_trs(const PolarizedStackT<Scalar>& stack) {
  check_valid(stack);
  const Index n = stack.pixels();

  TrsMapsT<Scalar> maps;
  maps.width = stack.width;
  maps.height = stack.height;
  maps.i_c.resize(n, 3);
  maps.i_sv.resize(n, 3);
  maps.alpha.resize(n, 3);
  maps.residual.resize(n, 3);

  PixelMatrix<Scalar> cos_coef(n, 3), sin_coef(n, 3);
  if (stack.has_canonical_angles()) {
    maps.i_c = (stack.frames[0] + stack.frames[1] + stack.frames[2] + stack.frames[3]) / Scalar(4);
    cos_coef = (stack.frames[0] - stack.frames[2]) / Scalar(2);
    sin_coef = (stack.frames[1] - stack.frames[3]) / Scalar(2);
  } else {
    Eigen::Matrix<Scalar, 4, 3> basis;
    for (int a = 0; a < 4; ++a) {
      const Scalar phi = stack.angles_rad[static_cast<std::size_t>(a)];
      basis(a, 0) = Scalar(1);
      basis(a, 1) = std::cos(Scalar(2) * phi);
      basis(a, 2) = std::sin(Scalar(2) * phi);
    }
    const Eigen::Matrix<Scalar, 3, 3> gram = basis.transpose() * basis;
    const auto ldlt = gram.ldlt();
    if (ldlt.info() != Eigen::Success || !(gram.determinant() > Scalar(1e-12)))
      throw NumericError("degenerate polarizer angle set");
    // x = (B^T B)^{-1} B^T obs, applied to all pixels at once.
    const Eigen::Matrix<Scalar, 3, 4> solve_op = ldlt.solve(basis.transpose());
    for (int ch = 0; ch < 3; ++ch) {
      Eigen::Matrix<Scalar, Eigen::Dynamic, 4> obs(n, 4);
      for (int a = 0; a < 4; ++a) obs.col(a) = stack.frames[static_cast<std::size_t>(a)].col(ch);
      const Eigen::Matrix<Scalar, Eigen::Dynamic, 3> x = obs * solve_op.transpose();
      maps.i_c.col(ch) = x.col(0);
      cos_coef.col(ch) = x.col(1);
      sin_coef.col(ch) = x.col(2);
    }
  }

  maps.i_sv = (cos_coef.array().square() + sin_coef.array().square()).sqrt();

  maps.negative_ic_clamped = (maps.i_c.array() < Scalar(0)).count();
  maps.i_c = maps.i_c.cwiseMax(Scalar(0));

  for (Index p = 0; p < n; ++p)
    for (int ch = 0; ch < 3; ++ch)
      maps.alpha(p, ch) = maps.i_sv(p, ch) < trs_detail::kPhaseAmplitudeFloor<Scalar>
                              ? Scalar(0)
                              : trs_detail::canonical_phase(sin_coef(p, ch), cos_coef(p, ch));

  maps.residual.setZero();
  for (int a = 0; a < 4; ++a) {
    const Scalar phi = stack.angles_rad[static_cast<std::size_t>(a)];
    const Scalar c2 = std::cos(Scalar(2) * phi);
    const Scalar s2 = std::sin(Scalar(2) * phi);
    maps.residual.array() +=
        (maps.i_c.array() + cos_coef.array() * c2 + sin_coef.array() * s2 -
         stack.frames[static_cast<std::size_t>(a)].array())
            .square();
  }
  return maps;
}

// Raw specular/diffuse split: raw_s = 2*i_sv, raw_d = max(i_c - raw_s, 0).
template <typename Scalar>
RawComponentsT<Scalar> raw_components(const TrsMapsT<Scalar>& maps) {
  RawComponentsT<Scalar> raw;
  raw.raw_s.width = raw.raw_d.width = maps.width;
  raw.raw_s.height = raw.raw_d.height = maps.height;
  raw.raw_s.samples = Scalar(2) * maps.i_sv;
  const PixelMatrix<Scalar> unclamped = maps.i_c - raw.raw_s.samples;
  raw.raw_d.samples = unclamped.cwiseMax(Scalar(0));
  raw.clamp_count = ((unclamped.array() < Scalar(0)).rowwise().any()).count();
  return raw;
}

// Diagnostic map: per pixel, the channel mean of i_sv / i_c in [0, 1].
template <typename Scalar>
GrayImageT<Scalar> degree_of_polarization(const TrsMapsT<Scalar>& maps) {
  constexpr Scalar eps_div = Scalar(1e-6);
  GrayImageT<Scalar> dop;
  dop.width = maps.width;
  dop.height = maps.height;
  dop.samples = (maps.i_sv.array() / maps.i_c.array().max(eps_div))
                    .rowwise()
                    .mean()
                    .cwiseMin(Scalar(1))
                    .cwiseMax(Scalar(0));
  return dop;
}

}  // namespace polarsep
