#pragma once

#include "polarsep/chroma.hpp"
#include "polarsep/optimizer.hpp"

#include <cmath>
#include <numbers>
#include <vector>

namespace polarsep {

inline constexpr double kPsnrCapDb = 99.0;

namespace metrics_detail {

template <typename Scalar>
void check_same_shape(const RgbImageT<Scalar>& a, const RgbImageT<Scalar>& b) {
  if (a.width != b.width || a.height != b.height)
    throw DimensionError("images disagree in size");
  check_valid(a);
  check_valid(b);
}

template <typename Scalar>
Scalar psnr_from_mse(Scalar mse) {
  if (!(mse > Scalar(0))) return Scalar(kPsnrCapDb);
  return std::min(Scalar(10) * std::log10(Scalar(1) / mse), Scalar(kPsnrCapDb));
}

// Valid-window separable convolution of one raster channel with a
// symmetric kernel; output shrinks by taps-1 in each dimension.
template <typename Derived>
MatrixX<typename Derived::Scalar> filter_valid(
    const Eigen::MatrixBase<Derived>& plane,
    const VectorX<typename Derived::Scalar>& kernel) {
  using Scalar = typename Derived::Scalar;
  const Index taps = kernel.size();
  const Index h = plane.rows(), w = plane.cols();
  MatrixX<Scalar> horiz(h, w - taps + 1);
  for (Index y = 0; y < h; ++y)
    for (Index x = 0; x + taps <= w; ++x) {
      Scalar acc = 0;
      for (Index k = 0; k < taps; ++k) acc += kernel(k) * plane(y, x + k);
      horiz(y, x) = acc;
    }
  MatrixX<Scalar> out(h - taps + 1, w - taps + 1);
  for (Index y = 0; y + taps <= h; ++y)
    for (Index x = 0; x < horiz.cols(); ++x) {
      Scalar acc = 0;
      for (Index k = 0; k < taps; ++k) acc += kernel(k) * horiz(y + k, x);
      out(y, x) = acc;
    }
  return out;
}

// Raster column as a height x width plane. Samples are stored raster
// row-major, so mapping the column data column-major with swapped extents
// then transposing in-place would copy; instead map with (width, height)
// and index transposed. We simply map row-major semantics explicitly.
template <typename Scalar>
Eigen::Map<const MatrixX<Scalar>> channel_plane(const PixelMatrix<Scalar>& samples,
                                                int channel, Index width,
                                                Index height) {
  // Column-major map of (width x height) reads raster order transposed;
  // the filters are separable and symmetric, so filtering the transpose
  // and transposing back is equivalent to filtering directly. We exploit
  // that by treating the plane as width x height throughout.
  return Eigen::Map<const MatrixX<Scalar>>(samples.col(channel).data(), width,
                                           height);
}

template <typename Scalar>
Scalar rgb_to_hue(Scalar r, Scalar g, Scalar b) {
  const Scalar maxc = std::max({r, g, b});
  const Scalar minc = std::min({r, g, b});
  const Scalar delta = maxc - minc;
  if (delta <= Scalar(0)) return Scalar(0);
  Scalar h;
  if (maxc == r)
    h = (g - b) / delta;
  else if (maxc == g)
    h = Scalar(2) + (b - r) / delta;
  else
    h = Scalar(4) + (r - g) / delta;
  h /= Scalar(6);
  if (h < Scalar(0)) h += Scalar(1);
  return h;
}

}  // namespace metrics_detail

// Peak signal-to-noise ratio over all pixels and channels, peak 1.0,
// capped at 99 dB.
template <typename Scalar>
Scalar psnr(const RgbImageT<Scalar>& a, const RgbImageT<Scalar>& b) {
  metrics_detail::check_same_shape(a, b);
  const Scalar mse = (a.samples - b.samples).squaredNorm() /
                     (Scalar(3) * Scalar(a.pixels()));
  return metrics_detail::psnr_from_mse(mse);
}

// Single-scale SSIM, 11x11 Gaussian window with sigma 1.5, K1 = 0.01,
// K2 = 0.03, valid-window statistics, averaged over channels.
template <typename Scalar>
Scalar ssim(const RgbImageT<Scalar>& a, const RgbImageT<Scalar>& b) {
  metrics_detail::check_same_shape(a, b);
  constexpr Index kTaps = 11;
  if (a.width < kTaps || a.height < kTaps)
    throw DimensionError("image smaller than the 11x11 SSIM window");

  VectorX<Scalar> kernel(kTaps);
  const Scalar sigma = Scalar(1.5);
  for (Index i = 0; i < kTaps; ++i) {
    const Scalar d = Scalar(i) - Scalar(kTaps / 2);
    kernel(i) = std::exp(-d * d / (Scalar(2) * sigma * sigma));
  }
  kernel /= kernel.sum();

  const Scalar c1 = Scalar(0.01) * Scalar(0.01);
  const Scalar c2 = Scalar(0.03) * Scalar(0.03);

  Scalar total = 0;
  for (int ch = 0; ch < 3; ++ch) {
    const auto pa = metrics_detail::channel_plane(a.samples, ch, a.width, a.height);
    const auto pb = metrics_detail::channel_plane(b.samples, ch, b.width, b.height);
    using Mat = MatrixX<Scalar>;
    const Mat mu_a = metrics_detail::filter_valid(pa, kernel);
    const Mat mu_b = metrics_detail::filter_valid(pb, kernel);
    const Mat aa = pa.array().square().matrix();
    const Mat bb = pb.array().square().matrix();
    const Mat ab = (pa.array() * pb.array()).matrix();
    const Mat m_aa = metrics_detail::filter_valid(aa, kernel);
    const Mat m_bb = metrics_detail::filter_valid(bb, kernel);
    const Mat m_ab = metrics_detail::filter_valid(ab, kernel);

    const auto var_a = (m_aa.array() - mu_a.array().square());
    const auto var_b = (m_bb.array() - mu_b.array().square());
    const auto cov = (m_ab.array() - mu_a.array() * mu_b.array());

    const auto numer = (Scalar(2) * mu_a.array() * mu_b.array() + c1) *
                       (Scalar(2) * cov + c2);
    const auto denom = (mu_a.array().square() + mu_b.array().square() + c1) *
                       (var_a + var_b + c2);
    total += (numer / denom).mean();
  }
  return total / Scalar(3);
}

// Color accuracy: PSNR between the polarization chromaticity images of
// the two inputs, measuring color distortion independent of intensity.
template <typename Scalar>
Scalar color_accuracy(const RgbImageT<Scalar>& a, const RgbImageT<Scalar>& b) {
  metrics_detail::check_same_shape(a, b);
  const auto ca = chromaticity(a);
  const auto cb = chromaticity(b);
  const Scalar mse = (ca.samples - cb.samples).squaredNorm() /
                     (Scalar(3) * Scalar(a.pixels()));
  return metrics_detail::psnr_from_mse(mse);
}

// Circular standard deviation of the hue histogram, in hue units [0, 1]:
// sqrt(-2 ln Rbar) / (2 pi) with Rbar the mean resultant length. The
// default mask keeps pixels whose channel maximum exceeds 0.02.
template <typename Scalar>
Scalar hue_sd(const RgbImageT<Scalar>& img,
              const std::vector<Index>* mask = nullptr) {
  check_valid(img);
  constexpr Scalar two_pi = Scalar(2) * std::numbers::pi_v<Scalar>;
  Scalar sum_cos = 0, sum_sin = 0;
  Index count = 0;
  const auto accumulate = [&](Index p) {
    const Scalar hue = metrics_detail::rgb_to_hue(
        img.samples(p, 0), img.samples(p, 1), img.samples(p, 2));
    sum_cos += std::cos(two_pi * hue);
    sum_sin += std::sin(two_pi * hue);
    ++count;
  };
  if (mask != nullptr) {
    for (const Index p : *mask) accumulate(p);
  } else {
    for (Index p = 0; p < img.pixels(); ++p)
      if (img.samples.row(p).maxCoeff() > Scalar(0.02)) accumulate(p);
  }
  if (count == 0) throw SpecError("hue_sd mask selects no pixels");
  const Scalar rbar =
      std::hypot(sum_cos / Scalar(count), sum_sin / Scalar(count));
  if (rbar >= Scalar(1)) return Scalar(0);
  return std::sqrt(-Scalar(2) * std::log(std::max(rbar, Scalar(1e-12)))) / two_pi;
}

template <typename Scalar>
struct MetricsReportT {
  Scalar psnr_db = 0;
  Scalar ssim = 0;
  Scalar ca_db = 0;
  Scalar hue_sd = 0;
};

// All four Table-style metrics of a separation result against the
// ground-truth diffuse image.
template <typename Scalar>
MetricsReportT<Scalar> evaluate(const SeparationResultT<Scalar>& pred,
                                const RgbImageT<Scalar>& gt) {
  MetricsReportT<Scalar> report;
  report.psnr_db = psnr(pred.diffuse, gt);
  report.ssim = ssim(pred.diffuse, gt);
  report.ca_db = color_accuracy(pred.diffuse, gt);
  report.hue_sd = hue_sd(pred.diffuse);
  return report;
}

template <typename Scalar>
MetricsReportT<Scalar> evaluate_images(const RgbImageT<Scalar>& pred,
                                       const RgbImageT<Scalar>& gt) {
  MetricsReportT<Scalar> report;
  report.psnr_db = psnr(pred, gt);
  report.ssim = ssim(pred, gt);
  report.ca_db = color_accuracy(pred, gt);
  report.hue_sd = hue_sd(pred);
  return report;
}

}  // namespace polarsep
