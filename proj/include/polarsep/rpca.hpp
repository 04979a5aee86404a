#pragma once

#include "polarsep/cluster.hpp"
#include "polarsep/parallel.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <atomic>
#include <cmath>

namespace polarsep {

// Elementwise shrinkage, the proximal operator of kappa * |.|_1:
// sign(x) * max(|x| - kappa, 0).
template <typename Derived>
auto soft_threshold(const Eigen::MatrixBase<Derived>& m,
                    typename Derived::Scalar kappa) {
  using Scalar = typename Derived::Scalar;
  return ((m.array().abs() - kappa).max(Scalar(0)) * m.array().sign()).matrix();
}

namespace rpca_detail {

// Largest singular value through the Gram matrix of the thin dimension.
template <typename Scalar>
Scalar spectral_norm(const MatrixX<Scalar>& m) {
  if (m.rows() == 0 || m.cols() == 0) return Scalar(0);
  Eigen::SelfAdjointEigenSolver<MatrixX<Scalar>> eig;
  if (m.cols() <= m.rows())
    eig.compute(MatrixX<Scalar>(m.transpose() * m), Eigen::EigenvaluesOnly);
  else
    eig.compute(MatrixX<Scalar>(m * m.transpose()), Eigen::EigenvaluesOnly);
  return std::sqrt(std::max(eig.eigenvalues().maxCoeff(), Scalar(0)));
}

// Shrinks singular values via the Gram eigendecomposition: for M = U S V^T,
// svt(M) = M V diag(max(s - tau, 0) / s) V^T, which never forms U. Only
// valid when cols <= rows.
template <typename Scalar>
MatrixX<Scalar> svt_gram(const MatrixX<Scalar>& m, Scalar tau) {
  Eigen::SelfAdjointEigenSolver<MatrixX<Scalar>> eig(
      MatrixX<Scalar>(m.transpose() * m));
  const Index k = m.cols();
  VectorX<Scalar> ratio(k);
  const Scalar sigma_max =
      std::sqrt(std::max(eig.eigenvalues().maxCoeff(), Scalar(0)));
  const Scalar floor = std::max(sigma_max, Scalar(1)) *
                       std::numeric_limits<Scalar>::epsilon() * Scalar(16);
  for (Index i = 0; i < k; ++i) {
    const Scalar sigma = std::sqrt(std::max(eig.eigenvalues()(i), Scalar(0)));
    ratio(i) = sigma > floor ? std::max(sigma - tau, Scalar(0)) / sigma : Scalar(0);
  }
  return m * eig.eigenvectors() * ratio.asDiagonal() *
         eig.eigenvectors().transpose();
}

}  // namespace rpca_detail

// Singular value thresholding, the proximal operator of tau * ||.||_*.
// Tall-and-skinny inputs (the X x 3 cluster matrices) go through the small
// Gram eigendecomposition; everything else uses a full Jacobi SVD.
template <typename Scalar>
MatrixX<Scalar> svt(const MatrixX<Scalar>& m, Scalar tau) {
  if (tau < Scalar(0)) throw SpecError("svt threshold must be >= 0");
  if (!m.allFinite()) throw NumericError("svt input contains non-finite entries");
  if (m.rows() >= m.cols() && m.cols() <= 4) return rpca_detail::svt_gram(m, tau);
  if (m.cols() > m.rows() && m.rows() <= 4)
    return rpca_detail::svt_gram<Scalar>(m.transpose(), tau).transpose();

  Eigen::JacobiSVD<MatrixX<Scalar>> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  VectorX<Scalar> sv = svd.singularValues();
  for (Index i = 0; i < sv.size(); ++i) sv(i) = std::max(sv(i) - tau, Scalar(0));
  return svd.matrixU() * sv.asDiagonal() * svd.matrixV().transpose();
}

template <typename Scalar>
struct RpcaOptionsT {
  int max_iter = 100;
  Scalar tol = Scalar(1e-6);       // on ||C - D - S||_F / max(||C||_F, 1)
  Scalar dual_tol = Scalar(1e-5);  // on mu ||S_k - S_{k-1}||_F / max(||C||_F, 1)
  Scalar mu0 = Scalar(0);          // 0 = auto: 1.25 / sigma_max(C)
  Scalar mu_growth = Scalar(1.5);  // mu capped at mu0 * 1e7
};

template <typename Scalar>
struct RpcaResultT {
  PixelMatrix<Scalar> d;  // low-rank part, >= 0
  PixelMatrix<Scalar> s;  // sparse part
  int iterations = 0;
  bool converged = false;
};

// Low-rank + sparse split of a cluster matrix by inexact augmented
// Lagrange multipliers:
//
//   min ||D||_* + lambda ||S||_1   s.t.  C = D + S,  D >= 0
//
// with per-sweep updates
//   D <- max(svt(C - S + Y/mu, 1/mu), 0)
//   S <- shrink(C - D + Y/mu, lambda/mu)
//   Y <- Y + mu (C - D - S)
//
// following the reference schedule: mu grows by mu_growth (capped at
// mu0 * 1e7) only once the S iterate has stabilized at the current mu,
// and convergence requires the primal residual and the scaled S change
// to fall below tol and dual_tol together. Non-convergence is not an
// error: the caller receives the best iterate with converged = false
// and decides.
template <typename Scalar>
RpcaResultT<Scalar> rpca_separate(const PixelMatrix<Scalar>& c, Scalar lambda,
                                  const RpcaOptionsT<Scalar>& opts = {}) {
  if (c.rows() < 1) throw SpecError("cluster matrix must have at least one row");
  if (!c.allFinite())
    throw NumericError("cluster matrix contains non-finite entries");
  if (!(lambda > Scalar(0))) throw SpecError("rpca lambda must be > 0");

  const Scalar sigma_max = rpca_detail::spectral_norm<Scalar>(c);
  const Scalar mu0 = opts.mu0 > Scalar(0)
                         ? opts.mu0
                         : Scalar(1.25) / std::max(sigma_max, Scalar(1e-12));
  const Scalar mu_cap = mu0 * Scalar(1e7);
  const Scalar c_norm = std::max(c.norm(), Scalar(1));

  RpcaResultT<Scalar> res;
  res.d = PixelMatrix<Scalar>::Zero(c.rows(), 3);
  res.s = PixelMatrix<Scalar>::Zero(c.rows(), 3);
  PixelMatrix<Scalar> y = PixelMatrix<Scalar>::Zero(c.rows(), 3);
  PixelMatrix<Scalar> s_prev = res.s;

  Scalar mu = mu0;
  for (int k = 1; k <= opts.max_iter; ++k) {
    res.d = svt<Scalar>(c - res.s + y / mu, Scalar(1) / mu).cwiseMax(Scalar(0));
    s_prev.swap(res.s);
    res.s = soft_threshold(c - res.d + y / mu, lambda / mu);
    const PixelMatrix<Scalar> residual = c - res.d - res.s;
    y += mu * residual;
    res.iterations = k;

    const Scalar primal = residual.norm() / c_norm;
    const Scalar dual = mu * (res.s - s_prev).norm() / c_norm;
    if (primal <= opts.tol && dual <= opts.dual_tol) {
      res.converged = true;
      break;
    }
    if (dual < opts.dual_tol) mu = std::min(mu * opts.mu_growth, mu_cap);
  }
  return res;
}

template <typename Scalar>
Scalar default_rpca_lambda(Index rows) {
  return Scalar(1) / std::sqrt(Scalar(rows));
}

struct PgmStats {
  Index failed_clusters = 0;
};

template <typename Scalar>
struct PgmOptionsT {
  RpcaOptionsT<Scalar> rpca{};
  int threads = 0;  // 0 = all hardware threads
};

// The polarization guided model f(.): runs the low-rank/sparse split on
// every cluster of the image and reassembles the low-rank rows. Clusters
// write disjoint row sets, so they run in parallel and the result does
// not depend on scheduling. A cluster whose decomposition fails falls
// back to its input rows.
template <typename Scalar>
RgbImageT<Scalar> pgm_apply(const RgbImageT<Scalar>& image,
                            const ClusterSetT<Scalar>& clusters,
                            const PgmOptionsT<Scalar>& opts = {},
                            PgmStats* stats = nullptr) {
  Index covered = 0;
  for (const auto& c : clusters.clusters) covered += static_cast<Index>(c.size());
  if (covered != image.pixels())
    throw DimensionError("clusters do not partition the image's pixels");

  RgbImageT<Scalar> out;
  out.width = image.width;
  out.height = image.height;
  out.samples.resize(image.pixels(), 3);

  std::atomic<Index> failed{0};
  parallel_for(
      clusters.clusters.size(),
      [&](std::size_t k) {
        const auto& members = clusters.clusters[k];
        PixelMatrix<Scalar> c(static_cast<Index>(members.size()), 3);
        for (std::size_t i = 0; i < members.size(); ++i)
          c.row(static_cast<Index>(i)) = image.samples.row(members[i]);
        try {
          const auto res = rpca_separate<Scalar>(
              c, default_rpca_lambda<Scalar>(c.rows()), opts.rpca);
          for (std::size_t i = 0; i < members.size(); ++i)
            out.samples.row(members[i]) = res.d.row(static_cast<Index>(i));
        } catch (const NumericError&) {
          for (std::size_t i = 0; i < members.size(); ++i)
            out.samples.row(members[i]) = c.row(static_cast<Index>(i));
          failed.fetch_add(1, std::memory_order_relaxed);
        }
      },
      opts.threads);
  if (stats != nullptr) stats->failed_clusters = failed.load();
  return out;
}

}  // namespace polarsep
