#pragma once

#include "polarsep/chroma.hpp"

#include <algorithm>
#include <limits>
#include <vector>

namespace polarsep {

// Partition of all pixel indices into chromaticity clusters. Pixels in
// cluster k were collected within L-inf distance t of the seed's
// chromaticity (members absorbed from undersized clusters excepted).
template <typename Scalar>
struct ClusterSetT {
  std::vector<std::vector<Index>> clusters;
  std::vector<Rgb<Scalar>> seed_chroma;
  Scalar t = 0;
};

struct ClusterOptions {
  // Clusters smaller than this are folded into the nearest surviving
  // cluster; RPCA on a handful of rows is meaningless.
  Index min_cluster_size = 12;
};

// Greedy seeded clustering in raster order. PureDiffuse pixels seed first
// so cluster anchors carry uncontaminated chromaticity; every unassigned
// pixel within L-inf distance < t of the seed joins. Deterministic.
template <typename Scalar>
ClusterSetT<Scalar> build_clusters(const ChromaticityImageT<Scalar>& chro,
                                   const PixelClassMap& classmap, Scalar t,
                                   const ClusterOptions& opts = {}) {
  if (!(t > Scalar(0))) throw SpecError("chromatic threshold must be > 0");
  if (classmap.width != chro.width || classmap.height != chro.height)
    throw DimensionError("chromaticity image and class map disagree in size");

  const Index n = chro.pixels();
  ClusterSetT<Scalar> set;
  set.t = t;

  std::vector<Index> unassigned;
  unassigned.reserve(static_cast<std::size_t>(n));
  std::vector<char> taken(static_cast<std::size_t>(n), 0);

  const auto sweep = [&](bool pure_pass) {
    for (Index p = 0; p < n; ++p) {
      if (taken[static_cast<std::size_t>(p)]) continue;
      const bool pure =
          classmap.labels[static_cast<std::size_t>(p)] == PixelClass::PureDiffuse;
      if (pure != pure_pass) continue;

      const Rgb<Scalar> seed = chro.samples.row(p);
      std::vector<Index> members;
      for (Index q = 0; q < n; ++q) {
        if (taken[static_cast<std::size_t>(q)]) continue;
        if ((chro.samples.row(q) - seed).cwiseAbs().maxCoeff() < t) {
          members.push_back(q);
          taken[static_cast<std::size_t>(q)] = 1;
        }
      }
      set.seed_chroma.push_back(seed);
      set.clusters.push_back(std::move(members));
    }
  };
  sweep(true);
  sweep(false);

  // Fold undersized clusters into the nearest surviving seed. If nothing
  // survives the threshold, the partition stays as built.
  bool any_surviving = false;
  for (const auto& c : set.clusters)
    if (static_cast<Index>(c.size()) >= opts.min_cluster_size) any_surviving = true;
  if (any_surviving) {
    ClusterSetT<Scalar> merged;
    merged.t = t;
    std::vector<std::size_t> surviving_of;  // original index -> merged index
    for (std::size_t k = 0; k < set.clusters.size(); ++k) {
      if (static_cast<Index>(set.clusters[k].size()) >= opts.min_cluster_size) {
        surviving_of.push_back(merged.clusters.size());
        merged.clusters.push_back(std::move(set.clusters[k]));
        merged.seed_chroma.push_back(set.seed_chroma[k]);
      } else {
        surviving_of.push_back(static_cast<std::size_t>(-1));
      }
    }
    for (std::size_t k = 0; k < set.clusters.size(); ++k) {
      if (surviving_of[k] != static_cast<std::size_t>(-1)) continue;
      Scalar best = std::numeric_limits<Scalar>::max();
      std::size_t target = 0;
      for (std::size_t m = 0; m < merged.clusters.size(); ++m) {
        const Scalar d =
            (set.seed_chroma[k] - merged.seed_chroma[m]).cwiseAbs().maxCoeff();
        if (d < best) {
          best = d;
          target = m;
        }
      }
      auto& dst = merged.clusters[target];
      dst.insert(dst.end(), set.clusters[k].begin(), set.clusters[k].end());
    }
    for (auto& c : merged.clusters) std::sort(c.begin(), c.end());
    set = std::move(merged);
  }
  return set;
}

}  // namespace polarsep
