// covsep/clustering.hpp

// Copyright 2026  covsep contributors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABILITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#ifndef COVSEP_CLUSTERING_HPP_
#define COVSEP_CLUSTERING_HPP_

#include <algorithm>
#include <limits>
#include <numeric>
#include <vector>

#include "covsep/common.hpp"
#include "covsep/spatial.hpp"
#include "covsep/stft.hpp"

namespace covsep {

enum class InitMethod {
  kHierarchical,  // agglomerative clustering of normalized frames
  kRandom,        // reference baseline only: random directions
  kDoa,           // reference baseline only: steering vectors from geometry
};

struct InitConfig {
  int cluster_threshold = 30;  // merge until this many clusters remain
  int num_sources = 2;
  InitMethod method = InitMethod::kHierarchical;
  std::uint64_t seed = 0;                  // random method only
  const AnechoicParams* geometry = nullptr;  // doa method only

  void Validate() const {
    if (num_sources < 1) throw ConfigError("init.num_sources: must be >= 1");
    if (cluster_threshold < num_sources)
      throw ConfigError("init.cluster_threshold: must be >= num_sources");
  }
};

struct InitResult {
  MixingVectorSet h_init;
  SpatialCovarianceSet R_init;
  // Per (f, j): member count of the cluster the init came from; 0 for bins
  // filled in from a neighbor.
  std::vector<std::vector<int>> cluster_sizes;
  std::vector<std::uint8_t> fallback_bins;  // 1 where a neighbor was copied
};

// Scale-and-phase normalization: unit norm, first entry real nonnegative.
// Invariant under x -> lambda x for any complex lambda != 0.
inline Eigen::VectorXcd NormalizeTf(const Eigen::VectorXcd& x) {
  double norm = x.norm();
  if (norm <= 0.0) throw DomainError("normalize: zero vector");
  Complex rot = std::polar(1.0, -std::arg(x[0]));
  return (x / norm) * rot;
}

// Phase-only normalization: first entry rotated real nonnegative, amplitude
// kept. Centroids average these, so louder frames weigh more.
inline Eigen::VectorXcd PhaseNormalizeTf(const Eigen::VectorXcd& x) {
  return x * std::polar(1.0, -std::arg(x[0]));
}

// Mean cross-pair Euclidean distance between two clusters of unit vectors;
// reference implementation of the linkage criterion (tests compare the
// incremental version against this).
inline double ClusterDistance(const std::vector<Eigen::VectorXcd>& c1,
                              const std::vector<Eigen::VectorXcd>& c2) {
  if (c1.empty() || c2.empty())
    throw DomainError("cluster distance: empty cluster");
  double sum = 0.0;
  for (const auto& u : c1)
    for (const auto& v : c2) sum += (u - v).norm();
  return sum / (static_cast<double>(c1.size()) * c2.size());
}

namespace clustering_detail {

// Average-linkage agglomeration via the Lance-Williams update, which keeps
// cluster distances equal to the mean pairwise member distance throughout.
// Returns member-index lists of the surviving clusters, in slot order.
inline std::vector<std::vector<int>> AgglomerateAverageLinkage(
    const std::vector<Eigen::VectorXcd>& points, int target_clusters) {
  const int m = static_cast<int>(points.size());
  std::vector<std::vector<int>> members(m);
  for (int i = 0; i < m; ++i) members[i] = {i};
  if (m <= target_clusters) return members;

  Eigen::MatrixXd dist(m, m);
  for (int i = 0; i < m; ++i) {
    dist(i, i) = 0.0;
    for (int j = i + 1; j < m; ++j)
      dist(i, j) = dist(j, i) = (points[i] - points[j]).norm();
  }
  std::vector<char> alive(m, 1);

  for (int remaining = m; remaining > target_clusters; --remaining) {
    // Closest alive pair; scanning order makes ties resolve to the
    // lexicographically smallest (i, j).
    int bi = -1, bj = -1;
    double best = std::numeric_limits<double>::infinity();
    for (int i = 0; i < m; ++i) {
      if (!alive[i]) continue;
      for (int j = i + 1; j < m; ++j) {
        if (!alive[j]) continue;
        if (dist(i, j) < best) {
          best = dist(i, j);
          bi = i;
          bj = j;
        }
      }
    }
    const double wi = static_cast<double>(members[bi].size());
    const double wj = static_cast<double>(members[bj].size());
    for (int k = 0; k < m; ++k) {
      if (!alive[k] || k == bi || k == bj) continue;
      double d = (wi * dist(bi, k) + wj * dist(bj, k)) / (wi + wj);
      dist(bi, k) = dist(k, bi) = d;
    }
    members[bi].insert(members[bi].end(), members[bj].begin(),
                       members[bj].end());
    members[bj].clear();
    alive[bj] = 0;
  }

  std::vector<std::vector<int>> out;
  for (int i = 0; i < m; ++i)
    if (alive[i]) out.push_back(std::move(members[i]));
  return out;
}

}  // namespace clustering_detail

// Clusters the nonsilent frames of one frequency bin and returns the J
// largest clusters as member-index lists (indices into the frame axis).
// Ties on size break toward the earlier cluster.
inline std::vector<std::vector<int>> HierarchicalClusterBin(
    const Eigen::MatrixXcd& x_bin, const InitConfig& cfg) {
  cfg.Validate();
  const int n = static_cast<int>(x_bin.cols());

  double max_norm = 0.0;
  for (int t = 0; t < n; ++t)
    max_norm = std::max(max_norm, x_bin.col(t).norm());
  std::vector<int> usable;
  for (int t = 0; t < n; ++t)
    if (x_bin.col(t).norm() > 1e-12 * max_norm) usable.push_back(t);
  if (static_cast<int>(usable.size()) < cfg.num_sources)
    throw NumericalError("clustering: fewer usable frames than sources");

  std::vector<Eigen::VectorXcd> normalized;
  normalized.reserve(usable.size());
  for (int t : usable) normalized.push_back(NormalizeTf(x_bin.col(t)));

  auto clusters = clustering_detail::AgglomerateAverageLinkage(
      normalized, cfg.cluster_threshold);

  std::vector<int> order(clusters.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return clusters[a].size() > clusters[b].size();
  });

  std::vector<std::vector<int>> out;
  for (int k = 0; k < cfg.num_sources && k < static_cast<int>(order.size());
       ++k) {
    std::vector<int> frames;
    for (int idx : clusters[order[k]]) frames.push_back(usable[idx]);
    std::sort(frames.begin(), frames.end());
    out.push_back(std::move(frames));
  }
  if (static_cast<int>(out.size()) < cfg.num_sources)
    throw NumericalError("clustering: produced fewer clusters than sources");
  return out;
}

// Cluster centroids over phase-normalized frames: the initial mixing vector
// is the mean coefficient vector, the initial covariance the mean outer
// product.
inline void InitParamsForBin(const Eigen::MatrixXcd& x_bin,
                             const std::vector<std::vector<int>>& clusters,
                             Eigen::MatrixXcd* h_out,
                             std::vector<Eigen::MatrixXcd>* R_out) {
  const int I = static_cast<int>(x_bin.rows());
  const int J = static_cast<int>(clusters.size());
  h_out->resize(I, J);
  R_out->assign(J, Eigen::MatrixXcd::Zero(I, I));
  for (int j = 0; j < J; ++j) {
    if (clusters[j].empty())
      throw DomainError("init params: empty cluster");
    Eigen::VectorXcd h = Eigen::VectorXcd::Zero(I);
    Eigen::MatrixXcd r = Eigen::MatrixXcd::Zero(I, I);
    for (int t : clusters[j]) {
      Eigen::VectorXcd xt = PhaseNormalizeTf(x_bin.col(t));
      h += xt;
      r += xt * xt.adjoint();
    }
    const double inv = 1.0 / static_cast<double>(clusters[j].size());
    h_out->col(j) = h * inv;
    (*R_out)[j] = Hermitize(r * inv);
  }
}

// Full initialization over all bins. Bins where clustering fails (too few
// usable frames) copy the nearest successful bin's parameters.
inline InitResult InitializeClusters(const TfTensor& x, const InitConfig& cfg) {
  cfg.Validate();
  const int F = x.num_bins();
  const int I = x.num_channels();
  const int J = cfg.num_sources;

  InitResult result;
  result.h_init.H.assign(F, Eigen::MatrixXcd::Zero(I, J));
  result.R_init.kind = ModelKind::kFullRankUnconstrained;
  result.R_init.R.assign(J, std::vector<Eigen::MatrixXcd>(
                                F, Eigen::MatrixXcd::Zero(I, I)));
  result.cluster_sizes.assign(F, std::vector<int>(J, 0));
  result.fallback_bins.assign(F, 0);

  if (cfg.method == InitMethod::kRandom) {
    Rng rng(cfg.seed);
    for (int f = 0; f < F; ++f)
      for (int j = 0; j < J; ++j) {
        Eigen::VectorXcd h(I);
        for (int i = 0; i < I; ++i) h[i] = rng.ComplexGaussian();
        result.h_init.H[f].col(j) = h;
        result.R_init.R[j][f] = Rank1Covariance(h);
      }
    return result;
  }
  if (cfg.method == InitMethod::kDoa) {
    if (cfg.geometry == nullptr)
      throw ConfigError("init.geometry: required for the doa method");
    for (int f = 0; f < F; ++f) {
      double freq = x.bin_frequency(f);
      for (int j = 0; j < J; ++j) {
        Eigen::VectorXcd a = AnechoicSteering(*cfg.geometry, j, freq);
        result.h_init.H[f].col(j) = a;
        result.R_init.R[j][f] = Rank1Covariance(a);
      }
    }
    return result;
  }

  ParallelFor(0, F, [&](int f) {
    try {
      auto clusters = HierarchicalClusterBin(x.bins[f], cfg);
      Eigen::MatrixXcd h;
      std::vector<Eigen::MatrixXcd> r;
      InitParamsForBin(x.bins[f], clusters, &h, &r);
      result.h_init.H[f] = h;
      for (int j = 0; j < J; ++j) {
        result.R_init.R[j][f] = r[j];
        result.cluster_sizes[f][j] = static_cast<int>(clusters[j].size());
      }
    } catch (const Error&) {
      result.fallback_bins[f] = 1;
    }
  });

  std::vector<int> good;
  for (int f = 0; f < F; ++f)
    if (!result.fallback_bins[f]) good.push_back(f);
  if (good.empty())
    throw NumericalError("clustering: initialization failed at every bin");
  for (int f = 0; f < F; ++f) {
    if (!result.fallback_bins[f]) continue;
    int nearest = good[0];
    for (int g : good)
      if (std::abs(g - f) < std::abs(nearest - f)) nearest = g;
    result.h_init.H[f] = result.h_init.H[nearest];
    for (int j = 0; j < J; ++j)
      result.R_init.R[j][f] = result.R_init.R[j][nearest];
  }
  return result;
}

}  // namespace covsep

#endif  // COVSEP_CLUSTERING_HPP_
