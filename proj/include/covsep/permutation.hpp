// covsep/permutation.hpp

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

// Source-order alignment across frequency bins.  Each bin's per-source
// direction vectors are summarized by an inter-channel delay feature;
// k-means over the features (trained below the spatial aliasing frequency)
// yields centroids, and every bin picks the source-to-centroid assignment of
// least cost.

#ifndef COVSEP_PERMUTATION_HPP_
#define COVSEP_PERMUTATION_HPP_

#include <algorithm>
#include <array>
#include <numeric>
#include <sstream>
#include <vector>

#include "covsep/common.hpp"
#include "covsep/spatial.hpp"

namespace covsep {

struct ArrayGeometry {
  std::vector<std::array<double, 3>> mic_positions;
  double sound_velocity = 334.0;

  // Largest inter-microphone distance: the first spacing to alias.
  double spacing() const {
    if (mic_positions.size() < 2)
      throw DimensionError("geometry: need at least two microphones");
    double d = 0.0;
    for (size_t a = 0; a < mic_positions.size(); ++a)
      for (size_t b = a + 1; b < mic_positions.size(); ++b) {
        double s = 0.0;
        for (int k = 0; k < 3; ++k) {
          double diff = mic_positions[a][k] - mic_positions[b][k];
          s += diff * diff;
        }
        d = std::max(d, std::sqrt(s));
      }
    if (d <= 0.0) throw DomainError("geometry: coincident microphones");
    return d;
  }
  double alias_frequency() const { return sound_velocity / (2.0 * spacing()); }
};

// perm[f][k]: the incoming source index that belongs in slot k at bin f.
struct PermutationMap {
  std::vector<std::vector<int>> perm;
  int num_bins() const { return static_cast<int>(perm.size()); }
};

struct AlignmentResult {
  PermutationMap map;
  bool converged = true;
  int rounds = 0;
  Eigen::MatrixXd centroids;  // (I-1) x J delay centroids, seconds
};

// Unit-norm principal eigenvector with the first sizable entry rotated real
// nonnegative.  A top-eigenvalue tie leaves the direction undefined; those
// bins get a fixed basis vector and an ambiguity flag.
inline Eigen::VectorXcd PrincipalDirection(const Eigen::MatrixXcd& R,
                                           bool* ambiguous = nullptr) {
  const int I = static_cast<int>(R.rows());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(Hermitize(R));
  if (eig.info() != Eigen::Success)
    throw NumericalError("principal direction: eigensolver failed");
  double top = eig.eigenvalues()[I - 1];
  double second = I > 1 ? eig.eigenvalues()[I - 2] : 0.0;
  if (top <= 0.0 || top - second <= 1e-12 * std::abs(top)) {
    if (ambiguous != nullptr) *ambiguous = true;
    int k = 0;
    double best = std::real(R(0, 0));
    for (int i = 1; i < I; ++i)
      if (std::real(R(i, i)) > best) {
        best = std::real(R(i, i));
        k = i;
      }
    return Eigen::VectorXcd::Unit(I, k);
  }
  if (ambiguous != nullptr) *ambiguous = false;
  Eigen::VectorXcd w = eig.eigenvectors().col(I - 1);
  w.normalize();
  for (int i = 0; i < I; ++i)
    if (std::abs(w[i]) > 1e-12) {
      w *= std::polar(1.0, -std::arg(w[i]));
      break;
    }
  return w;
}

// Inter-channel delay estimates in seconds: arg(w_i / w_1) / (2 pi f) for
// i = 2..I.  With the first entry already real nonnegative this is just
// arg(w_i).
inline Eigen::VectorXd DelayFeature(const Eigen::VectorXcd& w, double freq) {
  if (freq <= 0.0) throw DomainError("delay feature: frequency must be > 0");
  const int I = static_cast<int>(w.size());
  Eigen::VectorXd tau(I - 1);
  for (int i = 1; i < I; ++i)
    tau[i - 1] = std::arg(w[i] / w[0]) / (2.0 * kPi * freq);
  return tau;
}

namespace permutation_detail {

// Least-cost assignment of J sources to J centroids.  Exhaustive for J <= 6,
// greedy beyond.
inline std::vector<int> BestAssignment(const Eigen::MatrixXd& cost) {
  const int J = static_cast<int>(cost.rows());
  std::vector<int> best(J);
  if (J <= 6) {
    std::vector<int> perm(J);
    std::iota(perm.begin(), perm.end(), 0);
    double best_cost = std::numeric_limits<double>::infinity();
    do {
      double c = 0.0;
      for (int k = 0; k < J; ++k) c += cost(perm[k], k);
      if (c < best_cost) {
        best_cost = c;
        best = perm;
      }
    } while (std::next_permutation(perm.begin(), perm.end()));
    return best;
  }
  std::vector<char> src_used(J, 0), slot_used(J, 0);
  for (int round = 0; round < J; ++round) {
    int bi = -1, bk = -1;
    double bc = std::numeric_limits<double>::infinity();
    for (int i = 0; i < J; ++i) {
      if (src_used[i]) continue;
      for (int k = 0; k < J; ++k) {
        if (slot_used[k]) continue;
        if (cost(i, k) < bc) {
          bc = cost(i, k);
          bi = i;
          bk = k;
        }
      }
    }
    best[bk] = bi;
    src_used[bi] = 1;
    slot_used[bk] = 1;
  }
  return best;
}

}  // namespace permutation_detail

// vectors[f]: I x J normalized direction vectors (columns).  frequencies[f]
// in Hz.  Centroids are trained on bins strictly between 0 and the aliasing
// frequency, then every bin is assigned.
inline AlignmentResult AlignPermutations(
    const std::vector<Eigen::MatrixXcd>& vectors,
    const std::vector<double>& frequencies, const ArrayGeometry& geom,
    int max_rounds = 50) {
  const int F = static_cast<int>(vectors.size());
  if (static_cast<int>(frequencies.size()) != F)
    throw DimensionError("alignment: frequency count mismatch");
  if (F == 0) throw DimensionError("alignment: no bins");
  const int I = static_cast<int>(vectors[0].rows());
  const int J = static_cast<int>(vectors[0].cols());

  AlignmentResult result;
  result.map.perm.assign(F, std::vector<int>(J));
  for (int f = 0; f < F; ++f)
    std::iota(result.map.perm[f].begin(), result.map.perm[f].end(), 0);
  if (J == 1) {
    result.centroids = Eigen::MatrixXd::Zero(I - 1, 1);
    return result;
  }

  const double f_alias = geom.alias_frequency();
  std::vector<int> train;
  std::vector<std::vector<Eigen::VectorXd>> feats(F);
  for (int f = 0; f < F; ++f) {
    if (frequencies[f] <= 0.0) continue;
    feats[f].resize(J);
    for (int j = 0; j < J; ++j)
      feats[f][j] = DelayFeature(vectors[f].col(j), frequencies[f]);
    if (frequencies[f] < f_alias) train.push_back(f);
  }
  if (train.empty()) {
    result.converged = false;
    return result;
  }

  // Deterministic start: per-dimension quantiles of the pooled training
  // features at ranks (j + 0.5)/J.
  Eigen::MatrixXd centroids(I - 1, J);
  for (int d = 0; d < I - 1; ++d) {
    std::vector<double> pool;
    for (int f : train)
      for (int j = 0; j < J; ++j) pool.push_back(feats[f][j][d]);
    std::sort(pool.begin(), pool.end());
    for (int j = 0; j < J; ++j) {
      size_t idx = static_cast<size_t>((j + 0.5) / J * pool.size());
      idx = std::min(idx, pool.size() - 1);
      centroids(d, j) = pool[idx];
    }
  }

  std::vector<std::vector<int>> assign(F, std::vector<int>(J, -1));
  bool stable = false;
  int round = 0;
  for (; round < max_rounds && !stable; ++round) {
    stable = true;
    for (int f : train) {
      Eigen::MatrixXd cost(J, J);
      for (int i = 0; i < J; ++i)
        for (int k = 0; k < J; ++k)
          cost(i, k) = (feats[f][i] - centroids.col(k)).squaredNorm();
      std::vector<int> a = permutation_detail::BestAssignment(cost);
      if (a != assign[f]) {
        stable = false;
        assign[f] = a;
      }
    }
    Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(I - 1, J);
    for (int f : train)
      for (int k = 0; k < J; ++k) acc.col(k) += feats[f][assign[f][k]];
    centroids = acc / static_cast<double>(train.size());
  }

  result.rounds = round;
  if (!stable) {
    // Non-convergence: keep identity everywhere rather than a half-settled
    // ordering.
    result.converged = false;
    result.centroids = centroids;
    for (int f = 0; f < F; ++f)
      std::iota(result.map.perm[f].begin(), result.map.perm[f].end(), 0);
    return result;
  }

  // The clustering labels its centroids arbitrarily; reorder them so the
  // majority of training bins keep their incoming source order.  Already
  // aligned input then maps to the identity at every bin.
  // cost(c, k) = -#bins whose cluster c held source k.
  Eigen::MatrixXd agreement = Eigen::MatrixXd::Zero(J, J);
  for (int f : train)
    for (int c = 0; c < J; ++c) agreement(c, assign[f][c]) -= 1.0;
  std::vector<int> cluster_for_slot =
      permutation_detail::BestAssignment(agreement);
  Eigen::MatrixXd reordered(I - 1, J);
  for (int k = 0; k < J; ++k)
    reordered.col(k) = centroids.col(cluster_for_slot[k]);
  result.centroids = reordered;

  for (int f = 0; f < F; ++f) {
    if (frequencies[f] <= 0.0) continue;  // delay unobservable; keep identity
    Eigen::MatrixXd cost(J, J);
    for (int i = 0; i < J; ++i)
      for (int k = 0; k < J; ++k)
        cost(i, k) = (feats[f][i] - result.centroids.col(k)).squaredNorm();
    result.map.perm[f] = permutation_detail::BestAssignment(cost);
  }
  return result;
}

// Convenience: principal directions of a covariance set, plus per-(j,f)
// ambiguity flags.
inline std::vector<Eigen::MatrixXcd> PrincipalDirections(
    const SpatialCovarianceSet& R,
    std::vector<std::vector<std::uint8_t>>* ambiguous = nullptr) {
  const int J = R.num_sources();
  const int F = R.num_bins();
  const int I = static_cast<int>(R.R[0][0].rows());
  std::vector<Eigen::MatrixXcd> out(F, Eigen::MatrixXcd::Zero(I, J));
  if (ambiguous != nullptr)
    ambiguous->assign(J, std::vector<std::uint8_t>(F, 0));
  for (int f = 0; f < F; ++f)
    for (int j = 0; j < J; ++j) {
      bool amb = false;
      out[f].col(j) = PrincipalDirection(R.R[j][f], &amb);
      if (ambiguous != nullptr) (*ambiguous)[j][f] = amb ? 1 : 0;
    }
  return out;
}

inline void ApplyPermutation(const PermutationMap& map, VarianceMap* v) {
  const int J = static_cast<int>(v->size());
  const int F = map.num_bins();
  for (int f = 0; f < F; ++f) {
    std::vector<Eigen::VectorXd> rows(J);
    for (int j = 0; j < J; ++j) rows[j] = (*v)[map.perm[f][j]].row(f);
    for (int j = 0; j < J; ++j) (*v)[j].row(f) = rows[j];
  }
}

inline void ApplyPermutation(const PermutationMap& map,
                             SpatialCovarianceSet* R) {
  const int J = R->num_sources();
  const int F = map.num_bins();
  for (int f = 0; f < F; ++f) {
    std::vector<Eigen::MatrixXcd> slots(J);
    for (int j = 0; j < J; ++j) slots[j] = R->R[map.perm[f][j]][f];
    for (int j = 0; j < J; ++j) R->R[j][f] = slots[j];
  }
}

inline void ApplyPermutation(const PermutationMap& map, MixingVectorSet* h) {
  const int F = map.num_bins();
  for (int f = 0; f < F; ++f) {
    const int J = static_cast<int>(h->H[f].cols());
    Eigen::MatrixXcd reordered(h->H[f].rows(), J);
    for (int j = 0; j < J; ++j)
      reordered.col(j) = h->H[f].col(map.perm[f][j]);
    h->H[f] = reordered;
  }
}

// Diagnostic dump of the per-bin normalized delay argument:
// arg(w_2) / (2 pi f) * c / d, dimensionless and monotone in the direction
// of arrival.  One line per (bin, source): "freq_hz source value".
inline std::string DumpDelayDiagnostics(
    const std::vector<Eigen::MatrixXcd>& vectors,
    const std::vector<double>& frequencies, const ArrayGeometry& geom) {
  std::ostringstream os;
  os.precision(12);
  const double scale = geom.sound_velocity / geom.spacing();
  os << "freq_hz\tsource\tnormalized_argument\n";
  for (size_t f = 0; f < vectors.size(); ++f) {
    if (frequencies[f] <= 0.0) continue;
    for (int j = 0; j < vectors[f].cols(); ++j) {
      double val = std::arg(vectors[f](1, j) / vectors[f](0, j)) /
                   (2.0 * kPi * frequencies[f]) * scale;
      os << frequencies[f] << '\t' << j << '\t' << val << '\n';
    }
  }
  return os.str();
}

}  // namespace covsep

#endif  // COVSEP_PERMUTATION_HPP_
