// covsep/spatial.hpp

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

#ifndef COVSEP_SPATIAL_HPP_
#define COVSEP_SPATIAL_HPP_

#include <string>
#include <vector>

#include "covsep/common.hpp"
#include "covsep/roomsim.hpp"
#include "covsep/stft.hpp"

namespace covsep {

// The four spatial covariance parameterizations. Rank-1 kinds factor as an
// outer product of a mixing vector; full-rank kinds model spatial spread.
enum class ModelKind {
  kRank1Anechoic,
  kRank1Convolutive,
  kFullRankDirectDiffuse,
  kFullRankUnconstrained,
};

inline bool IsRank1(ModelKind kind) {
  return kind == ModelKind::kRank1Anechoic ||
         kind == ModelKind::kRank1Convolutive;
}

inline std::string ModelKindName(ModelKind kind) {
  switch (kind) {
    case ModelKind::kRank1Anechoic: return "rank1_anechoic";
    case ModelKind::kRank1Convolutive: return "rank1_convolutive";
    case ModelKind::kFullRankDirectDiffuse: return "fullrank_direct_diffuse";
    case ModelKind::kFullRankUnconstrained: return "fullrank_unconstrained";
  }
  return "unknown";
}

inline ModelKind ModelKindFromName(const std::string& name) {
  if (name == "rank1_anechoic") return ModelKind::kRank1Anechoic;
  if (name == "rank1_convolutive") return ModelKind::kRank1Convolutive;
  if (name == "fullrank_direct_diffuse")
    return ModelKind::kFullRankDirectDiffuse;
  if (name == "fullrank_unconstrained")
    return ModelKind::kFullRankUnconstrained;
  throw ConfigError("model: unknown kind '" + name + "'");
}

// H[f] is I x J; column j is source j's mixing vector at bin f.
struct MixingVectorSet {
  std::vector<Eigen::MatrixXcd> H;

  int num_bins() const { return static_cast<int>(H.size()); }
  int num_channels() const {
    return H.empty() ? 0 : static_cast<int>(H[0].rows());
  }
  int num_sources() const {
    return H.empty() ? 0 : static_cast<int>(H[0].cols());
  }
};

// R[j][f] is the I x I spatial covariance of source j at bin f.
struct SpatialCovarianceSet {
  ModelKind kind = ModelKind::kFullRankUnconstrained;
  std::vector<std::vector<Eigen::MatrixXcd>> R;

  int num_sources() const { return static_cast<int>(R.size()); }
  int num_bins() const {
    return R.empty() ? 0 : static_cast<int>(R[0].size());
  }
  int num_channels() const {
    return num_bins() == 0 ? 0 : static_cast<int>(R[0][0].rows());
  }
};

// v[j] is F x N: the nonnegative local variance of source j per TF bin.
using VarianceMap = std::vector<Eigen::MatrixXd>;

// Per-pair propagation delay and distance attenuation of the direct path.
struct AnechoicParams {
  Eigen::MatrixXd delays;  // I x J, seconds
  Eigen::MatrixXd gains;   // I x J

  int num_channels() const { return static_cast<int>(delays.rows()); }
  int num_sources() const { return static_cast<int>(delays.cols()); }
};

inline AnechoicParams MakeAnechoicParams(const SceneSpec& scene,
                                         double sound_velocity) {
  const int I = static_cast<int>(scene.mic_positions.size());
  const int J = static_cast<int>(scene.source_positions.size());
  AnechoicParams params;
  params.delays.resize(I, J);
  params.gains.resize(I, J);
  for (int i = 0; i < I; ++i) {
    for (int j = 0; j < J; ++j) {
      double r = (scene.source_positions[j] - scene.mic_positions[i]).norm();
      if (r <= 0.0) throw DomainError("anechoic params: zero distance");
      params.delays(i, j) = r / sound_velocity;
      params.gains(i, j) = 1.0 / (std::sqrt(4.0 * kPi) * r);
    }
  }
  return params;
}

// Steering vector of source j at frequency f: entry i has magnitude kappa_ij
// and phase -2 pi f tau_ij.
inline Eigen::VectorXcd AnechoicSteering(const AnechoicParams& params, int j,
                                         double f) {
  const int I = params.num_channels();
  Eigen::VectorXcd a(I);
  for (int i = 0; i < I; ++i) {
    double phase = -2.0 * kPi * f * params.delays(i, j);
    a[i] = params.gains(i, j) * Complex(std::cos(phase), std::sin(phase));
  }
  return a;
}

inline Eigen::MatrixXcd Rank1Covariance(const Eigen::VectorXcd& h) {
  return h * h.adjoint();
}

inline Eigen::MatrixXcd DirectDiffuseCovariance(const Eigen::VectorXcd& a,
                                                double sigma2_rev,
                                                const Eigen::MatrixXd& psi) {
  return a * a.adjoint() + sigma2_rev * psi;
}

// Psi(f): pairwise diffuse-field coherence of the array, unit diagonal.
inline Eigen::MatrixXd DiffuseCoherenceMatrix(
    const std::vector<Eigen::Vector3d>& mic_positions, double f, double c) {
  const int I = static_cast<int>(mic_positions.size());
  Eigen::MatrixXd psi(I, I);
  for (int i = 0; i < I; ++i) {
    psi(i, i) = 1.0;
    for (int l = i + 1; l < I; ++l) {
      double d = (mic_positions[i] - mic_positions[l]).norm();
      psi(i, l) = psi(l, i) = DiffuseCoherence(d, f, c);
    }
  }
  return psi;
}

// R_x(n,f) = sum_j v_j(n,f) R_j(f).
inline Eigen::MatrixXcd MixtureCovariance(
    const Eigen::VectorXd& v,
    const std::vector<Eigen::MatrixXcd>& R_at_bin) {
  const int J = static_cast<int>(R_at_bin.size());
  if (v.size() != J)
    throw DimensionError("mixture covariance: v/R source counts differ");
  const int I = static_cast<int>(R_at_bin.empty() ? 0 : R_at_bin[0].rows());
  Eigen::MatrixXcd rx = Eigen::MatrixXcd::Zero(I, I);
  for (int j = 0; j < J; ++j) rx += v[j] * R_at_bin[j];
  return rx;
}

inline constexpr double kDefaultRidge = 1e-9;

// R + eps tr(R)/I I. Every inversion in the library goes through this; the
// absolute floor keeps all-zero matrices (silent bins) invertible too.
inline Eigen::MatrixXcd RidgeRegularize(const Eigen::MatrixXcd& r,
                                        double eps = kDefaultRidge) {
  const int I = static_cast<int>(r.rows());
  double scale = r.trace().real() / I;
  if (!(scale > 0.0)) scale = 1.0;
  return r + eps * scale * Eigen::MatrixXcd::Identity(I, I);
}

// Full-set covariance builders ------------------------------------------------

inline SpatialCovarianceSet BuildAnechoicCovarianceSet(
    const AnechoicParams& params, int num_bins, double sample_rate,
    int frame_size) {
  const int J = params.num_sources();
  SpatialCovarianceSet set;
  set.kind = ModelKind::kRank1Anechoic;
  set.R.assign(J, std::vector<Eigen::MatrixXcd>(num_bins));
  for (int j = 0; j < J; ++j)
    for (int f = 0; f < num_bins; ++f) {
      double freq = sample_rate * f / frame_size;
      set.R[j][f] = Rank1Covariance(AnechoicSteering(params, j, freq));
    }
  return set;
}

inline MixingVectorSet AnechoicMixingVectors(const AnechoicParams& params,
                                             int num_bins, double sample_rate,
                                             int frame_size) {
  const int I = params.num_channels(), J = params.num_sources();
  MixingVectorSet mv;
  mv.H.assign(num_bins, Eigen::MatrixXcd(I, J));
  for (int f = 0; f < num_bins; ++f) {
    double freq = sample_rate * f / frame_size;
    for (int j = 0; j < J; ++j) mv.H[f].col(j) = AnechoicSteering(params, j, freq);
  }
  return mv;
}

// Mixing vectors of the narrowband model: the filters' discrete-time Fourier
// transform sampled at the bin centers.
inline MixingVectorSet ConvolutiveMixingVectors(const ImpulseResponseSet& rirs,
                                                int num_bins, int frame_size) {
  const int J = rirs.num_sources();
  const int I = rirs.num_mics();
  const int L = rirs.num_taps();
  MixingVectorSet mv;
  mv.H.assign(num_bins, Eigen::MatrixXcd::Zero(I, J));
  ParallelFor(0, num_bins, [&](int f) {
    const double omega = -2.0 * kPi * f / frame_size;
    Eigen::VectorXcd twiddle(L);
    for (int t = 0; t < L; ++t)
      twiddle[t] = Complex(std::cos(omega * t), std::sin(omega * t));
    for (int j = 0; j < J; ++j)
      for (int i = 0; i < I; ++i)
        mv.H[f](i, j) =
            (rirs.filters[j].col(i).array().cast<Complex>() * twiddle.array())
                .sum();
  });
  return mv;
}

inline SpatialCovarianceSet BuildConvolutiveCovarianceSet(
    const ImpulseResponseSet& rirs, int num_bins, int frame_size) {
  MixingVectorSet mv = ConvolutiveMixingVectors(rirs, num_bins, frame_size);
  const int J = mv.num_sources();
  SpatialCovarianceSet set;
  set.kind = ModelKind::kRank1Convolutive;
  set.R.assign(J, std::vector<Eigen::MatrixXcd>(num_bins));
  for (int j = 0; j < J; ++j)
    for (int f = 0; f < num_bins; ++f)
      set.R[j][f] = Rank1Covariance(mv.H[f].col(j));
  return set;
}

inline SpatialCovarianceSet BuildDirectDiffuseCovarianceSet(
    const RoomSpec& room, const SceneSpec& scene, int num_bins,
    double sample_rate, int frame_size) {
  scene.Validate(room);
  const AnechoicParams params =
      MakeAnechoicParams(scene, room.sound_velocity);
  const double sigma2 = ReverberantPower(room);
  const int J = params.num_sources();
  SpatialCovarianceSet set;
  set.kind = ModelKind::kFullRankDirectDiffuse;
  set.R.assign(J, std::vector<Eigen::MatrixXcd>(num_bins));
  for (int f = 0; f < num_bins; ++f) {
    double freq = sample_rate * f / frame_size;
    Eigen::MatrixXd psi =
        DiffuseCoherenceMatrix(scene.mic_positions, freq, room.sound_velocity);
    for (int j = 0; j < J; ++j)
      set.R[j][f] = DirectDiffuseCovariance(AnechoicSteering(params, j, freq),
                                            sigma2, psi);
  }
  return set;
}

inline SpatialCovarianceSet CovarianceSetFromMixingVectors(
    const MixingVectorSet& mv, ModelKind kind) {
  if (!IsRank1(kind))
    throw ConfigError("covariance from mixing vectors: rank-1 kinds only");
  SpatialCovarianceSet set;
  set.kind = kind;
  const int J = mv.num_sources();
  set.R.assign(J, std::vector<Eigen::MatrixXcd>(mv.num_bins()));
  for (int j = 0; j < J; ++j)
    for (int f = 0; f < mv.num_bins(); ++f)
      set.R[j][f] = Rank1Covariance(mv.H[f].col(j));
  return set;
}

// Likelihood -------------------------------------------------------------------

// Observed-data log-likelihood sum_{n,f} [-log det(pi R_x) - x^H R_x^{-1} x].
// Bins are reduced in fixed order so the result is reproducible.
inline double LogLikelihood(const TfTensor& x, const VarianceMap& v,
                            const SpatialCovarianceSet& R,
                            double ridge = kDefaultRidge) {
  const int F = x.num_bins(), I = x.num_channels(), N = x.num_frames();
  const int J = R.num_sources();
  if (static_cast<int>(v.size()) != J)
    throw DimensionError("log likelihood: v/R source counts differ");
  if (R.num_bins() != F)
    throw DimensionError("log likelihood: bin counts differ");

  std::vector<double> per_bin(F, 0.0);
  ParallelFor(0, F, [&](int f) {
    Eigen::MatrixXcd rx(I, I);
    Eigen::VectorXd vslice(J);
    double acc = 0.0;
    for (int n = 0; n < N; ++n) {
      rx.setZero();
      for (int j = 0; j < J; ++j) rx += v[j](f, n) * R.R[j][f];
      rx = RidgeRegularize(rx, ridge);
      Eigen::LLT<Eigen::MatrixXcd> llt(rx);
      if (llt.info() != Eigen::Success)
        throw NumericalError("log likelihood: mixture covariance not PD at bin " +
                             std::to_string(f));
      double logdet = 0.0;
      for (int i = 0; i < I; ++i)
        logdet += 2.0 * std::log(llt.matrixLLT()(i, i).real());
      Complex quad = x.bins[f].col(n).dot(llt.solve(x.bins[f].col(n)));
      acc += -I * std::log(kPi) - logdet - quad.real();
    }
    per_bin[f] = acc;
  });
  double total = 0.0;
  for (int f = 0; f < F; ++f) total += per_bin[f];
  return total;
}

// Canonical scale: R_j(f) scaled to trace I, v_j(:,f) compensated so that
// v_j R_j -- and with it the likelihood -- is unchanged.
inline void NormalizeTraceScale(SpatialCovarianceSet* R, VarianceMap* v) {
  const int J = R->num_sources(), F = R->num_bins();
  const int I = R->num_channels();
  for (int j = 0; j < J; ++j) {
    for (int f = 0; f < F; ++f) {
      double tr = R->R[j][f].trace().real();
      if (!(tr > 0.0)) continue;
      double scale = tr / I;
      R->R[j][f] /= scale;
      if (v != nullptr) v->at(j).row(f) *= scale;
    }
  }
}

// Type-invariant check used by tests and accepted as a debugging aid:
// Hermitian within 1e-12, PSD within -1e-10 trace, near rank 1 for rank-1
// kinds. Returns an explanation or empty string.
inline std::string CheckCovarianceInvariants(const SpatialCovarianceSet& set) {
  for (int j = 0; j < set.num_sources(); ++j) {
    for (int f = 0; f < set.num_bins(); ++f) {
      const Eigen::MatrixXcd& r = set.R[j][f];
      double norm = r.norm();
      if (norm == 0.0) continue;
      if ((r - r.adjoint()).norm() > 1e-12 * norm)
        return "not Hermitian at (j=" + std::to_string(j) +
               ", f=" + std::to_string(f) + ")";
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(Hermitize(r));
      double tr = r.trace().real();
      if (eig.eigenvalues().minCoeff() < -1e-10 * tr)
        return "not PSD at (j=" + std::to_string(j) +
               ", f=" + std::to_string(f) + ")";
      if (IsRank1(set.kind)) {
        const auto& ev = eig.eigenvalues();
        double second = ev.size() >= 2 ? ev[ev.size() - 2] : 0.0;
        if (second > 1e-10 * ev[ev.size() - 1])
          return "not rank-1 at (j=" + std::to_string(j) +
                 ", f=" + std::to_string(f) + ")";
      }
    }
  }
  return "";
}

}  // namespace covsep

#endif  // COVSEP_SPATIAL_HPP_
