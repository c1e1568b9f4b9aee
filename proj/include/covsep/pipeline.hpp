// covsep/pipeline.hpp

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

// End-to-end separation: STFT -> clustering init -> EM -> permutation
// alignment -> Wiener reconstruction -> inverse STFT.
//
// Blind estimation is available for the two kinds whose covariance update
// has a closed form (rank-1 convolutive, full-rank unconstrained). The
// constrained kinds (rank-1 anechoic, full-rank direct+diffuse) enter
// through the semi-blind path, where the spatial covariances come from
// geometry or a prior recording and only the variances are fit.

#ifndef COVSEP_PIPELINE_HPP_
#define COVSEP_PIPELINE_HPP_

#include <cstdint>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "covsep/clustering.hpp"
#include "covsep/common.hpp"
#include "covsep/em.hpp"
#include "covsep/permutation.hpp"
#include "covsep/spatial.hpp"
#include "covsep/stft.hpp"
#include "covsep/wav.hpp"
#include "covsep/wiener.hpp"

namespace covsep {

struct PipelineConfig {
  ModelKind model = ModelKind::kFullRankUnconstrained;
  int num_sources = 2;
  // Channels the mixture is expected to carry; 0 accepts any.
  int num_channels = 2;
  double sample_rate = 16000.0;
  StftConfig stft;       // 2048 / 1024, sine window
  InitConfig init;       // merge down to 30 clusters
  EmConfig em;           // 10 iterations
  // Microphone coordinates enable permutation alignment (needs >= 2 mics).
  ArrayGeometry geometry;
  std::uint64_t seed = 0;

  void Validate() const {
    stft.Validate();
    em.Validate();
    if (num_sources < 1)
      throw ConfigError("pipeline.num_sources: must be >= 1");
    if (num_channels < 0)
      throw ConfigError("pipeline.num_channels: must be >= 0");
    if (!(sample_rate > 0.0))
      throw ConfigError("pipeline.sample_rate: must be positive");
    if (!(geometry.sound_velocity > 0.0))
      throw ConfigError("pipeline.geometry.sound_velocity: must be positive");
  }
};

struct SeparationResult {
  std::vector<AudioBuffer> images;  // per source, mixture length
  std::vector<TfTensor> tf_images;
  VarianceMap v;
  SpatialCovarianceSet R;    // full-rank kinds (and semi-blind runs)
  MixingVectorSet H;         // rank-1 blind runs
  std::vector<Eigen::VectorXd> noise;  // rank-1 blind runs, per-bin
  std::vector<double> loglik;
  AlignmentResult alignment;
  bool aligned = false;
  std::vector<std::uint8_t> fallback_bins;
};

namespace pipeline_detail {

inline void CheckChannels(const AudioBuffer& mixture,
                          const PipelineConfig& cfg) {
  if (cfg.num_channels > 0 && mixture.num_channels() != cfg.num_channels)
    throw DimensionError("pipeline: mixture channel count differs from config");
}

// Unit-norm column directions for alignment features; a silent column keeps
// a basis vector so downstream stays finite.
inline std::vector<Eigen::MatrixXcd> ColumnDirections(
    const MixingVectorSet& h) {
  std::vector<Eigen::MatrixXcd> out(h.H.size());
  for (std::size_t f = 0; f < h.H.size(); ++f) {
    out[f] = h.H[f];
    for (Eigen::Index j = 0; j < out[f].cols(); ++j) {
      const double n = out[f].col(j).norm();
      if (n > 0.0)
        out[f].col(j) /= n;
      else
        out[f].col(j) = Eigen::VectorXcd::Unit(out[f].rows(), 0);
    }
  }
  return out;
}

inline std::vector<double> BinFrequencies(const TfTensor& x) {
  std::vector<double> freqs(static_cast<std::size_t>(x.num_bins()));
  for (int f = 0; f < x.num_bins(); ++f)
    freqs[static_cast<std::size_t>(f)] = x.bin_frequency(f);
  return freqs;
}

// Inverse STFT of every image, zero-padded to the mixture length so
// estimates line up sample-for-sample with references.
inline std::vector<AudioBuffer> ImagesAtMixtureLength(
    const std::vector<TfTensor>& tf_images, const AudioBuffer& mixture) {
  std::vector<AudioBuffer> images = ImagesToAudio(tf_images);
  for (auto& img : images) {
    img.sample_rate = mixture.sample_rate;
    const Eigen::Index T = mixture.num_samples();
    const Eigen::Index got = img.num_samples();
    if (got < T) {
      img.samples.conservativeResize(T, Eigen::NoChange);
      img.samples.bottomRows(T - got).setZero();
    } else if (got > T) {
      img.samples.conservativeResize(T, Eigen::NoChange);
    }
  }
  return images;
}

}  // namespace pipeline_detail

// Fully blind separation. Permutation alignment runs when the model kind
// needs it, more than one source is estimated, and microphone geometry is
// available.
inline SeparationResult SeparateBlind(const AudioBuffer& mixture,
                                      const PipelineConfig& cfg) {
  cfg.Validate();
  pipeline_detail::CheckChannels(mixture, cfg);
  if (cfg.model == ModelKind::kRank1Anechoic ||
      cfg.model == ModelKind::kFullRankDirectDiffuse)
    throw ConfigError(
        "pipeline.model: no blind covariance update for this kind; "
        "use the semi-blind path");

  const TfTensor x = Stft(mixture, cfg.stft);
  InitConfig init = cfg.init;
  init.num_sources = cfg.num_sources;
  init.seed = cfg.seed;
  const InitResult start = InitializeClusters(x, init);

  SeparationResult out;
  out.fallback_bins = start.fallback_bins;
  const bool want_alignment =
      cfg.num_sources > 1 && cfg.geometry.mic_positions.size() >= 2;

  if (cfg.model == ModelKind::kRank1Convolutive) {
    Rank1RunResult em = EmRank1Run(x, start.h_init, cfg.em);
    out.loglik = std::move(em.loglik);
    out.H = std::move(em.H);
    out.noise = std::move(em.noise);
    out.v = std::move(em.v);
    if (want_alignment) {
      out.alignment = AlignPermutations(
          pipeline_detail::ColumnDirections(out.H),
          pipeline_detail::BinFrequencies(x), cfg.geometry);
      ApplyPermutation(out.alignment.map, &out.H);
      ApplyPermutation(out.alignment.map, &out.v);
      out.aligned = true;
    }
    out.tf_images = Rank1Separate(x, out.v, out.H, out.noise, cfg.em.ridge,
                                  cfg.em.num_threads);
  } else {
    FullRankRunResult em = EmFullRankRun(x, start.R_init, cfg.em);
    out.loglik = std::move(em.loglik);
    out.R = std::move(em.R);
    out.v = std::move(em.v);
    if (want_alignment) {
      out.alignment =
          AlignPermutations(PrincipalDirections(out.R),
                            pipeline_detail::BinFrequencies(x), cfg.geometry);
      ApplyPermutation(out.alignment.map, &out.R);
      ApplyPermutation(out.alignment.map, &out.v);
      out.aligned = true;
    }
    out.tf_images =
        WienerSeparate(x, out.v, out.R, cfg.em.ridge, cfg.em.num_threads);
  }

  out.images = pipeline_detail::ImagesAtMixtureLength(out.tf_images, mixture);
  return out;
}

// Semi-blind separation: spatial covariances fixed (any kind), variances
// fit by EM, reconstruction by the full-rank Wiener filter. No clustering
// or permutation stage — the covariance order pins the sources.
inline SeparationResult SeparateSemiblind(const AudioBuffer& mixture,
                                          const SpatialCovarianceSet& R,
                                          const PipelineConfig& cfg) {
  cfg.Validate();
  pipeline_detail::CheckChannels(mixture, cfg);
  const TfTensor x = Stft(mixture, cfg.stft);
  if (R.num_bins() != x.num_bins())
    throw DimensionError("pipeline: covariance bin count mismatch");

  FullRankRunResult em = SemiblindVariances(x, R, cfg.em);
  SeparationResult out;
  out.loglik = std::move(em.loglik);
  out.R = std::move(em.R);
  out.v = std::move(em.v);
  out.tf_images =
      WienerSeparate(x, out.v, out.R, cfg.em.ridge, cfg.em.num_threads);
  out.images = pipeline_detail::ImagesAtMixtureLength(out.tf_images, mixture);
  return out;
}

}  // namespace covsep

#endif  // COVSEP_PIPELINE_HPP_
