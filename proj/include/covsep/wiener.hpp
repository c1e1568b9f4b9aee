// covsep/wiener.hpp

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

// MMSE source-image reconstruction by multichannel Wiener filtering.

#ifndef COVSEP_WIENER_HPP_
#define COVSEP_WIENER_HPP_

#include <vector>

#include "covsep/common.hpp"
#include "covsep/em.hpp"
#include "covsep/spatial.hpp"
#include "covsep/stft.hpp"
#include "covsep/wav.hpp"

namespace covsep {

namespace wiener_detail {

inline TfTensor LikeMixture(const TfTensor& x) {
  TfTensor t;
  t.frame_size = x.frame_size;
  t.frame_shift = x.frame_shift;
  t.sample_rate = x.sample_rate;
  t.bins.assign(x.num_bins(),
                Eigen::MatrixXcd::Zero(x.num_channels(), x.num_frames()));
  return t;
}

}  // namespace wiener_detail

// Full-rank model: image_j(n,f) = W_j x with W_j = v_j R_j R_x^{-1}.  The
// ridge mass is split across sources so the gains partition the identity and
// the images sum to the mixture exactly.
inline std::vector<TfTensor> WienerSeparate(const TfTensor& x,
                                            const VarianceMap& v,
                                            const SpatialCovarianceSet& R,
                                            double ridge = kDefaultRidge,
                                            int num_threads = 0) {
  const int F = x.num_bins();
  const int I = x.num_channels();
  const int N = x.num_frames();
  const int J = R.num_sources();
  if (R.num_bins() != F || static_cast<int>(v.size()) != J)
    throw DimensionError("wiener: parameter dimensions mismatch");
  for (int j = 0; j < J; ++j)
    if (v[j].rows() != F || v[j].cols() != N)
      throw DimensionError("wiener: variance map dimensions mismatch");

  std::vector<TfTensor> images(J, wiener_detail::LikeMixture(x));
  const Eigen::MatrixXcd eye = Eigen::MatrixXcd::Identity(I, I);
  ParallelFor(
      0, F,
      [&](int f) {
        for (int n = 0; n < N; ++n) {
          Eigen::MatrixXcd rx = Eigen::MatrixXcd::Zero(I, I);
          for (int j = 0; j < J; ++j) rx += v[j](f, n) * R.R[j][f];
          rx = Hermitize(rx);
          double scale = std::real(rx.trace()) / I;
          if (scale <= 0.0) scale = 1.0;
          const double eps = ridge * scale;
          Eigen::MatrixXcd rx_inv = (rx + eps * eye).llt().solve(eye);
          Eigen::VectorXcd xn = x.bins[f].col(n);
          for (int j = 0; j < J; ++j) {
            Eigen::MatrixXcd w =
                (v[j](f, n) * R.R[j][f] + (eps / J) * eye) * rx_inv;
            images[j].bins[f].col(n) = w * xn;
          }
        }
      },
      num_threads);
  return images;
}

// Rank-1 noisy model: point estimates s_hat = R_s H^H R_x^{-1} x, images
// h_j s_hat_j.  The residual noise estimate is discarded, so the images sum
// to x only in the vanishing-noise limit.
inline std::vector<TfTensor> Rank1Separate(
    const TfTensor& x, const VarianceMap& v, const MixingVectorSet& h,
    const std::vector<Eigen::VectorXd>& noise, double ridge = kDefaultRidge,
    int num_threads = 0) {
  const int F = x.num_bins();
  const int I = x.num_channels();
  const int N = x.num_frames();
  const int J = h.num_sources();
  if (static_cast<int>(h.H.size()) != F ||
      static_cast<int>(noise.size()) != F ||
      static_cast<int>(v.size()) != J)
    throw DimensionError("wiener: parameter dimensions mismatch");

  std::vector<TfTensor> images(J, wiener_detail::LikeMixture(x));
  ParallelFor(
      0, F,
      [&](int f) {
        em_detail::Rank1BinState s;
        s.H = h.H[f];
        s.rb = noise[f];
        s.ridge = ridge;
        s.v.resize(J, 1);
        for (int n = 0; n < N; ++n) {
          for (int j = 0; j < J; ++j) s.v(j, 0) = v[j](f, n);
          Eigen::LLT<Eigen::MatrixXcd> llt = em_detail::CholeskyWithRetry(
              em_detail::Rank1MixtureCov(s, 0), ridge,
              "wiener: mixture covariance not positive");
          Eigen::VectorXcd shat =
              s.v.col(0).asDiagonal() *
              (s.H.adjoint() * llt.solve(x.bins[f].col(n)));
          for (int j = 0; j < J; ++j)
            images[j].bins[f].col(n) = s.H.col(j) * shat[j];
        }
      },
      num_threads);
  return images;
}

// TF images to time domain, one multichannel signal per source.
inline std::vector<AudioBuffer> ImagesToAudio(
    const std::vector<TfTensor>& images) {
  std::vector<AudioBuffer> out;
  out.reserve(images.size());
  for (const auto& img : images) {
    StftConfig cfg;
    cfg.frame_size = img.frame_size;
    cfg.frame_shift = img.frame_shift;
    out.push_back(Istft(img, cfg));
  }
  return out;
}

}  // namespace covsep

#endif  // COVSEP_WIENER_HPP_
