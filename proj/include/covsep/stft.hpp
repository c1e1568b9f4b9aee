// covsep/stft.hpp

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

#ifndef COVSEP_STFT_HPP_
#define COVSEP_STFT_HPP_

#include <vector>

#include <unsupported/Eigen/FFT>

#include "covsep/common.hpp"
#include "covsep/wav.hpp"

namespace covsep {

// Analysis/synthesis framing. The sine window with 50% overlap satisfies
// w^2[t] + w^2[t + shift] = 1 exactly, which is what makes the plain
// overlap-add inverse below an identity on the fully-overlapped interior.
struct StftConfig {
  int frame_size = 2048;
  int frame_shift = 1024;

  void Validate() const {
    if (frame_size <= 0 || frame_shift <= 0)
      throw ConfigError("stft.frame_size/frame_shift: must be positive");
    if (frame_shift * 2 != frame_size)
      throw ConfigError(
          "stft.frame_shift: must equal frame_size/2 "
          "(sine-window perfect reconstruction)");
  }

  int num_bins() const { return frame_size / 2 + 1; }
};

// Complex STFT coefficients. bins[f] is an I x N matrix: column n holds the
// I-channel observation vector at (frame n, bin f) - the unit every
// covariance operation in this library consumes.
struct TfTensor {
  std::vector<Eigen::MatrixXcd> bins;
  int frame_size = 0;
  int frame_shift = 0;
  double sample_rate = 0.0;

  int num_bins() const { return static_cast<int>(bins.size()); }
  int num_channels() const {
    return bins.empty() ? 0 : static_cast<int>(bins[0].rows());
  }
  int num_frames() const {
    return bins.empty() ? 0 : static_cast<int>(bins[0].cols());
  }

  // Frequency in Hz of bin f.
  double bin_frequency(int f) const {
    return sample_rate * static_cast<double>(f) /
           static_cast<double>(frame_size);
  }
};

inline Eigen::VectorXd SineWindow(int length) {
  Eigen::VectorXd w(length);
  for (int t = 0; t < length; ++t)
    w[t] = std::sin(kPi * (t + 0.5) / length);
  return w;
}

inline int NumStftFrames(Eigen::Index num_samples, const StftConfig& cfg) {
  if (num_samples < cfg.frame_size)
    throw DimensionError("signal shorter than one STFT frame");
  return static_cast<int>((num_samples - cfg.frame_size) / cfg.frame_shift) +
         1;
}

inline TfTensor Stft(const AudioBuffer& audio, const StftConfig& cfg) {
  cfg.Validate();
  const int L = cfg.frame_size, S = cfg.frame_shift;
  const int I = static_cast<int>(audio.num_channels());
  const int N = NumStftFrames(audio.num_samples(), cfg);
  const int F = cfg.num_bins();
  const Eigen::VectorXd window = SineWindow(L);

  TfTensor tf;
  tf.frame_size = L;
  tf.frame_shift = S;
  tf.sample_rate = audio.sample_rate;
  tf.bins.assign(F, Eigen::MatrixXcd::Zero(I, N));

  for (int i = 0; i < I; ++i) {
    Eigen::FFT<double> fft;
    fft.SetFlag(Eigen::FFT<double>::HalfSpectrum);
    std::vector<double> frame(L);
    std::vector<Complex> spectrum;
    for (int n = 0; n < N; ++n) {
      const Eigen::Index t0 = static_cast<Eigen::Index>(n) * S;
      for (int t = 0; t < L; ++t)
        frame[t] = audio.samples(t0 + t, i) * window[t];
      fft.fwd(spectrum, frame);
      for (int f = 0; f < F; ++f) tf.bins[f](i, n) = spectrum[f];
    }
  }
  return tf;
}

// Overlap-add inverse. Output length is (N-1)*shift + frame_size; the first
// and last (frame_size - shift) samples lack full window overlap and are not
// covered by the reconstruction contract.
inline AudioBuffer Istft(const TfTensor& tf, const StftConfig& cfg) {
  cfg.Validate();
  const int L = cfg.frame_size, S = cfg.frame_shift;
  const int F = cfg.num_bins();
  if (tf.num_bins() != F)
    throw DimensionError("istft: tensor bin count does not match config");
  const int I = tf.num_channels();
  const int N = tf.num_frames();
  if (I == 0 || N == 0) throw DimensionError("istft: empty tensor");
  const Eigen::VectorXd window = SineWindow(L);

  AudioBuffer out;
  out.sample_rate = tf.sample_rate;
  out.samples = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(N - 1) * S + L,
                                      I);

  for (int i = 0; i < I; ++i) {
    Eigen::FFT<double> fft;
    fft.SetFlag(Eigen::FFT<double>::HalfSpectrum);
    std::vector<Complex> spectrum(F);
    std::vector<double> frame(L);
    for (int n = 0; n < N; ++n) {
      for (int f = 0; f < F; ++f) spectrum[f] = tf.bins[f](i, n);
      fft.inv(frame, spectrum, L);
      const Eigen::Index t0 = static_cast<Eigen::Index>(n) * S;
      for (int t = 0; t < L; ++t)
        out.samples(t0 + t, i) += frame[t] * window[t];
    }
  }
  return out;
}

}  // namespace covsep

#endif  // COVSEP_STFT_HPP_
