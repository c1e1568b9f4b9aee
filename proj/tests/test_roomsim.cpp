// tests/test_roomsim.cpp

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

#include "covsep/roomsim.hpp"

#include <catch2/catch_amalgamated.hpp>

#include "covsep/common.hpp"

namespace {

using covsep::AudioBuffer;
using covsep::DiffuseCoherence;
using covsep::EyringBeta;
using covsep::ImpulseResponseSet;
using covsep::kPi;
using covsep::Mix;
using covsep::ReverberantPower;
using covsep::Rng;
using covsep::RoomSpec;
using covsep::SceneSpec;
using covsep::SimulateRir;

TEST_CASE("eyring beta limits and direct evaluation", "[roomsim]") {
  RoomSpec room;
  room.dims = {5.0, 5.0, 5.0};
  room.sound_velocity = 334.0;

  room.t60 = 0.0;
  REQUIRE(EyringBeta(room) == 0.0);

  room.t60 = 1e9;
  REQUIRE(EyringBeta(room) > 0.999999);
  REQUIRE(EyringBeta(room) < 1.0);

  room.t60 = 0.25;
  const double expected = std::exp(-13.82 / (0.6 * 334.0 * 0.25));
  REQUIRE(EyringBeta(room) == Catch::Approx(expected).epsilon(1e-12));
}

TEST_CASE("reverberant power formula and monotonicity", "[roomsim]") {
  RoomSpec room;
  room.t60 = 0.0;
  REQUIRE(ReverberantPower(room) == 0.0);

  // Strictly increasing in t60 (hence in beta) for a fixed room.
  double prev = 0.0;
  for (double t60 : {0.05, 0.13, 0.25, 0.5}) {
    room.t60 = t60;
    double p = ReverberantPower(room);
    REQUIRE(p > prev);
    prev = p;
  }

  room.dims = {5.0, 5.0, 5.0};
  room.t60 = 0.25;
  const double beta = EyringBeta(room);
  const double area = room.WallArea();
  REQUIRE(ReverberantPower(room) ==
          Catch::Approx(4.0 * beta * beta / (area * (1.0 - beta * beta)))
              .epsilon(1e-12));
}

TEST_CASE("diffuse coherence special points", "[roomsim]") {
  REQUIRE(DiffuseCoherence(0.0, 1000.0, 334.0) == 1.0);
  REQUIRE(DiffuseCoherence(0.05, 0.0, 334.0) == 1.0);

  const double d = 0.05, c = 334.0;
  REQUIRE(std::abs(DiffuseCoherence(d, c / (2.0 * d), c)) < 1e-12);

  const double z = 2.0 * kPi * 1000.0 * d / c;
  REQUIRE(DiffuseCoherence(d, 1000.0, c) ==
          Catch::Approx(std::sin(z) / z).epsilon(1e-12));
}

TEST_CASE("anechoic rir is a single pulse with 1/r gain", "[roomsim]") {
  RoomSpec room;
  room.t60 = 0.0;
  SceneSpec scene;
  scene.source_positions = {{2.0, 2.0, 1.5}};
  scene.mic_positions = {{3.0, 2.0, 1.5}, {4.0, 2.0, 1.5}};
  const double fs = 16000.0;

  ImpulseResponseSet rirs = SimulateRir(room, scene, fs);
  REQUIRE(rirs.num_sources() == 1);
  REQUIRE(rirs.num_mics() == 2);

  for (int i = 0; i < 2; ++i) {
    const double r = (scene.source_positions[0] - scene.mic_positions[i]).norm();
    const double gain = 1.0 / (std::sqrt(4.0 * kPi) * r);
    Eigen::Index peak;
    rirs.filters[0].col(i).cwiseAbs().maxCoeff(&peak);
    REQUIRE(std::abs(static_cast<double>(peak) - r / 334.0 * fs) <= 1.0);
    // Pulse energy equals squared gain within 1% (windowed-sinc kernel).
    REQUIRE(rirs.filters[0].col(i).squaredNorm() ==
            Catch::Approx(gain * gain).epsilon(0.01));
  }
  // Doubling the distance halves the direct gain (pulse RMS, which unlike
  // the peak tap is insensitive to the sub-sample delay fraction).
  REQUIRE(rirs.filters[0].col(0).norm() / rirs.filters[0].col(1).norm() ==
          Catch::Approx(2.0).epsilon(0.02));
}

TEST_CASE("fractional delays conserve pulse energy within 1%", "[roomsim]") {
  RoomSpec room;
  room.t60 = 0.0;
  const double fs = 16000.0;
  // The 1 m base distance delays by 47.904 samples; the offsets below move
  // the sub-sample fraction through 0, 1/4, 1/2 (kernel worst case), 3/4.
  for (double extra : {0.096, 0.346, 0.596, 0.846}) {
    const double r = 1.0 + extra * 334.0 / fs;
    SceneSpec scene;
    scene.source_positions = {{2.0, 2.0, 1.5}};
    scene.mic_positions = {{2.0 + r, 2.0, 1.5}};
    ImpulseResponseSet rirs = SimulateRir(room, scene, fs);
    const double gain = 1.0 / (std::sqrt(4.0 * kPi) * r);
    REQUIRE(rirs.filters[0].col(0).squaredNorm() ==
            Catch::Approx(gain * gain).epsilon(0.01));
  }
}

TEST_CASE("schroeder decay of a simulated rir matches its t60", "[roomsim]") {
  RoomSpec room;
  room.t60 = 0.25;
  SceneSpec scene;
  scene.source_positions = {{1.5, 2.2, 1.7}};
  scene.mic_positions = {{3.4, 1.8, 1.4}};
  const double fs = 16000.0;

  ImpulseResponseSet rirs = SimulateRir(room, scene, fs);
  const Eigen::VectorXd h = rirs.filters[0].col(0);

  // Backward-integrated energy decay curve.
  const Eigen::Index L = h.size();
  Eigen::VectorXd edc(L);
  double acc = 0.0;
  for (Eigen::Index t = L - 1; t >= 0; --t) {
    acc += h[t] * h[t];
    edc[t] = acc;
  }
  const double total = edc[0];
  Eigen::Index t60_sample = -1;
  for (Eigen::Index t = 0; t < L; ++t) {
    if (edc[t] / total <= 1e-6) {  // -60 dB
      t60_sample = t;
      break;
    }
  }
  REQUIRE(t60_sample > 0);
  const double t60_est = static_cast<double>(t60_sample) / fs;
  REQUIRE(t60_est > 0.25 * 0.8);
  REQUIRE(t60_est < 0.25 * 1.2);
}

TEST_CASE("geometry outside the room is rejected", "[roomsim]") {
  RoomSpec room;
  SceneSpec scene;
  scene.source_positions = {{6.0, 2.0, 1.5}};  // x beyond 5 m
  scene.mic_positions = {{2.0, 2.0, 1.5}};
  REQUIRE_THROWS_AS(SimulateRir(room, scene, 16000.0), covsep::DomainError);
}

TEST_CASE("mix with identity filter copies the source", "[roomsim]") {
  ImpulseResponseSet rirs;
  rirs.sample_rate = 16000.0;
  Eigen::MatrixXd f = Eigen::MatrixXd::Zero(8, 2);
  f(0, 1) = 1.0;  // unit tap on channel 2
  rirs.filters = {f};

  AudioBuffer src;
  src.sample_rate = 16000.0;
  src.samples.resize(500, 1);
  Rng rng(21);
  for (int t = 0; t < 500; ++t) src.samples(t, 0) = rng.Gaussian();

  auto [mixture, images] = Mix({src}, rirs);
  REQUIRE(images.size() == 1);
  REQUIRE((images[0].samples.col(1) - src.samples.col(0)).cwiseAbs().maxCoeff() <
          1e-12);
  REQUIRE(images[0].samples.col(0).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("mixture equals the sum of images exactly", "[roomsim]") {
  RoomSpec room;
  room.t60 = 0.13;
  SceneSpec scene;
  scene.source_positions = {{1.7, 2.8, 1.6}, {3.4, 1.2, 1.5}};
  scene.mic_positions = {{2.4, 1.9, 1.4}, {2.45, 1.9, 1.4}};
  ImpulseResponseSet rirs = SimulateRir(room, scene, 16000.0);

  std::vector<AudioBuffer> sources;
  for (int j = 0; j < 2; ++j)
    sources.push_back(covsep::AmNoiseSource(16000, 16000.0, 100 + j));

  auto [mixture, images] = Mix(sources, rirs);
  Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(16000, 2);
  for (const auto& im : images) sum += im.samples;
  REQUIRE((mixture.samples - sum).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("unit impulse source reproduces the rir", "[roomsim]") {
  RoomSpec room;
  room.t60 = 0.05;
  SceneSpec scene;
  scene.source_positions = {{1.7, 2.8, 1.6}};
  scene.mic_positions = {{2.4, 1.9, 1.4}};
  ImpulseResponseSet rirs = SimulateRir(room, scene, 16000.0);

  AudioBuffer impulse;
  impulse.sample_rate = 16000.0;
  impulse.samples = Eigen::MatrixXd::Zero(4000, 1);
  impulse.samples(0, 0) = 1.0;

  auto [mixture, images] = Mix({impulse}, rirs);
  const Eigen::Index L = std::min<Eigen::Index>(4000, rirs.num_taps());
  REQUIRE((images[0].samples.col(0).head(L) - rirs.filters[0].col(0).head(L))
              .cwiseAbs()
              .maxCoeff() < 1e-12);
}

TEST_CASE("am noise source is deterministic and band-limited", "[roomsim]") {
  AudioBuffer a = covsep::AmNoiseSource(16000, 16000.0, 7);
  AudioBuffer b = covsep::AmNoiseSource(16000, 16000.0, 7);
  REQUIRE((a.samples - b.samples).cwiseAbs().maxCoeff() == 0.0);
  AudioBuffer c = covsep::AmNoiseSource(16000, 16000.0, 8);
  REQUIRE((a.samples - c.samples).cwiseAbs().maxCoeff() > 0.0);
  REQUIRE(a.samples.cwiseAbs().maxCoeff() <= 0.2 + 1e-12);
}

TEST_CASE("late reverberation matches the diffuse coherence model",
          "[roomsim][statistics]") {
  RoomSpec room;
  room.t60 = 0.25;
  const double fs = 16000.0, c = room.sound_velocity, d = 0.05;
  const int positions = 20;

  // Ensemble cross-spectral statistics of the tail (> 50 ms) over many
  // source positions, against the ideal sinc coherence.
  const Eigen::Index tail_start = static_cast<Eigen::Index>(0.05 * fs);
  const int nfft = 8192;
  std::vector<covsep::Complex> cross(nfft / 2 + 1, 0.0);
  std::vector<double> p1(nfft / 2 + 1, 0.0), p2(nfft / 2 + 1, 0.0);

  Rng rng(42);
  for (int p = 0; p < positions; ++p) {
    SceneSpec scene;
    Eigen::Vector3d src(0.5 + 4.0 * rng.Uniform(), 0.5 + 3.0 * rng.Uniform(),
                        0.5 + 2.0 * rng.Uniform());
    scene.source_positions = {src};
    scene.mic_positions = {{2.4, 1.9, 1.4}, {2.4 + d, 1.9, 1.4}};
    ImpulseResponseSet rirs = SimulateRir(room, scene, fs);

    Eigen::FFT<double> fft;
    fft.SetFlag(Eigen::FFT<double>::HalfSpectrum);
    std::vector<double> t1(nfft, 0.0), t2(nfft, 0.0);
    const Eigen::Index L = rirs.num_taps();
    for (Eigen::Index t = tail_start; t < L && t - tail_start < nfft; ++t) {
      t1[t - tail_start] = rirs.filters[0](t, 0);
      t2[t - tail_start] = rirs.filters[0](t, 1);
    }
    std::vector<covsep::Complex> s1, s2;
    fft.fwd(s1, t1);
    fft.fwd(s2, t2);
    for (std::size_t k = 0; k < s1.size(); ++k) {
      cross[k] += s1[k] * std::conj(s2[k]);
      p1[k] += std::norm(s1[k]);
      p2[k] += std::norm(s2[k]);
    }
  }

  // Band-average up to 2 kHz and compare with the model.
  const double df = fs / nfft;
  const int band = 52;  // ~100 Hz blocks
  double rms = 0.0;
  int count = 0;
  for (int k0 = band; (k0 + band) * df < 2000.0; k0 += band) {
    covsep::Complex cs = 0.0;
    double a1 = 0.0, a2 = 0.0;
    for (int k = k0; k < k0 + band; ++k) {
      cs += cross[k];
      a1 += p1[k];
      a2 += p2[k];
    }
    double coh = cs.real() / std::sqrt(a1 * a2);
    double f_mid = (k0 + band / 2.0) * df;
    double err = coh - DiffuseCoherence(d, f_mid, c);
    rms += err * err;
    ++count;
  }
  rms = std::sqrt(rms / count);
  REQUIRE(rms < 0.15);
}

}  // namespace
