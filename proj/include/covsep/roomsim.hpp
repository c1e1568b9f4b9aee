// covsep/roomsim.hpp

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

#ifndef COVSEP_ROOMSIM_HPP_
#define COVSEP_ROOMSIM_HPP_

#include <algorithm>
#include <vector>

#include <unsupported/Eigen/FFT>

#include "covsep/common.hpp"
#include "covsep/wav.hpp"

namespace covsep {

// Shoebox room with a uniform wall reflection coefficient derived from T60.
struct RoomSpec {
  Eigen::Vector3d dims{5.0, 4.0, 3.0};
  double t60 = 0.25;
  double sound_velocity = 334.0;

  double WallArea() const {
    return 2.0 * (dims.x() * dims.y() + dims.y() * dims.z() +
                  dims.x() * dims.z());
  }

  void Validate() const {
    if (!(dims.minCoeff() > 0.0))
      throw ConfigError("room.dims: all dimensions must be positive");
    if (t60 < 0.0) throw ConfigError("room.t60: must be nonnegative");
    if (sound_velocity <= 0.0)
      throw ConfigError("room.sound_velocity: must be positive");
  }
};

struct SceneSpec {
  std::vector<Eigen::Vector3d> source_positions;
  std::vector<Eigen::Vector3d> mic_positions;

  void Validate(const RoomSpec& room) const {
    room.Validate();
    if (source_positions.empty() || mic_positions.empty())
      throw ConfigError("scene: needs at least one source and one mic");
    auto inside = [&room](const Eigen::Vector3d& p) {
      return p.x() > 0.0 && p.x() < room.dims.x() && p.y() > 0.0 &&
             p.y() < room.dims.y() && p.z() > 0.0 && p.z() < room.dims.z();
    };
    for (const auto& p : source_positions)
      if (!inside(p)) throw DomainError("scene: source outside the room");
    for (const auto& p : mic_positions)
      if (!inside(p)) throw DomainError("scene: microphone outside the room");
    for (const auto& s : source_positions)
      for (const auto& m : mic_positions)
        if ((s - m).norm() <= 0.0)
          throw DomainError("scene: source placed on a microphone");
  }
};

// filters[j] is L x I: column i holds the impulse response from source j to
// microphone i.
struct ImpulseResponseSet {
  std::vector<Eigen::MatrixXd> filters;
  double sample_rate = 0.0;

  int num_sources() const { return static_cast<int>(filters.size()); }
  int num_mics() const {
    return filters.empty() ? 0 : static_cast<int>(filters[0].cols());
  }
  int num_taps() const {
    return filters.empty() ? 0 : static_cast<int>(filters[0].rows());
  }
};

// Uniform wall reflection coefficient from T60 by Eyring's relation;
// anechoic convention beta = 0 at t60 = 0.
inline double EyringBeta(const RoomSpec& room) {
  room.Validate();
  if (room.t60 == 0.0) return 0.0;
  const double inv_sum =
      1.0 / room.dims.x() + 1.0 / room.dims.y() + 1.0 / room.dims.z();
  return std::exp(-13.82 / (inv_sum * room.sound_velocity * room.t60));
}

// Mean power of the reverberant field relative to a unit-power source.
inline double ReverberantPower(const RoomSpec& room) {
  const double beta = EyringBeta(room);
  if (beta >= 1.0)
    throw DomainError("reverberant power undefined at beta >= 1");
  return 4.0 * beta * beta / (room.WallArea() * (1.0 - beta * beta));
}

// Spatial coherence of an ideal diffuse field between two points d apart.
inline double DiffuseCoherence(double d, double f, double c) {
  if (d < 0.0 || f < 0.0) throw DomainError("diffuse coherence: d, f >= 0");
  const double z = 2.0 * kPi * f * d / c;
  if (z == 0.0) return 1.0;
  return std::sin(z) / z;
}

namespace roomsim_detail {

// Windowed sinc used to place fractional-delay pulses. The window is flat
// over the inner half of the +-32-tap support with a cosine taper outside
// (Tukey, alpha = 0.5): a full cosine taper attenuates enough sidelobe
// energy to break the 1% pulse-energy budget at half-sample offsets.
inline constexpr int kDelayKernelHalfWidth = 32;

inline double DelayKernel(double tau) {
  const double w = kDelayKernelHalfWidth;
  const double a = std::abs(tau);
  if (a >= w) return 0.0;
  double s = tau == 0.0 ? 1.0 : std::sin(kPi * tau) / (kPi * tau);
  if (a <= 0.5 * w) return s;
  return s * 0.5 * (1.0 + std::cos(kPi * (a - 0.5 * w) / (0.5 * w)));
}

struct AxisImage {
  double delta = 0.0;  // image coordinate minus mic coordinate
  int bounces = 0;
};

inline std::vector<AxisImage> EnumerateAxis(double source, double mic,
                                            double room_len, double max_dist) {
  std::vector<AxisImage> out;
  const int n_max =
      static_cast<int>(std::ceil((max_dist + room_len) / (2.0 * room_len)));
  for (int n = -n_max; n <= n_max; ++n) {
    for (int q = 0; q <= 1; ++q) {
      double coord = (1 - 2 * q) * source + 2.0 * n * room_len;
      double delta = coord - mic;
      if (std::abs(delta) > max_dist) continue;
      out.push_back({delta, std::abs(n - q) + std::abs(n)});
    }
  }
  return out;
}

}  // namespace roomsim_detail

// Image-method impulse response from one source to one microphone. The
// direct path arrives at delay r/c with gain 1/(sqrt(4 pi) r); each image is
// attenuated by beta per wall bounce. Enumeration covers every image whose
// delay kernel can touch the filter support.
inline Eigen::VectorXd SimulateRirSingle(const RoomSpec& room,
                                         const Eigen::Vector3d& source,
                                         const Eigen::Vector3d& mic,
                                         double sample_rate, int num_taps) {
  using namespace roomsim_detail;
  const double beta = EyringBeta(room);
  const double c = room.sound_velocity;
  const double max_dist =
      c * (num_taps + kDelayKernelHalfWidth + 1) / sample_rate;

  const auto xs = EnumerateAxis(source.x(), mic.x(), room.dims.x(), max_dist);
  const auto ys = EnumerateAxis(source.y(), mic.y(), room.dims.y(), max_dist);
  const auto zs = EnumerateAxis(source.z(), mic.z(), room.dims.z(), max_dist);

  // beta^b lookup; beta = 0 keeps only the zero-bounce direct path.
  int max_bounces = 0;
  auto axis_max = [](const std::vector<AxisImage>& v) {
    int m = 0;
    for (const auto& a : v) m = std::max(m, a.bounces);
    return m;
  };
  max_bounces = axis_max(xs) + axis_max(ys) + axis_max(zs);
  std::vector<double> beta_pow(max_bounces + 1);
  beta_pow[0] = 1.0;
  for (int b = 1; b <= max_bounces; ++b) beta_pow[b] = beta_pow[b - 1] * beta;

  Eigen::VectorXd h = Eigen::VectorXd::Zero(num_taps);
  const double gain_scale = 1.0 / std::sqrt(4.0 * kPi);
  const double max_dist2 = max_dist * max_dist;

  for (const auto& xi : xs) {
    const double dx2 = xi.delta * xi.delta;
    if (dx2 > max_dist2) continue;
    for (const auto& yi : ys) {
      const double dxy2 = dx2 + yi.delta * yi.delta;
      if (dxy2 > max_dist2) continue;
      const int bxy = xi.bounces + yi.bounces;
      for (const auto& zi : zs) {
        const double dist2 = dxy2 + zi.delta * zi.delta;
        if (dist2 > max_dist2) continue;
        const int bounces = bxy + zi.bounces;
        const double amp_scale = beta_pow[bounces];
        if (amp_scale == 0.0) continue;
        const double dist = std::sqrt(dist2);
        const double amp = amp_scale * gain_scale / dist;
        const double delay = dist / c * sample_rate;
        const int lo = std::max(
            0, static_cast<int>(std::ceil(delay - kDelayKernelHalfWidth)));
        const int hi = std::min(
            num_taps - 1,
            static_cast<int>(std::floor(delay + kDelayKernelHalfWidth)));
        for (int t = lo; t <= hi; ++t) h[t] += amp * DelayKernel(t - delay);
      }
    }
  }
  return h;
}

// Full RIR set for a scene. Filter length covers 1.2 * T60 and always spans
// the farthest direct path plus the delay kernel.
inline ImpulseResponseSet SimulateRir(const RoomSpec& room,
                                      const SceneSpec& scene,
                                      double sample_rate) {
  scene.Validate(room);
  if (sample_rate <= 0.0) throw ConfigError("sample_rate: must be positive");

  double max_direct = 0.0;
  for (const auto& s : scene.source_positions)
    for (const auto& m : scene.mic_positions)
      max_direct = std::max(max_direct, (s - m).norm());
  const int direct_span = static_cast<int>(std::ceil(
                              max_direct / room.sound_velocity * sample_rate)) +
                          2 * roomsim_detail::kDelayKernelHalfWidth + 2;
  const int decay_span =
      static_cast<int>(std::ceil(1.2 * room.t60 * sample_rate));
  const int num_taps = std::max(direct_span, decay_span);

  const int J = static_cast<int>(scene.source_positions.size());
  const int I = static_cast<int>(scene.mic_positions.size());
  ImpulseResponseSet set;
  set.sample_rate = sample_rate;
  set.filters.assign(J, Eigen::MatrixXd::Zero(num_taps, I));

  std::vector<std::pair<int, int>> jobs;
  for (int j = 0; j < J; ++j)
    for (int i = 0; i < I; ++i) jobs.emplace_back(j, i);
  ParallelFor(0, static_cast<int>(jobs.size()), [&](int k) {
    auto [j, i] = jobs[k];
    set.filters[j].col(i) = SimulateRirSingle(
        room, scene.source_positions[j], scene.mic_positions[i], sample_rate,
        num_taps);
  });
  return set;
}

// Linear convolution by FFT, truncated to out_len samples.
inline Eigen::VectorXd FftConvolve(const Eigen::VectorXd& x,
                                   const Eigen::VectorXd& h,
                                   Eigen::Index out_len) {
  const Eigen::Index full = x.size() + h.size() - 1;
  Eigen::Index nfft = 1;
  while (nfft < full) nfft <<= 1;

  std::vector<double> xa(static_cast<std::size_t>(nfft), 0.0);
  std::vector<double> ha(static_cast<std::size_t>(nfft), 0.0);
  for (Eigen::Index t = 0; t < x.size(); ++t) xa[t] = x[t];
  for (Eigen::Index t = 0; t < h.size(); ++t) ha[t] = h[t];

  Eigen::FFT<double> fft;
  fft.SetFlag(Eigen::FFT<double>::HalfSpectrum);
  std::vector<Complex> xf, hf;
  fft.fwd(xf, xa);
  fft.fwd(hf, ha);
  for (std::size_t k = 0; k < xf.size(); ++k) xf[k] *= hf[k];
  std::vector<double> y;
  fft.inv(y, xf, static_cast<int>(nfft));

  Eigen::VectorXd out(out_len);
  for (Eigen::Index t = 0; t < out_len; ++t)
    out[t] = t < full ? y[static_cast<std::size_t>(t)] : 0.0;
  return out;
}

// Convolves mono sources with the RIR set. images[j] holds source j's
// spatial image at every mic; the mixture is their exact sum. Outputs keep
// the input length (convolution tails beyond it are dropped).
inline std::pair<AudioBuffer, std::vector<AudioBuffer>> Mix(
    const std::vector<AudioBuffer>& sources, const ImpulseResponseSet& rirs) {
  const int J = static_cast<int>(sources.size());
  if (J == 0) throw DimensionError("mix: no sources");
  if (J != rirs.num_sources())
    throw DimensionError("mix: source count does not match RIR set");
  const Eigen::Index T = sources[0].num_samples();
  const double rate = sources[0].sample_rate;
  for (const auto& s : sources) {
    if (s.num_channels() != 1)
      throw DimensionError("mix: sources must be mono");
    if (s.num_samples() != T)
      throw DimensionError("mix: sources must share one length");
    if (s.sample_rate != rate)
      throw DimensionError("mix: sources must share one sample rate");
  }
  if (rate != rirs.sample_rate)
    throw DimensionError("mix: RIR sample rate does not match sources");

  const int I = rirs.num_mics();
  std::vector<AudioBuffer> images(J);
  for (int j = 0; j < J; ++j) {
    images[j].sample_rate = rate;
    images[j].samples.resize(T, I);
  }
  std::vector<std::pair<int, int>> jobs;
  for (int j = 0; j < J; ++j)
    for (int i = 0; i < I; ++i) jobs.emplace_back(j, i);
  ParallelFor(0, static_cast<int>(jobs.size()), [&](int k) {
    auto [j, i] = jobs[k];
    images[j].samples.col(i) =
        FftConvolve(sources[j].samples.col(0), rirs.filters[j].col(i), T);
  });

  AudioBuffer mixture;
  mixture.sample_rate = rate;
  mixture.samples = Eigen::MatrixXd::Zero(T, I);
  for (int j = 0; j < J; ++j) mixture.samples += images[j].samples;
  return {mixture, images};
}

// Deterministic amplitude-modulated band-limited noise. Stands in for speech
// when no corpus is available: a broadband carrier with an independent
// slowly-varying lognormal envelope gives the time-varying local statistics
// the separation model feeds on.
inline AudioBuffer AmNoiseSource(Eigen::Index samples, double sample_rate,
                                 std::uint64_t seed, double f_lo = 200.0,
                                 double f_hi = 6000.0,
                                 double env_cutoff_hz = 6.0,
                                 double env_depth = 1.2) {
  if (samples <= 0) throw DomainError("am noise: samples must be positive");
  Eigen::Index nfft = 1;
  while (nfft < samples) nfft <<= 1;

  Rng rng(seed);
  std::vector<double> carrier(static_cast<std::size_t>(nfft), 0.0);
  std::vector<double> env_noise(static_cast<std::size_t>(nfft), 0.0);
  for (Eigen::Index t = 0; t < samples; ++t) carrier[t] = rng.Gaussian();
  for (Eigen::Index t = 0; t < samples; ++t) env_noise[t] = rng.Gaussian();

  Eigen::FFT<double> fft;
  fft.SetFlag(Eigen::FFT<double>::HalfSpectrum);
  const double df = sample_rate / static_cast<double>(nfft);
  const double edge = 100.0;  // raised-cosine transition width, Hz

  auto band_weight = [&](double f) {
    auto rise = [](double x) { return 0.5 * (1.0 - std::cos(kPi * x)); };
    if (f < f_lo - edge || f > f_hi + edge) return 0.0;
    double w = 1.0;
    if (f < f_lo + edge) w *= rise((f - (f_lo - edge)) / (2.0 * edge));
    if (f > f_hi - edge) w *= rise(((f_hi + edge) - f) / (2.0 * edge));
    return w;
  };

  std::vector<Complex> spec;
  fft.fwd(spec, carrier);
  for (std::size_t k = 0; k < spec.size(); ++k)
    spec[k] *= band_weight(k * df);
  std::vector<double> band;
  fft.inv(band, spec, static_cast<int>(nfft));

  fft.fwd(spec, env_noise);
  for (std::size_t k = 0; k < spec.size(); ++k) {
    double f = k * df;
    spec[k] *= f <= env_cutoff_hz
                   ? 1.0
                   : (f <= 2.0 * env_cutoff_hz
                          ? 0.5 * (1.0 + std::cos(kPi * (f - env_cutoff_hz) /
                                                  env_cutoff_hz))
                          : 0.0);
  }
  std::vector<double> env_raw;
  fft.inv(env_raw, spec, static_cast<int>(nfft));

  double mean = 0.0, var = 0.0;
  for (Eigen::Index t = 0; t < samples; ++t) mean += env_raw[t];
  mean /= static_cast<double>(samples);
  for (Eigen::Index t = 0; t < samples; ++t) {
    double d = env_raw[t] - mean;
    var += d * d;
  }
  var /= static_cast<double>(samples);
  const double inv_std = var > 0.0 ? 1.0 / std::sqrt(var) : 0.0;

  AudioBuffer out;
  out.sample_rate = sample_rate;
  out.samples.resize(samples, 1);
  for (Eigen::Index t = 0; t < samples; ++t) {
    double e = std::exp(env_depth * (env_raw[t] - mean) * inv_std);
    out.samples(t, 0) = band[t] * e;
  }
  out.samples *= 0.2 / (out.samples.cwiseAbs().maxCoeff() + 1e-300);
  return out;
}

}  // namespace covsep

#endif  // COVSEP_ROOMSIM_HPP_
