// covsep/experiment.hpp

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

// Experiment protocols on self-contained simulated scenes.
//
// Scenes use amplitude-modulated band-limited noise in place of speech so
// everything runs without a licensed corpus; protocol outputs are meant for
// rank-ordering models, not for absolute dB targets.
//
// Protocols:
//   semiblind  — oracle spatial parameters per model kind, variances fit on
//                the mixture, plus binary-mask and l1 reference baselines.
//   t60_sweep  — fully blind separation across reverberation times.
//   movement   — spatial parameters learned at the original position,
//                applied after the last source moves by a few degrees.

#ifndef COVSEP_EXPERIMENT_HPP_
#define COVSEP_EXPERIMENT_HPP_

#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "covsep/bss_eval.hpp"
#include "covsep/common.hpp"
#include "covsep/em.hpp"
#include "covsep/pipeline.hpp"
#include "covsep/roomsim.hpp"
#include "covsep/spatial.hpp"
#include "covsep/stft.hpp"
#include "covsep/wav.hpp"

namespace covsep {

// ---------------------------------------------------------------------------
// Scene construction.

struct ScenarioConfig {
  int num_sources = 3;
  int num_mics = 2;
  double duration_s = 10.0;
  double sample_rate = 16000.0;
  double t60 = 0.25;
  // Linear array centered in the room; sources face it on a parallel line.
  double mic_spacing = 0.2;
  double source_distance = 1.2;
  double source_span = 1.0;  // lateral extent of the source line
  // Source material: amplitude-modulation rate and strength of the
  // self-contained noise sources. Slower/deeper modulation gives sparser
  // time-frequency occupancy.
  double env_cutoff_hz = 6.0;
  double env_depth = 1.2;
  Eigen::Vector3d room_dims{5.0, 4.0, 3.0};
  std::uint64_t seed = 1;

  void Validate() const {
    if (num_sources < 1 || num_mics < 1)
      throw ConfigError("scenario: needs sources and microphones");
    if (!(duration_s > 0.0) || !(sample_rate > 0.0))
      throw ConfigError("scenario: duration and sample rate must be positive");
    if (!(mic_spacing > 0.0) || !(source_distance > 0.0))
      throw ConfigError("scenario: spacing and distance must be positive");
    if (t60 < 0.0) throw ConfigError("scenario.t60: must be nonnegative");
    if (!(env_cutoff_hz > 0.0) || !(env_depth > 0.0))
      throw ConfigError("scenario: envelope cutoff and depth must be positive");
  }
};

struct Scenario {
  RoomSpec room;
  SceneSpec scene;
  ImpulseResponseSet rirs;
  std::vector<AudioBuffer> sources;  // dry, mono
  std::vector<AudioBuffer> images;   // true spatial images
  AudioBuffer mixture;
};

namespace experiment_detail {

inline Eigen::Vector3d ArrayCenter(const Eigen::Vector3d& dims) {
  return {dims.x() / 2.0, dims.y() * 0.375, dims.z() / 2.0};
}

}  // namespace experiment_detail

inline SceneSpec MakeLineArrayScene(const ScenarioConfig& cfg) {
  cfg.Validate();
  const Eigen::Vector3d c = experiment_detail::ArrayCenter(cfg.room_dims);
  SceneSpec scene;
  for (int i = 0; i < cfg.num_mics; ++i) {
    const double off =
        cfg.mic_spacing * (i - (cfg.num_mics - 1) / 2.0);
    scene.mic_positions.push_back({c.x() + off, c.y(), c.z()});
  }
  for (int j = 0; j < cfg.num_sources; ++j) {
    const double frac =
        cfg.num_sources == 1
            ? 0.0
            : j / static_cast<double>(cfg.num_sources - 1) - 0.5;
    scene.source_positions.push_back(
        {c.x() + cfg.source_span * frac, c.y() + cfg.source_distance, c.z()});
  }
  return scene;
}

// Rotates one source about the array center in the horizontal plane.
inline SceneSpec RotateSource(const SceneSpec& scene,
                              const Eigen::Vector3d& center, int index,
                              double angle_deg) {
  if (index < 0 || index >= static_cast<int>(scene.source_positions.size()))
    throw DimensionError("rotate source: index out of range");
  SceneSpec out = scene;
  const double a = angle_deg * kPi / 180.0;
  Eigen::Vector3d p = out.source_positions[static_cast<std::size_t>(index)];
  const double dx = p.x() - center.x(), dy = p.y() - center.y();
  p.x() = center.x() + std::cos(a) * dx - std::sin(a) * dy;
  p.y() = center.y() + std::sin(a) * dx + std::cos(a) * dy;
  out.source_positions[static_cast<std::size_t>(index)] = p;
  return out;
}

// Simulates RIRs for the scene and renders the given dry sources through
// them.
inline Scenario RenderScenario(const ScenarioConfig& cfg,
                               const SceneSpec& scene,
                               std::vector<AudioBuffer> sources) {
  Scenario sc;
  sc.room.dims = cfg.room_dims;
  sc.room.t60 = cfg.t60;
  sc.scene = scene;
  sc.rirs = SimulateRir(sc.room, sc.scene, cfg.sample_rate);
  sc.sources = std::move(sources);
  auto mixed = Mix(sc.sources, sc.rirs);
  sc.mixture = std::move(mixed.first);
  sc.images = std::move(mixed.second);
  return sc;
}

// Self-contained scene: AM-noise sources with per-source seeds derived from
// the scenario seed.
inline Scenario BuildAmScenario(const ScenarioConfig& cfg) {
  cfg.Validate();
  const auto samples =
      static_cast<Eigen::Index>(cfg.duration_s * cfg.sample_rate);
  std::vector<AudioBuffer> sources;
  sources.reserve(static_cast<std::size_t>(cfg.num_sources));
  for (int j = 0; j < cfg.num_sources; ++j)
    sources.push_back(AmNoiseSource(
        samples, cfg.sample_rate,
        cfg.seed * 1001 + static_cast<std::uint64_t>(j), 200.0, 6000.0,
        cfg.env_cutoff_hz, cfg.env_depth));
  return RenderScenario(cfg, MakeLineArrayScene(cfg), std::move(sources));
}

// ---------------------------------------------------------------------------
// Oracle spatial parameters per model kind.

inline SpatialCovarianceSet OracleCovariances(ModelKind kind,
                                              const Scenario& sc,
                                              const StftConfig& stft,
                                              const EmConfig& em = {}) {
  const int F = stft.num_bins();
  switch (kind) {
    case ModelKind::kRank1Anechoic:
      return BuildAnechoicCovarianceSet(
          MakeAnechoicParams(sc.scene, sc.room.sound_velocity), F,
          sc.mixture.sample_rate, stft.frame_size);
    case ModelKind::kRank1Convolutive:
      return BuildConvolutiveCovarianceSet(sc.rirs, F, stft.frame_size);
    case ModelKind::kFullRankDirectDiffuse:
      return BuildDirectDiffuseCovarianceSet(
          sc.room, sc.scene, F, sc.mixture.sample_rate, stft.frame_size);
    case ModelKind::kFullRankUnconstrained: {
      std::vector<TfTensor> imgs;
      imgs.reserve(sc.images.size());
      for (const auto& img : sc.images) imgs.push_back(Stft(img, stft));
      return EmpiricalCovarianceMl(imgs, em).R;
    }
  }
  throw ConfigError("oracle covariances: unknown model kind");
}

// ---------------------------------------------------------------------------
// Reference baselines (rank ordering only, not tuned for quality).

// Winner-take-all masking: with trace-normalized spatial covariances the
// variances are comparable across sources, so each TF cell goes entirely to
// the source with the largest posterior power.
inline std::vector<TfTensor> BinaryMaskSeparate(const TfTensor& x,
                                                const VarianceMap& v) {
  const int F = x.num_bins(), N = x.num_frames();
  const int J = static_cast<int>(v.size());
  if (J == 0) throw DimensionError("binary mask: no sources");
  std::vector<TfTensor> images(static_cast<std::size_t>(J));
  for (auto& img : images) {
    img = x;
    for (auto& bin : img.bins) bin.setZero();
  }
  for (int f = 0; f < F; ++f)
    for (int n = 0; n < N; ++n) {
      int best = 0;
      for (int j = 1; j < J; ++j)
        if (v[static_cast<std::size_t>(j)](f, n) >
            v[static_cast<std::size_t>(best)](f, n))
          best = j;
      images[static_cast<std::size_t>(best)].bins[f].col(n) =
          x.bins[f].col(n);
    }
  return images;
}

// l1-minimizing sparse recovery against known mixing vectors: with I
// observations the minimizer is sought among exact solves over every
// I-element source subset (the vertex solutions), picking the smallest
// l1 norm. Sources outside the winning subset stay silent in that cell.
inline std::vector<TfTensor> L1SubsetSeparate(const TfTensor& x,
                                              const MixingVectorSet& h) {
  const int F = x.num_bins(), I = x.num_channels(), N = x.num_frames();
  const int J = h.num_sources();
  if (h.num_bins() != F)
    throw DimensionError("l1 baseline: mixing vector bin count mismatch");
  if (J > 12) throw ConfigError("l1 baseline: too many sources to enumerate");

  std::vector<TfTensor> images(static_cast<std::size_t>(J));
  for (auto& img : images) {
    img = x;
    for (auto& bin : img.bins) bin.setZero();
  }

  // All I-element subsets of {0..J-1} (or the full set when J <= I).
  std::vector<std::vector<int>> subsets;
  if (J <= I) {
    std::vector<int> all(static_cast<std::size_t>(J));
    std::iota(all.begin(), all.end(), 0);
    subsets.push_back(all);
  } else {
    std::vector<int> pick(static_cast<std::size_t>(I));
    std::iota(pick.begin(), pick.end(), 0);
    while (true) {
      subsets.push_back(pick);
      int pos = I - 1;
      while (pos >= 0 && pick[static_cast<std::size_t>(pos)] == J - I + pos)
        --pos;
      if (pos < 0) break;
      ++pick[static_cast<std::size_t>(pos)];
      for (int q = pos + 1; q < I; ++q)
        pick[static_cast<std::size_t>(q)] =
            pick[static_cast<std::size_t>(q - 1)] + 1;
    }
  }

  for (int f = 0; f < F; ++f) {
    std::vector<Eigen::FullPivLU<Eigen::MatrixXcd>> lus;
    lus.reserve(subsets.size());
    for (const auto& sub : subsets) {
      Eigen::MatrixXcd hs(I, static_cast<int>(sub.size()));
      for (std::size_t c = 0; c < sub.size(); ++c)
        hs.col(static_cast<int>(c)) =
            h.H[static_cast<std::size_t>(f)].col(sub[c]);
      lus.emplace_back(hs);
    }
    for (int n = 0; n < N; ++n) {
      const Eigen::VectorXcd xn = x.bins[static_cast<std::size_t>(f)].col(n);
      double best_cost = std::numeric_limits<double>::infinity();
      int best_s = -1;
      Eigen::VectorXcd best_sol;
      for (std::size_t s = 0; s < subsets.size(); ++s) {
        if (!lus[s].isInvertible() && static_cast<int>(subsets[s].size()) == I)
          continue;
        const Eigen::VectorXcd sol = lus[s].solve(xn);
        const double cost = sol.cwiseAbs().sum();
        if (cost < best_cost) {
          best_cost = cost;
          best_s = static_cast<int>(s);
          best_sol = sol;
        }
      }
      if (best_s < 0) continue;  // every subset degenerate: leave silence
      const auto& sub = subsets[static_cast<std::size_t>(best_s)];
      for (std::size_t c = 0; c < sub.size(); ++c)
        images[static_cast<std::size_t>(sub[c])]
            .bins[static_cast<std::size_t>(f)]
            .col(n) = h.H[static_cast<std::size_t>(f)].col(sub[c]) *
                      best_sol[static_cast<Eigen::Index>(c)];
    }
  }
  return images;
}

// ---------------------------------------------------------------------------
// Reports.

struct ReportRow {
  std::string protocol;
  std::string condition;
  std::string model;
  std::uint64_t seed = 0;
  std::vector<EvalScores> per_source;
  EvalScores mean;
  double runtime_s = 0.0;
  double final_loglik = std::numeric_limits<double>::quiet_NaN();
  std::string note;
};

struct ExperimentReport {
  std::vector<ReportRow> rows;
};

inline EvalScores MeanScores(const std::vector<EvalScores>& scores) {
  EvalScores m;
  if (scores.empty()) return m;
  for (const auto& s : scores) {
    m.sdr += s.sdr;
    m.isr += s.isr;
    m.sir += s.sir;
    m.sar += s.sar;
  }
  const double n = static_cast<double>(scores.size());
  m.sdr /= n;
  m.isr /= n;
  m.sir /= n;
  m.sar /= n;
  return m;
}

// Mean SDR over rows matching a model (and condition, when nonempty).
inline double ReportMeanSdr(const ExperimentReport& report,
                            const std::string& model,
                            const std::string& condition = "") {
  double sum = 0.0;
  int count = 0;
  for (const auto& row : report.rows) {
    if (row.model != model) continue;
    if (!condition.empty() && row.condition != condition) continue;
    if (!row.note.empty() && row.note.rfind("error", 0) == 0) continue;
    sum += row.mean.sdr;
    ++count;
  }
  if (count == 0)
    throw DomainError("report: no rows for model '" + model + "'");
  return sum / count;
}

// One line per source plus a "mean" line per row. Tab-separated.
inline void WriteReportTsv(const ExperimentReport& report,
                           std::ostream& os) {
  os << "protocol\tcondition\tmodel\tseed\tsource\tsdr\tisr\tsir\tsar"
        "\truntime_s\tfinal_loglik\tnote\n";
  auto line = [&os](const ReportRow& row, const std::string& source,
                    const EvalScores& s) {
    char buf[160];
    std::snprintf(buf, sizeof(buf),
                  "%.6f\t%.6f\t%.6f\t%.6f\t%.3f\t%.6g", s.sdr, s.isr, s.sir,
                  s.sar, row.runtime_s, row.final_loglik);
    os << row.protocol << '\t' << row.condition << '\t' << row.model << '\t'
       << row.seed << '\t' << source << '\t' << buf << '\t' << row.note
       << '\n';
  };
  for (const auto& row : report.rows) {
    for (std::size_t j = 0; j < row.per_source.size(); ++j)
      line(row, std::to_string(j), row.per_source[j]);
    line(row, "mean", row.mean);
  }
}

namespace experiment_detail {

inline std::string FormatCondition(const char* key, double value) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%s=%g", key, value);
  return buf;
}

class Stopwatch {
 public:
  Stopwatch() : start_(std::chrono::steady_clock::now()) {}
  double Seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                         start_)
        .count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

inline ReportRow ScoreRow(const std::vector<AudioBuffer>& estimates,
                          const Scenario& sc, const EvalOptions& eval) {
  ReportRow row;
  const EvalReport rep = BssEvalImages(estimates, sc.images, eval);
  row.per_source = rep.scores;
  row.mean = MeanScores(rep.scores);
  return row;
}

inline ReportRow ErrorRow(const Error& err) {
  ReportRow row;
  row.note = std::string("error: ") + err.what();
  return row;
}

inline ArrayGeometry GeometryOf(const Scenario& sc) {
  ArrayGeometry geom;
  geom.sound_velocity = sc.room.sound_velocity;
  for (const auto& m : sc.scene.mic_positions)
    geom.mic_positions.push_back({m.x(), m.y(), m.z()});
  return geom;
}

}  // namespace experiment_detail

// ---------------------------------------------------------------------------
// Protocols.

struct SemiblindProtocolConfig {
  ScenarioConfig scenario;  // t60 defaults to 0.25
  std::vector<std::uint64_t> seeds = {1, 2, 3};
  StftConfig stft;
  EmConfig em;
  EvalOptions eval;  // fixed-order: the covariance order pins sources
  std::vector<ModelKind> kinds = {
      ModelKind::kRank1Anechoic, ModelKind::kRank1Convolutive,
      ModelKind::kFullRankDirectDiffuse, ModelKind::kFullRankUnconstrained};
  bool include_baselines = true;
};

inline ExperimentReport RunSemiblindProtocol(
    const SemiblindProtocolConfig& cfg) {
  ExperimentReport report;
  const std::string condition =
      experiment_detail::FormatCondition("t60", cfg.scenario.t60);

  for (std::uint64_t seed : cfg.seeds) {
    ScenarioConfig scen = cfg.scenario;
    scen.seed = seed;
    const Scenario sc = BuildAmScenario(scen);

    PipelineConfig pc;
    pc.num_sources = scen.num_sources;
    pc.num_channels = scen.num_mics;
    pc.sample_rate = scen.sample_rate;
    pc.stft = cfg.stft;
    pc.em = cfg.em;
    pc.seed = seed;

    for (ModelKind kind : cfg.kinds) {
      experiment_detail::Stopwatch watch;
      ReportRow row;
      try {
        const SpatialCovarianceSet R =
            OracleCovariances(kind, sc, cfg.stft, cfg.em);
        pc.model = kind;
        const SeparationResult res = SeparateSemiblind(sc.mixture, R, pc);
        row = experiment_detail::ScoreRow(res.images, sc, cfg.eval);
        row.final_loglik = res.loglik.back();
      } catch (const Error& err) {
        row = experiment_detail::ErrorRow(err);
      }
      row.protocol = "semiblind";
      row.condition = condition;
      row.model = ModelKindName(kind);
      row.seed = seed;
      row.runtime_s = watch.Seconds();
      report.rows.push_back(std::move(row));
    }

    if (cfg.include_baselines) {
      const TfTensor x = Stft(sc.mixture, cfg.stft);

      {
        experiment_detail::Stopwatch watch;
        ReportRow row;
        try {
          const SpatialCovarianceSet R = OracleCovariances(
              ModelKind::kFullRankUnconstrained, sc, cfg.stft, cfg.em);
          const FullRankRunResult vb = SemiblindVariances(x, R, cfg.em);
          const std::vector<TfTensor> masked = BinaryMaskSeparate(x, vb.v);
          row = experiment_detail::ScoreRow(
              pipeline_detail::ImagesAtMixtureLength(masked, sc.mixture), sc,
              cfg.eval);
        } catch (const Error& err) {
          row = experiment_detail::ErrorRow(err);
        }
        row.protocol = "semiblind";
        row.condition = condition;
        row.model = "binary_mask";
        row.seed = seed;
        row.runtime_s = watch.Seconds();
        row.note = row.note.empty() ? "reference baseline" : row.note;
        report.rows.push_back(std::move(row));
      }

      {
        experiment_detail::Stopwatch watch;
        ReportRow row;
        try {
          const MixingVectorSet h = ConvolutiveMixingVectors(
              sc.rirs, cfg.stft.num_bins(), cfg.stft.frame_size);
          const std::vector<TfTensor> sparse = L1SubsetSeparate(x, h);
          row = experiment_detail::ScoreRow(
              pipeline_detail::ImagesAtMixtureLength(sparse, sc.mixture), sc,
              cfg.eval);
        } catch (const Error& err) {
          row = experiment_detail::ErrorRow(err);
        }
        row.protocol = "semiblind";
        row.condition = condition;
        row.model = "l1_subset";
        row.seed = seed;
        row.runtime_s = watch.Seconds();
        row.note = row.note.empty() ? "reference baseline" : row.note;
        report.rows.push_back(std::move(row));
      }
    }
  }
  return report;
}

struct T60SweepConfig {
  ScenarioConfig scenario;
  std::vector<double> t60s = {0.05, 0.13, 0.25, 0.50};
  std::vector<std::uint64_t> seeds = {1, 2, 3};
  StftConfig stft;
  EmConfig em;
  InitConfig init;
  EvalOptions eval{.best_permutation = true};  // blind order is arbitrary
  std::vector<ModelKind> models = {ModelKind::kRank1Convolutive,
                                   ModelKind::kFullRankUnconstrained};
};

inline ExperimentReport RunT60Sweep(const T60SweepConfig& cfg) {
  ExperimentReport report;
  for (double t60 : cfg.t60s) {
    const std::string condition =
        experiment_detail::FormatCondition("t60", t60);
    for (std::uint64_t seed : cfg.seeds) {
      ScenarioConfig scen = cfg.scenario;
      scen.t60 = t60;
      scen.seed = seed;
      const Scenario sc = BuildAmScenario(scen);

      for (ModelKind kind : cfg.models) {
        experiment_detail::Stopwatch watch;
        ReportRow row;
        try {
          PipelineConfig pc;
          pc.model = kind;
          pc.num_sources = scen.num_sources;
          pc.num_channels = scen.num_mics;
          pc.sample_rate = scen.sample_rate;
          pc.stft = cfg.stft;
          pc.init = cfg.init;
          pc.em = cfg.em;
          pc.geometry = experiment_detail::GeometryOf(sc);
          pc.seed = seed;
          const SeparationResult res = SeparateBlind(sc.mixture, pc);
          row = experiment_detail::ScoreRow(res.images, sc, cfg.eval);
          row.final_loglik = res.loglik.back();
        } catch (const Error& err) {
          row = experiment_detail::ErrorRow(err);
        }
        row.protocol = "t60_sweep";
        row.condition = condition;
        row.model = ModelKindName(kind);
        row.seed = seed;
        row.runtime_s = watch.Seconds();
        report.rows.push_back(std::move(row));
      }
    }
  }
  return report;
}

struct MovementProtocolConfig {
  ScenarioConfig scenario;  // t60 defaults to 0.25
  std::vector<double> angles_deg = {0.0, 5.0, 10.0};
  std::vector<std::uint64_t> seeds = {1, 2, 3};
  StftConfig stft;
  EmConfig em;
  EvalOptions eval;
  std::vector<ModelKind> models = {ModelKind::kRank1Convolutive,
                                   ModelKind::kFullRankUnconstrained};
  int moved_source = -1;  // -1: the last source
};

// Spatial parameters are learned on the unmoved scene and reused after the
// chosen source rotates about the array; only variances refit.
inline ExperimentReport RunMovementProtocol(const MovementProtocolConfig& cfg) {
  ExperimentReport report;
  for (std::uint64_t seed : cfg.seeds) {
    ScenarioConfig scen = cfg.scenario;
    scen.seed = seed;
    const Scenario base = BuildAmScenario(scen);
    const int moved = cfg.moved_source >= 0 ? cfg.moved_source
                                            : scen.num_sources - 1;
    const Eigen::Vector3d center =
        experiment_detail::ArrayCenter(scen.room_dims);

    PipelineConfig pc;
    pc.num_sources = scen.num_sources;
    pc.num_channels = scen.num_mics;
    pc.sample_rate = scen.sample_rate;
    pc.stft = cfg.stft;
    pc.em = cfg.em;
    pc.seed = seed;

    for (ModelKind kind : cfg.models) {
      SpatialCovarianceSet R0;
      bool have_R0 = false;
      try {
        R0 = OracleCovariances(kind, base, cfg.stft, cfg.em);
        have_R0 = true;
      } catch (const Error& err) {
        for (double angle : cfg.angles_deg) {
          ReportRow row = experiment_detail::ErrorRow(err);
          row.protocol = "movement";
          row.condition = experiment_detail::FormatCondition("angle", angle);
          row.model = ModelKindName(kind);
          row.seed = seed;
          report.rows.push_back(std::move(row));
        }
      }
      if (!have_R0) continue;

      for (double angle : cfg.angles_deg) {
        experiment_detail::Stopwatch watch;
        ReportRow row;
        try {
          const Scenario sc =
              angle == 0.0
                  ? base
                  : RenderScenario(
                        scen,
                        RotateSource(base.scene, center, moved, angle),
                        base.sources);
          pc.model = kind;
          const SeparationResult res = SeparateSemiblind(sc.mixture, R0, pc);
          row = experiment_detail::ScoreRow(res.images, sc, cfg.eval);
          row.final_loglik = res.loglik.back();
        } catch (const Error& err) {
          row = experiment_detail::ErrorRow(err);
        }
        row.protocol = "movement";
        row.condition = experiment_detail::FormatCondition("angle", angle);
        row.model = ModelKindName(kind);
        row.seed = seed;
        row.runtime_s = watch.Seconds();
        report.rows.push_back(std::move(row));
      }
    }
  }
  return report;
}

}  // namespace covsep

#endif  // COVSEP_EXPERIMENT_HPP_
