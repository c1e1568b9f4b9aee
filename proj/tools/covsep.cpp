// covsep/tools/covsep.cpp

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

// Command-line front end.
//
//   covsep simulate    render a reverberant scene to mixture + image WAVs
//   covsep separate    blind or semi-blind separation of a mixture WAV
//   covsep evaluate    SDR/ISR/SIR/SAR of estimates against reference images
//   covsep experiment  run a full protocol (semiblind | t60_sweep | movement)
//
// Configs are JSON files; every field can also be set by a flag. Validation
// failures name the offending field. Exit status is nonzero on any error.

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "covsep/bss_eval.hpp"
#include "covsep/common.hpp"
#include "covsep/em.hpp"
#include "covsep/experiment.hpp"
#include "covsep/pipeline.hpp"
#include "covsep/roomsim.hpp"
#include "covsep/spatial.hpp"
#include "covsep/stft.hpp"
#include "covsep/tensor_io.hpp"
#include "covsep/wav.hpp"

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

// --------------------------------------------------------------------------
// JSON helpers. Readers carry the dotted field path so that config errors
// point at the exact offending entry.

json LoadJsonFile(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw covsep::IoError("cannot open config file: " + path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw covsep::FormatError(path + ": " + e.what());
  }
}

class JsonReader {
 public:
  JsonReader(const json& j, std::string prefix)
      : j_(&j), prefix_(std::move(prefix)) {
    if (!j_->is_object())
      throw covsep::ConfigError(Label() + ": expected a JSON object");
  }

  template <typename T>
  void Get(const char* key, T* out) const {
    auto it = j_->find(key);
    if (it == j_->end()) return;
    try {
      *out = it->get<T>();
    } catch (const json::exception& e) {
      throw covsep::ConfigError(prefix_ + key + ": " + e.what());
    }
  }

  bool HasChild(const char* key) const {
    return j_->contains(key);
  }

  JsonReader Child(const char* key) const {
    return JsonReader(j_->at(key), prefix_ + key + ".");
  }

  // Rejects unknown keys so that typos fail loudly instead of silently
  // keeping a default.
  void ExpectKeys(std::initializer_list<const char*> allowed) const {
    for (auto it = j_->begin(); it != j_->end(); ++it) {
      bool known = false;
      for (const char* k : allowed)
        if (it.key() == k) { known = true; break; }
      if (!known)
        throw covsep::ConfigError(prefix_ + it.key() + ": unknown field");
    }
  }

 private:
  std::string Label() const {
    return prefix_.empty() ? std::string("config")
                           : prefix_.substr(0, prefix_.size() - 1);
  }

  const json* j_;
  std::string prefix_;
};

// --------------------------------------------------------------------------
// Config mappers: JSON object -> library config, field by field.

covsep::StftConfig StftFromReader(const JsonReader& r) {
  covsep::StftConfig cfg;
  r.ExpectKeys({"frame_size", "frame_shift"});
  r.Get("frame_size", &cfg.frame_size);
  r.Get("frame_shift", &cfg.frame_shift);
  return cfg;
}

covsep::EmConfig EmFromReader(const JsonReader& r) {
  covsep::EmConfig cfg;
  r.ExpectKeys({"iterations", "ridge", "variance_floor_scale",
                "noise_init_scale", "noise_floor_scale", "num_threads"});
  r.Get("iterations", &cfg.iterations);
  r.Get("ridge", &cfg.ridge);
  r.Get("variance_floor_scale", &cfg.variance_floor_scale);
  r.Get("noise_init_scale", &cfg.noise_init_scale);
  r.Get("noise_floor_scale", &cfg.noise_floor_scale);
  r.Get("num_threads", &cfg.num_threads);
  return cfg;
}

covsep::InitConfig InitFromReader(const JsonReader& r,
                                  const std::string& prefix) {
  covsep::InitConfig cfg;
  r.ExpectKeys({"cluster_threshold", "method", "seed"});
  r.Get("cluster_threshold", &cfg.cluster_threshold);
  std::string method = "hierarchical";
  r.Get("method", &method);
  if (method == "hierarchical") {
    cfg.method = covsep::InitMethod::kHierarchical;
  } else if (method == "random") {
    cfg.method = covsep::InitMethod::kRandom;
  } else {
    // The DOA baseline needs array geometry wired in-process; it is not
    // reachable from a config file.
    throw covsep::ConfigError(prefix + "method: unknown method '" + method +
                              "' (use hierarchical or random)");
  }
  r.Get("seed", &cfg.seed);
  return cfg;
}

covsep::EvalOptions EvalFromReader(const JsonReader& r) {
  covsep::EvalOptions opt;
  r.ExpectKeys({"filter_taps", "best_permutation", "ridge"});
  r.Get("filter_taps", &opt.filter_taps);
  r.Get("best_permutation", &opt.best_permutation);
  r.Get("ridge", &opt.ridge);
  return opt;
}

covsep::ScenarioConfig ScenarioFromReader(const JsonReader& r,
                                          const std::string& prefix) {
  covsep::ScenarioConfig cfg;
  r.ExpectKeys({"num_sources", "num_mics", "duration_s", "sample_rate", "t60",
                "mic_spacing", "source_distance", "source_span",
                "env_cutoff_hz", "env_depth", "room_dims", "seed"});
  r.Get("num_sources", &cfg.num_sources);
  r.Get("num_mics", &cfg.num_mics);
  r.Get("duration_s", &cfg.duration_s);
  r.Get("sample_rate", &cfg.sample_rate);
  r.Get("t60", &cfg.t60);
  r.Get("mic_spacing", &cfg.mic_spacing);
  r.Get("source_distance", &cfg.source_distance);
  r.Get("source_span", &cfg.source_span);
  r.Get("env_cutoff_hz", &cfg.env_cutoff_hz);
  r.Get("env_depth", &cfg.env_depth);
  std::vector<double> dims;
  r.Get("room_dims", &dims);
  if (!dims.empty()) {
    if (dims.size() != 3)
      throw covsep::ConfigError(prefix + "room_dims: expected 3 entries");
    cfg.room_dims = Eigen::Vector3d(dims[0], dims[1], dims[2]);
  }
  r.Get("seed", &cfg.seed);
  return cfg;
}

covsep::ModelKind ModelFromString(const std::string& name,
                                  const std::string& path) {
  try {
    return covsep::ModelKindFromName(name);
  } catch (const covsep::ConfigError&) {
    throw covsep::ConfigError(
        path + ": unknown kind '" + name +
        "' (rank1_anechoic, rank1_convolutive, fullrank_direct_diffuse, "
        "fullrank_unconstrained)");
  }
}

std::vector<covsep::ModelKind> ModelsFromReader(const JsonReader& r,
                                                const char* key,
                                                const std::string& prefix,
                                                std::vector<covsep::ModelKind>
                                                    fallback) {
  std::vector<std::string> names;
  r.Get(key, &names);
  if (names.empty()) return fallback;
  std::vector<covsep::ModelKind> kinds;
  for (const auto& n : names)
    kinds.push_back(ModelFromString(n, prefix + key));
  return kinds;
}

covsep::PipelineConfig PipelineFromReader(const JsonReader& r) {
  covsep::PipelineConfig cfg;
  r.ExpectKeys({"model", "num_sources", "num_channels", "sample_rate", "stft",
                "init", "em", "geometry", "seed"});
  std::string model;
  r.Get("model", &model);
  if (!model.empty()) cfg.model = ModelFromString(model, "model");
  r.Get("num_sources", &cfg.num_sources);
  r.Get("num_channels", &cfg.num_channels);
  r.Get("sample_rate", &cfg.sample_rate);
  if (r.HasChild("stft")) cfg.stft = StftFromReader(r.Child("stft"));
  if (r.HasChild("init")) cfg.init = InitFromReader(r.Child("init"), "init.");
  if (r.HasChild("em")) cfg.em = EmFromReader(r.Child("em"));
  if (r.HasChild("geometry")) {
    JsonReader g = r.Child("geometry");
    g.ExpectKeys({"mic_positions", "sound_velocity"});
    std::vector<std::vector<double>> mics;
    g.Get("mic_positions", &mics);
    for (std::size_t i = 0; i < mics.size(); ++i) {
      if (mics[i].size() != 3)
        throw covsep::ConfigError("geometry.mic_positions[" +
                                  std::to_string(i) +
                                  "]: expected 3 coordinates");
      cfg.geometry.mic_positions.push_back({mics[i][0], mics[i][1],
                                            mics[i][2]});
    }
    g.Get("sound_velocity", &cfg.geometry.sound_velocity);
  }
  r.Get("seed", &cfg.seed);
  return cfg;
}

// --------------------------------------------------------------------------
// Tensor packing for the checkpoint files.

covsep::TensorData RirTensor(const covsep::ImpulseResponseSet& rirs) {
  covsep::TensorData t;
  const auto J = static_cast<std::uint64_t>(rirs.num_sources());
  const auto L = static_cast<std::uint64_t>(rirs.num_taps());
  const auto I = static_cast<std::uint64_t>(rirs.num_mics());
  t.dims = {J, L, I};
  t.sample_rate = rirs.sample_rate;
  t.real.reserve(J * L * I);
  for (const auto& h : rirs.filters)
    for (Eigen::Index l = 0; l < h.rows(); ++l)
      for (Eigen::Index i = 0; i < h.cols(); ++i) t.real.push_back(h(l, i));
  return t;
}

covsep::TensorData VarianceTensor(const covsep::VarianceMap& v,
                                  double sample_rate) {
  covsep::TensorData t;
  const auto J = static_cast<std::uint64_t>(v.size());
  const auto F = J == 0 ? 0 : static_cast<std::uint64_t>(v[0].rows());
  const auto N = J == 0 ? 0 : static_cast<std::uint64_t>(v[0].cols());
  t.dims = {J, F, N};
  t.sample_rate = sample_rate;
  t.real.reserve(J * F * N);
  for (const auto& m : v)
    for (Eigen::Index f = 0; f < m.rows(); ++f)
      for (Eigen::Index n = 0; n < m.cols(); ++n) t.real.push_back(m(f, n));
  return t;
}

covsep::TensorData CovarianceTensor(const covsep::SpatialCovarianceSet& R,
                                    double sample_rate) {
  covsep::TensorData t;
  t.complex_valued = true;
  const auto J = static_cast<std::uint64_t>(R.num_sources());
  const auto F = static_cast<std::uint64_t>(R.num_bins());
  const auto I = static_cast<std::uint64_t>(R.num_channels());
  t.dims = {J, F, I, I};
  t.sample_rate = sample_rate;
  t.cplx.reserve(J * F * I * I);
  for (const auto& per_bin : R.R)
    for (const auto& m : per_bin)
      for (Eigen::Index r = 0; r < m.rows(); ++r)
        for (Eigen::Index c = 0; c < m.cols(); ++c) t.cplx.push_back(m(r, c));
  return t;
}

covsep::TensorData MixingTensor(const covsep::MixingVectorSet& H,
                                double sample_rate) {
  covsep::TensorData t;
  t.complex_valued = true;
  const auto F = static_cast<std::uint64_t>(H.num_bins());
  const auto I = static_cast<std::uint64_t>(H.num_channels());
  const auto J = static_cast<std::uint64_t>(H.num_sources());
  t.dims = {F, I, J};
  t.sample_rate = sample_rate;
  t.cplx.reserve(F * I * J);
  for (const auto& m : H.H)
    for (Eigen::Index i = 0; i < m.rows(); ++i)
      for (Eigen::Index j = 0; j < m.cols(); ++j) t.cplx.push_back(m(i, j));
  return t;
}

covsep::TensorData NoiseTensor(const std::vector<Eigen::VectorXd>& noise,
                               double sample_rate) {
  covsep::TensorData t;
  const auto F = static_cast<std::uint64_t>(noise.size());
  const auto I = F == 0 ? 0 : static_cast<std::uint64_t>(noise[0].size());
  t.dims = {F, I};
  t.sample_rate = sample_rate;
  for (const auto& d : noise)
    for (Eigen::Index i = 0; i < d.size(); ++i) t.real.push_back(d[i]);
  return t;
}

covsep::TensorData TraceTensor(const std::vector<double>& trace) {
  covsep::TensorData t;
  t.dims = {static_cast<std::uint64_t>(trace.size())};
  t.real = trace;
  return t;
}

// --------------------------------------------------------------------------
// Small output helpers.

std::string PathIn(const std::string& dir, const std::string& name) {
  return (fs::path(dir) / name).string();
}

void EnsureOutDir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw covsep::IoError("cannot create directory " + dir + ": " +
                                ec.message());
}

json ScoresToJson(const covsep::EvalScores& s) {
  return json{{"sdr", s.sdr}, {"isr", s.isr}, {"sir", s.sir}, {"sar", s.sar}};
}

json RowToJson(const covsep::ReportRow& row) {
  json per = json::array();
  for (const auto& s : row.per_source) per.push_back(ScoresToJson(s));
  return json{{"protocol", row.protocol}, {"condition", row.condition},
              {"model", row.model},       {"seed", row.seed},
              {"per_source", per},        {"mean", ScoresToJson(row.mean)},
              {"runtime_s", row.runtime_s},
              {"final_loglik", row.final_loglik},
              {"note", row.note}};
}

void WriteTextFile(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw covsep::IoError("cannot write " + path);
}

// --------------------------------------------------------------------------
// simulate

struct SimulateArgs {
  std::string config;
  std::string out_dir;
  std::vector<std::string> source_wavs;
  covsep::ScenarioConfig scenario;
  std::vector<double> room;
  bool pcm16 = false;

  CLI::Option* opt_sources = nullptr;
  CLI::Option* opt_mics = nullptr;
  CLI::Option* opt_duration = nullptr;
  CLI::Option* opt_rate = nullptr;
  CLI::Option* opt_t60 = nullptr;
  CLI::Option* opt_spacing = nullptr;
  CLI::Option* opt_distance = nullptr;
  CLI::Option* opt_span = nullptr;
  CLI::Option* opt_env_cutoff = nullptr;
  CLI::Option* opt_env_depth = nullptr;
  CLI::Option* opt_room = nullptr;
  CLI::Option* opt_seed = nullptr;
};

void RunSimulate(SimulateArgs* a) {
  covsep::ScenarioConfig cfg;
  if (!a->config.empty())
    cfg = ScenarioFromReader(JsonReader(LoadJsonFile(a->config), ""), "");

  covsep::ScenarioConfig& fl = a->scenario;  // flag values
  if (*a->opt_sources) cfg.num_sources = fl.num_sources;
  if (*a->opt_mics) cfg.num_mics = fl.num_mics;
  if (*a->opt_duration) cfg.duration_s = fl.duration_s;
  if (*a->opt_rate) cfg.sample_rate = fl.sample_rate;
  if (*a->opt_t60) cfg.t60 = fl.t60;
  if (*a->opt_spacing) cfg.mic_spacing = fl.mic_spacing;
  if (*a->opt_distance) cfg.source_distance = fl.source_distance;
  if (*a->opt_span) cfg.source_span = fl.source_span;
  if (*a->opt_env_cutoff) cfg.env_cutoff_hz = fl.env_cutoff_hz;
  if (*a->opt_env_depth) cfg.env_depth = fl.env_depth;
  if (*a->opt_room)
    cfg.room_dims = Eigen::Vector3d(a->room[0], a->room[1], a->room[2]);
  if (*a->opt_seed) cfg.seed = fl.seed;

  covsep::Scenario sc;
  if (a->source_wavs.empty()) {
    sc = covsep::BuildAmScenario(cfg);
  } else {
    std::vector<covsep::AudioBuffer> sources;
    Eigen::Index shortest = 0;
    for (const auto& path : a->source_wavs) {
      covsep::AudioBuffer s = covsep::ReadWav(path);
      if (s.num_channels() != 1)
        throw covsep::DimensionError("source " + path + ": must be mono");
      if (!sources.empty() && s.sample_rate != sources[0].sample_rate)
        throw covsep::FormatError("source " + path +
                                  ": sample rate differs from first source");
      shortest = sources.empty() ? s.num_samples()
                                 : std::min(shortest, s.num_samples());
      sources.push_back(std::move(s));
    }
    for (auto& s : sources) s.samples.conservativeResize(shortest, 1);
    cfg.num_sources = static_cast<int>(sources.size());
    cfg.sample_rate = sources[0].sample_rate;
    cfg.duration_s = static_cast<double>(shortest) / cfg.sample_rate;
    sc = covsep::RenderScenario(cfg, covsep::MakeLineArrayScene(cfg),
                                std::move(sources));
  }

  EnsureOutDir(a->out_dir);
  const covsep::WavFormat wav_fmt =
      a->pcm16 ? covsep::WavFormat::kPcm16 : covsep::WavFormat::kFloat32;
  covsep::WriteWav(PathIn(a->out_dir, "mixture.wav"), sc.mixture, wav_fmt);
  for (std::size_t j = 0; j < sc.images.size(); ++j) {
    covsep::WriteWav(PathIn(a->out_dir, "image_" + std::to_string(j) + ".wav"),
                     sc.images[j], wav_fmt);
    covsep::WriteWav(
        PathIn(a->out_dir, "source_" + std::to_string(j) + ".wav"),
        sc.sources[j], wav_fmt);
  }
  covsep::WriteTensor(PathIn(a->out_dir, "rirs.tensor"), RirTensor(sc.rirs));

  json scene;
  scene["room_dims"] = {sc.room.dims.x(), sc.room.dims.y(), sc.room.dims.z()};
  scene["t60"] = sc.room.t60;
  scene["sound_velocity"] = sc.room.sound_velocity;
  scene["sample_rate"] = cfg.sample_rate;
  scene["seed"] = cfg.seed;
  json mics = json::array(), srcs = json::array();
  for (const auto& p : sc.scene.mic_positions)
    mics.push_back({p.x(), p.y(), p.z()});
  for (const auto& p : sc.scene.source_positions)
    srcs.push_back({p.x(), p.y(), p.z()});
  scene["mic_positions"] = mics;
  scene["source_positions"] = srcs;
  WriteTextFile(PathIn(a->out_dir, "scene.json"), scene.dump(2) + "\n");

  std::printf(
      "simulate: %d sources, %d mics, %.2f s at %g Hz, T60 %g s -> %s\n",
      cfg.num_sources, cfg.num_mics, cfg.duration_s, cfg.sample_rate, cfg.t60,
      a->out_dir.c_str());
  std::printf("simulate: rir length %d taps\n", sc.rirs.num_taps());
}

// --------------------------------------------------------------------------
// separate

struct SeparateArgs {
  std::string mixture;
  std::string config;
  std::string out_dir;
  std::string model;
  std::vector<std::string> references;
  int num_sources = 2;
  int frame_size = 2048;
  int frame_shift = 0;
  int iterations = 10;
  int clusters = 30;
  std::uint64_t seed = 0;
  double velocity = 334.0;
  double mic_spacing = 0.2;
  bool pcm16 = false;

  CLI::Option* opt_model = nullptr;
  CLI::Option* opt_sources = nullptr;
  CLI::Option* opt_frame = nullptr;
  CLI::Option* opt_shift = nullptr;
  CLI::Option* opt_iterations = nullptr;
  CLI::Option* opt_clusters = nullptr;
  CLI::Option* opt_seed = nullptr;
  CLI::Option* opt_velocity = nullptr;
  CLI::Option* opt_spacing = nullptr;
};

void RunSeparate(SeparateArgs* a) {
  const covsep::AudioBuffer mixture = covsep::ReadWav(a->mixture);

  covsep::PipelineConfig cfg;
  cfg.num_channels = 0;  // the mixture defines the channel count
  bool rate_pinned = false;
  if (!a->config.empty()) {
    JsonReader r(LoadJsonFile(a->config), "");
    rate_pinned = r.HasChild("sample_rate");
    cfg = PipelineFromReader(r);
    if (!r.HasChild("num_channels")) cfg.num_channels = 0;
  }
  if (*a->opt_model) cfg.model = ModelFromString(a->model, "model");
  if (*a->opt_sources) cfg.num_sources = a->num_sources;
  if (*a->opt_frame) {
    cfg.stft.frame_size = a->frame_size;
    if (!*a->opt_shift) cfg.stft.frame_shift = a->frame_size / 2;
  }
  if (*a->opt_shift) cfg.stft.frame_shift = a->frame_shift;
  if (*a->opt_iterations) cfg.em.iterations = a->iterations;
  if (*a->opt_clusters) cfg.init.cluster_threshold = a->clusters;
  if (*a->opt_seed) cfg.seed = a->seed;
  if (*a->opt_velocity) cfg.geometry.sound_velocity = a->velocity;

  if (rate_pinned && cfg.sample_rate != mixture.sample_rate) {
    std::ostringstream msg;
    msg << "sample_rate: config says " << cfg.sample_rate
        << " Hz but the mixture is at " << mixture.sample_rate << " Hz";
    throw covsep::ConfigError(msg.str());
  }
  cfg.sample_rate = mixture.sample_rate;

  // Alignment needs microphone coordinates. Without a configured array we
  // assume a uniform line along x; only relative positions matter.
  if (cfg.geometry.mic_positions.empty()) {
    const int num_mics = static_cast<int>(mixture.num_channels());
    for (int i = 0; i < num_mics; ++i)
      cfg.geometry.mic_positions.push_back(
          {a->mic_spacing * (i - 0.5 * (num_mics - 1)), 0.0, 0.0});
  } else if (*a->opt_spacing) {
    throw covsep::ConfigError(
        "--mic-spacing: conflicts with geometry.mic_positions in the config");
  }

  covsep::SeparationResult res;
  if (!a->references.empty()) {
    if (static_cast<int>(a->references.size()) != cfg.num_sources)
      throw covsep::DimensionError(
          "separate: " + std::to_string(a->references.size()) +
          " reference images for " + std::to_string(cfg.num_sources) +
          " sources");
    std::vector<covsep::TfTensor> images;
    for (const auto& path : a->references) {
      covsep::AudioBuffer img = covsep::ReadWav(path);
      if (img.num_channels() != mixture.num_channels() ||
          img.sample_rate != mixture.sample_rate)
        throw covsep::DimensionError("reference " + path +
                                     ": shape or rate differs from mixture");
      images.push_back(covsep::Stft(img, cfg.stft));
    }
    const auto fit = covsep::EmpiricalCovarianceMl(images, cfg.em);
    res = covsep::SeparateSemiblind(mixture, fit.R, cfg);
    std::printf("separate: semi-blind, covariances fit on %zu images\n",
                images.size());
  } else {
    res = covsep::SeparateBlind(mixture, cfg);
  }

  EnsureOutDir(a->out_dir);
  const covsep::WavFormat wav_fmt =
      a->pcm16 ? covsep::WavFormat::kPcm16 : covsep::WavFormat::kFloat32;
  for (std::size_t j = 0; j < res.images.size(); ++j)
    covsep::WriteWav(
        PathIn(a->out_dir, "estimate_" + std::to_string(j) + ".wav"),
        res.images[j], wav_fmt);

  const double rate = mixture.sample_rate;
  covsep::WriteTensor(PathIn(a->out_dir, "variances.tensor"),
                      VarianceTensor(res.v, rate));
  if (res.R.num_sources() > 0)
    covsep::WriteTensor(PathIn(a->out_dir, "covariances.tensor"),
                        CovarianceTensor(res.R, rate));
  if (res.H.num_bins() > 0) {
    covsep::WriteTensor(PathIn(a->out_dir, "mixing.tensor"),
                        MixingTensor(res.H, rate));
    covsep::WriteTensor(PathIn(a->out_dir, "noise.tensor"),
                        NoiseTensor(res.noise, rate));
  }
  covsep::WriteTensor(PathIn(a->out_dir, "loglik.tensor"),
                      TraceTensor(res.loglik));

  const int fallbacks = static_cast<int>(
      std::count(res.fallback_bins.begin(), res.fallback_bins.end(), 1));
  std::printf("separate: model %s, %d sources, %zu estimates -> %s\n",
              covsep::ModelKindName(cfg.model).c_str(), cfg.num_sources,
              res.images.size(), a->out_dir.c_str());
  if (!res.loglik.empty())
    std::printf("separate: final log-likelihood %.6g after %zu iterations\n",
                res.loglik.back(), res.loglik.size() - 1);
  if (fallbacks > 0)
    std::printf(
        "separate: clustering fell back to a neighbor bin in %d of %zu "
        "bins\n",
        fallbacks, res.fallback_bins.size());
  std::printf("separate: permutation alignment %s\n",
              res.aligned ? "applied" : "skipped");
}

// --------------------------------------------------------------------------
// evaluate

struct EvaluateArgs {
  std::vector<std::string> estimates;
  std::vector<std::string> references;
  std::string json_out;
  std::string tsv_out;
  covsep::EvalOptions options;
};

void RunEvaluate(EvaluateArgs* a) {
  if (a->estimates.size() != a->references.size())
    throw covsep::DimensionError(
        "evaluate: " + std::to_string(a->estimates.size()) +
        " estimates for " + std::to_string(a->references.size()) +
        " references");

  std::vector<covsep::AudioBuffer> est, ref;
  for (const auto& p : a->estimates) est.push_back(covsep::ReadWav(p));
  for (const auto& p : a->references) ref.push_back(covsep::ReadWav(p));
  const covsep::EvalReport report =
      covsep::BssEvalImages(est, ref, a->options);

  std::ostringstream tsv;
  tsv << "source\testimate\tsdr\tisr\tsir\tsar\n";
  covsep::EvalScores mean;
  char buf[128];
  for (std::size_t j = 0; j < report.scores.size(); ++j) {
    const covsep::EvalScores& s = report.scores[j];
    std::snprintf(buf, sizeof(buf), "%.6f\t%.6f\t%.6f\t%.6f", s.sdr, s.isr,
                  s.sir, s.sar);
    tsv << a->references[j] << '\t'
        << a->estimates[static_cast<std::size_t>(report.matching[j])] << '\t'
        << buf << '\n';
    mean.sdr += s.sdr;
    mean.isr += s.isr;
    mean.sir += s.sir;
    mean.sar += s.sar;
  }
  const double count = static_cast<double>(report.scores.size());
  mean.sdr /= count;
  mean.isr /= count;
  mean.sir /= count;
  mean.sar /= count;
  std::snprintf(buf, sizeof(buf), "%.6f\t%.6f\t%.6f\t%.6f", mean.sdr,
                mean.isr, mean.sir, mean.sar);
  tsv << "mean\t-\t" << buf << '\n';

  std::fputs(tsv.str().c_str(), stdout);
  if (!a->tsv_out.empty()) WriteTextFile(a->tsv_out, tsv.str());

  if (!a->json_out.empty()) {
    json out;
    out["filter_taps"] = a->options.filter_taps;
    out["best_permutation"] = a->options.best_permutation;
    json sources = json::array();
    for (std::size_t j = 0; j < report.scores.size(); ++j) {
      json rec = ScoresToJson(report.scores[j]);
      rec["reference"] = a->references[j];
      rec["estimate"] =
          a->estimates[static_cast<std::size_t>(report.matching[j])];
      sources.push_back(rec);
    }
    out["sources"] = sources;
    out["mean"] = ScoresToJson(mean);
    WriteTextFile(a->json_out, out.dump(2) + "\n");
  }
}

// --------------------------------------------------------------------------
// experiment

struct ExperimentArgs {
  std::string protocol;
  std::string config;
  std::string out_dir;
  std::vector<std::uint64_t> seeds;
  double duration_s = 10.0;
  double t60 = 0.25;
  int iterations = 10;

  CLI::Option* opt_seeds = nullptr;
  CLI::Option* opt_duration = nullptr;
  CLI::Option* opt_t60 = nullptr;
  CLI::Option* opt_iterations = nullptr;
};

covsep::ExperimentReport RunProtocol(ExperimentArgs* a) {
  json cfg_json = json::object();
  if (!a->config.empty()) cfg_json = LoadJsonFile(a->config);
  JsonReader root(cfg_json, "");

  auto scenario_of = [&](const JsonReader& r) {
    covsep::ScenarioConfig sc;
    if (r.HasChild("scenario"))
      sc = ScenarioFromReader(r.Child("scenario"), "scenario.");
    if (*a->opt_duration) sc.duration_s = a->duration_s;
    if (*a->opt_t60) sc.t60 = a->t60;
    return sc;
  };
  auto seeds_of = [&](const JsonReader& r,
                      std::vector<std::uint64_t> fallback) {
    std::vector<std::uint64_t> seeds = std::move(fallback);
    r.Get("seeds", &seeds);
    if (*a->opt_seeds) seeds = a->seeds;
    if (seeds.empty()) throw covsep::ConfigError("seeds: must be nonempty");
    return seeds;
  };
  auto em_of = [&](const JsonReader& r) {
    covsep::EmConfig em;
    if (r.HasChild("em")) em = EmFromReader(r.Child("em"));
    if (*a->opt_iterations) em.iterations = a->iterations;
    return em;
  };

  if (a->protocol == "semiblind") {
    covsep::SemiblindProtocolConfig cfg;
    root.ExpectKeys({"scenario", "seeds", "stft", "em", "eval", "kinds",
                     "include_baselines"});
    cfg.scenario = scenario_of(root);
    cfg.seeds = seeds_of(root, cfg.seeds);
    if (root.HasChild("stft")) cfg.stft = StftFromReader(root.Child("stft"));
    cfg.em = em_of(root);
    if (root.HasChild("eval")) cfg.eval = EvalFromReader(root.Child("eval"));
    cfg.kinds = ModelsFromReader(root, "kinds", "", cfg.kinds);
    root.Get("include_baselines", &cfg.include_baselines);
    return covsep::RunSemiblindProtocol(cfg);
  }
  if (a->protocol == "t60_sweep") {
    covsep::T60SweepConfig cfg;
    root.ExpectKeys({"scenario", "t60s", "seeds", "stft", "em", "init",
                     "eval", "models"});
    cfg.scenario = scenario_of(root);
    root.Get("t60s", &cfg.t60s);
    cfg.seeds = seeds_of(root, cfg.seeds);
    if (root.HasChild("stft")) cfg.stft = StftFromReader(root.Child("stft"));
    cfg.em = em_of(root);
    if (root.HasChild("init"))
      cfg.init = InitFromReader(root.Child("init"), "init.");
    if (root.HasChild("eval")) cfg.eval = EvalFromReader(root.Child("eval"));
    cfg.models = ModelsFromReader(root, "models", "", cfg.models);
    return covsep::RunT60Sweep(cfg);
  }
  if (a->protocol == "movement") {
    covsep::MovementProtocolConfig cfg;
    root.ExpectKeys({"scenario", "angles_deg", "seeds", "stft", "em", "eval",
                     "models", "moved_source"});
    cfg.scenario = scenario_of(root);
    root.Get("angles_deg", &cfg.angles_deg);
    cfg.seeds = seeds_of(root, cfg.seeds);
    if (root.HasChild("stft")) cfg.stft = StftFromReader(root.Child("stft"));
    cfg.em = em_of(root);
    if (root.HasChild("eval")) cfg.eval = EvalFromReader(root.Child("eval"));
    cfg.models = ModelsFromReader(root, "models", "", cfg.models);
    root.Get("moved_source", &cfg.moved_source);
    return covsep::RunMovementProtocol(cfg);
  }
  throw covsep::ConfigError("protocol: unknown protocol '" + a->protocol +
                            "' (semiblind, t60_sweep, movement)");
}

void RunExperiment(ExperimentArgs* a) {
  const covsep::ExperimentReport report = RunProtocol(a);

  EnsureOutDir(a->out_dir);
  std::ostringstream tsv;
  covsep::WriteReportTsv(report, tsv);
  WriteTextFile(PathIn(a->out_dir, "report.tsv"), tsv.str());

  json rows = json::array();
  for (const auto& row : report.rows) rows.push_back(RowToJson(row));
  WriteTextFile(PathIn(a->out_dir, "report.json"),
                json{{"protocol", a->protocol}, {"rows", rows}}.dump(2) +
                    "\n");

  // Condition x model means, in first-appearance order.
  std::vector<std::pair<std::string, std::string>> order;
  std::map<std::pair<std::string, std::string>, std::pair<double, int>> acc;
  for (const auto& row : report.rows) {
    if (row.note.rfind("error", 0) == 0) {
      std::printf("experiment: %s %s seed %llu failed: %s\n",
                  row.condition.c_str(), row.model.c_str(),
                  static_cast<unsigned long long>(row.seed),
                  row.note.c_str());
      continue;
    }
    auto key = std::make_pair(row.condition, row.model);
    if (acc.find(key) == acc.end()) order.push_back(key);
    auto& slot = acc[key];
    slot.first += row.mean.sdr;
    slot.second += 1;
  }
  for (const auto& key : order) {
    const auto& slot = acc[key];
    std::printf("experiment: %-14s %-24s mean sdr %7.3f dB over %d seeds\n",
                key.first.c_str(), key.second.c_str(),
                slot.first / slot.second, slot.second);
  }
  std::printf("experiment: %zu rows -> %s\n", report.rows.size(),
              a->out_dir.c_str());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "covsep: under-determined reverberant source separation with full-rank "
      "spatial covariance models"};
  app.require_subcommand(1);

  SimulateArgs sim;
  CLI::App* s = app.add_subcommand(
      "simulate", "Render a simulated scene to mixture and image WAVs");
  s->add_option("--config", sim.config, "Scenario config JSON")
      ->check(CLI::ExistingFile);
  s->add_option("--out", sim.out_dir, "Output directory")->required();
  s->add_option("--source", sim.source_wavs,
                "Dry source WAVs (mono; default: generated AM noise)")
      ->check(CLI::ExistingFile);
  sim.opt_sources =
      s->add_option("--sources", sim.scenario.num_sources, "Source count");
  sim.opt_mics =
      s->add_option("--mics", sim.scenario.num_mics, "Microphone count");
  sim.opt_duration = s->add_option("--duration", sim.scenario.duration_s,
                                   "Duration in seconds");
  sim.opt_rate =
      s->add_option("--rate", sim.scenario.sample_rate, "Sample rate in Hz");
  sim.opt_t60 =
      s->add_option("--t60", sim.scenario.t60, "Reverberation time in s");
  sim.opt_spacing = s->add_option("--spacing", sim.scenario.mic_spacing,
                                  "Microphone spacing in m");
  sim.opt_distance = s->add_option("--distance", sim.scenario.source_distance,
                                   "Source line distance in m");
  sim.opt_span = s->add_option("--span", sim.scenario.source_span,
                               "Lateral source span in m");
  sim.opt_env_cutoff =
      s->add_option("--env-cutoff", sim.scenario.env_cutoff_hz,
                    "Source amplitude-envelope cutoff in Hz");
  sim.opt_env_depth = s->add_option("--env-depth", sim.scenario.env_depth,
                                    "Source amplitude-envelope depth");
  sim.opt_room =
      s->add_option("--room", sim.room, "Room dimensions x y z in m")
          ->expected(3);
  sim.opt_seed = s->add_option("--seed", sim.scenario.seed, "Scenario seed");
  s->add_flag("--pcm16", sim.pcm16, "Write 16-bit PCM instead of float32");
  s->callback([&sim] { RunSimulate(&sim); });

  SeparateArgs sep;
  CLI::App* p = app.add_subcommand(
      "separate", "Separate a mixture WAV into source image estimates");
  p->add_option("--mixture", sep.mixture, "Mixture WAV")
      ->required()
      ->check(CLI::ExistingFile);
  p->add_option("--out", sep.out_dir, "Output directory")->required();
  p->add_option("--config", sep.config, "Pipeline config JSON")
      ->check(CLI::ExistingFile);
  sep.opt_model = p->add_option(
      "--model", sep.model,
      "Spatial model kind (rank1_convolutive or fullrank_unconstrained for "
      "blind runs; any kind semi-blind)");
  sep.opt_sources =
      p->add_option("--sources", sep.num_sources, "Number of sources");
  sep.opt_frame =
      p->add_option("--frame", sep.frame_size, "STFT frame size in samples");
  sep.opt_shift = p->add_option("--shift", sep.frame_shift,
                                "STFT frame shift (default frame/2)");
  sep.opt_iterations =
      p->add_option("--iterations", sep.iterations, "EM iterations");
  sep.opt_clusters = p->add_option("--clusters", sep.clusters,
                                   "Agglomerative cluster threshold");
  sep.opt_seed = p->add_option("--seed", sep.seed, "Pipeline seed");
  sep.opt_velocity =
      p->add_option("--velocity", sep.velocity, "Sound velocity in m/s");
  sep.opt_spacing = p->add_option(
      "--mic-spacing", sep.mic_spacing,
      "Assumed line-array spacing when the config gives no geometry");
  p->add_option("--reference", sep.references,
                "True image WAVs: fit covariances on them (semi-blind)")
      ->check(CLI::ExistingFile);
  p->add_flag("--pcm16", sep.pcm16, "Write 16-bit PCM instead of float32");
  p->callback([&sep] { RunSeparate(&sep); });

  EvaluateArgs ev;
  CLI::App* e = app.add_subcommand(
      "evaluate", "Score estimated images against reference images");
  e->add_option("--estimate", ev.estimates, "Estimated image WAVs")
      ->required()
      ->check(CLI::ExistingFile);
  e->add_option("--reference", ev.references, "Reference image WAVs")
      ->required()
      ->check(CLI::ExistingFile);
  e->add_option("--taps", ev.options.filter_taps,
                "Allowed distortion filter length");
  e->add_flag("--best-permutation", ev.options.best_permutation,
              "Score under the best source-estimate pairing");
  e->add_option("--json", ev.json_out, "Write a JSON report here");
  e->add_option("--tsv", ev.tsv_out, "Write the TSV table here too");
  e->callback([&ev] { RunEvaluate(&ev); });

  ExperimentArgs ex;
  CLI::App* x = app.add_subcommand(
      "experiment", "Run a full protocol and write report.tsv/report.json");
  x->add_option("--protocol", ex.protocol,
                "semiblind | t60_sweep | movement")
      ->required();
  x->add_option("--config", ex.config, "Protocol config JSON")
      ->check(CLI::ExistingFile);
  x->add_option("--out", ex.out_dir, "Output directory")->required();
  ex.opt_seeds = x->add_option("--seeds", ex.seeds, "Scenario seeds");
  ex.opt_duration =
      x->add_option("--duration", ex.duration_s, "Scenario duration in s");
  ex.opt_t60 = x->add_option("--t60", ex.t60, "Scenario T60 in s");
  ex.opt_iterations =
      x->add_option("--iterations", ex.iterations, "EM iterations");
  x->callback([&ex] { RunExperiment(&ex); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    return app.exit(err);
  } catch (const covsep::Error& err) {
    std::fprintf(stderr, "covsep: %s\n", err.what());
    return 1;
  } catch (const std::exception& err) {
    std::fprintf(stderr, "covsep: unexpected error: %s\n", err.what());
    return 1;
  }
  return 0;
}
