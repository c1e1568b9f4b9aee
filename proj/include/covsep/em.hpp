// covsep/em.hpp

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

// Expectation-maximization for the local Gaussian mixing model, in two
// flavors: a rank-1 parameterization with additive noise (mixing vectors
// h_j(f), diagonal noise covariance) and a full-rank parameterization
// (spatial covariances R_j(f), no noise term).  Both run independently per
// frequency bin.

#ifndef COVSEP_EM_HPP_
#define COVSEP_EM_HPP_

#include <algorithm>
#include <cstdint>
#include <vector>

#include "covsep/common.hpp"
#include "covsep/spatial.hpp"
#include "covsep/stft.hpp"

namespace covsep {

struct EmConfig {
  int iterations = 10;
  double ridge = kDefaultRidge;
  // Source-variance floor, relative to the mean mixture power per entry.
  double variance_floor_scale = 1e-10;
  // Rank-1 noise covariance: init relative to per-channel power in the bin,
  // floor relative to global mean power.
  double noise_init_scale = 1e-4;
  double noise_floor_scale = 1e-8;
  int num_threads = 0;  // 0: hardware default

  void Validate() const {
    if (iterations < 0) throw ConfigError("em.iterations: must be >= 0");
    if (ridge < 0.0) throw ConfigError("em.ridge: must be >= 0");
    if (variance_floor_scale <= 0.0)
      throw ConfigError("em.variance_floor_scale: must be > 0");
  }
};

// Mean per-entry mixture power, the scale reference for all floors.
inline double MeanMixturePower(const TfTensor& x) {
  double sum = 0.0;
  std::int64_t count = 0;
  for (const auto& bin : x.bins) {
    sum += bin.squaredNorm();
    count += bin.size();
  }
  if (count == 0) throw DimensionError("mixture: empty tensor");
  double mean = sum / static_cast<double>(count);
  if (mean <= 0.0)
    throw DomainError("mixture: all-zero signal");
  return mean;
}

// Variance initialization by projecting frames onto the mixing directions:
// v_j(n,f) = |h_j(f)^H x(n,f)|^2 / ||h_j(f)||^4, floored.
inline VarianceMap InitVariancesFromMixing(const TfTensor& x,
                                           const MixingVectorSet& h,
                                           double floor) {
  const int F = x.num_bins();
  const int N = x.num_frames();
  const int J = h.num_sources();
  if (static_cast<int>(h.H.size()) != F)
    throw DimensionError("variance init: bin count mismatch");
  VarianceMap v(J, Eigen::MatrixXd::Constant(F, N, floor));
  for (int f = 0; f < F; ++f) {
    for (int j = 0; j < J; ++j) {
      Eigen::VectorXcd hj = h.H[f].col(j);
      double g = hj.squaredNorm();
      if (g <= 0.0) continue;  // silent direction keeps the floor
      for (int n = 0; n < N; ++n) {
        double p = std::norm(hj.dot(x.bins[f].col(n))) / (g * g);
        v[j](f, n) = std::max(floor, p);
      }
    }
  }
  return v;
}

// Same projection heuristic for full-rank initializers, using the scaled
// principal eigenvector of each R_j(f) as the direction.
inline VarianceMap InitVariancesFromCovariance(const TfTensor& x,
                                               const SpatialCovarianceSet& R,
                                               double floor) {
  const int F = x.num_bins();
  const int J = R.num_sources();
  MixingVectorSet h;
  h.H.assign(F, Eigen::MatrixXcd::Zero(x.num_channels(), J));
  for (int f = 0; f < F; ++f)
    for (int j = 0; j < J; ++j) {
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(R.R[j][f]);
      int top = static_cast<int>(eig.eigenvalues().size()) - 1;
      double lam = std::max(0.0, eig.eigenvalues()[top]);
      h.H[f].col(j) = eig.eigenvectors().col(top) * std::sqrt(lam);
    }
  return InitVariancesFromMixing(x, h, floor);
}

namespace em_detail {

// ---------------------------------------------------------------------------
// Rank-1 model with additive noise:  x = H s + b,
// s_j ~ CN(0, v_j(n)), b ~ CN(0, diag(rb)).

struct Rank1BinState {
  Eigen::MatrixXcd H;    // I x J
  Eigen::VectorXd rb;    // I, diagonal noise variances
  Eigen::MatrixXd v;     // J x N
  Eigen::VectorXd rb_floor;  // I
  double v_floor = 0.0;
  double ridge = kDefaultRidge;
};

inline Eigen::MatrixXcd Rank1MixtureCov(const Rank1BinState& s, int n) {
  Eigen::MatrixXcd rx =
      s.H * s.v.col(n).asDiagonal() * s.H.adjoint();
  rx += s.rb.asDiagonal();
  return Hermitize(rx);
}

// Cholesky with a ridge retry.  The noise floor keeps the rank-1 mixture
// covariance positive definite, so the plain factorization is the common
// path; ridging unconditionally would pump its mass into the noise estimate
// one iteration at a time.
inline Eigen::LLT<Eigen::MatrixXcd> CholeskyWithRetry(
    const Eigen::MatrixXcd& rx, double ridge, const char* what) {
  Eigen::LLT<Eigen::MatrixXcd> llt(rx);
  if (llt.info() == Eigen::Success) return llt;
  llt.compute(RidgeRegularize(rx, ridge));
  if (llt.info() != Eigen::Success) throw NumericalError(what);
  return llt;
}

inline double Rank1BinLogLikelihood(const Rank1BinState& s,
                                    const Eigen::MatrixXcd& x_bin) {
  const int I = static_cast<int>(x_bin.rows());
  const int N = static_cast<int>(x_bin.cols());
  double total = 0.0;
  for (int n = 0; n < N; ++n) {
    Eigen::LLT<Eigen::MatrixXcd> llt = CholeskyWithRetry(
        Rank1MixtureCov(s, n), s.ridge,
        "rank-1 likelihood: covariance not positive");
    double logdet = 0.0;
    for (int i = 0; i < I; ++i)
      logdet += 2.0 * std::log(std::real(llt.matrixL()(i, i)));
    Eigen::VectorXcd col = x_bin.col(n);
    double quad = std::real(col.dot(llt.solve(col)));
    total += -static_cast<double>(I) * std::log(kPi) - logdet - quad;
  }
  return total;
}

// One EM iteration on a single bin.  E-step statistics are computed with the
// incoming parameters; the M-step updates v per frame from the posterior
// second moment, then H and rb from time-averaged accumulators.
inline void EmRank1IterateBin(Rank1BinState* s, const Eigen::MatrixXcd& x_bin) {
  const int I = static_cast<int>(x_bin.rows());
  const int J = static_cast<int>(s->H.cols());
  const int N = static_cast<int>(x_bin.cols());

  Eigen::MatrixXcd rss_acc = Eigen::MatrixXcd::Zero(J, J);
  Eigen::MatrixXcd rxs_acc = Eigen::MatrixXcd::Zero(I, J);
  Eigen::MatrixXcd rxx_acc = Eigen::MatrixXcd::Zero(I, I);
  Eigen::MatrixXd v_new(J, N);

  for (int n = 0; n < N; ++n) {
    Eigen::VectorXcd xn = x_bin.col(n);
    Eigen::LLT<Eigen::MatrixXcd> llt =
        CholeskyWithRetry(Rank1MixtureCov(*s, n), s->ridge,
                          "rank-1 E-step: covariance not positive");
    // W = R_s H^H R_x^{-1}, as J x I
    Eigen::MatrixXcd w =
        s->v.col(n).asDiagonal() *
        (s->H.adjoint() * llt.solve(Eigen::MatrixXcd::Identity(I, I)));
    Eigen::VectorXcd shat = w * xn;
    Eigen::MatrixXcd rss = shat * shat.adjoint();
    rss += (Eigen::MatrixXcd::Identity(J, J) - w * s->H) *
           Eigen::MatrixXcd(s->v.col(n).cast<Complex>().asDiagonal());
    rss = Hermitize(rss);
    for (int j = 0; j < J; ++j)
      v_new(j, n) = std::max(s->v_floor, std::real(rss(j, j)));
    rss_acc += rss;
    rxs_acc += xn * shat.adjoint();
    rxx_acc += xn * xn.adjoint();
  }

  const double inv_n = 1.0 / static_cast<double>(N);
  rss_acc *= inv_n;
  rxs_acc *= inv_n;
  rxx_acc *= inv_n;

  Eigen::MatrixXcd h_new;
  Eigen::LLT<Eigen::MatrixXcd> llt(Hermitize(rss_acc));
  if (llt.info() == Eigen::Success) {
    h_new = llt.solve(rxs_acc.adjoint()).adjoint();
  } else {
    Eigen::MatrixXcd ridged = RidgeRegularize(Hermitize(rss_acc), s->ridge);
    Eigen::LLT<Eigen::MatrixXcd> retry(ridged);
    if (retry.info() != Eigen::Success)
      throw NumericalError("rank-1 M-step: singular source moment");
    h_new = retry.solve(rxs_acc.adjoint()).adjoint();
  }

  Eigen::MatrixXcd resid = rxx_acc - h_new * rxs_acc.adjoint() -
                           rxs_acc * h_new.adjoint() +
                           h_new * rss_acc * h_new.adjoint();
  for (int i = 0; i < I; ++i)
    s->rb[i] = std::max(s->rb_floor[i], std::real(resid(i, i)));

  // Scale indeterminacy: renormalize columns to unit norm, folding the gain
  // into the variances.  Leaves H diag(v) H^H unchanged.
  for (int j = 0; j < J; ++j) {
    double g = h_new.col(j).norm();
    if (g > 0.0) {
      h_new.col(j) /= g;
      v_new.row(j) *= g * g;
    }
  }
  for (int j = 0; j < J; ++j)
    for (int n = 0; n < N; ++n)
      v_new(j, n) = std::max(s->v_floor, v_new(j, n));

  s->H = h_new;
  s->v = v_new;
}

// ---------------------------------------------------------------------------
// Full-rank model:  x = sum_j c_j,  c_j ~ CN(0, v_j(n) R_j).

struct FullRankBinState {
  std::vector<Eigen::MatrixXcd> R;  // J entries, I x I
  Eigen::MatrixXd v;                // J x N
  double v_floor = 0.0;
  double ridge = kDefaultRidge;
  bool update_R = true;
  bool renormalize_trace = true;
};

inline double FullRankBinLogLikelihood(const FullRankBinState& s,
                                       const Eigen::MatrixXcd& x_bin) {
  const int I = static_cast<int>(x_bin.rows());
  const int J = static_cast<int>(s.R.size());
  const int N = static_cast<int>(x_bin.cols());
  double total = 0.0;
  for (int n = 0; n < N; ++n) {
    Eigen::MatrixXcd rx = Eigen::MatrixXcd::Zero(I, I);
    for (int j = 0; j < J; ++j) rx += s.v(j, n) * s.R[j];
    rx = RidgeRegularize(Hermitize(rx), s.ridge);
    Eigen::LLT<Eigen::MatrixXcd> llt(rx);
    if (llt.info() != Eigen::Success)
      throw NumericalError("full-rank likelihood: covariance not positive");
    double logdet = 0.0;
    for (int i = 0; i < I; ++i)
      logdet += 2.0 * std::log(std::real(llt.matrixL()(i, i)));
    Eigen::VectorXcd col = x_bin.col(n);
    double quad = std::real(col.dot(llt.solve(col)));
    total += -static_cast<double>(I) * std::log(kPi) - logdet - quad;
  }
  return total;
}

// Posterior statistics of the source images at one frame: means chat_j and
// second moments rhat_j.  The ridge mass is split equally across sources so
// that the gains sum to the identity exactly and sum_j chat_j = x holds to
// machine precision.
struct FullRankPosterior {
  std::vector<Eigen::VectorXcd> chat;
  std::vector<Eigen::MatrixXcd> rhat;
};

inline FullRankPosterior FullRankEStepFrame(
    const std::vector<Eigen::MatrixXcd>& R, const Eigen::VectorXd& v,
    const Eigen::VectorXcd& xn, double ridge) {
  const int I = static_cast<int>(xn.size());
  const int J = static_cast<int>(R.size());
  const Eigen::MatrixXcd eye = Eigen::MatrixXcd::Identity(I, I);
  Eigen::MatrixXcd rx = Eigen::MatrixXcd::Zero(I, I);
  for (int j = 0; j < J; ++j) rx += v[j] * R[j];
  rx = Hermitize(rx);
  double scale = std::real(rx.trace()) / I;
  if (scale <= 0.0) scale = 1.0;
  const double eps = ridge * scale;
  Eigen::MatrixXcd rx_inv = (rx + eps * eye).llt().solve(eye);

  FullRankPosterior post;
  post.chat.resize(J);
  post.rhat.resize(J);
  for (int j = 0; j < J; ++j) {
    Eigen::MatrixXcd rc = v[j] * R[j] + (eps / J) * eye;
    Eigen::MatrixXcd w = rc * rx_inv;
    post.chat[j] = w * xn;
    post.rhat[j] =
        Hermitize(post.chat[j] * post.chat[j].adjoint() + (eye - w) * rc);
  }
  return post;
}

// One EM iteration on a single bin.  The variance update uses the incoming
// R_j; the covariance update then uses the fresh variances.
inline void EmFullRankIterateBin(FullRankBinState* s,
                                 const Eigen::MatrixXcd& x_bin) {
  const int I = static_cast<int>(x_bin.rows());
  const int J = static_cast<int>(s->R.size());
  const int N = static_cast<int>(x_bin.cols());
  const Eigen::MatrixXcd eye = Eigen::MatrixXcd::Identity(I, I);

  // Inverses of the incoming R_j drive the variance update below.
  std::vector<Eigen::MatrixXcd> r_inv(J);
  for (int j = 0; j < J; ++j)
    r_inv[j] = RidgeRegularize(s->R[j], s->ridge).llt().solve(eye);

  std::vector<Eigen::MatrixXcd> r_acc(J, Eigen::MatrixXcd::Zero(I, I));
  for (int n = 0; n < N; ++n) {
    FullRankPosterior post =
        FullRankEStepFrame(s->R, s->v.col(n), x_bin.col(n), s->ridge);
    for (int j = 0; j < J; ++j) {
      double v_next =
          std::max(s->v_floor,
                   std::real((r_inv[j] * post.rhat[j]).trace()) / I);
      s->v(j, n) = v_next;
      if (s->update_R) r_acc[j] += post.rhat[j] / v_next;
    }
  }

  if (!s->update_R) return;
  for (int j = 0; j < J; ++j) {
    Eigen::MatrixXcd r_new = Hermitize(r_acc[j] / static_cast<double>(N));
    if (s->renormalize_trace) {
      double tr = std::real(r_new.trace());
      if (tr > 0.0) {
        double gain = tr / I;
        r_new /= gain;
        s->v.row(j) *= gain;
        for (int n = 0; n < N; ++n)
          s->v(j, n) = std::max(s->v_floor, s->v(j, n));
      }
    }
    s->R[j] = r_new;
  }
}

}  // namespace em_detail

// ---------------------------------------------------------------------------
// Whole-tensor drivers.  loglik holds the objective at initialization
// followed by one entry per iteration (so `iterations + 1` values).

struct Rank1RunResult {
  MixingVectorSet H;
  std::vector<Eigen::VectorXd> noise;  // per bin, per-channel variances
  VarianceMap v;
  std::vector<double> loglik;
};

inline Rank1RunResult EmRank1Run(const TfTensor& x,
                                 const MixingVectorSet& h_init,
                                 const EmConfig& cfg) {
  cfg.Validate();
  const int F = x.num_bins();
  const int I = x.num_channels();
  const int N = x.num_frames();
  const int J = h_init.num_sources();
  if (static_cast<int>(h_init.H.size()) != F)
    throw DimensionError("em: initializer bin count mismatch");

  const double mean_power = MeanMixturePower(x);
  const double v_floor = cfg.variance_floor_scale * mean_power;
  VarianceMap v0 = InitVariancesFromMixing(x, h_init, v_floor);

  std::vector<em_detail::Rank1BinState> states(F);
  for (int f = 0; f < F; ++f) {
    auto& s = states[f];
    s.H = h_init.H[f];
    s.v.resize(J, N);
    for (int j = 0; j < J; ++j)
      for (int n = 0; n < N; ++n) s.v(j, n) = v0[j](f, n);
    s.rb_floor =
        Eigen::VectorXd::Constant(I, cfg.noise_floor_scale * mean_power);
    s.rb.resize(I);
    for (int i = 0; i < I; ++i) {
      double p = x.bins[f].row(i).squaredNorm() / std::max(1, N);
      s.rb[i] = std::max(s.rb_floor[i], cfg.noise_init_scale * p);
    }
    s.v_floor = v_floor;
    s.ridge = cfg.ridge;
  }

  std::vector<std::vector<double>> traces(
      F, std::vector<double>(cfg.iterations + 1, 0.0));
  ParallelFor(
      0, F,
      [&](int f) {
        auto& s = states[f];
        traces[f][0] = em_detail::Rank1BinLogLikelihood(s, x.bins[f]);
        for (int it = 1; it <= cfg.iterations; ++it) {
          em_detail::EmRank1IterateBin(&s, x.bins[f]);
          traces[f][it] = em_detail::Rank1BinLogLikelihood(s, x.bins[f]);
        }
      },
      cfg.num_threads);

  Rank1RunResult out;
  out.H.H.resize(F);
  out.noise.resize(F);
  out.v.assign(J, Eigen::MatrixXd::Zero(F, N));
  out.loglik.assign(cfg.iterations + 1, 0.0);
  for (int f = 0; f < F; ++f) {
    out.H.H[f] = states[f].H;
    out.noise[f] = states[f].rb;
    for (int j = 0; j < J; ++j)
      for (int n = 0; n < N; ++n) out.v[j](f, n) = states[f].v(j, n);
    for (int it = 0; it <= cfg.iterations; ++it)
      out.loglik[it] += traces[f][it];
  }
  return out;
}

struct FullRankRunResult {
  SpatialCovarianceSet R;
  VarianceMap v;
  std::vector<double> loglik;
};

inline FullRankRunResult EmFullRankRun(const TfTensor& x,
                                       const SpatialCovarianceSet& R_init,
                                       const EmConfig& cfg,
                                       bool update_R = true) {
  cfg.Validate();
  const int F = x.num_bins();
  const int N = x.num_frames();
  const int J = R_init.num_sources();
  if (J < 1 || R_init.num_bins() != F)
    throw DimensionError("em: initializer bin count mismatch");

  const double mean_power = MeanMixturePower(x);
  const double v_floor = cfg.variance_floor_scale * mean_power;
  VarianceMap v0 = InitVariancesFromCovariance(x, R_init, v_floor);

  std::vector<em_detail::FullRankBinState> states(F);
  for (int f = 0; f < F; ++f) {
    auto& s = states[f];
    s.R.resize(J);
    for (int j = 0; j < J; ++j) s.R[j] = R_init.R[j][f];
    s.v.resize(J, N);
    for (int j = 0; j < J; ++j)
      for (int n = 0; n < N; ++n) s.v(j, n) = v0[j](f, n);
    s.v_floor = v_floor;
    s.ridge = cfg.ridge;
    s.update_R = update_R;
  }

  std::vector<std::vector<double>> traces(
      F, std::vector<double>(cfg.iterations + 1, 0.0));
  ParallelFor(
      0, F,
      [&](int f) {
        auto& s = states[f];
        traces[f][0] = em_detail::FullRankBinLogLikelihood(s, x.bins[f]);
        for (int it = 1; it <= cfg.iterations; ++it) {
          em_detail::EmFullRankIterateBin(&s, x.bins[f]);
          traces[f][it] = em_detail::FullRankBinLogLikelihood(s, x.bins[f]);
        }
      },
      cfg.num_threads);

  FullRankRunResult out;
  out.R.kind = update_R ? ModelKind::kFullRankUnconstrained : R_init.kind;
  out.R.R.assign(J, std::vector<Eigen::MatrixXcd>(F));
  out.v.assign(J, Eigen::MatrixXd::Zero(F, N));
  out.loglik.assign(cfg.iterations + 1, 0.0);
  for (int f = 0; f < F; ++f) {
    for (int j = 0; j < J; ++j) {
      out.R.R[j][f] = states[f].R[j];
      for (int n = 0; n < N; ++n) out.v[j](f, n) = states[f].v(j, n);
    }
    for (int it = 0; it <= cfg.iterations; ++it)
      out.loglik[it] += traces[f][it];
  }
  return out;
}

// Variance-only estimation with the spatial covariances held fixed: the
// semi-blind setting where R_j comes from geometry or a prior recording.
inline FullRankRunResult SemiblindVariances(const TfTensor& x,
                                            const SpatialCovarianceSet& R,
                                            const EmConfig& cfg) {
  return EmFullRankRun(x, R, cfg, /*update_R=*/false);
}

// ---------------------------------------------------------------------------
// Maximum-likelihood covariance from observed single-source images: the
// J = 1 instance of the full-rank model, where the E-step collapses
// (the posterior equals the observation) and the updates alternate
//   v(n) = c(n)^H R^{-1} c(n) / I,   R = mean_n c(n) c(n)^H / v(n).
// Returned covariances are normalized to trace I.

struct EmpiricalCovarianceResult {
  SpatialCovarianceSet R;
  VarianceMap v;
  // 1 where a bin carried no usable energy and fell back to scaled identity.
  std::vector<std::vector<std::uint8_t>> silent;
  std::vector<std::vector<int>> iterations_used;
};

inline EmpiricalCovarianceResult EmpiricalCovarianceMl(
    const std::vector<TfTensor>& images, const EmConfig& cfg = {},
    int max_iterations = 200, double tolerance = 1e-12) {
  if (images.empty()) throw DimensionError("covariance fit: no sources");
  const int J = static_cast<int>(images.size());
  const int F = images[0].num_bins();
  const int I = images[0].num_channels();
  const int N = images[0].num_frames();
  for (const auto& img : images)
    if (img.num_bins() != F || img.num_channels() != I ||
        img.num_frames() != N)
      throw DimensionError("covariance fit: image shape mismatch");

  EmpiricalCovarianceResult out;
  out.R.kind = ModelKind::kFullRankUnconstrained;
  out.R.R.assign(J, std::vector<Eigen::MatrixXcd>(F));
  out.v.assign(J, Eigen::MatrixXd::Zero(F, N));
  out.silent.assign(J, std::vector<std::uint8_t>(F, 0));
  out.iterations_used.assign(J, std::vector<int>(F, 0));

  const Eigen::MatrixXcd eye = Eigen::MatrixXcd::Identity(I, I);

  for (int j = 0; j < J; ++j) {
    const TfTensor& img = images[j];
    const double mean_power = [&] {
      double s = 0.0;
      std::int64_t c = 0;
      for (const auto& b : img.bins) {
        s += b.squaredNorm();
        c += b.size();
      }
      return c > 0 ? s / static_cast<double>(c) : 0.0;
    }();
    const double v_floor =
        cfg.variance_floor_scale * std::max(mean_power, 1e-300);

    ParallelFor(
        0, F,
        [&](int f) {
          const Eigen::MatrixXcd& c = img.bins[f];
          Eigen::MatrixXcd scm = Hermitize(c * c.adjoint() / double(N));
          double tr = std::real(scm.trace());
          if (!(tr > 0.0) || mean_power <= 0.0) {
            out.R.R[j][f] = eye;
            out.silent[j][f] = 1;
            out.v[j].row(f).setConstant(v_floor);
            return;
          }
          Eigen::MatrixXcd r = scm * (I / tr);
          Eigen::VectorXd v(N);
          int it = 0;
          for (; it < max_iterations; ++it) {
            Eigen::MatrixXcd r_inv =
                RidgeRegularize(r, cfg.ridge).llt().solve(eye);
            Eigen::MatrixXcd acc = Eigen::MatrixXcd::Zero(I, I);
            for (int n = 0; n < N; ++n) {
              Eigen::VectorXcd cn = c.col(n);
              double vn = std::max(v_floor,
                                   std::real(cn.dot(r_inv * cn)) / I);
              v[n] = vn;
              acc += cn * cn.adjoint() / vn;
            }
            Eigen::MatrixXcd r_new = Hermitize(acc / double(N));
            double tr_new = std::real(r_new.trace());
            if (tr_new > 0.0) r_new *= I / tr_new;
            double delta = (r_new - r).norm() / std::max(r.norm(), 1e-300);
            r = r_new;
            if (delta < tolerance) {
              ++it;
              break;
            }
          }
          out.R.R[j][f] = r;
          for (int n = 0; n < N; ++n) out.v[j](f, n) = v[n];
          out.iterations_used[j][f] = it;
        },
        cfg.num_threads);
  }
  return out;
}

}  // namespace covsep

#endif  // COVSEP_EM_HPP_
