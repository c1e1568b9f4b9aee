// covsep/bss_eval.hpp

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

// Objective separation quality for multichannel source images.
//
// Each estimated image is decomposed against the true images into a target
// part plus three orthogonal error parts:
//
//   e_spat   spatial (filtering) distortion — reachable from the true image
//            of the scored source through a short multichannel FIR filter,
//   e_interf leakage reachable from the other true images,
//   e_artif  everything else.
//
// The projections are least-squares fits onto time shifts 0..L-1 of every
// channel of the admitted images (L = filter_taps). Ratios are reported in
// dB as SDR / ISR / SIR / SAR, clamped to [-200, 200]; an exactly zero error
// term reports the +200 cap.
//
// Numerics: projections are applied to the residual (estimate minus true
// image), which is algebraically equivalent — the true image lies in its own
// shift span, so P_j(estimate) - c_j = P_j(estimate - c_j) — but avoids the
// regularizer-induced self-projection error that would otherwise floor the
// scores of a perfect estimate near 180 dB.

#ifndef COVSEP_BSS_EVAL_HPP_
#define COVSEP_BSS_EVAL_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <unsupported/Eigen/FFT>

#include "covsep/common.hpp"
#include "covsep/wav.hpp"

namespace covsep {

struct EvalScores {
  double sdr = 0.0;
  double isr = 0.0;
  double sir = 0.0;
  double sar = 0.0;
};

struct EvalOptions {
  // Length of the allowed distortion filters, in taps.
  int filter_taps = 512;
  // Score under the source-to-estimate pairing that maximizes total SDR
  // instead of pairing estimate j with reference j.
  bool best_permutation = false;
  // Relative diagonal loading of the projection Gram matrix.
  double ridge = 1e-9;

  void Validate() const {
    if (filter_taps < 1)
      throw ConfigError("eval.filter_taps: must be >= 1");
    if (!(ridge >= 0.0))
      throw ConfigError("eval.ridge: must be >= 0");
  }
};

struct EvalReport {
  // scores[j] scores the estimate assigned to reference j.
  std::vector<EvalScores> scores;
  // matching[j] = index of the estimate paired with reference j. Identity
  // unless best_permutation was set.
  std::vector<int> matching;
};

namespace bss_detail {

inline constexpr double kDbCap = 200.0;

inline double RatioDb(double num, double den) {
  if (den <= 0.0) return kDbCap;
  if (num <= 0.0) return -kDbCap;
  const double db = 10.0 * std::log10(num / den);
  return std::clamp(db, -kDbCap, kDbCap);
}

// Pairwise circular cross-correlations via one FFT per signal. Lag m >= 0 of
// xcorr(a, b)(m) = sum_t a(t) b(t + m) lands at index m of the inverse
// transform of conj(A) * B; negative lags wrap to the end. nfft must exceed
// T + max_lag so the wrap-around region stays clean.
class CorrelationTable {
 public:
  CorrelationTable(std::vector<Eigen::VectorXd> signals, Eigen::Index nfft)
      : nfft_(nfft), signals_(std::move(signals)) {
    Eigen::FFT<double> fft;
    fft.SetFlag(Eigen::FFT<double>::HalfSpectrum);
    spectra_.reserve(signals_.size());
    std::vector<double> pad(static_cast<std::size_t>(nfft), 0.0);
    for (const auto& s : signals_) {
      std::fill(pad.begin(), pad.end(), 0.0);
      for (Eigen::Index t = 0; t < s.size(); ++t)
        pad[static_cast<std::size_t>(t)] = s[t];
      std::vector<Complex> spec;
      fft.fwd(spec, pad);
      spectra_.push_back(std::move(spec));
    }
  }

  const Eigen::VectorXd& signal(int idx) const {
    return signals_[static_cast<std::size_t>(idx)];
  }

  // sum_b conv(signals[indices[b]], coeffs segment b) truncated to `length`,
  // computed in the frequency domain.
  Eigen::VectorXd FilterSum(const std::vector<int>& indices,
                            const Eigen::VectorXd& coeffs, int taps,
                            Eigen::Index length) const {
    Eigen::FFT<double> fft;
    fft.SetFlag(Eigen::FFT<double>::HalfSpectrum);
    std::vector<Complex> acc(spectra_[0].size(), Complex(0.0, 0.0));
    std::vector<double> pad(static_cast<std::size_t>(nfft_), 0.0);
    std::vector<Complex> cf;
    for (std::size_t b = 0; b < indices.size(); ++b) {
      std::fill(pad.begin(), pad.end(), 0.0);
      for (int l = 0; l < taps; ++l)
        pad[static_cast<std::size_t>(l)] =
            coeffs[static_cast<Eigen::Index>(b) * taps + l];
      fft.fwd(cf, pad);
      const auto& sp = spectra_[static_cast<std::size_t>(indices[b])];
      for (std::size_t k = 0; k < sp.size(); ++k) acc[k] += sp[k] * cf[k];
    }
    std::vector<double> y;
    fft.inv(y, acc, static_cast<int>(nfft_));
    Eigen::VectorXd out(length);
    for (Eigen::Index t = 0; t < length; ++t)
      out[t] = y[static_cast<std::size_t>(t)];
    return out;
  }

  // Lags -max_lag..max_lag of xcorr(signals[a], signals[b]); entry
  // [max_lag + m] holds lag m.
  Eigen::VectorXd Lags(int a, int b, int max_lag) const {
    const auto& sa = spectra_[static_cast<std::size_t>(a)];
    const auto& sb = spectra_[static_cast<std::size_t>(b)];
    std::vector<Complex> prod(sa.size());
    for (std::size_t k = 0; k < sa.size(); ++k)
      prod[k] = std::conj(sa[k]) * sb[k];
    Eigen::FFT<double> fft;
    fft.SetFlag(Eigen::FFT<double>::HalfSpectrum);
    std::vector<double> xc;
    fft.inv(xc, prod, static_cast<int>(nfft_));
    Eigen::VectorXd out(2 * max_lag + 1);
    for (int m = -max_lag; m <= max_lag; ++m) {
      const Eigen::Index idx = m >= 0 ? m : nfft_ + m;
      out[max_lag + m] = xc[static_cast<std::size_t>(idx)];
    }
    return out;
  }

 private:
  Eigen::Index nfft_;
  std::vector<Eigen::VectorXd> signals_;
  std::vector<std::vector<Complex>> spectra_;
};

// Gram matrix of time shifts 0..taps-1 of basis channels q0..q0+count-1,
// with shifted copies clipped at the signal end (the shift span lives on
// [0, T)). Blocks start Toeplitz from the plain cross-correlation; entry
// (l, m) then sheds the last min(l, m) products, which the clipped copies
// never see. That loss obeys loss(l+1, m+1) = loss(l, m) +
// s_q(T-1-l) s_p(T-1-m), so each diagonal accumulates it in one pass.
inline Eigen::MatrixXd BuildShiftGram(const CorrelationTable& table, int q0,
                                      int count, int taps) {
  Eigen::MatrixXd gram(count * taps, count * taps);
  for (int q = 0; q < count; ++q) {
    for (int p = 0; p < count; ++p) {
      const Eigen::VectorXd xc = table.Lags(q0 + q, q0 + p, taps - 1);
      for (int l = 0; l < taps; ++l)
        for (int m = 0; m < taps; ++m)
          gram(q * taps + l, p * taps + m) = xc[(taps - 1) + (l - m)];

      const Eigen::VectorXd& sq = table.signal(q0 + q);
      const Eigen::VectorXd& sp = table.signal(q0 + p);
      const Eigen::Index T = sq.size();
      for (int d = -(taps - 1); d <= taps - 1; ++d) {
        int l = std::max(d, 0);
        int m = std::max(-d, 0);
        double loss = 0.0;
        for (; l < taps && m < taps; ++l, ++m) {
          gram(q * taps + l, p * taps + m) -= loss;
          loss += sq[T - 1 - l] * sp[T - 1 - m];
        }
      }
    }
  }
  return gram;
}

// Least-squares projector onto the span behind a shift Gram.
class ShiftSpanProjector {
 public:
  ShiftSpanProjector(Eigen::MatrixXd gram, double ridge) {
    // Relative loading keeps well-scaled problems stable; the mean-diagonal
    // term keeps an all-zero basis channel from leaving the system singular.
    const double mean_diag = gram.trace() / static_cast<double>(gram.rows());
    gram.diagonal().array() += ridge * (gram.diagonal().array() + mean_diag);
    ldlt_.compute(gram);
    if (ldlt_.info() != Eigen::Success)
      throw NumericalError("bss_eval: projection Gram factorization failed");
  }

  // Filter coefficients fitting a target; rhs(q*L + l) = xcorr(basis_q,
  // target)(l). The caller supplies the cross-correlations so they can be
  // combined by linearity without extra FFTs.
  Eigen::VectorXd Solve(const Eigen::VectorXd& rhs) const {
    return ldlt_.solve(rhs);
  }

 private:
  Eigen::LDLT<Eigen::MatrixXd> ldlt_;
};

struct PairEnergies {
  double target = 0.0;        // ||c_j||^2 over all channels
  double spat = 0.0;          // ||e_spat||^2
  double interf = 0.0;        // ||e_interf||^2
  double artif = 0.0;         // ||e_artif||^2
  double distortion = 0.0;    // ||estimate - c_j||^2
  double target_spat = 0.0;   // ||c_j + e_spat||^2
  double target_interf = 0.0; // ||c_j + e_spat + e_interf||^2
};

inline EvalScores ScoresFromEnergies(const PairEnergies& e) {
  EvalScores s;
  s.sdr = RatioDb(e.target, e.distortion);
  s.isr = RatioDb(e.target, e.spat);
  s.sir = RatioDb(e.target_spat, e.interf);
  s.sar = RatioDb(e.target_interf, e.artif);
  return s;
}

}  // namespace bss_detail

// Scores estimated source images against true ones. estimates[k] and
// references[j] must agree in channel count and length; every reference must
// carry signal. Returns one score set per reference under the chosen
// estimate pairing.
inline EvalReport BssEvalImages(const std::vector<AudioBuffer>& estimates,
                                const std::vector<AudioBuffer>& references,
                                const EvalOptions& options = {}) {
  options.Validate();
  const int J = static_cast<int>(references.size());
  if (J == 0) throw DimensionError("bss_eval: no references");
  if (static_cast<int>(estimates.size()) != J)
    throw DimensionError("bss_eval: estimate/reference count mismatch");

  const Eigen::Index T = references[0].num_samples();
  const Eigen::Index I = references[0].num_channels();
  for (const auto& buf : references)
    if (buf.num_samples() != T || buf.num_channels() != I)
      throw DimensionError("bss_eval: reference shapes differ");
  for (const auto& buf : estimates)
    if (buf.num_samples() != T || buf.num_channels() != I)
      throw DimensionError("bss_eval: estimate shape differs from references");

  const int taps = options.filter_taps;
  if (T < taps)
    throw DimensionError("bss_eval: signals shorter than the filter length");
  for (int j = 0; j < J; ++j)
    if (references[static_cast<std::size_t>(j)].samples.squaredNorm() == 0.0)
      throw DomainError("bss_eval: reference " + std::to_string(j) +
                        " is silent");

  const int ic = static_cast<int>(I);
  const int Q = J * ic;  // basis channels: all references, all mics

  // Signal list: basis channels first (index j*I + i), then estimate
  // channels (index Q + k*I + i).
  std::vector<Eigen::VectorXd> signals;
  signals.reserve(static_cast<std::size_t>(2 * Q));
  for (int j = 0; j < J; ++j)
    for (int i = 0; i < ic; ++i)
      signals.push_back(references[static_cast<std::size_t>(j)].samples.col(i));
  for (int k = 0; k < J; ++k)
    for (int i = 0; i < ic; ++i)
      signals.push_back(estimates[static_cast<std::size_t>(k)].samples.col(i));

  Eigen::Index nfft = 1;
  while (nfft < T + taps) nfft <<= 1;
  const bss_detail::CorrelationTable table(std::move(signals), nfft);

  // xcorr(basis_q, signal_s)(l) for l in [0, taps): one row block per basis
  // channel. Rhs vectors for any residual follow by linearity.
  Eigen::MatrixXd basis_corr(Q * taps, 2 * Q);
  for (int q = 0; q < Q; ++q)
    for (int s = 0; s < 2 * Q; ++s) {
      const Eigen::VectorXd xc = table.Lags(q, s, taps - 1);
      basis_corr.block(q * taps, s, taps, 1) = xc.tail(taps);
    }

  const Eigen::MatrixXd gram_full =
      bss_detail::BuildShiftGram(table, 0, Q, taps);
  const bss_detail::ShiftSpanProjector full(gram_full, options.ridge);
  std::vector<bss_detail::ShiftSpanProjector> single;
  single.reserve(static_cast<std::size_t>(J));
  for (int j = 0; j < J; ++j)
    single.emplace_back(
        gram_full.block(j * ic * taps, j * ic * taps, ic * taps, ic * taps),
        options.ridge);

  std::vector<int> all_basis(static_cast<std::size_t>(Q));
  std::iota(all_basis.begin(), all_basis.end(), 0);

  // energies(k, j): estimate k scored against reference j.
  std::vector<std::vector<bss_detail::PairEnergies>> energies(
      static_cast<std::size_t>(J),
      std::vector<bss_detail::PairEnergies>(static_cast<std::size_t>(J)));

  for (int k = 0; k < J; ++k) {
    for (int j = 0; j < J; ++j) {
      bss_detail::PairEnergies e;
      e.target = references[static_cast<std::size_t>(j)].samples.squaredNorm();
      std::vector<int> own(static_cast<std::size_t>(ic));
      std::iota(own.begin(), own.end(), j * ic);
      for (int i = 0; i < ic; ++i) {
        const Eigen::VectorXd est =
            estimates[static_cast<std::size_t>(k)].samples.col(i);
        const Eigen::VectorXd ref =
            references[static_cast<std::size_t>(j)].samples.col(i);
        const Eigen::VectorXd resid = est - ref;

        // Residual cross-correlations against every basis channel, by
        // linearity from the precomputed table.
        const Eigen::VectorXd rhs_full =
            basis_corr.col(Q + k * ic + i) - basis_corr.col(j * ic + i);
        const Eigen::VectorXd coeff_full = full.Solve(rhs_full);
        const Eigen::VectorXd proj_full =
            table.FilterSum(all_basis, coeff_full, taps, T);

        const Eigen::VectorXd rhs_single =
            rhs_full.segment(j * ic * taps, ic * taps);
        const Eigen::VectorXd coeff_single =
            single[static_cast<std::size_t>(j)].Solve(rhs_single);
        const Eigen::VectorXd proj_own =
            table.FilterSum(own, coeff_single, taps, T);

        const Eigen::VectorXd e_spat = proj_own;
        const Eigen::VectorXd e_interf = proj_full - proj_own;
        const Eigen::VectorXd e_artif = resid - proj_full;

        e.spat += e_spat.squaredNorm();
        e.interf += e_interf.squaredNorm();
        e.artif += e_artif.squaredNorm();
        e.distortion += resid.squaredNorm();
        e.target_spat += (ref + e_spat).squaredNorm();
        e.target_interf += (ref + e_spat + e_interf).squaredNorm();
      }
      energies[static_cast<std::size_t>(k)][static_cast<std::size_t>(j)] = e;
    }
  }

  // Pairing: identity, or the SDR-maximizing assignment of estimates to
  // references.
  std::vector<int> matching(static_cast<std::size_t>(J));
  std::iota(matching.begin(), matching.end(), 0);
  if (options.best_permutation && J > 1) {
    auto total_sdr = [&](const std::vector<int>& assign) {
      double t = 0.0;
      for (int j = 0; j < J; ++j) {
        const auto& e = energies[static_cast<std::size_t>(
            assign[static_cast<std::size_t>(j)])][static_cast<std::size_t>(j)];
        t += bss_detail::RatioDb(e.target, e.distortion);
      }
      return t;
    };
    if (J <= 6) {
      std::vector<int> perm = matching;
      double best = total_sdr(perm);
      std::vector<int> trial = perm;
      std::sort(trial.begin(), trial.end());
      do {
        const double t = total_sdr(trial);
        if (t > best) {
          best = t;
          perm = trial;
        }
      } while (std::next_permutation(trial.begin(), trial.end()));
      matching = perm;
    } else {
      // Greedy fallback for very large source counts.
      std::vector<bool> used(static_cast<std::size_t>(J), false);
      for (int j = 0; j < J; ++j) {
        int arg = -1;
        double best = -std::numeric_limits<double>::infinity();
        for (int k = 0; k < J; ++k) {
          if (used[static_cast<std::size_t>(k)]) continue;
          const auto& e =
              energies[static_cast<std::size_t>(k)][static_cast<std::size_t>(j)];
          const double t = bss_detail::RatioDb(e.target, e.distortion);
          if (t > best) {
            best = t;
            arg = k;
          }
        }
        matching[static_cast<std::size_t>(j)] = arg;
        used[static_cast<std::size_t>(arg)] = true;
      }
    }
  }

  EvalReport report;
  report.matching = matching;
  report.scores.resize(static_cast<std::size_t>(J));
  for (int j = 0; j < J; ++j) {
    const int k = matching[static_cast<std::size_t>(j)];
    report.scores[static_cast<std::size_t>(j)] = bss_detail::ScoresFromEnergies(
        energies[static_cast<std::size_t>(k)][static_cast<std::size_t>(j)]);
  }
  return report;
}

}  // namespace covsep

#endif  // COVSEP_BSS_EVAL_HPP_
