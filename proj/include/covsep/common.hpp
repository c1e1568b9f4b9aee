// covsep/common.hpp

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

#ifndef COVSEP_COMMON_HPP_
#define COVSEP_COMMON_HPP_

#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <random>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/Dense>

namespace covsep {

inline constexpr double kPi = 3.14159265358979323846;

using Complex = std::complex<double>;

// Error hierarchy. Everything the library throws derives from Error so
// callers can catch one type at the CLI boundary.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// Malformed or unsupported file content.
class FormatError : public Error {
 public:
  using Error::Error;
};

// Shape/length mismatches between operands.
class DimensionError : public Error {
 public:
  using Error::Error;
};

// Inputs outside an operation's mathematical domain.
class DomainError : public Error {
 public:
  using Error::Error;
};

// Numerical failure that survived regularization (singular systems etc).
class NumericalError : public Error {
 public:
  using Error::Error;
};

// Invalid configuration; message carries the offending field path.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Deterministic random generator. Gaussian variates use Box-Muller on raw
// mt19937_64 uniforms rather than std::normal_distribution, whose output is
// implementation-defined; fixed seeds must reproduce bit-identical streams
// on every platform.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  // Uniform double in [0, 1).
  double Uniform() {
    // 53-bit mantissa from the top bits of one 64-bit draw.
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  // Uniform integer in [0, n).
  int UniformInt(int n) {
    return static_cast<int>(engine_() % static_cast<std::uint64_t>(n));
  }

  // Standard normal.
  double Gaussian() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = Uniform(), u2 = Uniform();
    while (u1 <= 0.0) u1 = Uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double t = 2.0 * kPi * u2;
    spare_ = r * std::sin(t);
    have_spare_ = true;
    return r * std::cos(t);
  }

  // Circular complex normal, unit variance: E|z|^2 = 1.
  Complex ComplexGaussian() {
    const double s = 1.0 / std::sqrt(2.0);
    double re = Gaussian();
    double im = Gaussian();
    return {re * s, im * s};
  }

  std::uint64_t Raw() { return engine_(); }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

// Runs body(i) for i in [begin, end). Indices are split into contiguous
// chunks, one per worker; each index runs exactly once, so results are
// deterministic as long as bodies only write state owned by their index.
inline void ParallelFor(int begin, int end,
                        const std::function<void(int)>& body,
                        int num_threads = 0) {
  int n = end - begin;
  if (n <= 0) return;
  if (num_threads <= 0) {
    unsigned hc = std::thread::hardware_concurrency();
    num_threads = hc == 0 ? 1 : static_cast<int>(hc);
  }
  num_threads = std::min(num_threads, n);
  if (num_threads <= 1) {
    for (int i = begin; i < end; ++i) body(i);
    return;
  }
  std::vector<std::thread> workers;
  workers.reserve(num_threads);
  std::vector<std::exception_ptr> errors(num_threads, nullptr);
  int chunk = (n + num_threads - 1) / num_threads;
  for (int w = 0; w < num_threads; ++w) {
    int lo = begin + w * chunk;
    int hi = std::min(lo + chunk, end);
    if (lo >= hi) break;
    workers.emplace_back([lo, hi, w, &body, &errors] {
      try {
        for (int i = lo; i < hi; ++i) body(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : workers) t.join();
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
}

// (M + M^H)/2, forcing exact Hermitian symmetry after round-off.
inline Eigen::MatrixXcd Hermitize(const Eigen::MatrixXcd& m) {
  return 0.5 * (m + m.adjoint());
}

inline double Db(double ratio) { return 10.0 * std::log10(ratio); }

}  // namespace covsep

#endif  // COVSEP_COMMON_HPP_
