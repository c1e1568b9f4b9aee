// covsep/tensor_io.hpp

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

#ifndef COVSEP_TENSOR_IO_HPP_
#define COVSEP_TENSOR_IO_HPP_

#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "covsep/common.hpp"
#include "covsep/stft.hpp"

namespace covsep {

// Self-describing binary tensor container used for RIRs, STFT tensors,
// covariance sets and variance maps.
//
//   magic   "CVTN"
//   u32     version (1)
//   u8      dtype: 0 = float64, 1 = complex128 (interleaved re, im)
//   u8      rank  (1..8)
//   u64[r]  dims
//   f64     sample_rate (0 when not applicable)
//   f64[]   payload, C order (last dimension fastest), little endian
struct TensorData {
  bool complex_valued = false;
  std::vector<std::uint64_t> dims;
  double sample_rate = 0.0;
  std::vector<double> real;     // valid when !complex_valued
  std::vector<Complex> cplx;    // valid when complex_valued

  std::uint64_t NumElements() const {
    std::uint64_t n = 1;
    for (auto d : dims) n *= d;
    return n;
  }
};

namespace tensor_detail {

template <typename T>
void PutScalar(T v, std::ofstream* out) {
  out->write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T GetScalar(std::ifstream* in, const std::string& path) {
  T v{};
  in->read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!*in) throw FormatError("truncated tensor file: " + path);
  return v;
}

}  // namespace tensor_detail

inline void WriteTensor(const std::string& path, const TensorData& tensor) {
  using namespace tensor_detail;
  if (tensor.dims.empty() || tensor.dims.size() > 8)
    throw DomainError("tensor rank must be in 1..8: " + path);
  const std::uint64_t n = tensor.NumElements();
  const std::size_t have =
      tensor.complex_valued ? tensor.cplx.size() : tensor.real.size();
  if (have != n)
    throw DimensionError("tensor payload does not match dims: " + path);

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + path);
  out.write("CVTN", 4);
  PutScalar<std::uint32_t>(1, &out);
  PutScalar<std::uint8_t>(tensor.complex_valued ? 1 : 0, &out);
  PutScalar<std::uint8_t>(static_cast<std::uint8_t>(tensor.dims.size()), &out);
  for (auto d : tensor.dims) PutScalar<std::uint64_t>(d, &out);
  PutScalar<double>(tensor.sample_rate, &out);
  if (tensor.complex_valued) {
    out.write(reinterpret_cast<const char*>(tensor.cplx.data()),
              static_cast<std::streamsize>(n * sizeof(Complex)));
  } else {
    out.write(reinterpret_cast<const char*>(tensor.real.data()),
              static_cast<std::streamsize>(n * sizeof(double)));
  }
  if (!out) throw IoError("short write: " + path);
}

inline TensorData ReadTensor(const std::string& path) {
  using namespace tensor_detail;
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open for reading: " + path);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, "CVTN", 4) != 0)
    throw FormatError("not a tensor file: " + path);
  auto version = GetScalar<std::uint32_t>(&in, path);
  if (version != 1)
    throw FormatError("unsupported tensor version: " + path);
  auto dtype = GetScalar<std::uint8_t>(&in, path);
  if (dtype > 1) throw FormatError("unknown tensor dtype: " + path);
  auto rank = GetScalar<std::uint8_t>(&in, path);
  if (rank < 1 || rank > 8)
    throw FormatError("invalid tensor rank: " + path);

  TensorData tensor;
  tensor.complex_valued = dtype == 1;
  tensor.dims.resize(rank);
  for (int r = 0; r < rank; ++r)
    tensor.dims[r] = GetScalar<std::uint64_t>(&in, path);
  tensor.sample_rate = GetScalar<double>(&in, path);

  const std::uint64_t n = tensor.NumElements();
  if (tensor.complex_valued) {
    tensor.cplx.resize(n);
    in.read(reinterpret_cast<char*>(tensor.cplx.data()),
            static_cast<std::streamsize>(n * sizeof(Complex)));
  } else {
    tensor.real.resize(n);
    in.read(reinterpret_cast<char*>(tensor.real.data()),
            static_cast<std::streamsize>(n * sizeof(double)));
  }
  if (!in) throw FormatError("truncated tensor payload: " + path);
  return tensor;
}

// TfTensor round trip, stored as [F][I][N] complex.
inline void SaveTfTensor(const std::string& path, const TfTensor& tf) {
  const int F = tf.num_bins(), I = tf.num_channels(), N = tf.num_frames();
  TensorData tensor;
  tensor.complex_valued = true;
  tensor.dims = {static_cast<std::uint64_t>(F), static_cast<std::uint64_t>(I),
                 static_cast<std::uint64_t>(N)};
  tensor.sample_rate = tf.sample_rate;
  tensor.cplx.reserve(static_cast<std::size_t>(F) * I * N);
  for (int f = 0; f < F; ++f)
    for (int i = 0; i < I; ++i)
      for (int n = 0; n < N; ++n) tensor.cplx.push_back(tf.bins[f](i, n));
  WriteTensor(path, tensor);
}

inline TfTensor LoadTfTensor(const std::string& path) {
  TensorData tensor = ReadTensor(path);
  if (!tensor.complex_valued || tensor.dims.size() != 3)
    throw FormatError("expected rank-3 complex tensor: " + path);
  const int F = static_cast<int>(tensor.dims[0]);
  const int I = static_cast<int>(tensor.dims[1]);
  const int N = static_cast<int>(tensor.dims[2]);
  TfTensor tf;
  tf.sample_rate = tensor.sample_rate;
  tf.frame_size = 2 * (F - 1);
  tf.frame_shift = tf.frame_size / 2;
  tf.bins.assign(F, Eigen::MatrixXcd(I, N));
  std::size_t k = 0;
  for (int f = 0; f < F; ++f)
    for (int i = 0; i < I; ++i)
      for (int n = 0; n < N; ++n) tf.bins[f](i, n) = tensor.cplx[k++];
  return tf;
}

}  // namespace covsep

#endif  // COVSEP_TENSOR_IO_HPP_
