// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <random>

#include "mmrc/tensor.hpp"

namespace mmrc {

/// Deterministic random source. The engine is std::mt19937_64 (bit-exact by
/// the standard); all value mappings are implemented here so that streams are
/// reproducible independent of library distribution internals.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// splitmix64 of (master, stream); documented in docs/formats.md so that
  /// per-trial seeds can be reproduced externally.
  static std::uint64_t derive(std::uint64_t master, std::uint64_t stream) {
    std::uint64_t z = master + 0x9E3779B97F4A7C15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  /// Uniform on [0, 1).
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  /// Uniform on [-1, 1).
  double uniformSym() { return 2.0 * uniform() - 1.0; }

  /// Standard normal via Box-Muller.
  double gaussian() {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }

  /// Circularly-symmetric complex normal with unit variance.
  cplx cgaussian() {
    double re = gaussian();
    double im = gaussian();
    return cplx(re * M_SQRT1_2, im * M_SQRT1_2);
  }

  std::uint64_t raw() { return engine_(); }

  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) { return engine_() % n; }

  MatrixXcd uniformRealMatrix(Index rows, Index cols) {
    MatrixXcd m(rows, cols);
    for (Index c = 0; c < cols; ++c)
      for (Index r = 0; r < rows; ++r) m(r, c) = cplx(uniformSym(), 0.0);
    return m;
  }

  MatrixXcd uniformComplexMatrix(Index rows, Index cols) {
    MatrixXcd m(rows, cols);
    for (Index c = 0; c < cols; ++c)
      for (Index r = 0; r < rows; ++r) m(r, c) = cplx(uniformSym(), uniformSym());
    return m;
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace mmrc
