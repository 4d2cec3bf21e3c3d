// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <vector>

#include "mmrc/tensor.hpp"

namespace mmrc {

enum class Activation { Tanh, Identity };

struct RCConfig {
  int modes = 2;                         // N
  std::vector<int> input_dims;           // N_in-n
  std::vector<int> output_dims;          // N_out-n
  int neurons = 8;                       // N_s
  int window = 32;                       // T'
  int max_delay = 2;                     // tau_max
  Activation activation = Activation::Tanh;
  double spectral_radius = 0.9;          // rho
  // Mode permutations used by the feature queue. Empty means "all N!" for
  // N <= 3 and identity-only beyond. The identity is always first.
  std::vector<std::vector<int>> permutations;
  std::uint64_t seed = 1;
  int als_iters = 6;

  std::vector<std::vector<int>> effectivePermutations() const;
  void validate() const;
  /// Feature queue size on mode n.
  Index featureDim(int n) const;
};

/// Frozen per-mode transition weights: W_tran-n = [W_res-n | W_in-n].
struct ReservoirWeights {
  std::vector<MatrixXcd> state;  // N_s x N_s, spectral radius rho
  std::vector<MatrixXcd> input;  // N_s x (T' * N_in-n)
  MatrixXcd tran(int n) const {
    MatrixXcd w(state[static_cast<size_t>(n)].rows(),
                state[static_cast<size_t>(n)].cols() + input[static_cast<size_t>(n)].cols());
    w << state[static_cast<size_t>(n)], input[static_cast<size_t>(n)];
    return w;
  }
};

ReservoirWeights initReservoir(const RCConfig& cfg);

/// Windowed input: superblockdiag(Y(t), ..., Y(t-T'+1)). `history` is most
/// recent first and must contain exactly T' samples (zero tensors before the
/// sequence start).
Tensor windowInput(std::span<const Tensor> history);

/// S(t+1) = sigma(superblockdiag(S, Ytilde) x_1 W_tran-1 ... x_N W_tran-N),
/// with sigma applied to real and imaginary parts independently.
Tensor stateUpdate(const Tensor& state, const Tensor& windowed, const ReservoirWeights& w,
                   Activation act);

/// One feature sample G(t) as a flat super-block-diagonal partition:
/// permutations of S first, then for each permutation the T' windowed input
/// samples. The implied dense tensor is superblockdiag(blocks).
struct FeatureSample {
  std::vector<Tensor> blocks;
  Index modeDim(int n) const;
  Tensor dense() const;
};

/// Dense feature queue G(t) = superblockdiag(comb(S), comb(Ytilde)).
Tensor featureQueue(const Tensor& state, const Tensor& windowed, const RCConfig& cfg);

/// Runs the reservoir over an input sequence (zero initial state, tau_max
/// zero-padding at the end) and returns the per-step feature partitions,
/// length N_T + tau_max.
std::vector<FeatureSample> runReservoir(std::span<const Tensor> inputs, const ReservoirWeights& w,
                                        const RCConfig& cfg);

}  // namespace mmrc
