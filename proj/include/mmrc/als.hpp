// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "mmrc/linalg.hpp"
#include "mmrc/reservoir.hpp"
#include "mmrc/tensor.hpp"

namespace mmrc {

struct AlsOptions {
  int iters = 6;
  double rel_tol = 1e-10;  // stop when the relative loss change drops below this
  LSOptions ls;
  std::uint64_t seed = 7;
  // When set, receives a copy of the factors after every sweep.
  std::vector<std::vector<MatrixXcd>>* iterate_log = nullptr;
};

struct ReadoutFactors {
  std::vector<MatrixXcd> factors;  // W_out-n, one per trainable mode
  int delay = 0;                   // selected tau
  std::vector<double> loss_trace;  // objective after each ALS sweep
};

/// Training batch: features[q][t] and targets[q][t]; all batches share lengths.
using FeatureBatch = std::vector<std::vector<FeatureSample>>;
using TargetBatch = std::vector<std::vector<Tensor>>;

/// Z(t) = G(t) x_1 W_out-1 ... x_N W_out-N on a dense feature tensor.
Tensor readoutForward(const Tensor& g, std::span<const MatrixXcd> factors);

/// Readout of a block-partitioned feature sample (never materializes the dense
/// super-block-diagonal tensor).
Tensor readoutForward(const FeatureSample& g, std::span<const MatrixXcd> factors);

/// ALS fit on block-partitioned features. The time and batch axes carry
/// implicit identity factors and are never updated.
ReadoutFactors alsFit(const FeatureBatch& features, const TargetBatch& targets,
                      const AlsOptions& opts = {});

/// As alsFit but pairing G(t+tau) with Z(t) for a fixed tau.
ReadoutFactors alsFitAtDelay(const FeatureBatch& features, const TargetBatch& targets, int tau,
                             const AlsOptions& opts = {});

/// Spec-facing entry: stacked dense tensors G (N_f-1 x .. x N_f-N x N_T x N_K)
/// and Z (N_out-1 x .. x N_out-N x N_T x N_K).
ReadoutFactors alsFitDense(const Tensor& g, const Tensor& z, const AlsOptions& opts = {});

/// One factor update exploiting the block partition (Appendix-style low-memory
/// route): peak auxiliary memory is bounded by the per-block products.
MatrixXcd alsFactorUpdateLowmem(const FeatureBatch& features, const TargetBatch& targets,
                                std::span<const MatrixXcd> factors, int mode,
                                const LSOptions& ls = {});

/// Reference update that materializes the full reversed-order Kronecker
/// product; for small instances and cross-checks only.
MatrixXcd alsFactorUpdateNaive(const Tensor& g, const Tensor& z,
                               std::span<const MatrixXcd> factors, int mode,
                               const LSOptions& ls = {});

/// Fits factors on {G(t+tau)} vs {Z(t)} for each tau in 0..tau_max and returns
/// the fit with minimal final loss (ties broken toward the smallest tau).
/// features[q] has length N_T + tau_max, targets[q] has length N_T.
ReadoutFactors delaySearch(const FeatureBatch& features, const TargetBatch& targets,
                           int tau_max, const AlsOptions& opts = {});

struct UniquenessReport {
  std::vector<bool> per_mode;
  bool all = true;
};

/// Shape inequality for the uniqueness of the achieved ALS minimum:
/// sum_{i != n} N_out-i + N_T + N_K >= N_f-n (or + N_T*N_K when merged).
UniquenessReport uniquenessCheck(std::span<const Index> n_out, std::span<const Index> n_f,
                                 Index n_t, Index n_k, bool merged);

/// Per-entry decomposed fit (2-mode): independently trains a (w1, w2) row
/// vector pair for every scalar output entry. Entry order is
/// first-index-fastest over the output shape.
std::vector<ReadoutFactors> fitDecomposed(const FeatureBatch& features, const TargetBatch& targets,
                                          const AlsOptions& opts = {});

/// Decomposed variant of delaySearch: one shared tau minimizing the summed
/// per-entry losses.
std::pair<std::vector<ReadoutFactors>, int> delaySearchDecomposed(const FeatureBatch& features,
                                                                  const TargetBatch& targets,
                                                                  int tau_max,
                                                                  const AlsOptions& opts = {});

}  // namespace mmrc
