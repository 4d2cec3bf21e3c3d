// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "mmrc/als.hpp"
#include "mmrc/mimo.hpp"
#include "mmrc/reservoir.hpp"

namespace mmrc {

struct DetectionResult {
  std::vector<std::uint8_t> bits;  // detected payload bits, same layout as Subframe::bits
  double ber = 1.0;
  std::vector<double> loss_trace;     // RC detectors: ALS objective per sweep
  int delay = 0;                      // selected tau
  std::vector<MatrixXcd> est_grid;    // per data symbol: N_c x N_t symbol estimates
};

struct RcDetectOptions {
  int neurons = 8;          // N_s
  int window = 32;          // T'
  int max_delay = 2;        // tau_max
  double spectral_radius = 0.9;
  double input_scale = 1.0;
  bool identity_perm_only = false;  // drop the transposed feature blocks
  int als_iters = 6;
  double ridge = 0.0;
  std::uint64_t seed = 1;
  // When set, receives the joint factors after every ALS sweep.
  std::vector<std::vector<MatrixXcd>>* iterate_log = nullptr;
};

/// A trained detector: frozen reservoir plus readout. `factors` holds the
/// joint readout; `entries` the per-entry decomposed readouts (empty for
/// joint models). Entry order is first-index-fastest over N_u x N_q, i.e. the
/// stream index u + N_u * q.
struct RcModel {
  RCConfig rc;
  ReservoirWeights weights;
  std::vector<MatrixXcd> factors;
  std::vector<std::vector<MatrixXcd>> entries;
  int delay = 0;
  std::vector<double> loss_trace;
};

RCConfig makeRcConfig(const SysConfig& cfg, const RcDetectOptions& opts);

/// Fits the readout on the N_K pilot symbols only (one ALS batch per pilot).
RcModel rcTrainJoint(const SysConfig& cfg, const Subframe& sf, const RxRecord& rec,
                     const RcDetectOptions& opts = {});
RcModel rcTrainDecomposed(const SysConfig& cfg, const Subframe& sf, const RxRecord& rec,
                          const RcDetectOptions& opts = {});

/// Runs the reservoir + readout over the listed OFDM symbols and returns the
/// demodulated N_c x N_t frequency-domain estimate for each.
std::vector<MatrixXcd> rcEstimateGrid(const RcModel& model, const SysConfig& cfg,
                                      const RxRecord& rec, std::span<const int> symbols);

DetectionResult rcDetectJoint(const SysConfig& cfg, const Subframe& sf, const RxRecord& rec,
                              const RcDetectOptions& opts = {});
DetectionResult rcDetectDecomposed(const SysConfig& cfg, const Subframe& sf, const RxRecord& rec,
                                   const RcDetectOptions& opts = {});

/// LMMSE channel estimation from the pilot symbols followed by per-subcarrier
/// LMMSE detection. Requires N_K >= N_t.
DetectionResult lmmseDetect(const SysConfig& cfg, const Subframe& sf, const RxRecord& rec);

struct WesnOptions {
  int neurons = 64;   // default budget: the multi-mode model's total state count N_s^2
  int buffer = 52;
  int max_delay = 2;
  double spectral_radius = 0.9;
  double input_scale = 1.0;
  double ridge = 0.0;
  std::uint64_t seed = 1;
};

/// Windowed echo state network baseline on the vectorized (N_a*N_e) input.
DetectionResult wesnDetect(const SysConfig& cfg, const Subframe& sf, const RxRecord& rec,
                           const WesnOptions& opts = {});

/// Hamming distance / length.
double ber(std::span<const std::uint8_t> truth, std::span<const std::uint8_t> detected);

/// Demaps a per-symbol grid into the Subframe bit layout (stream-major, then
/// subcarrier).
std::vector<std::uint8_t> demapGrid(std::span<const MatrixXcd> grid, int order);

}  // namespace mmrc
