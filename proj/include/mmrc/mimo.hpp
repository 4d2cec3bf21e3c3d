// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <limits>
#include <vector>

#include "mmrc/tensor.hpp"

namespace mmrc {

enum class Impairment { Linear, OneBit };

/// Random: independent constellation points per (subcarrier, stream).
/// Orthogonal: Hadamard rows across pilot symbols (needs power-of-two
/// N_K >= N_t); gives the LMMSE pipeline a perfectly conditioned estimator.
enum class PilotStyle { Random, Orthogonal };

struct SysConfig {
  int n_az = 8;            // N_a
  int n_el = 8;            // N_e
  int n_users = 2;         // N_u
  int n_ant_per_user = 2;  // N_q
  int n_sc = 512;          // N_c
  int n_cp = 32;
  int n_pilot = 4;         // N_K
  int n_data = 12;         // N_D
  int taps = 32;           // L, must stay <= n_cp
  int paths_per_tap = 1;
  int qam_order = 4;
  double snr_db = 15.0;    // +inf disables noise
  Impairment impairment = Impairment::Linear;
  PilotStyle pilot_style = PilotStyle::Random;
  double adc_max = 0.6;
  std::uint64_t seed = 1;

  int nTx() const { return n_users * n_ant_per_user; }
  int nRx() const { return n_az * n_el; }
  int symbolSamples() const { return n_sc + n_cp; }
  int totalSymbols() const { return n_pilot + n_data; }
  void validate() const;
};

/// One subframe of the OFDM resource grid plus its time-domain streams.
/// Stream index for user u, antenna q is u + N_u * q (column-major vec of the
/// N_u x N_q transmit matrix).
struct Subframe {
  std::vector<MatrixXcd> grid;       // per OFDM symbol: N_c x N_t
  std::vector<std::uint8_t> bits;    // payload bits of the data symbols
  MatrixXcd tx_time;                 // N_t x (N_c+N_cp)(N_K+N_D)
  int n_pilot = 0;

  bool isPilot(int symbol) const { return symbol < n_pilot; }
};

struct ChannelRealization {
  std::vector<Tensor> taps;   // H(l), each N_a x N_e x N_t
  std::vector<double> pdp;    // per-tap power weights, sums to 1
};

struct RxRecord {
  MatrixXcd rx;        // N_rx x total samples (vectorized az-major antennas)
  double noise_var = 0.0;
};

Subframe buildSubframe(const SysConfig& cfg);
ChannelRealization genChannel(const SysConfig& cfg);

/// Per-subcarrier frequency response, N_rx x N_t for subcarrier k.
MatrixXcd channelFrequencyResponse(const ChannelRealization& ch, const SysConfig& cfg, int k);

RxRecord applyChannel(const MatrixXcd& tx_time, const ChannelRealization& ch,
                      const SysConfig& cfg);

/// q(x) = A_max * sign(x) on real and imaginary parts independently;
/// sign(0) := +1.
MatrixXcd oneBitQuantize(const MatrixXcd& y, double a_max);

constexpr double kSnrInf = std::numeric_limits<double>::infinity();

}  // namespace mmrc
