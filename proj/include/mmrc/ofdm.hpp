// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <vector>

#include "mmrc/tensor.hpp"

namespace mmrc {

/// Gray-coded square QAM with unit average symbol energy. Bit convention:
/// log2(order)/2 bits for the in-phase axis first, then the quadrature axis;
/// per axis the Gray-decoded index i maps to level (L-1) - 2i, scaled by
/// sqrt(2(L^2-1)/3). The tables are spelled out in docs/formats.md.
std::vector<cplx> qamMap(std::span<const std::uint8_t> bits, int order);
std::vector<std::uint8_t> qamDemap(std::span<const cplx> symbols, int order);
int bitsPerSymbol(int order);
double qamMinDistance(int order);

/// In-place unitary FFT/IFFT (radix-2 for powers of two, direct DFT
/// otherwise).
void fft(VectorXcd& x, bool inverse);

/// One OFDM symbol: unitary IFFT of the subcarrier column, cyclic prefix of
/// length n_cp prepended.
VectorXcd ofdmModulate(const VectorXcd& subcarriers, int n_cp);

/// Drops the n_cp prefix and applies the forward unitary FFT.
VectorXcd ofdmDemodulate(const VectorXcd& samples, int n_c, int n_cp);

}  // namespace mmrc
