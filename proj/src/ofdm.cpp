// SPDX-License-Identifier: Apache-2.0
#include "mmrc/ofdm.hpp"

#include <stdexcept>

namespace mmrc {

namespace {

int axisLevels(int order) {
  switch (order) {
    case 4: return 2;
    case 16: return 4;
    case 64: return 8;
    default: throw std::invalid_argument("qam: order must be 4, 16, or 64");
  }
}

double energyScale(int order) {
  int l = axisLevels(order);
  return std::sqrt(2.0 * (l * l - 1) / 3.0);
}

int grayEncode(int i) { return i ^ (i >> 1); }

int grayDecode(int g) {
  int i = 0;
  for (; g; g >>= 1) i ^= g;
  return i;
}

double axisValue(int bits, int m, int order) {
  int l = axisLevels(order);
  int idx = grayDecode(bits);
  (void)m;
  return static_cast<double>(l - 1 - 2 * idx) / energyScale(order);
}

int axisBits(double v, int m, int order) {
  int l = axisLevels(order);
  double scaled = v * energyScale(order);
  // Nearest level among (l-1) - 2i for i = 0..l-1.
  int idx = static_cast<int>(std::lround((static_cast<double>(l - 1) - scaled) / 2.0));
  idx = std::clamp(idx, 0, l - 1);
  (void)m;
  return grayEncode(idx);
}

}  // namespace

int bitsPerSymbol(int order) {
  int l = axisLevels(order);
  int m = 0;
  while ((1 << m) < l) ++m;
  return 2 * m;
}

double qamMinDistance(int order) {
  return 2.0 / energyScale(order);
}

std::vector<cplx> qamMap(std::span<const std::uint8_t> bits, int order) {
  int bps = bitsPerSymbol(order);
  int m = bps / 2;
  if (bits.size() % static_cast<size_t>(bps) != 0)
    throw std::invalid_argument("qamMap: bit count not divisible by bits per symbol");
  std::vector<cplx> out;
  out.reserve(bits.size() / static_cast<size_t>(bps));
  for (size_t p = 0; p < bits.size(); p += static_cast<size_t>(bps)) {
    int bi = 0, bq = 0;
    for (int k = 0; k < m; ++k) bi = (bi << 1) | bits[p + static_cast<size_t>(k)];
    for (int k = 0; k < m; ++k) bq = (bq << 1) | bits[p + static_cast<size_t>(m + k)];
    out.emplace_back(axisValue(bi, m, order), axisValue(bq, m, order));
  }
  return out;
}

std::vector<std::uint8_t> qamDemap(std::span<const cplx> symbols, int order) {
  int bps = bitsPerSymbol(order);
  int m = bps / 2;
  std::vector<std::uint8_t> out;
  out.reserve(symbols.size() * static_cast<size_t>(bps));
  for (cplx s : symbols) {
    int bi = axisBits(s.real(), m, order);
    int bq = axisBits(s.imag(), m, order);
    for (int k = m - 1; k >= 0; --k) out.push_back(static_cast<std::uint8_t>((bi >> k) & 1));
    for (int k = m - 1; k >= 0; --k) out.push_back(static_cast<std::uint8_t>((bq >> k) & 1));
  }
  return out;
}

void fft(VectorXcd& x, bool inverse) {
  const Index n = x.size();
  if (n == 0) throw std::invalid_argument("fft: empty input");
  double sgn = inverse ? 1.0 : -1.0;
  if ((n & (n - 1)) != 0) {
    // Direct unitary DFT for non power-of-two lengths.
    VectorXcd y = VectorXcd::Zero(n);
    for (Index k = 0; k < n; ++k)
      for (Index t = 0; t < n; ++t)
        y(k) += x(t) * std::polar(1.0, sgn * 2.0 * M_PI * static_cast<double>(k * t) / static_cast<double>(n));
    x = y / std::sqrt(static_cast<double>(n));
    return;
  }
  // Iterative radix-2 with bit-reversal.
  for (Index i = 1, j = 0; i < n; ++i) {
    Index bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(x(i), x(j));
  }
  for (Index len = 2; len <= n; len <<= 1) {
    double ang = sgn * 2.0 * M_PI / static_cast<double>(len);
    cplx wl = std::polar(1.0, ang);
    for (Index i = 0; i < n; i += len) {
      cplx w(1.0, 0.0);
      for (Index k = 0; k < len / 2; ++k) {
        cplx u = x(i + k);
        cplx v = x(i + k + len / 2) * w;
        x(i + k) = u + v;
        x(i + k + len / 2) = u - v;
        w *= wl;
      }
    }
  }
  x /= std::sqrt(static_cast<double>(n));
}

VectorXcd ofdmModulate(const VectorXcd& subcarriers, int n_cp) {
  VectorXcd time = subcarriers;
  fft(time, /*inverse=*/true);
  VectorXcd out(time.size() + n_cp);
  out.head(n_cp) = time.tail(n_cp);
  out.tail(time.size()) = time;
  return out;
}

VectorXcd ofdmDemodulate(const VectorXcd& samples, int n_c, int n_cp) {
  if (samples.size() != n_c + n_cp)
    throw std::invalid_argument("ofdmDemodulate: sample length mismatch");
  VectorXcd body = samples.segment(n_cp, n_c);
  fft(body, /*inverse=*/false);
  return body;
}

}  // namespace mmrc
