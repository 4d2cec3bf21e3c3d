// SPDX-License-Identifier: Apache-2.0
#include "mmrc/mimo.hpp"

#include <stdexcept>

#include "mmrc/ofdm.hpp"
#include "mmrc/rng.hpp"

namespace mmrc {

void SysConfig::validate() const {
  if (n_az < 1 || n_el < 1 || n_users < 1 || n_ant_per_user < 1)
    throw std::invalid_argument("SysConfig: invalid antenna/user counts");
  if (n_sc < 1 || n_cp < 0) throw std::invalid_argument("SysConfig: invalid OFDM sizes");
  if (n_pilot < 1) throw std::invalid_argument("SysConfig: need at least one pilot symbol");
  if (n_pilot + n_data < 1) throw std::invalid_argument("SysConfig: empty subframe");
  if (taps < 1 || taps > n_cp) throw std::invalid_argument("SysConfig: taps must satisfy 1 <= L <= N_cp");
  if (qam_order != 4 && qam_order != 16 && qam_order != 64)
    throw std::invalid_argument("SysConfig: qam_order must be 4, 16, or 64");
  if (adc_max <= 0.0) throw std::invalid_argument("SysConfig: adc_max must be positive");
  if (pilot_style == PilotStyle::Orthogonal &&
      ((n_pilot & (n_pilot - 1)) != 0 || n_pilot < nTx()))
    throw std::invalid_argument(
        "SysConfig: orthogonal pilots need a power-of-two N_K >= N_t");
}

namespace {

// Walsh-Hadamard rows; exists for the sizes we accept (1, 2, and multiples
// of 4 up to 64 via Sylvester doubling of H_4... in practice powers of two).
MatrixXcd hadamard(int n) {
  if ((n & (n - 1)) != 0) throw std::invalid_argument("pilot design needs power-of-two N_K");
  Eigen::MatrixXd h(1, 1);
  h(0, 0) = 1.0;
  while (h.rows() < n) {
    Eigen::MatrixXd next(h.rows() * 2, h.cols() * 2);
    next << h, h, h, -h;
    h = next;
  }
  return h.cast<cplx>();
}

}  // namespace

Subframe buildSubframe(const SysConfig& cfg) {
  cfg.validate();
  Rng rng(Rng::derive(cfg.seed, 0x5f));
  const int nt = cfg.nTx();
  const int bps = bitsPerSymbol(cfg.qam_order);
  Subframe sf;
  sf.n_pilot = cfg.n_pilot;

  // Orthogonal pilot design: rows of a Hadamard matrix scaled onto the
  // constellation's corner point, with a per-subcarrier unit column scaling.
  // Rows stay mutually orthogonal and every entry is a constellation point.
  MatrixXcd pilotBase;
  bool orthogonalPilots = cfg.pilot_style == PilotStyle::Orthogonal;
  std::vector<std::uint8_t> cornerBits(static_cast<size_t>(bps), 0);
  cplx corner = qamMap(cornerBits, cfg.qam_order)[0];  // (L-1)(1+i)/sqrt(E)
  if (orthogonalPilots) pilotBase = hadamard(cfg.n_pilot).topRows(nt) * corner;

  for (int s = 0; s < cfg.totalSymbols(); ++s) {
    MatrixXcd col(cfg.n_sc, nt);
    if (sf.isPilot(s)) {
      for (int k = 0; k < cfg.n_sc; ++k) {
        if (orthogonalPilots) {
          cplx phase = std::polar(1.0, M_PI_2 * static_cast<double>(rng.below(4)));
          for (int t = 0; t < nt; ++t) col(k, t) = pilotBase(t, s) * phase;
        } else {
          // Default: random constellation pilots (no orthogonality claim).
          std::vector<std::uint8_t> b(static_cast<size_t>(bps * nt));
          for (auto& x : b) x = static_cast<std::uint8_t>(rng.below(2));
          auto syms = qamMap(b, cfg.qam_order);
          for (int t = 0; t < nt; ++t) col(k, t) = syms[static_cast<size_t>(t)];
        }
      }
    } else {
      std::vector<std::uint8_t> b(static_cast<size_t>(bps) * static_cast<size_t>(cfg.n_sc) * static_cast<size_t>(nt));
      for (auto& x : b) x = static_cast<std::uint8_t>(rng.below(2));
      auto syms = qamMap(b, cfg.qam_order);
      for (int t = 0; t < nt; ++t)
        for (int k = 0; k < cfg.n_sc; ++k) col(k, t) = syms[static_cast<size_t>(t * cfg.n_sc + k)];
      sf.bits.insert(sf.bits.end(), b.begin(), b.end());
    }
    sf.grid.push_back(std::move(col));
  }

  sf.tx_time.resize(nt, static_cast<Index>(cfg.symbolSamples()) * cfg.totalSymbols());
  for (int s = 0; s < cfg.totalSymbols(); ++s)
    for (int t = 0; t < nt; ++t)
      sf.tx_time.row(t).segment(static_cast<Index>(s) * cfg.symbolSamples(), cfg.symbolSamples()) =
          ofdmModulate(sf.grid[static_cast<size_t>(s)].col(t), cfg.n_cp).transpose();
  return sf;
}

namespace {

VectorXcd steering(int n, double angle, Rng&) {
  VectorXcd a(n);
  for (int m = 0; m < n; ++m) a(m) = std::polar(1.0, -M_PI * m * std::sin(angle));
  return a;
}

}  // namespace

ChannelRealization genChannel(const SysConfig& cfg) {
  cfg.validate();
  Rng rng(Rng::derive(cfg.seed, 0xc4));
  ChannelRealization ch;
  double norm = 0.0;
  for (int l = 0; l < cfg.taps; ++l) {
    ch.pdp.push_back(std::exp(-3.0 * l / cfg.taps));
    norm += ch.pdp.back();
  }
  for (double& p : ch.pdp) p /= norm;

  const int nt = cfg.nTx();
  // Per-user cluster centers; rays per tap scatter around them.
  std::vector<double> az0(static_cast<size_t>(cfg.n_users));
  std::vector<double> el0(static_cast<size_t>(cfg.n_users));
  for (int u = 0; u < cfg.n_users; ++u) {
    az0[static_cast<size_t>(u)] = (rng.uniform() - 0.5) * M_PI;        // (-90, 90) deg
    el0[static_cast<size_t>(u)] = (rng.uniform() - 0.5) * M_PI / 2.0;  // (-45, 45) deg
  }
  const double spread = M_PI / 36.0;  // 5 degree ray offset scale

  std::vector<Tensor> taps;
  std::vector<double> txEnergy(static_cast<size_t>(nt), 0.0);
  for (int l = 0; l < cfg.taps; ++l) {
    Tensor h({cfg.n_az, cfg.n_el, nt});
    for (int t = 0; t < nt; ++t) {
      int u = t % cfg.n_users;
      for (int p = 0; p < cfg.paths_per_tap; ++p) {
        double az = az0[static_cast<size_t>(u)] + spread * rng.gaussian();
        double el = el0[static_cast<size_t>(u)] + spread * rng.gaussian();
        cplx gain = rng.cgaussian() * std::sqrt(ch.pdp[static_cast<size_t>(l)] /
                                                cfg.paths_per_tap);
        VectorXcd a = steering(cfg.n_az, az, rng);
        VectorXcd b = steering(cfg.n_el, el, rng);
        for (int j = 0; j < cfg.n_el; ++j)
          for (int i = 0; i < cfg.n_az; ++i) {
            std::array<Index, 3> idx{i, j, t};
            h.at(idx) += gain * a(i) * b(j);
          }
      }
    }
    for (int t = 0; t < nt; ++t) {
      double e = 0.0;
      for (int j = 0; j < cfg.n_el; ++j)
        for (int i = 0; i < cfg.n_az; ++i) {
          std::array<Index, 3> idx{i, j, t};
          e += std::norm(h.at(idx));
        }
      txEnergy[static_cast<size_t>(t)] += e;
    }
    taps.push_back(std::move(h));
  }
  // Unit average gain per receive antenna for each transmit stream.
  for (int t = 0; t < nt; ++t) {
    double scale = std::sqrt(static_cast<double>(cfg.nRx()) / txEnergy[static_cast<size_t>(t)]);
    for (Tensor& h : taps)
      for (int j = 0; j < cfg.n_el; ++j)
        for (int i = 0; i < cfg.n_az; ++i) {
          std::array<Index, 3> idx{i, j, t};
          h.at(idx) *= scale;
        }
  }
  ch.taps = std::move(taps);
  return ch;
}

static MatrixXcd tapMatrix(const Tensor& h) {
  // N_a x N_e x N_t -> (N_a*N_e) x N_t with azimuth fastest.
  Index na = h.dim(0), ne = h.dim(1), nt = h.dim(2);
  MatrixXcd m(na * ne, nt);
  for (Index t = 0; t < nt; ++t)
    for (Index j = 0; j < ne; ++j)
      for (Index i = 0; i < na; ++i) {
        std::array<Index, 3> idx{i, j, t};
        m(i + j * na, t) = h.at(idx);
      }
  return m;
}

MatrixXcd channelFrequencyResponse(const ChannelRealization& ch, const SysConfig& cfg, int k) {
  MatrixXcd f = MatrixXcd::Zero(cfg.nRx(), cfg.nTx());
  for (size_t l = 0; l < ch.taps.size(); ++l)
    f += tapMatrix(ch.taps[l]) *
         std::polar(1.0, -2.0 * M_PI * static_cast<double>(k) * static_cast<double>(l) / cfg.n_sc);
  return f;
}

RxRecord applyChannel(const MatrixXcd& tx_time, const ChannelRealization& ch,
                      const SysConfig& cfg) {
  const Index samples = tx_time.cols();
  if (samples < static_cast<Index>(ch.taps.size()))
    throw std::invalid_argument("applyChannel: tx shorter than channel memory");
  RxRecord rec;
  rec.rx = MatrixXcd::Zero(cfg.nRx(), samples);
  for (size_t l = 0; l < ch.taps.size(); ++l) {
    MatrixXcd hm = tapMatrix(ch.taps[l]);
    Index shift = static_cast<Index>(l);
    rec.rx.rightCols(samples - shift) += hm * tx_time.leftCols(samples - shift);
  }
  double signalPower = rec.rx.squaredNorm() / static_cast<double>(rec.rx.size());
  if (std::isfinite(cfg.snr_db)) {
    rec.noise_var = signalPower / std::pow(10.0, cfg.snr_db / 10.0);
    Rng rng(Rng::derive(cfg.seed, 0x17));
    double sigma = std::sqrt(rec.noise_var);
    for (Index c = 0; c < rec.rx.cols(); ++c)
      for (Index r = 0; r < rec.rx.rows(); ++r) rec.rx(r, c) += sigma * rng.cgaussian();
  }
  if (cfg.impairment == Impairment::OneBit) rec.rx = oneBitQuantize(rec.rx, cfg.adc_max);
  return rec;
}

MatrixXcd oneBitQuantize(const MatrixXcd& y, double a_max) {
  if (a_max <= 0.0) throw std::invalid_argument("oneBitQuantize: A_max must be positive");
  MatrixXcd out(y.rows(), y.cols());
  for (Index c = 0; c < y.cols(); ++c)
    for (Index r = 0; r < y.rows(); ++r) {
      cplx v = y(r, c);
      out(r, c) = cplx(v.real() < 0.0 ? -a_max : a_max, v.imag() < 0.0 ? -a_max : a_max);
    }
  return out;
}

}  // namespace mmrc
