// SPDX-License-Identifier: Apache-2.0
#include "mmrc/detectors.hpp"

#include <numeric>
#include <stdexcept>

#include "mmrc/ofdm.hpp"
#include "mmrc/rng.hpp"

namespace mmrc {

double ber(std::span<const std::uint8_t> truth, std::span<const std::uint8_t> detected) {
  if (truth.size() != detected.size()) throw std::invalid_argument("ber: length mismatch");
  if (truth.empty()) return 0.0;
  size_t errs = 0;
  for (size_t i = 0; i < truth.size(); ++i) errs += truth[i] != detected[i];
  return static_cast<double>(errs) / static_cast<double>(truth.size());
}

std::vector<std::uint8_t> demapGrid(std::span<const MatrixXcd> grid, int order) {
  std::vector<std::uint8_t> bits;
  for (const MatrixXcd& g : grid)
    for (Index t = 0; t < g.cols(); ++t) {
      std::vector<cplx> col(g.col(t).data(), g.col(t).data() + g.rows());
      auto b = qamDemap(col, order);
      bits.insert(bits.end(), b.begin(), b.end());
    }
  return bits;
}

namespace {

// Received samples of one OFDM symbol as N_a x N_e tensors (azimuth fastest,
// matching the antenna vectorization of RxRecord).
std::vector<Tensor> rxSymbolTensors(const SysConfig& cfg, const RxRecord& rec, int symbol) {
  const Index ss = cfg.symbolSamples();
  std::vector<Tensor> out;
  out.reserve(static_cast<size_t>(ss));
  for (Index t = 0; t < ss; ++t) {
    Tensor y({cfg.n_az, cfg.n_el});
    Index col = static_cast<Index>(symbol) * ss + t;
    for (int j = 0; j < cfg.n_el; ++j)
      for (int i = 0; i < cfg.n_az; ++i) {
        std::array<Index, 2> idx{i, j};
        y.at(idx) = rec.rx(i + j * cfg.n_az, col);
      }
    out.push_back(std::move(y));
  }
  return out;
}

// Transmit waveform of one symbol as N_u x N_q tensors per sample; stream
// index u + N_u * q.
std::vector<Tensor> txSymbolTargets(const SysConfig& cfg, const Subframe& sf, int symbol) {
  const Index ss = cfg.symbolSamples();
  std::vector<Tensor> out;
  out.reserve(static_cast<size_t>(ss));
  for (Index t = 0; t < ss; ++t) {
    Tensor z({cfg.n_users, cfg.n_ant_per_user});
    Index col = static_cast<Index>(symbol) * ss + t;
    for (int q = 0; q < cfg.n_ant_per_user; ++q)
      for (int u = 0; u < cfg.n_users; ++u) {
        std::array<Index, 2> idx{u, q};
        z.at(idx) = sf.tx_time(u + cfg.n_users * q, col);
      }
    out.push_back(std::move(z));
  }
  return out;
}

ReservoirWeights initScaled(const RCConfig& rc, double input_scale) {
  ReservoirWeights w = initReservoir(rc);
  if (input_scale != 1.0)
    for (MatrixXcd& m : w.input) m *= input_scale;
  return w;
}

RcModel trainCommon(const SysConfig& cfg, const Subframe& sf, const RxRecord& rec,
                    const RcDetectOptions& opts, bool decomposed) {
  cfg.validate();
  RcModel model;
  model.rc = makeRcConfig(cfg, opts);
  model.rc.validate();
  model.weights = initScaled(model.rc, opts.input_scale);

  FeatureBatch features(static_cast<size_t>(cfg.n_pilot));
  TargetBatch targets(static_cast<size_t>(cfg.n_pilot));
  for (int p = 0; p < cfg.n_pilot; ++p) {
    auto inputs = rxSymbolTensors(cfg, rec, p);
    features[static_cast<size_t>(p)] = runReservoir(inputs, model.weights, model.rc);
    targets[static_cast<size_t>(p)] = txSymbolTargets(cfg, sf, p);
  }

  AlsOptions als;
  als.iters = opts.als_iters;
  als.ls.ridge = opts.ridge;
  als.seed = Rng::derive(opts.seed, 0xa15);
  if (!decomposed) {
    ReadoutFactors fit = delaySearch(features, targets, model.rc.max_delay, als);
    if (opts.iterate_log) {
      // Re-run the winning delay so the log holds exactly one sweep history.
      als.iterate_log = opts.iterate_log;
      als.iterate_log->clear();
      fit = alsFitAtDelay(features, targets, fit.delay, als);
    }
    model.factors = std::move(fit.factors);
    model.delay = fit.delay;
    model.loss_trace = std::move(fit.loss_trace);
  } else {
    auto [fits, tau] = delaySearchDecomposed(features, targets, model.rc.max_delay, als);
    model.delay = tau;
    model.loss_trace.assign(fits.front().loss_trace.size(), 0.0);
    for (const ReadoutFactors& f : fits) {
      model.entries.push_back(f.factors);
      for (size_t i = 0; i < f.loss_trace.size() && i < model.loss_trace.size(); ++i)
        model.loss_trace[i] += f.loss_trace[i];
    }
  }
  return model;
}

std::vector<int> dataSymbols(const SysConfig& cfg) {
  std::vector<int> s(static_cast<size_t>(cfg.n_data));
  std::iota(s.begin(), s.end(), cfg.n_pilot);
  return s;
}

DetectionResult finishRc(const RcModel& model, const SysConfig& cfg, const Subframe& sf,
                         const RxRecord& rec) {
  DetectionResult res;
  res.est_grid = rcEstimateGrid(model, cfg, rec, dataSymbols(cfg));
  res.bits = demapGrid(res.est_grid, cfg.qam_order);
  res.ber = ber(sf.bits, res.bits);
  res.delay = model.delay;
  res.loss_trace = model.loss_trace;
  return res;
}

}  // namespace

RCConfig makeRcConfig(const SysConfig& cfg, const RcDetectOptions& opts) {
  RCConfig rc;
  rc.modes = 2;
  rc.input_dims = {cfg.n_az, cfg.n_el};
  rc.output_dims = {cfg.n_users, cfg.n_ant_per_user};
  rc.neurons = opts.neurons;
  rc.window = opts.window;
  rc.max_delay = opts.max_delay;
  rc.spectral_radius = opts.spectral_radius;
  if (opts.identity_perm_only) rc.permutations = {{0, 1}};
  rc.seed = Rng::derive(opts.seed, 0x7e5);
  rc.als_iters = opts.als_iters;
  return rc;
}

RcModel rcTrainJoint(const SysConfig& cfg, const Subframe& sf, const RxRecord& rec,
                     const RcDetectOptions& opts) {
  return trainCommon(cfg, sf, rec, opts, false);
}

RcModel rcTrainDecomposed(const SysConfig& cfg, const Subframe& sf, const RxRecord& rec,
                          const RcDetectOptions& opts) {
  return trainCommon(cfg, sf, rec, opts, true);
}

std::vector<MatrixXcd> rcEstimateGrid(const RcModel& model, const SysConfig& cfg,
                                      const RxRecord& rec, std::span<const int> symbols) {
  const Index ss = cfg.symbolSamples();
  const int nt = cfg.nTx();
  std::vector<MatrixXcd> grid;
  for (int s : symbols) {
    auto inputs = rxSymbolTensors(cfg, rec, s);
    auto feats = runReservoir(inputs, model.weights, model.rc);
    MatrixXcd streams(nt, ss);
    for (Index t = 0; t < ss; ++t) {
      const FeatureSample& g = feats[static_cast<size_t>(t + model.delay)];
      if (model.entries.empty()) {
        Tensor z = readoutForward(g, model.factors);
        for (int q = 0; q < cfg.n_ant_per_user; ++q)
          for (int u = 0; u < cfg.n_users; ++u) {
            std::array<Index, 2> idx{u, q};
            streams(u + cfg.n_users * q, t) = z.at(idx);
          }
      } else {
        for (int e = 0; e < nt; ++e) {
          Tensor z = readoutForward(g, model.entries[static_cast<size_t>(e)]);
          std::array<Index, 2> idx{0, 0};
          streams(e, t) = z.at(idx);
        }
      }
    }
    MatrixXcd est(cfg.n_sc, nt);
    for (int t = 0; t < nt; ++t)
      est.col(t) = ofdmDemodulate(streams.row(t).transpose(), cfg.n_sc, cfg.n_cp);
    grid.push_back(std::move(est));
  }
  return grid;
}

DetectionResult rcDetectJoint(const SysConfig& cfg, const Subframe& sf, const RxRecord& rec,
                              const RcDetectOptions& opts) {
  return finishRc(rcTrainJoint(cfg, sf, rec, opts), cfg, sf, rec);
}

DetectionResult rcDetectDecomposed(const SysConfig& cfg, const Subframe& sf, const RxRecord& rec,
                                   const RcDetectOptions& opts) {
  return finishRc(rcTrainDecomposed(cfg, sf, rec, opts), cfg, sf, rec);
}

DetectionResult lmmseDetect(const SysConfig& cfg, const Subframe& sf, const RxRecord& rec) {
  cfg.validate();
  const int nt = cfg.nTx();
  const int nr = cfg.nRx();
  if (cfg.n_pilot < nt)
    throw std::invalid_argument("lmmseDetect: N_K < N_t, pilot system underdetermined");
  const Index ss = cfg.symbolSamples();
  const double nv = rec.noise_var;

  // Frequency-domain observations: demod[s] is N_rx x N_c.
  std::vector<MatrixXcd> demod;
  for (int s = 0; s < cfg.totalSymbols(); ++s) {
    MatrixXcd d(nr, cfg.n_sc);
    for (int r = 0; r < nr; ++r)
      d.row(r) =
          ofdmDemodulate(rec.rx.row(r).segment(static_cast<Index>(s) * ss, ss).transpose(),
                         cfg.n_sc, cfg.n_cp)
              .transpose();
    demod.push_back(std::move(d));
  }

  DetectionResult res;
  res.est_grid.assign(static_cast<size_t>(cfg.n_data), MatrixXcd(cfg.n_sc, nt));
  for (int k = 0; k < cfg.n_sc; ++k) {
    MatrixXcd yp(nr, cfg.n_pilot);
    MatrixXcd p(nt, cfg.n_pilot);
    for (int s = 0; s < cfg.n_pilot; ++s) {
      yp.col(s) = demod[static_cast<size_t>(s)].col(k);
      for (int t = 0; t < nt; ++t) p(t, s) = sf.grid[static_cast<size_t>(s)](k, t);
    }
    MatrixXcd h = yp * p.adjoint() *
                  (p * p.adjoint() + nv * MatrixXcd::Identity(nt, nt)).inverse();
    MatrixXcd w =
        (h.adjoint() * h + nv * MatrixXcd::Identity(nt, nt)).inverse() * h.adjoint();
    for (int d = 0; d < cfg.n_data; ++d)
      res.est_grid[static_cast<size_t>(d)].row(k) =
          (w * demod[static_cast<size_t>(cfg.n_pilot + d)].col(k)).transpose();
  }
  res.bits = demapGrid(res.est_grid, cfg.qam_order);
  res.ber = ber(sf.bits, res.bits);
  return res;
}

DetectionResult wesnDetect(const SysConfig& cfg, const Subframe& sf, const RxRecord& rec,
                           const WesnOptions& opts) {
  cfg.validate();
  if (opts.neurons < 1 || opts.buffer < 1 || opts.max_delay < 0)
    throw std::invalid_argument("wesnDetect: invalid WESN configuration");
  const int nin = cfg.nRx();
  const int nt = cfg.nTx();
  const Index ss = cfg.symbolSamples();
  const Index nfeat = opts.neurons + static_cast<Index>(opts.buffer) * nin;

  Rng rng(Rng::derive(opts.seed, 0x3e5));
  MatrixXcd wres = rng.uniformRealMatrix(opts.neurons, opts.neurons);
  wres = scaleToSpectralRadius(wres, opts.spectral_radius);
  MatrixXcd win =
      rng.uniformRealMatrix(opts.neurons, static_cast<Index>(opts.buffer) * nin) * opts.input_scale;

  // Features of one OFDM symbol: [state(t+1); buffered input(t)] per step,
  // run for ss + tau_max steps with zero input padding.
  auto symbolFeatures = [&](int symbol) {
    MatrixXcd f = MatrixXcd::Zero(nfeat, ss + opts.max_delay);
    VectorXcd state = VectorXcd::Zero(opts.neurons);
    VectorXcd buf = VectorXcd::Zero(static_cast<Index>(opts.buffer) * nin);
    for (Index t = 0; t < ss + opts.max_delay; ++t) {
      buf.tail(buf.size() - nin) = buf.head(buf.size() - nin).eval();
      if (t < ss)
        buf.head(nin) = rec.rx.col(static_cast<Index>(symbol) * ss + t);
      else
        buf.head(nin).setZero();
      VectorXcd pre = wres * state + win * buf;
      for (Index i = 0; i < pre.size(); ++i)
        state(i) = cplx(std::tanh(pre(i).real()), std::tanh(pre(i).imag()));
      f.col(t).head(opts.neurons) = state;
      f.col(t).tail(buf.size()) = buf;
    }
    return f;
  };

  // One least-squares readout per candidate delay; keep the best train loss.
  LSOptions ls;
  ls.ridge = opts.ridge;
  MatrixXcd bestW;
  int bestTau = 0;
  double bestLoss = std::numeric_limits<double>::infinity();
  std::vector<MatrixXcd> pilotFeats;
  for (int p = 0; p < cfg.n_pilot; ++p) pilotFeats.push_back(symbolFeatures(p));
  for (int tau = 0; tau <= opts.max_delay; ++tau) {
    MatrixXcd a(nfeat, static_cast<Index>(cfg.n_pilot) * ss);
    MatrixXcd b(nt, static_cast<Index>(cfg.n_pilot) * ss);
    for (int p = 0; p < cfg.n_pilot; ++p) {
      a.middleCols(static_cast<Index>(p) * ss, ss) = pilotFeats[static_cast<size_t>(p)].middleCols(tau, ss);
      b.middleCols(static_cast<Index>(p) * ss, ss) =
          sf.tx_time.middleCols(static_cast<Index>(p) * ss, ss);
    }
    MatrixXcd w = solveRightLS(b, a, ls);
    double loss = (w * a - b).squaredNorm();
    if (bestW.size() == 0 || loss < bestLoss - 1e-15 * std::max(1.0, bestLoss)) {
      bestLoss = loss;
      bestTau = tau;
      bestW = std::move(w);
    }
  }

  DetectionResult res;
  res.delay = bestTau;
  res.loss_trace = {bestLoss};
  for (int d = 0; d < cfg.n_data; ++d) {
    MatrixXcd f = symbolFeatures(cfg.n_pilot + d);
    MatrixXcd streams = bestW * f.middleCols(bestTau, ss);
    MatrixXcd est(cfg.n_sc, nt);
    for (int t = 0; t < nt; ++t)
      est.col(t) = ofdmDemodulate(streams.row(t).transpose(), cfg.n_sc, cfg.n_cp);
    res.est_grid.push_back(std::move(est));
  }
  res.bits = demapGrid(res.est_grid, cfg.qam_order);
  res.ber = ber(sf.bits, res.bits);
  return res;
}

}  // namespace mmrc
