// SPDX-License-Identifier: Apache-2.0
#include "mmrc/als.hpp"

#include <array>
#include <stdexcept>

#include "mmrc/rng.hpp"

namespace mmrc {

namespace {

// Column offsets of each block inside W_out-n.
std::vector<Index> blockOffsets(const FeatureSample& sample, int mode) {
  std::vector<Index> off{0};
  for (const Tensor& b : sample.blocks) off.push_back(off.back() + b.dim(mode));
  return off;
}

Index outProductExcept(std::span<const Index> outDims, int mode) {
  Index p = 1;
  for (int m = 0; m < static_cast<int>(outDims.size()); ++m)
    if (m != mode) p *= outDims[static_cast<size_t>(m)];
  return p;
}

// G^k x_{m != mode} W_m^{(k)} for one block, unfolded on `mode`.
MatrixXcd blockContribution(const Tensor& block, std::span<const MatrixXcd> factors,
                            std::span<const std::vector<Index>> offsets, size_t k, int mode) {
  Tensor c = block;
  for (int m = 0; m < static_cast<int>(factors.size()); ++m) {
    if (m == mode) continue;
    const auto& off = offsets[static_cast<size_t>(m)];
    c = modeProduct(c, factors[static_cast<size_t>(m)].middleCols(off[k], off[k + 1] - off[k]), m);
  }
  return unfold(c, mode);
}

double sampleLoss(const FeatureSample& g, const Tensor& z, std::span<const MatrixXcd> factors) {
  Tensor pred = readoutForward(g, factors);
  double acc = 0.0;
  for (Index i = 0; i < z.size(); ++i) acc += std::norm(z[i] - pred[i]);
  return acc;
}

double totalLoss(const FeatureBatch& features, const TargetBatch& targets,
                 std::span<const MatrixXcd> factors, int tau) {
  double acc = 0.0;
  for (size_t q = 0; q < targets.size(); ++q)
    for (size_t t = 0; t < targets[q].size(); ++t)
      acc += sampleLoss(features[q][t + static_cast<size_t>(tau)], targets[q][t], factors);
  return acc;
}

MatrixXcd randomFullRankFactor(Index rows, Index cols, Rng& rng) {
  for (int attempt = 0; attempt < 32; ++attempt) {
    MatrixXcd w = rng.uniformRealMatrix(rows, cols);
    Eigen::ColPivHouseholderQR<MatrixXcd> qr(w);
    if (qr.rank() == std::min(rows, cols)) return w;
  }
  throw std::runtime_error("alsFit: failed to draw a full-rank initialization");
}

struct Problem {
  int modes = 0;
  std::vector<Index> outDims;
  std::vector<Index> featDims;
  std::vector<std::vector<Index>> offsets;  // per mode, block column offsets
  Index samples = 0;
};

Problem analyze(const FeatureBatch& features, const TargetBatch& targets, int tau) {
  if (features.empty() || targets.empty() || features.size() != targets.size())
    throw std::invalid_argument("alsFit: batch count mismatch");
  Problem p;
  const Tensor& z0 = targets[0][0];
  p.modes = z0.order();
  p.outDims = z0.shape();
  const FeatureSample& g0 = features[0][0];
  for (int n = 0; n < p.modes; ++n) p.featDims.push_back(g0.modeDim(n));
  for (int n = 0; n < p.modes; ++n) {
    if (p.featDims[static_cast<size_t>(n)] < p.outDims[static_cast<size_t>(n)])
      throw std::invalid_argument("alsFit: feature dim smaller than output dim");
    p.offsets.push_back(blockOffsets(g0, n));
  }
  for (size_t q = 0; q < targets.size(); ++q) {
    if (targets[q].empty()) throw std::invalid_argument("alsFit: empty target sequence");
    if (features[q].size() < targets[q].size() + static_cast<size_t>(tau))
      throw std::invalid_argument("alsFit: feature sequence too short for delay");
    p.samples += static_cast<Index>(targets[q].size());
  }
  return p;
}

MatrixXcd updateMode(const FeatureBatch& features, const TargetBatch& targets,
                     std::span<const MatrixXcd> factors, int mode, int tau, const Problem& p,
                     const LSOptions& ls) {
  Index cols = p.samples * outProductExcept(p.outDims, mode);
  Index chunk = outProductExcept(p.outDims, mode);
  MatrixXcd A(p.featDims[static_cast<size_t>(mode)], cols);
  MatrixXcd B(p.outDims[static_cast<size_t>(mode)], cols);
  Index colOff = 0;
  for (size_t q = 0; q < targets.size(); ++q) {
    for (size_t t = 0; t < targets[q].size(); ++t) {
      const FeatureSample& g = features[q][t + static_cast<size_t>(tau)];
      const auto& off = p.offsets[static_cast<size_t>(mode)];
      for (size_t k = 0; k < g.blocks.size(); ++k) {
        A.block(off[k], colOff, off[k + 1] - off[k], chunk) =
            blockContribution(g.blocks[k], factors, p.offsets, k, mode);
      }
      B.middleCols(colOff, chunk) = unfold(targets[q][t], mode);
      colOff += chunk;
    }
  }
  return solveRightLS(B, A, ls);
}

}  // namespace

Tensor readoutForward(const Tensor& g, std::span<const MatrixXcd> factors) {
  return tuckerEval(g, factors);
}

Tensor readoutForward(const FeatureSample& g, std::span<const MatrixXcd> factors) {
  int modes = static_cast<int>(factors.size());
  std::vector<std::vector<Index>> offsets;
  for (int n = 0; n < modes; ++n) offsets.push_back(blockOffsets(g, n));
  std::optional<Tensor> acc;
  for (size_t k = 0; k < g.blocks.size(); ++k) {
    Tensor term = g.blocks[k];
    for (int m = 0; m < modes; ++m) {
      const auto& off = offsets[static_cast<size_t>(m)];
      term = modeProduct(term, factors[static_cast<size_t>(m)].middleCols(off[k], off[k + 1] - off[k]), m);
    }
    if (acc) {
      *acc += term;
    } else {
      acc = std::move(term);
    }
  }
  return *acc;
}

static ReadoutFactors alsFitWithDelay(const FeatureBatch& features, const TargetBatch& targets,
                                      int tau, const AlsOptions& opts) {
  Problem p = analyze(features, targets, tau);
  Rng rng(opts.seed);
  std::vector<MatrixXcd> factors;
  for (int n = 0; n < p.modes; ++n)
    factors.push_back(randomFullRankFactor(p.outDims[static_cast<size_t>(n)],
                                           p.featDims[static_cast<size_t>(n)], rng));
  ReadoutFactors out;
  out.delay = tau;
  for (int it = 0; it < opts.iters; ++it) {
    for (int n = 0; n < p.modes; ++n)
      factors[static_cast<size_t>(n)] = updateMode(features, targets, factors, n, tau, p, opts.ls);
    double loss = totalLoss(features, targets, factors, tau);
    if (!std::isfinite(loss)) throw std::runtime_error("alsFit: non-finite loss");
    out.loss_trace.push_back(loss);
    if (opts.iterate_log) opts.iterate_log->push_back(factors);
    if (out.loss_trace.size() >= 2) {
      double prev = out.loss_trace[out.loss_trace.size() - 2];
      double scale = std::max(out.loss_trace.front(), 1e-300);
      if (std::abs(prev - loss) < opts.rel_tol * scale) break;
    }
  }
  out.factors = std::move(factors);
  return out;
}

ReadoutFactors alsFit(const FeatureBatch& features, const TargetBatch& targets,
                      const AlsOptions& opts) {
  return alsFitWithDelay(features, targets, 0, opts);
}

ReadoutFactors alsFitAtDelay(const FeatureBatch& features, const TargetBatch& targets, int tau,
                             const AlsOptions& opts) {
  return alsFitWithDelay(features, targets, tau, opts);
}

// Slices a stacked (N+2)-mode tensor at fixed time and batch index.
static Tensor sliceSample(const Tensor& stacked, Index t, Index q) {
  int n = stacked.order() - 2;
  std::vector<Index> shape(stacked.shape().begin(), stacked.shape().end() - 2);
  Tensor out(shape);
  Index inner = out.size();
  const cplx* src = stacked.data() + (q * stacked.dim(n) + t) * inner;
  std::copy(src, src + inner, out.data());
  return out;
}

ReadoutFactors alsFitDense(const Tensor& g, const Tensor& z, const AlsOptions& opts) {
  if (g.order() != z.order() || g.order() < 4)
    throw std::invalid_argument("alsFitDense: stacked tensors need N+2 matching modes");
  int n = g.order() - 2;
  Index nT = g.dim(n), nK = g.dim(n + 1);
  if (z.dim(n) != nT || z.dim(n + 1) != nK)
    throw std::invalid_argument("alsFitDense: time/batch extent mismatch");
  FeatureBatch features(static_cast<size_t>(nK));
  TargetBatch targets(static_cast<size_t>(nK));
  for (Index q = 0; q < nK; ++q)
    for (Index t = 0; t < nT; ++t) {
      FeatureSample s;
      s.blocks.push_back(sliceSample(g, t, q));
      features[static_cast<size_t>(q)].push_back(std::move(s));
      targets[static_cast<size_t>(q)].push_back(sliceSample(z, t, q));
    }
  return alsFit(features, targets, opts);
}

MatrixXcd alsFactorUpdateLowmem(const FeatureBatch& features, const TargetBatch& targets,
                                std::span<const MatrixXcd> factors, int mode,
                                const LSOptions& ls) {
  Problem p = analyze(features, targets, 0);
  std::vector<MatrixXcd> f(factors.begin(), factors.end());
  return updateMode(features, targets, f, mode, 0, p, ls);
}

static MatrixXcd kron(const MatrixXcd& a, const MatrixXcd& b) {
  MatrixXcd out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Index i = 0; i < a.rows(); ++i)
    for (Index j = 0; j < a.cols(); ++j) out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

MatrixXcd alsFactorUpdateNaive(const Tensor& g, const Tensor& z,
                               std::span<const MatrixXcd> factors, int mode,
                               const LSOptions& ls) {
  int n = g.order() - 2;
  if (mode < 0 || mode >= n) throw std::invalid_argument("alsFactorUpdateNaive: bad mode");
  // Ascending (reversed-convention) Kronecker chain over the other modes,
  // with identities on the time and batch axes.
  MatrixXcd chain = MatrixXcd::Identity(1, 1);
  for (int m = 0; m < n; ++m) {
    if (m == mode) continue;
    chain = kron(chain, factors[static_cast<size_t>(m)]);
  }
  Index tb = g.dim(n) * g.dim(n + 1);
  chain = kron(chain, MatrixXcd::Identity(tb, tb));
  return solveRightLS(unfold(z, mode), unfold(g, mode) * chain.transpose(), ls);
}

ReadoutFactors delaySearch(const FeatureBatch& features, const TargetBatch& targets,
                           int tau_max, const AlsOptions& opts) {
  if (targets.empty() || targets[0].empty())
    throw std::invalid_argument("delaySearch: empty target sequence");
  std::optional<ReadoutFactors> best;
  for (int tau = 0; tau <= tau_max; ++tau) {
    ReadoutFactors fit = alsFitWithDelay(features, targets, tau, opts);
    if (!best || fit.loss_trace.back() < best->loss_trace.back()) best = std::move(fit);
  }
  return *best;
}

UniquenessReport uniquenessCheck(std::span<const Index> n_out, std::span<const Index> n_f,
                                 Index n_t, Index n_k, bool merged) {
  if (n_out.size() != n_f.size()) throw std::invalid_argument("uniquenessCheck: size mismatch");
  UniquenessReport rep;
  Index tail = merged ? n_t * n_k : n_t + n_k;
  for (size_t n = 0; n < n_out.size(); ++n) {
    Index lhs = tail;
    for (size_t i = 0; i < n_out.size(); ++i)
      if (i != n) lhs += n_out[i];
    bool ok = lhs >= n_f[n];
    rep.per_mode.push_back(ok);
    rep.all = rep.all && ok;
  }
  return rep;
}

std::vector<ReadoutFactors> fitDecomposed(const FeatureBatch& features, const TargetBatch& targets,
                                          const AlsOptions& opts) {
  const Tensor& z0 = targets[0][0];
  if (z0.order() != 2) throw std::invalid_argument("fitDecomposed: defined for 2-mode outputs");
  std::vector<ReadoutFactors> fits;
  std::array<Index, 2> idx{};
  for (Index v = 0; v < z0.dim(1); ++v)
    for (Index u = 0; u < z0.dim(0); ++u) {
      idx = {u, v};
      TargetBatch sub(targets.size());
      for (size_t q = 0; q < targets.size(); ++q)
        for (const Tensor& z : targets[q]) {
          Tensor s({1, 1});
          s[0] = z.at(idx);
          sub[q].push_back(std::move(s));
        }
      fits.push_back(alsFit(features, sub, opts));
    }
  return fits;
}

std::pair<std::vector<ReadoutFactors>, int> delaySearchDecomposed(const FeatureBatch& features,
                                                                  const TargetBatch& targets,
                                                                  int tau_max,
                                                                  const AlsOptions& opts) {
  std::optional<std::vector<ReadoutFactors>> best;
  double bestLoss = 0.0;
  int bestTau = 0;
  for (int tau = 0; tau <= tau_max; ++tau) {
    // Reuse the joint machinery by truncating the feature sequences.
    FeatureBatch shifted(features.size());
    for (size_t q = 0; q < features.size(); ++q)
      shifted[q].assign(features[q].begin() + tau, features[q].end());
    std::vector<ReadoutFactors> fits = fitDecomposed(shifted, targets, opts);
    double loss = 0.0;
    for (const auto& f : fits) loss += f.loss_trace.back();
    if (!best || loss < bestLoss) {
      best = std::move(fits);
      bestLoss = loss;
      bestTau = tau;
    }
  }
  for (auto& f : *best) f.delay = bestTau;
  return {std::move(*best), bestTau};
}

}  // namespace mmrc
