// SPDX-License-Identifier: Apache-2.0
#include "mmrc/reservoir.hpp"

#include <algorithm>
#include <deque>
#include <stdexcept>

#include "mmrc/linalg.hpp"
#include "mmrc/rng.hpp"

namespace mmrc {

namespace {

std::vector<int> identityPerm(int n) {
  std::vector<int> p(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) p[static_cast<size_t>(i)] = i;
  return p;
}

Tensor applyActivation(Tensor t, Activation act) {
  if (act == Activation::Identity) return t;
  for (Index i = 0; i < t.size(); ++i)
    t[i] = cplx(std::tanh(t[i].real()), std::tanh(t[i].imag()));
  return t;
}

}  // namespace

std::vector<std::vector<int>> RCConfig::effectivePermutations() const {
  if (!permutations.empty()) return permutations;
  std::vector<std::vector<int>> out;
  std::vector<int> p = identityPerm(modes);
  if (modes <= 3) {
    do {
      out.push_back(p);
    } while (std::next_permutation(p.begin(), p.end()));
  } else {
    out.push_back(p);
  }
  return out;
}

void RCConfig::validate() const {
  if (modes < 2) throw std::invalid_argument("RCConfig: need at least 2 modes");
  if (static_cast<int>(input_dims.size()) != modes ||
      static_cast<int>(output_dims.size()) != modes)
    throw std::invalid_argument("RCConfig: per-mode size lists must match mode count");
  if (neurons < 1 || window < 1 || max_delay < 0 || als_iters < 1)
    throw std::invalid_argument("RCConfig: invalid size parameter");
  if (!(spectral_radius > 0.0 && spectral_radius < 1.0))
    throw std::invalid_argument("RCConfig: spectral radius must lie in (0,1)");
  auto perms = effectivePermutations();
  if (perms.empty()) throw std::invalid_argument("RCConfig: permutation list empty");
  bool hasIdentity = false;
  for (const auto& p : perms) {
    if (static_cast<int>(p.size()) != modes)
      throw std::invalid_argument("RCConfig: permutation of wrong length");
    std::vector<bool> seen(static_cast<size_t>(modes), false);
    for (int v : p) {
      if (v < 0 || v >= modes || seen[static_cast<size_t>(v)])
        throw std::invalid_argument("RCConfig: invalid permutation");
      seen[static_cast<size_t>(v)] = true;
    }
    if (p == identityPerm(modes)) hasIdentity = true;
  }
  if (!hasIdentity) throw std::invalid_argument("RCConfig: identity permutation required");
}

Index RCConfig::featureDim(int n) const {
  auto perms = effectivePermutations();
  Index d = static_cast<Index>(perms.size()) * neurons;
  for (const auto& p : perms)
    d += static_cast<Index>(window) * input_dims[static_cast<size_t>(p[static_cast<size_t>(n)])];
  return d;
}

ReservoirWeights initReservoir(const RCConfig& cfg) {
  cfg.validate();
  Rng rng(cfg.seed);
  ReservoirWeights w;
  for (int n = 0; n < cfg.modes; ++n) {
    MatrixXcd res = rng.uniformRealMatrix(cfg.neurons, cfg.neurons);
    w.state.push_back(scaleToSpectralRadius(res, cfg.spectral_radius));
    w.input.push_back(rng.uniformRealMatrix(
        cfg.neurons, static_cast<Index>(cfg.window) * cfg.input_dims[static_cast<size_t>(n)]));
  }
  return w;
}

Tensor windowInput(std::span<const Tensor> history) {
  return superblockdiag(history);
}

Tensor stateUpdate(const Tensor& state, const Tensor& windowed, const ReservoirWeights& w,
                   Activation act) {
  std::vector<Tensor> blocks{state, windowed};
  Tensor z = superblockdiag(blocks);
  for (int n = 0; n < state.order(); ++n) z = modeProduct(z, w.tran(n), n);
  return applyActivation(std::move(z), act);
}

Index FeatureSample::modeDim(int n) const {
  Index d = 0;
  for (const Tensor& b : blocks) d += b.dim(n);
  return d;
}

Tensor FeatureSample::dense() const {
  return superblockdiag(blocks);
}

namespace {

// Feature partition for one step: permuted states, then per permutation the
// windowed input samples (most recent first). Flattening the nested
// super-block-diagonal of the paper's queue gives exactly this list.
FeatureSample makeFeature(const Tensor& state, const std::deque<Tensor>& history,
                          const std::vector<std::vector<int>>& perms) {
  FeatureSample f;
  for (const auto& p : perms) f.blocks.push_back(tensorTranspose(state, p));
  for (const auto& p : perms)
    for (const Tensor& y : history) f.blocks.push_back(tensorTranspose(y, p));
  return f;
}

}  // namespace

Tensor featureQueue(const Tensor& state, const Tensor& windowed, const RCConfig& cfg) {
  auto perms = cfg.effectivePermutations();
  std::vector<Tensor> blocks;
  for (const auto& p : perms) blocks.push_back(tensorTranspose(state, p));
  for (const auto& p : perms) blocks.push_back(tensorTranspose(windowed, p));
  return superblockdiag(blocks);
}

std::vector<FeatureSample> runReservoir(std::span<const Tensor> inputs, const ReservoirWeights& w,
                                        const RCConfig& cfg) {
  cfg.validate();
  if (inputs.empty()) throw std::invalid_argument("runReservoir: empty input sequence");
  auto perms = cfg.effectivePermutations();
  std::vector<Index> inShape;
  for (int d : cfg.input_dims) inShape.push_back(d);
  Tensor zeroIn(inShape);
  std::vector<Index> stateShape(static_cast<size_t>(cfg.modes), cfg.neurons);
  Tensor state(stateShape);

  std::deque<Tensor> history;  // most recent first, length T'
  for (int i = 0; i < cfg.window; ++i) history.push_back(zeroIn);

  const Index steps = static_cast<Index>(inputs.size()) + cfg.max_delay;
  std::vector<FeatureSample> features;
  features.reserve(static_cast<size_t>(steps));

  for (Index t = 0; t < steps; ++t) {
    const Tensor& in = t < static_cast<Index>(inputs.size()) ? inputs[static_cast<size_t>(t)] : zeroIn;
    if (in.shape() != zeroIn.shape())
      throw std::invalid_argument("runReservoir: input sample shape mismatch");
    history.push_front(in);
    history.pop_back();

    // Block form of the state recursion: the state and each windowed input
    // sample carry their own factor slices of W_tran-n.
    Tensor next = state;
    for (int n = 0; n < cfg.modes; ++n) next = modeProduct(next, w.state[static_cast<size_t>(n)], n);
    for (int tau = 0; tau < cfg.window; ++tau) {
      Tensor term = history[static_cast<size_t>(tau)];
      bool zero = true;
      for (Index i = 0; i < term.size() && zero; ++i)
        if (term[i] != cplx(0.0, 0.0)) zero = false;
      if (zero) continue;
      for (int n = 0; n < cfg.modes; ++n) {
        Index width = cfg.input_dims[static_cast<size_t>(n)];
        term = modeProduct(term, w.input[static_cast<size_t>(n)].middleCols(tau * width, width), n);
      }
      next += term;
    }
    state = applyActivation(std::move(next), cfg.activation);
    features.push_back(makeFeature(state, history, perms));
  }
  return features;
}

}  // namespace mmrc
