// SPDX-License-Identifier: Apache-2.0
#include "mmrc/tensor.hpp"

#include <numeric>
#include <stdexcept>

namespace mmrc {

namespace {

Index shapeProduct(std::span<const Index> shape) {
  Index p = 1;
  for (Index s : shape) p *= s;
  return p;
}

void checkMode(const Tensor& x, int mode) {
  if (mode < 0 || mode >= x.order())
    throw std::invalid_argument("mode index out of range");
}

}  // namespace

Tensor::Tensor(std::vector<Index> shape) : shape_(std::move(shape)) {
  if (shape_.empty()) throw std::invalid_argument("tensor needs at least one mode");
  for (Index s : shape_)
    if (s < 1) throw std::invalid_argument("every mode size must be >= 1");
  data_.assign(static_cast<size_t>(shapeProduct(shape_)), cplx(0.0, 0.0));
}

Tensor Tensor::fromMatrix(const MatrixXcd& m) {
  Tensor t({m.rows(), m.cols()});
  for (Index c = 0; c < m.cols(); ++c)
    for (Index r = 0; r < m.rows(); ++r) t.data_[static_cast<size_t>(r + c * m.rows())] = m(r, c);
  return t;
}

Tensor Tensor::scalar(cplx v) {
  Tensor t({1});
  t.data_[0] = v;
  return t;
}

MatrixXcd Tensor::asMatrix() const {
  if (order() > 2) throw std::invalid_argument("asMatrix requires order <= 2");
  Index rows = dim(0);
  Index cols = order() == 2 ? dim(1) : 1;
  MatrixXcd m(rows, cols);
  for (Index c = 0; c < cols; ++c)
    for (Index r = 0; r < rows; ++r) m(r, c) = data_[static_cast<size_t>(r + c * rows)];
  return m;
}

double Tensor::norm() const {
  double acc = 0.0;
  for (const cplx& v : data_) acc += std::norm(v);
  return std::sqrt(acc);
}

void Tensor::setZero() {
  std::fill(data_.begin(), data_.end(), cplx(0.0, 0.0));
}

size_t Tensor::flatIndex(std::span<const Index> idx) const {
  size_t flat = 0;
  size_t stride = 1;
  for (size_t k = 0; k < shape_.size(); ++k) {
    flat += static_cast<size_t>(idx[k]) * stride;
    stride *= static_cast<size_t>(shape_[k]);
  }
  return flat;
}

Tensor& Tensor::operator+=(const Tensor& other) {
  if (!sameShape(other)) throw std::invalid_argument("shape mismatch");
  for (size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
  return *this;
}

Tensor& Tensor::operator-=(const Tensor& other) {
  if (!sameShape(other)) throw std::invalid_argument("shape mismatch");
  for (size_t i = 0; i < data_.size(); ++i) data_[i] -= other.data_[i];
  return *this;
}

Tensor& Tensor::operator*=(cplx s) {
  for (cplx& v : data_) v *= s;
  return *this;
}

Tensor operator+(Tensor a, const Tensor& b) { return a += b; }
Tensor operator-(Tensor a, const Tensor& b) { return a -= b; }
Tensor operator*(Tensor a, cplx s) { return a *= s; }

// Column strides J_k = prod_{m>k, m!=n} I_m, so the last free index is fastest.
static std::vector<Index> columnStrides(std::span<const Index> shape, int mode) {
  int n = static_cast<int>(shape.size());
  std::vector<Index> strides(static_cast<size_t>(n), 0);
  Index run = 1;
  for (int k = n - 1; k >= 0; --k) {
    if (k == mode) continue;
    strides[static_cast<size_t>(k)] = run;
    run *= shape[static_cast<size_t>(k)];
  }
  return strides;
}

MatrixXcd unfold(const Tensor& x, int mode) {
  checkMode(x, mode);
  int n = x.order();
  Index cols = x.size() / x.dim(mode);
  MatrixXcd m(x.dim(mode), cols);
  std::vector<Index> strides = columnStrides(x.shape(), mode);
  std::vector<Index> idx(static_cast<size_t>(n), 0);
  for (Index flat = 0; flat < x.size(); ++flat) {
    Index col = 0;
    for (int k = 0; k < n; ++k)
      if (k != mode) col += idx[static_cast<size_t>(k)] * strides[static_cast<size_t>(k)];
    m(idx[static_cast<size_t>(mode)], col) = x[flat];
    for (int k = 0; k < n; ++k) {
      if (++idx[static_cast<size_t>(k)] < x.dim(k)) break;
      idx[static_cast<size_t>(k)] = 0;
    }
  }
  return m;
}

Tensor fold(const MatrixXcd& m, int mode, std::vector<Index> shape) {
  Tensor t(std::move(shape));
  checkMode(t, mode);
  if (m.rows() != t.dim(mode) || m.cols() != t.size() / t.dim(mode))
    throw std::invalid_argument("matrix dimensions inconsistent with shape");
  int n = t.order();
  std::vector<Index> strides = columnStrides(t.shape(), mode);
  std::vector<Index> idx(static_cast<size_t>(n), 0);
  for (Index flat = 0; flat < t.size(); ++flat) {
    Index col = 0;
    for (int k = 0; k < n; ++k)
      if (k != mode) col += idx[static_cast<size_t>(k)] * strides[static_cast<size_t>(k)];
    t[flat] = m(idx[static_cast<size_t>(mode)], col);
    for (int k = 0; k < n; ++k) {
      if (++idx[static_cast<size_t>(k)] < t.dim(k)) break;
      idx[static_cast<size_t>(k)] = 0;
    }
  }
  return t;
}

Tensor modeProduct(const Tensor& x, const MatrixXcd& u, int mode) {
  checkMode(x, mode);
  if (u.cols() != x.dim(mode)) throw std::invalid_argument("factor column count mismatch");
  std::vector<Index> outShape = x.shape();
  outShape[static_cast<size_t>(mode)] = u.rows();
  // Contract along mode without building the unfold: flat storage splits as
  // (inner, mode, outer) with inner = prod of modes before `mode`.
  Index inner = 1;
  for (int k = 0; k < mode; ++k) inner *= x.dim(k);
  Index in = x.dim(mode);
  Index outer = x.size() / (inner * in);
  Tensor out(outShape);
  Index jn = u.rows();
  for (Index o = 0; o < outer; ++o) {
    const cplx* src = x.data() + o * inner * in;
    cplx* dst = out.data() + o * inner * jn;
    for (Index j = 0; j < jn; ++j)
      for (Index i = 0; i < in; ++i) {
        cplx w = u(j, i);
        if (w == cplx(0.0, 0.0)) continue;
        const cplx* s = src + i * inner;
        cplx* d = dst + j * inner;
        for (Index p = 0; p < inner; ++p) d[p] += w * s[p];
      }
  }
  return out;
}

Tensor tensorTranspose(const Tensor& x, std::span<const int> perm) {
  int n = x.order();
  if (static_cast<int>(perm.size()) != n) throw std::invalid_argument("invalid permutation");
  std::vector<bool> seen(static_cast<size_t>(n), false);
  for (int p : perm) {
    if (p < 0 || p >= n || seen[static_cast<size_t>(p)])
      throw std::invalid_argument("invalid permutation");
    seen[static_cast<size_t>(p)] = true;
  }
  std::vector<Index> outShape(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) outShape[static_cast<size_t>(i)] = x.dim(perm[static_cast<size_t>(i)]);
  Tensor out(outShape);
  std::vector<Index> idx(static_cast<size_t>(n), 0);   // output index
  std::vector<Index> src(static_cast<size_t>(n), 0);
  for (Index flat = 0; flat < out.size(); ++flat) {
    for (int i = 0; i < n; ++i) src[static_cast<size_t>(perm[static_cast<size_t>(i)])] = idx[static_cast<size_t>(i)];
    out[flat] = x.at(src);
    for (int k = 0; k < n; ++k) {
      if (++idx[static_cast<size_t>(k)] < out.dim(k)) break;
      idx[static_cast<size_t>(k)] = 0;
    }
  }
  return out;
}

static void placeBlock(Tensor& out, const Tensor& block, std::span<const Index> offset) {
  int n = block.order();
  std::vector<Index> idx(static_cast<size_t>(n), 0);
  std::vector<Index> dst(static_cast<size_t>(n), 0);
  for (Index flat = 0; flat < block.size(); ++flat) {
    for (int k = 0; k < n; ++k) dst[static_cast<size_t>(k)] = idx[static_cast<size_t>(k)] + offset[static_cast<size_t>(k)];
    out.at(dst) = block[flat];
    for (int k = 0; k < n; ++k) {
      if (++idx[static_cast<size_t>(k)] < block.dim(k)) break;
      idx[static_cast<size_t>(k)] = 0;
    }
  }
}

Tensor superblockdiag(std::span<const Tensor> blocks) {
  if (blocks.empty()) throw std::invalid_argument("need at least one block");
  int n = blocks[0].order();
  for (const Tensor& b : blocks)
    if (b.order() != n) throw std::invalid_argument("inconsistent block mode counts");
  std::vector<Index> shape(static_cast<size_t>(n), 0);
  for (const Tensor& b : blocks)
    for (int k = 0; k < n; ++k) shape[static_cast<size_t>(k)] += b.dim(k);
  Tensor out(shape);
  std::vector<Index> offset(static_cast<size_t>(n), 0);
  for (const Tensor& b : blocks) {
    placeBlock(out, b, offset);
    for (int k = 0; k < n; ++k) offset[static_cast<size_t>(k)] += b.dim(k);
  }
  return out;
}

Tensor superblockdiagExcept(std::span<const Tensor> blocks, int mode) {
  if (blocks.empty()) throw std::invalid_argument("need at least one block");
  int n = blocks[0].order();
  checkMode(blocks[0], mode);
  for (const Tensor& b : blocks) {
    if (b.order() != n) throw std::invalid_argument("inconsistent block mode counts");
    if (b.dim(mode) != blocks[0].dim(mode))
      throw std::invalid_argument("blocks must share the mode size on the excepted mode");
  }
  std::vector<Index> shape(static_cast<size_t>(n), 0);
  for (int k = 0; k < n; ++k) {
    if (k == mode) {
      shape[static_cast<size_t>(k)] = blocks[0].dim(k);
    } else {
      for (const Tensor& b : blocks) shape[static_cast<size_t>(k)] += b.dim(k);
    }
  }
  Tensor out(shape);
  std::vector<Index> offset(static_cast<size_t>(n), 0);
  for (const Tensor& b : blocks) {
    placeBlock(out, b, offset);
    for (int k = 0; k < n; ++k)
      if (k != mode) offset[static_cast<size_t>(k)] += b.dim(k);
  }
  return out;
}

Tensor tuckerEval(const Tensor& core, std::span<const MatrixXcd> factors) {
  if (static_cast<int>(factors.size()) != core.order())
    throw std::invalid_argument("need one factor per mode");
  Tensor out = core;
  for (int n = 0; n < core.order(); ++n) out = modeProduct(out, factors[static_cast<size_t>(n)], n);
  return out;
}

Tensor partitionedTuckerEval(std::span<const TuckerBlock> blocks) {
  if (blocks.empty()) throw std::invalid_argument("need at least one block");
  Tensor acc = tuckerEval(blocks[0].core, blocks[0].factors);
  for (size_t k = 1; k < blocks.size(); ++k) {
    Tensor term = tuckerEval(blocks[k].core, blocks[k].factors);
    if (!term.sameShape(acc)) throw std::invalid_argument("blocks produce mismatched shapes");
    acc += term;
  }
  return acc;
}

}  // namespace mmrc
