// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <complex>
#include <cstdint>
#include <span>
#include <vector>

namespace mmrc {

using cplx = std::complex<double>;
using Eigen::Index;
using Eigen::MatrixXcd;
using Eigen::VectorXcd;

/// Dense N-mode complex tensor. Storage is a flat array in first-index-fastest
/// order; every matricization goes through the explicit index map below, never
/// through memory reinterpretation.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<Index> shape);

  static Tensor fromMatrix(const MatrixXcd& m);
  static Tensor scalar(cplx v);

  int order() const { return static_cast<int>(shape_.size()); }
  Index dim(int n) const { return shape_[static_cast<size_t>(n)]; }
  const std::vector<Index>& shape() const { return shape_; }
  Index size() const { return static_cast<Index>(data_.size()); }

  cplx* data() { return data_.data(); }
  const cplx* data() const { return data_.data(); }
  cplx& operator[](Index flat) { return data_[static_cast<size_t>(flat)]; }
  cplx operator[](Index flat) const { return data_[static_cast<size_t>(flat)]; }

  cplx& at(std::span<const Index> idx) { return data_[flatIndex(idx)]; }
  cplx at(std::span<const Index> idx) const { return data_[flatIndex(idx)]; }

  /// Order-2 tensors map onto matrices with mode 0 as rows.
  MatrixXcd asMatrix() const;

  double norm() const;
  void setZero();
  bool sameShape(const Tensor& other) const { return shape_ == other.shape_; }

  Tensor& operator+=(const Tensor& other);
  Tensor& operator-=(const Tensor& other);
  Tensor& operator*=(cplx s);

 private:
  size_t flatIndex(std::span<const Index> idx) const;

  std::vector<Index> shape_;
  std::vector<cplx> data_;
};

Tensor operator+(Tensor a, const Tensor& b);
Tensor operator-(Tensor a, const Tensor& b);
Tensor operator*(Tensor a, cplx s);

/// Mode-n matricization, I_n x prod_{k!=n} I_k. Column j of the result gathers
/// the remaining indices with the LAST mode fastest, i.e. the reversed
/// Kronecker ordering (this is deliberate; it is not the usual convention).
MatrixXcd unfold(const Tensor& x, int mode);

/// Inverse of unfold for the given shape.
Tensor fold(const MatrixXcd& m, int mode, std::vector<Index> shape);

/// X x_n U, with U of size J x I_n; mode n is resized to J.
Tensor modeProduct(const Tensor& x, const MatrixXcd& u, int mode);

/// Mode i of the result is mode perm[i] of the input.
Tensor tensorTranspose(const Tensor& x, std::span<const int> perm);

/// Blocks occupy diagonal index ranges on every mode; off-block entries zero.
Tensor superblockdiag(std::span<const Tensor> blocks);

/// Diagonal placement on all modes except `mode`, where every block must have
/// the same size and spans the full range.
Tensor superblockdiagExcept(std::span<const Tensor> blocks, int mode);

/// G x_1 A1 x_2 ... x_N AN.
Tensor tuckerEval(const Tensor& core, std::span<const MatrixXcd> factors);

struct TuckerBlock {
  Tensor core;
  std::vector<MatrixXcd> factors;
};

/// Sum of sub-Tucker evaluations; all blocks must produce the same shape.
Tensor partitionedTuckerEval(std::span<const TuckerBlock> blocks);

}  // namespace mmrc
