// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include "mmrc/rng.hpp"
#include "mmrc/tensor.hpp"

using namespace mmrc;

namespace {

Tensor randomTensor(std::vector<Index> shape, Rng& rng) {
  Tensor x(shape);
  for (Index i = 0; i < x.size(); ++i) x[i] = cplx(rng.uniformSym(), rng.uniformSym());
  return x;
}

// Independent matricization oracle straight from the index formula:
// j = sum_{k != n} i_k * J_k with J_k = prod_{m > k, m != n} I_m  (last free
// index fastest; zero-based version of the definition).
MatrixXcd unfoldOracle(const Tensor& x, int n) {
  Index cols = 1;
  for (int k = 0; k < x.order(); ++k)
    if (k != n) cols *= x.dim(k);
  MatrixXcd m(x.dim(n), cols);
  std::vector<Index> idx(static_cast<size_t>(x.order()), 0);
  // walk every multi-index by odometer
  for (;;) {
    Index j = 0;
    for (int k = 0; k < x.order(); ++k) {
      if (k == n) continue;
      Index stride = 1;
      for (int m2 = k + 1; m2 < x.order(); ++m2)
        if (m2 != n) stride *= x.dim(m2);
      j += idx[static_cast<size_t>(k)] * stride;
    }
    m(idx[static_cast<size_t>(n)], j) = x.at(idx);
    int k = x.order() - 1;
    for (; k >= 0; --k) {
      if (++idx[static_cast<size_t>(k)] < x.dim(k)) break;
      idx[static_cast<size_t>(k)] = 0;
    }
    if (k < 0) break;
  }
  return m;
}

MatrixXcd kron(const MatrixXcd& a, const MatrixXcd& b) {
  MatrixXcd out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Index i = 0; i < a.rows(); ++i)
    for (Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

std::vector<Index> randomShape(int order, Rng& rng) {
  std::vector<Index> s(static_cast<size_t>(order));
  for (auto& d : s) d = 1 + static_cast<Index>(rng.below(4));
  return s;
}

}  // namespace

TEST_CASE("mode-1 unfolding of the 2x2x2 counting tensor") {
  Tensor x({2, 2, 2});
  for (Index i = 0; i < 8; ++i) x[i] = cplx(static_cast<double>(i + 1), 0.0);
  MatrixXcd m = unfold(x, 0);
  MatrixXcd want(2, 4);
  want << 1, 5, 3, 7, 2, 6, 4, 8;
  CHECK((m - want).norm() == 0.0);
}

TEST_CASE("unfold matches the index-map oracle on random shapes") {
  Rng rng(11);
  int checked = 0;
  for (int trial = 0; trial < 40; ++trial) {
    int order = 2 + static_cast<int>(rng.below(3));
    Tensor x = randomTensor(randomShape(order, rng), rng);
    for (int n = 0; n < order; ++n) {
      CHECK((unfold(x, n) - unfoldOracle(x, n)).norm() <= 1e-14);
      ++checked;
    }
  }
  CHECK(checked >= 100);
}

TEST_CASE("fold inverts unfold") {
  Rng rng(12);
  for (int trial = 0; trial < 20; ++trial) {
    int order = 2 + static_cast<int>(rng.below(3));
    Tensor x = randomTensor(randomShape(order, rng), rng);
    for (int n = 0; n < order; ++n) {
      Tensor back = fold(unfold(x, n), n, x.shape());
      CHECK((back - x).norm() == 0.0);
    }
  }
}

TEST_CASE("mode product matches the elementwise contraction oracle") {
  Rng rng(13);
  for (int trial = 0; trial < 20; ++trial) {
    int order = 2 + static_cast<int>(rng.below(2));
    Tensor x = randomTensor(randomShape(order, rng), rng);
    int n = static_cast<int>(rng.below(static_cast<std::uint64_t>(order)));
    Index rows = 1 + static_cast<Index>(rng.below(4));
    MatrixXcd u = rng.uniformComplexMatrix(rows, x.dim(n));
    Tensor y = modeProduct(x, u, n);
    REQUIRE(y.dim(n) == rows);
    std::vector<Index> idx(static_cast<size_t>(order), 0);
    for (;;) {
      cplx want = 0.0;
      std::vector<Index> src = idx;
      for (Index i = 0; i < x.dim(n); ++i) {
        src[static_cast<size_t>(n)] = i;
        want += u(idx[static_cast<size_t>(n)], i) * x.at(src);
      }
      CHECK(std::abs(y.at(idx) - want) <= 1e-13);
      int k = order - 1;
      for (; k >= 0; --k) {
        if (++idx[static_cast<size_t>(k)] < y.dim(k)) break;
        idx[static_cast<size_t>(k)] = 0;
      }
      if (k < 0) break;
    }
  }
}

TEST_CASE("Tucker unfolding identity with the ascending Kronecker chain") {
  // X = G x_1 A1 ... x_N AN  implies  X_(n) = An G_(n) (A1 kron ... skip n ... kron AN)^T
  Rng rng(14);
  for (int trial = 0; trial < 25; ++trial) {
    int order = 2 + static_cast<int>(rng.below(2));
    Tensor g = randomTensor(randomShape(order, rng), rng);
    std::vector<MatrixXcd> a;
    for (int n = 0; n < order; ++n)
      a.push_back(rng.uniformComplexMatrix(1 + static_cast<Index>(rng.below(4)), g.dim(n)));
    Tensor x = tuckerEval(g, a);
    for (int n = 0; n < order; ++n) {
      MatrixXcd chain = MatrixXcd::Identity(1, 1);
      for (int m = 0; m < order; ++m)
        if (m != n) chain = kron(chain, a[static_cast<size_t>(m)]);
      MatrixXcd want = a[static_cast<size_t>(n)] * unfold(g, n) * chain.transpose();
      CHECK((unfold(x, n) - want).norm() <= 1e-12 * (1.0 + want.norm()));
    }
  }
}

TEST_CASE("tensor transpose permutes indices and composes") {
  Rng rng(15);
  Tensor x = randomTensor({2, 3, 4}, rng);
  std::vector<int> p{2, 0, 1};
  Tensor y = tensorTranspose(x, p);
  REQUIRE(y.shape() == std::vector<Index>{4, 2, 3});
  for (Index i = 0; i < 2; ++i)
    for (Index j = 0; j < 3; ++j)
      for (Index k = 0; k < 4; ++k) {
        std::vector<Index> src{i, j, k};
        std::vector<Index> dst{k, i, j};
        CHECK(y.at(dst) == x.at(src));
      }
  std::vector<int> q{1, 2, 0};
  Tensor z = tensorTranspose(y, q);
  // q after p: mode i of z is mode p[q[i]] of x
  for (Index i = 0; i < 2; ++i)
    for (Index j = 0; j < 3; ++j)
      for (Index k = 0; k < 4; ++k) {
        std::vector<Index> src{i, j, k};
        std::vector<Index> zidx{src[static_cast<size_t>(p[static_cast<size_t>(q[0])])],
                                src[static_cast<size_t>(p[static_cast<size_t>(q[1])])],
                                src[static_cast<size_t>(p[static_cast<size_t>(q[2])])]};
        CHECK(z.at(zidx) == x.at(src));
      }
}

TEST_CASE("superblockdiag places blocks on diagonal offsets") {
  Rng rng(16);
  std::vector<Tensor> blocks;
  blocks.push_back(randomTensor({2, 3}, rng));
  blocks.push_back(randomTensor({1, 2}, rng));
  blocks.push_back(randomTensor({3, 1}, rng));
  Tensor s = superblockdiag(blocks);
  REQUIRE(s.shape() == std::vector<Index>{6, 6});
  Index r0 = 0, c0 = 0;
  double offDiag = s.norm();
  for (const Tensor& b : blocks) {
    for (Index i = 0; i < b.dim(0); ++i)
      for (Index j = 0; j < b.dim(1); ++j) {
        std::vector<Index> bi{i, j};
        std::vector<Index> si{r0 + i, c0 + j};
        CHECK(s.at(si) == b.at(bi));
      }
    offDiag = std::sqrt(std::max(0.0, offDiag * offDiag - b.norm() * b.norm()));
    r0 += b.dim(0);
    c0 += b.dim(1);
  }
  CHECK(offDiag <= 1e-12);  // nothing outside the diagonal blocks
}

TEST_CASE("partitioned Tucker commutes with per-block mode products") {
  // superblockdiag(G^k) x_n [A^(n,k)]_k == superblockdiag_{-n}(G^k x_n A^(n,k))
  Rng rng(17);
  for (int n = 0; n < 2; ++n) {
    std::vector<Tensor> cores;
    std::vector<MatrixXcd> facs;
    Index outRows = 3;
    for (int k = 0; k < 3; ++k) {
      cores.push_back(randomTensor({1 + static_cast<Index>(rng.below(3)),
                                    1 + static_cast<Index>(rng.below(3))}, rng));
      facs.push_back(rng.uniformComplexMatrix(outRows, cores.back().dim(n)));
    }
    MatrixXcd concat(outRows, 0);
    std::vector<Tensor> mapped;
    for (int k = 0; k < 3; ++k) {
      MatrixXcd next(outRows, concat.cols() + facs[static_cast<size_t>(k)].cols());
      next << concat, facs[static_cast<size_t>(k)];
      concat = next;
      mapped.push_back(modeProduct(cores[static_cast<size_t>(k)], facs[static_cast<size_t>(k)], n));
    }
    Tensor lhs = modeProduct(superblockdiag(cores), concat, n);
    Tensor rhs = superblockdiagExcept(mapped, n);
    CHECK((lhs - rhs).norm() <= 1e-12 * (1.0 + rhs.norm()));
  }
}

TEST_CASE("partitionedTuckerEval sums the block evaluations") {
  Rng rng(18);
  std::vector<TuckerBlock> blocks;
  Tensor want({3, 4});
  want.setZero();
  for (int k = 0; k < 3; ++k) {
    TuckerBlock b;
    b.core = randomTensor({2, 2}, rng);
    b.factors = {rng.uniformComplexMatrix(3, 2), rng.uniformComplexMatrix(4, 2)};
    want += tuckerEval(b.core, b.factors);
    blocks.push_back(std::move(b));
  }
  CHECK((partitionedTuckerEval(blocks) - want).norm() <= 1e-12);
}

TEST_CASE("shape errors are rejected") {
  Tensor x({2, 3});
  CHECK_THROWS_AS(unfold(x, 2), std::invalid_argument);
  CHECK_THROWS_AS(unfold(x, -1), std::invalid_argument);
  CHECK_THROWS_AS(modeProduct(x, MatrixXcd::Identity(2, 4), 0), std::invalid_argument);
  CHECK_THROWS_AS(fold(MatrixXcd::Zero(2, 5), 0, {2, 3}), std::invalid_argument);
  std::vector<int> badPerm{0, 0};
  CHECK_THROWS_AS(tensorTranspose(x, badPerm), std::invalid_argument);
  Tensor y({2, 2, 2});
  CHECK_THROWS_AS(x += y, std::invalid_argument);
}
