#pragma once

#include <Eigen/Dense>
#include <complex>
#include <string>
#include <vector>

#include "pcx/multi_index.hpp"

// Double forms of bidegree (k, m) on a d-dimensional fiber: elements of
// Lambda^k V* (x) Lambda^m V*.  A coefficient vector is indexed by pairs
// (I, J) of strictly increasing multi-indices, I-major, each slot in
// lexicographic order.

namespace pcx {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;
using CMat = Eigen::MatrixXcd;
using CVec = Eigen::VectorXcd;
using cplx = std::complex<double>;

struct Bidegree {
  int k = 0;  // form degree
  int m = 0;  // vector degree
  int d = 0;  // fiber dimension

  bool valid() const { return d >= 1 && k >= 0 && m >= 0 && k <= d && m <= d; }
  int dim_k() const { return binom(d, k); }
  int dim_m() const { return binom(d, m); }
  int dim() const { return dim_k() * dim_m(); }
  Bidegree shifted(int dk, int dm) const { return {k + dk, m + dm, d}; }
  Bidegree transposed() const { return {m, k, d}; }
  bool operator==(const Bidegree& o) const { return k == o.k && m == o.m && d == o.d; }
  std::string str() const;
};

// Flat index of the (I, J) basis pair.
int pair_index(const Bidegree& bd, int rank_i, int rank_j);

struct BasisPair {
  IndexMask I;
  IndexMask J;
};
std::vector<BasisPair> basis_pairs(const Bidegree& bd);

template <class S>
struct BasicDoubleForm {
  Bidegree bd;
  Eigen::Vector<S, Eigen::Dynamic> c;

  BasicDoubleForm() = default;
  explicit BasicDoubleForm(const Bidegree& b)
      : bd(b), c(Eigen::Vector<S, Eigen::Dynamic>::Zero(b.dim())) {}
  BasicDoubleForm(const Bidegree& b, Eigen::Vector<S, Eigen::Dynamic> coeffs)
      : bd(b), c(std::move(coeffs)) {}

  S& at(IndexMask I, IndexMask J) {
    return c[pair_index(bd, set_rank(bd.d, bd.k, I), set_rank(bd.d, bd.m, J))];
  }
  S at(IndexMask I, IndexMask J) const {
    return c[pair_index(bd, set_rank(bd.d, bd.k, I), set_rank(bd.d, bd.m, J))];
  }
};

using DoubleForm = BasicDoubleForm<double>;
using CDoubleForm = BasicDoubleForm<cplx>;

// Kronecker product with the project's I-major pair layout:
// rows (i, j) -> i * B.rows() + j.
Mat kron_pair(const Mat& A, const Mat& B);

}  // namespace pcx
