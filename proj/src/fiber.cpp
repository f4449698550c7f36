#include "pcx/fiber.hpp"

#include <stdexcept>

namespace pcx {

std::string Bidegree::str() const {
  return "(" + std::to_string(k) + "," + std::to_string(m) + ";d=" + std::to_string(d) + ")";
}

int pair_index(const Bidegree& bd, int rank_i, int rank_j) {
  if (rank_i < 0 || rank_j < 0) throw std::logic_error("pair_index: bad rank");
  return rank_i * bd.dim_m() + rank_j;
}

std::vector<BasisPair> basis_pairs(const Bidegree& bd) {
  std::vector<BasisPair> out;
  out.reserve(bd.dim());
  for (IndexMask I : index_sets(bd.d, bd.k))
    for (IndexMask J : index_sets(bd.d, bd.m)) out.push_back({I, J});
  return out;
}

Mat kron_pair(const Mat& A, const Mat& B) {
  Mat K(A.rows() * B.rows(), A.cols() * B.cols());
  for (int i = 0; i < A.rows(); ++i)
    for (int j = 0; j < A.cols(); ++j)
      K.block(i * B.rows(), j * B.cols(), B.rows(), B.cols()) = A(i, j) * B;
  return K;
}

}  // namespace pcx
