#include "pcx/bianchi.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <stdexcept>

#include "pcx/fiber_ops.hpp"

namespace pcx {

namespace {

// Canonicalize an orthonormal column set: flip signs so the largest-magnitude
// entry of each column is positive (determinism across runs).
Mat canonical_signs(Mat Q) {
  for (int c = 0; c < Q.cols(); ++c) {
    int imax = 0;
    Q.col(c).cwiseAbs().maxCoeff(&imax);
    if (Q(imax, c) < 0) Q.col(c) *= -1.0;
  }
  return Q;
}

Mat kernel_intersection_projector(const Bidegree& bd, double rank_tol) {
  Mat G = bianchi_sum(bd);
  Mat GV = bianchi_sum_V(bd);
  Mat S(G.rows() + GV.rows(), bd.dim());
  S.topRows(G.rows()) = G;
  S.bottomRows(GV.rows()) = GV;
  if (S.rows() == 0) return Mat::Identity(bd.dim(), bd.dim());
  Eigen::JacobiSVD<Mat> svd(S, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  double cut = (sv.size() > 0 ? sv(0) : 0.0) * rank_tol;
  int rank = 0;
  for (int i = 0; i < sv.size(); ++i)
    if (sv(i) > cut) ++rank;
  Mat Vnull = svd.matrixV().rightCols(bd.dim() - rank);
  return Vnull * Vnull.transpose();
}

}  // namespace

Mat bianchi_projector_ortho(const Bidegree& bd, double rank_tol) {
  if (!bd.valid()) throw std::logic_error("bianchi_projector: bad bidegree");
  int n = bd.dim();
  if (bd.k > bd.m) {
    Mat G = bianchi_sum(bd);                    // (k,m) -> (k+1,m-1)
    if (G.rows() == 0) return Mat::Identity(n, n);
    Bidegree up = bd.shifted(1, -1);
    Mat GV = bianchi_sum_V(up);                 // back down
    Mat GGV = G * GV;                           // PD: G_V G + (k - m + 2) Id
    return Mat::Identity(n, n) - GV * GGV.ldlt().solve(G);
  }
  if (bd.k < bd.m) {
    Mat T_in = involution(bd);
    Mat P = bianchi_projector_ortho(bd.transposed(), rank_tol);
    Mat T_out = involution(bd.transposed());
    return T_out * P * T_in;
  }
  return kernel_intersection_projector(bd, rank_tol);
}

Mat bianchi_onb(const Bidegree& bd, double rank_tol) {
  Mat P = bianchi_projector_ortho(bd, rank_tol);
  Eigen::SelfAdjointEigenSolver<Mat> es(P);
  int r = 0;
  for (int i = 0; i < es.eigenvalues().size(); ++i)
    if (es.eigenvalues()(i) > 0.5) ++r;
  Mat Q = es.eigenvectors().rightCols(r);
  return canonical_signs(Q);
}

int bianchi_dim(const Bidegree& bd) { return static_cast<int>(bianchi_onb(bd).cols()); }

Mat symmetric_onb(const Bidegree& bd) {
  if (bd.k != bd.m) throw std::logic_error("symmetric_onb: needs k == m");
  Mat P = sym_projector(bd);
  Eigen::SelfAdjointEigenSolver<Mat> es(P);
  int r = 0;
  for (int i = 0; i < es.eigenvalues().size(); ++i)
    if (es.eigenvalues()(i) > 0.5) ++r;
  return canonical_signs(es.eigenvectors().rightCols(r));
}

}  // namespace pcx
