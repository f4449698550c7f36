#include "pcx/metric.hpp"

#include <Eigen/Cholesky>
#include <stdexcept>

#include "pcx/fiber_ops.hpp"

namespace pcx {

MetricAtPoint MetricAtPoint::from(const Mat& g) {
  MetricAtPoint mp;
  mp.g = g;
  Eigen::LLT<Mat> llt(g);
  if (llt.info() != Eigen::Success) throw std::runtime_error("MetricAtPoint: metric not SPD");
  Mat L = llt.matrixL();
  mp.R = L.transpose();
  mp.Rinv = mp.R.inverse();
  mp.ginv = g.inverse();
  mp.sqrt_det = L.diagonal().prod();
  return mp;
}

MetricAtPoint MetricAtPoint::euclidean(int d) { return from(Mat::Identity(d, d)); }

Mat compound(const Mat& A, int k) {
  int d = static_cast<int>(A.rows());
  const auto& sets = index_sets(d, k);
  int n = static_cast<int>(sets.size());
  Mat C(n, n);
  for (int r = 0; r < n; ++r) {
    auto rows = mask_indices(sets[r]);
    for (int c = 0; c < n; ++c) {
      auto cols = mask_indices(sets[c]);
      Mat sub(k, k);
      for (int i = 0; i < k; ++i)
        for (int j = 0; j < k; ++j) sub(i, j) = A(rows[i], cols[j]);
      C(r, c) = (k == 0) ? 1.0 : sub.determinant();
    }
  }
  return C;
}

Mat frame_map(const MetricAtPoint& mp, const Bidegree& bd) {
  // dx^I = sum_A det(R^{-1}[I,A]) theta^A is equivalent to q = C_k(R^{-T}) p.
  Mat Rit = mp.Rinv.transpose();
  return kron_pair(compound(Rit, bd.k), compound(Rit, bd.m));
}

Mat frame_map_inv(const MetricAtPoint& mp, const Bidegree& bd) {
  Mat Rt = mp.R.transpose();
  return kron_pair(compound(Rt, bd.k), compound(Rt, bd.m));
}

Mat gram(const MetricAtPoint& mp, const Bidegree& bd) {
  Mat F = frame_map(mp, bd);
  return F.transpose() * F;
}

Mat to_coords(const MetricAtPoint& mp, const Bidegree& src, const Bidegree& tgt, const Mat& op_ortho) {
  return frame_map_inv(mp, tgt) * op_ortho * frame_map(mp, src);
}

Mat trace_coord(const MetricAtPoint& mp, const Bidegree& src) {
  Bidegree tgt = src.shifted(-1, -1);
  if (!tgt.valid()) return Mat::Zero(0, src.dim());
  return to_coords(mp, src, tgt, trace_ortho(src));
}

Mat gwedge_coord(const MetricAtPoint& mp, const Bidegree& src) {
  Bidegree tgt = src.shifted(1, 1);
  if (!tgt.valid()) return Mat::Zero(0, src.dim());
  return to_coords(mp, src, tgt, gwedge_ortho(src));
}

Mat hodge_form_coord(const MetricAtPoint& mp, const Bidegree& src) {
  Bidegree tgt = {src.d - src.k, src.m, src.d};
  return to_coords(mp, src, tgt, hodge_form_ortho(src));
}

Mat hodge_vec_coord(const MetricAtPoint& mp, const Bidegree& src) {
  Bidegree tgt = {src.k, src.d - src.m, src.d};
  return to_coords(mp, src, tgt, hodge_vec_ortho(src));
}

Mat interior_sharp_form(const MetricAtPoint& mp, const Bidegree& src, const Vec& xi) {
  return interior_form(src, mp.ginv * xi);
}

Mat interior_sharp_vec(const MetricAtPoint& mp, const Bidegree& src, const Vec& xi) {
  return interior_vec(src, mp.ginv * xi);
}

}  // namespace pcx
