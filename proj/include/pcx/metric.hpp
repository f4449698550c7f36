#pragma once

#include "pcx/fiber.hpp"

// Pointwise metric data.  All metric dependence of fiber operators is routed
// through the Cholesky orthonormal coframe: g = L L^T, theta^a = sum_i L_{ia} dx^i,
// so that coefficient vectors transform by compound (minor) matrices and every
// metric operator is the constant orthonormal-frame matrix conjugated by them.

namespace pcx {

struct MetricAtPoint {
  Mat g;          // d x d SPD
  Mat ginv;
  Mat R;          // coframe rows: theta^a = sum_i R(a,i) dx^i, R = L^T upper triangular
  Mat Rinv;
  double sqrt_det = 1.0;

  int dim() const { return static_cast<int>(g.rows()); }
  static MetricAtPoint from(const Mat& g);
  static MetricAtPoint euclidean(int d);
};

// k-th compound matrix: C(A)_{S,T} = det A[S, T] over increasing k-subsets
// (lexicographic), C(A B) = C(A) C(B).
Mat compound(const Mat& A, int k);

// Coefficient change coordinate coframe -> orthonormal coframe on Lambda^{k,m}:
// q = frame_map * p where psi = p_I,J dx^I (x) dx^J = q_A,B theta^A (x) theta^B.
Mat frame_map(const MetricAtPoint& mp, const Bidegree& bd);
Mat frame_map_inv(const MetricAtPoint& mp, const Bidegree& bd);

// Gram matrix of the coordinate-coframe basis of Lambda^{k,m}: F^T F.
Mat gram(const MetricAtPoint& mp, const Bidegree& bd);

// Conjugate a constant orthonormal-frame operator to coordinate coefficients.
Mat to_coords(const MetricAtPoint& mp, const Bidegree& src, const Bidegree& tgt, const Mat& op_ortho);

// Coordinate-coefficient metric operators on Lambda^{k,m}.
Mat trace_coord(const MetricAtPoint& mp, const Bidegree& src);
Mat gwedge_coord(const MetricAtPoint& mp, const Bidegree& src);
Mat hodge_form_coord(const MetricAtPoint& mp, const Bidegree& src);
Mat hodge_vec_coord(const MetricAtPoint& mp, const Bidegree& src);
// i_{xi^sharp} on the form / vector slot for a covector xi (coordinate components).
Mat interior_sharp_form(const MetricAtPoint& mp, const Bidegree& src, const Vec& xi);
Mat interior_sharp_vec(const MetricAtPoint& mp, const Bidegree& src, const Vec& xi);

}  // namespace pcx
