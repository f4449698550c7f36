#include "pcx/fiber_ops.hpp"

#include <stdexcept>

namespace pcx {

Mat wedge_left(const DoubleForm& phi, const Bidegree& src) {
  const Bidegree& pb = phi.bd;
  if (pb.d != src.d) throw std::logic_error("wedge_left: dimension mismatch");
  Bidegree tgt = src.shifted(pb.k, pb.m);
  if (!tgt.valid()) return Mat::Zero(0, src.dim());
  Mat W = Mat::Zero(tgt.dim(), src.dim());
  const auto& srcI = index_sets(src.d, src.k);
  const auto& srcJ = index_sets(src.d, src.m);
  const auto& phiI = index_sets(pb.d, pb.k);
  const auto& phiJ = index_sets(pb.d, pb.m);
  for (int ai = 0; ai < static_cast<int>(phiI.size()); ++ai)
    for (int aj = 0; aj < static_cast<int>(phiJ.size()); ++aj) {
      double pc = phi.c[pair_index(pb, ai, aj)];
      if (pc == 0.0) continue;
      for (int si = 0; si < static_cast<int>(srcI.size()); ++si) {
        int s1 = merge_sign(phiI[ai], srcI[si]);
        if (s1 == 0) continue;
        for (int sj = 0; sj < static_cast<int>(srcJ.size()); ++sj) {
          int s2 = merge_sign(phiJ[aj], srcJ[sj]);
          if (s2 == 0) continue;
          int ti = set_rank(tgt.d, tgt.k, phiI[ai] | srcI[si]);
          int tj = set_rank(tgt.d, tgt.m, phiJ[aj] | srcJ[sj]);
          W(pair_index(tgt, ti, tj), pair_index(src, si, sj)) += pc * s1 * s2;
        }
      }
    }
  return W;
}

Mat wedge_form(const Bidegree& src, const Vec& xi) {
  DoubleForm phi({1, 0, src.d});
  phi.c = xi;
  return wedge_left(phi, src);
}

Mat wedge_vec(const Bidegree& src, const Vec& xi) {
  DoubleForm phi({0, 1, src.d});
  phi.c = xi;
  return wedge_left(phi, src);
}

Mat interior_form(const Bidegree& src, const Vec& X) {
  Bidegree tgt = src.shifted(-1, 0);
  if (!tgt.valid()) return Mat::Zero(0, src.dim());
  Mat A = Mat::Zero(tgt.dim(), src.dim());
  const auto& srcI = index_sets(src.d, src.k);
  const auto& srcJ = index_sets(src.d, src.m);
  for (int si = 0; si < static_cast<int>(srcI.size()); ++si) {
    for (int a : mask_indices(srcI[si])) {
      double xa = X[a];
      if (xa == 0.0) continue;
      int sgn = removal_sign(srcI[si], a);
      int ti = set_rank(tgt.d, tgt.k, srcI[si] & ~(IndexMask(1) << a));
      for (int sj = 0; sj < static_cast<int>(srcJ.size()); ++sj)
        A(pair_index(tgt, ti, sj), pair_index(src, si, sj)) += xa * sgn;
    }
  }
  return A;
}

Mat interior_vec(const Bidegree& src, const Vec& X) {
  Bidegree tgt = src.shifted(0, -1);
  if (!tgt.valid()) return Mat::Zero(0, src.dim());
  Mat T_in = involution(src);
  Mat A = interior_form(src.transposed(), X);
  Mat T_out = involution({tgt.m, tgt.k, tgt.d});
  return T_out * A * T_in;
}

Mat involution(const Bidegree& src) {
  Bidegree tgt = src.transposed();
  Mat T = Mat::Zero(tgt.dim(), src.dim());
  int nI = src.dim_k(), nJ = src.dim_m();
  for (int i = 0; i < nI; ++i)
    for (int j = 0; j < nJ; ++j) T(pair_index(tgt, j, i), pair_index(src, i, j)) = 1.0;
  return T;
}

Mat bianchi_sum(const Bidegree& src) {
  Bidegree tgt = src.shifted(1, -1);
  if (!tgt.valid()) return Mat::Zero(0, src.dim());
  Mat G = Mat::Zero(tgt.dim(), src.dim());
  for (int a = 0; a < src.d; ++a) {
    Vec e = Vec::Zero(src.d);
    e[a] = 1.0;
    Bidegree mid = src.shifted(0, -1);
    G += wedge_form(mid, e) * interior_vec(src, e);
  }
  return G;
}

Mat bianchi_sum_V(const Bidegree& src) {
  Bidegree tgt = src.shifted(-1, 1);
  if (!tgt.valid()) return Mat::Zero(0, src.dim());
  Mat T_in = involution(src);
  Mat G = bianchi_sum(src.transposed());
  Mat T_out = involution({tgt.m, tgt.k, tgt.d});
  return T_out * G * T_in;
}

Mat trace_ortho(const Bidegree& src) {
  Bidegree tgt = src.shifted(-1, -1);
  if (!tgt.valid()) return Mat::Zero(0, src.dim());
  Mat T = Mat::Zero(tgt.dim(), src.dim());
  for (int a = 0; a < src.d; ++a) {
    Vec e = Vec::Zero(src.d);
    e[a] = 1.0;
    T += interior_form(src.shifted(0, -1), e) * interior_vec(src, e);
  }
  return T;
}

Mat gwedge_ortho(const Bidegree& src) {
  Bidegree tgt = src.shifted(1, 1);
  if (!tgt.valid()) return Mat::Zero(0, src.dim());
  Mat W = Mat::Zero(tgt.dim(), src.dim());
  for (int a = 0; a < src.d; ++a) {
    Vec e = Vec::Zero(src.d);
    e[a] = 1.0;
    W += wedge_form(src.shifted(0, 1), e) * wedge_vec(src, e);
  }
  return W;
}

Mat hodge_form_ortho(const Bidegree& src) {
  Bidegree tgt = {src.d - src.k, src.m, src.d};
  Mat H = Mat::Zero(tgt.dim(), src.dim());
  const auto& srcI = index_sets(src.d, src.k);
  IndexMask full = (IndexMask(1) << src.d) - 1;
  for (int si = 0; si < static_cast<int>(srcI.size()); ++si) {
    IndexMask comp = full & ~srcI[si];
    int sgn = merge_sign(srcI[si], comp);
    int ti = set_rank(tgt.d, tgt.k, comp);
    for (int j = 0; j < src.dim_m(); ++j)
      H(pair_index(tgt, ti, j), pair_index(src, si, j)) = sgn;
  }
  return H;
}

Mat hodge_vec_ortho(const Bidegree& src) {
  Bidegree tgt = {src.k, src.d - src.m, src.d};
  Mat T_in = involution(src);
  Mat H = hodge_form_ortho(src.transposed());
  Mat T_out = involution({tgt.m, tgt.k, tgt.d});
  return T_out * H * T_in;
}

Mat sym_projector(const Bidegree& src) {
  if (src.k != src.m) throw std::logic_error("sym_projector: needs k == m");
  Mat T = involution(src);
  return 0.5 * (Mat::Identity(src.dim(), src.dim()) + T);
}

CMat wedge_form_c(const Bidegree& src, const CVec& xi) {
  return wedge_form(src, xi.real()).cast<cplx>() +
         cplx(0, 1) * wedge_form(src, xi.imag()).cast<cplx>();
}

CMat wedge_vec_c(const Bidegree& src, const CVec& xi) {
  return wedge_vec(src, xi.real()).cast<cplx>() +
         cplx(0, 1) * wedge_vec(src, xi.imag()).cast<cplx>();
}

CMat interior_form_c(const Bidegree& src, const CVec& X) {
  return interior_form(src, X.real()).cast<cplx>() +
         cplx(0, 1) * interior_form(src, X.imag()).cast<cplx>();
}

CMat interior_vec_c(const Bidegree& src, const CVec& X) {
  return interior_vec(src, X.real()).cast<cplx>() +
         cplx(0, 1) * interior_vec(src, X.imag()).cast<cplx>();
}

}  // namespace pcx
