#include "pcx/symbol_ops.hpp"

#include <stdexcept>

#include "pcx/bianchi.hpp"
#include "pcx/fiber_ops.hpp"

namespace pcx {

namespace {
const cplx kI(0.0, 1.0);

SymbolPoly lin(const Mat& c0, const Mat& c1) {
  return SymbolPoly::linear(c0.cast<cplx>(), c1.cast<cplx>());
}
}  // namespace

std::string op_name(OpKind k) {
  switch (k) {
    case OpKind::ExtD: return "ext_d";
    case OpKind::ExtDV: return "ext_d_vec";
    case OpKind::CoD: return "codiff";
    case OpKind::CoDV: return "codiff_vec";
    case OpKind::Hess: return "junction";
    case OpKind::HessStar: return "junction_star";
    case OpKind::DG: return "ext_d_proj";
    case OpKind::DeltaG: return "codiff_proj";
  }
  return "?";
}

int op_order(OpKind k) {
  return (k == OpKind::Hess || k == OpKind::HessStar) ? 2 : 1;
}

Bidegree op_target(OpKind k, const Bidegree& src) {
  switch (k) {
    case OpKind::ExtD:
    case OpKind::DG: return src.shifted(1, 0);
    case OpKind::ExtDV: return src.shifted(0, 1);
    case OpKind::CoD:
    case OpKind::DeltaG: return src.shifted(-1, 0);
    case OpKind::CoDV: return src.shifted(0, -1);
    case OpKind::Hess: return src.shifted(1, 1);
    case OpKind::HessStar: return src.shifted(-1, -1);
  }
  return src;
}

SymbolPoly model_symbol(OpKind k, const Bidegree& bd, const Vec& xi,
                        const Vec& nu) {
  switch (k) {
    case OpKind::ExtD:
      return lin(wedge_form(bd, xi), wedge_form(bd, nu));
    case OpKind::ExtDV:
      return lin(wedge_vec(bd, xi), wedge_vec(bd, nu));
    case OpKind::CoD:
      return lin(-interior_form(bd, xi), -interior_form(bd, nu));
    case OpKind::CoDV:
      return lin(-interior_vec(bd, xi), -interior_vec(bd, nu));
    case OpKind::Hess: {
      SymbolPoly a = model_symbol(OpKind::ExtD, bd.shifted(0, 1), xi, nu) *
                     model_symbol(OpKind::ExtDV, bd, xi, nu);
      SymbolPoly b = model_symbol(OpKind::ExtDV, bd.shifted(1, 0), xi, nu) *
                     model_symbol(OpKind::ExtD, bd, xi, nu);
      return (a + b).scaled(0.5);
    }
    case OpKind::HessStar: {
      SymbolPoly a = model_symbol(OpKind::CoD, bd.shifted(0, -1), xi, nu) *
                     model_symbol(OpKind::CoDV, bd, xi, nu);
      SymbolPoly b = model_symbol(OpKind::CoDV, bd.shifted(-1, 0), xi, nu) *
                     model_symbol(OpKind::CoD, bd, xi, nu);
      return (a + b).scaled(0.5);
    }
    case OpKind::DG: {
      SymbolPoly p = model_symbol(OpKind::ExtD, bd, xi, nu);
      if (bd.k < bd.m) {
        // Project the raw derivative back into the kernel subspace:
        // sigma(xi) psi - (1/alpha) G (xi ^V psi).
        CMat G = bianchi_sum(bd.shifted(0, 1)).cast<cplx>();
        double a = alpha_const(bd.m, bd.k);
        p = p - model_symbol(OpKind::ExtDV, bd, xi, nu).left(G).scaled(1.0 / a);
      }
      return p;
    }
    case OpKind::DeltaG: {
      SymbolPoly p = model_symbol(OpKind::CoD, bd, xi, nu);
      if (bd.k > bd.m) {
        CMat GV = bianchi_sum_V(bd.shifted(0, -1)).cast<cplx>();
        double a = alpha_const(bd.k, bd.m);
        p = p - model_symbol(OpKind::CoDV, bd, xi, nu).left(GV).scaled(1.0 / a);
      }
      return p;
    }
  }
  throw std::invalid_argument("unknown op kind");
}

SymbolPoly coord_symbol(OpKind k, const Bidegree& bd, const MetricAtPoint& mp,
                        const Vec& xi, const Vec& nu) {
  switch (k) {
    case OpKind::ExtD:
    case OpKind::ExtDV:
      // Wedge by a covector is metric-free; same coefficient formula in any
      // coframe.
      return model_symbol(k, bd, xi, nu);
    case OpKind::CoD:
      return lin(-interior_sharp_form(mp, bd, xi),
                 -interior_sharp_form(mp, bd, nu));
    case OpKind::CoDV:
      return lin(-interior_sharp_vec(mp, bd, xi),
                 -interior_sharp_vec(mp, bd, nu));
    case OpKind::Hess: {
      SymbolPoly a = coord_symbol(OpKind::ExtD, bd.shifted(0, 1), mp, xi, nu) *
                     coord_symbol(OpKind::ExtDV, bd, mp, xi, nu);
      SymbolPoly b = coord_symbol(OpKind::ExtDV, bd.shifted(1, 0), mp, xi, nu) *
                     coord_symbol(OpKind::ExtD, bd, mp, xi, nu);
      return (a + b).scaled(0.5);
    }
    case OpKind::HessStar: {
      SymbolPoly a = coord_symbol(OpKind::CoD, bd.shifted(0, -1), mp, xi, nu) *
                     coord_symbol(OpKind::CoDV, bd, mp, xi, nu);
      SymbolPoly b = coord_symbol(OpKind::CoDV, bd.shifted(-1, 0), mp, xi, nu) *
                     coord_symbol(OpKind::CoD, bd, mp, xi, nu);
      return (a + b).scaled(0.5);
    }
    case OpKind::DG: {
      SymbolPoly p = coord_symbol(OpKind::ExtD, bd, mp, xi, nu);
      if (bd.k < bd.m) {
        // The kernel-sum operator has the same matrix in every coframe.
        CMat G = bianchi_sum(bd.shifted(0, 1)).cast<cplx>();
        double a = alpha_const(bd.m, bd.k);
        p = p -
            coord_symbol(OpKind::ExtDV, bd, mp, xi, nu).left(G).scaled(1.0 / a);
      }
      return p;
    }
    case OpKind::DeltaG: {
      SymbolPoly p = coord_symbol(OpKind::CoD, bd, mp, xi, nu);
      if (bd.k > bd.m) {
        CMat GV = bianchi_sum_V(bd.shifted(0, -1)).cast<cplx>();
        double a = alpha_const(bd.k, bd.m);
        p = p -
            coord_symbol(OpKind::CoDV, bd, mp, xi, nu).left(GV).scaled(1.0 / a);
      }
      return p;
    }
  }
  throw std::invalid_argument("unknown op kind");
}

SymbolPoly frame_symbol(OpKind k, const Bidegree& bd, const MetricAtPoint& mp,
                        const Vec& xi, const Vec& nu) {
  SymbolPoly p = coord_symbol(k, bd, mp, xi, nu);
  Bidegree tgt = op_target(k, bd);
  CMat Ft = frame_map(mp, tgt).cast<cplx>();
  CMat Fsi = frame_map_inv(mp, bd).cast<cplx>();
  return p.left(Ft).right(Fsi);
}

// ---------------------------------------------------------------------------

BProj boundary_proj(BSlot slot, const Bidegree& src) {
  int d = src.d;
  int nrm = d - 1;
  bool take_form = (slot == BSlot::NT || slot == BSlot::NN);
  bool take_vec = (slot == BSlot::TN || slot == BSlot::NN);
  Bidegree tgt{src.k - (take_form ? 1 : 0), src.m - (take_vec ? 1 : 0), d - 1};
  BProj out{tgt, Mat::Zero(std::max(tgt.dim(), 0), src.dim())};
  if (tgt.k < 0 || tgt.m < 0 || tgt.k > tgt.d || tgt.m > tgt.d) {
    out.P = Mat::Zero(0, src.dim());
    return out;
  }
  const auto& bi = index_sets(tgt.d, tgt.k);
  const auto& bj = index_sets(tgt.d, tgt.m);
  for (int ri = 0; ri < static_cast<int>(bi.size()); ++ri) {
    IndexMask Is = bi[ri] | (take_form ? (IndexMask(1) << nrm) : 0);
    int si = take_form ? removal_sign(Is, nrm) : 1;
    int rsi = set_rank(d, src.k, Is);
    for (int rj = 0; rj < static_cast<int>(bj.size()); ++rj) {
      IndexMask Js = bj[rj] | (take_vec ? (IndexMask(1) << nrm) : 0);
      int sj = take_vec ? removal_sign(Js, nrm) : 1;
      int rsj = set_rank(d, src.m, Js);
      out.P(pair_index(tgt, ri, rj), pair_index(src, rsi, rsj)) = si * sj;
    }
  }
  return out;
}

namespace {
const char* slot_name(BSlot s) {
  switch (s) {
    case BSlot::TT: return "P_tt";
    case BSlot::NT: return "P_nt";
    case BSlot::TN: return "P_tn";
    case BSlot::NN: return "P_nn";
  }
  return "?";
}
}  // namespace

TraceSymbol trace_proj(BSlot slot, const Bidegree& src, bool bianchi_compress) {
  BProj bp = boundary_proj(slot, src);
  CMat A0 = bp.P.cast<cplx>();
  std::string name = slot_name(slot);
  if (bianchi_compress && A0.rows() > 0 && bp.tgt.valid()) {
    Mat Q = bianchi_onb(bp.tgt);
    A0 = Q.transpose().cast<cplx>() * A0;
    name += "_g";
  }
  TraceSymbol ts;
  ts.name = name;
  ts.A0 = A0;
  ts.A1 = CMat::Zero(A0.rows(), A0.cols());
  return ts;
}

TraceSymbol trace_junction(const Bidegree& src, const Vec& xi) {
  int d = src.d;
  Vec xib = xi.head(d - 1);
  BProj tt = boundary_proj(BSlot::TT, src);
  BProj nt = boundary_proj(BSlot::NT, src);
  BProj tn = boundary_proj(BSlot::TN, src);
  TraceSymbol ts;
  ts.name = "junction_trace";
  ts.A1 = kI * tt.P.cast<cplx>();
  CMat A0 = CMat::Zero(tt.P.rows(), src.dim());
  if (nt.P.rows() > 0)
    A0 -= wedge_form(nt.tgt, xib).cast<cplx>() * nt.P.cast<cplx>();
  if (tn.P.rows() > 0)
    A0 -= wedge_vec(tn.tgt, xib).cast<cplx>() * tn.P.cast<cplx>();
  ts.A0 = A0;
  return ts;
}

TraceSymbol trace_junction_star(const Bidegree& src, const Vec& xi) {
  int d = src.d;
  Vec xib = xi.head(d - 1);
  BProj nn = boundary_proj(BSlot::NN, src);
  BProj nt = boundary_proj(BSlot::NT, src);
  BProj tn = boundary_proj(BSlot::TN, src);
  TraceSymbol ts;
  ts.name = "junction_trace_star";
  ts.A1 = nn.P.cast<cplx>();
  CMat A0 = CMat::Zero(nn.P.rows(), src.dim());
  if (tn.P.rows() > 0)
    A0 -= kI * interior_form(tn.tgt, xib).cast<cplx>() * tn.P.cast<cplx>();
  if (nt.P.rows() > 0)
    A0 -= kI * interior_vec(nt.tgt, xib).cast<cplx>() * nt.P.cast<cplx>();
  ts.A0 = A0;
  return ts;
}

std::string bkind_name(BKind k) {
  switch (k) {
    case BKind::BG: return "dirichlet_pair";
    case BKind::BGstar: return "neumann_pair";
    case BKind::BH: return "junction_pair";
    case BKind::BHstar: return "junction_pair_star";
    case BKind::TTonly: return "tangential_only";
    case BKind::DoubleTT: return "tangential_twice";
  }
  return "?";
}

std::vector<TraceSymbol> boundary_system(BKind kind, const Bidegree& src,
                                         const Vec& xi) {
  switch (kind) {
    case BKind::BG:
      return {trace_proj(BSlot::TT, src, true), trace_proj(BSlot::TN, src, true)};
    case BKind::BGstar:
      return {trace_proj(BSlot::NT, src, true), trace_proj(BSlot::NN, src, true)};
    case BKind::BH: {
      TraceSymbol t = trace_junction(src, xi);
      t.A0 = -t.A0;
      t.A1 = -t.A1;
      t.name = "neg_junction_trace";
      return {trace_proj(BSlot::TT, src, true), t};
    }
    case BKind::BHstar:
      return {trace_junction_star(src, xi), trace_proj(BSlot::NN, src, true)};
    case BKind::TTonly:
      return {trace_proj(BSlot::TT, src, true)};
    case BKind::DoubleTT:
      return {trace_proj(BSlot::TT, src, true), trace_proj(BSlot::TT, src, true)};
  }
  throw std::invalid_argument("unknown boundary system");
}

}  // namespace pcx
