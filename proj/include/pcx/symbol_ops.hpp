#pragma once

#include <string>
#include <vector>

#include "pcx/fiber.hpp"
#include "pcx/metric.hpp"
#include "pcx/symbol.hpp"

// Symbols of the first/second order operators appearing in the chains, plus
// the boundary projections and trace rows used by the half-space systems.
//
// All "model" builders work in orthonormal-frame components with the boundary
// {x_d = 0}, inward normal e_d and tangential fiber spanned by e_1..e_{d-1}.
// Coordinate-basis builders take a metric point and are conjugated back to
// the frame by the caller (frame_symbol); at a flat anchor both routes agree
// to rounding.

namespace pcx {

enum class OpKind {
  ExtD,    // exterior covariant derivative on the form slot
  ExtDV,   // same on the vector slot
  CoD,     // codifferential (form slot), sigma = -i_xi
  CoDV,    // codifferential (vector slot)
  Hess,    // curl-curl / double-derivative junction operator, order 2
  HessStar,
  DG,      // kernel-projected exterior derivative (correction when k < m)
  DeltaG,  // kernel-projected codifferential (correction when k > m)
};

std::string op_name(OpKind k);
int op_order(OpKind k);
Bidegree op_target(OpKind k, const Bidegree& src);

// sigma(op)(xi + t nu) in orthonormal components, matrices over the standard
// double-form bases.
SymbolPoly model_symbol(OpKind k, const Bidegree& bd, const Vec& xi,
                        const Vec& nu);

// Same operator in coordinate components at a metric point.
SymbolPoly coord_symbol(OpKind k, const Bidegree& bd, const MetricAtPoint& mp,
                        const Vec& xi, const Vec& nu);

// Coordinate build conjugated into the orthonormal frame of mp.
SymbolPoly frame_symbol(OpKind k, const Bidegree& bd, const MetricAtPoint& mp,
                        const Vec& xi, const Vec& nu);

// ---------------------------------------------------------------------------
// Boundary fiber machinery.

enum class BSlot { TT, NT, TN, NN };

// Projection of interior (k,m) coefficients onto boundary coefficients:
// TT keeps pairs avoiding the normal index, NT contracts the normal out of
// the form slot, TN out of the vector slot, NN out of both.  Signs follow
// the interior-product convention.
struct BProj {
  Bidegree tgt;  // boundary bidegree, dimension d-1
  Mat P;         // tgt.dim() x src.dim()
};
BProj boundary_proj(BSlot slot, const Bidegree& src);

// First-order boundary rows evaluated on half-line solutions:
//   value = A0 psi(0) + A1 psi'(0).
struct TraceSymbol {
  std::string name;
  CMat A0, A1;  // rows x src.dim()
  int rows() const { return static_cast<int>(A0.rows()); }
  // psi(0) = w0, psi'(0) = mu w0 + w1 for a Jordan-chain mode.
  CVec apply(const CVec& w0, const CVec& w1, cplx mu) const {
    return A0 * w0 + A1 * (mu * w0 + w1);
  }
};

// Plain projection trace (A1 = 0); optionally compressed onto the
// orthonormal basis of the boundary Bianchi subspace.
TraceSymbol trace_proj(BSlot slot, const Bidegree& src, bool bianchi_compress);

// Junction traces on the (m,m) diagonal space and its adjoint on
// (m+1,m+1); xi is the tangential frame covector (last component ignored).
TraceSymbol trace_junction(const Bidegree& src, const Vec& xi);
TraceSymbol trace_junction_star(const Bidegree& src, const Vec& xi);

// Named boundary systems (stacked trace rows).
enum class BKind { BG, BGstar, BH, BHstar, TTonly, DoubleTT };
std::string bkind_name(BKind k);
std::vector<TraceSymbol> boundary_system(BKind kind, const Bidegree& src,
                                         const Vec& xi);

}  // namespace pcx
