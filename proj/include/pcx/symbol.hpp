#pragma once

#include <string>
#include <vector>

#include "pcx/fiber.hpp"

// Matrix-valued polynomials in the conormal variable t, representing symbols
// sigma(xi' + t nu) of the operators in the chains.  Powers of the unit
// imaginary factor common to all terms are dropped; what remains is the
// relative weight between tangential and normal parts, which is what every
// rank/kernel verdict depends on.
//
// Conventions for the half-space model: the normal coordinate s >= 0 points
// into the interior, t acts as i d/ds, so a decaying mode w e^{mu s} (Re mu <
// 0) corresponds to the substitution t -> i mu.

namespace pcx {

struct SymbolPoly {
  // sum_j C[j] t^j; all coefficients share the same shape.
  std::vector<CMat> C;

  SymbolPoly() = default;
  explicit SymbolPoly(std::vector<CMat> coeffs) : C(std::move(coeffs)) {}

  static SymbolPoly zero(int rows, int cols) {
    return SymbolPoly({CMat::Zero(rows, cols)});
  }
  static SymbolPoly constant(CMat c0) { return SymbolPoly({std::move(c0)}); }
  static SymbolPoly linear(CMat c0, CMat c1) {
    return SymbolPoly({std::move(c0), std::move(c1)});
  }

  int rows() const { return C.empty() ? 0 : static_cast<int>(C[0].rows()); }
  int cols() const { return C.empty() ? 0 : static_cast<int>(C[0].cols()); }
  int degree() const { return static_cast<int>(C.size()) - 1; }

  CMat eval(cplx t) const;

  // d^r/dmu^r of mu |-> eval(i mu), at mu.
  CMat eval_deriv_mu(cplx mu, int r) const;

  // Coefficient-wise conjugate transpose: the adjoint symbol for real t.
  SymbolPoly adjoint() const;

  SymbolPoly operator+(const SymbolPoly& o) const;
  SymbolPoly operator-(const SymbolPoly& o) const;
  SymbolPoly operator*(const SymbolPoly& o) const;  // composition
  SymbolPoly scaled(cplx a) const;

  // Restriction to subspaces: Qtgt^* P Qsrc (columns of Q orthonormal).
  SymbolPoly restricted(const CMat& Qtgt, const CMat& Qsrc) const;
  SymbolPoly left(const CMat& A) const;
  SymbolPoly right(const CMat& B) const;

  // Tensor with the identity on an auxiliary value space.
  SymbolPoly kron_identity(int r) const;

  void trim(double rel_tol = 1e-14);
};

// Stack several symbols sharing a domain into one tall symbol.
SymbolPoly stack_symbols(const std::vector<SymbolPoly>& ops);

// A (x) Id_r with the block layout used by kron_identity.
CMat kron_id(const CMat& A, int r);

// Scalar complex polynomial helpers (coefficients a[0] + a[1] x + ...).
using CPoly = std::vector<cplx>;
cplx poly_eval(const CPoly& p, cplx x);
CPoly poly_deriv(const CPoly& p);
void poly_trim(CPoly& p, double rel_tol = 1e-9);
// Roots via the companion matrix of the monic normalization.
std::vector<cplx> poly_roots(const CPoly& p);

// det(N(i mu)) as a polynomial in mu, computed by evaluation at scaled roots
// of unity and inverse DFT.
CPoly det_poly_mu(const SymbolPoly& N, double radius = 1.0);

}  // namespace pcx
