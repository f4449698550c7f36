#pragma once

#include "pcx/fiber.hpp"

// Constant fiber-operator matrices in an orthonormal frame.  All maps act on
// coefficient vectors in the (I, J) pair basis.  Metric-dependent versions
// are obtained by conjugating with frame maps (see metric.hpp).

namespace pcx {

// phi ^ .  : left wedge by a fixed double form, (k,m) -> (k+p, m+q).
// Slots antisymmetrize independently; no cross-slot Koszul sign.
Mat wedge_left(const DoubleForm& phi, const Bidegree& src);

// xi ^ .   : left wedge by the 1-form with components xi on the form slot.
Mat wedge_form(const Bidegree& src, const Vec& xi);
// xi ^V .  : same on the vector slot, (k,m) -> (k, m+1).
Mat wedge_vec(const Bidegree& src, const Vec& xi);

// i_X on the form slot, (k,m) -> (k-1,m); X given by components.
Mat interior_form(const Bidegree& src, const Vec& X);
// i_X^V = (i_X psi^T)^T on the vector slot, (k,m) -> (k,m-1).
Mat interior_vec(const Bidegree& src, const Vec& X);

// Involution psi -> psi^T (swap slots), (k,m) -> (m,k).
Mat involution(const Bidegree& src);

// Bianchi sum G = sum_i  theta^i ^ i^V_{E_i} : (k,m) -> (k+1, m-1).
// Frame-independent (the defining sum contracts a vector-slot index into the
// form slot with no metric).
Mat bianchi_sum(const Bidegree& src);
// G_V = (G psi^T)^T : (k,m) -> (k-1, m+1).
Mat bianchi_sum_V(const Bidegree& src);

// Metric trace tr = sum_i i_{E_i} i^V_{E_i} : (k,m) -> (k-1,m-1), orthonormal frame.
Mat trace_ortho(const Bidegree& src);
// g ^ . = sum_i theta^i ^ theta^i_V ^ . : (k,m) -> (k+1,m+1), orthonormal frame.
Mat gwedge_ortho(const Bidegree& src);

// Hodge star on the form slot, orthonormal frame: (k,m) -> (d-k,m).
Mat hodge_form_ortho(const Bidegree& src);
// Vector-slot star: (k,m) -> (k,d-m).
Mat hodge_vec_ortho(const Bidegree& src);

// Symmetrizer (Id + involution)/2 on square bidegrees (m,m).
Mat sym_projector(const Bidegree& src);

// Complex-covector variants (the builders above are linear in xi / X).
CMat wedge_form_c(const Bidegree& src, const CVec& xi);
CMat wedge_vec_c(const Bidegree& src, const CVec& xi);
CMat interior_form_c(const Bidegree& src, const CVec& X);
CMat interior_vec_c(const Bidegree& src, const CVec& X);

}  // namespace pcx
