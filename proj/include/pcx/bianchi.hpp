#pragma once

#include "pcx/fiber.hpp"

// Bianchi forms G^{k,m}: ker G_V for k <= m, ker G for k >= m (both at k = m,
// where they coincide with symmetric double forms' curvature-type subspace).
// P is the orthogonal projection in the orthonormal-frame inner product.

namespace pcx {

// alpha(k, m) = k - m + 1 (the constant in the explicit projection formulas).
inline int alpha_const(int k, int m) { return k - m + 1; }

// Orthogonal projector onto G^{k,m} in orthonormal-frame coefficients.
// k > m: Id - G_V (G G_V)^{-1} G           (G G_V = G_V G + (k - m + 2) Id is PD)
// k < m: involution conjugate of the above
// k = m: rank-revealing projector onto ker G  ∩ ker G_V (SVD, relative tol).
Mat bianchi_projector_ortho(const Bidegree& bd, double rank_tol = 1e-10);

// Orthonormal basis (columns) of G^{k,m} in orthonormal-frame coefficients.
// Deterministic: eigendecomposition of the projector, canonical column signs.
Mat bianchi_onb(const Bidegree& bd, double rank_tol = 1e-10);

// dim G^{k,m}.
int bianchi_dim(const Bidegree& bd);

// Orthonormal basis of the symmetric double forms inside Lambda^{m,m}.
Mat symmetric_onb(const Bidegree& bd);

}  // namespace pcx
