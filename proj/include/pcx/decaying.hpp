#pragma once

#include <vector>

#include "pcx/symbol.hpp"

// Decaying half-line solutions of a stacked symbol system.
//
// Given symbols P_1..P_r (shared domain, t acting as i d/ds on s >= 0), the
// space M+ collects the solutions psi(s) = (sum_j w_j s^j / j!) e^{mu s},
// Re mu < 0, of P_i(i d/ds) psi = 0 for all i.  Candidate decay rates come
// from the normal operator N = sum_i P_i^* P_i (composed at real t, then
// evaluated at t = i mu): det N(i mu) is a scalar polynomial whose stable
// roots carry all candidates.  Per root cluster of multiplicity q, Jordan
// chains solve the block-Toeplitz system with blocks (1/r!) d^r/dmu^r P(i mu),
// first for N (candidates), then filtered by the full stack.

namespace pcx {

struct ChainSolution {
  cplx mu;                  // Re mu < 0
  std::vector<CVec> w;      // polynomial part, psi = sum w_j s^j/j! e^{mu s}
  double residual = 0.0;    // norm of the stacked chain equations
  CVec value0() const { return w[0]; }
  CVec deriv0() const {
    CVec v = mu * w[0];
    if (w.size() > 1) v += w[1];
    return v;
  }
};

struct DecayOptions {
  double residual_tol = 1e-9;   // acceptance for filtered chains
  // Root-cluster radius (relative to 1 + |mu|).  Must exceed the rounding
  // scatter of multiple eigenvalues, eps^(1/chain length); it also bounds
  // the smallest resolvable separation between distinct decay rates.
  double cluster_rel_tol = 1e-3;
  double axis_rel_tol = 1e-6;   // |Re mu| below this (times scale): indeterminate
  double kernel_rel_tol = 1e-8; // rank cut for the candidate kernels
  bool contour_check = true;
};

struct DecayingSpace {
  int dim = 0;                        // dim of the filtered space M+
  std::vector<ChainSolution> basis;   // stacked coefficients orthonormal per cluster
  int normal_route_dim = 0;           // solutions of the normal operator alone
  CPoly det_mu;                       // det N(i mu) (trimmed)
  std::vector<cplx> stable_roots;     // polished cluster centers
  std::vector<int> stable_mult;
  bool indeterminate = false;         // a root sits on / hugs the imaginary axis
  bool pre_injective_on_line = true;  // stack injective at real t, |t| in [1/4, 4]
  double min_sv_on_line = 0.0;
  int contour_stable_count = -1;      // argument principle cross-check; -1 = skipped
  double max_residual = 0.0;
};

DecayingSpace decaying_space(const std::vector<SymbolPoly>& stack,
                             const DecayOptions& opt = {});

// Chain equations residual for one mode against a stack evaluated at mu.
double chain_residual(const std::vector<SymbolPoly>& stack,
                      const ChainSolution& sol);

}  // namespace pcx
