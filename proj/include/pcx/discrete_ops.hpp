#pragma once

// Sparse assembly of the covariant differential operators and boundary
// traces on a structured grid.  All fields are stored in orthonormal-frame
// components, node-major: entry(node, comp) = v[node * fdim + comp].  With
// frame components the fiber Gram is the identity, so every mass matrix is
// a scalar diagonal (trapezoid weight times sqrt(det g)) and the fiber maps
// from fiber_ops.hpp apply verbatim at every node.

#include <Eigen/Sparse>
#include <string>
#include <vector>

#include "pcx/fiber.hpp"
#include "pcx/grid.hpp"

namespace pcx {

using SpMat = Eigen::SparseMatrix<double>;

// Describes a grid field: double-form bidegree, optional twist bundle rank
// (component index = form_comp * twist + twist_comp), and whether the values
// are stored in compressed Bianchi coordinates.
struct FieldDesc {
  Bidegree bd;
  int twist = 1;
  bool bianchi = false;

  // Fiber dimension per node; invalid bidegrees count as empty fibers so
  // edge-of-chain operators come out with zero rows instead of throwing.
  int fdim() const;
};

long field_size(const Grid& g, const FieldDesc& fd);

// Diagonal interior mass: quad_weight * sqrt(det g), repeated per component.
Eigen::VectorXd mass_matrix(const Grid& g, const FieldDesc& fd);

struct StencilOpts {
  // Order of the one-sided rows at non-periodic ends (interior rows are
  // always second-order central).  2 for operators, 1 for the normal
  // differences inside the second-order trace system.
  int boundary_order = 2;
};

// One row of the 1-D derivative stencil along an axis.
struct StencilEntry {
  long node;
  double w;
};
void axis_stencil(const Grid& g, long id, int ax, int boundary_order,
                  std::vector<StencilEntry>& out);

// First-order covariant operators in frame components:
//   d^nabla   = sum_i (dx^i wedge_form) . (stencil_i + omega_i-rep)
//   delta^nabla = -sum_i (dx^i-sharp interior_form) . (...)
// and the vector-slot versions.  Empty target fiber -> zero-row matrix.
SpMat assemble_d(const Grid& g, Bidegree src, StencilOpts so = {});
SpMat assemble_dV(const Grid& g, Bidegree src, StencilOpts so = {});
SpMat assemble_delta(const Grid& g, Bidegree src, StencilOpts so = {});
SpMat assemble_deltaV(const Grid& g, Bidegree src, StencilOpts so = {});

// Second-order operators by composition of the first-order matrices.
SpMat assemble_H(const Grid& g, Bidegree src, StencilOpts so = {});
SpMat assemble_Hstar(const Grid& g, Bidegree src, StencilOpts so = {});

// Block-diagonal lift of a constant fiber map: I_nodes (x) kron(F, I_twist).
SpMat blockdiag_fiber(const Grid& g, const Mat& F, int twist = 1);

// Stack two sparse matrices with equal column counts vertically.
SpMat vstack(const SpMat& A, const SpMat& B);

// Bianchi-compressed derivative/coderivative: Q_tgt^T d Q_src with Q the
// orthonormal Bianchi bases of source and target fibers (constant across
// nodes because everything is expressed in orthonormal frames).
SpMat assemble_dG(const Grid& g, Bidegree src, StencilOpts so = {});
SpMat assemble_deltaG(const Grid& g, Bidegree src, StencilOpts so = {});

// Twisted bundle connection for the de Rham family: per node and axis an
// antisymmetric rank x rank coefficient matrix, plus its curvature
// F_ij = d_i a_j - d_j a_i + [a_i, a_j] (finite-differenced).
struct TwistedConnection {
  int rank = 1;
  std::vector<std::vector<Mat>> a;     // [node][axis]
  std::vector<std::vector<Mat>> curv;  // [node][i*d+j]
};
TwistedConnection make_twisted_connection(const Grid& g, int rank, double amp,
                                          unsigned seed);
SpMat assemble_d_twisted(const Grid& g, Bidegree src,
                         const TwistedConnection& tc, StencilOpts so = {});
// Curvature action sum_{i<j} dx^i ^ dx^j ^ (.) (x) F_ij, the order-zero
// operator that d_twisted . d_twisted converges to.
SpMat assemble_curvature_wedge(const Grid& g, Bidegree src,
                               const TwistedConnection& tc);

// A field living on the union of the domain's faces, stacked face-major in
// the order of g.faces, node-major within a face.
struct BoundaryField {
  Bidegree bd;  // boundary-intrinsic bidegree (dimension d-1)
  int twist = 1;
  std::vector<long> off;  // start of each face block
  long total = 0;

  long size() const { return total; }
  int fdim() const;
};
BoundaryField boundary_field(const Grid& g, Bidegree bfiber, int twist = 1);
Eigen::VectorXd boundary_mass(const Grid& g, const BoundaryField& bf);

// Slot traces with respect to the outward unit normal nu:
//   TT = restrict tangential components,   (k,m)   -> (k,m)
//   TN = restrict . i_nu on vector slot,   (k,m)   -> (k,m-1)
//   NT = restrict . i_nu on form slot,     (k,m)   -> (k-1,m)
//   NN = both contractions then restrict,  (k,m)   -> (k-1,m-1)
// For the diagonal metric families the ambient frame restricted to a face
// coincides with the face's own frame, so restriction is pure component
// selection.
enum class Slot { TT, TN, NT, NN };

struct Trace {
  SpMat T;
  BoundaryField bf;
};
Trace trace_slot(const Grid& g, Bidegree src, Slot s, int twist = 1);

// Second-order traces of the Hessian-type operators, assembled from their
// defining commutator formulas.  The ambient derivatives entering them use
// first-order one-sided normal rows; the tangential pieces are the face
// grids' own intrinsic operators.
Trace trace_frakT(const Grid& g, Bidegree src);
Trace trace_frakTstar(const Grid& g, Bidegree src);

// An assembled operator together with everything needed to test its Green
// identity: the coordinate-formula adjoint (NOT the matrix adjoint), the
// diagonal masses on both sides, and the boundary pairing terms
// sum_t <Bsrc_t psi, Btgt_t eta>_{wb_t}.
struct TraceTerm {
  SpMat Bsrc, Btgt;
  Eigen::VectorXd wb;
};
struct DiscreteOperator {
  std::string kind;
  FieldDesc src, tgt;
  int order = 1;
  SpMat A;
  SpMat Astar;
  Eigen::VectorXd Msrc, Mtgt;
  std::vector<TraceTerm> traces;
};

// Green-system builders for the three families pinned by the verification
// suite.  green_pair_dG works in compressed Bianchi coordinates; its trace
// matrices are the ambient slot traces composed with the decompression.
DiscreteOperator green_pair_d(const Grid& g, Bidegree src,
                              StencilOpts so = {});
DiscreteOperator green_pair_dG(const Grid& g, Bidegree src,
                               StencilOpts so = {});
DiscreteOperator green_pair_H(const Grid& g, Bidegree src,
                              StencilOpts so = {});

// String-keyed assembly front end for the CLI:
// kind in {d, dV, delta, deltaV, dG, deltaG, H, Hstar, TT, TN, NT, NN,
// frakT, frakTstar}.  Unknown kind or empty source fiber -> runtime_error.
DiscreteOperator assemble(const Grid& g, const std::string& kind,
                          Bidegree src);

struct GreenStats {
  double max_res = 0.0;
  double mean_res = 0.0;
  int trials = 0;
};
GreenStats greens_residual(const Grid& g, const DiscreteOperator& op,
                           int trials, unsigned seed);

// Deterministic smooth test field: per component a short random sum of
// separable products of low-order polynomials and trig modes (pure Fourier
// modes along periodic axes).
Eigen::VectorXd random_smooth_field(const Grid& g, const FieldDesc& fd,
                                    unsigned seed);

}  // namespace pcx
