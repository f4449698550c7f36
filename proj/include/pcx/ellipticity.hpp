#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "pcx/decaying.hpp"
#include "pcx/metric.hpp"
#include "pcx/symbol_ops.hpp"

// Overdetermined-ellipticity checks for the operator chains.
//
// A chain is a sequence of subspaces C^k (orthonormal columns Q_k inside an
// ambient double-form fiber) connected by first/second order operators A_k.
// The level-k system stacks sigma(A_k) with sigma(A_{k-1})^* restricted to
// C^k; the boundary side pairs the decaying half-line solutions M+ of that
// stack against the trace rows of the adjoint system B_{k-1}^*.  The verdict
// requires the interior stack injective for every real unit covector and the
// trace map injective on M+ for every tangential direction sampled.

namespace pcx {

struct ChainLevel {
  std::string space_name;
  Bidegree bd;      // ambient bidegree
  CMat Q;           // ambient.dim x space_dim, orthonormal columns
  OpKind up_kind = OpKind::ExtD;
  bool has_up = false;
};

struct ChainSpec {
  std::string name;
  int d = 0;
  int twist_rank = 1;  // tensor factor on an auxiliary value space
  std::vector<ChainLevel> levels;
  int size() const { return static_cast<int>(levels.size()); }
};

ChainSpec de_rham_chain(int d);
ChainSpec twisted_chain(int d, int rank);
// m = 0: second-order junction at the bottom (Hessian-type);
// m = 1: deformation chain with the curvature junction (Calabi-type).
ChainSpec bianchi_chain(int m, int d);

// The assembled symbol data of one level in one tangential direction.
struct LevelSystem {
  std::vector<SymbolPoly> interior;  // restricted to the level space
  std::vector<std::string> interior_names;
  // named boundary systems; rows already restricted to the level space
  std::vector<std::pair<std::string, std::vector<TraceSymbol>>> boundary;
};

// xi_tan: frame covector with vanishing normal (last) component.  If mp is
// non-null the symbols are assembled in coordinates at that metric point and
// conjugated into its orthonormal frame (the frame of the model otherwise).
LevelSystem build_level_system(const ChainSpec& chain, int k, const Vec& xi_tan,
                               const MetricAtPoint* mp = nullptr);

// Restricted symbol of the single operator A_k of the chain (up map).
SymbolPoly level_up_symbol(const ChainSpec& chain, int k, const Vec& xi_tan,
                           const MetricAtPoint* mp = nullptr);

struct BoundaryVerdict {
  std::string system;
  int rows = 0, cols = 0;
  double min_sv = 0.0;   // smallest singular value of the trace matrix on M+
  bool injective = false;
  bool vacuous = false;  // M+ empty: injective by convention
};

struct DirectionReport {
  Vec xi_tan;
  int anchor = 0;
  int mplus_dim = 0;
  int normal_route_dim = 0;
  int stable_mult_total = 0;
  bool indeterminate = false;
  bool pre_injective = true;
  double max_residual = 0.0;
  int contour_count = -1;
  std::vector<BoundaryVerdict> boundary;
  bool ok() const {
    if (indeterminate || !pre_injective) return false;
    for (const auto& b : boundary)
      if (!b.injective) return false;
    return true;
  }
};

struct LevelReport {
  std::string chain_name, space_name;
  int level = 0;
  int space_dim = 0;
  int interior_samples = 0;
  double interior_min_sv = 0.0;
  bool interior_injective = false;
  Vec interior_witness_xi;     // filled on failure
  CVec interior_witness;       // ambient coefficients
  std::vector<DirectionReport> directions;
  bool any_indeterminate = false;
  bool od_elliptic = false;
};

struct CheckOptions {
  int interior_samples = 64;
  int boundary_dirs = 16;  // per anchor (d = 2 has only two tangential dirs)
  int anchors = 1;         // anchor 0 is the flat metric
  unsigned seed = 1234;
  double interior_tol = 1e-8;
  double boundary_sv_tol = 1e-8;
  DecayOptions decay;
};

LevelReport check_level(const ChainSpec& chain, int k, const CheckOptions& opt);
std::vector<LevelReport> check_chain(const ChainSpec& chain,
                                     const CheckOptions& opt);

// Deterministic direction samples on the unit sphere of R^n (golden-angle
// style for n = 2, 3; seeded rotations otherwise).  For n = 1 returns {+1,-1}.
std::vector<Vec> sphere_points(int n, int count, unsigned seed);

// Seeded well-conditioned SPD matrices for metric anchor points.
Mat random_spd(int d, unsigned seed);

// min singular value of the stacked interior symbol at a real covector.
double interior_min_sv_at(const LevelSystem& sys, double t);

}  // namespace pcx
