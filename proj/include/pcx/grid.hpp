#pragma once

#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "pcx/metric.hpp"

// Structured collocated grids on box and annulus charts.  Metrics are given
// as closed-form fields, evaluated at nodes; Christoffel symbols, frame
// rotation coefficients and curvature are finite-differenced from the nodal
// metric values (second order: central interior, one-sided at the ends).
// Every supported metric family is diagonal in its chart coordinates, so the
// Cholesky coframe is axis-aligned and boundary normals are frame vectors.

namespace pcx {

struct Axis {
  double a = 0.0, b = 1.0;
  int n = 0;
  bool periodic = false;

  double h() const { return periodic ? (b - a) / n : (b - a) / (n - 1); }
  double coord(int i) const { return a + i * h(); }
};

// Diagonal metric field on a chart.
struct MetricSpec {
  std::string name = "flat";
  std::function<Mat(const Vec&)> eval;  // x -> d x d diagonal SPD matrix
};

MetricSpec flat_metric();
// dr^2 + r^2 dtheta^2; coordinate 0 is the radius.
MetricSpec polar_metric();
// e^{2 phi(x)} * identity.
MetricSpec conformal_metric(std::function<double(const Vec&)> phi, std::string label = "conformal");

struct DomainSpec {
  std::string chart = "box";  // "box" ([0,1]^d) or "annulus" (r in [1,2], theta periodic)
  int d = 2;
  int n = 8;  // nodes per axis
  MetricSpec metric = flat_metric();
};

struct ConnectionData {
  // Per node i (outer), per coordinate direction a (inner):
  //   Gamma[i][a](k, j) = Γ^k_{aj},
  //   omega[i][a](p, q) = frame rotation coefficients: ∇_a ϑ^p = -ω^p_q ϑ^q.
  // riem[i] is the coordinate Riemann tensor packed as (l*d + k, a*d + b) = R^l_{k a b}.
  std::vector<std::vector<Mat>> Gamma;
  std::vector<std::vector<Mat>> omega;
  std::vector<Mat> riem;
  double max_omega_asym = 0.0;  // worst antisymmetry defect of ω before cleanup
};

struct Grid {
  int d = 0;
  std::vector<Axis> axes;
  long nodes = 0;
  std::vector<long> strides;  // last axis fastest

  std::vector<MetricAtPoint> mp;  // per node
  ConnectionData conn;

  // Boundary faces of non-periodic axes.  Each face carries its own
  // (d-1)-dimensional grid with the induced metric, used for the intrinsic
  // tangential operators inside the first-order boundary traces.
  struct Face {
    int axis = 0;
    int side = 0;  // 0 = lower end, 1 = upper end
    std::vector<long> node_ids;  // ambient node per face node, face-grid order
    std::unique_ptr<Grid> fgrid;
  };
  std::vector<Face> faces;

  long node_id(const std::vector<int>& idx) const;
  std::vector<int> node_idx(long id) const;
  Vec coord(long id) const;
  // Trapezoid quadrature weight of the node in chart coordinates (no metric factor).
  double quad_weight(long id) const;
  double min_h() const;
};

// Builds nodes, metric frames, connection and curvature data, and boundary
// faces.  Throws std::runtime_error naming the node location if the metric
// fails to be SPD anywhere.
Grid build_domain(const DomainSpec& spec);

// Gauss curvature at a node from the assembled Riemann tensor (d = 2 only).
double gauss_curvature(const Grid& g, long node);

// Second-order derivative of nodal data along one axis: central in the
// interior, three-point one-sided at non-periodic ends.
double grid_fd(const Grid& g, const std::function<double(long)>& f, long id, int axis);

// Second derivative along one axis: 3-point central interior, 4-point
// one-sided at non-periodic ends (both second order).
double grid_fd2(const Grid& g, const std::function<double(long)>& f, long id, int axis);

}  // namespace pcx
