#include "pcx/grid.hpp"

#include <cmath>
#include <sstream>

namespace pcx {

MetricSpec flat_metric() {
  MetricSpec ms;
  ms.name = "flat";
  ms.eval = [](const Vec& x) { return Mat::Identity(x.size(), x.size()).eval(); };
  return ms;
}

MetricSpec polar_metric() {
  MetricSpec ms;
  ms.name = "polar";
  ms.eval = [](const Vec& x) {
    Mat g = Mat::Identity(x.size(), x.size());
    g(1, 1) = x[0] * x[0];
    return g;
  };
  return ms;
}

MetricSpec conformal_metric(std::function<double(const Vec&)> phi, std::string label) {
  MetricSpec ms;
  ms.name = std::move(label);
  ms.eval = [phi = std::move(phi)](const Vec& x) {
    return (std::exp(2.0 * phi(x)) * Mat::Identity(x.size(), x.size())).eval();
  };
  return ms;
}

long Grid::node_id(const std::vector<int>& idx) const {
  long id = 0;
  for (int i = 0; i < d; ++i) id += idx[i] * strides[i];
  return id;
}

std::vector<int> Grid::node_idx(long id) const {
  std::vector<int> idx(d);
  for (int i = 0; i < d; ++i) {
    idx[i] = static_cast<int>(id / strides[i]);
    id -= idx[i] * strides[i];
  }
  return idx;
}

Vec Grid::coord(long id) const {
  auto idx = node_idx(id);
  Vec x(d);
  for (int i = 0; i < d; ++i) x[i] = axes[i].coord(idx[i]);
  return x;
}

double Grid::quad_weight(long id) const {
  auto idx = node_idx(id);
  double w = 1.0;
  for (int i = 0; i < d; ++i) {
    const Axis& ax = axes[i];
    double wi = ax.h();
    if (!ax.periodic && (idx[i] == 0 || idx[i] == ax.n - 1)) wi *= 0.5;
    w *= wi;
  }
  return w;
}

double Grid::min_h() const {
  double h = axes[0].h();
  for (const auto& ax : axes) h = std::min(h, ax.h());
  return h;
}

double grid_fd(const Grid& G, const std::function<double(long)>& f, long id, int ax) {
  auto idx = G.node_idx(id);
  const Axis& a = G.axes[ax];
  const double h = a.h();
  auto at = [&](int i) {
    auto jdx = idx;
    jdx[ax] = i;
    return f(G.node_id(jdx));
  };
  const int i = idx[ax];
  if (a.periodic) {
    const int n = a.n;
    return (at((i + 1) % n) - at((i - 1 + n) % n)) / (2.0 * h);
  }
  if (i == 0) return (-3.0 * at(0) + 4.0 * at(1) - at(2)) / (2.0 * h);
  if (i == a.n - 1) return (3.0 * at(i) - 4.0 * at(i - 1) + at(i - 2)) / (2.0 * h);
  return (at(i + 1) - at(i - 1)) / (2.0 * h);
}

double grid_fd2(const Grid& G, const std::function<double(long)>& f, long id, int ax) {
  auto idx = G.node_idx(id);
  const Axis& a = G.axes[ax];
  const double h2 = a.h() * a.h();
  auto at = [&](int i) {
    auto jdx = idx;
    jdx[ax] = i;
    return f(G.node_id(jdx));
  };
  const int i = idx[ax];
  if (a.periodic) {
    const int n = a.n;
    return (at((i + 1) % n) - 2.0 * at(i) + at((i - 1 + n) % n)) / h2;
  }
  if (i == 0) return (2.0 * at(0) - 5.0 * at(1) + 4.0 * at(2) - at(3)) / h2;
  if (i == a.n - 1)
    return (2.0 * at(i) - 5.0 * at(i - 1) + 4.0 * at(i - 2) - at(i - 3)) / h2;
  return (at(i + 1) - 2.0 * at(i) + at(i - 1)) / h2;
}

namespace {

void assemble_connection(Grid& G) {
  const int d = G.d;
  const long N = G.nodes;
  G.conn.Gamma.assign(N, std::vector<Mat>(d, Mat::Zero(d, d)));
  G.conn.omega.assign(N, std::vector<Mat>(d, Mat::Zero(d, d)));
  G.conn.riem.assign(N, Mat::Zero(d * d, d * d));
  G.conn.max_omega_asym = 0.0;

  // dg[l](i,j) = ∂_l g_ij and dR[l] = ∂_l R, per node.
  std::vector<std::vector<Mat>> dg(N, std::vector<Mat>(d, Mat::Zero(d, d)));
  std::vector<std::vector<Mat>> dR(N, std::vector<Mat>(d, Mat::Zero(d, d)));
  for (int l = 0; l < d; ++l)
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) {
        auto gij = [&](long q) { return G.mp[q].g(i, j); };
        auto rij = [&](long q) { return G.mp[q].R(i, j); };
        for (long q = 0; q < N; ++q) {
          dg[q][l](i, j) = grid_fd(G, gij, q, l);
          dR[q][l](i, j) = grid_fd(G, rij, q, l);
        }
      }

  for (long q = 0; q < N; ++q) {
    const Mat& gi = G.mp[q].ginv;
    for (int a = 0; a < d; ++a) {
      Mat& Ga = G.conn.Gamma[q][a];
      for (int k = 0; k < d; ++k)
        for (int j = 0; j < d; ++j) {
          double s = 0.0;
          for (int l = 0; l < d; ++l)
            s += 0.5 * gi(k, l) * (dg[q][a](j, l) + dg[q][j](a, l) - dg[q][l](a, j));
          Ga(k, j) = s;
        }
      // ∇_a ϑ^p = -(ω_a)^p_q ϑ^q with ω_a = (R Γ_a - ∂_a R) R^{-1}.
      Mat om = (G.mp[q].R * Ga - dR[q][a]) * G.mp[q].Rinv;
      double asym = (om + om.transpose()).norm();
      G.conn.max_omega_asym = std::max(G.conn.max_omega_asym, asym);
      G.conn.omega[q][a] = 0.5 * (om - om.transpose());
    }
  }

  // Curvature from second derivatives of the metric (never differencing the
  // already-differenced Christoffel arrays: re-differencing along the same
  // axis drops an order at the one-sided boundary rows).  Covariant form
  //   R_{nkab} = 1/2 (∂_k∂_a g_nb + ∂_n∂_b g_ka - ∂_k∂_b g_na - ∂_n∂_a g_kb)
  //              + g_mp (Γ^m_{ka} Γ^p_{nb} - Γ^m_{kb} Γ^p_{na}),
  // then riem(l*d+k, a*d+b) = R^l_{kab} = g^{ln} R_{nkab}.
  std::vector<std::vector<Mat>> d2g(N, std::vector<Mat>(d * d, Mat::Zero(d, d)));
  for (int i = 0; i < d; ++i)
    for (int j = i; j < d; ++j) {
      auto gij = [&](long q) { return G.mp[q].g(i, j); };
      for (int a = 0; a < d; ++a) {
        auto da_gij = [&](long q) { return dg[q][a](i, j); };
        for (int b = 0; b < d; ++b) {
          if (b == a) continue;
          // Mixed derivative: cross-axis composition keeps second order.
          for (long q = 0; q < N; ++q) {
            double v = grid_fd(G, da_gij, q, b);
            d2g[q][a * d + b](i, j) = v;
            d2g[q][a * d + b](j, i) = v;
          }
        }
        for (long q = 0; q < N; ++q) {
          double v = grid_fd2(G, gij, q, a);
          d2g[q][a * d + a](i, j) = v;
          d2g[q][a * d + a](j, i) = v;
        }
      }
    }
  for (long q = 0; q < N; ++q) {
    const Mat& gm = G.mp[q].g;
    const Mat& gi = G.mp[q].ginv;
    auto D2 = [&](int a, int b, int i, int j) { return d2g[q][a * d + b](i, j); };
    for (int k = 0; k < d; ++k)
      for (int a = 0; a < d; ++a)
        for (int b = 0; b < d; ++b) {
          for (int l = 0; l < d; ++l) {
            double v = 0.0;
            for (int n = 0; n < d; ++n) {
              double rn = 0.5 * (D2(k, a, n, b) + D2(n, b, k, a) -
                                 D2(k, b, n, a) - D2(n, a, k, b));
              for (int m = 0; m < d; ++m)
                for (int p = 0; p < d; ++p)
                  rn += gm(m, p) * (G.conn.Gamma[q][k](m, a) * G.conn.Gamma[q][n](p, b) -
                                    G.conn.Gamma[q][k](m, b) * G.conn.Gamma[q][n](p, a));
              v += gi(l, n) * rn;
            }
            G.conn.riem[q](l * d + k, a * d + b) = v;
          }
        }
  }
}

Grid build_grid(std::vector<Axis> axes, const std::function<Mat(const Vec&)>& metric_eval,
                bool build_faces);

void attach_faces(Grid& G, const std::function<Mat(const Vec&)>& metric_eval) {
  for (int ax = 0; ax < G.d; ++ax) {
    if (G.axes[ax].periodic) continue;
    for (int side = 0; side < 2; ++side) {
      Grid::Face f;
      f.axis = ax;
      f.side = side;
      const double fixed = side == 0 ? G.axes[ax].a : G.axes[ax].b;
      std::vector<Axis> faxes;
      for (int i = 0; i < G.d; ++i)
        if (i != ax) faxes.push_back(G.axes[i]);
      auto femb = [ax, fixed, d = G.d](const Vec& xf) {
        Vec x(d);
        int p = 0;
        for (int i = 0; i < d; ++i) x[i] = (i == ax) ? fixed : xf[p++];
        return x;
      };
      auto fmetric = [femb, &metric_eval, ax, d = G.d](const Vec& xf) {
        Mat ga = metric_eval(femb(xf));
        Mat gf(d - 1, d - 1);
        int p = 0;
        for (int i = 0; i < d; ++i) {
          if (i == ax) continue;
          int q = 0;
          for (int j = 0; j < d; ++j) {
            if (j == ax) continue;
            gf(p, q) = ga(i, j);
            ++q;
          }
          ++p;
        }
        return gf;
      };
      f.fgrid = std::make_unique<Grid>(build_grid(faxes, fmetric, false));
      f.node_ids.resize(f.fgrid->nodes);
      const int fixed_idx = side == 0 ? 0 : G.axes[ax].n - 1;
      for (long fq = 0; fq < f.fgrid->nodes; ++fq) {
        auto fidx = f.fgrid->node_idx(fq);
        std::vector<int> idx(G.d);
        int p = 0;
        for (int i = 0; i < G.d; ++i) idx[i] = (i == ax) ? fixed_idx : fidx[p++];
        f.node_ids[fq] = G.node_id(idx);
      }
      G.faces.push_back(std::move(f));
    }
  }
}

Grid build_grid(std::vector<Axis> axes, const std::function<Mat(const Vec&)>& metric_eval,
                bool build_faces) {
  Grid G;
  G.d = static_cast<int>(axes.size());
  G.axes = std::move(axes);
  G.strides.assign(G.d, 1);
  for (int i = G.d - 2; i >= 0; --i) G.strides[i] = G.strides[i + 1] * G.axes[i + 1].n;
  G.nodes = G.strides[0] * G.axes[0].n;

  G.mp.resize(G.nodes);
  for (long q = 0; q < G.nodes; ++q) {
    Vec x = G.coord(q);
    Mat g = metric_eval(x);
    Eigen::SelfAdjointEigenSolver<Mat> es(g);
    if (es.eigenvalues().minCoeff() <= 0.0) {
      std::ostringstream os;
      os << "metric is not positive definite at node (";
      for (int i = 0; i < G.d; ++i) os << (i ? ", " : "") << x[i];
      os << ")";
      throw std::runtime_error(os.str());
    }
    G.mp[q] = MetricAtPoint::from(g);
  }
  assemble_connection(G);
  if (build_faces) attach_faces(G, metric_eval);
  return G;
}

}  // namespace

Grid build_domain(const DomainSpec& spec) {
  if (spec.n < 8) throw std::runtime_error("resolution must be at least 8 nodes per axis");
  std::vector<Axis> axes;
  if (spec.chart == "box") {
    if (spec.d < 2 || spec.d > 3) throw std::runtime_error("box chart supports d = 2, 3");
    for (int i = 0; i < spec.d; ++i) axes.push_back(Axis{0.0, 1.0, spec.n, false});
  } else if (spec.chart == "annulus") {
    if (spec.d != 2) throw std::runtime_error("annulus chart is two-dimensional");
    axes.push_back(Axis{1.0, 2.0, spec.n, false});
    // Odd node count on the periodic axis: the central interior stencil has
    // an alternating-sign kernel mode when the circle has an even number of
    // nodes, which would inflate every kernel computed downstream.  On
    // non-periodic axes the one-sided end rows already exclude that mode.
    int ntheta = spec.n % 2 ? spec.n : spec.n + 1;
    axes.push_back(Axis{0.0, 2.0 * M_PI, ntheta, true});
  } else {
    throw std::runtime_error("unknown chart: " + spec.chart);
  }
  return build_grid(std::move(axes), spec.metric.eval, true);
}

double gauss_curvature(const Grid& g, long node) {
  if (g.d != 2) throw std::runtime_error("gauss_curvature requires d = 2");
  const Mat& riem = g.conn.riem[node];
  const Mat& met = g.mp[node].g;
  // K = <R(∂_0, ∂_1) ∂_1, ∂_0> / det g.
  double num = 0.0;
  for (int l = 0; l < 2; ++l) num += met(0, l) * riem(l * 2 + 1, 0 * 2 + 1);
  return num / met.determinant();
}

}  // namespace pcx
