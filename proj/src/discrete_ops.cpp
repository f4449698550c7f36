#include "pcx/discrete_ops.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

#include "pcx/bianchi.hpp"
#include "pcx/fiber_ops.hpp"
#include "pcx/multi_index.hpp"

namespace pcx {

int FieldDesc::fdim() const {
  if (!bd.valid()) return 0;
  const int base = bianchi ? bianchi_dim(bd) : bd.dim();
  return base * twist;
}

long field_size(const Grid& g, const FieldDesc& fd) {
  return g.nodes * static_cast<long>(fd.fdim());
}

Eigen::VectorXd mass_matrix(const Grid& g, const FieldDesc& fd) {
  const int nf = fd.fdim();
  Eigen::VectorXd w(g.nodes * static_cast<long>(nf));
  for (long q = 0; q < g.nodes; ++q) {
    const double wq = g.quad_weight(q) * g.mp[q].sqrt_det;
    for (int c = 0; c < nf; ++c) w[q * nf + c] = wq;
  }
  return w;
}

void axis_stencil(const Grid& g, long id, int ax, int boundary_order,
                  std::vector<StencilEntry>& out) {
  out.clear();
  auto idx = g.node_idx(id);
  const Axis& a = g.axes[ax];
  const double h = a.h();
  const int i = idx[ax];
  auto at = [&](int j) {
    auto jdx = idx;
    jdx[ax] = j;
    return g.node_id(jdx);
  };
  if (a.periodic) {
    const int n = a.n;
    out.push_back({at((i + 1) % n), 0.5 / h});
    out.push_back({at((i - 1 + n) % n), -0.5 / h});
    return;
  }
  if (i == 0) {
    if (boundary_order >= 2) {
      out.push_back({at(0), -1.5 / h});
      out.push_back({at(1), 2.0 / h});
      out.push_back({at(2), -0.5 / h});
    } else {
      out.push_back({at(0), -1.0 / h});
      out.push_back({at(1), 1.0 / h});
    }
    return;
  }
  if (i == a.n - 1) {
    if (boundary_order >= 2) {
      out.push_back({at(i), 1.5 / h});
      out.push_back({at(i - 1), -2.0 / h});
      out.push_back({at(i - 2), 0.5 / h});
    } else {
      out.push_back({at(i), 1.0 / h});
      out.push_back({at(i - 1), -1.0 / h});
    }
    return;
  }
  out.push_back({at(i + 1), 0.5 / h});
  out.push_back({at(i - 1), -0.5 / h});
}

namespace {

// Derivation action of an antisymmetric frame rotation on the fiber:
// coframe components obey D_i = stencil_i + omega_i, extended to both slots
// of a double form as sum_{a!=b} omega_ab (eps^a ^ i_{e_b}) per slot.
Mat conn_rep(const Bidegree& bd, const Mat& om) {
  const int n = bd.dim();
  Mat rep = Mat::Zero(n, n);
  for (int a = 0; a < bd.d; ++a)
    for (int b = 0; b < bd.d; ++b) {
      if (a == b) continue;
      const double w = om(a, b);
      if (w == 0.0) continue;
      Vec ea = Vec::Zero(bd.d), eb = Vec::Zero(bd.d);
      ea[a] = 1.0;
      eb[b] = 1.0;
      if (bd.k >= 1)
        rep += w * wedge_form(bd.shifted(-1, 0), ea) * interior_form(bd, eb);
      if (bd.m >= 1)
        rep += w * wedge_vec(bd.shifted(0, -1), ea) * interior_vec(bd, eb);
    }
  return rep;
}

void add_kron(std::vector<Eigen::Triplet<double>>& trips, long qr, long qc,
              int ft, int fs, int r, const Mat& B) {
  for (int fi = 0; fi < ft; ++fi)
    for (int fj = 0; fj < fs; ++fj) {
      const double v = B(fi, fj);
      if (v == 0.0) continue;
      for (int t = 0; t < r; ++t)
        trips.emplace_back(qr * ft * r + fi * r + t, qc * fs * r + fj * r + t,
                           v);
    }
}

// kron(W, a): fiber map times twist-bundle coefficient.
void add_twist(std::vector<Eigen::Triplet<double>>& trips, long qr, long qc,
               int ft, int fs, int r, const Mat& W, const Mat& a) {
  for (int fi = 0; fi < ft; ++fi)
    for (int fj = 0; fj < fs; ++fj) {
      const double v = W(fi, fj);
      if (v == 0.0) continue;
      for (int ti = 0; ti < r; ++ti)
        for (int tj = 0; tj < r; ++tj) {
          const double u = v * a(ti, tj);
          if (u == 0.0) continue;
          trips.emplace_back(qr * ft * r + fi * r + ti,
                             qc * fs * r + fj * r + tj, u);
        }
    }
}

enum class FO { D, DV, Delta, DeltaV };

Bidegree fo_target(const Bidegree& s, FO k) {
  switch (k) {
    case FO::D:
      return s.shifted(1, 0);
    case FO::DV:
      return s.shifted(0, 1);
    case FO::Delta:
      return s.shifted(-1, 0);
    default:
      return s.shifted(0, -1);
  }
}

Mat fo_fiber(const Bidegree& s, FO k, const Vec& xi) {
  switch (k) {
    case FO::D:
      return wedge_form(s, xi);
    case FO::DV:
      return wedge_vec(s, xi);
    case FO::Delta:
      return -interior_form(s, xi);
    default:
      return -interior_vec(s, xi);
  }
}

SpMat assemble_fo(const Grid& g, Bidegree src, FO kind, StencilOpts so,
                  const TwistedConnection* tw) {
  const int r = tw ? tw->rank : 1;
  const int fs = src.valid() ? src.dim() : 0;
  const long ncols = g.nodes * static_cast<long>(fs) * r;
  const Bidegree tgt = fo_target(src, kind);
  const int ft = tgt.valid() ? tgt.dim() : 0;
  SpMat M(g.nodes * static_cast<long>(ft) * r, ncols);
  if (fs == 0 || ft == 0) return M;

  std::vector<Eigen::Triplet<double>> trips;
  std::vector<StencilEntry> st;
  for (long q = 0; q < g.nodes; ++q) {
    for (int i = 0; i < g.d; ++i) {
      // Frame components of dx^i (equal to those of its sharp).
      const Vec xi = g.mp[q].Rinv.row(i).transpose();
      const Mat W = fo_fiber(src, kind, xi);
      axis_stencil(g, q, i, so.boundary_order, st);
      for (const auto& e : st) add_kron(trips, q, e.node, ft, fs, r, W * e.w);
      const Mat& om = g.conn.omega[q][i];
      if (om.cwiseAbs().maxCoeff() > 1e-14)
        add_kron(trips, q, q, ft, fs, r, W * conn_rep(src, om));
      if (tw) {
        const Mat& aa = tw->a[q][i];
        if (aa.cwiseAbs().maxCoeff() > 0.0)
          add_twist(trips, q, q, ft, fs, r, W, aa);
      }
    }
  }
  M.setFromTriplets(trips.begin(), trips.end());
  return M;
}

}  // namespace

SpMat assemble_d(const Grid& g, Bidegree src, StencilOpts so) {
  return assemble_fo(g, src, FO::D, so, nullptr);
}
SpMat assemble_dV(const Grid& g, Bidegree src, StencilOpts so) {
  return assemble_fo(g, src, FO::DV, so, nullptr);
}
SpMat assemble_delta(const Grid& g, Bidegree src, StencilOpts so) {
  return assemble_fo(g, src, FO::Delta, so, nullptr);
}
SpMat assemble_deltaV(const Grid& g, Bidegree src, StencilOpts so) {
  return assemble_fo(g, src, FO::DeltaV, so, nullptr);
}

SpMat assemble_H(const Grid& g, Bidegree src, StencilOpts so) {
  SpMat a = assemble_d(g, src.shifted(0, 1), so) * assemble_dV(g, src, so);
  SpMat b = assemble_dV(g, src.shifted(1, 0), so) * assemble_d(g, src, so);
  return 0.5 * (a + b);
}

SpMat assemble_Hstar(const Grid& g, Bidegree src, StencilOpts so) {
  SpMat a =
      assemble_delta(g, src.shifted(0, -1), so) * assemble_deltaV(g, src, so);
  SpMat b =
      assemble_deltaV(g, src.shifted(-1, 0), so) * assemble_delta(g, src, so);
  return 0.5 * (a + b);
}

SpMat blockdiag_fiber(const Grid& g, const Mat& F, int twist) {
  SpMat M(g.nodes * F.rows() * twist, g.nodes * F.cols() * twist);
  std::vector<Eigen::Triplet<double>> trips;
  for (long q = 0; q < g.nodes; ++q)
    add_kron(trips, q, q, static_cast<int>(F.rows()),
             static_cast<int>(F.cols()), twist, F);
  M.setFromTriplets(trips.begin(), trips.end());
  return M;
}

SpMat assemble_dG(const Grid& g, Bidegree src, StencilOpts so) {
  const Bidegree tgt = src.shifted(1, 0);
  const long nc = g.nodes * static_cast<long>(src.valid() ? bianchi_dim(src) : 0);
  if (!src.valid() || !tgt.valid()) return SpMat(0, nc);
  const Mat Qs = bianchi_onb(src);
  const Mat Qt = bianchi_onb(tgt);
  return blockdiag_fiber(g, Mat(Qt.transpose())) * assemble_d(g, src, so) *
         blockdiag_fiber(g, Qs);
}

SpMat assemble_deltaG(const Grid& g, Bidegree src, StencilOpts so) {
  const Bidegree tgt = src.shifted(-1, 0);
  const long nc = g.nodes * static_cast<long>(src.valid() ? bianchi_dim(src) : 0);
  if (!src.valid() || !tgt.valid()) return SpMat(0, nc);
  const Mat Qs = bianchi_onb(src);
  const Mat Qt = bianchi_onb(tgt);
  return blockdiag_fiber(g, Mat(Qt.transpose())) * assemble_delta(g, src, so) *
         blockdiag_fiber(g, Qs);
}

namespace {

// Separable smooth scalar: product over axes of a low-order mode, summed a
// few times with random amplitudes.  All randomness is drawn up front so the
// node loop never touches the generator.
double basis_eval(const Axis& ax, int which, double x) {
  if (ax.periodic) {
    const double u = 2.0 * M_PI * (x - ax.a) / (ax.b - ax.a);
    switch (which) {
      case 0:
        return 1.0;
      case 1:
        return std::sin(u);
      case 2:
        return std::cos(u);
      case 3:
        return std::sin(2.0 * u);
      default:
        return std::cos(2.0 * u);
    }
  }
  const double u = (x - ax.a) / (ax.b - ax.a);
  switch (which) {
    case 0:
      return 1.0;
    case 1:
      return u;
    case 2:
      return u * u;
    case 3:
      return std::sin(M_PI * u);
    default:
      return std::cos(M_PI * u);
  }
}

struct SmoothTerm {
  double amp;
  std::vector<int> which;
};

std::vector<SmoothTerm> draw_terms(std::mt19937& rng, int d, int nterms) {
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  std::uniform_int_distribution<int> P(0, 4);
  std::vector<SmoothTerm> terms(nterms);
  for (auto& t : terms) {
    t.amp = U(rng);
    t.which.resize(d);
    for (int i = 0; i < d; ++i) t.which[i] = P(rng);
  }
  return terms;
}

double eval_terms(const Grid& g, const std::vector<SmoothTerm>& terms,
                  long q) {
  const Vec x = g.coord(q);
  double v = 0.0;
  for (const auto& t : terms) {
    double p = t.amp;
    for (int i = 0; i < g.d; ++i) p *= basis_eval(g.axes[i], t.which[i], x[i]);
    v += p;
  }
  return v;
}

}  // namespace

Eigen::VectorXd random_smooth_field(const Grid& g, const FieldDesc& fd,
                                    unsigned seed) {
  std::mt19937 rng(seed);
  const int nf = fd.fdim();
  std::vector<std::vector<SmoothTerm>> terms(nf);
  for (int c = 0; c < nf; ++c) terms[c] = draw_terms(rng, g.d, 3);
  Eigen::VectorXd v(g.nodes * static_cast<long>(nf));
  for (long q = 0; q < g.nodes; ++q)
    for (int c = 0; c < nf; ++c) v[q * nf + c] = eval_terms(g, terms[c], q);
  return v;
}

TwistedConnection make_twisted_connection(const Grid& g, int rank, double amp,
                                          unsigned seed) {
  if (rank < 1) throw std::runtime_error("twisted bundle rank must be >= 1");
  TwistedConnection tc;
  tc.rank = rank;
  const int d = g.d;
  std::mt19937 rng(seed);
  std::vector<Mat> gens;
  for (int p = 0; p < rank; ++p)
    for (int q = p + 1; q < rank; ++q) {
      Mat G = Mat::Zero(rank, rank);
      G(p, q) = 1.0;
      G(q, p) = -1.0;
      gens.push_back(G);
    }
  std::vector<std::vector<std::vector<SmoothTerm>>> coef(d);
  for (int i = 0; i < d; ++i) {
    coef[i].resize(gens.size());
    for (size_t s = 0; s < gens.size(); ++s) coef[i][s] = draw_terms(rng, d, 2);
  }
  tc.a.assign(g.nodes, std::vector<Mat>(d, Mat::Zero(rank, rank)));
  for (long q = 0; q < g.nodes; ++q)
    for (int i = 0; i < d; ++i)
      for (size_t s = 0; s < gens.size(); ++s)
        tc.a[q][i] += amp * eval_terms(g, coef[i][s], q) * gens[s];

  // F_ij = d_i a_j - d_j a_i + [a_i, a_j], entrywise finite differences.
  tc.curv.assign(g.nodes, std::vector<Mat>(d * d, Mat::Zero(rank, rank)));
  for (int i = 0; i < d; ++i)
    for (int j = i + 1; j < d; ++j) {
      for (int p = 0; p < rank; ++p)
        for (int r2 = 0; r2 < rank; ++r2) {
          auto aj = [&](long n) { return tc.a[n][j](p, r2); };
          auto ai = [&](long n) { return tc.a[n][i](p, r2); };
          for (long q = 0; q < g.nodes; ++q)
            tc.curv[q][i * d + j](p, r2) =
                grid_fd(g, aj, q, i) - grid_fd(g, ai, q, j);
        }
      for (long q = 0; q < g.nodes; ++q) {
        tc.curv[q][i * d + j] +=
            tc.a[q][i] * tc.a[q][j] - tc.a[q][j] * tc.a[q][i];
        tc.curv[q][j * d + i] = -tc.curv[q][i * d + j];
      }
    }
  return tc;
}

SpMat assemble_d_twisted(const Grid& g, Bidegree src,
                         const TwistedConnection& tc, StencilOpts so) {
  return assemble_fo(g, src, FO::D, so, &tc);
}

SpMat assemble_curvature_wedge(const Grid& g, Bidegree src,
                               const TwistedConnection& tc) {
  const int r = tc.rank;
  const int fs = src.valid() ? src.dim() : 0;
  const Bidegree tgt = src.shifted(2, 0);
  const int ft = tgt.valid() ? tgt.dim() : 0;
  SpMat M(g.nodes * static_cast<long>(ft) * r,
          g.nodes * static_cast<long>(fs) * r);
  if (fs == 0 || ft == 0) return M;
  std::vector<Eigen::Triplet<double>> trips;
  for (long q = 0; q < g.nodes; ++q) {
    const Mat& Rinv = g.mp[q].Rinv;
    for (int i = 0; i < g.d; ++i)
      for (int j = i + 1; j < g.d; ++j) {
        const Vec xi = Rinv.row(i).transpose();
        const Vec xj = Rinv.row(j).transpose();
        const Mat W =
            wedge_form(src.shifted(1, 0), xi) * wedge_form(src, xj);
        add_twist(trips, q, q, ft, fs, r, W, tc.curv[q][i * g.d + j]);
      }
  }
  M.setFromTriplets(trips.begin(), trips.end());
  return M;
}

int BoundaryField::fdim() const { return (bd.valid() ? bd.dim() : 0) * twist; }

BoundaryField boundary_field(const Grid& g, Bidegree bfiber, int twist) {
  BoundaryField bf;
  bf.bd = bfiber;
  bf.twist = twist;
  const int nf = bf.fdim();
  for (const auto& f : g.faces) {
    bf.off.push_back(bf.total);
    bf.total += static_cast<long>(f.node_ids.size()) * nf;
  }
  return bf;
}

Eigen::VectorXd boundary_mass(const Grid& g, const BoundaryField& bf) {
  Eigen::VectorXd w(bf.total);
  const int nf = bf.fdim();
  for (size_t fi = 0; fi < g.faces.size(); ++fi) {
    const Grid& fg = *g.faces[fi].fgrid;
    for (long p = 0; p < fg.nodes; ++p) {
      const double wp = fg.quad_weight(p) * fg.mp[p].sqrt_det;
      for (int c = 0; c < nf; ++c) w[bf.off[fi] + p * nf + c] = wp;
    }
  }
  return w;
}

namespace {

// Component selection from an ambient fiber to the face-intrinsic fiber:
// keeps index pairs avoiding the face axis and relabels the survivors in
// order (no sign).  Valid verbatim because the diagonal metric families give
// axis-aligned frames that restrict to the face's own frame.
Mat face_selection(const Bidegree& amb, int axis) {
  const Bidegree bnd{amb.k, amb.m, amb.d - 1};
  const int rows = bnd.valid() ? bnd.dim() : 0;
  const int cols = amb.valid() ? amb.dim() : 0;
  Mat S = Mat::Zero(rows, cols);
  if (rows == 0 || cols == 0) return S;
  const auto pairs = basis_pairs(amb);
  const IndexMask low = (IndexMask(1) << axis) - 1;
  for (size_t c = 0; c < pairs.size(); ++c) {
    const IndexMask I = pairs[c].I, J = pairs[c].J;
    if ((I >> axis) & 1) continue;
    if ((J >> axis) & 1) continue;
    const IndexMask Ib = (I & low) | ((I >> 1) & ~low);
    const IndexMask Jb = (J & low) | ((J >> 1) & ~low);
    const int rr = pair_index(bnd, set_rank(bnd.d, bnd.k, Ib),
                              set_rank(bnd.d, bnd.m, Jb));
    S(rr, static_cast<int>(c)) = 1.0;
  }
  return S;
}

}  // namespace

Trace trace_slot(const Grid& g, Bidegree src, Slot s, int twist) {
  const bool cf = (s == Slot::NT || s == Slot::NN);
  const bool cv = (s == Slot::TN || s == Slot::NN);
  const Bidegree cur{src.k - (cf ? 1 : 0), src.m - (cv ? 1 : 0), src.d};
  const Bidegree bbd{cur.k, cur.m, src.d - 1};
  BoundaryField bf = boundary_field(g, bbd, twist);
  const int fs = src.valid() ? src.dim() : 0;
  SpMat T(bf.total, g.nodes * static_cast<long>(fs) * twist);
  if (bf.total == 0 || fs == 0 || !cur.valid()) return {std::move(T), bf};

  const int fb = bbd.dim();
  std::vector<Eigen::Triplet<double>> trips;
  for (size_t fi = 0; fi < g.faces.size(); ++fi) {
    const Grid::Face& F = g.faces[fi];
    Vec nu = Vec::Zero(g.d);
    nu[F.axis] = (F.side == 1) ? 1.0 : -1.0;  // outward unit normal
    Mat C = Mat::Identity(fs, fs);
    Bidegree b = src;
    if (cf) {
      C = (interior_form(b, nu) * C).eval();
      b = b.shifted(-1, 0);
    }
    if (cv) {
      C = (interior_vec(b, nu) * C).eval();
      b = b.shifted(0, -1);
    }
    const Mat S = face_selection(b, F.axis) * C;
    for (size_t p = 0; p < F.node_ids.size(); ++p) {
      const long row0 = bf.off[fi] + static_cast<long>(p) * fb * twist;
      const long col0 = F.node_ids[p] * static_cast<long>(fs) * twist;
      for (int ri = 0; ri < fb; ++ri)
        for (int cj = 0; cj < fs; ++cj) {
          if (S(ri, cj) == 0.0) continue;
          for (int t = 0; t < twist; ++t)
            trips.emplace_back(row0 + ri * twist + t, col0 + cj * twist + t,
                               S(ri, cj));
        }
    }
  }
  T.setFromTriplets(trips.begin(), trips.end());
  return {std::move(T), bf};
}

namespace {

// Block diagonal over the faces of an operator assembled on each face's own
// grid (the boundary-intrinsic differential operators).
template <class OpFn>
SpMat faces_blockdiag(const Grid& g, Bidegree bsrc, Bidegree btgt, OpFn fn) {
  BoundaryField fsrc = boundary_field(g, bsrc, 1);
  BoundaryField ftgt = boundary_field(g, btgt, 1);
  SpMat M(ftgt.total, fsrc.total);
  std::vector<Eigen::Triplet<double>> trips;
  for (size_t fi = 0; fi < g.faces.size(); ++fi) {
    const SpMat B = fn(*g.faces[fi].fgrid, bsrc);
    for (int k = 0; k < B.outerSize(); ++k)
      for (SpMat::InnerIterator it(B, k); it; ++it)
        trips.emplace_back(ftgt.off[fi] + it.row(), fsrc.off[fi] + it.col(),
                           it.value());
  }
  M.setFromTriplets(trips.begin(), trips.end());
  return M;
}

}  // namespace

Trace trace_frakT(const Grid& g, Bidegree src) {
  const int k = src.k, m = src.m, d = src.d;
  BoundaryField bf = boundary_field(g, Bidegree{k, m, d - 1}, 1);
  const StencilOpts so1{1};
  // Normal-slot commutators: ambient derivative read through the normal
  // trace minus the face-intrinsic derivative of the normal trace.
  SpMat P1 = trace_slot(g, src.shifted(1, 0), Slot::NT).T *
             assemble_d(g, src, so1);
  SpMat P2 = faces_blockdiag(
                 g, Bidegree{k - 1, m, d - 1}, Bidegree{k, m, d - 1},
                 [](const Grid& fg, Bidegree b) { return assemble_d(fg, b); }) *
             trace_slot(g, src, Slot::NT).T;
  SpMat P3 = trace_slot(g, src.shifted(0, 1), Slot::TN).T *
             assemble_dV(g, src, so1);
  SpMat P4 = faces_blockdiag(g, Bidegree{k, m - 1, d - 1},
                             Bidegree{k, m, d - 1},
                             [](const Grid& fg, Bidegree b) {
                               return assemble_dV(fg, b);
                             }) *
             trace_slot(g, src, Slot::TN).T;
  SpMat T = 0.5 * (P1 - P2) + 0.5 * (P3 - P4);
  return {std::move(T), bf};
}

Trace trace_frakTstar(const Grid& g, Bidegree src) {
  const int k = src.k, m = src.m, d = src.d;
  BoundaryField bf = boundary_field(g, Bidegree{k - 1, m - 1, d - 1}, 1);
  const StencilOpts so1{1};
  SpMat S1 = trace_slot(g, src.shifted(-1, 0), Slot::TN).T *
             assemble_delta(g, src, so1);
  SpMat S2 = faces_blockdiag(g, Bidegree{k, m - 1, d - 1},
                             Bidegree{k - 1, m - 1, d - 1},
                             [](const Grid& fg, Bidegree b) {
                               return assemble_delta(fg, b);
                             }) *
             trace_slot(g, src, Slot::TN).T;
  SpMat S3 = trace_slot(g, src.shifted(0, -1), Slot::NT).T *
             assemble_deltaV(g, src, so1);
  SpMat S4 = faces_blockdiag(g, Bidegree{k - 1, m, d - 1},
                             Bidegree{k - 1, m - 1, d - 1},
                             [](const Grid& fg, Bidegree b) {
                               return assemble_deltaV(fg, b);
                             }) *
             trace_slot(g, src, Slot::NT).T;
  SpMat T = -0.5 * (S1 + S2) - 0.5 * (S3 + S4);
  return {std::move(T), bf};
}

SpMat vstack(const SpMat& A, const SpMat& B) {
  SpMat M(A.rows() + B.rows(), A.cols());
  std::vector<Eigen::Triplet<double>> trips;
  for (int k = 0; k < A.outerSize(); ++k)
    for (SpMat::InnerIterator it(A, k); it; ++it)
      trips.emplace_back(it.row(), it.col(), it.value());
  for (int k = 0; k < B.outerSize(); ++k)
    for (SpMat::InnerIterator it(B, k); it; ++it)
      trips.emplace_back(A.rows() + it.row(), it.col(), it.value());
  M.setFromTriplets(trips.begin(), trips.end());
  return M;
}

DiscreteOperator green_pair_d(const Grid& g, Bidegree src, StencilOpts so) {
  DiscreteOperator op;
  op.kind = "d";
  op.src = {src};
  op.tgt = {src.shifted(1, 0)};
  op.order = 1;
  op.A = assemble_d(g, src, so);
  op.Astar = assemble_delta(g, op.tgt.bd, so);
  op.Msrc = mass_matrix(g, op.src);
  op.Mtgt = mass_matrix(g, op.tgt);
  // <d psi, eta> - <psi, delta eta> = <TT psi, NT eta> + <TN psi, NN eta>
  // over the boundary, outward normal.
  Trace tt = trace_slot(g, src, Slot::TT);
  Trace nt = trace_slot(g, op.tgt.bd, Slot::NT);
  op.traces.push_back({tt.T, nt.T, boundary_mass(g, tt.bf)});
  Trace tn = trace_slot(g, src, Slot::TN);
  Trace nn = trace_slot(g, op.tgt.bd, Slot::NN);
  op.traces.push_back({tn.T, nn.T, boundary_mass(g, tn.bf)});
  return op;
}

DiscreteOperator green_pair_dG(const Grid& g, Bidegree src, StencilOpts so) {
  DiscreteOperator op;
  op.kind = "dG";
  op.src = {src, 1, true};
  op.tgt = {src.shifted(1, 0), 1, true};
  op.order = 1;
  op.A = assemble_dG(g, src, so);
  op.Astar = assemble_deltaG(g, op.tgt.bd, so);
  op.Msrc = mass_matrix(g, op.src);
  op.Mtgt = mass_matrix(g, op.tgt);
  // The compressed identity pairs the ambient slot traces of the
  // decompressed fields; the projector is transparent on both sides.
  SpMat Es = blockdiag_fiber(g, bianchi_onb(src));
  SpMat Et = blockdiag_fiber(g, bianchi_onb(op.tgt.bd));
  Trace tt = trace_slot(g, src, Slot::TT);
  Trace nt = trace_slot(g, op.tgt.bd, Slot::NT);
  op.traces.push_back({tt.T * Es, nt.T * Et, boundary_mass(g, tt.bf)});
  Trace tn = trace_slot(g, src, Slot::TN);
  Trace nn = trace_slot(g, op.tgt.bd, Slot::NN);
  op.traces.push_back({tn.T * Es, nn.T * Et, boundary_mass(g, tn.bf)});
  return op;
}

DiscreteOperator green_pair_H(const Grid& g, Bidegree src, StencilOpts so) {
  DiscreteOperator op;
  op.kind = "H";
  op.src = {src};
  op.tgt = {src.shifted(1, 1)};
  op.order = 2;
  op.A = assemble_H(g, src, so);
  op.Astar = assemble_Hstar(g, op.tgt.bd, so);
  op.Msrc = mass_matrix(g, op.src);
  op.Mtgt = mass_matrix(g, op.tgt);
  // <H psi, eta> - <psi, H* eta> = <TT psi, -T* eta> + <T psi, NN eta>,
  // outward normal on both second-order traces.
  Trace tt = trace_slot(g, src, Slot::TT);
  Trace ts = trace_frakTstar(g, op.tgt.bd);
  op.traces.push_back({tt.T, SpMat(-ts.T), boundary_mass(g, tt.bf)});
  Trace tf = trace_frakT(g, src);
  Trace nn = trace_slot(g, op.tgt.bd, Slot::NN);
  op.traces.push_back({tf.T, nn.T, boundary_mass(g, tf.bf)});
  return op;
}

DiscreteOperator assemble(const Grid& g, const std::string& kind,
                          Bidegree src) {
  if (!src.valid() || src.dim() == 0)
    throw std::runtime_error("unsupported (op, bidegree) pair: " + kind +
                             " on " + src.str());
  auto plain = [&](SpMat A, Bidegree tgt, int order) {
    DiscreteOperator op;
    op.kind = kind;
    op.src = {src};
    op.tgt = {tgt};
    op.order = order;
    op.A = std::move(A);
    op.Msrc = mass_matrix(g, op.src);
    op.Mtgt = mass_matrix(g, op.tgt);
    return op;
  };
  if (kind == "d") return green_pair_d(g, src);
  if (kind == "dG") {
    if (bianchi_dim(src) == 0)
      throw std::runtime_error("unsupported (op, bidegree) pair: dG on " +
                               src.str());
    return green_pair_dG(g, src);
  }
  if (kind == "H") {
    if (!src.shifted(1, 1).valid())
      throw std::runtime_error("unsupported (op, bidegree) pair: H on " +
                               src.str());
    return green_pair_H(g, src);
  }
  if (kind == "dV") return plain(assemble_dV(g, src), src.shifted(0, 1), 1);
  if (kind == "delta")
    return plain(assemble_delta(g, src), src.shifted(-1, 0), 1);
  if (kind == "deltaV")
    return plain(assemble_deltaV(g, src), src.shifted(0, -1), 1);
  if (kind == "deltaG") {
    if (bianchi_dim(src) == 0)
      throw std::runtime_error("unsupported (op, bidegree) pair: deltaG on " +
                               src.str());
    DiscreteOperator op = plain(assemble_deltaG(g, src), src.shifted(-1, 0), 1);
    op.src.bianchi = op.tgt.bianchi = true;
    op.Msrc = mass_matrix(g, op.src);
    op.Mtgt = mass_matrix(g, op.tgt);
    return op;
  }
  if (kind == "Hstar")
    return plain(assemble_Hstar(g, src), src.shifted(-1, -1), 2);
  auto traced = [&](Trace tr, int order) {
    DiscreteOperator op;
    op.kind = kind;
    op.src = {src};
    op.tgt = {tr.bf.bd};
    op.order = order;
    op.A = std::move(tr.T);
    op.Msrc = mass_matrix(g, op.src);
    op.Mtgt = boundary_mass(g, tr.bf);
    return op;
  };
  if (kind == "TT") return traced(trace_slot(g, src, Slot::TT), 0);
  if (kind == "TN") return traced(trace_slot(g, src, Slot::TN), 0);
  if (kind == "NT") return traced(trace_slot(g, src, Slot::NT), 0);
  if (kind == "NN") return traced(trace_slot(g, src, Slot::NN), 0);
  if (kind == "frakT") return traced(trace_frakT(g, src), 1);
  if (kind == "frakTstar") return traced(trace_frakTstar(g, src), 1);
  if (kind == "BG") {
    Trace tt = trace_slot(g, src, Slot::TT);
    Trace tn = trace_slot(g, src, Slot::TN);
    DiscreteOperator op = traced(std::move(tt), 0);
    op.A = vstack(op.A, tn.T);
    Eigen::VectorXd m2 = boundary_mass(g, tn.bf);
    Eigen::VectorXd m(op.Mtgt.size() + m2.size());
    m << op.Mtgt, m2;
    op.Mtgt = std::move(m);
    return op;
  }
  if (kind == "BGstar") {
    Trace nt = trace_slot(g, src, Slot::NT);
    Trace nn = trace_slot(g, src, Slot::NN);
    DiscreteOperator op = traced(std::move(nt), 0);
    op.A = vstack(op.A, nn.T);
    Eigen::VectorXd m2 = boundary_mass(g, nn.bf);
    Eigen::VectorXd m(op.Mtgt.size() + m2.size());
    m << op.Mtgt, m2;
    op.Mtgt = std::move(m);
    return op;
  }
  if (kind == "BH") {
    Trace tt = trace_slot(g, src, Slot::TT);
    Trace tf = trace_frakT(g, src);
    DiscreteOperator op = traced(std::move(tt), 1);
    op.A = vstack(op.A, tf.T);
    Eigen::VectorXd m2 = boundary_mass(g, tf.bf);
    Eigen::VectorXd m(op.Mtgt.size() + m2.size());
    m << op.Mtgt, m2;
    op.Mtgt = std::move(m);
    return op;
  }
  if (kind == "BHstar") {
    Trace ts = trace_frakTstar(g, src);
    Trace nn = trace_slot(g, src, Slot::NN);
    DiscreteOperator op = traced(std::move(ts), 1);
    op.A = -op.A;
    op.A = vstack(op.A, nn.T);
    Eigen::VectorXd m2 = boundary_mass(g, nn.bf);
    Eigen::VectorXd m(op.Mtgt.size() + m2.size());
    m << op.Mtgt, m2;
    op.Mtgt = std::move(m);
    return op;
  }
  throw std::runtime_error("unknown operator kind: " + kind);
}

GreenStats greens_residual(const Grid& g, const DiscreteOperator& op,
                           int trials, unsigned seed) {
  GreenStats st;
  st.trials = trials;
  for (int t = 0; t < trials; ++t) {
    Eigen::VectorXd psi = random_smooth_field(g, op.src, seed + 2 * t);
    Eigen::VectorXd eta = random_smooth_field(g, op.tgt, seed + 2 * t + 1);
    const double np = std::sqrt(psi.dot(op.Msrc.cwiseProduct(psi)));
    const double ne = std::sqrt(eta.dot(op.Mtgt.cwiseProduct(eta)));
    if (np > 0) psi /= np;
    if (ne > 0) eta /= ne;
    double r = (op.A * psi).dot(op.Mtgt.cwiseProduct(eta)) -
               psi.dot(op.Msrc.cwiseProduct(op.Astar * eta));
    for (const auto& term : op.traces)
      r -= (term.Bsrc * psi).dot(term.wb.cwiseProduct(term.Btgt * eta));
    const double ar = std::abs(r);
    st.max_res = std::max(st.max_res, ar);
    st.mean_res += ar / trials;
  }
  return st;
}

}  // namespace pcx
