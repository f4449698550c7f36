#include <pcx/precomplex.hpp>

#include <pcx/bianchi.hpp>

#include <Eigen/Dense>
#include <Eigen/QR>
#include <Eigen/SVD>

#include <json.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>

namespace pcx {

namespace {

using Vec = Eigen::VectorXd;
using json = nlohmann::ordered_json;

constexpr double kEps = 1e-300;

Vec dsqrt(const Vec& m) { return m.cwiseSqrt(); }

// Mass-weighted dense form D_tgt A D_src^{-1}: in these coordinates the
// M-adjoint is the plain transpose and Euclidean norms are M-norms.
Mat wdense(const Mat& A, const Vec& Msrc, const Vec& Mtgt) {
  if (A.size() == 0) return A;
  return dsqrt(Mtgt).asDiagonal() * A *
         dsqrt(Msrc).cwiseInverse().asDiagonal();
}
Mat wdense(const SpMat& A, const Vec& Msrc, const Vec& Mtgt) {
  return wdense(Mat(A), Msrc, Mtgt);
}

double opnorm(const Mat& A) {
  if (A.rows() == 0 || A.cols() == 0) return 0.0;
  Eigen::BDCSVD<Mat> svd(A);
  return svd.singularValues()(0);
}

double wnorm(const Mat& A, const Vec& Msrc, const Vec& Mtgt) {
  return opnorm(wdense(A, Msrc, Mtgt));
}

// Stacked boundary system of the up operator at level j.  Bsrc rows act on
// level j, Btgt rows on level j+1, wb is the concatenated boundary mass.
SpMat stacked_bsrc(const DChainLevel& lv) {
  SpMat S;
  for (const auto& t : lv.traces) S = S.size() ? vstack(S, t.Bsrc) : t.Bsrc;
  return S;
}
SpMat stacked_btgt(const DChainLevel& lv) {
  SpMat S;
  for (const auto& t : lv.traces) S = S.size() ? vstack(S, t.Btgt) : t.Btgt;
  return S;
}
Vec stacked_wb(const DChainLevel& lv) {
  long n = 0;
  for (const auto& t : lv.traces) n += t.wb.size();
  Vec w(n);
  long at = 0;
  for (const auto& t : lv.traces) {
    w.segment(at, t.wb.size()) = t.wb;
    at += t.wb.size();
  }
  return w;
}

// Weighted boundary rows sqrt(wb) Btgt D_{j+1}^{-1} (and the Bsrc analog).
Mat wbtgt(const DChainLevel& lv, const Vec& Mtgt) {
  SpMat B = stacked_btgt(lv);
  if (!B.rows()) return Mat(0, Mtgt.size());
  Vec wb = stacked_wb(lv);
  return dsqrt(wb).asDiagonal() * Mat(B) *
         dsqrt(Mtgt).cwiseInverse().asDiagonal();
}
Mat wbsrc(const DChainLevel& lv, const Vec& Msrc) {
  SpMat B = stacked_bsrc(lv);
  if (!B.rows()) return Mat(0, Msrc.size());
  Vec wb = stacked_wb(lv);
  return dsqrt(wb).asDiagonal() * Mat(B) *
         dsqrt(Msrc).cwiseInverse().asDiagonal();
}

// Orthonormal basis of the numerical kernel (relative cut tau against the
// largest singular value).  Works for wide matrices, hence full V.
Mat kernel_onb(const Mat& A, double tau) {
  const long n = A.cols();
  if (A.rows() == 0 || n == 0) return Mat::Identity(n, n);
  Eigen::BDCSVD<Mat> svd(A, Eigen::ComputeFullV);
  const Vec& sv = svd.singularValues();
  double smax = sv.size() ? sv(0) : 0.0;
  if (smax <= 0.0) return Mat::Identity(n, n);
  long r = 0;
  while (r < sv.size() && sv(r) >= tau * smax) ++r;
  return svd.matrixV().rightCols(n - r);
}

GapCertificate zero_cluster(const std::vector<double>&, double, double);
std::vector<double> ascending_sigmas(const Vec& sv);

// Kernel basis with the cut placed by cluster detection instead of a hard
// tolerance: kernel modes of a discretized operator sit at truncation-error
// scale, well above tau, and the spectral jump marks where they end.
Mat kernel_onb_clustered(const Mat& A, double tau) {
  const long n = A.cols();
  if (A.rows() == 0 || n == 0) return Mat::Identity(n, n);
  Eigen::BDCSVD<Mat> svd(A, Eigen::ComputeFullV);
  GapCertificate gc =
      zero_cluster(ascending_sigmas(svd.singularValues()), tau, -1.0);
  long dim = (n - svd.singularValues().size()) + gc.dim;
  return svd.matrixV().rightCols(dim);
}

// Cluster detection on ascending singular values.  The zero cluster ends at
// the largest relative jump; `scale` is the operator scale the values are
// judged against (defaults to the largest value present — pass it explicitly
// when the matrix is a restriction of a larger system).
//
// Two guards keep the verdict honest.  The floor tau * scale stops sub-noise
// ratios from creating splits.  The plausibility threshold (two orders below
// the operator scale) vetoes certification of any split whose story doesn't
// hold: declaring "nothing is zero" needs the smallest value at operator
// scale, and declaring "these are zeros" needs the dropped values well below
// it.  Kernel modes of a discretized system sit at truncation-error scale
// rather than at the floor, so without the veto the floor ratio could
// out-shout a genuine kernel cluster and certify the wrong dimension.
GapCertificate zero_cluster(const std::vector<double>& s_asc, double tau,
                            double scale) {
  constexpr double kPlausiblyZero = 1e-2;
  GapCertificate gc;
  const int n = static_cast<int>(s_asc.size());
  if (n == 0) {
    gc.certified = true;
    return gc;
  }
  if (scale <= 0.0) scale = s_asc[n - 1];
  if (scale <= 0.0) {  // identically zero system: everything is kernel
    gc.dim = gc.dim_lo = gc.dim_hi = n;
    gc.certified = true;
    gc.sigmas.assign(s_asc.begin(), s_asc.begin() + std::min(n, 8));
    return gc;
  }
  double fl = std::max(tau * scale, kEps);
  double zs = kPlausiblyZero * scale;
  double best = -1.0, best_all = -1.0;
  int dim_all = 0;
  std::vector<int> cand;  // plausible splits with a qualifying jump
  for (int i = 0; i <= n; ++i) {
    double above = i < n ? s_asc[i] : scale;
    double below = i == 0 ? fl : std::max(s_asc[i - 1], fl);
    double r = above > below ? above / below : 1.0;
    bool plausible = i == 0 ? s_asc[0] >= zs : s_asc[i - 1] <= zs;
    if (plausible && r >= 10.0) cand.push_back(i);
    if (plausible && r > best) {
      best = r;
      gc.dim = i;
    }
    if (r > best_all) {
      best_all = r;
      dim_all = i;
    }
  }
  if (best < 0.0) {  // no plausible split at all: report the bare argmax
    gc.dim = dim_all;
    gc.gap = best_all;
    gc.dim_lo = gc.dim_hi = gc.dim;
    for (int i = 0; i < std::min(n, 8); ++i) gc.sigmas.push_back(s_asc[i]);
    return gc;
  }
  gc.gap = best;
  gc.dim_lo = gc.dim_hi = gc.dim;
  for (int i : cand) {
    gc.dim_lo = std::min(gc.dim_lo, i);
    gc.dim_hi = std::max(gc.dim_hi, i);
  }
  if (cand.empty()) {
    // No plausible split has even a 10x jump: unresolved.  Anything below
    // the plausibility scale could still be kernel.
    gc.dim_lo = 0;
    gc.dim_hi = 0;
    for (int i = 0; i < n; ++i) gc.dim_hi += s_asc[i] <= zs ? 1 : 0;
  }
  gc.certified = best >= 1e3 && gc.dim_lo == gc.dim_hi;
  for (int i = 0; i < std::min(n, 8); ++i) gc.sigmas.push_back(s_asc[i]);
  return gc;
}

std::vector<double> ascending_sigmas(const Vec& sv) {
  std::vector<double> s(sv.data(), sv.data() + sv.size());
  std::sort(s.begin(), s.end());
  return s;
}

}  // namespace

// ---------------------------------------------------------------------------

DiscreteChain build_chain(const Grid& g, const std::string& kind,
                          ChainBuildOptions opts) {
  ChainSpec cs;
  int twist = 1;
  if (kind == "de-rham") {
    cs = de_rham_chain(g.d);
  } else if (kind == "de-rham-twisted") {
    cs = twisted_chain(g.d, opts.twist_rank);
    twist = opts.twist_rank;
  } else if (kind == "hessian") {
    cs = bianchi_chain(0, g.d);
  } else if (kind == "calabi") {
    cs = bianchi_chain(1, g.d);
  } else if (kind == "bianchi") {
    cs = bianchi_chain(opts.bianchi_m, g.d);
  } else {
    throw std::runtime_error("unknown chain kind: " + kind);
  }
  const bool bianchi = kind != "de-rham" && kind != "de-rham-twisted";

  TwistedConnection tc;
  if (twist > 1)
    tc = make_twisted_connection(g, twist, opts.twist_amp, opts.twist_seed);

  DiscreteChain dc;
  dc.kind = kind;
  dc.d = g.d;
  dc.twist = twist;
  dc.nodes = g.nodes;
  for (size_t k = 0; k < cs.levels.size(); ++k) {
    const ChainLevel& sl = cs.levels[k];
    DChainLevel lv;
    lv.name = sl.space_name;
    lv.field = FieldDesc{sl.bd, twist, bianchi};
    lv.M = mass_matrix(g, lv.field);
    if (sl.has_up) {
      lv.has_up = true;
      switch (sl.up_kind) {
        case OpKind::ExtD: {
          if (twist == 1) {
            DiscreteOperator op = green_pair_d(g, sl.bd);
            lv.A = op.A;
            lv.traces = op.traces;
          } else {
            lv.A = assemble_d_twisted(g, sl.bd, tc);
            Trace tt = trace_slot(g, sl.bd, Slot::TT, twist);
            Trace nt = trace_slot(g, sl.bd.shifted(1, 0), Slot::NT, twist);
            lv.traces.push_back({tt.T, nt.T, boundary_mass(g, tt.bf)});
          }
          lv.up_order = 1;
          break;
        }
        case OpKind::DG: {
          DiscreteOperator op = green_pair_dG(g, sl.bd);
          lv.A = op.A;
          lv.traces = op.traces;
          lv.up_order = 1;
          break;
        }
        case OpKind::Hess: {
          DiscreteOperator op = green_pair_H(g, sl.bd);
          // The junction operator acts between projected fibers; conjugate
          // the ambient assembly and its traces with the constant
          // orthonormal fiber bases.
          SpMat Es = blockdiag_fiber(g, bianchi_onb(sl.bd));
          SpMat Et = blockdiag_fiber(g, bianchi_onb(op.tgt.bd));
          lv.A = SpMat(Et.transpose()) * op.A * Es;
          for (const auto& t : op.traces)
            lv.traces.push_back({t.Bsrc * Es, t.Btgt * Et, t.wb});
          lv.up_order = 2;
          break;
        }
        default:
          throw std::runtime_error("unsupported up operator in chain " + kind);
      }
    }
    dc.levels.push_back(std::move(lv));
  }
  return dc;
}

// ---------------------------------------------------------------------------

RangeProjector range_projector(const Mat& A, const Vec& Msrc, const Vec& Mtgt,
                               double tau) {
  RangeProjector rp;
  rp.tau = tau;
  const long rows = A.rows(), cols = A.cols();
  rp.P = Mat::Zero(cols, rows);
  rp.Pi = Mat::Zero(rows, rows);
  if (rows == 0 || cols == 0) return rp;

  Vec ds = dsqrt(Msrc), dt = dsqrt(Mtgt);
  Mat W = dt.asDiagonal() * A * ds.cwiseInverse().asDiagonal();
  Eigen::BDCSVD<Mat> svd(W, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vec& sv = svd.singularValues();
  double smax = sv.size() ? sv(0) : 0.0;
  rp.norm = smax;
  if (smax <= 0.0) return rp;  // zero operator: P = 0 by convention

  double cut = tau * smax;
  long r = 0;
  while (r < sv.size() && sv(r) >= cut) ++r;
  rp.rank = static_cast<int>(r);
  if (r < sv.size())
    rp.gap = sv(r) > 0.0 ? sv(r - 1) / sv(r)
                         : std::numeric_limits<double>::infinity();
  else
    rp.gap = sv(r - 1) / cut;
  rp.rank_ambiguous = rp.gap < 10.0;

  Mat Ur = svd.matrixU().leftCols(r);
  Mat Pw = svd.matrixV().leftCols(r) *
           sv.head(r).cwiseInverse().asDiagonal() * Ur.transpose();
  rp.P = ds.cwiseInverse().asDiagonal() * Pw * dt.asDiagonal();
  // A P in exact arithmetic; the Gram form keeps it an exact projector.
  rp.Pi = dt.cwiseInverse().asDiagonal() * (Ur * Ur.transpose()) *
          dt.asDiagonal();
  return rp;
}

bool CorrectedChain::rank_ambiguous() const {
  for (const auto& lv : levels)
    if (lv.proj.rank_ambiguous && lv.proj.norm > 0.0) return true;
  return false;
}

CorrectedChain correct_chain(const DiscreteChain& c, double tau) {
  long cap = c.d == 2 ? 640 : 1000;
  if (c.nodes > cap)
    throw std::runtime_error(
        "resolution exceeds the dense-factorization budget for d = " +
        std::to_string(c.d));

  CorrectedChain cc;
  cc.tau = tau;
  const int L = static_cast<int>(c.levels.size());
  cc.levels.resize(L);
  for (int k = 0; k + 1 < L; ++k) {
    const DChainLevel& lv = c.levels[k];
    if (!lv.has_up) continue;
    CorrectedLevel& out = cc.levels[k];
    Mat Araw(lv.A);
    double anraw = wnorm(Araw, lv.M, c.levels[k + 1].M);
    if (k == 0 || cc.levels[k - 1].proj.norm == 0.0) {
      out.A = Araw;
      out.G = Mat::Zero(Araw.rows(), Araw.cols());
    } else {
      const CorrectedLevel& below = cc.levels[k - 1];
      out.A = Araw - Araw * below.proj.Pi;
      out.G = out.A - Araw;
      Mat Araw_below(c.levels[k - 1].A);
      Mat G2 = -(Araw * (Araw_below * below.proj.P)) -
               (Araw * (below.G * below.proj.P));
      out.recursion_defect =
          wnorm(out.G - G2, lv.M, c.levels[k + 1].M) / (anraw + kEps);
    }
    out.proj = range_projector(out.A, lv.M, c.levels[k + 1].M, tau);
    out.Anorm = out.proj.norm;
    out.Gnorm = wnorm(out.G, lv.M, c.levels[k + 1].M);
    out.Gnorm_rel = out.Gnorm / (anraw + kEps);
  }
  for (int k = 0; k + 2 < L; ++k) {
    if (!c.levels[k].has_up || !c.levels[k + 1].has_up) continue;
    Mat prod = cc.levels[k + 1].A * cc.levels[k].A;
    double rel = wnorm(prod, c.levels[k].M, c.levels[k + 2].M) /
                 (cc.levels[k + 1].Anorm * cc.levels[k].Anorm + kEps);
    cc.nilpotency.push_back(rel);
  }
  return cc;
}

// ---------------------------------------------------------------------------

HarmonicSpace harmonic_space(const DiscreteChain& c, const CorrectedChain& cc,
                             int k) {
  HarmonicSpace hs;
  hs.level = k;
  const DChainLevel& lv = c.levels[k];
  const long nk = lv.size();
  Vec dk = dsqrt(lv.M);

  // Stacked system [𝒜_k; 𝒜*_{k−1}; B*_{k−1}] in weighted coordinates, each
  // block scaled to unit norm so the cluster structure is comparable.
  std::vector<Mat> blocks;
  Mat Bw;  // keep the boundary block for the residual report
  if (lv.has_up)
    blocks.push_back(wdense(cc.levels[k].A, lv.M, c.levels[k + 1].M));
  if (k > 0) {
    blocks.push_back(
        wdense(cc.levels[k - 1].A, c.levels[k - 1].M, lv.M).transpose());
    Bw = wbtgt(c.levels[k - 1], lv.M);
    if (Bw.rows()) blocks.push_back(Bw);
  }
  long rows = 0;
  for (const auto& b : blocks) rows += b.rows();
  Mat S(std::max(rows, nk), nk);
  S.setZero();
  long at = 0;
  for (const auto& b : blocks) {
    double nb = opnorm(b);
    S.middleRows(at, b.rows()) = nb > 0 ? Mat(b / nb) : b;
    at += b.rows();
  }

  Eigen::BDCSVD<Mat> svd(S, Eigen::ComputeThinV);
  hs.cert = zero_cluster(ascending_sigmas(svd.singularValues()), cc.tau, -1.0);
  const int dim = hs.cert.dim;
  Mat Vw = svd.matrixV().rightCols(dim);  // smallest singular directions
  hs.basis = dk.cwiseInverse().asDiagonal() * Vw;
  if (Bw.rows() && dim > 0) {
    double nb = opnorm(Bw);
    hs.bstar_residual = nb > 0 ? opnorm(Mat(Bw * Vw)) / nb : 0.0;
  }

  // Second route, sequentially: ker 𝒜_k, intersected with (range 𝒜_{k−1})^⊥_M,
  // then with the boundary kernel.  The restrictions in the later stages are
  // structurally two-valued — a projector restricted to a subspace, boundary
  // rows on kernel modes — with genuinely harmonic directions pushed off
  // zero only by discretization error, so a threshold two orders below the
  // stage's operator scale separates them (a jump detector would let the
  // tolerance floor outvote an h²-polluted harmonic mode here).
  constexpr double kStageCut = 1e-2;
  Mat K = lv.has_up ? kernel_onb_clustered(
                          wdense(cc.levels[k].A, lv.M, c.levels[k + 1].M),
                          cc.tau)
                    : Mat(Mat::Identity(nk, nk));
  if (k > 0 && K.cols() > 0) {
    Mat Piw = dk.asDiagonal() * cc.levels[k - 1].proj.Pi *
              dk.cwiseInverse().asDiagonal();
    Eigen::BDCSVD<Mat> psvd(Mat(Piw * K), Eigen::ComputeThinV);
    const Vec& ps = psvd.singularValues();  // scale of a projector is 1
    long nc = 0;
    while (nc < ps.size() && ps(ps.size() - 1 - nc) <= kStageCut) ++nc;
    nc += K.cols() - ps.size();  // rank-deficient restriction: exact zeros
    K = K * psvd.matrixV().rightCols(nc);
  }
  if (!Bw.rows() || K.cols() == 0) {
    hs.dim_route2 = static_cast<int>(K.cols());
  } else {
    Eigen::BDCSVD<Mat> bsvd(Mat(Bw * K));
    const Vec& bs = bsvd.singularValues();
    double bscale = opnorm(Bw);
    int nb = static_cast<int>(K.cols() - bs.size());
    for (long i = 0; i < bs.size(); ++i)
      if (bs(i) <= kStageCut * bscale) ++nb;
    hs.dim_route2 = nb;
  }
  hs.routes_agree = hs.dim_route2 == dim;
  return hs;
}

CohomologyReport cohomology_dims(const DiscreteChain& c,
                                 const CorrectedChain& cc) {
  CohomologyReport rep;
  rep.all_certified = true;
  for (int k = 0; k < static_cast<int>(c.levels.size()); ++k) {
    rep.spaces.push_back(harmonic_space(c, cc, k));
    const HarmonicSpace& hs = rep.spaces.back();
    rep.all_certified =
        rep.all_certified && hs.cert.certified && hs.routes_agree;
  }
  return rep;
}

// ---------------------------------------------------------------------------

HodgeParts hodge_decompose(const DiscreteChain& c, const CorrectedChain& cc,
                           int k, const Vec& psi, double preimage_tol) {
  const DChainLevel& lv = c.levels[k];
  const long nk = lv.size();
  Vec dk = dsqrt(lv.M);
  HodgeParts hp;
  hp.exact = Vec::Zero(nk);
  if (k > 0) hp.exact = cc.levels[k - 1].proj.Pi * psi;

  HarmonicSpace hs = harmonic_space(c, cc, k);
  Mat Vw = dk.asDiagonal() * hs.basis;
  if (k > 0 && Vw.cols() > 0) {
    // Push the harmonic basis into the exact M-complement of range 𝒜_{k−1},
    // so the three parts are orthogonal by projector algebra rather than
    // only to the cluster tolerance.
    Mat Piw = dk.asDiagonal() * cc.levels[k - 1].proj.Pi *
              dk.cwiseInverse().asDiagonal();
    Vw -= Piw * Vw;
    Eigen::HouseholderQR<Mat> qr(Vw);
    Vw = qr.householderQ() * Mat::Identity(nk, Vw.cols());
  }
  Vec pw = dk.asDiagonal() * psi;
  Vec ew = dk.asDiagonal() * hp.exact;
  Vec hw = Vw.cols() ? Vec(Vw * (Vw.transpose() * (pw - ew)))
                     : Vec(Vec::Zero(nk));
  hp.harmonic = dk.cwiseInverse().asDiagonal() * hw;
  hp.coexact = psi - hp.exact - hp.harmonic;

  Vec cw = pw - ew - hw;
  auto pair_rel = [&](const Vec& a, const Vec& b) {
    double na = a.norm(), nb = b.norm();
    return std::abs(a.dot(b)) / (na * nb + kEps);
  };
  hp.ortho_defect = std::max({pair_rel(ew, hw), pair_rel(ew, cw),
                              pair_rel(hw, cw)});
  hp.recon_rel = 0.0;  // the remainder part closes the sum identically

  // Preimage check: coexact ∈ 𝒜_k^* (ker B_k^*).
  if (!lv.has_up) {
    hp.preimage_residual = cw.norm() / (pw.norm() + kEps);
    hp.preimage_ok = hp.preimage_residual <= preimage_tol;
    return hp;
  }
  Mat Aw = wdense(cc.levels[k].A, lv.M, c.levels[k + 1].M);
  Mat Bw = wbtgt(lv, c.levels[k + 1].M);
  Mat K = Bw.rows() ? kernel_onb(Bw, cc.tau)
                    : Mat(Mat::Identity(Aw.rows(), Aw.rows()));
  Mat R = Aw.transpose() * K;  // maps ker B* into level k
  Eigen::BDCSVD<Mat> svd(R, Eigen::ComputeThinU | Eigen::ComputeThinV);
  Vec sol = svd.solve(cw);
  hp.preimage_residual = (R * sol - cw).norm() / (cw.norm() + kEps);
  hp.preimage_ok = hp.preimage_residual <= preimage_tol;
  return hp;
}

// ---------------------------------------------------------------------------

BvpSolution solve_bvp(const DiscreteChain& c, const CorrectedChain& cc, int k,
                      const BvpData& data, double tol, unsigned seed) {
  const int L = static_cast<int>(c.levels.size());
  const DChainLevel& lv = c.levels[k];
  const long nk = lv.size();
  Vec dk = dsqrt(lv.M);
  BvpSolution out;

  Vec chiw, xiw, phiw;
  if (lv.has_up) {
    if (data.chi.size() != c.size(k + 1))
      throw std::runtime_error("bvp: chi has the wrong size");
    chiw = dsqrt(c.levels[k + 1].M).asDiagonal() * data.chi;
  }
  if (k > 0) {
    if (data.xi.size() != c.size(k - 1))
      throw std::runtime_error("bvp: xi has the wrong size");
    if (data.phi.size() != nk)
      throw std::runtime_error("bvp: phi has the wrong size");
    xiw = dsqrt(c.levels[k - 1].M).asDiagonal() * data.xi;
    phiw = dk.asDiagonal() * data.phi;
  }

  // (1) χ is closed under 𝒜_{k+1} and orthogonal to ℋ^{k+1}.
  if (lv.has_up && chiw.size()) {
    double nchi = chiw.norm();
    if (k + 1 < L && c.levels[k + 1].has_up) {
      Mat Aup = wdense(cc.levels[k + 1].A, c.levels[k + 1].M,
                       c.levels[k + 2].M);
      out.res1_closure =
          (Aup * chiw).norm() / (opnorm(Aup) * nchi + kEps);
    }
    HarmonicSpace hup = harmonic_space(c, cc, k + 1);
    if (hup.cert.dim > 0) {
      Mat Zw = dsqrt(c.levels[k + 1].M).asDiagonal() * hup.basis;
      out.res1_harmonic = (Zw.transpose() * chiw).cwiseAbs().maxCoeff() /
                          (nchi + kEps);
    }
  }

  // (2) ξ − 𝒜*_{k−1}φ lies in the normal kernel one junction down.
  if (k > 0) {
    Mat Adn = wdense(cc.levels[k - 1].A, c.levels[k - 1].M, lv.M);
    Vec rho = xiw - Adn.transpose() * phiw;
    double nrho = rho.norm();
    double r2 = 0.0;
    if (k > 1) {
      Mat A2 = wdense(cc.levels[k - 2].A, c.levels[k - 2].M,
                      c.levels[k - 1].M);
      r2 = (A2.transpose() * rho).norm() / (opnorm(A2) * nrho + kEps);
      Mat B2 = wbtgt(c.levels[k - 2], c.levels[k - 1].M);
      if (B2.rows())
        r2 = std::max(r2, (B2 * rho).norm() / (opnorm(B2) * nrho + kEps));
    }
    out.res2 = nrho > 0 ? r2 : 0.0;

    // (3) harmonic pairing ⟨ξ,ν⟩ + ⟨B*_{k−1}φ, B_{k−1}ν⟩ over ℋ^{k−1}.
    HarmonicSpace hdn = harmonic_space(c, cc, k - 1);
    if (hdn.cert.dim > 0) {
      Mat Nw = dsqrt(c.levels[k - 1].M).asDiagonal() * hdn.basis;
      Mat Bt = wbtgt(c.levels[k - 1], lv.M);
      Mat Bs = wbsrc(c.levels[k - 1], c.levels[k - 1].M);
      Vec btphi = Bt.rows() ? Vec(Bt * phiw) : Vec();
      double scale = xiw.norm() + opnorm(Bt) * phiw.norm() + kEps;
      for (long j = 0; j < Nw.cols(); ++j) {
        double v = xiw.dot(Nw.col(j));
        if (Bt.rows()) v += btphi.dot(Vec(Bs * Nw.col(j)));
        out.res3 = std::max(out.res3, std::abs(v) / scale);
      }
    }
  }

  auto refuse = [&](const std::string& which) {
    out.refused = true;
    out.refused_condition = which;
  };
  if (out.res1_closure > tol || out.res1_harmonic > tol)
    refuse(
        "integrability (1): chi must be closed and orthogonal to the "
        "harmonic space above");
  else if (out.res2 > tol)
    refuse(
        "integrability (2): xi - A*phi must satisfy the normal system one "
        "junction down");
  else if (out.res3 > tol)
    refuse(
        "integrability (3): the harmonic pairing of (xi, phi) must vanish");
  if (out.refused) return out;

  // Stacked least squares in weighted coordinates.
  std::vector<Mat> rows;
  std::vector<Vec> rhs;
  if (lv.has_up) {
    rows.push_back(wdense(cc.levels[k].A, lv.M, c.levels[k + 1].M));
    rhs.push_back(chiw);
  }
  if (k > 0) {
    rows.push_back(
        wdense(cc.levels[k - 1].A, c.levels[k - 1].M, lv.M).transpose());
    rhs.push_back(xiw);
    Mat Bt = wbtgt(c.levels[k - 1], lv.M);
    if (Bt.rows()) {
      rows.push_back(Bt);
      rhs.push_back(Vec(Bt * phiw));
    }
  }
  long mrows = 0;
  for (const auto& b : rows) mrows += b.rows();
  Mat S(mrows, nk);
  Vec b(mrows);
  long at = 0;
  for (size_t i = 0; i < rows.size(); ++i) {
    S.middleRows(at, rows[i].rows()) = rows[i];
    b.segment(at, rhs[i].size()) = rhs[i];
    at += rows[i].rows();
  }
  Eigen::BDCSVD<Mat> svd(S, Eigen::ComputeThinU | Eigen::ComputeThinV);
  svd.setThreshold(cc.tau);
  Vec xw = svd.solve(b);

  HarmonicSpace hk = harmonic_space(c, cc, k);
  Mat Vw = dk.asDiagonal() * hk.basis;
  if (seed != 0 && Vw.cols() > 0) {
    std::mt19937 gen(seed);
    std::normal_distribution<double> dist;
    Vec r(Vw.cols());
    for (long i = 0; i < r.size(); ++i) r(i) = dist(gen);
    xw += Vw * r;
    out.harmonic_norm = (Vw.transpose() * xw).norm();
  } else if (Vw.cols() > 0) {
    xw -= Vw * (Vw.transpose() * xw);
    out.harmonic_norm = (Vw.transpose() * xw).norm();
  }

  at = 0;
  std::vector<double> eq(rows.size(), 0.0);
  for (size_t i = 0; i < rows.size(); ++i) {
    eq[i] = (rows[i] * xw - rhs[i]).norm() / (rhs[i].norm() + kEps);
    at += rows[i].rows();
  }
  size_t ei = 0;
  if (lv.has_up) out.eq_res_A = eq[ei++];
  if (k > 0) {
    out.eq_res_Astar = eq[ei++];
    if (ei < eq.size()) out.eq_res_B = eq[ei];
  }
  out.psi = dk.cwiseInverse().asDiagonal() * xw;
  return out;
}

// ---------------------------------------------------------------------------

void save_market(const std::string& path, const Mat& A) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write " + path);
  f << "%%MatrixMarket matrix array real general\n";
  f << A.rows() << " " << A.cols() << "\n";
  f.precision(17);
  for (long j = 0; j < A.cols(); ++j)
    for (long i = 0; i < A.rows(); ++i) f << A(i, j) << "\n";
}

void save_market(const std::string& path, const SpMat& A) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write " + path);
  f << "%%MatrixMarket matrix coordinate real general\n";
  f << A.rows() << " " << A.cols() << " " << A.nonZeros() << "\n";
  f.precision(17);
  for (int o = 0; o < A.outerSize(); ++o)
    for (SpMat::InnerIterator it(A, o); it; ++it)
      f << it.row() + 1 << " " << it.col() + 1 << " " << it.value() << "\n";
}

namespace {
std::ifstream open_market(const std::string& path, std::string& format,
                          long& rows, long& cols, long& nnz) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot read " + path);
  std::string header;
  std::getline(f, header);
  if (header.find("%%MatrixMarket") != 0)
    throw std::runtime_error("not a Matrix Market file: " + path);
  format = header.find("coordinate") != std::string::npos ? "coordinate"
                                                          : "array";
  std::string line;
  while (std::getline(f, line))
    if (!line.empty() && line[0] != '%') break;
  std::istringstream ss(line);
  nnz = 0;
  ss >> rows >> cols;
  if (format == "coordinate") ss >> nnz;
  return f;
}
}  // namespace

Mat load_dense_market(const std::string& path) {
  std::string format;
  long rows, cols, nnz;
  std::ifstream f = open_market(path, format, rows, cols, nnz);
  if (format != "array")
    throw std::runtime_error("expected dense array format: " + path);
  Mat A(rows, cols);
  for (long j = 0; j < cols; ++j)
    for (long i = 0; i < rows; ++i) f >> A(i, j);
  if (!f) throw std::runtime_error("truncated Matrix Market file: " + path);
  return A;
}

SpMat load_sparse_market(const std::string& path) {
  std::string format;
  long rows, cols, nnz;
  std::ifstream f = open_market(path, format, rows, cols, nnz);
  if (format != "coordinate")
    throw std::runtime_error("expected coordinate format: " + path);
  std::vector<Eigen::Triplet<double>> ts;
  ts.reserve(nnz);
  for (long e = 0; e < nnz; ++e) {
    long i, j;
    double v;
    f >> i >> j >> v;
    ts.push_back({static_cast<int>(i - 1), static_cast<int>(j - 1), v});
  }
  if (!f) throw std::runtime_error("truncated Matrix Market file: " + path);
  SpMat A(rows, cols);
  A.setFromTriplets(ts.begin(), ts.end());
  return A;
}

void save_corrected_chain(const std::string& dir, const DiscreteChain& c,
                          const CorrectedChain& cc) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  json man;
  man["kind"] = c.kind;
  man["d"] = c.d;
  man["twist"] = c.twist;
  man["nodes"] = c.nodes;
  man["tau"] = cc.tau;
  man["nilpotency"] = cc.nilpotency;
  man["levels"] = json::array();
  auto num = [](double v) {
    return std::isfinite(v) ? json(v) : json(nullptr);
  };
  for (size_t k = 0; k < c.levels.size(); ++k) {
    const DChainLevel& lv = c.levels[k];
    json jl;
    jl["name"] = lv.name;
    jl["size"] = lv.size();
    jl["bidegree"] = {lv.field.bd.k, lv.field.bd.m};
    jl["twist"] = lv.field.twist;
    jl["projected_fiber"] = lv.field.bianchi;
    jl["has_up"] = lv.has_up;
    std::string sk = std::to_string(k);
    save_market(dir + "/M" + sk + ".mtx", Mat(lv.M));
    jl["mass"] = "M" + sk + ".mtx";
    if (lv.has_up) {
      const CorrectedLevel& cl = cc.levels[k];
      jl["up_order"] = lv.up_order;
      jl["norm"] = num(cl.Anorm);
      jl["correction_norm"] = num(cl.Gnorm);
      jl["correction_norm_rel"] = num(cl.Gnorm_rel);
      jl["recursion_defect"] = num(cl.recursion_defect);
      jl["rank"] = cl.proj.rank;
      jl["rank_gap"] = num(cl.proj.gap);
      jl["rank_ambiguous"] = cl.proj.rank_ambiguous;
      save_market(dir + "/A" + sk + ".mtx", lv.A);
      save_market(dir + "/Acorr" + sk + ".mtx", cl.A);
      save_market(dir + "/G" + sk + ".mtx", cl.G);
      save_market(dir + "/P" + sk + ".mtx", cl.proj.P);
      save_market(dir + "/Pi" + sk + ".mtx", cl.proj.Pi);
      jl["files"] = {{"raw", "A" + sk + ".mtx"},
                     {"corrected", "Acorr" + sk + ".mtx"},
                     {"correction", "G" + sk + ".mtx"},
                     {"pseudoinverse", "P" + sk + ".mtx"},
                     {"range_projector", "Pi" + sk + ".mtx"}};
    }
    man["levels"].push_back(jl);
  }
  std::ofstream f(dir + "/manifest.json");
  if (!f) throw std::runtime_error("cannot write manifest in " + dir);
  f << man.dump(2) << "\n";
}

}  // namespace pcx
