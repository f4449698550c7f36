#include "pcx/ellipticity.hpp"

#include <Eigen/QR>
#include <Eigen/SVD>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

#include "pcx/bianchi.hpp"

namespace pcx {

namespace {
const double kGolden = 0.6180339887498949;  // 1/phi

std::string bidegree_name(const Bidegree& bd, bool proj) {
  std::string base = proj ? "G" : "L";
  return base + "^{" + std::to_string(bd.k) + "," + std::to_string(bd.m) + "}";
}
}  // namespace

ChainSpec de_rham_chain(int d) {
  ChainSpec c;
  c.name = "de_rham";
  c.d = d;
  for (int k = 0; k <= d; ++k) {
    ChainLevel lv;
    lv.bd = Bidegree{k, 0, d};
    lv.space_name = bidegree_name(lv.bd, false);
    lv.Q = CMat::Identity(lv.bd.dim(), lv.bd.dim());
    lv.up_kind = OpKind::ExtD;
    lv.has_up = k < d;
    c.levels.push_back(std::move(lv));
  }
  return c;
}

ChainSpec twisted_chain(int d, int rank) {
  ChainSpec c = de_rham_chain(d);
  c.name = "twisted_de_rham";
  c.twist_rank = rank;
  return c;
}

ChainSpec bianchi_chain(int m, int d) {
  if (m < 0 || m + 1 > d) throw std::invalid_argument("bianchi chain needs m+1 <= d");
  ChainSpec c;
  c.name = m == 0 ? "hessian" : (m == 1 ? "calabi" : "bianchi_" + std::to_string(m));
  c.d = d;
  for (int k = 0; k <= d; ++k) {
    ChainLevel lv;
    lv.bd = k <= m ? Bidegree{k, m, d} : Bidegree{k, m + 1, d};
    lv.space_name = bidegree_name(lv.bd, true);
    lv.Q = bianchi_onb(lv.bd).cast<cplx>();
    if (k < m) {
      lv.up_kind = OpKind::DG;
      lv.has_up = true;
    } else if (k == m) {
      lv.up_kind = OpKind::Hess;
      lv.has_up = true;
    } else {
      lv.up_kind = OpKind::DG;  // no correction needed above the diagonal
      lv.has_up = k < d;
    }
    c.levels.push_back(std::move(lv));
  }
  return c;
}

namespace {

SymbolPoly raw_symbol(OpKind kind, const Bidegree& bd, const Vec& xi_tan,
                      const MetricAtPoint* mp) {
  int d = bd.d;
  if (!mp) {
    Vec nu = Vec::Zero(d);
    nu(d - 1) = 1.0;
    return model_symbol(kind, bd, xi_tan, nu);
  }
  // frame components -> coordinate components, then conjugate back
  Vec xi_coord = mp->R.transpose() * xi_tan;
  Vec nu_coord = mp->R.row(d - 1).transpose();
  return frame_symbol(kind, bd, *mp, xi_coord, nu_coord);
}

}  // namespace

SymbolPoly level_up_symbol(const ChainSpec& chain, int k, const Vec& xi_tan,
                           const MetricAtPoint* mp) {
  const ChainLevel& lv = chain.levels[k];
  if (!lv.has_up) throw std::invalid_argument("level has no up operator");
  SymbolPoly p = raw_symbol(lv.up_kind, lv.bd, xi_tan, mp)
                     .restricted(chain.levels[k + 1].Q, lv.Q);
  if (chain.twist_rank > 1) p = p.kron_identity(chain.twist_rank);
  return p;
}

LevelSystem build_level_system(const ChainSpec& chain, int k, const Vec& xi_tan,
                               const MetricAtPoint* mp) {
  const ChainLevel& lv = chain.levels[k];
  LevelSystem out;
  if (lv.has_up) {
    out.interior.push_back(level_up_symbol(chain, k, xi_tan, mp));
    out.interior_names.push_back(op_name(lv.up_kind));
  }
  if (k >= 1 && chain.levels[k - 1].has_up) {
    const ChainLevel& below = chain.levels[k - 1];
    SymbolPoly a = raw_symbol(below.up_kind, below.bd, xi_tan, mp)
                       .restricted(lv.Q, below.Q)
                       .adjoint();
    if (chain.twist_rank > 1) a = a.kron_identity(chain.twist_rank);
    out.interior.push_back(std::move(a));
    out.interior_names.push_back(op_name(below.up_kind) + "_adj");

    BKind bk = below.up_kind == OpKind::Hess ? BKind::BHstar : BKind::BGstar;
    auto rows = boundary_system(bk, lv.bd, xi_tan);
    for (auto& ts : rows) {
      ts.A0 = ts.A0 * lv.Q;
      ts.A1 = ts.A1 * lv.Q;
      if (chain.twist_rank > 1) {
        ts.A0 = kron_id(ts.A0, chain.twist_rank);
        ts.A1 = kron_id(ts.A1, chain.twist_rank);
      }
    }
    out.boundary.emplace_back(bkind_name(bk), std::move(rows));
  }
  return out;
}

double interior_min_sv_at(const LevelSystem& sys, double t) {
  SymbolPoly S = stack_symbols(sys.interior);
  if (S.rows() < S.cols()) return 0.0;
  Eigen::JacobiSVD<CMat> svd(S.eval(cplx(t, 0.0)));
  const auto& sv = svd.singularValues();
  return sv.size() ? sv(sv.size() - 1) : 0.0;
}

std::vector<Vec> sphere_points(int n, int count, unsigned seed) {
  std::vector<Vec> out;
  if (n <= 0) return out;
  if (n == 1) {
    Vec p(1);
    p << 1.0;
    out.push_back(p);
    p << -1.0;
    out.push_back(p);
    return out;
  }
  double offset = static_cast<double>(seed % 997u) / 997.0;
  if (n == 2) {
    for (int j = 0; j < count; ++j) {
      double th = 2.0 * M_PI * (j * kGolden + offset);
      Vec p(2);
      p << std::cos(th), std::sin(th);
      out.push_back(p);
    }
    return out;
  }
  if (n == 3) {
    for (int j = 0; j < count; ++j) {
      double z = 1.0 - 2.0 * (j + 0.5) / count;
      double r = std::sqrt(std::max(0.0, 1.0 - z * z));
      double th = 2.0 * M_PI * (j * kGolden + offset);
      Vec p(3);
      p << r * std::cos(th), r * std::sin(th), z;
      out.push_back(p);
    }
    return out;
  }
  std::mt19937 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (int j = 0; j < count; ++j) {
    Vec p(n);
    do {
      for (int i = 0; i < n; ++i) p(i) = gauss(rng);
    } while (p.norm() < 1e-8);
    out.push_back(p.normalized());
  }
  return out;
}

Mat random_spd(int d, unsigned seed) {
  std::mt19937 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Mat A(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) A(i, j) = gauss(rng);
  Eigen::HouseholderQR<Mat> qr(A);
  Mat Qo = qr.householderQ();
  std::uniform_real_distribution<double> ev(0.6, 1.8);
  Vec evals(d);
  for (int i = 0; i < d; ++i) evals(i) = ev(rng);
  Mat g = Qo * evals.asDiagonal() * Qo.transpose();
  return 0.5 * (g + g.transpose());
}

LevelReport check_level(const ChainSpec& chain, int k, const CheckOptions& opt) {
  const ChainLevel& lv = chain.levels[k];
  LevelReport rep;
  rep.chain_name = chain.name;
  rep.space_name = lv.space_name;
  rep.level = k;
  rep.space_dim = static_cast<int>(lv.Q.cols()) * chain.twist_rank;
  int d = chain.d;

  // Interior injectivity of the stacked symbol over the full unit sphere,
  // repeated at every metric anchor.
  rep.interior_min_sv = std::numeric_limits<double>::infinity();
  rep.interior_injective = true;
  for (int a = 0; a < std::max(1, opt.anchors); ++a) {
    MetricAtPoint mp;
    bool flat = a == 0;
    if (!flat) mp = MetricAtPoint::from(random_spd(d, opt.seed + 7919u * a));
    auto dirs = sphere_points(d, opt.interior_samples, opt.seed + 131u * a + 17u * k);
    for (const auto& xi : dirs) {
      Vec xt = xi;
      double t = xt(d - 1);
      xt(d - 1) = 0.0;
      LevelSystem sys = build_level_system(chain, k, xt, flat ? nullptr : &mp);
      ++rep.interior_samples;
      SymbolPoly S = stack_symbols(sys.interior);
      Eigen::JacobiSVD<CMat> svd(S.eval(cplx(t, 0.0)), Eigen::ComputeFullV);
      double smin = 0.0;
      if (S.rows() >= S.cols() && svd.singularValues().size())
        smin = svd.singularValues()(svd.singularValues().size() - 1);
      if (smin < rep.interior_min_sv) rep.interior_min_sv = smin;
      if (smin <= opt.interior_tol && rep.interior_injective) {
        rep.interior_injective = false;
        rep.interior_witness_xi = xi;
        CVec wr = svd.matrixV().col(svd.matrixV().cols() - 1);
        rep.interior_witness = kron_id(lv.Q, chain.twist_rank) * wr;
      }
    }
  }

  // Boundary side: half-line solutions against the adjoint trace rows.
  for (int a = 0; a < std::max(1, opt.anchors); ++a) {
    MetricAtPoint mp;
    bool flat = a == 0;
    if (!flat) mp = MetricAtPoint::from(random_spd(d, opt.seed + 7919u * a));
    auto tdirs = sphere_points(d - 1, opt.boundary_dirs, opt.seed + 977u * a + 31u * k);
    for (const auto& v : tdirs) {
      Vec xt = Vec::Zero(d);
      xt.head(d - 1) = v;
      LevelSystem sys = build_level_system(chain, k, xt, flat ? nullptr : &mp);
      DecayingSpace ds = decaying_space(sys.interior, opt.decay);
      DirectionReport dr;
      dr.xi_tan = xt;
      dr.anchor = a;
      dr.mplus_dim = ds.dim;
      dr.normal_route_dim = ds.normal_route_dim;
      for (int mlt : ds.stable_mult) dr.stable_mult_total += mlt;
      dr.indeterminate = ds.indeterminate;
      dr.pre_injective = ds.pre_injective_on_line;
      dr.max_residual = ds.max_residual;
      dr.contour_count = ds.contour_stable_count;
      for (const auto& [name, rows] : sys.boundary) {
        BoundaryVerdict bv;
        bv.system = name;
        int nr = 0;
        for (const auto& ts : rows) nr += ts.rows();
        bv.rows = nr;
        bv.cols = ds.dim;
        if (ds.dim == 0) {
          bv.vacuous = true;
          bv.injective = true;
          bv.min_sv = std::numeric_limits<double>::infinity();
        } else {
          CMat Xi(nr, ds.dim);
          for (int c = 0; c < ds.dim; ++c) {
            const auto& sol = ds.basis[c];
            CVec w1 = sol.w.size() > 1 ? sol.w[1] : CVec(CVec::Zero(sol.w[0].size()));
            int at = 0;
            for (const auto& ts : rows) {
              Xi.block(at, c, ts.rows(), 1) = ts.apply(sol.w[0], w1, sol.mu);
              at += ts.rows();
            }
          }
          if (nr < ds.dim) {
            bv.min_sv = 0.0;
            bv.injective = false;
          } else {
            Eigen::JacobiSVD<CMat> svd(Xi);
            bv.min_sv = svd.singularValues()(svd.singularValues().size() - 1);
            bv.injective = bv.min_sv > opt.boundary_sv_tol;
          }
        }
        dr.boundary.push_back(std::move(bv));
      }
      if (dr.indeterminate) rep.any_indeterminate = true;
      rep.directions.push_back(std::move(dr));
    }
  }

  rep.od_elliptic = rep.interior_injective;
  for (const auto& dr : rep.directions)
    if (!dr.ok()) rep.od_elliptic = false;
  return rep;
}

std::vector<LevelReport> check_chain(const ChainSpec& chain,
                                     const CheckOptions& opt) {
  std::vector<LevelReport> out;
  for (int k = 0; k < chain.size(); ++k) out.push_back(check_level(chain, k, opt));
  return out;
}

}  // namespace pcx
