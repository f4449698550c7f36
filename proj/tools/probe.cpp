// Scratch measurement harness: prints the convergence data used to freeze
// the tolerances in the grid/operator test suites.  Not part of the test
// run.
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>

#include "pcx/bianchi.hpp"
#include "pcx/discrete_ops.hpp"
#include "pcx/fiber_ops.hpp"
#include "pcx/grid.hpp"
#include "pcx/precomplex.hpp"

using namespace pcx;

static Grid make(const char* chart, int n, int which_phi = 0) {
  DomainSpec ds;
  ds.chart = chart;
  ds.d = 2;
  ds.n = n;
  if (std::string(chart) == "annulus") ds.metric = polar_metric();
  if (which_phi == 1)
    ds.metric = conformal_metric(
        [](const Vec& x) { return 0.1 * x[0] * x[1]; }, "conf-harmonic");
  if (which_phi == 2)
    ds.metric = conformal_metric(
        [](const Vec& x) { return 0.05 * x[0] * x[0]; }, "conf-curved");
  return build_domain(ds);
}

static void grid_report() {
  std::printf("== connection/curvature ==\n");
  for (int n : {8, 16, 32}) {
    Grid g = make("annulus", n);
    double gerr = 0, kmax = 0;
    for (long q = 0; q < g.nodes; ++q) {
      const double r = g.coord(q)[0];
      Mat Gr = Mat::Zero(2, 2), Gt = Mat::Zero(2, 2);
      Gt(0, 1) = -r;          // Gamma^r_{theta theta} at (k=0 row? see below)
      Gr(1, 1) = 1.0 / r;     // Gamma^theta_{r theta}
      Gt(1, 0) = 1.0 / r;     // Gamma^theta_{theta r}
      // conn.Gamma[q][a](k,j) = Gamma^k_{aj}
      Mat Ga = g.conn.Gamma[q][0];  // a = r
      Mat Gb = g.conn.Gamma[q][1];  // a = theta
      Mat Ea = Ga - Gr, Eb = Gb - Gt;
      gerr = std::max({gerr, Ea.cwiseAbs().maxCoeff(), Eb.cwiseAbs().maxCoeff()});
      kmax = std::max(kmax, std::abs(gauss_curvature(g, q)));
    }
    std::printf("annulus n=%2d  GammaErr %.3e  |K| %.3e  omAsym %.3e\n", n,
                gerr, kmax, g.conn.max_omega_asym);
  }
  for (int n : {8, 16, 32}) {
    Grid g = make("box", n, 1);
    double gerr = 0, kmax = 0;
    for (long q = 0; q < g.nodes; ++q) {
      const Vec x = g.coord(q);
      const double p1 = 0.1 * x[1], p2 = 0.1 * x[0];  // phi_,1  phi_,2
      // Gamma^k_{aj} = delta^k_a phi_j + delta^k_j phi_a - delta_aj phi_k
      for (int a = 0; a < 2; ++a) {
        Mat Gexp = Mat::Zero(2, 2);
        const double dphi[2] = {p1, p2};
        for (int k = 0; k < 2; ++k)
          for (int j = 0; j < 2; ++j)
            Gexp(k, j) = (k == a ? dphi[j] : 0.0) + (k == j ? dphi[a] : 0.0) -
                         (a == j ? dphi[k] : 0.0);
        gerr = std::max(gerr,
                        (g.conn.Gamma[q][a] - Gexp).cwiseAbs().maxCoeff());
      }
      kmax = std::max(kmax, std::abs(gauss_curvature(g, q)));
    }
    std::printf("conf-h  n=%2d  GammaErr %.3e  |K| %.3e  omAsym %.3e\n", n,
                gerr, kmax, g.conn.max_omega_asym);
  }
  for (int n : {8, 16, 32}) {
    Grid g = make("box", n, 2);
    double kerr = 0;
    for (long q = 0; q < g.nodes; ++q) {
      const Vec x = g.coord(q);
      const double phi = 0.05 * x[0] * x[0];
      const double kex = -std::exp(-2.0 * phi) * 0.1;  // -e^{-2phi} lap(phi)
      kerr = std::max(kerr, std::abs(gauss_curvature(g, q) - kex));
    }
    std::printf("conf-c  n=%2d  Kerr %.3e\n", n, kerr);
  }
}

static void mass_report() {
  std::printf("== masses ==\n");
  for (int n : {8, 16, 32}) {
    Grid gb = make("box", n);
    Grid ga = make("annulus", n);
    Grid gc = make("box", n, 1);
    FieldDesc sc{Bidegree{0, 0, 2}};
    const double mb = mass_matrix(gb, sc).sum();
    const double ma = mass_matrix(ga, sc).sum();
    const double mc = mass_matrix(gc, sc).sum();
    // Simpson oracle for int e^{0.2 x y}
    auto f = [](double x, double y) { return std::exp(0.2 * x * y); };
    const int N = 400;
    double I = 0;
    for (int i = 0; i <= N; ++i)
      for (int j = 0; j <= N; ++j) {
        double wi = (i == 0 || i == N) ? 1 : (i % 2 ? 4 : 2);
        double wj = (j == 0 || j == N) ? 1 : (j % 2 ? 4 : 2);
        I += wi * wj * f(i / double(N), j / double(N));
      }
    I /= 9.0 * N * N;
    std::printf("n=%2d box-1 %.3e annulus-3pi %.3e conf-orc %.3e\n", n,
                std::abs(mb - 1.0), std::abs(ma - 3 * M_PI),
                std::abs(mc - I));
  }
}

static void ops_report() {
  std::printf("== operator spot checks ==\n");
  {
    Grid g = make("box", 16);
    // H on f = (x1)^2 -> 2 theta^1 (x) theta^1
    FieldDesc sc{Bidegree{0, 0, 2}};
    Eigen::VectorXd f(g.nodes);
    for (long q = 0; q < g.nodes; ++q) f[q] = g.coord(q)[0] * g.coord(q)[0];
    Eigen::VectorXd Hf = assemble_H(g, Bidegree{0, 0, 2}) * f;
    double err = 0;  // component (0,0) of (1,1) fiber should be 2
    for (long q = 0; q < g.nodes; ++q) {
      Vec v = Hf.segment(q * 4, 4);
      err = std::max(err, (v - Vec(Eigen::Vector4d(2, 0, 0, 0))).cwiseAbs().maxCoeff());
    }
    std::printf("H((x1)^2) err %.3e\n", err);

    // dG on rotational Killing field x1 dx2 - x2 dx1 (bidegree (0,1))
    Bidegree b01{0, 1, 2};
    Mat Q = bianchi_onb(b01);  // should be identity (W^{0,1} all Bianchi)
    Eigen::VectorXd om(g.nodes * 2);
    for (long q = 0; q < g.nodes; ++q) {
      om[q * 2 + 0] = -g.coord(q)[1];
      om[q * 2 + 1] = g.coord(q)[0];
    }
    SpMat dG = assemble_dG(g, b01);
    SpMat E = blockdiag_fiber(g, Q);
    Eigen::VectorXd kil = dG * (E.transpose() * om);
    std::printf("dG(rot) max %.3e   (Q is %ldx%ld)\n",
                kil.cwiseAbs().maxCoeff(), (long)Q.rows(), (long)Q.cols());

    // d d = 0 flat
    SpMat d1 = assemble_d(g, b01);
    SpMat d2 = assemble_d(g, b01.shifted(1, 0));
    std::printf("dd flat max %.3e\n", SpMat(d2 * d1).coeffs().cwiseAbs().maxCoeff());

  }
  {
    // twisted dd vs curvature wedge, flat box
    for (int n : {8, 16, 32}) {
      Grid g = make("box", n);
      TwistedConnection tc = make_twisted_connection(g, 2, 0.5, 11);
      Bidegree b0{0, 0, 2};
      SpMat D0 = assemble_d_twisted(g, b0, tc);
      SpMat D1 = assemble_d_twisted(g, Bidegree{1, 0, 2}, tc);
      SpMat F = assemble_curvature_wedge(g, b0, tc);
      FieldDesc fd{b0, 2};
      Eigen::VectorXd psi = random_smooth_field(g, fd, 3);
      Eigen::VectorXd r = D1 * (D0 * psi) - F * psi;
      std::printf("twist n=%2d  |dd-Fw| %.3e  (|psi| %.3e)\n", n,
                  r.cwiseAbs().maxCoeff(), psi.cwiseAbs().maxCoeff());
    }
  }
  {
    // dd on scalars, curvilinear flat chart: should vanish under refinement
    for (int n : {8, 16, 32}) {
      Grid g = make("annulus", n);
      Bidegree b0{0, 0, 2};
      SpMat a1 = assemble_d(g, b0);
      SpMat a2 = assemble_d(g, Bidegree{1, 0, 2});
      FieldDesc fd{b0};
      Eigen::VectorXd psi = random_smooth_field(g, fd, 5);
      Eigen::VectorXd w = mass_matrix(g, fd);
      psi /= std::sqrt(psi.dot(w.cwiseProduct(psi)));
      Eigen::VectorXd r = a2 * (a1 * psi);
      std::printf("dd annulus scalar n=%2d  max %.3e\n", n,
                  r.cwiseAbs().maxCoeff());
    }
    // dG dG on (1,1), d=3: flat exactness, then curved boundedness
    for (int n : {8, 12, 16}) {
      DomainSpec ds;
      ds.chart = "box";
      ds.d = 3;
      ds.n = n;
      Grid gf = build_domain(ds);
      ds.metric = conformal_metric(
          [](const Vec& x) { return 0.05 * x[0] * x[0] + 0.1 * x[1] * x[2]; },
          "conf3");
      Grid gc = build_domain(ds);
      Bidegree b11{1, 1, 3};
      FieldDesc fd{b11, 1, true};
      for (Grid* g : {&gf, &gc}) {
        SpMat a1 = assemble_dG(*g, b11);
        SpMat a2 = assemble_dG(*g, Bidegree{2, 1, 3});
        Eigen::VectorXd psi = random_smooth_field(*g, fd, 5);
        Eigen::VectorXd w = mass_matrix(*g, fd);
        psi /= std::sqrt(psi.dot(w.cwiseProduct(psi)));
        Eigen::VectorXd r = a2 * (a1 * psi);
        FieldDesc ft{Bidegree{3, 1, 3}, 1, true};
        Eigen::VectorXd wt = mass_matrix(*g, ft);
        std::printf("dGdG d=3 %s n=%2d  Mnorm %.3e  max %.3e\n",
                    g == &gf ? "flat" : "conf", n,
                    std::sqrt(r.dot(wt.cwiseProduct(r))),
                    r.cwiseAbs().maxCoeff());
      }
    }
  }
}

static void killing_report() {
  std::printf("== Killing oracle (dG vs symmetrized covariant gradient) ==\n");
  // closed-form omega with analytic covariant derivative on each chart
  for (int which : {0, 1}) {  // 0 annulus, 1 conformal box
    for (int n : {8, 16, 32}) {
      Grid g = which == 0 ? make("annulus", n) : make("box", n, 1);
      Bidegree b01{0, 1, 2}, b11{1, 1, 2};
      Mat Q11 = bianchi_onb(b11);
      // coordinate components of omega: smooth fixed choice.  The annulus
      // field must be periodic in x1 (= theta) or the wrapped stencil sees a
      // jump at the seam.
      auto om_coord = [which](const Vec& x) {
        if (which == 0)
          return Eigen::Vector2d(std::sin(x[0]) * std::cos(x[1]),
                                 std::cos(0.7 * x[0]) + 0.2 * std::sin(x[1]));
        return Eigen::Vector2d(std::sin(x[0] + 0.3 * x[1]),
                               std::cos(0.7 * x[0]) + 0.2 * x[1] * x[1]);
      };
      auto dom_coord = [which](const Vec& x) {
        Mat J(2, 2);  // J(i,j) = d_i omega_j
        if (which == 0) {
          J(0, 0) = std::cos(x[0]) * std::cos(x[1]);
          J(1, 0) = -std::sin(x[0]) * std::sin(x[1]);
          J(0, 1) = -0.7 * std::sin(0.7 * x[0]);
          J(1, 1) = 0.2 * std::cos(x[1]);
        } else {
          J(0, 0) = std::cos(x[0] + 0.3 * x[1]);
          J(1, 0) = 0.3 * std::cos(x[0] + 0.3 * x[1]);
          J(0, 1) = -0.7 * std::sin(0.7 * x[0]);
          J(1, 1) = 0.4 * x[1];
        }
        return J;
      };
      Eigen::VectorXd om(g.nodes * 2);
      Eigen::VectorXd oracle(g.nodes * 4);
      for (long q = 0; q < g.nodes; ++q) {
        const Vec x = g.coord(q);
        Eigen::Vector2d oc = om_coord(x);
        // frame components: omega_a = Rinv^T ... omega(frame a) = om_i Rinv(i,a)
        const Mat& Ri = g.mp[q].Rinv;
        Eigen::Vector2d of = Ri.transpose() * oc;
        om[q * 2 + 0] = of[0];
        om[q * 2 + 1] = of[1];
        // analytic Christoffels
        Mat Gam[2];
        if (which == 0) {
          const double r = x[0];
          Gam[0] = Mat::Zero(2, 2);
          Gam[0](1, 1) = 1.0 / r;
          Gam[1] = Mat::Zero(2, 2);
          Gam[1](0, 1) = -r;
          Gam[1](1, 0) = 1.0 / r;
        } else {
          const double dphi[2] = {0.1 * x[1], 0.1 * x[0]};
          for (int a = 0; a < 2; ++a) {
            Gam[a] = Mat::Zero(2, 2);
            for (int k = 0; k < 2; ++k)
              for (int j = 0; j < 2; ++j)
                Gam[a](k, j) = (k == a ? dphi[j] : 0.0) +
                               (k == j ? dphi[a] : 0.0) -
                               (a == j ? dphi[k] : 0.0);
          }
        }
        Mat J = dom_coord(x);
        Mat nab(2, 2);  // nab(i,j) = nabla_i omega_j = d_i om_j - Gam^k_ij om_k
        for (int i = 0; i < 2; ++i)
          for (int j = 0; j < 2; ++j) {
            double v = J(i, j);
            for (int k = 0; k < 2; ++k) v -= Gam[i](k, j) * oc[k];
            nab(i, j) = v;
          }
        Mat sym = 0.5 * (nab + nab.transpose());
        Mat symf = Ri.transpose() * sym * Ri;  // frame components
        for (int i = 0; i < 2; ++i)
          for (int j = 0; j < 2; ++j) oracle[q * 4 + i * 2 + j] = symf(i, j);
      }
      SpMat dG = assemble_dG(g, b01);
      SpMat E11 = blockdiag_fiber(g, Q11);
      SpMat E01 = blockdiag_fiber(g, bianchi_onb(b01));
      Eigen::VectorXd got = E11 * (dG * (E01.transpose() * om));
      const double err = (got - oracle).cwiseAbs().maxCoeff();
      std::printf("%s n=%2d  KillingErr %.3e\n",
                  which == 0 ? "annulus" : "conf-h ", n, err);
    }
  }
}

static void green_report() {
  std::printf("== green residuals (20 trials, seed 100) ==\n");
  struct Cfg {
    const char* chart;
    int phi;
  };
  for (Cfg c : {Cfg{"box", 0}, Cfg{"annulus", 0}, Cfg{"box", 1}}) {
    for (int bo : {1, 2}) {
      std::printf("[%s phi=%d so=%d]\n", c.chart, c.phi, bo);
      for (int n : {8, 16, 32}) {
        Grid g = make(c.chart, n, c.phi);
        StencilOpts so{bo};
        GreenStats s0 = greens_residual(
            g, green_pair_d(g, Bidegree{0, 0, 2}, so), 20, 100);
        GreenStats s1 = greens_residual(
            g, green_pair_dG(g, Bidegree{0, 1, 2}, so), 20, 100);
        GreenStats s2 =
            greens_residual(g, green_pair_H(g, Bidegree{0, 0, 2}, so), 20, 100);
        std::printf("  n=%2d  d %.3e  dG %.3e  H %.3e\n", n, s0.max_res,
                    s1.max_res, s2.max_res);
      }
    }
  }
}

// Same residual but with iid nodal-Gaussian trial fields (no smoothness):
// boundary-row defects then show up without quadrature suppression.
static double noise_residual(const Grid& g, const DiscreteOperator& op,
                             int trials, unsigned seed) {
  std::mt19937 rng(seed);
  std::normal_distribution<double> N(0.0, 1.0);
  double worst = 0;
  for (int t = 0; t < trials; ++t) {
    Eigen::VectorXd psi(op.A.cols()), eta(op.A.rows());
    for (long i = 0; i < psi.size(); ++i) psi[i] = N(rng);
    for (long i = 0; i < eta.size(); ++i) eta[i] = N(rng);
    psi /= std::sqrt(psi.dot(op.Msrc.cwiseProduct(psi)));
    eta /= std::sqrt(eta.dot(op.Mtgt.cwiseProduct(eta)));
    double r = (op.A * psi).dot(op.Mtgt.cwiseProduct(eta)) -
               psi.dot(op.Msrc.cwiseProduct(op.Astar * eta));
    for (const TraceTerm& tt : op.traces) {
      Eigen::VectorXd bp = tt.Bsrc * psi, be = tt.Btgt * eta;
      r -= bp.dot(tt.wb.cwiseProduct(be));
    }
    worst = std::max(worst, std::abs(r));
  }
  return worst;
}

static void green2_report() {
  std::printf("== green residuals, white-noise trials (20, seed 100) ==\n");
  struct Cfg {
    const char* chart;
    int phi;
  };
  for (Cfg c : {Cfg{"box", 0}, Cfg{"annulus", 0}, Cfg{"box", 1}}) {
    for (int bo : {1, 2}) {
      std::printf("[%s phi=%d so=%d]\n", c.chart, c.phi, bo);
      for (int n : {8, 16, 32}) {
        Grid g = make(c.chart, n, c.phi);
        StencilOpts so{bo};
        double s0 = noise_residual(g, green_pair_d(g, Bidegree{0, 0, 2}, so), 20, 100);
        double s1 = noise_residual(g, green_pair_dG(g, Bidegree{0, 1, 2}, so), 20, 100);
        double s2 = noise_residual(g, green_pair_H(g, Bidegree{0, 0, 2}, so), 20, 100);
        std::printf("  n=%2d  d %.3e  dG %.3e  H %.3e\n", n, s0, s1, s2);
      }
    }
  }
}

// Correction-engine measurements: rank structure, correction norms,
// nilpotency, and the kernel clusters behind the cohomology table.
static void chains_report(const char* chart, const char* kind, int n,
                          int which_phi = 0) {
  Grid g = make(chart, n, which_phi);
  DiscreteChain c = build_chain(g, kind);
  CorrectedChain cc = correct_chain(c);
  std::printf("== %s %s n=%d (nodes=%ld) ==\n", chart, kind, n, c.nodes);
  for (size_t k = 0; k + 1 < c.levels.size(); ++k) {
    const auto& cl = cc.levels[k];
    std::printf(
        "  op%zu %-12s size %ld->%ld rank %d gap %.3g%s  |A| %.3g  |G| %.3g "
        "(rel %.3g)  rec %.3g\n",
        k, c.levels[k].name.c_str(), c.levels[k].size(),
        c.levels[k + 1].size(), cl.proj.rank, cl.proj.gap,
        cl.proj.rank_ambiguous ? " AMBIG" : "", cl.Anorm, cl.Gnorm,
        cl.Gnorm_rel, cl.recursion_defect);
  }
  for (size_t k = 0; k < cc.nilpotency.size(); ++k) {
    Mat raw = Mat(c.levels[k + 1].A) * Mat(c.levels[k].A);
    double rn = raw.norm() /
                (Mat(c.levels[k + 1].A).norm() * Mat(c.levels[k].A).norm() +
                 1e-300);
    std::printf("  nilpotency %zu: corrected %.3g  raw %.3g\n", k,
                cc.nilpotency[k], rn);
  }
}

static void harmonic_report(const char* chart, const char* kind, int n,
                            int which_phi = 0) {
  Grid g = make(chart, n, which_phi);
  DiscreteChain c = build_chain(g, kind);
  CorrectedChain cc = correct_chain(c);
  std::printf("== %s %s n=%d ==\n", chart, kind, n);
  for (int k = 0; k < (int)c.levels.size(); ++k) {
    HarmonicSpace hs = harmonic_space(c, cc, k);
    std::printf("  H^%d(%s): dim %d (route2 %d%s) gap %.3g%s  B*res %.3g  σ:",
                k, c.levels[k].name.c_str(), hs.cert.dim, hs.dim_route2,
                hs.routes_agree ? "" : " DISAGREE", hs.cert.gap,
                hs.cert.certified ? "" : " UNCERT", hs.bstar_residual);
    for (double s : hs.cert.sigmas) std::printf(" %.2e", s);
    std::printf("\n");
  }
}

// Criterion: corrected nilpotency small on every chain while the raw twisted
// composition stays large.  Prints the mass-weighted operator-norm ratios.
static void nilp_report(int n) {
  auto wrel = [](const DiscreteChain& c) {
    auto wd = [](const SpMat& A, const Eigen::VectorXd& Ms,
                 const Eigen::VectorXd& Mt) {
      return Eigen::MatrixXd(Mt.cwiseSqrt().asDiagonal() * Eigen::MatrixXd(A) *
                             Ms.cwiseSqrt().cwiseInverse().asDiagonal());
    };
    auto on = [](const Eigen::MatrixXd& A) {
      return Eigen::BDCSVD<Eigen::MatrixXd>(A).singularValues()(0);
    };
    Eigen::MatrixXd A0 = wd(c.levels[0].A, c.levels[0].M, c.levels[1].M);
    Eigen::MatrixXd A1 = wd(c.levels[1].A, c.levels[1].M, c.levels[2].M);
    return on(A1 * A0) / (on(A1) * on(A0));
  };
  for (double amp : {0.5, 2.0, 4.0, 6.0}) {
    ChainBuildOptions o;
    o.twist_amp = amp;
    Grid g = make("box", n);
    DiscreteChain c = build_chain(g, "de-rham-twisted", o);
    CorrectedChain cc = correct_chain(c);
    std::printf("twisted amp %.1f n=%d: raw rel %.4g  corrected rel %.3g\n",
                amp, n, wrel(c), cc.nilpotency[0]);
  }
  for (const char* kind : {"de-rham", "hessian", "calabi"}) {
    for (const char* chart : {"box", "annulus"}) {
      Grid g = make(chart, n);
      DiscreteChain c = build_chain(g, kind);
      CorrectedChain cc = correct_chain(c);
      std::printf("%s %s n=%d: raw rel %.4g  corrected rel %.3g\n", chart,
                  kind, n, wrel(c), cc.nilpotency[0]);
    }
  }
}

int main(int argc, char** argv) {
  const std::string what = argc > 1 ? argv[1] : "all";
  if (what == "all" || what == "grid") grid_report();
  if (what == "all" || what == "mass") mass_report();
  if (what == "all" || what == "ops") ops_report();
  if (what == "all" || what == "killing") killing_report();
  if (what == "all" || what == "green") green_report();
  if (what == "all" || what == "green2") green2_report();
  if (what == "chains") {
    for (int n : {8, 16}) {
      chains_report("box", "de-rham", n);
      chains_report("annulus", "de-rham", n);
      chains_report("box", "de-rham-twisted", n);
      chains_report("box", "hessian", n);
      chains_report("box", "calabi", n);
      chains_report("annulus", "calabi", n);
    }
  }
  if (what == "nilp") nilp_report(16);
  if (what == "harmonic") {
    for (int n : {8, 16, 24}) {
      harmonic_report("box", "de-rham", n);
      harmonic_report("annulus", "de-rham", n);
    }
    harmonic_report("box", "hessian", 12);
    harmonic_report("box", "calabi", 12);
    harmonic_report("annulus", "calabi", 12);
  }
  return 0;
}
