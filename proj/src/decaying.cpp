#include "pcx/decaying.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>

namespace pcx {

namespace {

const cplx kI(0.0, 1.0);

CMat kernel_basis(const CMat& A, double rel_tol, double abs_floor) {
  if (A.rows() == 0 || A.cols() == 0)
    return CMat::Identity(A.cols(), A.cols());
  Eigen::JacobiSVD<CMat> svd(A, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  double cut = std::max(abs_floor, rel_tol * sv(0));
  int rank = 0;
  for (int i = 0; i < sv.size(); ++i)
    if (sv(i) > cut) ++rank;
  return svd.matrixV().rightCols(A.cols() - rank);
}

// Block upper-triangular Toeplitz matrix of the chain equations
//   sum_r (1/r!) P^{(r)}(i mu) w_{j+r} = 0,  j = 0..L.
CMat chain_matrix(const SymbolPoly& S, cplx mu, int L) {
  int r0 = S.rows(), n = S.cols();
  CMat T = CMat::Zero((L + 1) * r0, (L + 1) * n);
  double fact = 1.0;
  for (int r = 0; r <= L; ++r) {
    if (r > 0) fact *= r;
    CMat D = S.eval_deriv_mu(mu, r) / fact;
    for (int j = 0; j + r <= L; ++j)
      T.block(j * r0, (j + r) * n, r0, n) = D;
  }
  return T;
}

// Newton polish of a q-fold cluster center on the (q-1)-th derivative.
cplx polish_root(const CPoly& p, cplx center, int q, double diameter) {
  CPoly dp = p;
  for (int i = 0; i < q - 1; ++i) dp = poly_deriv(dp);
  CPoly ddp = poly_deriv(dp);
  cplx z = center;
  double guard = 10.0 * (diameter + 1e-7 * (1.0 + std::abs(center)));
  for (int it = 0; it < 50; ++it) {
    cplx f = poly_eval(dp, z);
    cplx df = poly_eval(ddp, z);
    if (std::abs(df) < 1e-300) break;
    cplx step = f / df;
    z -= step;
    if (std::abs(z - center) > guard) return center;  // ran away: keep mean
    if (std::abs(step) < 1e-14 * (1.0 + std::abs(z))) break;
  }
  return z;
}

// Eigenvalues mu of the matrix polynomial N(i mu) from a Moebius-transformed
// block-companion linearization.  Roots of the scalar determinant scatter
// like eps^(1/multiplicity) under rounding, which the clustering cannot
// absorb once multiplicities grow past ~4; the pencil's eigenvalues scatter
// like eps^(1/chain length) instead.  The map mu = (a z + b)/(z + c) sends
// z = infinity to a point i*a on the real conormal line, where the normal
// operator of an elliptic stack is invertible, so the linearized problem
// keeps an invertible leading block and stays an ordinary eigenproblem.
std::vector<cplx> pencil_roots(const SymbolPoly& N, bool& usable) {
  usable = false;
  int D = N.degree(), n = N.rows();
  if (D <= 0 || n == 0) return {};
  const cplx a = cplx(0.0, -1.3127641321);
  const double b = 0.4, c = 0.9;
  std::vector<CMat> M(D + 1, CMat::Zero(n, n));
  for (int j = 0; j <= D; ++j) {
    // scalar factor (a z + b)^j (z + c)^(D-j)
    CPoly w{cplx(1.0, 0.0)};
    for (int r = 0; r < D; ++r) {
      CPoly nw(w.size() + 1, cplx(0.0, 0.0));
      for (size_t i = 0; i < w.size(); ++i) {
        if (r < j) {
          nw[i] += b * w[i];
          nw[i + 1] += a * w[i];
        } else {
          nw[i] += c * w[i];
          nw[i + 1] += w[i];
        }
      }
      w.swap(nw);
    }
    CMat Bj = std::pow(kI, j) * N.C[j];
    for (int k = 0; k <= D; ++k) M[k] += w[k] * Bj;
  }
  Eigen::JacobiSVD<CMat> lead(M[D]);
  const auto& lsv = lead.singularValues();
  if (lsv(lsv.size() - 1) <= 1e-10 * lsv(0)) return {};
  Eigen::PartialPivLU<CMat> lu(M[D]);
  CMat X = CMat::Zero(n * D, n * D);
  for (int k = 0; k + 1 < D; ++k)
    X.block(k * n, (k + 1) * n, n, n) = CMat::Identity(n, n);
  for (int k = 0; k < D; ++k)
    X.block((D - 1) * n, k * n, n, n) = -lu.solve(M[k]);
  Eigen::ComplexEigenSolver<CMat> eig(X);
  if (eig.info() != Eigen::Success) return {};
  usable = true;
  std::vector<cplx> out;
  for (int i = 0; i < eig.eigenvalues().size(); ++i) {
    cplx z = eig.eigenvalues()(i);
    if (std::abs(z + c) < 1e-9 * (1.0 + std::abs(z))) continue;  // mu infinite
    cplx mu = (a * z + b) / (z + c);
    if (std::abs(mu) > 1e7) continue;
    out.push_back(mu);
  }
  return out;
}

bool walk_phase(const CPoly& p, const std::function<cplx(double)>& path,
                double t0, double t1, cplx v0, cplx v1, int depth,
                double& total) {
  if (std::abs(v0) < 1e-300 || std::abs(v1) < 1e-300) return false;
  double dphi = std::arg(v1 / v0);
  if (std::abs(dphi) <= M_PI / 2) {
    total += dphi;
    return true;
  }
  if (depth >= 40) return false;
  double tm = 0.5 * (t0 + t1);
  cplx vm = poly_eval(p, path(tm));
  return walk_phase(p, path, t0, tm, v0, vm, depth + 1, total) &&
         walk_phase(p, path, tm, t1, vm, v1, depth + 1, total);
}

// Zeros of p strictly inside {|z| < R, Re z < 0} by the argument principle.
int count_zeros_left(const CPoly& p, double R, bool& ok) {
  ok = true;
  double total = 0.0;
  auto leg1 = [R](double t) { return cplx(0.0, -R + 2.0 * R * t); };
  auto leg2 = [R](double t) {
    double th = M_PI / 2 + M_PI * t;
    return cplx(R * std::cos(th), R * std::sin(th));
  };
  const int seed = 32;
  for (int piece = 0; piece < 2; ++piece) {
    std::function<cplx(double)> path = piece == 0
                                           ? std::function<cplx(double)>(leg1)
                                           : std::function<cplx(double)>(leg2);
    for (int i = 0; i < seed; ++i) {
      double t0 = static_cast<double>(i) / seed;
      double t1 = static_cast<double>(i + 1) / seed;
      cplx v0 = poly_eval(p, path(t0));
      cplx v1 = poly_eval(p, path(t1));
      if (!walk_phase(p, path, t0, t1, v0, v1, 0, total)) {
        ok = false;
        return -1;
      }
    }
  }
  double winding = total / (2.0 * M_PI);
  int count = static_cast<int>(std::lround(winding));
  if (std::abs(winding - count) > 0.25) {
    ok = false;
    return -1;
  }
  return count;
}

}  // namespace

double chain_residual(const std::vector<SymbolPoly>& stack,
                      const ChainSolution& sol) {
  SymbolPoly S = stack_symbols(stack);
  int L = static_cast<int>(sol.w.size()) - 1;
  CMat T = chain_matrix(S, sol.mu, L);
  CVec W(T.cols());
  for (int j = 0; j <= L; ++j) W.segment(j * S.cols(), S.cols()) = sol.w[j];
  return (T * W).norm();
}

DecayingSpace decaying_space(const std::vector<SymbolPoly>& stack,
                             const DecayOptions& opt) {
  DecayingSpace out;
  SymbolPoly S = stack_symbols(stack);
  int n = S.cols();
  if (n == 0) return out;

  // Injectivity of the full stack along the real conormal line.
  out.min_sv_on_line = std::numeric_limits<double>::infinity();
  for (double lam : {0.25, 0.5, 1.0, 2.0, 4.0}) {
    for (double sgn : {-1.0, 1.0}) {
      Eigen::JacobiSVD<CMat> svd(S.eval(cplx(sgn * lam, 0.0)));
      double smin = svd.singularValues().size()
                        ? svd.singularValues()(svd.singularValues().size() - 1)
                        : 0.0;
      if (S.rows() < n) smin = 0.0;
      out.min_sv_on_line = std::min(out.min_sv_on_line, smin);
    }
  }
  out.pre_injective_on_line = out.min_sv_on_line > 1e-8;

  // Normal operator and its determinant polynomial in mu.
  SymbolPoly N = SymbolPoly::zero(n, n);
  for (const auto& P : stack) N = N + P.adjoint() * P;
  N.trim();
  out.det_mu = det_poly_mu(N);

  double dtop = 0.0;
  for (const auto& a : out.det_mu) dtop = std::max(dtop, std::abs(a));
  if (static_cast<int>(out.det_mu.size()) <= 1) {
    if (dtop < 1e-12) out.indeterminate = true;  // degenerate system
    return out;
  }

  bool pencil_ok = false;
  std::vector<cplx> roots = pencil_roots(N, pencil_ok);
  if (!pencil_ok) roots = poly_roots(out.det_mu);

  // Single-link clustering of the root cloud.
  int nr = static_cast<int>(roots.size());
  std::vector<int> comp(nr);
  std::iota(comp.begin(), comp.end(), 0);
  std::function<int(int)> find = [&](int a) {
    while (comp[a] != a) a = comp[a] = comp[comp[a]];
    return a;
  };
  for (int a = 0; a < nr; ++a)
    for (int b = a + 1; b < nr; ++b) {
      double tol =
          opt.cluster_rel_tol * (1.0 + std::max(std::abs(roots[a]), std::abs(roots[b])));
      if (std::abs(roots[a] - roots[b]) < tol) comp[find(a)] = find(b);
    }
  std::vector<std::vector<int>> clusters;
  {
    std::vector<int> head(nr, -1);
    for (int a = 0; a < nr; ++a) {
      int r = find(a);
      if (head[r] < 0) {
        head[r] = static_cast<int>(clusters.size());
        clusters.emplace_back();
      }
      clusters[head[r]].push_back(a);
    }
  }

  for (const auto& cl : clusters) {
    int q = static_cast<int>(cl.size());
    cplx center(0.0, 0.0);
    for (int idx : cl) center += roots[idx];
    center /= static_cast<double>(q);
    double diam = 0.0;
    for (int idx : cl) diam = std::max(diam, std::abs(roots[idx] - center));
    cplx mu = polish_root(out.det_mu, center, q, diam);

    double axis = opt.axis_rel_tol * (1.0 + std::abs(mu));
    if (std::abs(mu.real()) < axis) {
      out.indeterminate = true;
      continue;
    }
    if (mu.real() > 0.0) continue;  // growing mode

    out.stable_roots.push_back(mu);
    out.stable_mult.push_back(q);

    int L = q - 1;
    CMat TN = chain_matrix(SymbolPoly(N), mu, L);
    CMat C = kernel_basis(TN, opt.kernel_rel_tol, 1e-12);
    out.normal_route_dim += static_cast<int>(C.cols());
    if (C.cols() == 0) continue;

    CMat TS = chain_matrix(S, mu, L);
    CMat R = TS * C;
    // Keep the subspace of candidates annihilated by the full stack; small
    // singular values of R are exactly the chain residuals of the basis.
    Eigen::JacobiSVD<CMat> svd(R, Eigen::ComputeFullV);
    const auto& sv = svd.singularValues();
    int rank = 0;
    for (int i = 0; i < sv.size(); ++i)
      if (sv(i) > opt.residual_tol) ++rank;
    if (R.rows() == 0) rank = 0;
    CMat K = svd.matrixV().rightCols(C.cols() - rank);
    CMat B = C * K;

    for (int c = 0; c < B.cols(); ++c) {
      ChainSolution sol;
      sol.mu = mu;
      double tot = B.col(c).norm();
      for (int j = 0; j <= L; ++j) sol.w.push_back(B.col(c).segment(j * n, n));
      while (sol.w.size() > 1 && sol.w.back().norm() <= 1e-12 * tot)
        sol.w.pop_back();
      sol.residual = chain_residual(stack, sol);
      if (sol.residual > opt.residual_tol) continue;  // defensive; see filter
      out.max_residual = std::max(out.max_residual, sol.residual);
      out.basis.push_back(std::move(sol));
    }
  }
  out.dim = static_cast<int>(out.basis.size());

  if (opt.contour_check && !out.indeterminate && out.det_mu.size() > 1) {
    double rmax = 0.0;
    for (const auto& r : roots) rmax = std::max(rmax, std::abs(r));
    bool ok = false;
    int cnt = count_zeros_left(out.det_mu, 2.0 * (1.0 + rmax), ok);
    out.contour_stable_count = ok ? cnt : -1;
  }
  return out;
}

}  // namespace pcx
