#include "pcx/symbol.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <complex>
#include <stdexcept>

namespace pcx {

namespace {
const cplx kI(0.0, 1.0);
}

CMat SymbolPoly::eval(cplx t) const {
  if (C.empty()) return CMat();
  CMat acc = CMat::Zero(C[0].rows(), C[0].cols());
  // Horner from the top coefficient.
  for (int j = degree(); j >= 0; --j) acc = acc * t + C[j];
  return acc;
}

CMat SymbolPoly::eval_deriv_mu(cplx mu, int r) const {
  if (C.empty()) return CMat();
  CMat acc = CMat::Zero(C[0].rows(), C[0].cols());
  for (int j = r; j <= degree(); ++j) {
    double fall = 1.0;
    for (int q = 0; q < r; ++q) fall *= static_cast<double>(j - q);
    acc += C[j] * (std::pow(kI, j) * fall * std::pow(mu, j - r));
  }
  return acc;
}

SymbolPoly SymbolPoly::adjoint() const {
  std::vector<CMat> out;
  out.reserve(C.size());
  for (const auto& c : C) out.push_back(c.adjoint());
  return SymbolPoly(std::move(out));
}

SymbolPoly SymbolPoly::operator+(const SymbolPoly& o) const {
  std::vector<CMat> out(std::max(C.size(), o.C.size()),
                        CMat::Zero(rows(), cols()));
  for (size_t j = 0; j < out.size(); ++j) {
    if (j < C.size()) out[j] += C[j];
    if (j < o.C.size()) out[j] += o.C[j];
  }
  return SymbolPoly(std::move(out));
}

SymbolPoly SymbolPoly::operator-(const SymbolPoly& o) const {
  return *this + o.scaled(cplx(-1.0, 0.0));
}

SymbolPoly SymbolPoly::operator*(const SymbolPoly& o) const {
  if (cols() != o.rows()) throw std::invalid_argument("symbol compose shape");
  std::vector<CMat> out(C.size() + o.C.size() - 1,
                        CMat::Zero(rows(), o.cols()));
  for (size_t a = 0; a < C.size(); ++a)
    for (size_t b = 0; b < o.C.size(); ++b) out[a + b] += C[a] * o.C[b];
  return SymbolPoly(std::move(out));
}

SymbolPoly SymbolPoly::scaled(cplx a) const {
  std::vector<CMat> out;
  out.reserve(C.size());
  for (const auto& c : C) out.push_back(a * c);
  return SymbolPoly(std::move(out));
}

SymbolPoly SymbolPoly::restricted(const CMat& Qtgt, const CMat& Qsrc) const {
  std::vector<CMat> out;
  out.reserve(C.size());
  for (const auto& c : C) out.push_back(Qtgt.adjoint() * c * Qsrc);
  return SymbolPoly(std::move(out));
}

SymbolPoly SymbolPoly::left(const CMat& A) const {
  std::vector<CMat> out;
  out.reserve(C.size());
  for (const auto& c : C) out.push_back(A * c);
  return SymbolPoly(std::move(out));
}

SymbolPoly SymbolPoly::right(const CMat& B) const {
  std::vector<CMat> out;
  out.reserve(C.size());
  for (const auto& c : C) out.push_back(c * B);
  return SymbolPoly(std::move(out));
}

CMat kron_id(const CMat& A, int r) {
  CMat big = CMat::Zero(A.rows() * r, A.cols() * r);
  CMat id = CMat::Identity(r, r);
  for (int i = 0; i < A.rows(); ++i)
    for (int j = 0; j < A.cols(); ++j) big.block(i * r, j * r, r, r) = A(i, j) * id;
  return big;
}

SymbolPoly SymbolPoly::kron_identity(int r) const {
  std::vector<CMat> out;
  out.reserve(C.size());
  for (const auto& c : C) out.push_back(kron_id(c, r));
  return SymbolPoly(std::move(out));
}

void SymbolPoly::trim(double rel_tol) {
  double top = 0.0;
  for (const auto& c : C) top = std::max(top, c.cwiseAbs().maxCoeff());
  double cut = rel_tol * (top > 0 ? top : 1.0);
  while (C.size() > 1 && C.back().cwiseAbs().maxCoeff() <= cut) C.pop_back();
}

SymbolPoly stack_symbols(const std::vector<SymbolPoly>& ops) {
  if (ops.empty()) throw std::invalid_argument("empty symbol stack");
  int cols = ops[0].cols();
  int deg = 0;
  int rows = 0;
  for (const auto& p : ops) {
    if (p.cols() != cols) throw std::invalid_argument("stack domain mismatch");
    deg = std::max(deg, p.degree());
    rows += p.rows();
  }
  std::vector<CMat> out(deg + 1, CMat::Zero(rows, cols));
  int at = 0;
  for (const auto& p : ops) {
    for (int j = 0; j <= p.degree(); ++j)
      out[j].block(at, 0, p.rows(), cols) = p.C[j];
    at += p.rows();
  }
  return SymbolPoly(std::move(out));
}

cplx poly_eval(const CPoly& p, cplx x) {
  cplx acc(0.0, 0.0);
  for (int j = static_cast<int>(p.size()) - 1; j >= 0; --j) acc = acc * x + p[j];
  return acc;
}

CPoly poly_deriv(const CPoly& p) {
  if (p.size() <= 1) return {cplx(0.0, 0.0)};
  CPoly d(p.size() - 1);
  for (size_t j = 1; j < p.size(); ++j) d[j - 1] = static_cast<double>(j) * p[j];
  return d;
}

void poly_trim(CPoly& p, double rel_tol) {
  double top = 0.0;
  for (const auto& a : p) top = std::max(top, std::abs(a));
  double cut = rel_tol * (top > 0 ? top : 1.0);
  while (p.size() > 1 && std::abs(p.back()) <= cut) p.pop_back();
}

std::vector<cplx> poly_roots(const CPoly& p_in) {
  CPoly p = p_in;
  poly_trim(p, 1e-12);
  int n = static_cast<int>(p.size()) - 1;
  if (n <= 0) return {};
  CMat comp = CMat::Zero(n, n);
  for (int i = 1; i < n; ++i) comp(i, i - 1) = 1.0;
  for (int i = 0; i < n; ++i) comp(i, n - 1) = -p[i] / p[n];
  Eigen::ComplexEigenSolver<CMat> es(comp, /*computeEigenvectors=*/false);
  std::vector<cplx> roots(n);
  for (int i = 0; i < n; ++i) roots[i] = es.eigenvalues()(i);
  return roots;
}

CPoly det_poly_mu(const SymbolPoly& N, double radius) {
  if (N.rows() != N.cols()) throw std::invalid_argument("det of non-square symbol");
  int n = N.rows();
  if (n == 0) return {cplx(1.0, 0.0)};
  int D = N.degree() * n;  // degree bound for det(N(i mu)) in mu
  int M = D + 1;
  std::vector<cplx> vals(M);
  for (int l = 0; l < M; ++l) {
    cplx mu = radius * std::exp(kI * (2.0 * M_PI * l / M));
    vals[l] = N.eval(kI * mu).determinant();
  }
  CPoly out(M);
  for (int k = 0; k < M; ++k) {
    cplx acc(0.0, 0.0);
    for (int l = 0; l < M; ++l)
      acc += vals[l] * std::exp(-kI * (2.0 * M_PI * l * k / M));
    out[k] = acc / (static_cast<double>(M) * std::pow(cplx(radius, 0.0), k));
  }
  poly_trim(out, 1e-9);
  return out;
}

}  // namespace pcx
