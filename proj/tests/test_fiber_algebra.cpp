#include <doctest.h>

#include <functional>
#include <vector>

#include "pcx/bianchi.hpp"
#include "pcx/fiber.hpp"
#include "pcx/fiber_ops.hpp"
#include "pcx/metric.hpp"
#include "test_helpers.hpp"

using namespace pcx;
using oracle::DictForm;

namespace {

std::vector<Bidegree> all_bidegrees(int dmax) {
  std::vector<Bidegree> out;
  for (int d = 2; d <= dmax; ++d)
    for (int k = 0; k <= d; ++k)
      for (int m = 0; m <= d; ++m) out.push_back({k, m, d});
  return out;
}

// A degree-shifting operator given by a matrix builder; `compose` applies a
// pipeline left-to-right, collapsing to the zero map whenever an intermediate
// bidegree leaves the valid range (so identities can be tested uniformly).
template <class M>
struct OpStepT {
  int dk, dm;
  std::function<M(const Bidegree&)> build;
};
using OpStep = OpStepT<Mat>;
using COpStep = OpStepT<CMat>;

template <class M>
M compose_t(const Bidegree& src, const std::vector<OpStepT<M>>& steps) {
  Bidegree bd = src;
  M out = M::Identity(src.dim(), src.dim());
  bool dead = false;
  for (const auto& s : steps) {
    Bidegree tgt = bd.shifted(s.dk, s.dm);
    if (!dead) {
      if (!tgt.valid())
        dead = true;
      else
        out = s.build(bd) * out;
    }
    bd = tgt;
  }
  if (dead) return M::Zero(bd.valid() ? bd.dim() : 0, src.dim());
  return out;
}

Mat compose(const Bidegree& src, const std::vector<OpStep>& steps) {
  return compose_t<Mat>(src, steps);
}
CMat ccompose(const Bidegree& src, const std::vector<COpStep>& steps) {
  return compose_t<CMat>(src, steps);
}

OpStep Gop() {
  return {+1, -1, [](const Bidegree& b) { return bianchi_sum(b); }};
}
OpStep GVop() {
  return {-1, +1, [](const Bidegree& b) { return bianchi_sum_V(b); }};
}
OpStep IFop(const Vec& X) {
  return {-1, 0, [X](const Bidegree& b) { return interior_form(b, X); }};
}
OpStep IVop(const Vec& X) {
  return {0, -1, [X](const Bidegree& b) { return interior_vec(b, X); }};
}
OpStep WFop(const Vec& xi) {
  return {+1, 0, [xi](const Bidegree& b) { return wedge_form(b, xi); }};
}
OpStep WVop(const Vec& xi) {
  return {0, +1, [xi](const Bidegree& b) { return wedge_vec(b, xi); }};
}
OpStep TRop() {
  return {-1, -1, [](const Bidegree& b) { return trace_ortho(b); }};
}
OpStep GWop() {
  return {+1, +1, [](const Bidegree& b) { return gwedge_ortho(b); }};
}

COpStep cGop() {
  return {+1, -1, [](const Bidegree& b) { return CMat(bianchi_sum(b).cast<cplx>()); }};
}
COpStep cGVop() {
  return {-1, +1, [](const Bidegree& b) { return CMat(bianchi_sum_V(b).cast<cplx>()); }};
}
COpStep cIFop(const CVec& X) {
  return {-1, 0, [X](const Bidegree& b) { return interior_form_c(b, X); }};
}
COpStep cIVop(const CVec& X) {
  return {0, -1, [X](const Bidegree& b) { return interior_vec_c(b, X); }};
}
COpStep cWFop(const CVec& xi) {
  return {+1, 0, [xi](const Bidegree& b) { return wedge_form_c(b, xi); }};
}
COpStep cWVop(const CVec& xi) {
  return {0, +1, [xi](const Bidegree& b) { return wedge_vec_c(b, xi); }};
}

template <class M>
double max_abs(const M& A) {
  return A.size() == 0 ? 0.0 : A.cwiseAbs().maxCoeff();
}

template <class M>
double diff(const M& A, const M& B) {
  REQUIRE(A.rows() == B.rows());
  REQUIRE(A.cols() == B.cols());
  return max_abs<M>(A - B);
}

}  // namespace

TEST_CASE("multi-index enumeration and pair layout") {
  CHECK(binom(4, 2) == 6);
  CHECK(binom(3, 0) == 1);
  CHECK(binom(3, -1) == 0);
  CHECK(binom(3, 4) == 0);

  const auto& s32 = index_sets(3, 2);
  REQUIRE(s32.size() == 3);
  CHECK(s32[0] == 0b011u);  // (0,1)
  CHECK(s32[1] == 0b101u);  // (0,2)
  CHECK(s32[2] == 0b110u);  // (1,2)
  CHECK(set_rank(3, 2, 0b110u) == 2);

  CHECK(index_sets(3, 0).size() == 1);
  CHECK(index_sets(3, 0)[0] == 0u);

  // I-major flat layout on Lambda^{1,1}, d = 2.
  Bidegree bd{1, 1, 2};
  CHECK(bd.dim() == 4);
  CHECK(pair_index(bd, 0, 0) == 0);
  CHECK(pair_index(bd, 0, 1) == 1);
  CHECK(pair_index(bd, 1, 0) == 2);
  CHECK(pair_index(bd, 1, 1) == 3);

  CHECK(merge_sign(0b001u, 0b010u) == 1);   // dx1 ^ dx2 = +dx12
  CHECK(merge_sign(0b010u, 0b001u) == -1);  // dx2 ^ dx1 = -dx12
  CHECK(merge_sign(0b001u, 0b001u) == 0);
  CHECK(removal_sign(0b111u, 0) == 1);
  CHECK(removal_sign(0b111u, 1) == -1);
  CHECK(removal_sign(0b111u, 2) == 1);
}

TEST_CASE("wedge product matches the monomial oracle") {
  auto& g = oracle::rng(101);
  for (int d = 2; d <= 3; ++d)
    for (int k1 = 0; k1 <= d; ++k1)
      for (int m1 = 0; m1 <= d; ++m1)
        for (int k2 = 0; k2 + k1 <= d; ++k2)
          for (int m2 = 0; m2 + m1 <= d; ++m2) {
            Bidegree b1{k1, m1, d}, b2{k2, m2, d};
            DoubleForm psi = oracle::random_form(b1, g);
            DoubleForm eta = oracle::random_form(b2, g);
            Vec got = wedge_left(psi, b2) * eta.c;
            auto dw = oracle::dict_wedge(oracle::to_dict(psi), oracle::to_dict(eta));
            Vec want = oracle::from_dict(dw);
            CAPTURE(d);
            CAPTURE(k1);
            CAPTURE(m1);
            CAPTURE(k2);
            CAPTURE(m2);
            REQUIRE(got.size() == want.size());
            CHECK(max_abs<Mat>(got - want) <= 1e-13);
          }
}

TEST_CASE("graded commutativity and associativity") {
  auto& g = oracle::rng(202);
  int d = 3;
  for (int k1 = 0; k1 <= 2; ++k1)
    for (int m1 = 0; m1 <= 2; ++m1)
      for (int k2 = 0; k2 + k1 <= d; ++k2)
        for (int m2 = 0; m2 + m1 <= d; ++m2) {
          Bidegree b1{k1, m1, d}, b2{k2, m2, d};
          DoubleForm psi = oracle::random_form(b1, g);
          DoubleForm eta = oracle::random_form(b2, g);
          Vec ab = wedge_left(psi, b2) * eta.c;
          Vec ba = wedge_left(eta, b1) * psi.c;
          double sign = ((k1 * k2 + m1 * m2) % 2 == 0) ? 1.0 : -1.0;
          CAPTURE(k1);
          CAPTURE(m1);
          CAPTURE(k2);
          CAPTURE(m2);
          CHECK(max_abs<Mat>(ab - sign * ba) <= 1e-13);
        }

  // (psi ^ eta) ^ chi == psi ^ (eta ^ chi)
  Bidegree b1{1, 0, 3}, b2{1, 1, 3}, b3{0, 1, 3};
  DoubleForm psi = oracle::random_form(b1, g);
  DoubleForm eta = oracle::random_form(b2, g);
  DoubleForm chi = oracle::random_form(b3, g);
  DoubleForm pe({b1.k + b2.k, b1.m + b2.m, 3}, wedge_left(psi, b2) * eta.c);
  DoubleForm ec({b2.k + b3.k, b2.m + b3.m, 3}, wedge_left(eta, b3) * chi.c);
  Vec left = wedge_left(pe, b3) * chi.c;
  Vec right = wedge_left(psi, ec.bd) * ec.c;
  CHECK(max_abs<Mat>(left - right) <= 1e-13);
}

TEST_CASE("interior products: oracle, antiderivation, slot commutation") {
  auto& g = oracle::rng(303);
  for (const auto& bd : all_bidegrees(3)) {
    if (!bd.valid() || bd.dim() == 0) continue;
    Vec X = oracle::random_vec(bd.d, g);
    Vec Y = oracle::random_vec(bd.d, g);
    DoubleForm psi = oracle::random_form(bd, g);

    if (bd.k >= 1) {
      Vec got = interior_form(bd, X) * psi.c;
      Vec want = oracle::from_dict(oracle::dict_interior_form(oracle::to_dict(psi), X));
      CHECK(max_abs<Mat>(got - want) <= 1e-13);
    }
    if (bd.m >= 1) {
      Vec got = interior_vec(bd, X) * psi.c;
      Vec want = oracle::from_dict(oracle::dict_interior_vec(oracle::to_dict(psi), X));
      CHECK(max_abs<Mat>(got - want) <= 1e-13);
    }

    // i_X i_Y = -i_Y i_X on each slot; the two slots commute.
    Mat a1 = compose(bd, {IFop(X), IFop(Y)}) + compose(bd, {IFop(Y), IFop(X)});
    Mat a2 = compose(bd, {IVop(X), IVop(Y)}) + compose(bd, {IVop(Y), IVop(X)});
    Mat a3 = compose(bd, {IFop(X), IVop(Y)}) - compose(bd, {IVop(Y), IFop(X)});
    CHECK(max_abs<Mat>(a1) <= 1e-13);
    CHECK(max_abs<Mat>(a2) <= 1e-13);
    CHECK(max_abs<Mat>(a3) <= 1e-13);
  }

  // Antiderivation on the form slot: i_X(psi ^ eta) = i_X psi ^ eta + (-1)^k1 psi ^ i_X eta.
  Bidegree b1{1, 1, 3}, b2{1, 1, 3};
  auto psi = oracle::random_form(b1, oracle::rng());
  Vec X = oracle::random_vec(3, oracle::rng());
  Bidegree comb{2, 2, 3};
  Mat lhs = interior_form(comb, X) * wedge_left(psi, b2);
  DoubleForm ipsi({0, 1, 3}, interior_form(b1, X) * psi.c);
  Mat rhs = wedge_left(ipsi, b2) - wedge_left(psi, Bidegree{0, 1, 3}) * interior_form(b2, X);
  CHECK(diff<Mat>(lhs, rhs) <= 1e-13);
}

TEST_CASE("involution: isometry, wedge homomorphism, slot swap") {
  auto& g = oracle::rng(404);
  for (const auto& bd : all_bidegrees(3)) {
    if (!bd.valid() || bd.dim() == 0) continue;
    Mat T = involution(bd);
    Mat Tback = involution(bd.transposed());
    CHECK(diff<Mat>(Tback * T, Mat::Identity(bd.dim(), bd.dim())) == 0.0);
    CHECK(diff<Mat>(Mat(T.transpose() * T), Mat::Identity(bd.dim(), bd.dim())) == 0.0);

    // T i_X T = i^V_X
    if (bd.m >= 1) {
      Vec X = oracle::random_vec(bd.d, g);
      Mat lhs = involution({bd.m - 1, bd.k, bd.d}) * interior_form(bd.transposed(), X) * T;
      Mat rhs = interior_vec(bd, X);
      CHECK(diff<Mat>(lhs, rhs) <= 1e-13);
    }
  }

  // (psi ^ eta)^T = psi^T ^ eta^T
  Bidegree b1{1, 0, 3}, b2{1, 1, 3};
  DoubleForm psi = oracle::random_form(b1, g);
  DoubleForm eta = oracle::random_form(b2, g);
  Bidegree comb{2, 1, 3};
  Vec lhs = involution(comb) * (wedge_left(psi, b2) * eta.c);
  DoubleForm psiT(b1.transposed(), involution(b1) * psi.c);
  DoubleForm etaT(b2.transposed(), involution(b2) * eta.c);
  Vec rhs = wedge_left(psiT, etaT.bd) * etaT.c;
  CHECK(max_abs<Mat>(lhs - rhs) <= 1e-13);
}

TEST_CASE("fundamental sum operator: oracle agreement and frozen values") {
  auto& g = oracle::rng(505);
  for (const auto& bd : all_bidegrees(4)) {
    if (!bd.valid() || bd.dim() == 0) continue;
    if (!bd.shifted(1, -1).valid()) continue;
    DoubleForm psi = oracle::random_form(bd, g);
    Vec got = bianchi_sum(bd) * psi.c;
    Vec want = oracle::from_dict(oracle::dict_bianchi_sum(oracle::to_dict(psi)));
    CAPTURE(bd.k);
    CAPTURE(bd.m);
    CAPTURE(bd.d);
    REQUIRE(got.size() == want.size());
    CHECK(max_abs<Mat>(got - want) <= 1e-13);
  }

  // Frozen: on theta^1 (x) theta^2 in d = 2 the operator gives -theta^12 (x) 1.
  Bidegree b11{1, 1, 2};
  DoubleForm f(b11);
  f.at(0b01u, 0b10u) = 1.0;
  Vec out = bianchi_sum(b11) * f.c;
  REQUIRE(out.size() == 1);
  CHECK(out[0] == doctest::Approx(-1.0).epsilon(1e-14));

  // Transpose duality: the V-variant is the adjoint in the orthonormal frame.
  for (const auto& bd : all_bidegrees(4)) {
    if (!bd.valid() || bd.dim() == 0) continue;
    Bidegree up = bd.shifted(1, -1);
    if (!up.valid()) continue;
    CHECK(diff<Mat>(Mat(bianchi_sum(bd).transpose()), bianchi_sum_V(up)) <= 1e-14);
  }
}

TEST_CASE("commutator and anticommutator relations") {
  auto& g = oracle::rng(606);
  for (const auto& bd : all_bidegrees(4)) {
    if (!bd.valid() || bd.dim() == 0) continue;
    CAPTURE(bd.k);
    CAPTURE(bd.m);
    CAPTURE(bd.d);
    int n = bd.dim();
    Vec X = oracle::random_vec(bd.d, g);
    Vec xi = oracle::random_vec(bd.d, g);

    // [G, G_V] = (k - m) Id
    Mat comm = compose(bd, {GVop(), Gop()}) - compose(bd, {Gop(), GVop()});
    CHECK(diff<Mat>(comm, Mat((bd.k - bd.m) * Mat::Identity(n, n))) <= 1e-12);

    // {G, i_X} = i^V_X   and   {G, i^V_X} = 0
    Mat ac1 = compose(bd, {IFop(X), Gop()}) + compose(bd, {Gop(), IFop(X)});
    CHECK(diff<Mat>(ac1, compose(bd, {IVop(X)})) <= 1e-12);
    Mat ac2 = compose(bd, {IVop(X), Gop()}) + compose(bd, {Gop(), IVop(X)});
    CHECK(max_abs<Mat>(ac2) <= 1e-12);

    // {G_V, i^V_X} = i_X   and   {G_V, i_X} = 0
    Mat ac3 = compose(bd, {IVop(X), GVop()}) + compose(bd, {GVop(), IVop(X)});
    CHECK(diff<Mat>(ac3, compose(bd, {IFop(X)})) <= 1e-12);
    Mat ac4 = compose(bd, {IFop(X), GVop()}) + compose(bd, {GVop(), IFop(X)});
    CHECK(max_abs<Mat>(ac4) <= 1e-12);

    // Wedge-side duals (these drive the corrected-differential symbols):
    // {G, xi ^ .} = 0, {G, xi_V ^ .} = xi ^ ., {G_V, xi ^ .} = xi_V ^ ., {G_V, xi_V ^ .} = 0
    Mat w1 = compose(bd, {WFop(xi), Gop()}) + compose(bd, {Gop(), WFop(xi)});
    CHECK(max_abs<Mat>(w1) <= 1e-12);
    Mat w2 = compose(bd, {WVop(xi), Gop()}) + compose(bd, {Gop(), WVop(xi)});
    CHECK(diff<Mat>(w2, compose(bd, {WFop(xi)})) <= 1e-12);
    Mat w3 = compose(bd, {WFop(xi), GVop()}) + compose(bd, {GVop(), WFop(xi)});
    CHECK(diff<Mat>(w3, compose(bd, {WVop(xi)})) <= 1e-12);
    Mat w4 = compose(bd, {WVop(xi), GVop()}) + compose(bd, {GVop(), WVop(xi)});
    CHECK(max_abs<Mat>(w4) <= 1e-12);

    // Metric wedge/trace commute with the sum operator (orthonormal frame).
    Mat c1 = compose(bd, {GWop(), Gop()}) - compose(bd, {Gop(), GWop()});
    CHECK(max_abs<Mat>(c1) <= 1e-12);
    Mat c2 = compose(bd, {TRop(), Gop()}) - compose(bd, {Gop(), TRop()});
    CHECK(max_abs<Mat>(c2) <= 1e-12);
    Mat c3 = compose(bd, {GWop(), GVop()}) - compose(bd, {GVop(), GWop()});
    CHECK(max_abs<Mat>(c3) <= 1e-12);
    Mat c4 = compose(bd, {TRop(), GVop()}) - compose(bd, {GVop(), TRop()});
    CHECK(max_abs<Mat>(c4) <= 1e-12);

    // Adjoint pairs in the orthonormal frame.
    if (bd.shifted(1, 0).valid())
      CHECK(diff<Mat>(Mat(wedge_form(bd, xi).transpose()),
                      interior_form(bd.shifted(1, 0), xi)) <= 1e-14);
    if (bd.shifted(1, 1).valid())
      CHECK(diff<Mat>(Mat(gwedge_ortho(bd).transpose()),
                      trace_ortho(bd.shifted(1, 1))) <= 1e-14);
  }

  // Frozen spot check: on Lambda^{1,0}, d = 2, [G, G_V] = +Id.
  Bidegree b10{1, 0, 2};
  Mat comm = compose(b10, {GVop(), Gop()}) - compose(b10, {Gop(), GVop()});
  CHECK(diff<Mat>(comm, Mat(Mat::Identity(2, 2))) <= 1e-14);
}

TEST_CASE("product rule for the sum operator") {
  auto& g = oracle::rng(707);
  struct Case {
    Bidegree b1, b2;
  };
  std::vector<Case> cases = {
      {{1, 1, 3}, {1, 1, 3}},
      {{1, 1, 3}, {0, 1, 3}},
      {{0, 1, 3}, {1, 1, 3}},
      {{1, 2, 4}, {1, 1, 4}},
  };
  for (const auto& cs : cases) {
    DoubleForm psi = oracle::random_form(cs.b1, g);
    Bidegree comb{cs.b1.k + cs.b2.k, cs.b1.m + cs.b2.m, cs.b1.d};
    REQUIRE(comb.valid());
    REQUIRE(comb.shifted(1, -1).valid());
    Mat lhs = bianchi_sum(comb) * wedge_left(psi, cs.b2);

    Mat rhs = Mat::Zero(comb.shifted(1, -1).dim(), cs.b2.dim());
    if (cs.b1.shifted(1, -1).valid()) {
      DoubleForm gpsi(cs.b1.shifted(1, -1), bianchi_sum(cs.b1) * psi.c);
      rhs += wedge_left(gpsi, cs.b2);
    }
    if (cs.b2.shifted(1, -1).valid()) {
      double sign = ((cs.b1.k + cs.b1.m) % 2 == 0) ? 1.0 : -1.0;
      rhs += sign * wedge_left(psi, cs.b2.shifted(1, -1)) * bianchi_sum(cs.b2);
    }
    CHECK(diff<Mat>(lhs, rhs) <= 1e-12);
  }
}

TEST_CASE("hodge star and trace in the orthonormal frame") {
  // d = 2 frozen: *theta^1 = theta^2, *theta^2 = -theta^1 (form slot).
  Mat H = hodge_form_ortho({1, 0, 2});
  REQUIRE(H.rows() == 2);
  CHECK(H(1, 0) == doctest::Approx(1.0));
  CHECK(H(0, 0) == doctest::Approx(0.0));
  CHECK(H(0, 1) == doctest::Approx(-1.0));
  CHECK(H(1, 1) == doctest::Approx(0.0));

  for (const auto& bd : all_bidegrees(4)) {
    if (!bd.valid() || bd.dim() == 0) continue;
    Mat h1 = hodge_form_ortho(bd);
    Mat h2 = hodge_form_ortho({bd.d - bd.k, bd.m, bd.d});
    double sign = ((bd.k * (bd.d - bd.k)) % 2 == 0) ? 1.0 : -1.0;
    CHECK(diff<Mat>(Mat(h2 * h1), Mat(sign * Mat::Identity(bd.dim(), bd.dim()))) <= 1e-14);
    // Isometry.
    CHECK(diff<Mat>(Mat(h1.transpose() * h1), Mat(Mat::Identity(bd.dim(), bd.dim()))) <=
          1e-14);
    // Vector-slot star via involution conjugation agrees.
    Mat hv = hodge_vec_ortho(bd);
    Mat hv2 = hodge_vec_ortho({bd.k, bd.d - bd.m, bd.d});
    double sv = ((bd.m * (bd.d - bd.m)) % 2 == 0) ? 1.0 : -1.0;
    CHECK(diff<Mat>(Mat(hv2 * hv), Mat(sv * Mat::Identity(bd.dim(), bd.dim()))) <= 1e-14);
  }

  // Trace of the metric itself: tr sum_a theta^a (x) theta^a = d.
  for (int d = 2; d <= 4; ++d) {
    Bidegree b11{1, 1, d};
    DoubleForm gform(b11);
    for (int a = 0; a < d; ++a) gform.at(IndexMask(1) << a, IndexMask(1) << a) = 1.0;
    Vec tr = trace_ortho(b11) * gform.c;
    REQUIRE(tr.size() == 1);
    CHECK(tr[0] == doctest::Approx(double(d)).epsilon(1e-14));
  }
}

TEST_CASE("metric frame maps and coordinate operators") {
  auto& g = oracle::rng(808);
  for (int d = 2; d <= 3; ++d) {
    Mat gm = oracle::random_spd(d, g);
    MetricAtPoint mp = MetricAtPoint::from(gm);

    // Orthonormality of the coframe: R g^{-1} R^T = Id.
    CHECK(diff<Mat>(Mat(mp.R * mp.ginv * mp.R.transpose()), Mat(Mat::Identity(d, d))) <=
          1e-12);
    CHECK(mp.sqrt_det == doctest::Approx(std::sqrt(gm.determinant())).epsilon(1e-12));

    // Compound multiplicativity.
    Mat A = oracle::random_spd(d, g), B = oracle::random_spd(d, g);
    for (int k = 0; k <= d; ++k)
      CHECK(diff<Mat>(compound(A * B, k), Mat(compound(A, k) * compound(B, k))) <= 1e-10);

    for (int k = 0; k <= d; ++k)
      for (int m = 0; m <= d; ++m) {
        Bidegree bd{k, m, d};
        // Gram matrix against the minor-determinant formula.
        Mat G = gram(mp, bd);
        auto pairs = basis_pairs(bd);
        for (std::size_t p = 0; p < pairs.size(); ++p)
          for (std::size_t q = 0; q < pairs.size(); ++q) {
            double want =
                oracle::minor_det(mp.ginv, mask_indices(pairs[p].I), mask_indices(pairs[q].I)) *
                oracle::minor_det(mp.ginv, mask_indices(pairs[p].J), mask_indices(pairs[q].J));
            CHECK(G(static_cast<int>(p), static_cast<int>(q)) ==
                  doctest::Approx(want).epsilon(1e-10));
          }

        // frame_map_inv really inverts frame_map.
        CHECK(diff<Mat>(Mat(frame_map_inv(mp, bd) * frame_map(mp, bd)),
                        Mat(Mat::Identity(bd.dim(), bd.dim()))) <= 1e-11);

        // The sum operator is metric-free: conjugating to coordinates is a no-op.
        Bidegree up = bd.shifted(1, -1);
        if (up.valid() && bd.dim() > 0)
          CHECK(diff<Mat>(to_coords(mp, bd, up, bianchi_sum(bd)), bianchi_sum(bd)) <= 1e-10);

        if (bd.dim() == 0) continue;

        // Adjointness of metric wedge and trace under the Gram inner product.
        Bidegree upw = bd.shifted(1, 1);
        if (upw.valid()) {
          Mat GW = gwedge_coord(mp, bd);
          Mat TR = trace_coord(mp, upw);
          CHECK(diff<Mat>(Mat(GW.transpose() * gram(mp, upw)), Mat(gram(mp, bd) * TR)) <=
                1e-10);
        }

        // Adjointness of covector wedge and sharped interior product.
        Bidegree upf = bd.shifted(1, 0);
        if (upf.valid()) {
          Vec xi = oracle::random_vec(d, g);
          Mat W = wedge_form(bd, xi);
          Mat I = interior_sharp_form(mp, upf, xi);
          CHECK(diff<Mat>(Mat(W.transpose() * gram(mp, upf)), Mat(gram(mp, bd) * I)) <= 1e-10);
        }

        // Coordinate Hodge star: double application sign and isometry.
        Mat h1 = hodge_form_coord(mp, bd);
        Mat h2 = hodge_form_coord(mp, {d - k, m, d});
        double sign = ((k * (d - k)) % 2 == 0) ? 1.0 : -1.0;
        CHECK(diff<Mat>(Mat(h2 * h1), Mat(sign * Mat::Identity(bd.dim(), bd.dim()))) <= 1e-10);
        Bidegree hb{d - k, m, d};
        CHECK(diff<Mat>(Mat(h1.transpose() * gram(mp, hb) * h1), gram(mp, bd)) <= 1e-9);
      }

    // Coordinate trace of the metric double form equals d.
    Bidegree b11{1, 1, d};
    DoubleForm gf(b11);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) gf.at(IndexMask(1) << i, IndexMask(1) << j) = gm(i, j);
    Vec tr = trace_coord(mp, b11) * gf.c;
    REQUIRE(tr.size() == 1);
    CHECK(tr[0] == doctest::Approx(double(d)).epsilon(1e-11));
  }
}

TEST_CASE("complex-scalar variants satisfy the same identities") {
  auto& g = oracle::rng(909);
  for (const auto& bd : all_bidegrees(3)) {
    if (!bd.valid() || bd.dim() == 0) continue;
    CVec Z = oracle::random_cvec(bd.d, g);
    CVec zeta = oracle::random_cvec(bd.d, g);
    CAPTURE(bd.k);
    CAPTURE(bd.m);

    CMat ac1 = ccompose(bd, {cIFop(Z), cGop()}) + ccompose(bd, {cGop(), cIFop(Z)});
    CHECK(diff<CMat>(ac1, ccompose(bd, {cIVop(Z)})) <= 1e-12);
    CMat ac2 = ccompose(bd, {cIVop(Z), cGop()}) + ccompose(bd, {cGop(), cIVop(Z)});
    CHECK(max_abs<CMat>(ac2) <= 1e-12);
    CMat ac3 = ccompose(bd, {cIVop(Z), cGVop()}) + ccompose(bd, {cGVop(), cIVop(Z)});
    CHECK(diff<CMat>(ac3, ccompose(bd, {cIFop(Z)})) <= 1e-12);
    CMat w2 = ccompose(bd, {cWVop(zeta), cGop()}) + ccompose(bd, {cGop(), cWVop(zeta)});
    CHECK(diff<CMat>(w2, ccompose(bd, {cWFop(zeta)})) <= 1e-12);

    // Complex wedge against the complex monomial oracle.
    CDoubleForm psi = oracle::random_cform(bd, g);
    for (int k2 = 0; k2 + bd.k <= bd.d; ++k2)
      for (int m2 = 0; m2 + bd.m <= bd.d; ++m2) {
        Bidegree b2{k2, m2, bd.d};
        CDoubleForm eta = oracle::random_cform(b2, g);
        CVec got = oracle::wedge_left_c(psi, b2) * eta.c;
        auto dw = oracle::dict_wedge(oracle::to_dict(psi), oracle::to_dict(eta));
        CVec want = oracle::from_dict(dw);
        CHECK(max_abs<CMat>(got - want) <= 1e-13);
      }
  }
}

TEST_CASE("bianchi projector: SVD oracle, idempotence, dimensions") {
  for (const auto& bd : all_bidegrees(4)) {
    if (!bd.valid() || bd.dim() == 0) continue;
    CAPTURE(bd.k);
    CAPTURE(bd.m);
    CAPTURE(bd.d);
    int n = bd.dim();
    Mat P = bianchi_projector_ortho(bd);

    // Reference: orthogonal projector onto the kernel of the defining
    // constraints, computed by a rank-revealing SVD.
    Mat G = bianchi_sum(bd);
    Mat GV = bianchi_sum_V(bd);
    Mat S;
    if (bd.k > bd.m)
      S = G;
    else if (bd.k < bd.m)
      S = GV;
    else {
      S = Mat(G.rows() + GV.rows(), n);
      S.topRows(G.rows()) = G;
      S.bottomRows(GV.rows()) = GV;
    }
    Mat Pref = oracle::null_projector(S, n);
    CHECK(diff<Mat>(P, Pref) <= 1e-10);

    CHECK(diff<Mat>(Mat(P * P), P) <= 1e-12);
    CHECK(diff<Mat>(Mat(P.transpose()), P) <= 1e-12);

    // Involution conjugation maps the projector to the transposed bidegree.
    Mat T = involution(bd);
    Mat Tb = involution(bd.transposed());
    CHECK(diff<Mat>(Mat(T * P * Tb), bianchi_projector_ortho(bd.transposed())) <= 1e-10);

    // Dimension formula (k <= m side): C(d,k)C(d,m) - C(d,k-1)C(d,m+1).
    int k = std::min(bd.k, bd.m), m = std::max(bd.k, bd.m);
    int want = binom(bd.d, k) * binom(bd.d, m) - binom(bd.d, k - 1) * binom(bd.d, m + 1);
    CHECK(std::lround(P.trace()) == want);
    CHECK(bianchi_dim(bd) == want);

    // On square bidegrees the projector lands inside the symmetric forms.
    if (bd.k == bd.m) CHECK(diff<Mat>(Mat(T * P), P) <= 1e-10);

    // Basis: orthonormal, spans the projector range.
    Mat Q = bianchi_onb(bd);
    CHECK(static_cast<int>(Q.cols()) == want);
    if (Q.cols() > 0) {
      CHECK(diff<Mat>(Mat(Q.transpose() * Q), Mat(Mat::Identity(Q.cols(), Q.cols()))) <=
            1e-12);
      CHECK(diff<Mat>(Mat(P * Q), Q) <= 1e-10);
    }
  }

  // Frozen dimensions.
  CHECK(bianchi_dim({1, 1, 2}) == 3);
  CHECK(bianchi_dim({2, 2, 2}) == 1);
  CHECK(bianchi_dim({1, 1, 3}) == 6);
  CHECK(bianchi_dim({2, 2, 3}) == 6);
  CHECK(bianchi_dim({1, 2, 3}) == 8);
  CHECK(bianchi_dim({2, 2, 4}) == 20);
  CHECK(bianchi_dim({0, 1, 3}) == 3);

  // Frozen projection: the square-bidegree projector symmetrizes theta^1 (x) theta^2.
  Bidegree b11{1, 1, 2};
  DoubleForm f(b11);
  f.at(0b01u, 0b10u) = 1.0;
  Vec p = bianchi_projector_ortho(b11) * f.c;
  DoubleForm want(b11);
  want.at(0b01u, 0b10u) = 0.5;
  want.at(0b10u, 0b01u) = 0.5;
  CHECK(max_abs<Mat>(p - want.c) <= 1e-12);

  // Symmetric basis dimension.
  CHECK(symmetric_onb({1, 1, 3}).cols() == 6);
  CHECK(symmetric_onb({2, 2, 3}).cols() == 6);
}

TEST_CASE("explicit projection formulas on wedge and interior images") {
  auto& g = oracle::rng(1111);

  // k < m: P(xi ^ psi) = xi ^ psi - (1/alpha(m,k)) G (xi_V ^ psi) for psi Bianchi.
  std::vector<Bidegree> lows = {{0, 1, 2}, {0, 1, 3}, {1, 2, 3}, {0, 2, 3}, {1, 2, 4}};
  for (const auto& bd : lows) {
    REQUIRE(bd.k < bd.m);
    Mat Q = bianchi_onb(bd);
    REQUIRE(Q.cols() > 0);
    Vec psi = Q * oracle::random_vec(static_cast<int>(Q.cols()), g);
    Vec xi = oracle::random_vec(bd.d, g);
    Bidegree up = bd.shifted(1, 0);
    Vec wpsi = wedge_form(bd, xi) * psi;
    Vec lhs = bianchi_projector_ortho(up) * wpsi;
    Vec corr = bianchi_sum(bd.shifted(0, 1)) * (wedge_vec(bd, xi) * psi);
    Vec rhs = wpsi - corr / double(alpha_const(bd.m, bd.k));
    CAPTURE(bd.k);
    CAPTURE(bd.m);
    CAPTURE(bd.d);
    CHECK(max_abs<Mat>(lhs - rhs) <= 1e-11);
  }

  // k > m: P(i_X psi) = i_X psi - (1/alpha(k,m)) G_V (i^V_X psi).
  std::vector<Bidegree> highs = {{1, 0, 2}, {2, 1, 3}, {2, 0, 3}, {2, 1, 4}, {3, 1, 4}};
  for (const auto& bd : highs) {
    REQUIRE(bd.k > bd.m);
    Mat Q = bianchi_onb(bd);
    REQUIRE(Q.cols() > 0);
    Vec psi = Q * oracle::random_vec(static_cast<int>(Q.cols()), g);
    Vec X = oracle::random_vec(bd.d, g);
    Bidegree dn = bd.shifted(-1, 0);
    Vec ipsi = interior_form(bd, X) * psi;
    Vec lhs = bianchi_projector_ortho(dn) * ipsi;
    Vec rhs = ipsi;
    if (bd.m >= 1) {
      Vec corr = bianchi_sum_V(bd.shifted(0, -1)) * (interior_vec(bd, X) * psi);
      rhs -= corr / double(alpha_const(bd.k, bd.m));
    }
    CAPTURE(bd.k);
    CAPTURE(bd.m);
    CAPTURE(bd.d);
    CHECK(max_abs<Mat>(lhs - rhs) <= 1e-11);
  }
}
