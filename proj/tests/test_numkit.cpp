#include "fisherbound/numkit.hpp"

#include <cmath>

#include "doctest.h"
#include "helpers.hpp"

using namespace fisherbound;

TEST_CASE("solve_spd on diagonal and identity systems") {
  SymMatrix d = SymMatrix::diagonal({2.0, 4.0});
  RealVector x = solve_spd(d, {1.0, 1.0});
  CHECK(x[0] == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(x[1] == doctest::Approx(0.25).epsilon(1e-14));

  SymMatrix eye = SymMatrix::identity(3);
  RealVector y = solve_spd(eye, {3.0, -1.0, 2.0});
  CHECK(y[0] == doctest::Approx(3.0));
  CHECK(y[1] == doctest::Approx(-1.0));
  CHECK(y[2] == doctest::Approx(2.0));
}

TEST_CASE("solve_spd 2x2 against the hand inverse") {
  // [[2,1],[1,2]]^-1 (1,0) = (2/3, -1/3)
  SymMatrix a(2);
  a.set(0, 0, 2.0);
  a.set(0, 1, 1.0);
  a.set(1, 1, 2.0);
  RealVector x = solve_spd(a, {1.0, 0.0});
  CHECK(x[0] == doctest::Approx(2.0 / 3.0).epsilon(1e-14));
  CHECK(x[1] == doctest::Approx(-1.0 / 3.0).epsilon(1e-14));
}

TEST_CASE("solve_spd residual on random SPD systems up to order 12") {
  Rng rng(42);
  for (int order = 1; order <= 12; ++order) {
    for (int rep = 0; rep < 5; ++rep) {
      SymMatrix a = testutil::random_spd(order, rng);
      RealVector rhs(order);
      for (double& v : rhs) v = 2.0 * rng.uniform01() - 1.0;
      RealVector x = solve_spd(a, rhs);
      RealVector ax = testutil::sym_mul(a, x);
      double resid = 0.0;
      for (int i = 0; i < order; ++i) resid = std::max(resid, std::abs(ax[i] - rhs[i]));
      CHECK(resid <= 1e-10 * (1.0 + testutil::max_abs(rhs)));
    }
  }
}

TEST_CASE("solve_spd error paths") {
  SymMatrix a(2);
  a.set(0, 0, 1.0);
  a.set(0, 1, 2.0);
  a.set(1, 1, 1.0);  // eigenvalues 3, -1
  CHECK_THROWS_AS(solve_spd(a, {1.0, 1.0}), NotPositiveDefinite);

  SymMatrix ok = SymMatrix::identity(2);
  CHECK_THROWS_AS(solve_spd(ok, {1.0, 1.0, 1.0}), DimensionMismatch);

  SymMatrix neg(2);
  neg.set(0, 0, -1.0);
  neg.set(1, 1, 1.0);
  CHECK_THROWS_AS(solve_spd(neg, {1.0, 1.0}), NotPositiveDefinite);
}

TEST_CASE("jitter rescues a singular but nonnegative matrix") {
  SymMatrix a(2);
  a.set(0, 0, 1.0);
  a.set(0, 1, 1.0);
  a.set(1, 1, 1.0);  // rank one
  SpdSolveInfo info;
  RealVector x = solve_spd(a, {1.0, 1.0}, &info);
  CHECK(info.jitter > 0.0);
  CHECK(std::isfinite(x[0]));
  // solution of the jittered system still reproduces the rhs closely
  RealVector ax = testutil::sym_mul(a, x);
  CHECK(ax[0] == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("quad_form_inv examples") {
  SymMatrix eye = SymMatrix::identity(2);
  SymMatrix r1 = quad_form_inv(eye, Matrix::column({1.0, 1.0}));
  CHECK(r1.order() == 1);
  CHECK(r1(0, 0) == doctest::Approx(2.0).epsilon(1e-14));

  SymMatrix d = SymMatrix::diagonal({4.0, 1.0});
  CHECK(quad_form_inv(d, Matrix::column({2.0, 0.0}))(0, 0) == doctest::Approx(1.0).epsilon(1e-14));

  SymMatrix a(2);
  a.set(0, 0, 2.0);
  a.set(0, 1, 1.0);
  a.set(1, 1, 2.0);
  CHECK(quad_form_inv(a, Matrix::column({1.0, 1.0}))(0, 0) ==
        doctest::Approx(2.0 / 3.0).epsilon(1e-14));
}

TEST_CASE("quad_form_inv output is symmetric PSD") {
  Rng rng(7);
  for (int rep = 0; rep < 20; ++rep) {
    const int l = 2 + static_cast<int>(rng.uniform01() * 5);
    const int m = 1 + static_cast<int>(rng.uniform01() * 3);
    SymMatrix a = testutil::random_spd(l, rng);
    Matrix g(l, m);
    for (int i = 0; i < l; ++i)
      for (int j = 0; j < m; ++j) g(i, j) = 2.0 * rng.uniform01() - 1.0;
    SymMatrix out = quad_form_inv(a, g);
    CHECK(out.order() == m);
    CHECK(dominates(out, SymMatrix(m), 1e-10));
  }
}

TEST_CASE("dominates") {
  SymMatrix two = SymMatrix::diagonal({2.0, 2.0});
  SymMatrix one = SymMatrix::identity(2);
  CHECK(dominates(two, one, 0.0));
  CHECK_FALSE(dominates(one, two, 0.0));

  // eigenvalues of a - b are 0 and 2
  SymMatrix a(2);
  a.set(0, 0, 2.0);
  a.set(0, 1, 1.0);
  a.set(1, 1, 2.0);
  CHECK(dominates(a, one, 1e-12));

  CHECK_THROWS_AS(dominates(one, SymMatrix::identity(3), 0.0), DimensionMismatch);

  Rng rng(3);
  for (int rep = 0; rep < 25; ++rep) {
    SymMatrix s = testutil::random_symmetric(1 + rep % 8, rng);
    CHECK(dominates(s, s, 0.0));
  }
}

TEST_CASE("central_diff") {
  CHECK(central_diff([](double t) { return t * t; }, 1.0, 1e-4) ==
        doctest::Approx(2.0).epsilon(1e-7));
  CHECK(central_diff([](double) { return 5.5; }, 0.3, 1e-3) == 0.0);
  // Taylor remainder h^2/6 ~ 1.7e-11
  CHECK(std::abs(central_diff([](double t) { return std::exp(t); }, 0.0, 1e-5) - 1.0) <= 1e-9);
  CHECK_THROWS_AS(central_diff([](double t) { return std::sqrt(t); }, 0.0, 1e-3), NonFinite);
}

TEST_CASE("central_diff exact on polynomials of degree <= 2") {
  Rng rng(11);
  for (int rep = 0; rep < 50; ++rep) {
    const double a = 2.0 * rng.uniform01() - 1.0, b = 2.0 * rng.uniform01() - 1.0,
                 c = 2.0 * rng.uniform01() - 1.0;
    const double x = 4.0 * rng.uniform01() - 2.0;
    const double d = central_diff([&](double t) { return a * t * t + b * t + c; }, x, 1e-4);
    const double exact = 2.0 * a * x + b;
    CHECK(std::abs(d - exact) <= 1e-9 * (1.0 + std::abs(exact)));
  }
}

TEST_CASE("SymMatrix rejects non-finite entries") {
  SymMatrix a(2);
  CHECK_THROWS_AS(a.set(0, 0, std::nan("")), NonFinite);
  CHECK_THROWS_AS(a.set(0, 1, INFINITY), NonFinite);
}
