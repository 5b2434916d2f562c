#include <doctest.h>

#include <cmath>

#include "cqlab/tableau.hpp"

using namespace cqlab;

TEST_CASE("radau2 coefficients are exact") {
  ButcherTableau t = make_tableau("radau2");
  REQUIRE(t.m == 2);
  CHECK(t.a(0, 0).real() == 5.0 / 12.0);
  CHECK(t.a(0, 1).real() == -1.0 / 12.0);
  CHECK(t.a(1, 0).real() == 3.0 / 4.0);
  CHECK(t.a(1, 1).real() == 1.0 / 4.0);
  CHECK(t.b[0] == 3.0 / 4.0);
  CHECK(t.b[1] == 1.0 / 4.0);
  CHECK(t.c[0] == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  CHECK(t.c[1] == 1.0);
  CHECK(t.stiffly_accurate);
  CHECK(std::abs(t.r_infinity) < 1e-14);
}

TEST_CASE("radau1 is implicit Euler") {
  ButcherTableau t = make_tableau("radau1");
  CHECK(t.m == 1);
  CHECK(t.a(0, 0).real() == 1.0);
  CHECK(t.b[0] == 1.0);
  CHECK(t.c[0] == 1.0);
}

TEST_CASE("radau3 satisfies the C(3) simplifying conditions") {
  ButcherTableau t = make_tableau("radau3");
  REQUIRE(t.m == 3);
  for (int k = 1; k <= 3; ++k)
    for (int i = 0; i < 3; ++i) {
      double lhs = 0;
      for (int j = 0; j < 3; ++j) lhs += t.a(i, j).real() * std::pow(t.c[j], k - 1);
      CHECK(std::abs(lhs - std::pow(t.c[i], k) / k) < 1e-12);
    }
}

TEST_CASE("unknown tableau name is rejected") {
  CHECK_THROWS_AS(make_tableau("radau7"), config_error);
}

TEST_CASE("order conditions and stiff accuracy for all shipped tableaus") {
  for (const auto& name : tableau_names()) {
    ButcherTableau t = make_tableau(name);
    double b1 = 0, bc = 0;
    for (int i = 0; i < t.m; ++i) {
      b1 += t.b[i];
      bc += t.b[i] * t.c[i];
    }
    CHECK(std::abs(b1 - 1.0) < 1e-14);
    // b^T c = 1/2 is the order-2 condition; implicit Euler (radau1) is the
    // one first-order member, with b^T c = 1.
    if (name != std::string("radau1"))
      CHECK(std::abs(bc - 0.5) < 1e-14);
    else
      CHECK(bc == 1.0);
    if (name == "radau2" || name == "radau3") {
      CHECK(t.stiffly_accurate);
      for (int j = 0; j < t.m; ++j)
        CHECK(std::abs(t.b[j] - t.a(t.m - 1, j).real()) <= 1e-15);
      CHECK(std::abs(t.r_infinity) < 1e-13);
    }
    if (name == "gauss1") CHECK(t.r_infinity == doctest::Approx(-1.0).epsilon(1e-14));
    if (name == "gauss2") CHECK(t.r_infinity == doctest::Approx(1.0).epsilon(1e-13));
  }
}

TEST_CASE("algebraic stability certificates") {
  SUBCASE("radau2: M = [[1/16, -1/16], [-1/16, 1/16]], singular PSD") {
    ButcherTableau t = make_tableau("radau2");
    // direct arithmetic from the coefficients
    double m00 = 2 * t.b[0] * t.a(0, 0).real() - t.b[0] * t.b[0];
    double m01 = t.b[0] * t.a(0, 1).real() + t.b[1] * t.a(1, 0).real() - t.b[0] * t.b[1];
    double m11 = 2 * t.b[1] * t.a(1, 1).real() - t.b[1] * t.b[1];
    CHECK(m00 == doctest::Approx(1.0 / 16).epsilon(1e-15));
    CHECK(m01 == doctest::Approx(-1.0 / 16).epsilon(1e-15));
    CHECK(m11 == doctest::Approx(1.0 / 16).epsilon(1e-15));
    StabilityCertificate c = check_algebraic_stability(t);
    CHECK(c.b_positive);
    CHECK(c.m_psd);
    CHECK(std::abs(c.min_eig_m) < 1e-15);  // exactly singular
  }
  SUBCASE("radau1: M = [1]") {
    StabilityCertificate c = check_algebraic_stability(make_tableau("radau1"));
    CHECK(c.min_eig_m == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(c.m_psd);
  }
  SUBCASE("gauss1: M = [0]") {
    StabilityCertificate c = check_algebraic_stability(make_tableau("gauss1"));
    CHECK(std::abs(c.min_eig_m) < 1e-15);
    CHECK(c.m_psd);
  }
  SUBCASE("every shipped tableau is algebraically stable") {
    for (const auto& name : tableau_names()) {
      StabilityCertificate c = check_algebraic_stability(make_tableau(name));
      CHECK(c.b_positive);
      CHECK(c.m_psd);
    }
  }
}

TEST_CASE("weighted inner product") {
  WeightedInnerProduct ip({0.75, 0.25});
  SUBCASE("weights sum to one") {
    CHECK(ip.dot({1.0, 1.0}, {1.0, 1.0}).real() == doctest::Approx(1.0));
    CHECK(std::abs(ip.dot({1.0, 1.0}, {1.0, 1.0}).imag()) == 0.0);
  }
  SUBCASE("orthogonal unit vectors") { CHECK(std::abs(ip.dot({1.0, 0.0}, {0.0, 1.0})) == 0.0); }
  SUBCASE("conjugation in the first argument") {
    cplx v = ip.dot({cplx(0, 1), 0.0}, {1.0, 0.0});
    CHECK(v.real() == doctest::Approx(0.0));
    CHECK(v.imag() == doctest::Approx(-0.75));
  }
  SUBCASE("dimension mismatch rejected") {
    CHECK_THROWS_AS(ip.dot({1.0}, {1.0, 0.0}), config_error);
  }
  SUBCASE("positive weights required") {
    CHECK_THROWS_AS(WeightedInnerProduct({0.5, -0.5}), config_error);
  }
  SUBCASE("positivity and conjugate symmetry on random vectors") {
    std::vector<cplx> u = {cplx(0.3, -1.2), cplx(2.0, 0.7)};
    std::vector<cplx> v = {cplx(-0.5, 0.4), cplx(0.1, -0.9)};
    CHECK(ip.norm_sq(u) > 0);
    CHECK(std::abs(ip.dot(u, v) - std::conj(ip.dot(v, u))) < 1e-15);
  }
}
