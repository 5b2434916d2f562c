#include <doctest.h>

#include <cmath>
#include <random>

#include "cqlab/cq.hpp"
#include "cqlab/transfer.hpp"

using namespace cqlab;

namespace {

// Test-side oracle, independent of the weight/convolution machinery: the
// internal stages of the Runge-Kutta discretisation of y' = lambda y + f,
// y(0) = 0.
std::vector<std::vector<cplx>> rk_stage_oracle(cplx lambda, const ButcherTableau& t, double tau,
                                               const StageSequence& f) {
  const int m = t.m, n = f.length();
  Mat sys = Mat::identity(m);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) sys(i, j) -= tau * lambda * t.a(i, j);
  std::vector<std::vector<cplx>> stages(n, std::vector<cplx>(m));
  cplx y = 0.0;
  for (int step = 0; step < n; ++step) {
    std::vector<cplx> rhs(m, y);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < m; ++j) rhs[i] += tau * t.a(i, j) * f.entries[step][j];
    std::vector<cplx> stage = lu_solve(sys, rhs);
    stages[step] = stage;
    for (int j = 0; j < m; ++j) y += tau * t.b[j] * (lambda * stage[j] + f.entries[step][j]);
  }
  return stages;
}

StageSequence gaussian_sequence(const ButcherTableau& t, double tau, int n) {
  StageSequence f = StageSequence::zeros(t.m, tau, n);
  for (int step = 0; step < n; ++step)
    for (int i = 0; i < t.m; ++i) {
      double time = (step + t.c[i]) * tau;
      f.entries[step][i] = std::exp(-10.0 * (time - 2.5) * (time - 2.5));
    }
  return f;
}

StageSequence random_sequence(const ButcherTableau& t, double tau, int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  StageSequence f = StageSequence::zeros(t.m, tau, n);
  for (auto& e : f.entries)
    for (auto& v : e) v = cplx(g(rng), g(rng));
  return f;
}

}  // namespace

TEST_CASE("differentiation symbol closed forms") {
  SUBCASE("radau2 equals (1/2) [[3, 1-4z], [-9, 5+4z]] on random zeta") {
    DifferentiationSymbol sm(make_tableau("radau2"));
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> ur(0.0, 1.0);
    for (int k = 0; k < 64; ++k) {
      cplx z = std::polar(0.999 * ur(rng), 2 * pi * ur(rng));
      Mat d = sm(z);
      CHECK(std::abs(d(0, 0) - 1.5) < 1e-12);
      CHECK(std::abs(d(0, 1) - 0.5 * (1.0 - 4.0 * z)) < 1e-12);
      CHECK(std::abs(d(1, 0) + 4.5) < 1e-12);
      CHECK(std::abs(d(1, 1) - 0.5 * (5.0 + 4.0 * z)) < 1e-12);
    }
  }
  SUBCASE("radau2 at zero gives A^{-1}") {
    DifferentiationSymbol sm(make_tableau("radau2"), DifferentiationSymbol::Path::direct_inverse);
    Mat d = sm(cplx(0.0));
    CHECK(std::abs(d(0, 0) - 1.5) < 1e-13);
    CHECK(std::abs(d(0, 1) - 0.5) < 1e-13);
    CHECK(std::abs(d(1, 0) + 4.5) < 1e-13);
    CHECK(std::abs(d(1, 1) - 2.5) < 1e-13);
  }
  SUBCASE("radau1 scalar symbol is 1 - zeta") {
    DifferentiationSymbol sm(make_tableau("radau1"));
    for (cplx z : {cplx(0.3, 0.2), cplx(-0.9, 0.0), cplx(0.1, -0.7)})
      CHECK(std::abs(sm(z)(0, 0) - (1.0 - z)) < 1e-14);
  }
  SUBCASE("domain error outside the unit disk") {
    DifferentiationSymbol sm(make_tableau("radau2"));
    CHECK_THROWS_AS(sm(cplx(1.0, 0.1)), config_error);
    CHECK_THROWS_AS(sm(cplx(1.0, 0.0)), config_error);
  }
}

TEST_CASE("the three evaluation paths agree and invert the defining matrix") {
  for (const auto& name : tableau_names()) {
    ButcherTableau t = make_tableau(name);
    DifferentiationSymbol direct(t, DifferentiationSymbol::Path::direct_inverse);
    DifferentiationSymbol sherman(t, DifferentiationSymbol::Path::sherman_morrison);
    std::vector<cplx> ones(t.m, 1.0), bv(t.b.begin(), t.b.end());
    for (double r : {0.3, 0.9, 0.999}) {
      for (int k = 0; k < 64; ++k) {
        cplx z = std::polar(r, 2 * pi * (k + 0.3) / 64);
        Mat d1 = direct(z), d2 = sherman(z);
        CHECK((d1 - d2).max_abs() / d1.max_abs() < 1e-11);
        Mat explicit_inverse = t.a + (z / (1.0 - z)) * Mat::outer(ones, bv);
        CHECK((d2 * explicit_inverse - Mat::identity(t.m)).max_abs() < 1e-11);
        if (name == "radau2") {
          DifferentiationSymbol closed(t, DifferentiationSymbol::Path::closed_form_radau2);
          CHECK((closed(z) - d2).max_abs() < 1e-11);
        }
      }
    }
  }
}

TEST_CASE("weight tables: symbol examples") {
  SUBCASE("L(s) = s with radau1 gives [1, -1, 0, 0] / tau") {
    WeightTable w = compute_weights(differentiator(), make_tableau("radau1"), 0.1, 4);
    CHECK(std::abs(w.weights[0](0, 0) - 10.0) < 1e-10 * 10.0);
    CHECK(std::abs(w.weights[1](0, 0) + 10.0) < 1e-10 * 10.0);
    CHECK(std::abs(w.weights[2](0, 0)) < 1e-10);
    CHECK(std::abs(w.weights[3](0, 0)) < 1e-10);
  }
  SUBCASE("L = 1 gives W_0 = I and nothing else") {
    for (const auto& name : {"radau2", "radau3"}) {
      WeightTable w = compute_weights(identity_transfer(), make_tableau(name), 0.25, 6);
      CHECK((w.weights[0] - Mat::identity(w.stages)).max_abs() < 1e-12);
      for (int k = 1; k < 6; ++k) CHECK(w.weights[k].max_abs() < 1e-12);
    }
  }
  SUBCASE("L(s) = 1/s with radau1 gives cumulative-sum weights tau") {
    WeightTable w = compute_weights(integrator(1), make_tableau("radau1"), 0.1, 3);
    for (int k = 0; k < 3; ++k) CHECK(std::abs(w.weights[k](0, 0) - 0.1) < 1e-12);
  }
  SUBCASE("rho >= 1 is a config error") {
    ContourParams p;
    p.radius = 1.0;
    CHECK_THROWS_AS(compute_weights(integrator(1), make_tableau("radau1"), 0.1, 3, p),
                    config_error);
  }
  SUBCASE("W_0 of L(s) = s is Delta(0)/tau") {
    const double tau = 0.2;
    WeightTable w = compute_weights(differentiator(), make_tableau("radau2"), tau, 4);
    Mat expect = make_tableau("radau2").a_inverse();
    expect *= 1.0 / tau;
    CHECK((w.weights[0] - expect).max_abs() < 1e-12 * expect.max_abs());
  }
  SUBCASE("table metadata records the contour and its aliasing bound") {
    WeightTable w = compute_weights(interior_sphere(), make_tableau("radau2"), 0.1, 32);
    CHECK(w.rho > 0.0);
    CHECK(w.rho < 1.0);
    CHECK(w.oversampling == 4);
    CHECK(w.transfer_id == "interior-sphere");
    CHECK(w.aliasing_bound > 0.0);
    CHECK(w.aliasing_bound < 1e-10);
  }
  SUBCASE("transfer evaluation failure on the contour is reported with theta") {
    TransferFunction bad("bad", [](cplx) { return cplx(0.0); }, 1e9);
    try {
      compute_weights(bad, make_tableau("radau2"), 0.1, 4);
      FAIL("expected failure");
    } catch (const numerical_error& e) {
      CHECK(std::string(e.what()).find("theta") != std::string::npos);
    }
  }
}

TEST_CASE("direct path refuses the zeta = 1 singularity") {
  DifferentiationSymbol direct(make_tableau("radau2"), DifferentiationSymbol::Path::direct_inverse);
  CHECK_THROWS_AS(direct(cplx(1.0 - 1e-16, 0.0)), config_error);
}

TEST_CASE("weights match the symbolic Taylor expansion of (s+1)^{-1} for radau1") {
  const double tau = 0.05;
  TransferFunction l("(s+1)^-1", [](cplx s) { return 1.0 / (s + 1.0); }, -1.0);
  WeightTable w = compute_weights(l, make_tableau("radau1"), tau, 33);
  // L((1-z)/tau) = tau / (1 + tau - z): geometric series in z/(1+tau)
  for (int k = 0; k <= 32; ++k) {
    double expect = tau / std::pow(1.0 + tau, k + 1);
    CHECK(std::abs(w.weights[k](0, 0) - expect) < 1e-10);
  }
}

TEST_CASE("doubling the oversampling leaves weights fixed (aliasing control)") {
  ButcherTableau t = make_tableau("radau2");
  ContourParams p4, p8;
  p4.oversampling = 4;
  p8.oversampling = 8;
  WeightTable a = compute_weights(interior_sphere(), t, 6.0 / 64, 64, p4);
  WeightTable b = compute_weights(interior_sphere(), t, 6.0 / 64, 64, p8);
  double worst = 0;
  for (int k = 0; k < 64; ++k) worst = std::max(worst, (a.weights[k] - b.weights[k]).max_abs());
  CHECK(worst < 1e-11);
}

TEST_CASE("block convolution") {
  ButcherTableau t = make_tableau("radau2");
  const double tau = 0.1;
  const int n = 24;
  StageSequence f = random_sequence(t, tau, n, 99);
  SUBCASE("identity weights reproduce the input") {
    StageSequence out = block_convolve(compute_weights(identity_transfer(), t, tau, n), f);
    double worst = 0;
    for (int k = 0; k < n; ++k)
      for (int i = 0; i < t.m; ++i)
        worst = std::max(worst, std::abs(out.entries[k][i] - f.entries[k][i]));
    CHECK(worst < 1e-11);
  }
  SUBCASE("integrator weights on the constant sequence give (n+1) tau for radau1") {
    ButcherTableau t1 = make_tableau("radau1");
    StageSequence ones = StageSequence::zeros(1, tau, n);
    for (auto& e : ones.entries) e[0] = 1.0;
    StageSequence out = block_convolve(compute_weights(integrator(1), t1, tau, n), ones);
    for (int k = 0; k < n; ++k)
      CHECK(std::abs(out.entries[k][0] - (k + 1) * tau) < 1e-11);
  }
  SUBCASE("zero in, zero out") {
    StageSequence z = StageSequence::zeros(t.m, tau, n);
    StageSequence out = block_convolve(compute_weights(interior_sphere(), t, tau, n), z);
    CHECK(out.norm() == 0.0);
  }
  SUBCASE("linearity") {
    WeightTable w = compute_weights(exterior_sphere(), t, tau, n);
    StageSequence g = random_sequence(t, tau, n, 100);
    StageSequence fg = f;
    for (int k = 0; k < n; ++k)
      for (int i = 0; i < t.m; ++i) fg.entries[k][i] = f.entries[k][i] + 2.0 * g.entries[k][i];
    StageSequence a = block_convolve(w, fg);
    StageSequence bf = block_convolve(w, f), bg = block_convolve(w, g);
    double worst = 0;
    for (int k = 0; k < n; ++k)
      for (int i = 0; i < t.m; ++i)
        worst = std::max(worst, std::abs(a.entries[k][i] - bf.entries[k][i] - 2.0 * bg.entries[k][i]));
    CHECK(worst < 1e-12);
  }
  SUBCASE("causality: output below n ignores entries above n") {
    WeightTable w = compute_weights(exterior_sphere(), t, tau, n);
    StageSequence f2 = f;
    f2.entries[n - 1][0] += 10.0;  // perturb the tail only
    StageSequence a = block_convolve(w, f), b = block_convolve(w, f2);
    for (int k = 0; k < n - 1; ++k)
      for (int i = 0; i < t.m; ++i)
        CHECK(a.entries[k][i] == b.entries[k][i]);
  }
  SUBCASE("length mismatch rejected") {
    WeightTable w = compute_weights(exterior_sphere(), t, tau, n);
    StageSequence longer = random_sequence(t, tau, n + 1, 5);
    CHECK_THROWS_AS(block_convolve(w, longer), config_error);
  }
}

TEST_CASE("resolvent stages") {
  SUBCASE("lambda = 0, f = 1: stages of y' = 1 are (n + c_i) tau") {
    for (const auto& name : {"radau1", "radau2", "radau3"}) {
      ButcherTableau t = make_tableau(name);
      const double tau = 0.1;
      const int n = 16;
      StageSequence ones = StageSequence::zeros(t.m, tau, n);
      for (auto& e : ones.entries)
        for (auto& v : e) v = 1.0;
      StageSequence out = resolvent_stages(0.0, t, tau, ones);
      for (int k = 0; k < n; ++k)
        for (int i = 0; i < t.m; ++i)
          CHECK(std::abs(out.entries[k][i] - (k + t.c[i]) * tau) < 1e-12);
    }
  }
  SUBCASE("lambda = -1, Gaussian data, radau2: matches direct RK to 1e-10") {
    ButcherTableau t = make_tableau("radau2");
    const double tau = 1.0 / 16.0;
    const int n = 96;
    StageSequence f = gaussian_sequence(t, tau, n);
    StageSequence got = resolvent_stages(-1.0, t, tau, f);
    auto want = rk_stage_oracle(-1.0, t, tau, f);
    double num = 0, den = 0;
    for (int k = 0; k < n; ++k)
      for (int i = 0; i < t.m; ++i) {
        num += std::norm(got.entries[k][i] - want[k][i]);
        den += std::norm(want[k][i]);
      }
    CHECK(std::sqrt(num / den) < 1e-10);
  }
  SUBCASE("zero data gives zero") {
    ButcherTableau t = make_tableau("radau2");
    StageSequence z = StageSequence::zeros(2, 0.1, 8);
    CHECK(resolvent_stages(cplx(-0.5, 2.0), t, 0.1, z).norm() == 0.0);
  }
  SUBCASE("tau lambda on the spectrum of Delta(0) is an error") {
    ButcherTableau t = make_tableau("radau1");
    // Delta(0) = 1, so lambda = 1/tau is singular
    StageSequence f = StageSequence::zeros(1, 0.1, 4);
    CHECK_THROWS_AS(resolvent_stages(10.0, t, 0.1, f), numerical_error);
  }
}

TEST_CASE("composition rule") {
  ButcherTableau t = make_tableau("radau2");
  const int n = 64;
  const double tau = 6.0 / n;
  StageSequence f = random_sequence(t, tau, n, 11);
  double fn = f.norm();
  for (auto& e : f.entries)
    for (auto& v : e) v /= fn;  // unit l2 norm

  SUBCASE("s and s^{-1} compose to the identity") {
    CHECK(compose_check(differentiator(), integrator(1), t, f) < 1e-9);
  }
  SUBCASE("(s+1)^{-1} twice equals (s+1)^{-2}") {
    TransferFunction l("(s+1)^-1", [](cplx s) { return 1.0 / (s + 1.0); }, -1.0);
    StageSequence smooth = gaussian_sequence(t, tau, n);
    CHECK(compose_check(l, l, t, smooth) < 1e-9 * smooth.norm());
  }
  SUBCASE("zero sequence gives zero residual") {
    StageSequence z = StageSequence::zeros(t.m, tau, n);
    CHECK(compose_check(differentiator(), integrator(1), t, z) == 0.0);
  }
}
