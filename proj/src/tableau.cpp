#include "cqlab/tableau.hpp"

#include <cmath>

namespace cqlab {

namespace {

ButcherTableau finish(ButcherTableau t) {
  std::vector<cplx> ones(t.m, 1.0);
  std::vector<cplx> ainv1 = lu_solve(t.a, ones);
  cplx bta1 = 0;
  for (int i = 0; i < t.m; ++i) bta1 += t.b[i] * ainv1[i];
  t.r_infinity = 1.0 - bta1.real();
  t.stiffly_accurate = true;
  for (int j = 0; j < t.m; ++j)
    if (std::abs(t.a(t.m - 1, j).real() - t.b[j]) > 1e-15) t.stiffly_accurate = false;
  if (std::abs(t.c[t.m - 1] - 1.0) > 1e-15) t.stiffly_accurate = false;
  return t;
}

}  // namespace

Mat ButcherTableau::a_inverse() const { return inverse(a); }

ButcherTableau make_tableau(const std::string& name) {
  ButcherTableau t;
  t.name = name;
  if (name == "radau1") {  // implicit Euler
    t.m = 1;
    t.a = Mat(1, 1);
    t.a(0, 0) = 1.0;
    t.b = {1.0};
    t.c = {1.0};
  } else if (name == "radau2") {
    t.m = 2;
    t.a = Mat(2, 2);
    t.a(0, 0) = 5.0 / 12.0;
    t.a(0, 1) = -1.0 / 12.0;
    t.a(1, 0) = 3.0 / 4.0;
    t.a(1, 1) = 1.0 / 4.0;
    t.b = {3.0 / 4.0, 1.0 / 4.0};
    t.c = {1.0 / 3.0, 1.0};
  } else if (name == "radau3") {
    // Coefficients are rational in sqrt(6); evaluating the closed forms in
    // double keeps every entry accurate to machine precision.
    const double r = std::sqrt(6.0);
    t.m = 3;
    t.a = Mat(3, 3);
    t.a(0, 0) = (88.0 - 7.0 * r) / 360.0;
    t.a(0, 1) = (296.0 - 169.0 * r) / 1800.0;
    t.a(0, 2) = (-2.0 + 3.0 * r) / 225.0;
    t.a(1, 0) = (296.0 + 169.0 * r) / 1800.0;
    t.a(1, 1) = (88.0 + 7.0 * r) / 360.0;
    t.a(1, 2) = (-2.0 - 3.0 * r) / 225.0;
    t.a(2, 0) = (16.0 - r) / 36.0;
    t.a(2, 1) = (16.0 + r) / 36.0;
    t.a(2, 2) = 1.0 / 9.0;
    t.b = {(16.0 - r) / 36.0, (16.0 + r) / 36.0, 1.0 / 9.0};
    t.c = {(4.0 - r) / 10.0, (4.0 + r) / 10.0, 1.0};
  } else if (name == "gauss1") {  // implicit midpoint
    t.m = 1;
    t.a = Mat(1, 1);
    t.a(0, 0) = 0.5;
    t.b = {1.0};
    t.c = {0.5};
  } else if (name == "gauss2") {
    const double r = std::sqrt(3.0);
    t.m = 2;
    t.a = Mat(2, 2);
    t.a(0, 0) = 0.25;
    t.a(0, 1) = 0.25 - r / 6.0;
    t.a(1, 0) = 0.25 + r / 6.0;
    t.a(1, 1) = 0.25;
    t.b = {0.5, 0.5};
    t.c = {0.5 - r / 6.0, 0.5 + r / 6.0};
  } else {
    throw config_error("unknown tableau '" + name +
                       "' (expected radau1, radau2, radau3, gauss1 or gauss2)");
  }
  return finish(t);
}

const std::vector<std::string>& tableau_names() {
  static const std::vector<std::string> names = {"radau1", "radau2", "radau3", "gauss1", "gauss2"};
  return names;
}

StabilityCertificate check_algebraic_stability(const ButcherTableau& t) {
  StabilityCertificate cert;
  cert.b_positive = true;
  for (double bi : t.b)
    if (!(bi > 0)) cert.b_positive = false;
  Mat m(t.m, t.m);
  for (int i = 0; i < t.m; ++i)
    for (int j = 0; j < t.m; ++j)
      m(i, j) = t.b[i] * t.a(i, j).real() + t.b[j] * t.a(j, i).real() - t.b[i] * t.b[j];
  cert.min_eig_m = hermitian_eigenvalues(m).front();
  cert.m_psd = cert.min_eig_m >= -psd_tolerance;
  return cert;
}

WeightedInnerProduct::WeightedInnerProduct(std::vector<double> b) : b_(std::move(b)) {
  for (double bi : b_)
    if (!(bi > 0)) throw config_error("weighted inner product requires positive weights");
}

cplx WeightedInnerProduct::dot(const std::vector<cplx>& u, const std::vector<cplx>& v) const {
  if (u.size() != b_.size() || v.size() != b_.size())
    throw config_error("weighted_dot: dimension mismatch");
  cplx s = 0;
  for (std::size_t i = 0; i < b_.size(); ++i) s += b_[i] * std::conj(u[i]) * v[i];
  return s;
}

double WeightedInnerProduct::norm_sq(const std::vector<cplx>& u) const {
  double s = 0;
  for (std::size_t i = 0; i < b_.size(); ++i) s += b_[i] * std::norm(u[i]);
  return s;
}

}  // namespace cqlab
