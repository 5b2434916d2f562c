#pragma once

#include <string>
#include <vector>

#include "cqlab/common.hpp"
#include "cqlab/linalg.hpp"

namespace cqlab {

/// Runge-Kutta method coefficients (A, b, c) with stage count m. The method
/// matrix must be invertible; all shipped tableaus also have positive weights.
struct ButcherTableau {
  std::string name;
  int m = 0;
  Mat a;                         // m x m method matrix
  std::vector<double> b;        // weights
  std::vector<double> c;        // abscissae
  double r_infinity = 0.0;      // R(inf) = 1 - b^T A^{-1} 1
  bool stiffly_accurate = false;  // b^T equals the last row of A (and c_m = 1)

  Mat a_inverse() const;
};

/// Builds one of the shipped methods:
///   radau1 (implicit Euler), radau2, radau3 (Radau IIA, m = 1, 2, 3),
///   gauss1 (implicit midpoint), gauss2 (two-stage Gauss).
/// Unknown names are rejected with a diagnostic.
ButcherTableau make_tableau(const std::string& name);

const std::vector<std::string>& tableau_names();

/// Algebraic-stability certificate: positivity of the weights and positive
/// semi-definiteness of M_ij = b_i a_ij + b_j a_ji - b_i b_j.
struct StabilityCertificate {
  bool b_positive = false;
  bool m_psd = false;
  double min_eig_m = 0.0;
  bool algebraically_stable() const { return b_positive && m_psd; }
};

// M is structurally singular for Radau IIA, hence the PSD tolerance.
inline constexpr double psd_tolerance = 1e-12;

StabilityCertificate check_algebraic_stability(const ButcherTableau& t);

/// Inner product (u,v) = sum_i b_i conj(u_i) v_i with positive weights.
class WeightedInnerProduct {
 public:
  explicit WeightedInnerProduct(std::vector<double> b);

  cplx dot(const std::vector<cplx>& u, const std::vector<cplx>& v) const;
  double norm_sq(const std::vector<cplx>& u) const;
  const std::vector<double>& weights() const { return b_; }

 private:
  std::vector<double> b_;
};

}  // namespace cqlab
