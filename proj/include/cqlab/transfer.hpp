#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>

#include "cqlab/common.hpp"

namespace cqlab {

/// Coercivity certificate for a transfer function: Re <v, L(s) v> >= alpha
/// ||R(s) v||^2 on the half-plane Re s >= sigma. R defaults to the identity.
struct CoercivityCertificate {
  double alpha = 0.0;
  double sigma = 0.0;
  std::function<cplx(cplx)> r;  // empty means R(s) = 1
  bool r_is_identity() const { return !r; }
};

/// Scalar analytic transfer function s -> L(s) on Re s > domain_abscissa,
/// with the growth metadata of the bound |L(s)| <= M |s|^mu / (Re s)^nu.
class TransferFunction {
 public:
  TransferFunction() = default;
  TransferFunction(std::string id, std::function<cplx(cplx)> eval, double domain_abscissa,
                   double mu = 0.0, double nu = 0.0, bool conj_symmetric = true)
      : id_(std::move(id)),
        eval_(std::move(eval)),
        domain_abscissa_(domain_abscissa),
        mu_(mu),
        nu_(nu),
        conj_symmetric_(conj_symmetric) {}

  /// Evaluate; throws a domain error left of the abscissa.
  cplx operator()(cplx s) const {
    if (!(s.real() > domain_abscissa_))
      throw config_error("transfer '" + id_ + "' evaluated outside Re s > " +
                         std::to_string(domain_abscissa_));
    return eval_(s);
  }

  const std::string& id() const { return id_; }
  double domain_abscissa() const { return domain_abscissa_; }
  double mu() const { return mu_; }
  double nu() const { return nu_; }
  /// True when L(conj s) = conj(L(s)); all built-in transfers satisfy this.
  bool conj_symmetric() const { return conj_symmetric_; }

  const std::optional<CoercivityCertificate>& coercivity() const { return coercivity_; }
  void set_coercivity(CoercivityCertificate c) { coercivity_ = std::move(c); }

 private:
  std::string id_;
  std::function<cplx(cplx)> eval_;
  double domain_abscissa_ = 0.0;
  double mu_ = 0.0, nu_ = 0.0;
  bool conj_symmetric_ = true;
  std::optional<CoercivityCertificate> coercivity_;
};

/// Exterior unit sphere, constant mode: L(s) = 1 + 1/s, with Re L(s) >= 1 on
/// the right half-plane (certificate alpha = 1, R = identity, sigma = 0).
TransferFunction exterior_sphere();

/// Interior unit sphere, constant mode: L^-(s) = coth(s) - 1/s. Evaluated by
/// a Laurent series for small |s| and the exponential formula otherwise.
TransferFunction interior_sphere();

/// L~(s) = L(s + sigma); the analyticity abscissa moves left by sigma.
TransferFunction shifted(const TransferFunction& l, double sigma);

/// Pointwise product (L1 L2)(s); domain is the more restrictive half-plane.
TransferFunction product(const TransferFunction& l1, const TransferFunction& l2);

/// s^{-k} for k = 1, 2 (CQ antiderivatives) and the identity/differentiation
/// symbols used throughout.
TransferFunction integrator(int order);
TransferFunction differentiator();
TransferFunction identity_transfer();

/// (s - lambda)^{-1}; analytic right of max(0, Re lambda).
TransferFunction resolvent_transfer(cplx lambda);

namespace detail {
// Both evaluation branches of coth(s) - 1/s, exposed for consistency tests.
cplx interior_sphere_series(cplx s);
cplx interior_sphere_exponential(cplx s);
}  // namespace detail

/// Monotone impedance g with derivatives. Monotonicity constant beta
/// satisfies (xi-eta)(g(xi)-g(eta)) >= beta (xi-eta)^2.
struct Impedance {
  std::string id;
  std::function<double(double)> g;
  std::function<double(double)> dg;
  std::function<double(double)> d2g;  // empty if not available
  std::function<double(double)> d3g;  // empty if not available
  double beta = 0.0;
  int growth_degree = 0;  // polynomial growth of g; must stay <= 3 (cubic)
  bool second_derivative_continuous = false;
};

/// g1(xi) = xi/4 + xi|xi| (C^1 only; g1'' jumps at 0) or
/// g2(xi) = xi/4 + xi^3 (smooth). Both have beta = 1/4.
Impedance impedance(const std::string& name);

/// Incident wave u(t) = 2 exp(-10 (t - 5/2)^2) with derivatives up to order
/// 3. Not causal, but vanishingly small for t < 0; `causalize` multiplies by
/// a C^3 polynomial ramp on [0, ramp_length] for sensitivity studies.
class IncidentWave {
 public:
  IncidentWave() = default;

  double value(double t) const { return derivative(0, t); }
  double derivative(int order, double t) const;

  void set_causalize(bool on, double ramp_length = 1.0) {
    causalize_ = on;
    ramp_ = ramp_length;
  }
  bool causalized() const { return causalize_; }

 private:
  bool causalize_ = false;
  double ramp_ = 1.0;
};

IncidentWave incident_wave();

}  // namespace cqlab
