#include "cqlab/transfer.hpp"

#include <cmath>

namespace cqlab {

namespace detail {

cplx interior_sphere_series(cplx s) {
  // coth(s) - 1/s = s/3 - s^3/45 + 2 s^5/945 - s^7/4725 + 2 s^9/93555
  //                 - 1382 s^11/638512875 + 4 s^13/18243225 - ...
  // Terms through s^17 keep the truncation below 1e-15 for |s| < 0.5, well
  // past the branch switch.
  static const double coef[] = {1.0 / 3.0,
                                -1.0 / 45.0,
                                2.0 / 945.0,
                                -1.0 / 4725.0,
                                2.0 / 93555.0,
                                -1382.0 / 638512875.0,
                                4.0 / 18243225.0,
                                -3617.0 / 162820783125.0,
                                87734.0 / 38979295480125.0};
  cplx s2 = s * s, term = s, out = 0;
  for (double ck : coef) {
    out += ck * term;
    term *= s2;
  }
  return out;
}

cplx interior_sphere_exponential(cplx s) {
  cplx e = std::exp(-2.0 * s);
  return (1.0 + e) / (1.0 - e) - 1.0 / s;
}

}  // namespace detail

TransferFunction exterior_sphere() {
  TransferFunction l("exterior-sphere", [](cplx s) { return 1.0 + 1.0 / s; }, 0.0);
  l.set_coercivity({1.0, 0.0, {}});  // Re L(s) >= 1 for Re s >= 0
  return l;
}

TransferFunction interior_sphere() {
  // Branch switch at |s| = 0.2: the exponential formula cancels for small
  // |s|, the series truncation grows beyond it.
  TransferFunction l(
      "interior-sphere",
      [](cplx s) {
        return std::abs(s) < 0.2 ? detail::interior_sphere_series(s)
                                 : detail::interior_sphere_exponential(s);
      },
      0.0);
  return l;
}

TransferFunction shifted(const TransferFunction& l, double sigma) {
  if (!(sigma > 0)) throw config_error("shifted: sigma must be positive");
  TransferFunction out(l.id() + "+shift", [l, sigma](cplx s) { return l(s + sigma); },
                       l.domain_abscissa() - sigma, l.mu(), l.nu(), l.conj_symmetric());
  if (l.coercivity()) {
    CoercivityCertificate c = *l.coercivity();
    c.sigma -= sigma;
    out.set_coercivity(std::move(c));
  }
  return out;
}

TransferFunction product(const TransferFunction& l1, const TransferFunction& l2) {
  return TransferFunction(l1.id() + "*" + l2.id(), [l1, l2](cplx s) { return l1(s) * l2(s); },
                          std::max(l1.domain_abscissa(), l2.domain_abscissa()),
                          l1.mu() + l2.mu(), l1.nu() + l2.nu(),
                          l1.conj_symmetric() && l2.conj_symmetric());
}

TransferFunction integrator(int order) {
  if (order == 1) return TransferFunction("s^-1", [](cplx s) { return 1.0 / s; }, 0.0, -1.0, 0.0);
  if (order == 2)
    return TransferFunction("s^-2", [](cplx s) { return 1.0 / (s * s); }, 0.0, -2.0, 0.0);
  throw config_error("integrator: order must be 1 or 2");
}

TransferFunction differentiator() {
  return TransferFunction("s", [](cplx s) { return s; }, 0.0, 1.0, 0.0);
}

TransferFunction identity_transfer() {
  return TransferFunction("1", [](cplx) { return cplx(1.0); }, 0.0);
}

TransferFunction resolvent_transfer(cplx lambda) {
  return TransferFunction("(s-lambda)^-1",
                          [lambda](cplx s) { return 1.0 / (s - lambda); },
                          std::max(0.0, lambda.real()), -1.0, 0.0, lambda.imag() == 0.0);
}

Impedance impedance(const std::string& name) {
  Impedance imp;
  imp.id = name;
  imp.beta = 0.25;
  if (name == "g1") {
    imp.g = [](double x) { return 0.25 * x + x * std::abs(x); };
    imp.dg = [](double x) { return 0.25 + 2.0 * std::abs(x); };
    // defined away from 0 only; the jump at 0 is why g1 is just C^1
    imp.d2g = [](double x) { return x >= 0 ? 2.0 : -2.0; };
    imp.growth_degree = 2;
    imp.second_derivative_continuous = false;
  } else if (name == "g2") {
    imp.g = [](double x) { return 0.25 * x + x * x * x; };
    imp.dg = [](double x) { return 0.25 + 3.0 * x * x; };
    imp.d2g = [](double x) { return 6.0 * x; };
    imp.d3g = [](double) { return 6.0; };
    imp.growth_degree = 3;
    imp.second_derivative_continuous = true;
  } else {
    throw config_error("unknown impedance '" + name + "' (expected g1 or g2)");
  }
  return imp;
}

namespace {

// C^3 polynomial ramp: 35 x^4 - 84 x^5 + 70 x^6 - 20 x^7 on [0,1].
double ramp(int order, double x) {
  if (x <= 0) return 0.0;
  if (x >= 1) return order == 0 ? 1.0 : 0.0;
  static const double c[] = {35.0, -84.0, 70.0, -20.0};
  double s = 0;
  for (int k = 0; k < 4; ++k) {
    double f = c[k];
    int p = k + 4 - order;
    for (int j = 0; j < order; ++j) f *= (k + 4 - j);
    s += f * std::pow(x, p);
  }
  return s;
}

double gauss_derivative(int order, double t) {
  const double x = t - 2.5;
  const double e = 2.0 * std::exp(-10.0 * x * x);
  switch (order) {
    case 0: return e;
    case 1: return -20.0 * x * e;
    case 2: return (-20.0 + 400.0 * x * x) * e;
    case 3: return (1200.0 * x - 8000.0 * x * x * x) * e;
    default: throw config_error("incident wave derivative order must be 0..3");
  }
}

}  // namespace

double IncidentWave::derivative(int order, double t) const {
  if (order < 0 || order > 3) throw config_error("incident wave derivative order must be 0..3");
  if (!causalize_) return gauss_derivative(order, t);
  // Leibniz rule for u(t) * ramp(t / ramp_)
  double s = 0, binom = 1;
  for (int k = 0; k <= order; ++k) {
    s += binom * gauss_derivative(order - k, t) * ramp(k, t / ramp_) / std::pow(ramp_, k);
    binom = binom * (order - k) / (k + 1);
  }
  return s;
}

IncidentWave incident_wave() { return IncidentWave(); }

}  // namespace cqlab
