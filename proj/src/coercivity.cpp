#include "cqlab/coercivity.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace cqlab {

Mat hermitian_range_matrix(const DifferentiationSymbol& sym, const WeightedInnerProduct& ip,
                           cplx zeta, double* hermitian_defect) {
  const auto& b = ip.weights();
  const int m = static_cast<int>(b.size());
  Mat d = sym(zeta);
  Mat dbar_t = sym(std::conj(zeta)).transpose();
  Mat h(m, m);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) {
      cplx num = b[i] * d(i, j) + dbar_t(i, j) * b[j];
      h(i, j) = 0.5 * num / std::sqrt(b[i] * b[j]);
    }
  if (hermitian_defect) *hermitian_defect = (h - h.adjoint()).max_abs();
  return h;
}

CoercivityScan scan_numerical_range(const ButcherTableau& t, double delta, int ntheta) {
  if (!(delta > 0.0) || delta > 1.0) throw config_error("scan: delta must be in (0, 1]");
  if (ntheta < 64) throw config_error("scan: ntheta must be >= 64");
  WeightedInnerProduct ip(t.b);  // rejects non-positive weights
  DifferentiationSymbol sym(t);
  CoercivityScan scan;
  scan.tableau = t.name;
  scan.delta = delta;
  scan.ntheta = ntheta;
  scan.lambda_min.assign(ntheta, 0.0);
  std::vector<double> defects(ntheta, 0.0), hnorms(ntheta, 0.0);
  const double r = std::exp(-delta);
  parallel_for(static_cast<std::size_t>(ntheta), [&](std::size_t k) {
    cplx zeta = std::polar(r, 2.0 * pi * static_cast<double>(k) / ntheta);
    Mat h = hermitian_range_matrix(sym, ip, zeta, &defects[k]);
    hnorms[k] = h.max_abs();
    scan.lambda_min[k] = hermitian_eigenvalues(h).front();
  });
  scan.min_lambda = *std::min_element(scan.lambda_min.begin(), scan.lambda_min.end());
  scan.max_hermitian_defect = *std::max_element(defects.begin(), defects.end());
  scan.max_h_norm = *std::max_element(hnorms.begin(), hnorms.end());
  scan.worst_ratio = scan.min_lambda / delta;
  return scan;
}

BarrierProbe order_barrier_probe(const ButcherTableau& t, const std::vector<double>& deltas,
                                 int ntheta) {
  BarrierProbe probe;
  probe.tableau = t.name;
  for (double d : deltas) {
    CoercivityScan scan = scan_numerical_range(t, d, ntheta);
    probe.deltas.push_back(d);
    probe.worst_ratio.push_back(scan.worst_ratio);
    probe.ratio_noise_floor.push_back(64.0 * std::numeric_limits<double>::epsilon() *
                                      scan.max_h_norm / d);
  }
  return probe;
}

MatrixFunctionCheck matrix_function_inequality_check(const TransferFunction& l, const Mat& s,
                                                     const WeightedInnerProduct& ip, int trials,
                                                     std::uint64_t seed) {
  if (!l.coercivity())
    throw config_error("matrix_function_inequality_check: transfer has no coercivity certificate");
  const CoercivityCertificate& cert = *l.coercivity();
  const auto& b = ip.weights();
  const int m = static_cast<int>(b.size());
  if (s.rows() != m) throw config_error("matrix_function_inequality_check: dimension mismatch");

  MatrixFunctionCheck out;
  // Numerical-range precondition via the weighted Hermitian part.
  Mat h(m, m);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) {
      cplx num = b[i] * s(i, j) + std::conj(s(j, i)) * b[j];
      h(i, j) = 0.5 * num / std::sqrt(b[i] * b[j]);
    }
  double lam_min = hermitian_eigenvalues(h).front();
  double scale_s = s.max_abs() + 1.0;
  out.precondition_margin = lam_min - cert.sigma;
  out.precondition_ok = out.precondition_margin >= -1e-12 * scale_s;
  if (!out.precondition_ok) return out;  // reported, not a counterexample

  MatFunctionOptions opts;
  const double sigma = cert.sigma;
  opts.safe_radius = [sigma](cplx z) { return 0.45 * (z.real() - sigma); };
  Mat ls = matrix_function(s, [&l](cplx z) { return l(z); }, opts);
  Mat rs = cert.r_is_identity() ? Mat::identity(m)
                                : matrix_function(s, [&cert](cplx z) { return cert.r(z); }, opts);

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  double worst = std::numeric_limits<double>::infinity();
  double scale = 0.0;
  for (int trial = 0; trial < trials; ++trial) {
    std::vector<cplx> v(m);
    for (auto& vi : v) vi = cplx(gauss(rng), gauss(rng));
    std::vector<cplx> lv = ls * v;
    std::vector<cplx> rv = rs * v;
    double lhs = ip.dot(v, lv).real();
    double rhs = cert.alpha * ip.norm_sq(rv);
    worst = std::min(worst, lhs - rhs);
    scale = std::max(scale, std::abs(lhs) + std::abs(rhs));
  }
  out.worst_margin = worst;
  out.scale = scale;
  return out;
}

namespace {

// Certified constants c of (rk-coerc): lambda_min(H) >= c * delta for small
// delta. radau2/gauss1 have the (1-|zeta|^2)/2 bound, radau1 the scalar one;
// c = 0.9 is safe for delta <= 0.05.
double certified_constant(const ButcherTableau& t) {
  if (t.name == "radau1" || t.name == "radau2" || t.name == "gauss1") return 0.9;
  throw config_error("tableau '" + t.name +
                     "' has no certified coercivity constant (order barrier); "
                     "sigma > 0 requires radau1, radau2 or gauss1");
}

}  // namespace

HerglotzReport discrete_herglotz_test(const TransferFunction& l, const ButcherTableau& t,
                                      double tau, const StageSequence& f,
                                      const ContourParams& params) {
  if (!l.coercivity()) throw config_error("discrete_herglotz_test: no coercivity certificate");
  const CoercivityCertificate& cert = *l.coercivity();
  StabilityCertificate stab = check_algebraic_stability(t);
  if (!stab.algebraically_stable())
    throw config_error("discrete_herglotz_test: tableau is not algebraically stable");

  HerglotzReport rep;
  rep.alpha = cert.alpha;
  if (cert.sigma > 0.0) {
    rep.sigma_tilde = cert.sigma / certified_constant(t);
    rep.tau_small = tau <= 0.05 * std::min(1.0, 1.0 / cert.sigma);
  }

  const int n = f.length();
  StageSequence lf = block_convolve(compute_weights(l, t, tau, n, params), f);
  StageSequence rf = f;
  if (!cert.r_is_identity()) {
    TransferFunction rt("R", cert.r, l.domain_abscissa(), 0.0, 0.0, l.conj_symmetric());
    rf = block_convolve(compute_weights(rt, t, tau, n, params), f);
  }
  WeightedInnerProduct ip(t.b);
  double lhs = 0, rhs = 0;
  for (int k = 0; k < n; ++k) {
    double w = std::exp(-2.0 * rep.sigma_tilde * k * tau);
    lhs += w * ip.dot(f.entries[k], lf.entries[k]).real();
    rhs += w * ip.norm_sq(rf.entries[k]);
  }
  rep.lhs = tau * lhs;
  rep.rhs = cert.alpha * tau * rhs;
  rep.margin = rep.lhs - rep.rhs;
  return rep;
}

StageSequence random_causal_sequence(int stages, double tau, int n, std::uint64_t seed,
                                     int leading_zeros) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  StageSequence f = StageSequence::zeros(stages, tau, n);
  f.offset = std::min(leading_zeros, n);
  for (int k = 0; k < n; ++k)
    for (int i = 0; i < stages; ++i) {
      cplx v(gauss(rng), gauss(rng));  // draw unconditionally: offset does not shift the stream
      if (k >= f.offset) f.entries[k][i] = v;
    }
  return f;
}

std::vector<HerglotzReport> herglotz_trials(const TransferFunction& l, const ButcherTableau& t,
                                            double tau, int n, int trials, std::uint64_t seed) {
  // The weight tables do not depend on the trial; compute once.
  if (!l.coercivity()) throw config_error("herglotz_trials: no coercivity certificate");
  std::vector<HerglotzReport> reports(trials);
  std::vector<StageSequence> seqs(trials);
  for (int i = 0; i < trials; ++i) seqs[i] = random_causal_sequence(t.m, tau, n, seed + i);
  const WeightTable wl = compute_weights(l, t, tau, n);
  const CoercivityCertificate& cert = *l.coercivity();
  WeightTable wr;
  if (!cert.r_is_identity()) {
    TransferFunction rt("R", cert.r, l.domain_abscissa(), 0.0, 0.0, l.conj_symmetric());
    wr = compute_weights(rt, t, tau, n);
  }
  WeightedInnerProduct ip(t.b);
  double sigma_tilde = cert.sigma > 0.0 ? cert.sigma / certified_constant(t) : 0.0;
  parallel_for(static_cast<std::size_t>(trials), [&](std::size_t i) {
    const StageSequence& f = seqs[i];
    StageSequence lf = block_convolve(wl, f);
    StageSequence rf = cert.r_is_identity() ? f : block_convolve(wr, f);
    HerglotzReport rep;
    rep.alpha = cert.alpha;
    rep.sigma_tilde = sigma_tilde;
    rep.tau_small = cert.sigma <= 0.0 || tau <= 0.05 * std::min(1.0, 1.0 / cert.sigma);
    double lhs = 0, rhs = 0;
    for (int k = 0; k < f.length(); ++k) {
      double w = std::exp(-2.0 * sigma_tilde * k * tau);
      lhs += w * ip.dot(f.entries[k], lf.entries[k]).real();
      rhs += w * ip.norm_sq(rf.entries[k]);
    }
    rep.lhs = tau * lhs;
    rep.rhs = cert.alpha * tau * rhs;
    rep.margin = rep.lhs - rep.rhs;
    reports[i] = rep;
  });
  return reports;
}

double estimate_alpha(const TransferFunction& l, double sigma, int grid, double imag_max) {
  if (!(sigma > 0)) throw config_error("estimate_alpha: sigma must be positive");
  // Re L is harmonic, so the infimum over the half-plane lives on the
  // boundary line Re s = sigma (or at infinity); sample the line densely.
  double worst = l(cplx(sigma, 0.0)).real();
  for (int k = 1; k <= grid; ++k) {
    double y = imag_max * std::pow(static_cast<double>(k) / grid, 3.0);  // refine near 0
    worst = std::min(worst, l(cplx(sigma, y)).real());
    worst = std::min(worst, l(cplx(sigma, -y)).real());
  }
  // Interior spot checks guard against boundary-grid misses.
  for (double re : {1.5 * sigma, 3.0 * sigma, 10.0 * sigma})
    for (int k = 0; k <= 64; ++k)
      worst = std::min(worst, l(cplx(re, imag_max * k / 64.0)).real());
  return worst;
}

}  // namespace cqlab
