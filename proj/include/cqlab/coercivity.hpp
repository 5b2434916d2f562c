#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cqlab/cq.hpp"
#include "cqlab/linalg.hpp"
#include "cqlab/tableau.hpp"
#include "cqlab/transfer.hpp"

namespace cqlab {

/// Numerical-range scan of the differentiation symbol on |zeta| = e^{-delta}:
/// lambda_min of H(zeta) = B^{-1/2} (B Delta(zeta) + Delta(conj zeta)^T B)/2 B^{-1/2},
/// the Hermitian matrix representing Re (w, Delta(zeta) w) in the b-weighted
/// inner product.
struct CoercivityScan {
  std::string tableau;
  double delta = 0.0;
  int ntheta = 0;
  std::vector<double> lambda_min;   // per theta grid point
  double min_lambda = 0.0;
  double worst_ratio = 0.0;         // min_theta lambda_min / delta
  double max_hermitian_defect = 0.0;
  double max_h_norm = 0.0;          // largest |H| entry over the grid; the
                                    // eigenvalue noise floor scales with it
};

/// The Hermitian part H(zeta) itself (exposed for the closed-form radau2
/// comparisons).
Mat hermitian_range_matrix(const DifferentiationSymbol& sym, const WeightedInnerProduct& ip,
                           cplx zeta, double* hermitian_defect = nullptr);

CoercivityScan scan_numerical_range(const ButcherTableau& t, double delta, int ntheta);

struct BarrierProbe {
  std::string tableau;
  std::vector<double> deltas;
  std::vector<double> worst_ratio;
  // Round-off floor of each ratio, 64 eps max|H| / delta: for the barrier
  // methods the exact lambda_min is 0 on the whole disk, so the measured
  // ratio is noise on this scale.
  std::vector<double> ratio_noise_floor;
};

/// worst_ratio(delta) over a decreasing delta list. For radau1/radau2/gauss1
/// the ratio stays near 1; for radau3/gauss2 the numerical range of
/// Delta(zeta) touches zero and the ratio collapses to round-off over delta.
BarrierProbe order_barrier_probe(const ButcherTableau& t, const std::vector<double>& deltas,
                                 int ntheta = 4096);

struct MatrixFunctionCheck {
  bool precondition_ok = false;  // Re (w, S w) >= sigma |w|^2 held
  double precondition_margin = 0.0;
  double worst_margin = 0.0;  // min over trials of Re (v, L(S) v) - alpha ||R(S) v||^2
  double scale = 0.0;         // magnitude reference for the tolerance
};

/// Finite-dimensional check of the matrix-function inequality: for S with
/// numerical range in Re >= sigma and a transfer with certificate
/// (alpha, R, sigma), random vectors v must satisfy
/// Re (v, L(S) v) >= alpha ||R(S) v||^2 in the weighted inner product.
MatrixFunctionCheck matrix_function_inequality_check(const TransferFunction& l, const Mat& s,
                                                     const WeightedInnerProduct& ip, int trials,
                                                     std::uint64_t seed = 12345);

struct HerglotzReport {
  double lhs = 0.0;
  double rhs = 0.0;
  double alpha = 0.0;
  double sigma_tilde = 0.0;
  double margin = 0.0;      // lhs - rhs
  bool tau_small = true;    // tau <= 0.05 min(1, 1/sigma); the inequality is
                            // only claimed for small stepsizes, so outside
                            // that range failures are recorded, not asserted
};

/// Discrete convolution coercivity test on one causal sequence:
///   tau sum_n e^{-2 sigma~ n tau} Re <f_n, (L(d)f)_n>
///     >= alpha tau sum_n e^{-2 sigma~ n tau} ||(R(d)f)_n||^2,
/// sigma~ = sigma / c with the certified constant c of the tableau. With
/// sigma = 0 every algebraically stable tableau qualifies; sigma > 0 requires
/// a tableau with a coercivity constant (radau1, radau2, gauss1; c = 0.9).
HerglotzReport discrete_herglotz_test(const TransferFunction& l, const ButcherTableau& t,
                                      double tau, const StageSequence& f,
                                      const ContourParams& params = {});

/// Seeded random causal stage sequence: complex Gaussian entries with the
/// first `leading_zeros` entries forced to zero.
StageSequence random_causal_sequence(int stages, double tau, int n, std::uint64_t seed,
                                     int leading_zeros = 2);

/// Same test over many seeded sequences (seed, seed+1, ...).
std::vector<HerglotzReport> herglotz_trials(const TransferFunction& l, const ButcherTableau& t,
                                            double tau, int n, int trials, std::uint64_t seed);

/// Numerical estimate of alpha(sigma) = inf {Re L(s) : Re s >= sigma} on a
/// boundary grid; an input to the tests, not a certified constant.
double estimate_alpha(const TransferFunction& l, double sigma, int grid = 4096,
                      double imag_max = 200.0);

}  // namespace cqlab
