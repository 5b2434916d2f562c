#pragma once

#include <functional>
#include <string>
#include <vector>

#include "cqlab/cq.hpp"
#include "cqlab/tableau.hpp"
#include "cqlab/transfer.hpp"

namespace cqlab {

enum class Variant { plain, differentiated_1, differentiated_2 };

/// How the derivative data of the differentiated variants is obtained:
/// analytic samples of the incident-wave derivatives (the discretised
/// equations as written), or discrete CQ derivatives of the sampled data
/// (which makes the variants exactly consistent with the plain scheme under
/// the composition rule; used by the cross-variant consistency tests).
enum class DerivativeData { analytic, discrete };

std::string variant_name(Variant v);
Variant variant_from_name(const std::string& name);

/// Scalar sphere problem: L(d_t) psi + g(psi + du_inc) = 0 on (0, T].
struct ProblemSetup {
  TransferFunction transfer;
  Impedance imp;
  IncidentWave wave;
  double final_time = 6.0;
  Variant variant = Variant::plain;
  double shift = 0.0;  // sigma > 0: solve the shifted equation for e^{-sigma t} psi
  DerivativeData derivative_data = DerivativeData::analytic;
  double newton_tolerance = 1e-12;  // absolute residual target per stage solve

  // Test hooks: scales the incident wave, truncates it after a given time,
  // and adds a forcing d(t) to the right-hand side.
  double wave_scale = 1.0;
  double wave_truncate_time = -1.0;  // < 0: no truncation
  std::function<double(double)> forcing;
};

struct NewtonStats {
  int iterations = 0;
  double final_residual = 0.0;
  std::vector<double> increments;  // Newton step norms, in order
};

struct Solution {
  StageSequence psi;             // psi (unscaled, reconstructed for variants)
  StageSequence differentiated;  // marched unknown for the differentiated variants
  std::vector<NewtonStats> newton;
  double tau = 0.0;
  int steps = 0;
  std::string tableau;
  bool stiffly_accurate = false;
  Variant variant = Variant::plain;

  int max_newton_iterations() const;
  double max_newton_residual() const;
  /// Value at the stiffly-accurate node t_{n+1} (last stage).
  double node_value(int n) const { return psi.entries[n].back().real(); }
};

/// Marching solution of the discretised equation; one m-dimensional damped
/// Newton solve per step, history by direct summation of the weight table.
Solution march(const ProblemSetup& setup, const ButcherTableau& t, double tau,
               const ContourParams& params = {});

/// Time-differentiated variants (order 1 or 2): solves for the derivative
/// unknown and reconstructs psi through the CQ antiderivative inside the
/// nonlinearity at each step. Order 2 requires a continuous g''.
Solution march_differentiated(const ProblemSetup& setup, const ButcherTableau& t, double tau,
                              int order, const ContourParams& params = {});

/// High-accuracy reference (plain variant) used by convergence studies.
Solution reference_solution(const ProblemSetup& setup, const ButcherTableau& t_ref, double tau_ref,
                            const ContourParams& params = {});

/// Discrete l2-in-time error between two solutions:
///  - same stepsize and tableau: over all stages,
///  - integer stepsize ratio and stiffly accurate methods: at the coincident
///    c_m = 1 nodes of the coarser grid (no interpolation; other grid
///    combinations are refused).
/// Returns sqrt(tau sum_n sum_i |e_{n,i}|^2) (the homogeneous norm).
double l2tau_error(const Solution& a, const Solution& b);

struct ErrorReport {
  std::vector<double> taus;
  std::vector<double> errors;        // homogeneous l2-tau norms vs reference
  std::vector<int> newton_max;
  int dropped_coarsest = 0;
  double slope_l2 = 0.0;    // least-squares slope of the norms above
  double slope = 0.0;       // slope of tau*sum||e||^2, the convention used by
                            // the original convergence plots (= 2 * slope_l2)
  double fit_residual = 0.0;
};

struct StudyOptions {
  int k_ref = 12;                    // reference stepsize T / 2^k_ref
  std::string reference_tableau = "radau3";
  int drop_coarsest = 0;             // 0..2 coarsest ladder points excluded from the fit
};

/// Errors versus a fine reference over tau = T / 2^k, k = k_min .. k_max.
ErrorReport convergence_study(const ProblemSetup& setup, const ButcherTableau& t, int k_min,
                              int k_max, const StudyOptions& opts = {},
                              const ContourParams& params = {});

/// Least-squares slope of log(err) against log(tau); the fit residual is the
/// RMS deviation in log space.
double fit_slope(const std::vector<double>& taus, const std::vector<double>& errors,
                 double* fit_residual = nullptr);

}  // namespace cqlab
