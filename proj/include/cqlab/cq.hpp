#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "cqlab/common.hpp"
#include "cqlab/linalg.hpp"
#include "cqlab/tableau.hpp"
#include "cqlab/transfer.hpp"

namespace cqlab {

/// Evaluator of the Runge-Kutta differentiation symbol
///   Delta(zeta) = (A + zeta/(1-zeta) 1 b^T)^{-1},  |zeta| < 1.
class DifferentiationSymbol {
 public:
  enum class Path { direct_inverse, sherman_morrison, closed_form_radau2 };

  explicit DifferentiationSymbol(ButcherTableau t, Path path = Path::sherman_morrison);

  /// Delta(zeta); throws on |zeta| >= 1 (and on |1 - zeta| ~ 0 for the
  /// direct path, whose formula is singular at zeta = 1).
  Mat operator()(cplx zeta) const;

  const ButcherTableau& tableau() const { return tableau_; }
  Path path() const { return path_; }

 private:
  ButcherTableau tableau_;
  Path path_;
  Mat a_inv_;
  Mat rank1_;  // A^{-1} 1 b^T A^{-1}
};

/// Contour / FFT discretisation parameters for the weight expansion
/// L(Delta(zeta)/tau) = sum_n W_n zeta^n. The radius balances trapezoidal
/// aliasing rho^{Nq} against round-off amplified by rho^{-n}, n < N, giving
/// rho = eps^{1/(Nq + N)} with Nq = oversampling * N.
struct ContourParams {
  int oversampling = 4;
  double radius = 0.0;  // 0 = choose eps^(1/(Nq+N))
};

/// Convolution quadrature weights W_0 .. W_{N-1} for a given transfer
/// function, tableau and stepsize.
struct WeightTable {
  std::vector<Mat> weights;
  double tau = 0.0;
  int stages = 0;
  std::string transfer_id;
  double rho = 0.0;       // contour radius used
  int oversampling = 0;   // quadrature points were oversampling * N
  double aliasing_bound = 0.0;  // rho^Nq * max ||L|| / (1 - rho^Nq)

  int horizon() const { return static_cast<int>(weights.size()); }
};

WeightTable compute_weights(const TransferFunction& l, const ButcherTableau& t, double tau, int n,
                            const ContourParams& params = {});

/// Causal sequence of stage vectors; entries before `offset` are zero.
struct StageSequence {
  int stages = 0;
  double tau = 0.0;
  int offset = 0;
  std::vector<std::vector<cplx>> entries;

  int length() const { return static_cast<int>(entries.size()); }
  static StageSequence zeros(int stages, double tau, int n);
  double norm() const;  // plain l2 over all steps and stages
};

/// (L(d_t^tau) f)_n = sum_{j<=n} W_{n-j} f_j, the O(N^2 m^2) reference path.
StageSequence block_convolve(const WeightTable& w, const StageSequence& f);

/// (d_t^tau - lambda)^{-1} f. Equals the internal stages of the Runge-Kutta
/// approximation of y' = lambda y + f, y(0) = 0.
StageSequence resolvent_stages(cplx lambda, const ButcherTableau& t, double tau,
                               const StageSequence& f, const ContourParams& params = {});

/// || L2(d)L1(d) f - (L2 L1)(d) f ||_l2 (composition-rule residual).
double compose_check(const TransferFunction& l1, const TransferFunction& l2,
                     const ButcherTableau& t, const StageSequence& f,
                     const ContourParams& params = {});

/// CSV dump: header then one row per n with real/imag of each entry.
void export_csv(const WeightTable& w, std::ostream& os);

}  // namespace cqlab
