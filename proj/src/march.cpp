#include "cqlab/march.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

namespace cqlab {

std::string variant_name(Variant v) {
  switch (v) {
    case Variant::plain: return "plain";
    case Variant::differentiated_1: return "differentiated-1";
    case Variant::differentiated_2: return "differentiated-2";
  }
  return "?";
}

Variant variant_from_name(const std::string& name) {
  if (name == "plain") return Variant::plain;
  if (name == "differentiated-1") return Variant::differentiated_1;
  if (name == "differentiated-2") return Variant::differentiated_2;
  throw config_error("unknown variant '" + name + "'");
}

int Solution::max_newton_iterations() const {
  int worst = 0;
  for (const auto& s : newton) worst = std::max(worst, s.iterations);
  return worst;
}

double Solution::max_newton_residual() const {
  double worst = 0;
  for (const auto& s : newton) worst = std::max(worst, s.final_residual);
  return worst;
}

namespace {

constexpr double eps = std::numeric_limits<double>::epsilon();

// Real parts of a weight table, flattened for the marching inner loops.
// The transfers here are real on the real axis, so the imaginary parts of
// the computed weights are contour round-off.
struct RealTable {
  int m = 0;
  std::vector<double> w;  // n * m * m

  explicit RealTable(const WeightTable& t) : m(t.stages) {
    w.resize(static_cast<std::size_t>(t.horizon()) * m * m);
    for (int k = 0; k < t.horizon(); ++k)
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) w[(static_cast<std::size_t>(k) * m + i) * m + j] = t.weights[k](i, j).real();
  }
  RealTable() = default;

  const double* block(int k) const { return &w[static_cast<std::size_t>(k) * m * m]; }

  void matvec_add(int k, const double* x, double* acc) const {
    const double* bk = block(k);
    for (int i = 0; i < m; ++i) {
      double s = 0;
      for (int j = 0; j < m; ++j) s += bk[i * m + j] * x[j];
      acc[i] += s;
    }
  }
};

int steps_for(double final_time, double tau) {
  if (!(tau > 0) || tau > final_time) throw config_error("march: need 0 < tau <= T");
  int n = static_cast<int>(std::llround(final_time / tau));
  if (std::abs(n * tau - final_time) > 1e-9 * final_time)
    throw config_error("march: tau must divide the final time");
  return n;
}

struct StepContext {
  int m = 0;
  double newton_tol = 1e-12;
  int max_iterations = 50;
  int max_halvings = 8;
};

std::string format_residual(double r) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3e", r);
  return buf;
}

// Damped Newton on F(x) = 0, x real m-vector. residual(x, F) returns a scale
// estimate of the terms composing F; convergence is declared at
// max(tol, 32 eps scale). When backtracking cannot decrease the residual the
// full step is taken anyway (a monotone line search can stall on a plateau
// away from the root), and a stagnating iteration restarts once from zero.
template <typename Residual, typename Jacobian>
NewtonStats newton_solve(const StepContext& ctx, std::vector<double>& x, Residual&& residual,
                         Jacobian&& jacobian, int step_index) {
  NewtonStats stats;
  const int m = ctx.m;
  std::vector<double> f(m), xtry(m), ftry(m);
  double scale = 0;
  residual(x, f, scale);
  double rnorm = 0;
  for (double v : f) rnorm += v * v;
  rnorm = std::sqrt(rnorm);
  const double r_initial = rnorm;
  bool restarted = false;
  for (int it = 0; it < ctx.max_iterations; ++it) {
    double tol = std::max(ctx.newton_tol, 32 * eps * scale);
    if (rnorm <= tol) {
      stats.final_residual = rnorm;
      return stats;
    }
    if (!restarted && it == ctx.max_iterations / 2 && rnorm > 1e-2 * r_initial) {
      restarted = true;
      std::fill(x.begin(), x.end(), 0.0);
      residual(x, f, scale);
      rnorm = 0;
      for (double v : f) rnorm += v * v;
      rnorm = std::sqrt(rnorm);
    }
    Mat j(m, m);
    jacobian(x, j);
    std::vector<cplx> rhs(m);
    for (int i = 0; i < m; ++i) rhs[i] = -f[i];
    std::vector<cplx> delta;
    try {
      delta = lu_solve(j, rhs);
    } catch (const numerical_error&) {
      throw numerical_error("march: singular Newton matrix at step " + std::to_string(step_index));
    }
    double dnorm = 0, xnorm = 0;
    for (const auto& d : delta) dnorm += std::norm(d);
    for (double v : x) xnorm += v * v;
    dnorm = std::sqrt(dnorm);
    xnorm = std::sqrt(xnorm);
    if (dnorm <= 64 * eps * (1.0 + xnorm)) {  // step below the precision of x
      stats.final_residual = rnorm;
      return stats;
    }
    double step_scale = 1.0;
    for (int h = 0; h <= ctx.max_halvings; ++h) {
      double attempt = (h == ctx.max_halvings) ? 1.0 : step_scale;  // plateau: full step
      for (int i = 0; i < m; ++i) xtry[i] = x[i] + attempt * delta[i].real();
      double try_scale = 0;
      residual(xtry, ftry, try_scale);
      double rtry = 0;
      for (double v : ftry) rtry += v * v;
      rtry = std::sqrt(rtry);
      if (rtry < rnorm || h == ctx.max_halvings) {
        x = xtry;
        f = ftry;
        rnorm = rtry;
        scale = try_scale;
        stats.increments.push_back(attempt * dnorm);
        break;
      }
      step_scale *= 0.5;
    }
    stats.iterations = it + 1;
  }
  double tol = std::max(ctx.newton_tol, 32 * eps * scale);
  if (rnorm > tol)
    throw numerical_error("march: Newton did not converge at step " + std::to_string(step_index) +
                          " (residual " + format_residual(rnorm) + ")");
  stats.final_residual = rnorm;
  return stats;
}

}  // namespace

Solution march(const ProblemSetup& setup, const ButcherTableau& t, double tau,
               const ContourParams& params) {
  if (setup.variant == Variant::differentiated_1)
    return march_differentiated(setup, t, tau, 1, params);
  if (setup.variant == Variant::differentiated_2)
    return march_differentiated(setup, t, tau, 2, params);

  const int n = steps_for(setup.final_time, tau);
  const int m = t.m;
  const double sigma = setup.shift;
  if (sigma < 0) throw config_error("march: shift must be >= 0");

  TransferFunction ltf = sigma > 0 ? shifted(setup.transfer, sigma) : setup.transfer;
  RealTable w(compute_weights(ltf, t, tau, n, params));

  auto wave_d = [&](int order, double time) {
    if (setup.wave_truncate_time >= 0 && time > setup.wave_truncate_time) return 0.0;
    return setup.wave_scale * setup.wave.derivative(order, time);
  };

  Solution sol;
  sol.tau = tau;
  sol.steps = n;
  sol.tableau = t.name;
  sol.stiffly_accurate = t.stiffly_accurate;
  sol.variant = Variant::plain;
  sol.psi = StageSequence::zeros(m, tau, n);
  sol.newton.resize(n);

  StepContext ctx;
  ctx.m = m;
  ctx.newton_tol = setup.newton_tolerance;
  std::vector<std::vector<double>> hist(n, std::vector<double>(m, 0.0));  // marched unknown
  std::vector<double> x(m, 0.0), h(m), ud(m), sc(m), ts(m);
  const auto& g = setup.imp.g;
  const auto& dg = setup.imp.dg;

  for (int step = 0; step < n; ++step) {
    std::fill(h.begin(), h.end(), 0.0);
    for (int j = 0; j < step; ++j) w.matvec_add(step - j, hist[j].data(), h.data());
    for (int i = 0; i < m; ++i) {
      ts[i] = (step + t.c[i]) * tau;
      ud[i] = wave_d(1, ts[i]);
      sc[i] = sigma > 0 ? std::exp(-sigma * ts[i]) : 1.0;
      if (setup.forcing) h[i] -= sc[i] * setup.forcing(ts[i]);
    }
    auto residual = [&](const std::vector<double>& y, std::vector<double>& f, double& scale) {
      scale = 0;
      for (int i = 0; i < m; ++i) {
        double w0y = 0;
        const double* w0 = w.block(0);
        for (int j = 0; j < m; ++j) w0y += w0[i * m + j] * y[j];
        double gval = sc[i] * g(y[i] / sc[i] + ud[i]);
        f[i] = w0y + gval + h[i];
        scale = std::max(scale, std::abs(w0y) + std::abs(gval) + std::abs(h[i]));
      }
    };
    auto jacobian = [&](const std::vector<double>& y, Mat& j) {
      const double* w0 = w.block(0);
      for (int i = 0; i < m; ++i)
        for (int jj = 0; jj < m; ++jj) j(i, jj) = w0[i * m + jj];
      for (int i = 0; i < m; ++i) j(i, i) += dg(y[i] / sc[i] + ud[i]);
    };
    sol.newton[step] = newton_solve(ctx, x, residual, jacobian, step);
    hist[step] = x;
    for (int i = 0; i < m; ++i) sol.psi.entries[step][i] = x[i] / sc[i];
  }
  return sol;
}

Solution march_differentiated(const ProblemSetup& setup, const ButcherTableau& t, double tau,
                              int order, const ContourParams& params) {
  if (order != 1 && order != 2) throw config_error("march_differentiated: order must be 1 or 2");
  if (setup.shift > 0)
    throw config_error("march_differentiated: the shift option applies to the plain variant");
  if (order == 2 && !setup.imp.second_derivative_continuous)
    throw config_error("march_differentiated: order 2 requires a continuous g'' (impedance '" +
                       setup.imp.id + "' is only C^1)");
  if (!setup.imp.d2g)
    throw config_error("march_differentiated: impedance '" + setup.imp.id + "' lacks g''");

  const int n = steps_for(setup.final_time, tau);
  const int m = t.m;

  RealTable w(compute_weights(setup.transfer, t, tau, n, params));
  RealTable om1(compute_weights(integrator(1), t, tau, n, params));
  RealTable om2;
  if (order == 2) om2 = RealTable(compute_weights(integrator(2), t, tau, n, params));

  auto wave_d = [&](int k, double time) {
    if (setup.wave_truncate_time >= 0 && time > setup.wave_truncate_time) return 0.0;
    return setup.wave_scale * setup.wave.derivative(k, time);
  };

  // Stage samples of du_inc and the higher derivative data, analytic or as
  // discrete CQ derivatives of the sampled du_inc.
  std::vector<std::vector<double>> u1(n, std::vector<double>(m)), u2 = u1, u3 = u1;
  for (int step = 0; step < n; ++step)
    for (int i = 0; i < m; ++i) u1[step][i] = wave_d(1, (step + t.c[i]) * tau);
  if (setup.derivative_data == DerivativeData::analytic) {
    for (int step = 0; step < n; ++step)
      for (int i = 0; i < m; ++i) {
        u2[step][i] = wave_d(2, (step + t.c[i]) * tau);
        if (order == 2) u3[step][i] = wave_d(3, (step + t.c[i]) * tau);
      }
  } else {
    RealTable wd(compute_weights(differentiator(), t, tau, n, params));
    auto dconv = [&](const std::vector<std::vector<double>>& src,
                     std::vector<std::vector<double>>& dst) {
      for (int k = 0; k < n; ++k)
        for (int j = 0; j + k < n; ++j) wd.matvec_add(k, src[j].data(), dst[j + k].data());
    };
    for (auto& row : u2) std::fill(row.begin(), row.end(), 0.0);
    dconv(u1, u2);
    if (order == 2) {
      for (auto& row : u3) std::fill(row.begin(), row.end(), 0.0);
      dconv(u2, u3);
    }
  }

  Solution sol;
  sol.tau = tau;
  sol.steps = n;
  sol.tableau = t.name;
  sol.stiffly_accurate = t.stiffly_accurate;
  sol.variant = order == 1 ? Variant::differentiated_1 : Variant::differentiated_2;
  sol.psi = StageSequence::zeros(m, tau, n);
  sol.differentiated = StageSequence::zeros(m, tau, n);
  sol.newton.resize(n);

  StepContext ctx;
  ctx.m = m;
  ctx.newton_tol = setup.newton_tolerance;
  // The differentiated stage systems are not monotone in the unknown; allow
  // the solver a larger budget than the plain march needs.
  ctx.max_iterations = 200;
  ctx.max_halvings = 12;
  std::vector<std::vector<double>> v(n, std::vector<double>(m, 0.0));
  std::vector<double> x(m, 0.0), h(m), hp(m), hp2(m);
  const auto& dg = setup.imp.dg;
  const auto& d2g = setup.imp.d2g;
  auto d3g = setup.imp.d3g ? setup.imp.d3g : [](double) { return 0.0; };

  for (int step = 0; step < n; ++step) {
    std::fill(h.begin(), h.end(), 0.0);
    std::fill(hp.begin(), hp.end(), 0.0);
    std::fill(hp2.begin(), hp2.end(), 0.0);
    for (int j = 0; j < step; ++j) {
      w.matvec_add(step - j, v[j].data(), h.data());
      om1.matvec_add(step - j, v[j].data(), hp.data());
      if (order == 2) om2.matvec_add(step - j, v[j].data(), hp2.data());
    }
    if (setup.forcing)
      for (int i = 0; i < m; ++i) h[i] -= setup.forcing((step + t.c[i]) * tau);

    const double* w0 = w.block(0);
    const double* o10 = om1.block(0);
    const double* o20 = order == 2 ? om2.block(0) : nullptr;

    auto residual = [&](const std::vector<double>& y, std::vector<double>& f, double& scale) {
      scale = 0;
      for (int i = 0; i < m; ++i) {
        double w0y = 0, psi_i = 0, psid_i = 0;
        for (int j = 0; j < m; ++j) {
          w0y += w0[i * m + j] * y[j];
          psid_i += o10[i * m + j] * y[j];
          if (order == 2) psi_i += o20[i * m + j] * y[j];
        }
        double gterm, gmag;
        if (order == 1) {
          double ps = hp[i] + psid_i;  // psi reconstructed through the diagonal
          gterm = dg(ps + u1[step][i]) * (y[i] + u2[step][i]);
          gmag = std::abs(gterm);
        } else {
          double pd = hp[i] + psid_i;
          double ps = hp2[i] + psi_i;
          double arg = ps + u1[step][i];
          double vel = pd + u2[step][i];
          double t1 = dg(arg) * (y[i] + u3[step][i]);
          double t2 = d2g(arg) * vel * vel;
          gterm = t1 + t2;
          gmag = std::abs(t1) + std::abs(t2);
        }
        f[i] = w0y + gterm + h[i];
        scale = std::max(scale, std::abs(w0y) + gmag + std::abs(h[i]));
      }
    };
    auto jacobian = [&](const std::vector<double>& y, Mat& jm) {
      for (int i = 0; i < m; ++i)
        for (int jj = 0; jj < m; ++jj) jm(i, jj) = w0[i * m + jj];
      for (int i = 0; i < m; ++i) {
        double psi_i = 0, psid_i = 0;
        for (int j = 0; j < m; ++j) {
          psid_i += o10[i * m + j] * y[j];
          if (order == 2) psi_i += o20[i * m + j] * y[j];
        }
        if (order == 1) {
          double arg = hp[i] + psid_i + u1[step][i];
          jm(i, i) += dg(arg);
          double c2 = d2g(arg) * (y[i] + u2[step][i]);
          for (int jj = 0; jj < m; ++jj) jm(i, jj) += c2 * o10[i * m + jj];
        } else {
          double arg = hp2[i] + psi_i + u1[step][i];
          double vel = hp[i] + psid_i + u2[step][i];
          jm(i, i) += dg(arg);
          double c_ps = d2g(arg) * (y[i] + u3[step][i]) + d3g(arg) * vel * vel;
          double c_pd = 2.0 * d2g(arg) * vel;
          for (int jj = 0; jj < m; ++jj) {
            jm(i, jj) += c_ps * o20[i * m + jj];
            jm(i, jj) += c_pd * o10[i * m + jj];
          }
        }
      }
    };
    sol.newton[step] = newton_solve(ctx, x, residual, jacobian, step);
    v[step] = x;
    for (int i = 0; i < m; ++i) {
      double psid_i = 0, psi_i = 0;
      for (int j = 0; j < m; ++j) {
        psid_i += o10[i * m + j] * x[j];
        if (order == 2) psi_i += o20[i * m + j] * x[j];
      }
      sol.differentiated.entries[step][i] = x[i];
      sol.psi.entries[step][i] = order == 1 ? hp[i] + psid_i : hp2[i] + psi_i;
    }
  }
  return sol;
}

Solution reference_solution(const ProblemSetup& setup, const ButcherTableau& t_ref, double tau_ref,
                            const ContourParams& params) {
  if (!t_ref.stiffly_accurate)
    throw config_error("reference_solution: reference tableau must be stiffly accurate (c_m = 1)");
  ProblemSetup plain = setup;
  plain.variant = Variant::plain;
  return march(plain, t_ref, tau_ref, params);
}

double l2tau_error(const Solution& a, const Solution& b) {
  const bool same_tau = std::abs(a.tau - b.tau) <= 1e-12 * std::max(a.tau, b.tau);
  if (same_tau && a.tableau == b.tableau) {
    if (a.steps != b.steps) throw config_error("l2tau_error: step count mismatch");
    double s = 0;
    for (int k = 0; k < a.steps; ++k)
      for (int i = 0; i < a.psi.stages; ++i)
        s += std::norm(a.psi.entries[k][i] - b.psi.entries[k][i]);
    return std::sqrt(a.tau * s);
  }
  const Solution& coarse = a.tau >= b.tau ? a : b;
  const Solution& fine = a.tau >= b.tau ? b : a;
  double ratio = coarse.tau / fine.tau;
  int r = static_cast<int>(std::llround(ratio));
  if (std::abs(ratio - r) > 1e-9)
    throw config_error("l2tau_error: non-integer stepsize ratio (no interpolation)");
  if (!coarse.stiffly_accurate || !fine.stiffly_accurate)
    throw config_error("l2tau_error: node comparison needs stiffly accurate methods (c_m = 1)");
  if (static_cast<long long>(coarse.steps) * r > fine.steps)
    throw config_error("l2tau_error: grids do not cover the same interval");
  double s = 0;
  for (int k = 0; k < coarse.steps; ++k) {
    double e = coarse.node_value(k) - fine.node_value((k + 1) * r - 1);
    s += e * e;
  }
  return std::sqrt(coarse.tau * s);
}

double fit_slope(const std::vector<double>& taus, const std::vector<double>& errors,
                 double* fit_residual) {
  if (taus.size() != errors.size() || taus.size() < 2)
    throw config_error("fit_slope: need at least two points");
  const int n = static_cast<int>(taus.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (int i = 0; i < n; ++i) {
    if (!(errors[i] > 0)) throw numerical_error("fit_slope: nonpositive error value");
    double lx = std::log(taus[i]), ly = std::log(errors[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  double denom = n * sxx - sx * sx;
  double slope = (n * sxy - sx * sy) / denom;
  double intercept = (sy - slope * sx) / n;
  if (fit_residual) {
    double rss = 0;
    for (int i = 0; i < n; ++i) {
      double d = std::log(errors[i]) - (intercept + slope * std::log(taus[i]));
      rss += d * d;
    }
    *fit_residual = std::sqrt(rss / n);
  }
  return slope;
}

ErrorReport convergence_study(const ProblemSetup& setup, const ButcherTableau& t, int k_min,
                              int k_max, const StudyOptions& opts, const ContourParams& params) {
  if (k_max - k_min + 1 < 5) throw config_error("convergence_study: need a ladder of >= 5 stepsizes");
  if (opts.k_ref < k_max + 3)
    throw config_error("convergence_study: reference stepsize must be at least 8x finer");
  if (opts.drop_coarsest < 0 || opts.drop_coarsest > 2)
    throw config_error("convergence_study: drop_coarsest must be 0..2");

  const double T = setup.final_time;
  ButcherTableau t_ref = make_tableau(opts.reference_tableau);
  Solution ref = reference_solution(setup, t_ref, T / std::pow(2.0, opts.k_ref), params);

  ErrorReport report;
  report.dropped_coarsest = opts.drop_coarsest;
  for (int k = k_min; k <= k_max; ++k) {
    double tau = T / std::pow(2.0, k);
    Solution sol = march(setup, t, tau, params);
    report.taus.push_back(tau);
    report.errors.push_back(l2tau_error(sol, ref));
    report.newton_max.push_back(sol.max_newton_iterations());
  }
  std::vector<double> taus(report.taus.begin() + opts.drop_coarsest, report.taus.end());
  std::vector<double> errs(report.errors.begin() + opts.drop_coarsest, report.errors.end());
  report.slope_l2 = fit_slope(taus, errs, &report.fit_residual);
  report.slope = 2.0 * report.slope_l2;
  report.fit_residual *= 2.0;
  return report;
}

}  // namespace cqlab
