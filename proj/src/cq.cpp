#include "cqlab/cq.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

namespace cqlab {

namespace {

constexpr double eps = std::numeric_limits<double>::epsilon();

bool is_pow2(int n) { return n > 0 && (n & (n - 1)) == 0; }

// In-place radix-2 FFT of x, sign -1: sum_l x_l e^{-2 pi i l n / N}.
void fft_pow2(std::vector<cplx>& x) {
  const std::size_t n = x.size();
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(x[i], x[j]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    double ang = -2.0 * pi / static_cast<double>(len);
    cplx wl = std::polar(1.0, ang);
    for (std::size_t i = 0; i < n; i += len) {
      cplx w = 1.0;
      for (std::size_t k = 0; k < len / 2; ++k) {
        cplx u = x[i + k], v = x[i + k + len / 2] * w;
        x[i + k] = u + v;
        x[i + k + len / 2] = u - v;
        w *= wl;
      }
    }
  }
}

// Forward DFT, direct O(N^2); used for the odd sizes that appear only in
// small examples.
std::vector<cplx> dft_direct(const std::vector<cplx>& x) {
  const std::size_t n = x.size();
  std::vector<cplx> out(n);
  for (std::size_t k = 0; k < n; ++k) {
    cplx s = 0;
    for (std::size_t l = 0; l < n; ++l)
      s += x[l] * std::polar(1.0, -2.0 * pi * static_cast<double>(l * k % n) / static_cast<double>(n));
    out[k] = s;
  }
  return out;
}

}  // namespace

DifferentiationSymbol::DifferentiationSymbol(ButcherTableau t, Path path)
    : tableau_(std::move(t)), path_(path) {
  if (path_ == Path::closed_form_radau2 && tableau_.name != "radau2")
    throw config_error("closed-form path is specific to radau2");
  a_inv_ = tableau_.a_inverse();
  std::vector<cplx> ainv1(tableau_.m), btainv(tableau_.m);
  std::vector<cplx> ones(tableau_.m, 1.0);
  ainv1 = a_inv_ * ones;
  for (int j = 0; j < tableau_.m; ++j) {
    cplx s = 0;
    for (int i = 0; i < tableau_.m; ++i) s += tableau_.b[i] * a_inv_(i, j);
    btainv[j] = s;
  }
  rank1_ = Mat::outer(ainv1, btainv);
}

Mat DifferentiationSymbol::operator()(cplx zeta) const {
  if (!(std::abs(zeta) < 1.0))
    throw config_error("delta: |zeta| must be < 1");
  const int m = tableau_.m;
  switch (path_) {
    case Path::direct_inverse: {
      if (std::abs(1.0 - zeta) <= 1e-14)
        throw config_error("delta: direct path singular at zeta = 1");
      std::vector<cplx> ones(m, 1.0), bv(tableau_.b.begin(), tableau_.b.end());
      Mat arg = tableau_.a + (zeta / (1.0 - zeta)) * Mat::outer(ones, bv);
      return inverse(arg);
    }
    case Path::sherman_morrison: {
      Mat d = a_inv_;
      cplx factor = zeta / (1.0 - tableau_.r_infinity * zeta);
      d -= factor * rank1_;
      return d;
    }
    case Path::closed_form_radau2: {
      Mat d(2, 2);
      d(0, 0) = 1.5;
      d(0, 1) = 0.5 * (1.0 - 4.0 * zeta);
      d(1, 0) = -4.5;
      d(1, 1) = 0.5 * (5.0 + 4.0 * zeta);
      return d;
    }
  }
  throw config_error("delta: unknown evaluation path");
}

WeightTable compute_weights(const TransferFunction& l, const ButcherTableau& t, double tau, int n,
                            const ContourParams& params) {
  if (n < 1) throw config_error("compute_weights: horizon must be >= 1");
  if (!(tau > 0)) throw config_error("compute_weights: tau must be positive");
  if (params.radius >= 1.0) throw config_error("compute_weights: contour radius must be < 1");
  const int m = t.m;
  const int nq = params.oversampling * n;
  const double rho =
      params.radius > 0 ? params.radius : std::pow(eps, 1.0 / static_cast<double>(nq + n));

  DifferentiationSymbol delta(t);
  const double sigma_dom = l.domain_abscissa();
  MatFunctionOptions mf_opts;
  mf_opts.safe_radius = [sigma_dom](cplx s) { return 0.45 * (s.real() - sigma_dom); };

  // Contour samples L(Delta(rho w^l)/tau); independent evaluations, one slot
  // per point, reduced by the FFT afterwards (thread-count independent).
  const bool mirror = l.conj_symmetric();
  const int n_eval = mirror ? nq / 2 + 1 : nq;
  std::vector<Mat> samples(nq);
  std::vector<std::string> failures(n_eval);
  parallel_for(static_cast<std::size_t>(n_eval), [&](std::size_t li) {
    double theta = 2.0 * pi * static_cast<double>(li) / nq;
    cplx zeta = std::polar(rho, theta);
    Mat d = delta(zeta);
    d *= 1.0 / tau;
    try {
      samples[li] = matrix_function(d, [&l](cplx s) { return l(s); }, mf_opts);
    } catch (const std::exception& e) {
      failures[li] = "theta = " + std::to_string(theta) + ": " + e.what();
    }
  });
  for (const auto& f : failures)
    if (!f.empty()) throw numerical_error("compute_weights: transfer evaluation failed at " + f);
  if (mirror) {
    for (int li = n_eval; li < nq; ++li) {
      Mat s = samples[nq - li];
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) s(i, j) = std::conj(s(i, j));
      samples[li] = std::move(s);
    }
  }

  double max_norm = 0;
  for (const auto& s : samples) max_norm = std::max(max_norm, s.frobenius_norm());

  WeightTable table;
  table.tau = tau;
  table.stages = m;
  table.transfer_id = l.id();
  table.rho = rho;
  table.oversampling = params.oversampling;
  double rq = std::pow(rho, nq);
  table.aliasing_bound = rq * max_norm / (1.0 - rq);
  table.weights.assign(n, Mat(m, m));

  std::vector<cplx> line(nq);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) {
      for (int li = 0; li < nq; ++li) line[li] = samples[li](i, j);
      if (is_pow2(nq))
        fft_pow2(line);
      else
        line = dft_direct(line);
      double scale = 1.0;
      for (int k = 0; k < n; ++k) {
        table.weights[k](i, j) = line[k] * (scale / nq);
        scale /= rho;
      }
    }
  return table;
}

StageSequence StageSequence::zeros(int stages, double tau, int n) {
  StageSequence f;
  f.stages = stages;
  f.tau = tau;
  f.entries.assign(n, std::vector<cplx>(stages, 0.0));
  return f;
}

double StageSequence::norm() const {
  double s = 0;
  for (const auto& e : entries)
    for (const auto& v : e) s += std::norm(v);
  return std::sqrt(s);
}

StageSequence block_convolve(const WeightTable& w, const StageSequence& f) {
  if (w.stages != f.stages) throw config_error("block_convolve: stage mismatch");
  if (w.horizon() < f.length()) throw config_error("block_convolve: weight table too short");
  if (std::abs(w.tau - f.tau) > 1e-14 * std::max(w.tau, f.tau))
    throw config_error("block_convolve: stepsize mismatch");
  const int n = f.length(), m = f.stages;
  StageSequence out = StageSequence::zeros(m, f.tau, n);
  out.offset = f.offset;
  for (int k = 0; k < n; ++k) {
    const Mat& wk = w.weights[k];
    for (int j = std::max(0, f.offset); j + k < n; ++j) {
      const auto& fj = f.entries[j];
      auto& on = out.entries[j + k];
      for (int r = 0; r < m; ++r) {
        cplx s = 0;
        for (int c = 0; c < m; ++c) s += wk(r, c) * fj[c];
        on[r] += s;
      }
    }
  }
  return out;
}

StageSequence resolvent_stages(cplx lambda, const ButcherTableau& t, double tau,
                               const StageSequence& f, const ContourParams& params) {
  // Guard: the per-step stage system (I - tau lambda A) is singular exactly
  // when tau*lambda is an eigenvalue of Delta(0) = A^{-1}.
  EigResult ev = eig_decompose(t.a_inverse());
  for (const auto& mu : ev.values)
    if (std::abs(mu - tau * lambda) < 1e-12 * (1.0 + std::abs(mu)))
      throw numerical_error("resolvent_stages: tau*lambda hits the spectrum of Delta(0)");
  TransferFunction res = resolvent_transfer(lambda);
  return block_convolve(compute_weights(res, t, tau, f.length(), params), f);
}

double compose_check(const TransferFunction& l1, const TransferFunction& l2,
                     const ButcherTableau& t, const StageSequence& f,
                     const ContourParams& params) {
  const int n = f.length();
  StageSequence step1 = block_convolve(compute_weights(l1, t, f.tau, n, params), f);
  StageSequence two = block_convolve(compute_weights(l2, t, f.tau, n, params), step1);
  StageSequence once = block_convolve(compute_weights(product(l2, l1), t, f.tau, n, params), f);
  double s = 0;
  for (int k = 0; k < n; ++k)
    for (int i = 0; i < f.stages; ++i) s += std::norm(two.entries[k][i] - once.entries[k][i]);
  return std::sqrt(s);
}

void export_csv(const WeightTable& w, std::ostream& os) {
  const int m = w.stages;
  os.precision(17);
  os << "n";
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) os << ",re_w" << i << j << ",im_w" << i << j;
  os << "\n";
  for (int k = 0; k < w.horizon(); ++k) {
    os << k;
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < m; ++j)
        os << "," << w.weights[k](i, j).real() << "," << w.weights[k](i, j).imag();
    os << "\n";
  }
}

}  // namespace cqlab
