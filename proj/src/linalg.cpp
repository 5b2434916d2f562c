#include "cqlab/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace cqlab {

namespace {
constexpr double eps = std::numeric_limits<double>::epsilon();
}

Mat Mat::identity(int n) {
  Mat m(n, n);
  for (int i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Mat Mat::diag(const std::vector<cplx>& d) {
  Mat m(static_cast<int>(d.size()), static_cast<int>(d.size()));
  for (int i = 0; i < m.rows(); ++i) m(i, i) = d[i];
  return m;
}

Mat Mat::outer(const std::vector<cplx>& u, const std::vector<cplx>& v) {
  Mat m(static_cast<int>(u.size()), static_cast<int>(v.size()));
  for (int i = 0; i < m.rows(); ++i)
    for (int j = 0; j < m.cols(); ++j) m(i, j) = u[i] * v[j];
  return m;
}

Mat& Mat::operator+=(const Mat& o) {
  for (std::size_t k = 0; k < a_.size(); ++k) a_[k] += o.a_[k];
  return *this;
}

Mat& Mat::operator-=(const Mat& o) {
  for (std::size_t k = 0; k < a_.size(); ++k) a_[k] -= o.a_[k];
  return *this;
}

Mat& Mat::operator*=(cplx s) {
  for (auto& v : a_) v *= s;
  return *this;
}

Mat Mat::adjoint() const {
  Mat m(cols_, rows_);
  for (int i = 0; i < rows_; ++i)
    for (int j = 0; j < cols_; ++j) m(j, i) = std::conj((*this)(i, j));
  return m;
}

Mat Mat::transpose() const {
  Mat m(cols_, rows_);
  for (int i = 0; i < rows_; ++i)
    for (int j = 0; j < cols_; ++j) m(j, i) = (*this)(i, j);
  return m;
}

double Mat::frobenius_norm() const {
  double s = 0;
  for (const auto& v : a_) s += std::norm(v);
  return std::sqrt(s);
}

double Mat::max_abs() const {
  double s = 0;
  for (const auto& v : a_) s = std::max(s, std::abs(v));
  return s;
}

Mat operator+(Mat a, const Mat& b) { return a += b; }
Mat operator-(Mat a, const Mat& b) { return a -= b; }

Mat operator*(const Mat& a, const Mat& b) {
  Mat c(a.rows(), b.cols());
  for (int i = 0; i < a.rows(); ++i)
    for (int k = 0; k < a.cols(); ++k) {
      cplx aik = a(i, k);
      if (aik == cplx(0.0)) continue;
      for (int j = 0; j < b.cols(); ++j) c(i, j) += aik * b(k, j);
    }
  return c;
}

Mat operator*(cplx s, Mat a) { return a *= s; }

std::vector<cplx> operator*(const Mat& a, const std::vector<cplx>& x) {
  std::vector<cplx> y(a.rows());
  for (int i = 0; i < a.rows(); ++i) {
    cplx s = 0;
    for (int j = 0; j < a.cols(); ++j) s += a(i, j) * x[j];
    y[i] = s;
  }
  return y;
}

Mat lu_solve(Mat a, Mat b) {
  const int n = a.rows();
  if (a.cols() != n || b.rows() != n) throw config_error("lu_solve: dimension mismatch");
  double scale = a.max_abs();
  for (int k = 0; k < n; ++k) {
    int piv = k;
    for (int i = k + 1; i < n; ++i)
      if (std::abs(a(i, k)) > std::abs(a(piv, k))) piv = i;
    if (std::abs(a(piv, k)) <= 64 * eps * scale)
      throw numerical_error("lu_solve: matrix numerically singular");
    if (piv != k) {
      for (int j = 0; j < n; ++j) std::swap(a(k, j), a(piv, j));
      for (int j = 0; j < b.cols(); ++j) std::swap(b(k, j), b(piv, j));
    }
    for (int i = k + 1; i < n; ++i) {
      cplx f = a(i, k) / a(k, k);
      a(i, k) = f;
      for (int j = k + 1; j < n; ++j) a(i, j) -= f * a(k, j);
      for (int j = 0; j < b.cols(); ++j) b(i, j) -= f * b(k, j);
    }
  }
  for (int k = n - 1; k >= 0; --k)
    for (int j = 0; j < b.cols(); ++j) {
      cplx s = b(k, j);
      for (int i = k + 1; i < n; ++i) s -= a(k, i) * b(i, j);
      b(k, j) = s / a(k, k);
    }
  return b;
}

std::vector<cplx> lu_solve(const Mat& a, const std::vector<cplx>& b) {
  Mat rhs(static_cast<int>(b.size()), 1);
  for (int i = 0; i < rhs.rows(); ++i) rhs(i, 0) = b[i];
  Mat x = lu_solve(a, rhs);
  std::vector<cplx> out(b.size());
  for (int i = 0; i < rhs.rows(); ++i) out[i] = x(i, 0);
  return out;
}

Mat inverse(const Mat& a) { return lu_solve(a, Mat::identity(a.rows())); }

std::vector<double> hermitian_eigenvalues(const Mat& in) {
  const int n = in.rows();
  Mat a = 0.5 * (in + in.adjoint());
  double anorm = a.frobenius_norm();
  if (anorm == 0.0) return std::vector<double>(n, 0.0);
  for (int sweep = 0; sweep < 60; ++sweep) {
    double off = 0;
    for (int p = 0; p < n; ++p)
      for (int q = p + 1; q < n; ++q) off += std::norm(a(p, q));
    if (std::sqrt(2 * off) <= 1e-15 * anorm) break;
    for (int p = 0; p < n; ++p)
      for (int q = p + 1; q < n; ++q) {
        double w = std::abs(a(p, q));
        if (w <= 1e-18 * anorm) continue;
        cplx phase = a(p, q) / w;  // a_pq = w * phase
        double app = a(p, p).real(), aqq = a(q, q).real();
        double xi = (aqq - app) / (2 * w);
        double t = (xi >= 0 ? 1.0 : -1.0) / (std::abs(xi) + std::sqrt(1 + xi * xi));
        double c = 1 / std::sqrt(1 + t * t), s = t * c;
        // unitary U = diag(1, conj(phase)) * [[c, s], [-s, c]] acting on (p,q)
        cplx upp = c, upq = s;
        cplx uqp = -s * std::conj(phase), uqq = c * std::conj(phase);
        for (int k = 0; k < n; ++k) {  // A <- A U
          cplx akp = a(k, p), akq = a(k, q);
          a(k, p) = akp * upp + akq * uqp;
          a(k, q) = akp * upq + akq * uqq;
        }
        for (int k = 0; k < n; ++k) {  // A <- U^H A
          cplx apk = a(p, k), aqk = a(q, k);
          a(p, k) = std::conj(upp) * apk + std::conj(uqp) * aqk;
          a(q, k) = std::conj(upq) * apk + std::conj(uqq) * aqk;
        }
        a(p, q) = 0.0;
        a(q, p) = 0.0;
      }
  }
  std::vector<double> w(n);
  for (int i = 0; i < n; ++i) w[i] = a(i, i).real();
  std::sort(w.begin(), w.end());
  return w;
}

namespace {

// Givens pair (c real, s complex) with [c, s; -conj(s), c]^H [f; g] = [r; 0].
void givens(cplx f, cplx g, double& c, cplx& s) {
  if (g == cplx(0.0)) {
    c = 1.0;
    s = 0.0;
    return;
  }
  if (f == cplx(0.0)) {
    c = 0.0;
    s = std::conj(g) / std::abs(g);
    return;
  }
  double d = std::sqrt(std::norm(f) + std::norm(g));
  c = std::abs(f) / d;
  s = (f / std::abs(f)) * std::conj(g) / d;
}

}  // namespace

SchurResult schur_decompose(const Mat& in) {
  const int n = in.rows();
  Mat h = in, q = Mat::identity(n);

  // Householder reduction to upper Hessenberg, accumulating Q.
  for (int k = 0; k < n - 2; ++k) {
    double xnorm = 0;
    for (int i = k + 1; i < n; ++i) xnorm += std::norm(h(i, k));
    xnorm = std::sqrt(xnorm);
    if (xnorm <= 1e-300) continue;
    cplx alpha = h(k + 1, k);
    cplx phase = (std::abs(alpha) > 0) ? alpha / std::abs(alpha) : cplx(1.0);
    cplx beta = -phase * xnorm;
    std::vector<cplx> v(n, 0.0);
    v[k + 1] = alpha - beta;
    for (int i = k + 2; i < n; ++i) v[i] = h(i, k);
    double vv = 0;
    for (int i = k + 1; i < n; ++i) vv += std::norm(v[i]);
    if (vv <= 1e-300) continue;
    // H <- P H P with P = I - 2 v v^H / (v^H v)
    for (int j = 0; j < n; ++j) {
      cplx dot = 0;
      for (int i = k + 1; i < n; ++i) dot += std::conj(v[i]) * h(i, j);
      dot *= 2.0 / vv;
      for (int i = k + 1; i < n; ++i) h(i, j) -= dot * v[i];
    }
    for (int i = 0; i < n; ++i) {
      cplx dot = 0;
      for (int j = k + 1; j < n; ++j) dot += h(i, j) * v[j];
      dot *= 2.0 / vv;
      for (int j = k + 1; j < n; ++j) h(i, j) -= dot * std::conj(v[j]);
    }
    for (int i = 0; i < n; ++i) {
      cplx dot = 0;
      for (int j = k + 1; j < n; ++j) dot += q(i, j) * v[j];
      dot *= 2.0 / vv;
      for (int j = k + 1; j < n; ++j) q(i, j) -= dot * std::conj(v[j]);
    }
  }

  // Shifted QR with deflation on the Hessenberg form.
  int hi = n - 1;
  int iter = 0;
  const int max_iter = 40 * std::max(n, 1);
  while (hi > 0) {
    double sub = std::abs(h(hi, hi - 1));
    if (sub <= eps * (std::abs(h(hi, hi)) + std::abs(h(hi - 1, hi - 1)) + 1e-300)) {
      h(hi, hi - 1) = 0.0;
      --hi;
      iter = 0;
      continue;
    }
    if (++iter > max_iter) throw numerical_error("schur_decompose: QR iteration failed to converge");
    // Wilkinson shift from the trailing 2x2 block.
    cplx a11 = h(hi - 1, hi - 1), a12 = h(hi - 1, hi), a21 = h(hi, hi - 1), a22 = h(hi, hi);
    cplx tr = a11 + a22, det = a11 * a22 - a12 * a21;
    cplx disc = std::sqrt(tr * tr - 4.0 * det);
    cplx l1 = 0.5 * (tr + disc), l2 = 0.5 * (tr - disc);
    cplx mu = (std::abs(l1 - a22) < std::abs(l2 - a22)) ? l1 : l2;
    if (iter % 13 == 0) mu = cplx(std::abs(a21) + std::abs(a22), 0.0);  // exceptional shift

    // Explicit shifted QR sweep on the active block 0..hi.
    for (int i = 0; i <= hi; ++i) h(i, i) -= mu;
    std::vector<double> cs(hi);
    std::vector<cplx> sn(hi);
    for (int k = 0; k < hi; ++k) {
      givens(h(k, k), h(k + 1, k), cs[k], sn[k]);
      for (int j = k; j < n; ++j) {
        cplx t1 = h(k, j), t2 = h(k + 1, j);
        h(k, j) = cs[k] * t1 + sn[k] * t2;
        h(k + 1, j) = -std::conj(sn[k]) * t1 + cs[k] * t2;
      }
      h(k + 1, k) = 0.0;
    }
    for (int k = 0; k < hi; ++k) {
      for (int i = 0; i <= k + 1; ++i) {
        cplx t1 = h(i, k), t2 = h(i, k + 1);
        h(i, k) = t1 * cs[k] + t2 * std::conj(sn[k]);
        h(i, k + 1) = -t1 * sn[k] + t2 * cs[k];
      }
      for (int i = 0; i < n; ++i) {
        cplx t1 = q(i, k), t2 = q(i, k + 1);
        q(i, k) = t1 * cs[k] + t2 * std::conj(sn[k]);
        q(i, k + 1) = -t1 * sn[k] + t2 * cs[k];
      }
    }
    for (int i = 0; i <= hi; ++i) h(i, i) += mu;
  }
  return {q, h};
}

EigResult eig_decompose(const Mat& a) {
  const int n = a.rows();
  SchurResult sr = schur_decompose(a);
  double tnorm = sr.t.frobenius_norm() + 1e-300;
  Mat y(n, n);
  for (int k = 0; k < n; ++k) {
    cplx lam = sr.t(k, k);
    y(k, k) = 1.0;
    for (int i = k - 1; i >= 0; --i) {
      cplx s = 0;
      for (int j = i + 1; j <= k; ++j) s += sr.t(i, j) * y(j, k);
      cplx denom = sr.t(i, i) - lam;
      if (std::abs(denom) < eps * tnorm)
        denom += cplx(eps * tnorm, eps * tnorm);  // near-defective: keep finite
      y(i, k) = -s / denom;
    }
    double nrm = 0;
    for (int i = 0; i <= k; ++i) nrm += std::norm(y(i, k));
    nrm = std::sqrt(nrm);
    for (int i = 0; i <= k; ++i) y(i, k) /= nrm;
  }
  EigResult r;
  r.values.resize(n);
  for (int k = 0; k < n; ++k) r.values[k] = sr.t(k, k);
  r.vectors = sr.q * y;
  double cond = std::numeric_limits<double>::infinity();
  try {
    cond = r.vectors.frobenius_norm() * inverse(r.vectors).frobenius_norm();
  } catch (const numerical_error&) {
  }
  r.vector_cond = cond;
  return r;
}

namespace {

// Unitary swap of adjacent diagonal entries k, k+1 of a triangular T,
// updating Q accordingly.
void swap_schur_block(Mat& t, Mat& q, int k) {
  cplx a = t(k, k), b = t(k, k + 1), d = t(k + 1, k + 1);
  if (std::abs(b) == 0.0 || std::abs(a - d) == 0.0) {
    std::swap(t(k, k), t(k + 1, k + 1));
    return;
  }
  // eigenvector of [[a, b], [0, d]] for eigenvalue d: (b, d - a)
  double c;
  cplx s;
  givens(b, d - a, c, s);
  const int n = t.rows();
  for (int j = 0; j < n; ++j) {
    cplx t1 = t(k, j), t2 = t(k + 1, j);
    t(k, j) = c * t1 + s * t2;
    t(k + 1, j) = -std::conj(s) * t1 + c * t2;
  }
  for (int i = 0; i < n; ++i) {
    cplx t1 = t(i, k), t2 = t(i, k + 1);
    t(i, k) = t1 * c + t2 * std::conj(s);
    t(i, k + 1) = -t1 * s + t2 * c;
  }
  for (int i = 0; i < q.rows(); ++i) {
    cplx t1 = q(i, k), t2 = q(i, k + 1);
    q(i, k) = t1 * c + t2 * std::conj(s);
    q(i, k + 1) = -t1 * s + t2 * c;
  }
  t(k + 1, k) = 0.0;
}

// f of a triangular block whose eigenvalues are clustered: Taylor series
// about the cluster mean, coefficients from a small sampling circle.
Mat taylor_block(const Mat& tb, const std::function<cplx(cplx)>& f,
                 const MatFunctionOptions& opts) {
  const int k = tb.rows();
  cplx mu = 0;
  for (int i = 0; i < k; ++i) mu += tb(i, i);
  mu /= static_cast<double>(k);
  double spread = 0;
  for (int i = 0; i < k; ++i) spread = std::max(spread, std::abs(tb(i, i) - mu));
  double r = std::max(16.0 * spread, 1e-2 * (1.0 + std::abs(mu)));
  if (opts.safe_radius) {
    double cap = opts.safe_radius(mu);
    if (cap < 4.0 * spread)
      throw numerical_error("matrix_function: clustered eigenvalues too close to the domain boundary");
    r = std::min(r, cap);
  }
  const int nsample = 64, nterms = 40;
  std::vector<cplx> fs(nsample);
  for (int p = 0; p < nsample; ++p)
    fs[p] = f(mu + r * std::polar(1.0, 2 * pi * p / nsample));
  Mat nmat = tb;
  for (int i = 0; i < k; ++i) nmat(i, i) -= mu;
  Mat pow = Mat::identity(k), out(k, k);
  for (int j = 0; j < nterms; ++j) {
    cplx cj = 0;
    for (int p = 0; p < nsample; ++p)
      cj += fs[p] * std::polar(std::pow(r, -j), -2 * pi * p * j / nsample);
    cj /= static_cast<double>(nsample);
    out += cj * pow;
    pow = pow * nmat;
  }
  return out;
}

}  // namespace

Mat matrix_function(const Mat& a, const std::function<cplx(cplx)>& f,
                    const MatFunctionOptions& opts) {
  const int n = a.rows();
  if (n == 1) {
    Mat r(1, 1);
    r(0, 0) = f(a(0, 0));
    return r;
  }
  EigResult ed = eig_decompose(a);
  if (ed.vector_cond < opts.cond_limit) {
    std::vector<cplx> fl(n);
    for (int i = 0; i < n; ++i) fl[i] = f(ed.values[i]);
    return ed.vectors * Mat::diag(fl) * inverse(ed.vectors);
  }

  // Schur-Parlett fallback: cluster close eigenvalues into contiguous blocks.
  SchurResult sr = schur_decompose(a);
  Mat t = sr.t, q = sr.q;
  double scale = 0;
  for (int i = 0; i < n; ++i) scale = std::max(scale, std::abs(t(i, i)));
  double sep = 1e-2 * (1.0 + scale);

  std::vector<int> cluster(n, -1);
  int nclusters = 0;
  for (int i = 0; i < n; ++i) {
    if (cluster[i] >= 0) continue;
    cluster[i] = nclusters;
    for (int j = 0; j < n; ++j) {
      if (cluster[j] >= 0) continue;
      for (int l = 0; l < n; ++l)
        if (cluster[l] == nclusters && std::abs(t(j, j) - t(l, l)) <= sep) {
          cluster[j] = nclusters;
          break;
        }
    }
    ++nclusters;
  }
  // Bubble the diagonal into cluster-contiguous order by unitary swaps.
  std::vector<int> tag(n);
  for (int i = 0; i < n; ++i) tag[i] = cluster[i];
  for (bool moved = true; moved;) {
    moved = false;
    for (int i = 0; i + 1 < n; ++i) {
      if (tag[i] > tag[i + 1]) {
        swap_schur_block(t, q, i);
        std::swap(tag[i], tag[i + 1]);
        moved = true;
      }
    }
  }
  std::vector<int> starts;
  for (int i = 0; i < n; ++i)
    if (i == 0 || tag[i] != tag[i - 1]) starts.push_back(i);
  starts.push_back(n);
  const int nb = static_cast<int>(starts.size()) - 1;

  Mat ft(n, n);
  auto block = [&](const Mat& src, int bi, int bj) {
    int r0 = starts[bi], r1 = starts[bi + 1], c0 = starts[bj], c1 = starts[bj + 1];
    Mat out(r1 - r0, c1 - c0);
    for (int i = r0; i < r1; ++i)
      for (int j = c0; j < c1; ++j) out(i - r0, j - c0) = src(i, j);
    return out;
  };
  auto put_block = [&](Mat& dst, const Mat& src, int bi, int bj) {
    int r0 = starts[bi], c0 = starts[bj];
    for (int i = 0; i < src.rows(); ++i)
      for (int j = 0; j < src.cols(); ++j) dst(r0 + i, c0 + j) = src(i, j);
  };

  for (int bi = 0; bi < nb; ++bi) {
    Mat tb = block(t, bi, bi);
    Mat fb = (tb.rows() == 1) ? Mat(1, 1) : taylor_block(tb, f, opts);
    if (tb.rows() == 1) fb(0, 0) = f(tb(0, 0));
    put_block(ft, fb, bi, bi);
  }
  // Parlett recurrence over superdiagonal blocks: solve the small Sylvester
  // equation T_ii F_ij - F_ij T_jj = F_ii T_ij - T_ij F_jj + sum_k (F_ik T_kj - T_ik F_kj).
  for (int d = 1; d < nb; ++d) {
    for (int bi = 0; bi + d < nb; ++bi) {
      int bj = bi + d;
      Mat tii = block(t, bi, bi), tjj = block(t, bj, bj), tij = block(t, bi, bj);
      Mat fii = block(ft, bi, bi), fjj = block(ft, bj, bj);
      Mat rhs = fii * tij - tij * fjj;
      for (int bk = bi + 1; bk < bj; ++bk)
        rhs += block(ft, bi, bk) * block(t, bk, bj) - block(t, bi, bk) * block(ft, bk, bj);
      int p = tii.rows(), r = tjj.rows();
      Mat sys(p * r, p * r), vec(p * r, 1);
      for (int i = 0; i < p; ++i)
        for (int j = 0; j < r; ++j) {
          int row = i * r + j;
          vec(row, 0) = rhs(i, j);
          for (int l = 0; l < p; ++l) sys(row, l * r + j) += tii(i, l);
          for (int l = 0; l < r; ++l) sys(row, i * r + l) -= tjj(l, j);
        }
      Mat sol = lu_solve(sys, vec);
      Mat fij(p, r);
      for (int i = 0; i < p; ++i)
        for (int j = 0; j < r; ++j) fij(i, j) = sol(i * r + j, 0);
      put_block(ft, fij, bi, bj);
    }
  }
  return q * ft * q.adjoint();
}

}  // namespace cqlab
