#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <span>
#include <stdexcept>
#include <vector>

#include "learnsketch/dense_matrix.hpp"

namespace learnsketch {

/// Thin SVD a = u · diag(singular_values) · vt.
///
/// For an r×c input with p = min(r, c): u is r×p, vt is p×c. Singular values
/// are non-increasing. Each right singular vector (row of vt) is signed so
/// that its largest-magnitude component is positive; u follows.
struct SvdResult {
  DenseMatrix u;
  std::vector<double> singular_values;
  DenseMatrix vt;
};

/// Eigendecomposition of a symmetric matrix; eigenvalues non-increasing,
/// eigenvectors stored as columns.
struct SymmetricEigen {
  std::vector<double> values;
  DenseMatrix vectors;
};

namespace detail {

inline constexpr double kJacobiTolerance = 1e-15;
inline constexpr int kMaxJacobiSweeps = 80;

struct TallSvd {
  std::vector<double> columns;  // column-major m×n, columns are u_j·σ_j after convergence
  std::vector<double> v;        // column-major n×n
  std::size_t m = 0;
  std::size_t n = 0;
};

// One-sided (Hestenes) Jacobi: rotates column pairs of a tall matrix until
// every pair is orthogonal to relative tolerance.
inline TallSvd hestenes(const DenseMatrix& a) {
  TallSvd w;
  w.m = a.rows();
  w.n = a.cols();
  const std::size_t m = w.m;
  const std::size_t n = w.n;
  w.columns.resize(m * n);
  for (std::size_t r = 0; r < m; ++r)
    for (std::size_t c = 0; c < n; ++c) w.columns[c * m + r] = a(r, c);
  w.v.assign(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) w.v[i * n + i] = 1.0;

  for (int sweep = 0; sweep < kMaxJacobiSweeps; ++sweep) {
    bool rotated = false;
    for (std::size_t p = 0; p + 1 < n; ++p) {
      double* cp = w.columns.data() + p * m;
      for (std::size_t q = p + 1; q < n; ++q) {
        double* cq = w.columns.data() + q * m;
        double alpha = 0.0, beta = 0.0, gamma = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
          alpha += cp[i] * cp[i];
          beta += cq[i] * cq[i];
          gamma += cp[i] * cq[i];
        }
        if (gamma == 0.0 || std::abs(gamma) <= kJacobiTolerance * std::sqrt(alpha * beta)) continue;
        rotated = true;
        const double zeta = (beta - alpha) / (2.0 * gamma);
        const double t = std::copysign(1.0, zeta) / (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = c * t;
        for (std::size_t i = 0; i < m; ++i) {
          const double x = cp[i];
          const double y = cq[i];
          cp[i] = c * x - s * y;
          cq[i] = s * x + c * y;
        }
        double* vp = w.v.data() + p * n;
        double* vq = w.v.data() + q * n;
        for (std::size_t i = 0; i < n; ++i) {
          const double x = vp[i];
          const double y = vq[i];
          vp[i] = c * x - s * y;
          vq[i] = s * x + c * y;
        }
      }
    }
    if (!rotated) break;
  }
  return w;
}

// Fills the flagged columns of q (r×k) with unit vectors orthogonal to every
// other column, drawing candidates from the standard basis.
inline void complete_columns(DenseMatrix& q, const std::vector<bool>& missing) {
  const std::size_t r = q.rows();
  const std::size_t k = q.cols();
  std::vector<bool> filled(k);
  for (std::size_t j = 0; j < k; ++j) filled[j] = !missing[j];
  std::size_t candidate = 0;
  for (std::size_t j = 0; j < k; ++j) {
    if (filled[j]) continue;
    while (true) {
      if (candidate >= r) throw std::logic_error("complete_columns: no orthogonal completion available");
      std::vector<double> x(r, 0.0);
      x[candidate++] = 1.0;
      for (int pass = 0; pass < 2; ++pass) {
        for (std::size_t o = 0; o < k; ++o) {
          if (!filled[o]) continue;
          double proj = 0.0;
          for (std::size_t i = 0; i < r; ++i) proj += q(i, o) * x[i];
          for (std::size_t i = 0; i < r; ++i) x[i] -= proj * q(i, o);
        }
      }
      const double nrm = std::sqrt(norm_sq(x));
      if (nrm < 0.5) continue;
      for (std::size_t i = 0; i < r; ++i) q(i, j) = x[i] / nrm;
      filled[j] = true;
      break;
    }
  }
}

inline SvdResult svd_tall(const DenseMatrix& a) {
  TallSvd w = hestenes(a);
  const std::size_t m = w.m;
  const std::size_t n = w.n;
  std::vector<double> sigma(n);
  for (std::size_t j = 0; j < n; ++j) {
    const double* cj = w.columns.data() + j * m;
    double s = 0.0;
    for (std::size_t i = 0; i < m; ++i) s += cj[i] * cj[i];
    sigma[j] = std::sqrt(s);
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return sigma[x] > sigma[y]; });

  SvdResult out{DenseMatrix(m, n), std::vector<double>(n), DenseMatrix(n, n)};
  std::vector<bool> missing(n, false);
  const double floor = std::numeric_limits<double>::min() * 1e8;
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t j = order[k];
    out.singular_values[k] = sigma[j];
    const double* cj = w.columns.data() + j * m;
    if (sigma[j] > floor) {
      for (std::size_t i = 0; i < m; ++i) out.u(i, k) = cj[i] / sigma[j];
    } else {
      out.singular_values[k] = 0.0;
      missing[k] = true;
    }
    const double* vj = w.v.data() + j * n;
    for (std::size_t i = 0; i < n; ++i) out.vt(k, i) = vj[i];
  }
  if (std::any_of(missing.begin(), missing.end(), [](bool b) { return b; })) complete_columns(out.u, missing);
  return out;
}

inline void normalize_signs(SvdResult& r) {
  for (std::size_t k = 0; k < r.vt.rows(); ++k) {
    auto v = r.vt.row(k);
    std::size_t best = 0;
    for (std::size_t i = 1; i < v.size(); ++i)
      if (std::abs(v[i]) > std::abs(v[best])) best = i;
    if (v[best] < 0.0) {
      for (double& x : v) x = -x;
      for (std::size_t i = 0; i < r.u.rows(); ++i) r.u(i, k) = -r.u(i, k);
    }
  }
}

}  // namespace detail

/// Thin SVD by one-sided Jacobi. Throws std::invalid_argument for empty or
/// non-finite input.
inline SvdResult svd(const DenseMatrix& a) {
  if (a.rows() == 0 || a.cols() == 0) throw std::invalid_argument("svd: empty matrix");
  a.require_finite("svd");
  SvdResult out;
  if (a.rows() >= a.cols()) {
    out = detail::svd_tall(a);
  } else {
    SvdResult t = detail::svd_tall(a.transpose());
    out.u = t.vt.transpose();
    out.singular_values = std::move(t.singular_values);
    out.vt = t.u.transpose();
  }
  detail::normalize_signs(out);
  return out;
}

/// Cyclic two-sided Jacobi eigensolver for symmetric matrices. Only the
/// upper triangle's symmetry is assumed, not checked.
inline SymmetricEigen symmetric_eigen(const DenseMatrix& s) {
  if (s.rows() != s.cols()) throw std::invalid_argument("symmetric_eigen: matrix is not square");
  s.require_finite("symmetric_eigen");
  const std::size_t n = s.rows();
  DenseMatrix a = s;
  DenseMatrix v = DenseMatrix::identity(n);
  const double scale = std::sqrt(a.frobenius_norm_sq());

  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
    if (off <= 1e-30 * scale * scale || off == 0.0) break;
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (std::abs(apq) <= 1e-300) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = std::copysign(1.0, theta) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double sn = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a(k, p);
          const double akq = a(k, q);
          a(k, p) = c * akp - sn * akq;
          a(k, q) = sn * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a(p, k);
          const double aqk = a(q, k);
          a(p, k) = c * apk - sn * aqk;
          a(q, k) = sn * apk + c * aqk;
        }
        a(p, q) = 0.0;
        a(q, p) = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
          const double vkp = v(k, p);
          const double vkq = v(k, q);
          v(k, p) = c * vkp - sn * vkq;
          v(k, q) = sn * vkp + c * vkq;
        }
      }
    }
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return a(x, x) > a(y, y); });
  SymmetricEigen out{std::vector<double>(n), DenseMatrix(n, n)};
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t j = order[k];
    out.values[k] = a(j, j);
    std::size_t best = 0;
    for (std::size_t i = 0; i < n; ++i) {
      out.vectors(i, k) = v(i, j);
      if (std::abs(v(i, j)) > std::abs(v(best, j))) best = i;
    }
    if (v(best, j) < 0.0)
      for (std::size_t i = 0; i < n; ++i) out.vectors(i, k) = -out.vectors(i, k);
  }
  return out;
}

/// Orthonormal basis for the column span of v via twice-iterated modified
/// Gram-Schmidt. Throws if a column loses more than 1 - 1e-10 of its norm to
/// the preceding columns (numerically rank deficient).
inline DenseMatrix orthonormalize(const DenseMatrix& v) {
  const std::size_t d = v.rows();
  const std::size_t k = v.cols();
  if (k > d) throw std::invalid_argument("orthonormalize: more columns than ambient dimension");
  v.require_finite("orthonormalize");
  DenseMatrix q(d, k);
  std::vector<double> x(d);
  for (std::size_t j = 0; j < k; ++j) {
    for (std::size_t i = 0; i < d; ++i) x[i] = v(i, j);
    const double original = std::sqrt(norm_sq(x));
    if (original == 0.0) throw std::invalid_argument("orthonormalize: zero column");
    for (int pass = 0; pass < 2; ++pass) {
      for (std::size_t o = 0; o < j; ++o) {
        double proj = 0.0;
        for (std::size_t i = 0; i < d; ++i) proj += q(i, o) * x[i];
        for (std::size_t i = 0; i < d; ++i) x[i] -= proj * q(i, o);
      }
    }
    const double remaining = std::sqrt(norm_sq(x));
    if (remaining <= 1e-10 * original) throw std::invalid_argument("orthonormalize: rank-deficient input");
    for (std::size_t i = 0; i < d; ++i) q(i, j) = x[i] / remaining;
  }
  return q;
}

/// Largest deviation of pᵀp from the identity.
inline double orthonormality_defect(const DenseMatrix& p) {
  const DenseMatrix g = gram(p);
  double worst = 0.0;
  for (std::size_t i = 0; i < g.rows(); ++i)
    for (std::size_t j = 0; j < g.cols(); ++j) worst = std::max(worst, std::abs(g(i, j) - (i == j ? 1.0 : 0.0)));
  return worst;
}

/// Row-wise projection a·p·pᵀ onto the column span of p (p: d×k orthonormal).
/// The complement is a minus this result.
inline DenseMatrix project_rows(const DenseMatrix& a, const DenseMatrix& p) {
  if (p.rows() != a.cols()) throw std::invalid_argument("project_rows: p rows must equal a cols");
  return multiply_a_bt(multiply(a, p), p);
}

namespace detail {
inline DenseMatrix gram_of(const DenseMatrix& m, std::size_t d) {
  if (m.rows() == 0) return DenseMatrix(d, d);
  return gram(m);
}
inline void require_compatible(const DenseMatrix& a, const DenseMatrix& b, const char* context) {
  if (b.rows() == 0 && b.cols() == 0) return;
  require_same_cols(a, b, context);
}
}  // namespace detail

/// Spectrum of aᵀa − bᵀb (non-increasing). A zero-row b counts as the zero sketch.
inline std::vector<double> gram_difference_spectrum(const DenseMatrix& a, const DenseMatrix& b) {
  detail::require_compatible(a, b, "gram_difference_spectrum");
  const std::size_t d = a.cols();
  DenseMatrix diff = detail::gram_of(a, d);
  if (b.rows() > 0) diff = subtract(diff, gram(b));
  return symmetric_eigen(diff).values;
}

/// Smallest eigenvalue of aᵀa − bᵀb; non-negative iff b never overestimates.
inline double gram_psd_gap(const DenseMatrix& a, const DenseMatrix& b) {
  return gram_difference_spectrum(a, b).back();
}

/// Spectral norm ‖aᵀa − bᵀb‖₂.
inline double covariance_error(const DenseMatrix& a, const DenseMatrix& b) {
  const auto ev = gram_difference_spectrum(a, b);
  return std::max(std::abs(ev.front()), std::abs(ev.back()));
}

/// tail[k] = ‖a − [a]_k‖_F² = Σ_{i>k} σᵢ² for k = 0..min(rows, cols).
inline std::vector<double> tail_energies(const std::vector<double>& singular_values) {
  std::vector<double> tail(singular_values.size() + 1, 0.0);
  for (std::size_t k = singular_values.size(); k-- > 0;)
    tail[k] = tail[k + 1] + singular_values[k] * singular_values[k];
  return tail;
}

inline std::vector<double> tail_energies(const DenseMatrix& a) { return tail_energies(svd(a).singular_values); }

/// Principal angles (radians, ascending) between the spans of two matrices
/// with orthonormal columns.
inline std::vector<double> principal_angles(const DenseMatrix& p, const DenseMatrix& q) {
  if (p.rows() != q.rows()) throw std::invalid_argument("principal_angles: ambient dimension mismatch");
  const auto s = svd(multiply_at_b(p, q)).singular_values;
  std::vector<double> angles(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) angles[i] = std::acos(std::clamp(s[i], -1.0, 1.0));
  return angles;
}

}  // namespace learnsketch
