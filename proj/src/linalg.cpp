#include "tcfg/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "tcfg/error.hpp"

namespace tcfg::linalg {
namespace {

constexpr double kJacobiRelTol = 1e-14;
constexpr int kJacobiMaxSweeps = 50;
// Entries at or below this magnitude do not count as "first nonzero" when
// fixing the sign of a unit right vector.
constexpr double kSignEntryTol = 1e-13;
// Relative size below which a singular direction is treated as null and its
// right vector is rebuilt by orthogonal completion.
constexpr double kNullRelTol = 1e-12;

void require_finite(const Matrix& a) {
  if (!a.all_finite()) throw Error(ErrorKind::kInvalidInput, "svd: non-finite entries");
}

double off_diagonal_norm(const Matrix& g) {
  double s = 0.0;
  for (std::size_t i = 0; i < g.rows(); ++i)
    for (std::size_t j = 0; j < g.cols(); ++j)
      if (i != j) s += g(i, j) * g(i, j);
  return std::sqrt(s);
}

// Removes the components of `v` along rows [0, count) of `basis`, twice.
void orthogonalize_against(Vector& v, const Matrix& basis, std::size_t count) {
  for (int pass = 0; pass < 2; ++pass) {
    for (std::size_t i = 0; i < count; ++i) {
      auto b = basis.row(i);
      const double c = dot(v, b);
      for (std::size_t j = 0; j < v.size(); ++j) v[j] -= c * b[j];
    }
  }
}

// Orthonormalizes rows of `right` in order. Rows whose singular value is
// negligible (or that collapse under orthogonalization) are replaced by the
// first canonical basis vector that survives projection.
void finalize_right_vectors(Matrix& right, const Vector& sigma) {
  const std::size_t k = right.rows();
  const std::size_t d = right.cols();
  const double sigma_max = sigma.empty() ? 0.0 : sigma.front();
  for (std::size_t i = 0; i < k; ++i) {
    bool usable = sigma_max > 0.0 && sigma[i] > kNullRelTol * sigma_max;
    Vector v = right.row_vector(i);
    if (usable) {
      orthogonalize_against(v, right, i);
      const double n = norm(v);
      usable = n > 0.5;
      if (usable)
        for (double& x : v) x /= n;
    }
    if (!usable) {
      for (std::size_t e = 0; e < d; ++e) {
        Vector cand(d, 0.0);
        cand[e] = 1.0;
        orthogonalize_against(cand, right, i);
        const double n = norm(cand);
        if (n > 0.5) {
          for (double& x : cand) x /= n;
          v = std::move(cand);
          break;
        }
      }
    }
    std::copy(v.begin(), v.end(), right.row(i).begin());
  }
}

void apply_sign_convention(SvdResult& r) {
  for (std::size_t i = 0; i < r.right.rows(); ++i) {
    auto v = r.right.row(i);
    auto first = std::find_if(v.begin(), v.end(),
                              [](double x) { return std::abs(x) > kSignEntryTol; });
    if (first == v.end() || *first >= 0.0) continue;
    for (double& x : v) x = -x;
    for (std::size_t row = 0; row < r.left.rows(); ++row) r.left(row, i) = -r.left(row, i);
  }
}

// Swaps the roles of left and right factors of an SVD of A^T.
SvdResult transpose_result(SvdResult t) {
  SvdResult r;
  r.singular_values = std::move(t.singular_values);
  r.left = t.right.transposed();
  r.right = t.left.transposed();
  return r;
}

SvdResult jacobi_wide(const Matrix& a) {
  const std::size_t n = a.rows();
  const std::size_t d = a.cols();

  Matrix gram(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i; j < n; ++j) gram(i, j) = gram(j, i) = dot(a.row(i), a.row(j));

  SymmetricEigen eig = jacobi_eigen(gram);

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
    return eig.values[x] > eig.values[y];
  });

  SvdResult r;
  r.singular_values.resize(n);
  r.left = Matrix(n, n);
  r.right = Matrix(n, d);
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t src = order[k];
    for (std::size_t i = 0; i < n; ++i) r.left(i, k) = eig.vectors(i, src);
    // y = A^T u
    auto y = r.right.row(k);
    for (std::size_t i = 0; i < n; ++i) {
      const double ui = eig.vectors(i, src);
      auto arow = a.row(i);
      for (std::size_t j = 0; j < d; ++j) y[j] += ui * arow[j];
    }
    const double s = norm(y);
    r.singular_values[k] = s;
    if (s > 0.0)
      for (double& x : y) x /= s;
  }
  // Norms of A^T u can reorder slightly relative to the Gram eigenvalues when
  // they are nearly tied; keep the descending invariant.
  for (std::size_t k = 1; k < n; ++k) {
    if (r.singular_values[k] > r.singular_values[k - 1] &&
        r.singular_values[k] - r.singular_values[k - 1] <=
            1e-12 * r.singular_values[k - 1]) {
      r.singular_values[k] = r.singular_values[k - 1];
    }
  }
  // Anything this small is rounding from the Gram route, not signal.
  for (double& s : r.singular_values)
    if (s <= kNullRelTol * r.singular_values.front()) s = 0.0;
  finalize_right_vectors(r.right, r.singular_values);
  apply_sign_convention(r);
  return r;
}

}  // namespace

Matrix SvdResult::reconstruct() const {
  Matrix scaled_left = left;
  for (std::size_t i = 0; i < scaled_left.rows(); ++i)
    for (std::size_t k = 0; k < scaled_left.cols(); ++k) scaled_left(i, k) *= singular_values[k];
  return scaled_left * right;
}

SymmetricEigen jacobi_eigen(const Matrix& symmetric) {
  const std::size_t n = symmetric.rows();
  if (symmetric.cols() != n) throw Error(ErrorKind::kInvalidInput, "jacobi_eigen: not square");
  Matrix g = symmetric;
  Matrix v = Matrix::identity(n);
  const double total = frobenius_norm(g);
  SymmetricEigen out;

  for (int sweep = 0; sweep < kJacobiMaxSweeps; ++sweep) {
    if (off_diagonal_norm(g) <= kJacobiRelTol * total) break;
    ++out.sweeps;
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double gpq = g(p, q);
        if (gpq == 0.0) continue;
        const double tau = (g(q, q) - g(p, p)) / (2.0 * gpq);
        const double t = std::copysign(1.0, tau) / (std::abs(tau) + std::sqrt(1.0 + tau * tau));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double gkp = g(k, p);
          const double gkq = g(k, q);
          g(k, p) = c * gkp - s * gkq;
          g(k, q) = s * gkp + c * gkq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double gpk = g(p, k);
          const double gqk = g(q, k);
          g(p, k) = c * gpk - s * gqk;
          g(q, k) = s * gpk + c * gqk;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double vkp = v(k, p);
          const double vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }
  out.values.resize(n);
  for (std::size_t i = 0; i < n; ++i) out.values[i] = g(i, i);
  out.vectors = std::move(v);
  return out;
}

SvdResult svd_thin_jacobi(const Matrix& a) {
  require_finite(a);
  if (a.rows() <= a.cols()) return jacobi_wide(a);
  SvdResult r = transpose_result(jacobi_wide(a.transposed()));
  finalize_right_vectors(r.right, r.singular_values);
  apply_sign_convention(r);
  return r;
}

SvdResult svd_two_row(std::span<const double> row0, std::span<const double> row1) {
  if (row0.size() != row1.size()) {
    throw Error(ErrorKind::kDimensionMismatch, "svd_two_row: rows differ in length");
  }
  if (!all_finite(row0) || !all_finite(row1)) {
    throw Error(ErrorKind::kInvalidInput, "svd: non-finite entries");
  }
  const std::size_t d = row0.size();
  if (d < 2) throw Error(ErrorKind::kInvalidInput, "svd_two_row: need at least 2 columns");

  const double a = dot(row0, row0);
  const double c = dot(row1, row1);
  const double b = dot(row0, row1);

  // Rotation diagonalizing the Gram matrix [[a, b], [b, c]]; the first column
  // belongs to the larger eigenvalue.
  double cs = 1.0;
  double sn = 0.0;
  if (b != 0.0) {
    const double theta = 0.5 * std::atan2(2.0 * b, a - c);
    cs = std::cos(theta);
    sn = std::sin(theta);
  } else if (c > a) {
    cs = 0.0;
    sn = 1.0;
  }

  SvdResult r;
  r.left = Matrix{{cs, -sn}, {sn, cs}};
  r.right = Matrix(2, d);
  auto y0 = r.right.row(0);
  auto y1 = r.right.row(1);
  for (std::size_t j = 0; j < d; ++j) {
    y0[j] = cs * row0[j] + sn * row1[j];
    y1[j] = -sn * row0[j] + cs * row1[j];
  }
  r.singular_values = {norm(y0), norm(y1)};
  if (r.singular_values[1] > r.singular_values[0]) {
    // Only reachable through rounding when the two values are tied.
    r.singular_values[1] = r.singular_values[0];
  }
  for (std::size_t k = 0; k < 2; ++k) {
    const double s = r.singular_values[k];
    if (s > 0.0)
      for (double& x : r.right.row(k)) x /= s;
  }
  finalize_right_vectors(r.right, r.singular_values);
  apply_sign_convention(r);
  return r;
}

SvdResult svd_thin(const Matrix& a) {
  require_finite(a);
  if (a.rows() == 2 && a.cols() >= 2) return svd_two_row(a.row(0), a.row(1));
  if (a.cols() == 2 && a.rows() > 2) {
    const Matrix at = a.transposed();
    SvdResult r = transpose_result(svd_two_row(at.row(0), at.row(1)));
    apply_sign_convention(r);
    return r;
  }
  return svd_thin_jacobi(a);
}

double cosine_similarity(std::span<const double> u, std::span<const double> v) {
  if (u.size() != v.size()) {
    throw Error(ErrorKind::kDimensionMismatch, "cosine_similarity: length mismatch");
  }
  const double nu = norm(u);
  const double nv = norm(v);
  if (nu == 0.0 || nv == 0.0) {
    throw Error(ErrorKind::kUndefinedSimilarity, "cosine_similarity: zero vector");
  }
  return std::clamp(dot(u, v) / (nu * nv), -1.0, 1.0);
}

Matrix spd_sqrt_2x2(const Matrix& m) {
  if (m.rows() != 2 || m.cols() != 2) throw Error(ErrorKind::kInvalidInput, "spd_sqrt_2x2: not 2x2");
  if (!m.all_finite()) throw Error(ErrorKind::kInvalidInput, "spd_sqrt_2x2: non-finite");
  const double scale = std::max(1.0, std::max({std::abs(m(0, 0)), std::abs(m(0, 1)),
                                               std::abs(m(1, 0)), std::abs(m(1, 1))}));
  if (std::abs(m(0, 1) - m(1, 0)) > 1e-12 * scale) {
    throw Error(ErrorKind::kInvalidInput, "spd_sqrt_2x2: matrix is not symmetric");
  }
  const double a = m(0, 0);
  const double c = m(1, 1);
  const double b = 0.5 * (m(0, 1) + m(1, 0));
  const double mean = 0.5 * (a + c);
  const double radius = std::hypot(0.5 * (a - c), b);
  double hi = mean + radius;
  double lo = mean - radius;
  if (lo < -1e-12 * scale) {
    throw Error(ErrorKind::kInvalidInput, "spd_sqrt_2x2: matrix is indefinite");
  }
  hi = std::sqrt(std::max(hi, 0.0));
  lo = std::sqrt(std::max(lo, 0.0));
  const double theta = 0.5 * std::atan2(2.0 * b, a - c);
  const double cs = std::cos(theta);
  const double sn = std::sin(theta);
  // R = hi * u1 u1^T + lo * u2 u2^T with u1 = (cs, sn), u2 = (-sn, cs).
  Matrix r(2, 2);
  r(0, 0) = hi * cs * cs + lo * sn * sn;
  r(1, 1) = hi * sn * sn + lo * cs * cs;
  r(0, 1) = r(1, 0) = (hi - lo) * cs * sn;
  return r;
}

}  // namespace tcfg::linalg
