#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <vector>

#include "dmedc/errors.hpp"

namespace dmedc {

using Vector = std::vector<double>;

inline double dot(const Vector& a, const Vector& b) {
  if (a.size() != b.size()) throw DimensionMismatch("dot: size mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double norm2(const Vector& a) { return std::sqrt(dot(a, a)); }

inline double norm1(const Vector& a) {
  double s = 0.0;
  for (double v : a) s += std::abs(v);
  return s;
}

inline Vector operator+(const Vector& a, const Vector& b) {
  if (a.size() != b.size()) throw DimensionMismatch("vector add: size mismatch");
  Vector r(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] + b[i];
  return r;
}

inline Vector operator-(const Vector& a, const Vector& b) {
  if (a.size() != b.size()) throw DimensionMismatch("vector sub: size mismatch");
  Vector r(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] - b[i];
  return r;
}

inline Vector operator*(double s, const Vector& a) {
  Vector r(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) r[i] = s * a[i];
  return r;
}

inline void axpy(double alpha, const Vector& x, Vector& y) {
  if (x.size() != y.size()) throw DimensionMismatch("axpy: size mismatch");
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

// Row-major dense matrix.
struct DenseMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  DenseMatrix() = default;
  DenseMatrix(std::size_t r, std::size_t c, double fill = 0.0)
      : rows(r), cols(c), data(r * c, fill) {}

  double& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }

  static DenseMatrix identity(std::size_t n) {
    DenseMatrix I(n, n);
    for (std::size_t i = 0; i < n; ++i) I(i, i) = 1.0;
    return I;
  }
};

inline Vector matvec(const DenseMatrix& A, const Vector& x) {
  if (A.cols != x.size()) throw DimensionMismatch("matvec: size mismatch");
  Vector y(A.rows, 0.0);
  for (std::size_t i = 0; i < A.rows; ++i) {
    const double* row = &A.data[i * A.cols];
    double s = 0.0;
    for (std::size_t j = 0; j < A.cols; ++j) s += row[j] * x[j];
    y[i] = s;
  }
  return y;
}

inline Vector matvec_t(const DenseMatrix& A, const Vector& y) {
  if (A.rows != y.size()) throw DimensionMismatch("matvec_t: size mismatch");
  Vector x(A.cols, 0.0);
  for (std::size_t i = 0; i < A.rows; ++i) {
    const double* row = &A.data[i * A.cols];
    const double yi = y[i];
    for (std::size_t j = 0; j < A.cols; ++j) x[j] += row[j] * yi;
  }
  return x;
}

inline DenseMatrix matmul(const DenseMatrix& A, const DenseMatrix& B) {
  if (A.cols != B.rows) throw DimensionMismatch("matmul: size mismatch");
  DenseMatrix C(A.rows, B.cols);
  for (std::size_t i = 0; i < A.rows; ++i)
    for (std::size_t k = 0; k < A.cols; ++k) {
      const double aik = A(i, k);
      if (aik == 0.0) continue;
      for (std::size_t j = 0; j < B.cols; ++j) C(i, j) += aik * B(k, j);
    }
  return C;
}

inline DenseMatrix transpose(const DenseMatrix& A) {
  DenseMatrix T(A.cols, A.rows);
  for (std::size_t i = 0; i < A.rows; ++i)
    for (std::size_t j = 0; j < A.cols; ++j) T(j, i) = A(i, j);
  return T;
}

// A^T A, symmetric n x n.
inline DenseMatrix gram(const DenseMatrix& A) {
  DenseMatrix G(A.cols, A.cols);
  for (std::size_t i = 0; i < A.rows; ++i) {
    const double* row = &A.data[i * A.cols];
    for (std::size_t j = 0; j < A.cols; ++j) {
      const double rj = row[j];
      if (rj == 0.0) continue;
      for (std::size_t k = j; k < A.cols; ++k) G(j, k) += rj * row[k];
    }
  }
  for (std::size_t j = 0; j < A.cols; ++j)
    for (std::size_t k = 0; k < j; ++k) G(j, k) = G(k, j);
  return G;
}

inline double frobenius_norm(const DenseMatrix& A) {
  double s = 0.0;
  for (double v : A.data) s += v * v;
  return std::sqrt(s);
}

struct CholeskyFactor {
  DenseMatrix lower;  // L with M = L L^T

  Vector solve(const Vector& rhs) const {
    const std::size_t n = lower.rows;
    if (rhs.size() != n) throw DimensionMismatch("cholesky solve: size mismatch");
    Vector y(n);
    for (std::size_t i = 0; i < n; ++i) {
      double s = rhs[i];
      for (std::size_t j = 0; j < i; ++j) s -= lower(i, j) * y[j];
      y[i] = s / lower(i, i);
    }
    Vector x(n);
    for (std::size_t ii = n; ii-- > 0;) {
      double s = y[ii];
      for (std::size_t j = ii + 1; j < n; ++j) s -= lower(j, ii) * x[j];
      x[ii] = s / lower(ii, ii);
    }
    return x;
  }
};

inline CholeskyFactor cholesky(const DenseMatrix& M) {
  if (M.rows != M.cols) throw ShapeMismatch("cholesky: matrix not square");
  const std::size_t n = M.rows;
  DenseMatrix L(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      double s = M(i, j);
      for (std::size_t k = 0; k < j; ++k) s -= L(i, k) * L(j, k);
      if (i == j) {
        if (s <= 0.0) throw NotPositiveDefinite("cholesky: pivot <= 0");
        L(i, i) = std::sqrt(s);
      } else {
        L(i, j) = s / L(j, j);
      }
    }
  }
  return CholeskyFactor{std::move(L)};
}

struct SvdSummary {
  Vector singular_values;       // non-increasing, all values (incl. ~0)
  DenseMatrix right_vectors;    // n x n, columns are right singular vectors
  DenseMatrix right_null_basis; // n x k, orthonormal kernel basis
  std::size_t positive_rank = 0;
  double sigma_min_pos = 0.0;
  double sigma_max = 0.0;
};

// One-sided Jacobi on the columns of A; right singular vectors accumulate
// the rotations, so the kernel basis is orthonormal by construction.
inline SvdSummary svd_summary(const DenseMatrix& A, double rank_tol = 1e-10) {
  const std::size_t m = A.rows, n = A.cols;
  if (m == 0 || n == 0) throw ShapeMismatch("svd_summary: empty matrix");
  DenseMatrix B = A;
  DenseMatrix V = DenseMatrix::identity(n);
  const double conv_tol = 1e-14;
  double fro2 = 0.0;
  for (double v : B.data) fro2 += v * v;
  // Columns at roundoff scale belong to the kernel; rotating them against
  // the rest only chases denormal noise and stalls convergence.
  const double tiny_col = 1e-28 * fro2;
  const int max_sweeps = 100;
  bool converged = false;
  for (int sweep = 0; sweep < max_sweeps && !converged; ++sweep) {
    converged = true;
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        double app = 0.0, aqq = 0.0, apq = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
          const double bp = B(i, p), bq = B(i, q);
          app += bp * bp;
          aqq += bq * bq;
          apq += bp * bq;
        }
        if (app <= tiny_col || aqq <= tiny_col) continue;
        if (std::abs(apq) <= conv_tol * std::sqrt(app * aqq) || apq == 0.0) continue;
        converged = false;
        const double zeta = (aqq - app) / (2.0 * apq);
        const double t = (zeta >= 0.0 ? 1.0 : -1.0) /
                         (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = c * t;
        for (std::size_t i = 0; i < m; ++i) {
          const double bp = B(i, p), bq = B(i, q);
          B(i, p) = c * bp - s * bq;
          B(i, q) = s * bp + c * bq;
        }
        for (std::size_t i = 0; i < n; ++i) {
          const double vp = V(i, p), vq = V(i, q);
          V(i, p) = c * vp - s * vq;
          V(i, q) = s * vp + c * vq;
        }
      }
    }
  }
  if (!converged) throw ConvergenceFailure("svd_summary: Jacobi sweeps exceeded");

  Vector sigma(n);
  for (std::size_t j = 0; j < n; ++j) {
    double s = 0.0;
    for (std::size_t i = 0; i < m; ++i) s += B(i, j) * B(i, j);
    sigma[j] = std::sqrt(s);
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return sigma[a] > sigma[b]; });

  SvdSummary out;
  out.singular_values.resize(n);
  out.right_vectors = DenseMatrix(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    out.singular_values[j] = sigma[order[j]];
    for (std::size_t i = 0; i < n; ++i) out.right_vectors(i, j) = V(i, order[j]);
  }
  out.sigma_max = out.singular_values.empty() ? 0.0 : out.singular_values[0];
  const double cutoff = rank_tol * out.sigma_max;
  std::size_t rank = 0;
  while (rank < n && out.singular_values[rank] > cutoff) ++rank;
  out.positive_rank = rank;
  out.sigma_min_pos = rank > 0 ? out.singular_values[rank - 1] : 0.0;
  out.right_null_basis = DenseMatrix(n, n - rank);
  for (std::size_t j = rank; j < n; ++j)
    for (std::size_t i = 0; i < n; ++i)
      out.right_null_basis(i, j - rank) = out.right_vectors(i, j);
  return out;
}

// Largest singular value via power iteration on A^T A.
inline double operator_norm(const DenseMatrix& A, double rel_tol = 1e-9,
                            int max_iter = 20000) {
  if (A.rows == 0 || A.cols == 0) throw ShapeMismatch("operator_norm: empty matrix");
  Vector u(A.cols);
  for (std::size_t i = 0; i < u.size(); ++i)
    u[i] = 1.0 + 1e-3 * static_cast<double>(i % 7);
  double nu = norm2(u);
  for (auto& v : u) v /= nu;
  double lambda = 0.0;
  for (int it = 0; it < max_iter; ++it) {
    Vector w = matvec_t(A, matvec(A, u));
    const double lam_new = dot(u, w);
    const double wn = norm2(w);
    if (wn == 0.0) return 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) u[i] = w[i] / wn;
    if (it > 0 && std::abs(lam_new - lambda) <= rel_tol * std::max(1.0, lam_new)) {
      return std::sqrt(std::max(0.0, lam_new));
    }
    lambda = lam_new;
  }
  throw ConvergenceFailure("operator_norm: power iteration cap exceeded");
}

// Eigenvalues of a symmetric matrix via cyclic Jacobi, ascending order.
inline Vector symmetric_eigenvalues(const DenseMatrix& S) {
  if (S.rows != S.cols) throw ShapeMismatch("symmetric_eigenvalues: not square");
  const std::size_t n = S.rows;
  DenseMatrix M = S;
  const int max_sweeps = 100;
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    double off = 0.0;
    for (std::size_t p = 0; p + 1 < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) off += M(p, q) * M(p, q);
    if (off <= 1e-24 * (1.0 + frobenius_norm(M))) break;
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        if (std::abs(M(p, q)) < 1e-300) continue;
        const double theta = (M(q, q) - M(p, p)) / (2.0 * M(p, q));
        const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(1.0 + theta * theta));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = c * t;
        for (std::size_t k = 0; k < n; ++k) {
          const double mp = M(p, k), mq = M(q, k);
          M(p, k) = c * mp - s * mq;
          M(q, k) = s * mp + c * mq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double mp = M(k, p), mq = M(k, q);
          M(k, p) = c * mp - s * mq;
          M(k, q) = s * mp + c * mq;
        }
      }
    }
  }
  Vector eig(n);
  for (std::size_t i = 0; i < n; ++i) eig[i] = M(i, i);
  std::sort(eig.begin(), eig.end());
  return eig;
}

// Counter-free splittable generator built on splitmix64; identical seed gives
// an identical stream on every platform.
class SeededRng {
 public:
  explicit SeededRng(std::uint64_t seed) : seed_(seed), state_(seed) {}

  std::uint64_t seed() const { return seed_; }

  std::uint64_t next_u64() {
    state_ += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  // Fresh child stream; used so generated arrays keep stable streams when
  // dimensions change.
  SeededRng child(std::uint64_t tag) {
    std::uint64_t z = seed_ ^ (0xD1B54A32D192ED03ULL * (tag + 1));
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return SeededRng(z ^ (z >> 31));
  }

  double uniform01() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  double gaussian() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = uniform01();
    while (u1 <= 0.0) u1 = uniform01();
    const double u2 = uniform01();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * 3.14159265358979323846 * u2;
    spare_ = r * std::sin(theta);
    have_spare_ = true;
    return r * std::cos(theta);
  }

 private:
  std::uint64_t seed_;
  std::uint64_t state_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

inline Vector rng_gaussian(SeededRng& rng, std::size_t n) {
  Vector v(n);
  for (auto& x : v) x = rng.gaussian();
  return v;
}

inline Vector rng_uniform(SeededRng& rng, double lo, double hi, std::size_t n) {
  if (lo > hi) throw BadDims("rng_uniform: lo > hi");
  Vector v(n);
  for (auto& x : v) x = rng.uniform(lo, hi);
  return v;
}

}  // namespace dmedc
