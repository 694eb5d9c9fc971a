#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <utility>

#include "dmedc/func_core.hpp"

namespace dmedc {

inline Vector prox_l1(const Vector& z, double t, double rho) {
  const double thr = t * rho;
  Vector x(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) {
    const double a = std::abs(z[i]) - thr;
    x[i] = a > 0.0 ? (z[i] > 0.0 ? a : -a) : 0.0;
  }
  return x;
}

inline Vector prox_euclidean(const Vector& z, double t, double rho) {
  const double nz = norm2(z);
  if (nz <= t * rho) return Vector(z.size(), 0.0);
  return (1.0 - t * rho / nz) * z;
}

inline Vector project_box(const Vector& z, const Vector& lo, const Vector& hi) {
  if (z.size() != lo.size() || z.size() != hi.size())
    throw DimensionMismatch("project_box: size mismatch");
  Vector x(z.size());
  for (std::size_t i = 0; i < z.size(); ++i)
    x[i] = std::min(hi[i], std::max(lo[i], z[i]));
  return x;
}

// Euclidean projection onto {x : ||x||_1 <= M}, sort-and-threshold pivot.
inline Vector project_l1_ball(const Vector& z, double M) {
  if (M <= 0.0) throw BadDims("project_l1_ball: M must be positive");
  if (norm1(z) <= M) return z;
  Vector u(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) u[i] = std::abs(z[i]);
  std::sort(u.begin(), u.end(), std::greater<double>());
  double cum = 0.0, theta = 0.0;
  std::size_t k = 0;
  for (std::size_t j = 0; j < u.size(); ++j) {
    cum += u[j];
    const double cand = (cum - M) / static_cast<double>(j + 1);
    if (u[j] - cand > 0.0) {
      k = j + 1;
      theta = cand;
    }
  }
  (void)k;
  Vector x(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) {
    const double a = std::abs(z[i]) - theta;
    x[i] = a > 0.0 ? (z[i] > 0.0 ? a : -a) : 0.0;
  }
  return x;
}

namespace detail {

inline std::shared_ptr<const CholeskyFactor> affine_factor(
    const ConvexFunctionSpec& spec) {
  if (!spec.affine_cache) {
    DenseMatrix AAt = gram(transpose(spec.A));
    try {
      spec.affine_cache = std::make_shared<const CholeskyFactor>(cholesky(AAt));
    } catch (const NotPositiveDefinite&) {
      const double ridge = 1e-12 * (1.0 + frobenius_norm(AAt));
      for (std::size_t i = 0; i < AAt.rows; ++i) AAt(i, i) += ridge;
      try {
        spec.affine_cache =
            std::make_shared<const CholeskyFactor>(cholesky(AAt));
      } catch (const NotPositiveDefinite&) {
        throw SingularSystem("project_affine: A A^T factorization failed");
      }
    }
  }
  return spec.affine_cache;
}

}  // namespace detail

inline Vector project_affine(const Vector& z, const DenseMatrix& A,
                             const Vector& b, const CholeskyFactor& cache) {
  Vector r = matvec(A, z) - b;
  Vector y = cache.solve(r);
  return z - matvec_t(A, y);
}

// Per-iteration solve of the ALM x-update: (rho A'A + I/mu) x = rhs.
struct AlmSystem {
  DenseMatrix A;
  double mu = 0.0;
  double rho = 0.0;
  CholeskyFactor factor;

  static AlmSystem build(const DenseMatrix& A, double mu, double rho) {
    DenseMatrix M = gram(A);
    for (auto& v : M.data) v *= rho;
    for (std::size_t i = 0; i < M.rows; ++i) M(i, i) += 1.0 / mu;
    try {
      return AlmSystem{A, mu, rho, cholesky(M)};
    } catch (const NotPositiveDefinite&) {
      throw SingularSystem("AlmSystem: rho A'A + I/mu not positive definite");
    }
  }
};

inline Vector prox_quadratic_affine(const Vector& z, const AlmSystem& sys,
                                    const Vector& f_lin, const Vector& b,
                                    const Vector& lambda) {
  Vector rhs = (1.0 / sys.mu) * z;
  axpy(sys.rho, matvec_t(sys.A, b), rhs);
  axpy(-1.0, matvec_t(sys.A, lambda), rhs);
  axpy(-1.0, f_lin, rhs);
  return sys.factor.solve(rhs);
}

struct DykstraResult {
  Vector x;
  bool converged = false;
  int iters = 0;
};

// Dykstra's alternating projections onto the intersection of two convex sets.
inline DykstraResult dykstra_intersection(
    const Vector& z, const std::function<Vector(const Vector&)>& proj1,
    const std::function<Vector(const Vector&)>& proj2, double tol = 1e-10,
    int max_iter = 100000) {
  Vector x = z;
  Vector p(z.size(), 0.0), q(z.size(), 0.0);
  DykstraResult out;
  for (int it = 0; it < max_iter; ++it) {
    Vector y = proj1(x + p);
    Vector p_new = (x + p) - y;
    Vector x_new = proj2(y + q);
    Vector q_new = (y + q) - x_new;
    const double gap = norm2(x_new - x);
    p = std::move(p_new);
    q = std::move(q_new);
    x = std::move(x_new);
    out.iters = it + 1;
    if (gap <= tol) {
      out.converged = true;
      break;
    }
  }
  out.x = std::move(x);
  return out;
}

struct ApgResult {
  Vector x;
  Vector certificate;  // element of grad_smooth(x) + subdiff_nonsmooth(x)
  int iters = 0;
  bool converged = false;
};

// Accelerated proximal gradient for min psi(x) + h(x), psi smooth with
// Lipschitz gradient L and strong convexity m >= 0. The certificate is the
// prox-gradient residual L(y - x) + grad(x) - grad(y), a subgradient of the
// full objective at x.
inline ApgResult apg_solve(const std::function<Vector(const Vector&)>& grad,
                           double L, double m,
                           const std::function<Vector(const Vector&, double)>& prox,
                           Vector x0, double tol, int max_iter = 100000) {
  ApgResult out;
  Vector x = std::move(x0);
  Vector y = x;
  const double step = 1.0 / L;
  const double theta_sc =
      m > 0.0 ? (std::sqrt(L) - std::sqrt(m)) / (std::sqrt(L) + std::sqrt(m))
              : 0.0;
  double t = 1.0;
  for (int it = 0; it < max_iter; ++it) {
    Vector gy = grad(y);
    Vector x_next = prox(y - step * gy, step);
    Vector zeta = L * (y - x_next) + grad(x_next) - gy;
    const double res = norm2(zeta);
    out.iters = it + 1;
    if (res <= tol) {
      out.x = std::move(x_next);
      out.certificate = std::move(zeta);
      out.converged = true;
      return out;
    }
    if (m > 0.0) {
      y = x_next + theta_sc * (x_next - x);
    } else {
      const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
      y = x_next + ((t - 1.0) / t_next) * (x_next - x);
      t = t_next;
    }
    x = std::move(x_next);
    out.x = x;
  }
  out.x = x;
  out.certificate = Vector(x.size(), 0.0);
  return out;
}

inline Vector prox_of(const ConvexFunctionSpec& spec, const Vector& z, double t,
                      double tol = 1e-12);

// Generic prox for a Sum spec: quadratic terms fold into the smooth part,
// exactly one remaining term supplies the prox (two indicators fall back to
// Dykstra).
inline Vector prox_composite_fallback(const ConvexFunctionSpec& spec,
                                      const Vector& z, double t, double tol) {
  std::vector<const ConvexFunctionSpec*> quad;
  std::vector<const ConvexFunctionSpec*> rest;
  for (const auto& term : spec.terms) {
    if (term.kind == ConvexFunctionSpec::Kind::ConvexQuadratic ||
        term.kind == ConvexFunctionSpec::Kind::Zero)
      quad.push_back(&term);
    else
      rest.push_back(&term);
  }
  std::function<Vector(const Vector&, double)> prox_rest;
  if (rest.empty()) {
    prox_rest = [](const Vector& v, double) { return v; };
  } else if (rest.size() == 1) {
    const ConvexFunctionSpec* r0 = rest[0];
    prox_rest = [r0, tol](const Vector& v, double s) {
      return prox_of(*r0, v, s, tol);
    };
  } else if (rest.size() == 2 && rest[0]->is_indicator() &&
             rest[1]->is_indicator()) {
    const ConvexFunctionSpec* r0 = rest[0];
    const ConvexFunctionSpec* r1 = rest[1];
    prox_rest = [r0, r1, tol](const Vector& v, double) {
      auto p0 = [&](const Vector& w) { return prox_of(*r0, w, 1.0, tol); };
      auto p1 = [&](const Vector& w) { return prox_of(*r1, w, 1.0, tol); };
      DykstraResult dr = dykstra_intersection(v, p0, p1, tol);
      if (!dr.converged)
        throw MaxIterExceeded("prox_composite_fallback: Dykstra cap exceeded");
      return dr.x;
    };
  } else {
    throw ShapeMismatch("prox_composite_fallback: unsupported sum structure");
  }

  double Lq = 0.0;
  for (const auto* qspec : quad)
    if (qspec->kind == ConvexFunctionSpec::Kind::ConvexQuadratic)
      Lq += symmetric_eigenvalues(qspec->G).back();
  const double L = Lq + 1.0 / t;
  const double m = 1.0 / t;
  auto grad = [&quad, &z, t](const Vector& x) {
    Vector g = (1.0 / t) * (x - z);
    for (const auto* qspec : quad)
      if (qspec->kind == ConvexFunctionSpec::Kind::ConvexQuadratic)
        axpy(1.0, matvec(qspec->G, x), g);
    return g;
  };
  ApgResult res = apg_solve(grad, L, m, prox_rest, prox_rest(z, t), tol);
  if (!res.converged)
    throw MaxIterExceeded("prox_composite_fallback: APG cap exceeded");
  return res.x;
}

inline Vector prox_of(const ConvexFunctionSpec& spec, const Vector& z, double t,
                      double tol) {
  switch (spec.kind) {
    case ConvexFunctionSpec::Kind::Zero:
      return z;
    case ConvexFunctionSpec::Kind::L1Norm:
      return prox_l1(z, t, spec.rho);
    case ConvexFunctionSpec::Kind::EuclideanNorm:
      return prox_euclidean(z, t, spec.rho);
    case ConvexFunctionSpec::Kind::IndicatorBox:
      return project_box(z, spec.lo, spec.hi);
    case ConvexFunctionSpec::Kind::IndicatorL1Ball:
      return project_l1_ball(z, spec.radius);
    case ConvexFunctionSpec::Kind::IndicatorAffine:
      return project_affine(z, spec.A, spec.b, *detail::affine_factor(spec));
    case ConvexFunctionSpec::Kind::ConvexQuadratic: {
      // (I + t G) x = z
      DenseMatrix M = spec.G;
      for (auto& v : M.data) v *= t;
      for (std::size_t i = 0; i < M.rows; ++i) M(i, i) += 1.0;
      try {
        return cholesky(M).solve(z);
      } catch (const NotPositiveDefinite&) {
        throw SingularSystem("prox_of: I + tG not positive definite");
      }
    }
    case ConvexFunctionSpec::Kind::Sum:
      return prox_composite_fallback(spec, z, t, tol);
  }
  return z;
}

}  // namespace dmedc
