#pragma once

#include <cmath>
#include <limits>
#include <memory>
#include <utility>
#include <vector>

#include "dmedc/errors.hpp"
#include "dmedc/linalg.hpp"

namespace dmedc {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// Smooth component f of phi = f + h.
struct SmoothSpec {
  enum class Kind { LeastSquares, Quadratic, Zero };

  Kind kind = Kind::Zero;
  DenseMatrix C;  // LeastSquares: f(x) = 0.5*||Cx - d||^2
  Vector d;
  DenseMatrix Q;  // Quadratic: f(x) = 0.5*x'Qx + q'x
  Vector q;
  double lipschitz_grad = 0.0;  // L_f
  double weak_convexity = 0.0;  // m_phi contribution of f

  static SmoothSpec zero() { return SmoothSpec{}; }

  static SmoothSpec least_squares(DenseMatrix C, Vector d) {
    SmoothSpec s;
    s.kind = Kind::LeastSquares;
    const double nc = operator_norm(C);
    s.lipschitz_grad = nc * nc;
    s.weak_convexity = 0.0;
    s.C = std::move(C);
    s.d = std::move(d);
    return s;
  }

  static SmoothSpec quadratic(DenseMatrix Q, Vector q) {
    SmoothSpec s;
    s.kind = Kind::Quadratic;
    const Vector eig = symmetric_eigenvalues(Q);
    s.lipschitz_grad = std::max(std::abs(eig.front()), std::abs(eig.back()));
    s.weak_convexity = std::max(0.0, -eig.front());
    s.Q = std::move(Q);
    s.q = std::move(q);
    return s;
  }

  double value(const Vector& x) const {
    switch (kind) {
      case Kind::Zero:
        return 0.0;
      case Kind::LeastSquares: {
        Vector r = matvec(C, x) - d;
        return 0.5 * dot(r, r);
      }
      case Kind::Quadratic:
        return 0.5 * dot(x, matvec(Q, x)) + dot(q, x);
    }
    return 0.0;
  }

  Vector gradient(const Vector& x) const {
    switch (kind) {
      case Kind::Zero:
        return Vector(x.size(), 0.0);
      case Kind::LeastSquares:
        return matvec_t(C, matvec(C, x) - d);
      case Kind::Quadratic: {
        Vector g = matvec(Q, x);
        axpy(1.0, q, g);
        return g;
      }
    }
    return Vector(x.size(), 0.0);
  }
};

// Convex function catalog; every kind answers value(), and at least one of
// prox() / subgradient(). Prox dispatch lives in prox.hpp.
struct ConvexFunctionSpec {
  enum class Kind {
    Zero,
    L1Norm,
    EuclideanNorm,
    IndicatorBox,
    IndicatorL1Ball,
    IndicatorAffine,
    ConvexQuadratic,
    Sum
  };

  Kind kind = Kind::Zero;
  double rho = 0.0;     // weight for L1Norm / EuclideanNorm
  Vector lo, hi;        // IndicatorBox bounds
  double radius = 0.0;  // IndicatorL1Ball
  DenseMatrix A;        // IndicatorAffine: {x : Ax = b}
  Vector b;
  DenseMatrix G;  // ConvexQuadratic: 0.5*x'Gx
  std::vector<ConvexFunctionSpec> terms;

  // Lazy factorization of A A^T for affine projections.
  mutable std::shared_ptr<const CholeskyFactor> affine_cache;

  static ConvexFunctionSpec zero() { return ConvexFunctionSpec{}; }

  static ConvexFunctionSpec l1_norm(double weight) {
    ConvexFunctionSpec s;
    s.kind = Kind::L1Norm;
    s.rho = weight;
    return s;
  }

  static ConvexFunctionSpec euclidean_norm(double weight) {
    ConvexFunctionSpec s;
    s.kind = Kind::EuclideanNorm;
    s.rho = weight;
    return s;
  }

  static ConvexFunctionSpec indicator_box(Vector lo, Vector hi) {
    ConvexFunctionSpec s;
    s.kind = Kind::IndicatorBox;
    s.lo = std::move(lo);
    s.hi = std::move(hi);
    return s;
  }

  static ConvexFunctionSpec indicator_l1_ball(double M) {
    if (M <= 0.0) throw BadDims("indicator_l1_ball: M must be positive");
    ConvexFunctionSpec s;
    s.kind = Kind::IndicatorL1Ball;
    s.radius = M;
    return s;
  }

  static ConvexFunctionSpec indicator_affine(DenseMatrix A, Vector b) {
    ConvexFunctionSpec s;
    s.kind = Kind::IndicatorAffine;
    s.A = std::move(A);
    s.b = std::move(b);
    return s;
  }

  static ConvexFunctionSpec convex_quadratic(DenseMatrix G) {
    ConvexFunctionSpec s;
    s.kind = Kind::ConvexQuadratic;
    s.G = std::move(G);
    return s;
  }

  static ConvexFunctionSpec sum(std::vector<ConvexFunctionSpec> parts) {
    ConvexFunctionSpec s;
    s.kind = Kind::Sum;
    s.terms = std::move(parts);
    return s;
  }

  bool is_indicator() const {
    switch (kind) {
      case Kind::IndicatorBox:
      case Kind::IndicatorL1Ball:
      case Kind::IndicatorAffine:
        return true;
      case Kind::Sum:
        for (const auto& t : terms)
          if (t.is_indicator()) return true;
        return false;
      default:
        return false;
    }
  }

  double value(const Vector& x, double feas_tol = 1e-9) const {
    switch (kind) {
      case Kind::Zero:
        return 0.0;
      case Kind::L1Norm:
        return rho * norm1(x);
      case Kind::EuclideanNorm:
        return rho * norm2(x);
      case Kind::IndicatorBox: {
        if (x.size() != lo.size()) throw DimensionMismatch("box: size mismatch");
        for (std::size_t i = 0; i < x.size(); ++i)
          if (x[i] < lo[i] - feas_tol || x[i] > hi[i] + feas_tol) return kInf;
        return 0.0;
      }
      case Kind::IndicatorL1Ball:
        return norm1(x) <= radius + feas_tol ? 0.0 : kInf;
      case Kind::IndicatorAffine: {
        Vector r = matvec(A, x) - b;
        return norm2(r) <= feas_tol * (1.0 + norm2(b)) ? 0.0 : kInf;
      }
      case Kind::ConvexQuadratic:
        return 0.5 * dot(x, matvec(G, x));
      case Kind::Sum: {
        double s = 0.0;
        for (const auto& t : terms) {
          const double v = t.value(x, feas_tol);
          if (v == kInf) return kInf;
          s += v;
        }
        return s;
      }
    }
    return 0.0;
  }

  // One deterministic element of the subdifferential. Kinks resolve to the
  // midpoint choice: 0 for |.| coordinates, the 0 vector at the origin of ||.||.
  Vector subgradient(const Vector& x) const {
    switch (kind) {
      case Kind::Zero:
        return Vector(x.size(), 0.0);
      case Kind::L1Norm: {
        Vector g(x.size());
        for (std::size_t i = 0; i < x.size(); ++i)
          g[i] = x[i] > 0.0 ? rho : (x[i] < 0.0 ? -rho : 0.0);
        return g;
      }
      case Kind::EuclideanNorm: {
        const double nx = norm2(x);
        if (nx == 0.0) return Vector(x.size(), 0.0);
        return (rho / nx) * x;
      }
      case Kind::ConvexQuadratic:
        return matvec(G, x);
      case Kind::Sum: {
        Vector g(x.size(), 0.0);
        for (const auto& t : terms) axpy(1.0, t.subgradient(x), g);
        return g;
      }
      case Kind::IndicatorBox:
      case Kind::IndicatorL1Ball:
      case Kind::IndicatorAffine:
        // 0 is in the normal cone at any point of the domain.
        return Vector(x.size(), 0.0);
    }
    return Vector(x.size(), 0.0);
  }
};

// F = f + h - g on R^n.
struct DCProblem {
  SmoothSpec f;
  ConvexFunctionSpec h;
  ConvexFunctionSpec g;
  std::size_t n = 0;

  DCProblem() = default;
  DCProblem(SmoothSpec f_, ConvexFunctionSpec h_, ConvexFunctionSpec g_,
            std::size_t dim)
      : f(std::move(f_)), h(std::move(h_)), g(std::move(g_)), n(dim) {
    if (g.is_indicator())
      throw ShapeMismatch("DCProblem: g must be finite-valued");
  }

  // m_phi of phi = f + h (h convex contributes nothing).
  double weak_convexity() const { return f.weak_convexity; }
  double lipschitz_grad_f() const { return f.lipschitz_grad; }
};

inline double evaluate_F(const DCProblem& p, const Vector& x) {
  if (x.size() != p.n) throw DimensionMismatch("evaluate_F: dim mismatch");
  const double hv = p.h.value(x);
  if (hv == kInf) return kInf;
  return p.f.value(x) + hv - p.g.value(x);
}

inline Vector subgradient_g(const DCProblem& p, const Vector& x) {
  return p.g.subgradient(x);
}

struct LCDCProblem {
  DCProblem dc;
  DenseMatrix A;
  Vector b;

  LCDCProblem() = default;
  LCDCProblem(DCProblem dc_, DenseMatrix A_, Vector b_)
      : dc(std::move(dc_)), A(std::move(A_)), b(std::move(b_)) {
    if (A.cols != dc.n || A.rows != b.size())
      throw DimensionMismatch("LCDCProblem: constraint dims");
    if (frobenius_norm(A) == 0.0) throw ShapeMismatch("LCDCProblem: A is zero");
    // b must lie in the column space of A.
    DenseMatrix AAt = gram(transpose(A));
    double ridge = 1e-12 * (1.0 + frobenius_norm(AAt));
    for (std::size_t i = 0; i < AAt.rows; ++i) AAt(i, i) += ridge;
    const CholeskyFactor F = cholesky(AAt);
    const Vector y = F.solve(b);
    const Vector r = matvec(A, matvec_t(A, y)) - b;
    if (norm2(r) > 1e-8 * (1.0 + norm2(b)))
      throw InfeasibleParameters("LCDCProblem: b not in Im(A)");
  }
};

struct QpRegularityReport {
  double min_nullspace_curvature = 0.0;
  double lambda_max_G = 0.0;
  bool satisfied = false;
};

// Checks the strict curvature condition min{x'Qx : Ax=0, ||x||=1} > lmax(G)
// for quadratic f and quadratic (or zero) g.
inline QpRegularityReport validate_qp_regularity(const LCDCProblem& p) {
  if (p.dc.f.kind != SmoothSpec::Kind::Quadratic)
    throw ShapeMismatch("validate_qp_regularity: f must be quadratic");
  if (p.dc.g.kind != ConvexFunctionSpec::Kind::ConvexQuadratic &&
      p.dc.g.kind != ConvexFunctionSpec::Kind::Zero)
    throw ShapeMismatch("validate_qp_regularity: g must be quadratic or zero");

  QpRegularityReport rep;
  const SvdSummary svd = svd_summary(p.A);
  const DenseMatrix& V = svd.right_null_basis;
  if (V.cols == 0) {
    rep.min_nullspace_curvature = kInf;
  } else {
    // V' Q V restricted curvature.
    DenseMatrix QV = matmul(p.dc.f.Q, V);
    DenseMatrix M = matmul(transpose(V), QV);
    rep.min_nullspace_curvature = symmetric_eigenvalues(M).front();
  }
  if (p.dc.g.kind == ConvexFunctionSpec::Kind::ConvexQuadratic)
    rep.lambda_max_G = symmetric_eigenvalues(p.dc.g.G).back();
  rep.satisfied = rep.min_nullspace_curvature > rep.lambda_max_G;
  return rep;
}

}  // namespace dmedc
