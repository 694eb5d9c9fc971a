#pragma once

#include <cmath>
#include <optional>
#include <utility>

#include "dmedc/func_core.hpp"
#include "dmedc/prox.hpp"

namespace dmedc {

struct EnvelopeEval {
  double value = 0.0;
  Vector prox_point;
};

// Moreau envelope of a convex catalog function.
inline EnvelopeEval moreau_envelope(const ConvexFunctionSpec& spec, double mu,
                                    const Vector& z, double tol = 1e-12) {
  EnvelopeEval out;
  out.prox_point = prox_of(spec, z, mu, tol);
  Vector diff = out.prox_point - z;
  out.value = spec.value(out.prox_point) + dot(diff, diff) / (2.0 * mu);
  return out;
}

// DME smoothing F_mu = M_{mu phi} - M_{mu g} of a DC problem.
class DmeSmoothing {
 public:
  DmeSmoothing(DCProblem problem, double mu, double inner_tol = 1e-10)
      : p_(std::move(problem)), mu_(mu), inner_tol_(inner_tol) {
    const double m_phi = p_.weak_convexity();
    if (mu <= 0.0 || (m_phi > 0.0 && mu >= 1.0 / m_phi))
      throw InfeasibleParameters("DmeSmoothing: mu outside (0, 1/m_phi)");
    lip_ = m_phi > 0.0 ? (2.0 - mu * m_phi) / (mu - mu * mu * m_phi) : 2.0 / mu;
  }

  const DCProblem& problem() const { return p_; }
  double mu() const { return mu_; }
  double lipschitz() const { return lip_; }

  Vector prox_g(const Vector& z) const { return prox_of(p_.g, z, mu_, inner_tol_); }

  // x_{mu phi}(z) with phi = f + h. Exact linear-system paths where available,
  // APG otherwise.
  Vector prox_phi(const Vector& z) const {
    if (p_.f.kind == SmoothSpec::Kind::Zero)
      return prox_of(p_.h, z, mu_, inner_tol_);

    if (p_.h.kind == ConvexFunctionSpec::Kind::Zero) {
      ensure_h_factor();
      Vector rhs = (1.0 / mu_) * z;
      axpy(-1.0, f_lin_term(), rhs);
      return h_factor_->solve(rhs);
    }
    if (p_.h.kind == ConvexFunctionSpec::Kind::IndicatorAffine) {
      ensure_h_factor();
      // KKT of min 0.5 x'Hx + c'x s.t. Ax = b with H = hess(f) + I/mu.
      Vector c = f_lin_term();
      axpy(-1.0 / mu_, z, c);
      const DenseMatrix& A = p_.h.A;
      Vector Hinv_c = h_factor_->solve(c);
      ensure_kkt_factor();
      Vector rhs = matvec(A, Hinv_c) + p_.h.b;
      Vector nu = kkt_factor_->solve(rhs);
      Vector x = h_factor_->solve(matvec_t(A, nu) - c);
      return x;
    }

    // APG fallback; strongly convex with modulus 1/mu - m_phi.
    const double L = p_.f.lipschitz_grad + 1.0 / mu_;
    const double m = 1.0 / mu_ - p_.f.weak_convexity;
    auto grad = [this, &z](const Vector& x) {
      Vector g = p_.f.gradient(x);
      axpy(1.0 / mu_, x - z, g);
      return g;
    };
    auto prox = [this](const Vector& v, double s) {
      return prox_of(p_.h, v, s, inner_tol_);
    };
    ApgResult res = apg_solve(grad, L, m, prox, prox(z, mu_), inner_tol_);
    if (!res.converged)
      throw MaxIterExceeded("DmeSmoothing::prox_phi: APG cap exceeded");
    return res.x;
  }

  double envelope_phi(const Vector& z, Vector* prox_out = nullptr) const {
    Vector xp = prox_phi(z);
    Vector diff = xp - z;
    const double hv = p_.h.value(xp, 1e-7);
    const double val =
        p_.f.value(xp) + (hv == kInf ? 0.0 : hv) + dot(diff, diff) / (2.0 * mu_);
    if (prox_out) *prox_out = std::move(xp);
    return val;
  }

  double envelope_g(const Vector& z, Vector* prox_out = nullptr) const {
    EnvelopeEval e = moreau_envelope(p_.g, mu_, z, inner_tol_);
    if (prox_out) *prox_out = std::move(e.prox_point);
    return e.value;
  }

  double value(const Vector& z) const {
    return envelope_phi(z) - envelope_g(z);
  }

  Vector gradient(const Vector& z) const {
    Vector xp = prox_phi(z);
    Vector xg = prox_g(z);
    return (1.0 / mu_) * (xg - xp);
  }

 private:
  void ensure_h_factor() const {
    if (h_factor_) return;
    DenseMatrix H = f_hessian();
    for (std::size_t i = 0; i < H.rows; ++i) H(i, i) += 1.0 / mu_;
    try {
      h_factor_ = std::make_shared<const CholeskyFactor>(cholesky(H));
    } catch (const NotPositiveDefinite&) {
      throw SingularSystem("DmeSmoothing: hess(f) + I/mu not positive definite");
    }
  }

  void ensure_kkt_factor() const {
    if (kkt_factor_) return;
    const DenseMatrix& A = p_.h.A;
    // A H^{-1} A^T assembled column by column.
    DenseMatrix At = transpose(A);
    DenseMatrix S(A.rows, A.rows);
    for (std::size_t j = 0; j < A.rows; ++j) {
      Vector aj(At.rows);
      for (std::size_t i = 0; i < At.rows; ++i) aj[i] = At(i, j);
      Vector hj = h_factor_->solve(aj);
      Vector col = matvec(A, hj);
      for (std::size_t i = 0; i < A.rows; ++i) S(i, j) = col[i];
    }
    try {
      kkt_factor_ = std::make_shared<const CholeskyFactor>(cholesky(S));
    } catch (const NotPositiveDefinite&) {
      throw SingularSystem("DmeSmoothing: KKT Schur complement singular");
    }
  }

  DenseMatrix f_hessian() const {
    switch (p_.f.kind) {
      case SmoothSpec::Kind::LeastSquares:
        return gram(p_.f.C);
      case SmoothSpec::Kind::Quadratic:
        return p_.f.Q;
      case SmoothSpec::Kind::Zero:
        return DenseMatrix(p_.n, p_.n);
    }
    return DenseMatrix(p_.n, p_.n);
  }

  // Constant term of grad f: grad f(x) = hess(f) x + lin.
  Vector f_lin_term() const {
    switch (p_.f.kind) {
      case SmoothSpec::Kind::LeastSquares: {
        Vector v = matvec_t(p_.f.C, p_.f.d);
        for (auto& t : v) t = -t;
        return v;
      }
      case SmoothSpec::Kind::Quadratic:
        return p_.f.q;
      case SmoothSpec::Kind::Zero:
        return Vector(p_.n, 0.0);
    }
    return Vector(p_.n, 0.0);
  }

  DCProblem p_;
  double mu_;
  double inner_tol_;
  double lip_;
  mutable std::shared_ptr<const CholeskyFactor> h_factor_;
  mutable std::shared_ptr<const CholeskyFactor> kkt_factor_;
};

inline double dme_value(const DmeSmoothing& s, const Vector& z) {
  return s.value(z);
}

inline Vector dme_gradient(const DmeSmoothing& s, const Vector& z) {
  return s.gradient(z);
}

struct SandwichResult {
  double lower = 0.0;
  double mid = 0.0;
  double upper = 0.0;
  bool ok = false;
};

// Lower/upper envelope bounds F(x_{mu phi}(z)) <= F_mu(z) <= F(x_{mu g}(z)).
inline SandwichResult sandwich_check(const DmeSmoothing& s, const Vector& z,
                                     double slack = 1e-9) {
  SandwichResult out;
  Vector xp = s.prox_phi(z);
  Vector xg = s.prox_g(z);
  out.lower = evaluate_F(s.problem(), xp);
  out.upper = evaluate_F(s.problem(), xg);
  out.mid = s.value(z);
  out.ok = out.lower <= out.mid + slack &&
           (out.upper == kInf || out.mid <= out.upper + slack);
  return out;
}

// When grad F_mu is small, x_{mu phi}(z) is a near-stationary point of F.
inline std::optional<Vector> stationarity_of_smoothed(const DmeSmoothing& s,
                                                      const Vector& z,
                                                      double tol) {
  if (norm2(s.gradient(z)) > tol) return std::nullopt;
  return s.prox_phi(z);
}

}  // namespace dmedc
