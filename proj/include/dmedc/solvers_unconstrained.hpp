#pragma once

#include <cmath>
#include <utility>

#include "dmedc/moreau.hpp"
#include "dmedc/trace.hpp"

namespace dmedc {

enum class StopRule {
  Stationarity,   // max{||xi||, ||x - y||} <= tol
  RelativeGap     // ||x_new - y|| / max{1, ||x_new||} <= tol
};

enum class SolveStatus { Converged, MaxIter };

struct UnconstrainedConfig {
  double mu = 0.0;       // required
  double alpha = 0.0;    // GD step; 0 -> 1/L_Fmu
  double beta = 1.0;     // inexact GD relaxation, in (0,2)
  int max_iter = 10000;
  double tol = 1e-5;
  StopRule rule = StopRule::RelativeGap;
  bool record_trace = true;
};

struct UnconstrainedResult {
  Vector x;  // primal candidate (x_{mu phi} or x^{k+1})
  Vector y;  // companion point (x_{mu g} or x^k)
  Vector z;  // smoothing center, when applicable
  IterateTrace trace;
  std::vector<double> potential;  // per-iteration merit value
  std::vector<double> dx_norms;   // ||x^{k+1} - x^k|| per update
  std::vector<double> dz_norms;   // ||z^{k+1} - z^k|| per update
  SolveStatus status = SolveStatus::MaxIter;
  int iterations = 0;
  double xi_norm = 0.0;
  double gap_norm = 0.0;
  double final_objective = 0.0;
};

// The shared termination rule: ||x_new - y|| / max{1, ||x_new||} <= tol.
inline bool termination_check(const Vector& x_new, const Vector& y, double tol) {
  return norm2(x_new - y) / std::max(1.0, norm2(x_new)) <= tol;
}

namespace detail {

inline bool stop_now(const UnconstrainedConfig& cfg, double xi_norm,
                     const Vector& x_new, const Vector& y) {
  if (cfg.rule == StopRule::Stationarity)
    return std::max(xi_norm, norm2(x_new - y)) <= cfg.tol;
  return termination_check(x_new, y, cfg.tol);
}

}  // namespace detail

// Gradient descent z <- z - alpha * grad F_mu(z).
inline UnconstrainedResult gd_on_fmu(const DCProblem& p,
                                     const UnconstrainedConfig& cfg,
                                     Vector z0) {
  DmeSmoothing s(p, cfg.mu);
  const double alpha = cfg.alpha > 0.0 ? cfg.alpha : 1.0 / s.lipschitz();
  if (alpha > 1.0 / s.lipschitz() + 1e-12)
    throw InfeasibleParameters("gd_on_fmu: alpha exceeds 1/L_Fmu");

  UnconstrainedResult out;
  StopWatch clock;
  Vector z = std::move(z0);
  for (int k = 0; k <= cfg.max_iter; ++k) {
    Vector xp = s.prox_phi(z);
    Vector xg = s.prox_g(z);
    Vector xi = (1.0 / cfg.mu) * (xg - xp);
    const double xi_norm = norm2(xi);
    const double gap = norm2(xp - xg);
    Vector dp = xp - z, dg = xg - z;
    const double hv = p.h.value(xp, 1e-7);
    const double fmu = p.f.value(xp) + (hv == kInf ? 0.0 : hv) +
                       dot(dp, dp) / (2.0 * cfg.mu) -
                       (p.g.value(xg) + dot(dg, dg) / (2.0 * cfg.mu));
    if (cfg.record_trace)
      out.trace.push_back(
          {k, fmu, 0.0, xi_norm, gap, 0, clock.elapsed_ms()});
    out.potential.push_back(fmu);
    out.x = xp;
    out.y = xg;
    out.z = z;
    out.iterations = k;
    out.xi_norm = xi_norm;
    out.gap_norm = gap;
    out.final_objective = fmu;
    if (detail::stop_now(cfg, xi_norm, xp, xg)) {
      out.status = SolveStatus::Converged;
      return out;
    }
    if (k == cfg.max_iter) break;
    out.dz_norms.push_back(alpha * xi_norm);
    axpy(-alpha, xi, z);
  }
  out.status = SolveStatus::MaxIter;
  return out;
}

// Inexact GD on F_mu: f is linearized inside the phi-prox.
inline UnconstrainedResult inexact_gd(const DCProblem& p,
                                      const UnconstrainedConfig& cfg, Vector x0,
                                      Vector z0) {
  if (cfg.mu <= 0.0 || cfg.mu >= 1.0 / p.f.lipschitz_grad)
    throw InfeasibleParameters("inexact_gd: need 0 < mu < 1/L_f");
  if (cfg.beta <= 0.0 || cfg.beta >= 2.0)
    throw InfeasibleParameters("inexact_gd: need beta in (0,2)");
  const double mu = cfg.mu;

  UnconstrainedResult out;
  StopWatch clock;
  Vector x = std::move(x0);
  Vector z = std::move(z0);
  Vector grad_prev = p.f.gradient(x);
  {
    // F(x^0, z^0) anchors the potential sequence.
    Vector dxz0 = x - z;
    const double hv0 = p.h.value(x, 1e-7);
    EnvelopeEval g0 = moreau_envelope(p.g, mu, z);
    out.potential.push_back(p.f.value(x) + (hv0 == kInf ? 0.0 : hv0) +
                            dot(dxz0, dxz0) / (2.0 * mu) - g0.value);
  }
  for (int k = 0; k <= cfg.max_iter; ++k) {
    Vector step = z - mu * grad_prev;
    Vector x_next = prox_of(p.h, step, mu);
    EnvelopeEval g_env = moreau_envelope(p.g, mu, z);
    const Vector& y = g_env.prox_point;
    Vector grad_next = p.f.gradient(x_next);
    Vector xi = grad_next - grad_prev;
    axpy(-1.0 / mu, x_next - y, xi);
    const double xi_norm = norm2(xi);
    const double gap = norm2(x_next - y);

    Vector z_next = z;
    axpy(cfg.beta, x_next - y, z_next);
    out.dx_norms.push_back(norm2(x_next - x));
    out.dz_norms.push_back(norm2(z_next - z));

    // Potential F(x^{k+1}, z^{k+1}).
    Vector dxz = x_next - z_next;
    const double hv = p.h.value(x_next, 1e-7);
    EnvelopeEval g_env_next = moreau_envelope(p.g, mu, z_next);
    const double pot = p.f.value(x_next) + (hv == kInf ? 0.0 : hv) +
                       dot(dxz, dxz) / (2.0 * mu) - g_env_next.value;
    out.potential.push_back(pot);
    if (cfg.record_trace) {
      const double obj = evaluate_F(p, x_next);
      out.trace.push_back({k, obj, 0.0, xi_norm, gap, 0, clock.elapsed_ms()});
    }
    out.x = x_next;
    out.y = y;
    out.z = z_next;
    out.iterations = k + 1;
    out.xi_norm = xi_norm;
    out.gap_norm = gap;
    out.final_objective = evaluate_F(p, x_next);
    if (detail::stop_now(cfg, xi_norm, x_next, y)) {
      out.status = SolveStatus::Converged;
      return out;
    }
    x = std::move(x_next);
    z = std::move(z_next);
    grad_prev = std::move(grad_next);
  }
  out.status = SolveStatus::MaxIter;
  return out;
}

namespace detail {

// Convex subproblem min f(x) + h(x) - <xi, x> + (0.5/c)||x - center||^2,
// c = 0 disables the proximal term (plain DCA step).
inline Vector dc_subproblem(const DCProblem& p, const Vector& xi,
                            const Vector& center, double c, double tol) {
  const bool proximal = c > 0.0;
  const double L = p.f.lipschitz_grad + (proximal ? 1.0 / c : 0.0);
  const double m = proximal ? 1.0 / c - p.f.weak_convexity : 0.0;
  auto grad = [&](const Vector& x) {
    Vector g = p.f.gradient(x);
    axpy(-1.0, xi, g);
    if (proximal) axpy(1.0 / c, x - center, g);
    return g;
  };
  auto prox = [&](const Vector& v, double s) { return prox_of(p.h, v, s); };
  ApgResult res = apg_solve(grad, L, m, prox, center, tol);
  if (!res.converged) throw MaxIterExceeded("dc_subproblem: APG cap exceeded");
  return res.x;
}

}  // namespace detail

// Classic DCA: full convex solve of phi(x) - <xi_g^k, x> each step.
inline UnconstrainedResult dca(const DCProblem& p,
                               const UnconstrainedConfig& cfg, Vector x0,
                               double inner_tol = 1e-9) {
  UnconstrainedResult out;
  StopWatch clock;
  Vector x = std::move(x0);
  for (int k = 0; k < cfg.max_iter; ++k) {
    Vector xi_g = p.g.subgradient(x);
    Vector x_next = detail::dc_subproblem(p, xi_g, x, 0.0, inner_tol);
    const double obj = evaluate_F(p, x_next);
    if (cfg.record_trace)
      out.trace.push_back(
          {k, obj, 0.0, 0.0, norm2(x_next - x), 0, clock.elapsed_ms()});
    out.potential.push_back(obj);
    out.y = x;
    out.x = x_next;
    out.iterations = k + 1;
    out.gap_norm = norm2(x_next - x);
    out.final_objective = obj;
    const bool stop = termination_check(x_next, x, cfg.tol);
    x = std::move(x_next);
    if (stop) {
      out.status = SolveStatus::Converged;
      return out;
    }
  }
  out.status = SolveStatus::MaxIter;
  return out;
}

// Proximal DCA with linearized f (step c_k = mu), the pDCAe base step.
inline UnconstrainedResult pdca(const DCProblem& p,
                                const UnconstrainedConfig& cfg, Vector x0) {
  const double mu = cfg.mu;
  if (mu <= 0.0) throw InfeasibleParameters("pdca: mu must be positive");
  UnconstrainedResult out;
  StopWatch clock;
  Vector x = std::move(x0);
  for (int k = 0; k < cfg.max_iter; ++k) {
    Vector xi_g = p.g.subgradient(x);
    Vector step = x - mu * (p.f.gradient(x) - xi_g);
    Vector x_next = prox_of(p.h, step, mu);
    const double obj = evaluate_F(p, x_next);
    if (cfg.record_trace)
      out.trace.push_back(
          {k, obj, 0.0, 0.0, norm2(x_next - x), 0, clock.elapsed_ms()});
    out.potential.push_back(obj);
    out.y = x;
    out.x = x_next;
    out.iterations = k + 1;
    out.gap_norm = norm2(x_next - x);
    out.final_objective = obj;
    const bool stop = termination_check(x_next, x, cfg.tol);
    x = std::move(x_next);
    if (stop) {
      out.status = SolveStatus::Converged;
      return out;
    }
  }
  out.status = SolveStatus::MaxIter;
  return out;
}

struct PdcaeOptions {
  int restart_every = 200;  // fixed restart of the FISTA t-sequence
  bool extrapolate = true;
};

// pDCAe: pdca step taken at the extrapolated point y^k = x^k + theta_k (x^k -
// x^{k-1}) with the FISTA t-sequence.
inline UnconstrainedResult pdcae(const DCProblem& p,
                                 const UnconstrainedConfig& cfg, Vector x0,
                                 const PdcaeOptions& opt = {}) {
  const double mu = cfg.mu;
  if (mu <= 0.0) throw InfeasibleParameters("pdcae: mu must be positive");
  UnconstrainedResult out;
  StopWatch clock;
  Vector x = std::move(x0);
  Vector x_prev = x;
  double t = 1.0, t_prev = 1.0;
  for (int k = 0; k < cfg.max_iter; ++k) {
    if (opt.restart_every > 0 && k > 0 && k % opt.restart_every == 0) {
      t = 1.0;
      t_prev = 1.0;
    }
    const double theta = opt.extrapolate ? (t_prev - 1.0) / t : 0.0;
    Vector y = x;
    axpy(theta, x - x_prev, y);
    Vector xi_g = p.g.subgradient(x);
    Vector step = y - mu * (p.f.gradient(y) - xi_g);
    Vector x_next = prox_of(p.h, step, mu);
    const double obj = evaluate_F(p, x_next);
    if (cfg.record_trace)
      out.trace.push_back(
          {k, obj, 0.0, 0.0, norm2(x_next - x), 0, clock.elapsed_ms()});
    out.potential.push_back(obj);
    out.y = x;
    out.x = x_next;
    out.iterations = k + 1;
    out.gap_norm = norm2(x_next - x);
    out.final_objective = obj;
    const bool stop = termination_check(x_next, x, cfg.tol);
    t_prev = t;
    t = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    x_prev = std::move(x);
    x = std::move(x_next);
    if (stop) {
      out.status = SolveStatus::Converged;
      return out;
    }
  }
  out.status = SolveStatus::MaxIter;
  return out;
}

}  // namespace dmedc
