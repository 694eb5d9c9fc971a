#pragma once

#include <cmath>
#include <utility>

#include "dmedc/moreau.hpp"
#include "dmedc/solvers_unconstrained.hpp"
#include "dmedc/trace.hpp"

namespace dmedc {

struct AlmConstants {
  double c1 = 0.0, c2 = 0.0, c3 = 0.0, c4 = 0.0;
  double nu = 0.0;
  double rho = 0.0;
  double kappa1 = 0.0, kappa2 = 0.0, kappa3 = 0.0, kappa4 = 0.0;
  double sigma_min_pos_A = 0.0;
  double sigma_min_pos_AAt = 0.0;
};

// Parameter recipe: nu = min{c1,c2}, rho = 10 max{c3/(c1-nu/2), 2c3/nu, 2c4/nu}.
inline AlmConstants derive_alm_constants(const LCDCProblem& p, double mu,
                                         double beta) {
  const double L_f = p.dc.f.lipschitz_grad;
  if (mu <= 0.0 || mu >= 1.0 / L_f)
    throw InfeasibleParameters("derive_alm_constants: need 0 < mu < 1/L_f");
  if (beta <= 0.0 || beta >= 2.0)
    throw InfeasibleParameters("derive_alm_constants: need beta in (0,2)");
  AlmConstants c;
  c.c1 = (1.0 / mu - L_f) / 2.0;
  c.c2 = (1.0 / beta - 0.5) / mu;
  const SvdSummary svd = svd_summary(p.A);
  c.sigma_min_pos_A = svd.sigma_min_pos;
  c.sigma_min_pos_AAt = svd.sigma_min_pos * svd.sigma_min_pos;
  c.c3 = 3.0 / (mu * mu) / c.sigma_min_pos_AAt;
  c.c4 = 3.0 * L_f * L_f / c.sigma_min_pos_AAt;
  c.nu = std::min(c.c1, c.c2);
  c.rho = 10.0 * std::max({c.c3 / (c.c1 - c.nu / 2.0), 2.0 * c.c3 / c.nu,
                           2.0 * c.c4 / c.nu});
  c.kappa1 = c.c1 - c.c3 / c.rho - c.nu / 2.0;
  c.kappa2 = c.c2 - c.nu / 2.0;
  c.kappa3 = c.nu / 2.0 - c.c4 / c.rho;
  c.kappa4 = c.nu / 2.0 - c.c3 / c.rho;
  if (c.kappa1 <= 0.0 || c.kappa2 <= 0.0 || c.kappa3 <= 0.0 || c.kappa4 <= 0.0)
    throw InfeasibleParameters("derive_alm_constants: some kappa <= 0");
  return c;
}

enum class EpsSchedule { Harmonic, Constant, Geometric };

struct ConstrainedConfig {
  double mu = 0.0;
  double beta = 1.0;
  double rho = 0.0;  // 0 -> derive_alm_constants recipe
  double eps = 1e-5; // stationarity target on the residual triple
  bool stop_on_eps = true;  // false: run the full horizon, eps only sets eps_k
  int max_iter = 10000;
  bool record_trace = true;
  // Composite solver knobs.
  EpsSchedule schedule = EpsSchedule::Harmonic;
  double eps_geo_factor = 0.5;
  int inner_max_iter = 200000;
  // Optional experiment-style stop: ||Ax-b|| <= feas_tol and
  // |F(x^k)-F(x^{k-1})| / |F(x^k)| <= obj_rel_tol (both disabled when <= 0).
  double feas_tol = 0.0;
  double obj_rel_tol = 0.0;
};

struct ConstrainedResult {
  Vector x, y, lambda;
  IterateTrace trace;
  std::vector<double> potential;       // Psi_k (LCDC-ALM) or P (composite)
  std::vector<double> dx_norms;        // ||x^{k+1} - x^k|| per update
  std::vector<double> dz_norms;        // ||z^{k+1} - z^k|| per update
  std::vector<double> dlam_norms;      // ||lambda^{k+1} - lambda^k|| per update
  double dz_init = 0.0;                // ||z^0 - z^{-1}||
  std::vector<double> lambda_norms;    // per-iteration dual norms
  std::vector<double> inner_eps;       // composite: target eps_{k+1}
  std::vector<double> zeta_norms;      // composite: certificate norms
  SolveStatus status = SolveStatus::MaxIter;
  int iterations = 0;
  double xi_norm = 0.0;
  double gap_norm = 0.0;
  double infeasibility = 0.0;
  // Iterate minimizing the max residual over the recorded trace.
  int selected_index = 0;
  double selected_max_residual = 0.0;
  double selected_infeasibility = 0.0;
  double final_objective = 0.0;
};

struct ResidualTriple {
  double xi_norm = 0.0;
  double gap_norm = 0.0;
  double infeasibility = 0.0;
  double max_residual() const {
    return std::max({xi_norm, gap_norm, infeasibility});
  }
};

inline ResidualTriple constrained_residual(const LCDCProblem& p,
                                           const Vector& x, const Vector& y,
                                           const Vector& lambda,
                                           const Vector& xi) {
  (void)lambda;
  ResidualTriple r;
  r.xi_norm = norm2(xi);
  r.gap_norm = norm2(x - y);
  r.infeasibility = norm2(matvec(p.A, x) - p.b);
  return r;
}

// Smoothed proximal AL value psi(x, z, lambda).
inline double alm_psi(const LCDCProblem& p, double mu, double rho,
                      const Vector& x, const Vector& z, const Vector& lambda) {
  Vector r = matvec(p.A, x) - p.b;
  Vector dxz = x - z;
  EnvelopeEval g_env = moreau_envelope(p.dc.g, mu, z);
  return p.dc.f.value(x) + dot(lambda, r) + 0.5 * rho * dot(r, r) +
         dot(dxz, dxz) / (2.0 * mu) - g_env.value;
}

// LCDC-ALM (smooth phi = f, h = 0).
inline ConstrainedResult lcdc_alm(const LCDCProblem& p, ConstrainedConfig cfg,
                                  Vector x0, Vector z0, Vector lam0) {
  if (p.dc.h.kind != ConvexFunctionSpec::Kind::Zero)
    throw InfeasibleParameters("lcdc_alm: requires h = 0");
  AlmConstants consts;
  if (cfg.rho <= 0.0) {
    consts = derive_alm_constants(p, cfg.mu, cfg.beta);
    cfg.rho = consts.rho;
    } else {
    consts.nu = std::min((1.0 / cfg.mu - p.dc.f.lipschitz_grad) / 2.0,
                         (1.0 / cfg.beta - 0.5) / cfg.mu);
  }
  const double mu = cfg.mu, beta = cfg.beta, rho = cfg.rho, nu = consts.nu;

  AlmSystem sys = AlmSystem::build(p.A, mu, rho);
  ConstrainedResult out;
  StopWatch clock;
  Vector x = std::move(x0);
  Vector z = std::move(z0);
  Vector lambda = std::move(lam0);
  // x^{-1} = x^0 and z^{-1} = x^0 + mu (grad f(x^0) + A' lambda^0).
  Vector x_prev = x;
  Vector z_prev = x + mu * (p.dc.f.gradient(x) + matvec_t(p.A, lambda));
  Vector grad_prev = p.dc.f.gradient(x);
  out.dz_init = norm2(z - z_prev);
  double best = kInf;
  for (int k = 0; k < cfg.max_iter; ++k) {
    {
      Vector dx = x - x_prev, dz = z - z_prev;
      out.potential.push_back(alm_psi(p, mu, rho, x, z, lambda) +
                              0.5 * nu * dot(dx, dx) + 0.5 * nu * dot(dz, dz));
    }
    Vector x_next = prox_quadratic_affine(z, sys, grad_prev, p.b, lambda);
    Vector y = prox_of(p.dc.g, z, mu);
    Vector z_next = z;
    axpy(beta, x_next - y, z_next);
    Vector resid = matvec(p.A, x_next) - p.b;
    Vector lam_next = lambda;
    axpy(rho, resid, lam_next);
    out.dx_norms.push_back(norm2(x_next - x));
    out.dz_norms.push_back(norm2(z_next - z));
    out.dlam_norms.push_back(norm2(lam_next - lambda));

    Vector grad_next = p.dc.f.gradient(x_next);
    Vector xi = grad_next - grad_prev;
    axpy(1.0 / mu, y - x_next, xi);
    ResidualTriple rt = constrained_residual(p, x_next, y, lam_next, xi);

    const double obj = evaluate_F(p.dc, x_next);
    if (cfg.record_trace)
      out.trace.push_back({k, obj, rt.infeasibility, rt.xi_norm, rt.gap_norm, 0,
                           clock.elapsed_ms()});
    out.lambda_norms.push_back(norm2(lam_next));
    if (rt.max_residual() < best) {
      best = rt.max_residual();
      out.selected_index = k;
      out.selected_max_residual = best;
      out.selected_infeasibility = rt.infeasibility;
    }
    out.x = x_next;
    out.y = y;
    out.lambda = lam_next;
    out.iterations = k + 1;
    out.xi_norm = rt.xi_norm;
    out.gap_norm = rt.gap_norm;
    out.infeasibility = rt.infeasibility;
    out.final_objective = obj;

    x_prev = std::move(x);
    z_prev = std::move(z);
    x = std::move(x_next);
    z = std::move(z_next);
    lambda = std::move(lam_next);
    grad_prev = std::move(grad_next);
    if (cfg.stop_on_eps && rt.max_residual() <= cfg.eps) {
      out.status = SolveStatus::Converged;
      return out;
    }
  }
  out.status = SolveStatus::MaxIter;
  return out;
}

struct ApgInnerResult {
  Vector x;
  Vector zeta;
  int iters = 0;
};

// Strongly convex inner problem of composite LCDC-ALM: minimize
// <f_lin, x> + <lambda, Ax-b> + rho/2 ||Ax-b||^2 + ||x-z||^2/(2mu) + h(x);
// m_psi = 1/mu and L_psi = rho ||A||^2 + 1/mu.
inline ApgInnerResult apg_inner(const Vector& f_lin, const Vector& lambda,
                                double rho, const DenseMatrix& A,
                                const Vector& b, double mu, const Vector& z,
                                const ConvexFunctionSpec& h, double norm_A,
                                const Vector& x0, double target_eps,
                                int max_iter = 200000) {
  const double L = rho * norm_A * norm_A + 1.0 / mu;
  const double m = 1.0 / mu;
  auto grad = [&](const Vector& x) {
    Vector g = f_lin + matvec_t(A, lambda);
    axpy(rho, matvec_t(A, matvec(A, x) - b), g);
    axpy(1.0 / mu, x - z, g);
    return g;
  };
  auto prox = [&](const Vector& v, double s) { return prox_of(h, v, s); };
  ApgResult res = apg_solve(grad, L, m, prox, x0, target_eps, max_iter);
  if (!res.converged) throw MaxIterExceeded("apg_inner: cap exceeded");
  return ApgInnerResult{std::move(res.x), std::move(res.certificate),
                        res.iters};
}

struct CompositeAlmConstants {
  double D_H = 0.0;        // domain diameter of h
  double M_grad_f = 0.0;   // max ||grad f|| over dom h
  double M_subgrad_g = 0.0;
  double L_h = 0.0;
  double d_bar = 0.0;      // dist(x_bar, boundary of dom h)
  double Lambda = 0.0;     // uniform dual bound
  double eta = 0.0;
  double gamma = 0.0;
  double E = 0.0;          // sum of eps_k^2
  double sigma_min_pos_A = 0.0;
};

namespace detail {

inline double domain_radius(const ConvexFunctionSpec& h) {
  switch (h.kind) {
    case ConvexFunctionSpec::Kind::IndicatorL1Ball:
      return h.radius;
    case ConvexFunctionSpec::Kind::IndicatorBox: {
      double s = 0.0;
      for (std::size_t i = 0; i < h.lo.size(); ++i)
        s += std::max(h.lo[i] * h.lo[i], h.hi[i] * h.hi[i]);
      return std::sqrt(s);
    }
    default:
      throw ShapeMismatch("composite constants: h must have a compact domain");
  }
}

inline double domain_diameter(const ConvexFunctionSpec& h) {
  switch (h.kind) {
    case ConvexFunctionSpec::Kind::IndicatorL1Ball:
      return 2.0 * h.radius;
    case ConvexFunctionSpec::Kind::IndicatorBox:
      return norm2(h.hi - h.lo);
    default:
      throw ShapeMismatch("composite constants: h must have a compact domain");
  }
}

inline double distance_to_boundary(const ConvexFunctionSpec& h,
                                   const Vector& x_bar) {
  switch (h.kind) {
    case ConvexFunctionSpec::Kind::IndicatorL1Ball:
      return (h.radius - norm1(x_bar)) /
             std::sqrt(static_cast<double>(x_bar.size()));
    case ConvexFunctionSpec::Kind::IndicatorBox: {
      double d = kInf;
      for (std::size_t i = 0; i < x_bar.size(); ++i)
        d = std::min({d, x_bar[i] - h.lo[i], h.hi[i] - x_bar[i]});
      return d;
    }
    default:
      throw ShapeMismatch("composite constants: h must have a compact domain");
  }
}

}  // namespace detail

inline CompositeAlmConstants derive_composite_constants(
    const LCDCProblem& p, double mu, double beta, const Vector& x_bar,
    double lambda0_norm, const std::vector<double>& eps_schedule) {
  CompositeAlmConstants c;
  const ConvexFunctionSpec& h = p.dc.h;
  c.D_H = detail::domain_diameter(h);
  c.L_h = 0.0;  // indicator kinds are constant on their domain
  c.d_bar = detail::distance_to_boundary(h, x_bar);
  if (c.d_bar <= 0.0)
    throw InfeasibleParameters("composite constants: x_bar not interior");
  const double R = detail::domain_radius(h);
  const SmoothSpec& f = p.dc.f;
  switch (f.kind) {
    case SmoothSpec::Kind::LeastSquares: {
      const double nc = std::sqrt(f.lipschitz_grad);  // ||C||
      c.M_grad_f = nc * (nc * R + norm2(f.d));
      break;
    }
    case SmoothSpec::Kind::Quadratic:
      c.M_grad_f = f.lipschitz_grad * R + norm2(f.q);
      break;
    case SmoothSpec::Kind::Zero:
      c.M_grad_f = 0.0;
      break;
  }
  const ConvexFunctionSpec& g = p.dc.g;
  switch (g.kind) {
    case ConvexFunctionSpec::Kind::EuclideanNorm:
      c.M_subgrad_g = g.rho;
      break;
    case ConvexFunctionSpec::Kind::L1Norm:
      c.M_subgrad_g = g.rho * std::sqrt(static_cast<double>(p.dc.n));
      break;
    case ConvexFunctionSpec::Kind::ConvexQuadratic:
      c.M_subgrad_g = symmetric_eigenvalues(g.G).back() * R;
      break;
    case ConvexFunctionSpec::Kind::Zero:
      c.M_subgrad_g = 0.0;
      break;
    default:
      throw ShapeMismatch("composite constants: unsupported g kind");
  }
  c.sigma_min_pos_A = svd_summary(p.A).sigma_min_pos;
  c.Lambda = std::max(
      lambda0_norm,
      (2.0 * c.D_H / (c.d_bar * c.sigma_min_pos_A)) *
          (c.M_grad_f + c.M_subgrad_g + c.D_H / mu + c.L_h + 1.0));
  const double L_f = p.dc.f.lipschitz_grad;
  c.eta = std::min((1.0 / mu - 2.0 * L_f) / 4.0, 1.0 / (2.0 * mu * beta));
  if (c.eta <= 0.0)
    throw InfeasibleParameters("composite constants: eta <= 0, mu too large");
  c.gamma = L_f + 1.0 / (mu * beta) + 1.0;
  c.E = 0.0;
  for (double e : eps_schedule) c.E += e * e;
  return c;
}

inline double eps_k_value(const ConstrainedConfig& cfg, int k) {
  // k is 1-based: the target for the k-th primal update.
  switch (cfg.schedule) {
    case EpsSchedule::Harmonic:
      return cfg.eps / (2.0 * static_cast<double>(k));
    case EpsSchedule::Constant:
      return cfg.eps / 2.0;
    case EpsSchedule::Geometric:
      return (cfg.eps / 2.0) *
             std::pow(cfg.eps_geo_factor, static_cast<double>(k - 1));
  }
  return cfg.eps / 2.0;
}

struct CompositeOptions {
  bool check_dual_bound = false;
  double dual_bound = 0.0;  // Lambda; violation raises DualBoundViolated
};

// Composite LCDC-ALM: g linearized, inner strongly convex subproblem solved
// by APG to the eps_k schedule.
inline ConstrainedResult composite_lcdc_alm(const LCDCProblem& p,
                                            ConstrainedConfig cfg, Vector x0,
                                            Vector z0, Vector lam0,
                                            const CompositeOptions& opt = {}) {
  const double L_f = p.dc.f.lipschitz_grad;
  if (cfg.mu <= 0.0 || cfg.mu >= 1.0 / (2.0 * L_f))
    throw InfeasibleParameters("composite_lcdc_alm: need 0 < mu < 1/(2 L_f)");
  if (cfg.beta <= 0.0 || cfg.beta > 1.0)
    throw InfeasibleParameters("composite_lcdc_alm: need beta in (0,1]");
  if (cfg.rho <= 0.0)
    throw InfeasibleParameters("composite_lcdc_alm: rho must be set");
  const double mu = cfg.mu, beta = cfg.beta, rho = cfg.rho;
  const double norm_A = operator_norm(p.A);

  ConstrainedResult out;
  StopWatch clock;
  Vector x = std::move(x0);
  Vector z = std::move(z0);
  Vector lambda = std::move(lam0);
  double obj_prev = evaluate_F(p.dc, x);
  double best = kInf;
  for (int k = 0; k < cfg.max_iter; ++k) {
    {
      Vector r = matvec(p.A, x) - p.b;
      Vector dxz = x - z;
      const double hv = p.dc.h.value(x, 1e-7);
      out.potential.push_back(p.dc.f.value(x) + (hv == kInf ? 0.0 : hv) -
                              p.dc.g.value(x) + dot(lambda, r) +
                              0.5 * rho * dot(r, r) +
                              dot(dxz, dxz) / (2.0 * mu));
    }
    if (opt.check_dual_bound && norm2(lambda) > opt.dual_bound + 1e-9)
      throw DualBoundViolated("composite_lcdc_alm: ||lambda|| exceeds Lambda");
    out.lambda_norms.push_back(norm2(lambda));

    const double eps_k = eps_k_value(cfg, k + 1);
    Vector xi_g = p.dc.g.subgradient(x);
    Vector f_lin = p.dc.f.gradient(x) - xi_g;
    ApgInnerResult inner = apg_inner(f_lin, lambda, rho, p.A, p.b, mu, z,
                                     p.dc.h, norm_A, x, eps_k,
                                     cfg.inner_max_iter);
    const Vector& x_next = inner.x;
    out.inner_eps.push_back(eps_k);
    out.zeta_norms.push_back(norm2(inner.zeta));

    Vector z_next = z;
    axpy(beta, x_next - z, z_next);
    Vector resid = matvec(p.A, x_next) - p.b;
    Vector lam_next = lambda;
    axpy(rho, resid, lam_next);
    out.dx_norms.push_back(norm2(x_next - x));
    out.dz_norms.push_back(norm2(z_next - z));
    out.dlam_norms.push_back(norm2(lam_next - lambda));

    Vector xi = inner.zeta + p.dc.f.gradient(x_next) - p.dc.f.gradient(x);
    axpy(1.0 / mu, z - x_next, xi);
    ResidualTriple rt = constrained_residual(p, x_next, x, lam_next, xi);

    const double obj = evaluate_F(p.dc, x_next);
    if (cfg.record_trace)
      out.trace.push_back({k, obj, rt.infeasibility, rt.xi_norm, rt.gap_norm,
                           inner.iters, clock.elapsed_ms()});
    if (rt.max_residual() < best) {
      best = rt.max_residual();
      out.selected_index = k;
      out.selected_max_residual = best;
      out.selected_infeasibility = rt.infeasibility;
    }
    out.y = x;
    out.x = x_next;
    out.lambda = lam_next;
    out.iterations = k + 1;
    out.xi_norm = rt.xi_norm;
    out.gap_norm = rt.gap_norm;
    out.infeasibility = rt.infeasibility;
    out.final_objective = obj;

    bool experiment_stop = false;
    if (cfg.feas_tol > 0.0 && cfg.obj_rel_tol > 0.0) {
      experiment_stop =
          rt.infeasibility <= cfg.feas_tol &&
          std::abs(obj - obj_prev) / std::max(1e-300, std::abs(obj)) <=
              cfg.obj_rel_tol;
    }
    x = x_next;
    z = std::move(z_next);
    lambda = std::move(lam_next);
    obj_prev = obj;
    if ((cfg.stop_on_eps && rt.max_residual() <= cfg.eps) || experiment_stop) {
      out.status = SolveStatus::Converged;
      return out;
    }
  }
  out.status = SolveStatus::MaxIter;
  return out;
}

}  // namespace dmedc
