#include <catch2/catch_amalgamated.hpp>

#include "dmedc/instance_gen.hpp"
#include "dmedc/solvers_constrained.hpp"

using namespace dmedc;

namespace {

// Equality-constrained convex QP oracle: minimize 0.5 x'Qx + q'x s.t. Ax=b,
// solved through the Schur complement of the KKT system (Q positive definite).
Vector kkt_solve(const DenseMatrix& Q, const Vector& q, const DenseMatrix& A,
                 const Vector& b) {
  CholeskyFactor FQ = cholesky(Q);
  DenseMatrix At = transpose(A);
  DenseMatrix S(A.rows, A.rows);
  for (std::size_t j = 0; j < A.rows; ++j) {
    Vector aj(At.rows);
    for (std::size_t i = 0; i < At.rows; ++i) aj[i] = At(i, j);
    Vector col = matvec(A, FQ.solve(aj));
    for (std::size_t i = 0; i < A.rows; ++i) S(i, j) = col[i];
  }
  Vector rhs = b + matvec(A, FQ.solve(q));
  Vector nu = cholesky(S).solve(rhs);
  return FQ.solve(matvec_t(A, nu) - q);
}

}  // namespace

TEST_CASE("alm constant recipe produces positive kappas") {
  auto [p, inst] = gen_nonconvex_qp(6, 16, 5);
  const double mu = 0.5 / p.dc.f.lipschitz_grad;
  AlmConstants c = derive_alm_constants(p, mu, 1.0);
  CHECK(c.c1 > 0.0);
  CHECK(c.c2 > 0.0);
  CHECK(c.c3 > 0.0);
  CHECK(c.c4 > 0.0);
  CHECK(c.kappa1 > 0.0);
  CHECK(c.kappa2 > 0.0);
  CHECK(c.kappa3 > 0.0);
  CHECK(c.kappa4 > 0.0);
  CHECK_THAT(c.c1, Catch::Matchers::WithinRel(
                       (1.0 / mu - p.dc.f.lipschitz_grad) / 2.0, 1e-12));
  CHECK_THAT(c.nu, Catch::Matchers::WithinRel(std::min(c.c1, c.c2), 1e-12));
  // rho is 10x the smallest admissible value from the paper's recipe.
  const double rho_min = std::max({c.c3 / (c.c1 - c.nu / 2.0),
                                   2.0 * c.c3 / c.nu, 2.0 * c.c4 / c.nu});
  CHECK_THAT(c.rho, Catch::Matchers::WithinRel(10.0 * rho_min, 1e-12));
  CHECK_THROWS_AS(derive_alm_constants(p, 1.0 / p.dc.f.lipschitz_grad, 1.0),
                  InfeasibleParameters);
}

TEST_CASE("lcdc-alm requires h = 0") {
  auto ci = gen_constrained_dcls(6, 20, 3, 1.0, 2.0, 4);
  ConstrainedConfig cfg;
  cfg.mu = 0.3 / ci.problem.dc.f.lipschitz_grad;
  CHECK_THROWS_AS(lcdc_alm(ci.problem, cfg, Vector(20, 0.0), Vector(20, 0.0),
                           Vector(6, 0.0)),
                  InfeasibleParameters);
}

TEST_CASE("lcdc-alm potential descent with the derived kappas") {
  auto [p, inst] = gen_nonconvex_qp(5, 14, 11);
  const std::size_t n = 14, m = 5;
  ConstrainedConfig cfg;
  cfg.mu = 0.5 / p.dc.f.lipschitz_grad;
  cfg.beta = 1.0;
  cfg.max_iter = 600;
  cfg.eps = 0.0;  // run the full horizon
  AlmConstants c = derive_alm_constants(p, cfg.mu, cfg.beta);
  ConstrainedResult r =
      lcdc_alm(p, cfg, Vector(n, 0.0), Vector(n, 0.0), Vector(m, 0.0));
  REQUIRE(r.potential.size() >= 500);
  for (std::size_t k = 0; k + 1 < r.potential.size(); ++k) {
    const double drop = r.potential[k] - r.potential[k + 1];
    const double dxp = k == 0 ? 0.0 : r.dx_norms[k - 1];
    const double dzp = k == 0 ? r.dz_init : r.dz_norms[k - 1];
    const double need = c.kappa1 * r.dx_norms[k] * r.dx_norms[k] +
                        c.kappa2 * r.dz_norms[k] * r.dz_norms[k] +
                        c.kappa3 * dxp * dxp + c.kappa4 * dzp * dzp;
    CHECK(drop >= need - 1e-8);
  }
}

TEST_CASE("dual step is bounded by primal steps") {
  auto [p, inst] = gen_nonconvex_qp(5, 12, 19);
  ConstrainedConfig cfg;
  cfg.mu = 0.5 / p.dc.f.lipschitz_grad;
  cfg.beta = 1.0;
  cfg.max_iter = 300;
  cfg.eps = 0.0;
  AlmConstants c = derive_alm_constants(p, cfg.mu, cfg.beta);
  ConstrainedResult r =
      lcdc_alm(p, cfg, Vector(12, 0.0), Vector(12, 0.0), Vector(5, 0.0));
  const double L_f = p.dc.f.lipschitz_grad;
  for (std::size_t k = 0; k < r.dlam_norms.size(); ++k) {
    const double dxp = k == 0 ? 0.0 : r.dx_norms[k - 1];
    const double dzp = k == 0 ? r.dz_init : r.dz_norms[k - 1];
    const double bound = (r.dx_norms[k] / cfg.mu + L_f * dxp + dzp / cfg.mu) /
                         c.sigma_min_pos_A;
    CHECK(r.dlam_norms[k] <= bound + 1e-8);
  }
}

TEST_CASE("lcdc-alm converges on a desk qp") {
  auto [p, inst] = gen_nonconvex_qp(6, 18, 23);
  ConstrainedConfig cfg;
  cfg.mu = 0.5 / p.dc.f.lipschitz_grad;
  cfg.beta = 1.0;
  cfg.max_iter = 5000;
  cfg.eps = 1e-5;
  ConstrainedResult r =
      lcdc_alm(p, cfg, Vector(18, 0.0), Vector(18, 0.0), Vector(6, 0.0));
  CHECK(r.status == SolveStatus::Converged);
  CHECK(r.infeasibility <= 1e-5);
  CHECK(r.xi_norm <= 1e-5);
  CHECK(r.gap_norm <= 1e-5);
}

TEST_CASE("both alm solvers recover the kkt point of a convex qp") {
  // f = 0.5 x'Qx + q'x with Q PD, g = 0, one equality constraint.
  DenseMatrix Q(4, 4);
  Q.data = {3.0, 0.2, 0.0, 0.0, 0.2, 2.0, 0.1, 0.0,
            0.0, 0.1, 1.5, 0.0, 0.0, 0.0, 0.0, 2.5};
  Vector q{1.0, -1.0, 0.5, 0.0};
  DenseMatrix A(2, 4);
  A.data = {1.0, 1.0, 0.0, 1.0, 0.0, 1.0, -1.0, 0.0};
  Vector b{1.0, 0.5};
  Vector x_star = kkt_solve(Q, q, A, b);
  REQUIRE(norm2(matvec(A, x_star) - b) < 1e-10);

  SmoothSpec f = SmoothSpec::quadratic(Q, q);
  DCProblem dc_smooth(f, ConvexFunctionSpec::zero(),
                      ConvexFunctionSpec::zero(), 4);
  LCDCProblem p(dc_smooth, A, b);
  ConstrainedConfig cfg;
  cfg.mu = 0.3 / f.lipschitz_grad;
  cfg.beta = 1.0;
  cfg.max_iter = 20000;
  cfg.eps = 1e-9;
  ConstrainedResult r =
      lcdc_alm(p, cfg, Vector(4, 0.0), Vector(4, 0.0), Vector(2, 0.0));
  CHECK(norm2(r.x - x_star) < 1e-5);

  // Composite variant with an inactive box around the solution.
  double R = 0.0;
  for (double v : x_star) R = std::max(R, std::abs(v));
  DCProblem dc_comp(f,
                    ConvexFunctionSpec::indicator_box(Vector(4, -2.0 * R - 1.0),
                                                      Vector(4, 2.0 * R + 1.0)),
                    ConvexFunctionSpec::zero(), 4);
  LCDCProblem pc(dc_comp, A, b);
  ConstrainedConfig cfg2;
  cfg2.mu = 0.2 / f.lipschitz_grad;
  cfg2.beta = 1.0;
  cfg2.rho = 50.0 * f.lipschitz_grad;
  cfg2.max_iter = 20000;
  cfg2.eps = 1e-9;
  ConstrainedResult r2 = composite_lcdc_alm(pc, cfg2, Vector(4, 0.0),
                                            Vector(4, 0.0), Vector(2, 0.0));
  CHECK(norm2(r2.x - x_star) < 1e-5);
}

TEST_CASE("composite descent inequality with the recorded inner targets") {
  auto ci = gen_constrained_dcls(6, 24, 4, 1.0, 2.0, 8);
  const LCDCProblem& p = ci.problem;
  ConstrainedConfig cfg;
  cfg.mu = 0.4 / p.dc.f.lipschitz_grad;
  cfg.beta = 1.0;
  cfg.rho = 20.0 / cfg.mu;
  cfg.max_iter = 550;
  cfg.eps = 1e-3;  // harmonic schedule eps_k = eps/(2k)
  ConstrainedResult r = composite_lcdc_alm(p, cfg, Vector(24, 0.0),
                                           Vector(24, 0.0), Vector(6, 0.0));
  const double L_f = p.dc.f.lipschitz_grad;
  const double cx = (1.0 / cfg.mu - 2.0 * L_f) / 4.0;
  const double cz = 1.0 / (2.0 * cfg.beta * cfg.mu);
  REQUIRE(r.potential.size() >= 10);
  for (std::size_t k = 0; k + 1 < r.potential.size(); ++k) {
    const double drop = r.potential[k] - r.potential[k + 1];
    const double eps_k1 = r.inner_eps[k];
    const double need = cx * r.dx_norms[k] * r.dx_norms[k] +
                        cz * r.dz_norms[k] * r.dz_norms[k] -
                        r.dlam_norms[k] * r.dlam_norms[k] / cfg.rho -
                        cfg.mu * eps_k1 * eps_k1;
    CHECK(drop >= need - 1e-8);
  }
}

TEST_CASE("composite dual iterates respect the uniform bound") {
  auto ci = gen_constrained_dcls(5, 20, 3, 1.0, 2.0, 12);
  const LCDCProblem& p = ci.problem;
  ConstrainedConfig cfg;
  cfg.mu = 0.4 / p.dc.f.lipschitz_grad;
  cfg.beta = 1.0;
  cfg.rho = 10.0 / cfg.mu;
  cfg.max_iter = 400;
  cfg.eps = 1e-6;
  std::vector<double> sched;
  for (int k = 1; k <= cfg.max_iter; ++k) sched.push_back(eps_k_value(cfg, k));
  CompositeAlmConstants cc = derive_composite_constants(
      p, cfg.mu, cfg.beta, ci.x_bar, 0.0, sched);
  CHECK(cc.Lambda > 0.0);
  CHECK(cc.eta > 0.0);
  CompositeOptions opt;
  opt.check_dual_bound = true;
  opt.dual_bound = cc.Lambda;
  ConstrainedResult r;
  REQUIRE_NOTHROW(r = composite_lcdc_alm(p, cfg, Vector(20, 0.0),
                                         Vector(20, 0.0), Vector(5, 0.0),
                                         opt));
  for (double ln : r.lambda_norms) CHECK(ln <= cc.Lambda + 1e-9);
  // Theorem-level feasibility bound at the selected iterate.
  CHECK(r.selected_infeasibility <= 2.0 * cc.Lambda / cfg.rho + 1e-9);
}

TEST_CASE("composite rejects invalid parameters") {
  auto ci = gen_constrained_dcls(4, 12, 2, 1.0, 2.0, 1);
  ConstrainedConfig cfg;
  cfg.mu = 1.0 / ci.problem.dc.f.lipschitz_grad;  // >= 1/(2 L_f)
  cfg.rho = 10.0;
  CHECK_THROWS_AS(composite_lcdc_alm(ci.problem, cfg, Vector(12, 0.0),
                                     Vector(12, 0.0), Vector(4, 0.0)),
                  InfeasibleParameters);
  cfg.mu = 0.4 / ci.problem.dc.f.lipschitz_grad;
  cfg.beta = 1.5;  // > 1
  CHECK_THROWS_AS(composite_lcdc_alm(ci.problem, cfg, Vector(12, 0.0),
                                     Vector(12, 0.0), Vector(4, 0.0)),
                  InfeasibleParameters);
}
