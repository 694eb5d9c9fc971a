#include <catch2/catch_amalgamated.hpp>

#include "dmedc/prox.hpp"

using namespace dmedc;

namespace {

// 1-D brute-force prox oracle over [-6, 6].
double grid_prox_1d(const std::function<double(double)>& f, double z, double t,
                    double step = 1e-3) {
  double best_x = 0.0, best_v = kInf;
  for (double x = -6.0; x <= 6.0; x += step) {
    const double v = f(x) + (x - z) * (x - z) / (2.0 * t);
    if (v < best_v) {
      best_v = v;
      best_x = x;
    }
  }
  return best_x;
}

}  // namespace

TEST_CASE("l1 prox matches soft thresholding oracle") {
  for (double z : {-2.3, -0.4, 0.0, 0.7, 1.9}) {
    for (double t : {0.5, 1.0, 2.0}) {
      const double rho = 0.8;
      Vector x = prox_l1({z}, t, rho);
      const double oracle =
          grid_prox_1d([rho](double v) { return rho * std::abs(v); }, z, t);
      CHECK_THAT(x[0], Catch::Matchers::WithinAbs(oracle, 2e-3));
    }
  }
}

TEST_CASE("euclidean prox shrinks toward the origin") {
  Vector z{3.0, 4.0};  // norm 5
  Vector x = prox_euclidean(z, 1.0, 1.0);
  CHECK_THAT(norm2(x), Catch::Matchers::WithinAbs(4.0, 1e-12));
  CHECK_THAT(x[0], Catch::Matchers::WithinAbs(2.4, 1e-12));
  // Inside the threshold the prox collapses to zero.
  CHECK(prox_euclidean({0.1, 0.1}, 1.0, 1.0) == Vector{0.0, 0.0});
}

TEST_CASE("box projection clips componentwise") {
  Vector x = project_box({-3.0, 0.2, 7.0}, {-1.0, -1.0, -1.0},
                         {1.0, 1.0, 1.0});
  CHECK(x == Vector{-1.0, 0.2, 1.0});
}

TEST_CASE("l1 ball projection is optimal among random feasible points") {
  SeededRng rng(3);
  const double M = 2.0;
  for (int t = 0; t < 20; ++t) {
    Vector z = rng_gaussian(rng, 5);
    Vector p = project_l1_ball(z, M);
    CHECK(norm1(p) <= M + 1e-10);
    for (int j = 0; j < 20; ++j) {
      Vector y = rng_gaussian(rng, 5);
      const double n1 = norm1(y);
      if (n1 > M) for (auto& v : y) v *= M / n1;
      CHECK(norm2(p - z) <= norm2(y - z) + 1e-10);
    }
  }
  // Interior points are untouched.
  Vector inside{0.3, -0.2, 0.1, 0.0, 0.0};
  CHECK(project_l1_ball(inside, M) == inside);
}

TEST_CASE("affine projection lands on the constraint") {
  DenseMatrix A(2, 4);
  A.data = {1.0, 1.0, 0.0, 0.0, 0.0, 1.0, -1.0, 2.0};
  Vector b{1.0, 0.5};
  auto spec = ConvexFunctionSpec::indicator_affine(A, b);
  SeededRng rng(9);
  for (int t = 0; t < 10; ++t) {
    Vector z = rng_gaussian(rng, 4);
    Vector p = prox_of(spec, z, 1.0);
    CHECK(norm2(matvec(A, p) - b) < 1e-9);
    // Optimality: z - p orthogonal to null(A), i.e. in the row space.
    SvdSummary s = svd_summary(A);
    for (std::size_t j = 0; j < s.right_null_basis.cols; ++j) {
      Vector v(4);
      for (std::size_t i = 0; i < 4; ++i) v[i] = s.right_null_basis(i, j);
      CHECK(std::abs(dot(z - p, v)) < 1e-9);
    }
    // Idempotence.
    CHECK(norm2(prox_of(spec, p, 1.0) - p) < 1e-9);
  }
}

TEST_CASE("catalog proxes are non-expansive") {
  SeededRng rng(17);
  std::vector<ConvexFunctionSpec> specs;
  specs.push_back(ConvexFunctionSpec::l1_norm(0.9));
  specs.push_back(ConvexFunctionSpec::euclidean_norm(1.4));
  specs.push_back(ConvexFunctionSpec::indicator_l1_ball(1.5));
  specs.push_back(ConvexFunctionSpec::indicator_box(
      {-1.0, -2.0, -0.5, -1.0}, {1.0, 0.5, 2.0, 1.0}));
  DenseMatrix G(4, 4);
  G.data = {2.0, 0.1, 0.0, 0.0, 0.1, 1.0, 0.0, 0.0,
            0.0, 0.0, 0.5, 0.2, 0.0, 0.0, 0.2, 0.8};
  specs.push_back(ConvexFunctionSpec::convex_quadratic(G));
  for (const auto& spec : specs) {
    for (int t = 0; t < 100; ++t) {
      Vector a = rng_gaussian(rng, 4);
      Vector b = rng_gaussian(rng, 4);
      Vector pa = prox_of(spec, a, 0.7);
      Vector pb = prox_of(spec, b, 0.7);
      CHECK(norm2(pa - pb) <= norm2(a - b) + 1e-9);
    }
  }
}

TEST_CASE("quadratic prox solves the shifted linear system") {
  DenseMatrix G(2, 2);
  G.data = {3.0, 1.0, 1.0, 2.0};
  auto spec = ConvexFunctionSpec::convex_quadratic(G);
  Vector z{1.0, -1.0};
  Vector x = prox_of(spec, z, 0.5);
  // (I + 0.5 G) x = z
  Vector lhs = x + 0.5 * matvec(G, x);
  CHECK(norm2(lhs - z) < 1e-10);
}

TEST_CASE("dykstra projects onto an intersection") {
  // Box [0,2]^2 intersect halfplane-ish l1 ball of radius 1.5.
  auto proj1 = [](const Vector& v) {
    return project_box(v, {0.0, 0.0}, {2.0, 2.0});
  };
  auto proj2 = [](const Vector& v) { return project_l1_ball(v, 1.5); };
  DykstraResult r = dykstra_intersection({2.0, 2.0}, proj1, proj2);
  REQUIRE(r.converged);
  CHECK_THAT(r.x[0], Catch::Matchers::WithinAbs(0.75, 1e-6));
  CHECK_THAT(r.x[1], Catch::Matchers::WithinAbs(0.75, 1e-6));
}

TEST_CASE("apg reaches the strongly convex minimizer with a certificate") {
  DenseMatrix Q(3, 3);
  Q.data = {4.0, 1.0, 0.0, 1.0, 3.0, 0.5, 0.0, 0.5, 2.0};
  Vector c{1.0, -2.0, 0.5};
  auto grad = [&](const Vector& x) { return matvec(Q, x) + c; };
  auto prox = [](const Vector& v, double) { return v; };
  const double L = symmetric_eigenvalues(Q).back();
  const double m = symmetric_eigenvalues(Q).front();
  ApgResult r = apg_solve(grad, L, m, prox, {0.0, 0.0, 0.0}, 1e-10);
  REQUIRE(r.converged);
  Vector x_star = cholesky(Q).solve({-1.0, 2.0, -0.5});
  CHECK(norm2(r.x - x_star) < 1e-8);
  CHECK(norm2(r.certificate) <= 1e-10);
}

TEST_CASE("alm system solve matches direct assembly") {
  DenseMatrix A(2, 3);
  A.data = {1.0, 0.0, 1.0, 0.0, 2.0, -1.0};
  const double mu = 0.25, rho = 3.0;
  AlmSystem sys = AlmSystem::build(A, mu, rho);
  Vector z{1.0, -1.0, 0.5};
  Vector f_lin{0.2, 0.1, -0.3};
  Vector b{1.0, 0.0};
  Vector lambda{0.5, -0.5};
  Vector x = prox_quadratic_affine(z, sys, f_lin, b, lambda);
  // Verify the stationarity of the quadratic subproblem directly.
  Vector res = rho * matvec_t(A, matvec(A, x) - b) + (1.0 / mu) * (x - z) +
               matvec_t(A, lambda) + f_lin;
  CHECK(norm2(res) < 1e-10);
}
