#include <catch2/catch_amalgamated.hpp>

#include "dmedc/moreau.hpp"

using namespace dmedc;

namespace {

// Fig-style 1-D toy: phi = indicator of [-1, 1], g = x^2/2.
DCProblem toy_problem() {
  DenseMatrix G(1, 1);
  G.data = {1.0};
  return DCProblem(SmoothSpec::zero(), ConvexFunctionSpec::indicator_box({-1.0}, {1.0}),
                   ConvexFunctionSpec::convex_quadratic(G), 1);
}

DCProblem random_ls_problem(SeededRng& rng, std::size_t m, std::size_t n,
                            double rho) {
  DenseMatrix C(m, n);
  C.data = rng_gaussian(rng, m * n);
  Vector d = rng_gaussian(rng, m);
  return DCProblem(SmoothSpec::least_squares(C, d),
                   ConvexFunctionSpec::l1_norm(rho),
                   ConvexFunctionSpec::euclidean_norm(rho), n);
}

}  // namespace

TEST_CASE("moreau envelope closed forms on the toy parts") {
  auto box = ConvexFunctionSpec::indicator_box({-1.0}, {1.0});
  EnvelopeEval e = moreau_envelope(box, 1.0, {2.0});
  CHECK_THAT(e.prox_point[0], Catch::Matchers::WithinAbs(1.0, 1e-12));
  CHECK_THAT(e.value, Catch::Matchers::WithinAbs(0.5, 1e-12));

  DenseMatrix G(1, 1);
  G.data = {1.0};
  auto quad = ConvexFunctionSpec::convex_quadratic(G);
  EnvelopeEval eg = moreau_envelope(quad, 1.0, {2.0});
  CHECK_THAT(eg.prox_point[0], Catch::Matchers::WithinAbs(1.0, 1e-12));
  CHECK_THAT(eg.value, Catch::Matchers::WithinAbs(1.0, 1e-12));

  // Fixed point of a zero spec.
  EnvelopeEval ez = moreau_envelope(ConvexFunctionSpec::zero(), 1.0, {3.0});
  CHECK(ez.value == 0.0);
  CHECK(ez.prox_point == Vector{3.0});
}

TEST_CASE("dme value and gradient on the toy") {
  DmeSmoothing s(toy_problem(), 1.0);
  CHECK_THAT(s.value({0.0}), Catch::Matchers::WithinAbs(0.0, 1e-12));
  CHECK_THAT(s.value({0.5}), Catch::Matchers::WithinAbs(-0.0625, 1e-12));
  CHECK_THAT(s.value({2.0}), Catch::Matchers::WithinAbs(-0.5, 1e-12));
  CHECK_THAT(s.gradient({0.5})[0], Catch::Matchers::WithinAbs(-0.25, 1e-12));
  CHECK_THAT(s.gradient({2.0})[0], Catch::Matchers::WithinAbs(0.0, 1e-12));
  CHECK_THAT(s.lipschitz(), Catch::Matchers::WithinAbs(2.0, 1e-12));
}

TEST_CASE("phi equal to g gives the zero smoothing") {
  DenseMatrix G(2, 2);
  G.data = {1.0, 0.0, 0.0, 1.0};
  DCProblem p(SmoothSpec::zero(), ConvexFunctionSpec::convex_quadratic(G),
              ConvexFunctionSpec::convex_quadratic(G), 2);
  DmeSmoothing s(p, 0.5);
  SeededRng rng(2);
  for (int t = 0; t < 5; ++t) {
    Vector z = rng_gaussian(rng, 2);
    CHECK(std::abs(s.value(z)) < 1e-10);
    CHECK(norm2(s.gradient(z)) < 1e-10);
  }
}

TEST_CASE("sandwich bounds on the toy, oracle-frozen values") {
  DmeSmoothing s(toy_problem(), 1.0);
  SandwichResult r = sandwich_check(s, {0.5});
  CHECK_THAT(r.lower, Catch::Matchers::WithinAbs(-0.125, 1e-12));
  CHECK_THAT(r.mid, Catch::Matchers::WithinAbs(-0.0625, 1e-12));
  CHECK_THAT(r.upper, Catch::Matchers::WithinAbs(-0.03125, 1e-12));
  CHECK(r.ok);
  // At z = 2 both proxes land on the boundary point 1.
  SandwichResult r2 = sandwich_check(s, {2.0});
  CHECK_THAT(r2.lower, Catch::Matchers::WithinAbs(-0.5, 1e-12));
  CHECK_THAT(r2.mid, Catch::Matchers::WithinAbs(-0.5, 1e-12));
  CHECK_THAT(r2.upper, Catch::Matchers::WithinAbs(-0.5, 1e-12));
  CHECK(r2.ok);
}

TEST_CASE("stationarity detection on the toy") {
  DmeSmoothing s(toy_problem(), 1.0);
  auto hit = stationarity_of_smoothed(s, {2.0}, 1e-8);
  REQUIRE(hit.has_value());
  CHECK_THAT((*hit)[0], Catch::Matchers::WithinAbs(1.0, 1e-10));
  CHECK_FALSE(stationarity_of_smoothed(s, {0.5}, 1e-8).has_value());
}

TEST_CASE("gradient matches finite differences on random problems") {
  SeededRng rng(31);
  for (int inst = 0; inst < 3; ++inst) {
    DCProblem p = random_ls_problem(rng, 6, 10, 0.7);
    const double mu = 0.5 / p.f.lipschitz_grad;
    DmeSmoothing s(p, mu);
    for (int t = 0; t < 10; ++t) {
      Vector z = rng_gaussian(rng, 10);
      Vector g = s.gradient(z);
      const double h = 1e-6 * (1.0 + norm2(z));
      Vector fd(10);
      for (std::size_t i = 0; i < 10; ++i) {
        Vector zp = z, zm = z;
        zp[i] += h;
        zm[i] -= h;
        fd[i] = (s.value(zp) - s.value(zm)) / (2.0 * h);
      }
      CHECK(norm2(g - fd) / std::max(1.0, norm2(g)) < 1e-4);
    }
  }
}

TEST_CASE("lipschitz constants hold empirically") {
  SeededRng rng(41);
  // Weakly convex f via an indefinite quadratic.
  DenseMatrix Q(4, 4);
  Q.data = {3.0, 0.0, 0.0, 0.0, 0.0, 2.0, 0.0, 0.0,
            0.0, 0.0, -1.0, 0.0, 0.0, 0.0, 0.0, 1.0};
  DCProblem p(SmoothSpec::quadratic(Q, {0.1, -0.2, 0.3, 0.0}),
              ConvexFunctionSpec::zero(),
              ConvexFunctionSpec::euclidean_norm(1.0), 4);
  const double m_phi = p.weak_convexity();
  REQUIRE(m_phi == 1.0);
  const double mu = 0.4;  // < 1/m_phi
  DmeSmoothing s(p, mu);
  const double expect_L = (2.0 - mu * m_phi) / (mu - mu * mu * m_phi);
  CHECK_THAT(s.lipschitz(), Catch::Matchers::WithinAbs(expect_L, 1e-12));
  for (int t = 0; t < 200; ++t) {
    Vector z1 = rng_gaussian(rng, 4);
    Vector z2 = rng_gaussian(rng, 4);
    CHECK(norm2(s.gradient(z1) - s.gradient(z2)) <=
          s.lipschitz() * norm2(z1 - z2) + 1e-9);
    // Prox map of phi is Lipschitz with modulus 1/(1 - mu m_phi).
    CHECK(norm2(s.prox_phi(z1) - s.prox_phi(z2)) <=
          norm2(z1 - z2) / (1.0 - mu * m_phi) + 1e-9);
  }
}

TEST_CASE("mu outside the admissible interval is rejected") {
  DenseMatrix Q(2, 2);
  Q.data = {1.0, 0.0, 0.0, -2.0};
  DCProblem p(SmoothSpec::quadratic(Q, {0.0, 0.0}),
              ConvexFunctionSpec::zero(),
              ConvexFunctionSpec::euclidean_norm(1.0), 2);
  REQUIRE(p.weak_convexity() == 2.0);
  CHECK_THROWS_AS(DmeSmoothing(p, 0.5), InfeasibleParameters);
  CHECK_THROWS_AS(DmeSmoothing(p, 0.0), InfeasibleParameters);
  CHECK_NOTHROW(DmeSmoothing(p, 0.25));
}

TEST_CASE("global minima of toy F and F_mu agree on a grid") {
  DmeSmoothing s(toy_problem(), 1.0);
  const DCProblem p = toy_problem();
  double min_fmu = kInf, min_f = kInf;
  for (double z = -3.0; z <= 3.0; z += 1e-3) {
    min_fmu = std::min(min_fmu, s.value({z}));
    const double fv = evaluate_F(p, {z});
    if (fv < min_f) min_f = fv;
  }
  CHECK_THAT(min_fmu, Catch::Matchers::WithinAbs(-0.5, 1e-5));
  CHECK_THAT(min_f, Catch::Matchers::WithinAbs(-0.5, 1e-5));
}
