#include <doctest.h>

#include <cmath>

#include "invit/correction.hpp"
#include "invit/problem_gen.hpp"
#include "test_support.hpp"

using namespace invit;
using invit::testing::gauss_solve;
using invit::testing::random_spd;
using invit::testing::random_vector;

namespace {

Eigenproblem random_problem(std::uint64_t seed) {
  const Index n = 5 + static_cast<Index>(seed % 26);
  Eigenproblem p(SymmetricForm::dense(random_spd(n, seed)),
                 SymmetricForm::dense(random_spd(n, seed + 1000, 3.0)));
  return p.with_metadata(spectral_oracle(p));
}

Vector worked_u() {
  Vector u(2);
  u << 1.0, 1.0;
  return u / std::sqrt(2.0);
}

}  // namespace

TEST_CASE("exact_correction worked example against a dense-solve oracle") {
  const auto p = diagonal_problem({1, 2});
  const Vector u = worked_u();
  const auto res = exact_correction(p, u);
  REQUIRE(res.w_ref);
  CHECK(res.mode == SolverMode::Exact);
  CHECK(res.eta_actual == 0.0);
  CHECK(res.v == *res.w_ref);

  // Oracle: w = u - lambda(u) A^{-1} M u by Gaussian elimination.
  const double lambda = 1.5;
  const Vector oracle = u - lambda * gauss_solve(p.energy().to_dense(), p.mass().apply(u));
  Vector closed(2);
  closed << -0.5, 0.25;
  closed /= std::sqrt(2.0);
  CHECK((oracle - closed).norm() <= 1e-15);
  CHECK((res.v - closed).norm() <= 1e-15);

  const double w2 = energy_inner(p, res.v, res.v);
  const double uw2 = energy_inner(p, u - res.v, u - res.v);
  CHECK(std::abs(w2 - 0.1875) <= 1e-15);
  CHECK(std::abs(uw2 - 1.6875) <= 1e-15);
  CHECK(std::abs(energy_inner(p, u, u) - 1.5) <= 1e-15);
}

TEST_CASE("exact_correction at an eigenvector vanishes") {
  const auto p = diagonal_problem({1, 2, 3});
  const auto res = exact_correction(p, Vector::Unit(3, 0));
  CHECK(res.v.norm() <= 1e-12);

  const auto f = fem1d_problem(15);
  const auto rf = exact_correction(f, f.metadata().e1_basis[0]);
  CHECK(energy_norm(f, rf.v) <= 1e-12 * energy_norm(f, f.metadata().e1_basis[0]));
}

TEST_CASE("exact_correction residual, Galerkin and Pythagoras identities") {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto p = random_problem(seed);
    const Vector u = admissible_start(p, 0.05 + 0.009 * static_cast<double>(seed), seed);
    const auto res = exact_correction(p, u);
    const Vector& w = res.v;
    const double lambda = rayleigh_quotient(p, u);
    const Vector au = p.energy().apply(u);
    const Vector rhs = au - lambda * p.mass().apply(u);
    CHECK((p.energy().apply(w) - rhs).norm() <= 1e-11 * au.norm());
    // a(u, w) = 0 for normalized u, hence Pythagoras.
    const double u2 = energy_inner(p, u, u);
    const double w2 = energy_inner(p, w, w);
    const double uw2 = energy_inner(p, u - w, u - w);
    CHECK(std::abs(uw2 - u2 - w2) <= 1e-11 * uw2);
    const Vector chi = random_vector(p.dim(), seed + 5);
    const double galerkin = energy_inner(p, w, chi) - energy_inner(p, u, chi) + lambda * mass_inner(p, u, chi);
    CHECK(std::abs(galerkin) <= 1e-11 * energy_norm(p, u) * energy_norm(p, chi));
  }
}

TEST_CASE("exact_correction preconditions") {
  const auto p = diagonal_problem({1, 2, 3});
  Vector u(3);
  u << 1.0, 1.0, 0.0;
  try {
    exact_correction(p, u);
    FAIL("expected unnormalized error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::InvalidArgument);
  }
  try {
    exact_correction(p, Vector::Unit(3, 2));
    FAIL("expected precondition violation");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::PreconditionViolation);
  }
}

TEST_CASE("solution_operator") {
  const DenseMatrix a = random_spd(6, 11);
  const Eigenproblem same(SymmetricForm::dense(a), SymmetricForm::dense(a));
  const Vector f = random_vector(6, 12);
  CHECK((solution_operator(same, f) - f).norm() <= 1e-12 * f.norm());

  const auto d = diagonal_problem({1, 2});
  const Vector g = solution_operator(d, Vector::Unit(2, 1));
  CHECK(std::abs(g[0]) <= 1e-15);
  CHECK(std::abs(g[1] - 0.5) <= 1e-15);

  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto p = random_problem(seed + 300);
    const Vector u = admissible_start(p, 0.3, seed);
    const auto res = exact_correction(p, u);
    const Vector via_g = u - rayleigh_quotient(p, u) * solution_operator(p, u);
    CHECK(energy_norm(p, via_g - res.v) <= 1e-11);
  }
}

TEST_CASE("perturbed_correction saturates the budget") {
  const auto p = diagonal_problem({1, 2, 3, 4, 5, 6, 7, 8, 9, 10});
  const Vector u = admissible_start(p, 0.5, 7);
  const auto exact = exact_correction(p, u);
  const double w_norm = energy_norm(p, exact.v);
  for (auto kind : {PerturbationKind::Random, PerturbationKind::Aligned, PerturbationKind::WorstOfN}) {
    for (double eta : {0.0, 0.1, 0.5, 0.9, 0.999}) {
      PerturbationPolicy policy{kind, 16, 1234, 1.0};
      const auto res = perturbed_correction(p, u, eta, policy);
      REQUIRE(res.w_ref);
      CHECK(res.mode == SolverMode::Perturbed);
      CHECK(res.eta_actual == eta);
      const double err = energy_norm(p, res.v - *res.w_ref);
      CHECK(std::abs(err - eta * w_norm) <= 1e-13 * w_norm);
      if (eta == 0.0) CHECK(res.v == *res.w_ref);
      const double uv = energy_norm(p, u - res.v);
      const double uw = energy_norm(p, u - *res.w_ref);
      CHECK(uv >= (1.0 - eta) * uw - 1e-12);
      // Deterministic.
      CHECK(perturbed_correction(p, u, eta, policy).v == res.v);
    }
  }
}

TEST_CASE("worst-of-N dominates its candidates") {
  const auto p = fem1d_problem(20);
  const Vector u = admissible_start(p, 0.6, 3);
  const double eta = 0.7;
  const auto worst = perturbed_correction(p, u, eta, {PerturbationKind::WorstOfN, 16, 5, 1.0});
  const auto aligned = perturbed_correction(p, u, eta, {PerturbationKind::Aligned, 1, 5, 1.0});
  CHECK(rayleigh_quotient(p, u - worst.v) >= rayleigh_quotient(p, u - aligned.v));
  const auto one = perturbed_correction(p, u, eta, {PerturbationKind::WorstOfN, 1, 5, 1.0});
  CHECK(rayleigh_quotient(p, u - worst.v) >= rayleigh_quotient(p, u - one.v));
}

TEST_CASE("perturbed_correction sub-budget and errors") {
  const auto p = diagonal_problem({1, 2, 3});
  const Vector u = admissible_start(p, 0.5, 1);
  const auto res = perturbed_correction(p, u, 0.8, {PerturbationKind::Random, 16, 9, 0.25});
  CHECK(res.eta_actual == doctest::Approx(0.2));
  const double w_norm = energy_norm(p, *res.w_ref);
  CHECK(std::abs(energy_norm(p, res.v - *res.w_ref) - 0.2 * w_norm) <= 1e-13 * w_norm);

  CHECK_THROWS_AS(perturbed_correction(p, u, 1.0, {}), Error);
  CHECK_THROWS_AS(perturbed_correction(p, u, 0.5, {PerturbationKind::Random, 0, 1, 1.0}), Error);
  try {
    perturbed_correction(p, Vector::Unit(3, 0), 0.5, {});
    FAIL("expected fixed point");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::FixedPoint);
  }
}

TEST_CASE("truncated_cg_correction certifies against the direct solve") {
  const auto p = diagonal_problem({1, 2, 3});
  const Vector u = admissible_start(p, 0.5, 4);

  const auto loose = truncated_cg_correction(p, u, 0.99, {});
  CHECK(loose.cg_iterations <= 1);
  CHECK(loose.eta_history.front() == 1.0);
  CHECK(loose.eta_actual <= 0.99);
  CHECK(loose.certified);

  const auto tight = truncated_cg_correction(p, u, 1e-12, {});
  CHECK(tight.cg_iterations <= 3);
  CHECK(energy_norm(p, tight.v - *tight.w_ref) <= 1e-12 * energy_norm(p, *tight.w_ref));
  CHECK(std::abs(tight.eta_actual -
                 energy_norm(p, tight.v - *tight.w_ref) / energy_norm(p, *tight.w_ref)) <= 1e-12);

  for (const auto& q : {fem1d_problem(40), laplacian_2d(6)}) {
    const Vector s = admissible_start(q, 0.7, 2);
    const auto r = truncated_cg_correction(q, s, 1e-8, {});
    for (std::size_t i = 1; i < r.eta_history.size(); ++i) {
      CHECK(r.eta_history[i] <= r.eta_history[i - 1] * (1 + 1e-12));
    }
    CHECK(r.eta_actual <= 1e-8);
  }
}

TEST_CASE("truncated_cg_correction failure and heuristic modes") {
  const auto p = laplacian_1d(60);
  const Vector u = admissible_start(p, 0.5, 8);
  try {
    truncated_cg_correction(p, u, 1e-10, {2, CgStopRule::Certified, 1.0});
    FAIL("expected NotCertifiedError");
  } catch (const NotCertifiedError& e) {
    CHECK(e.code() == ErrorCode::NotCertified);
    CHECK(e.iterations() == 2);
    CHECK(e.best_eta() < 1.0);
    CHECK(e.best_eta() > 1e-10);
  }

  const CgOptions heuristic{500, CgStopRule::ResidualHeuristic, p.metadata().lambda1};
  const auto h = truncated_cg_correction(p, u, 0.3, heuristic);
  CHECK_FALSE(h.certified);
  REQUIRE(h.w_ref);
  CHECK(h.eta_actual == doctest::Approx(energy_norm(p, h.v - *h.w_ref) / energy_norm(p, *h.w_ref)));
}

TEST_CASE("derive_seed is deterministic and step dependent") {
  CHECK(derive_seed(1, 0) == derive_seed(1, 0));
  CHECK(derive_seed(1, 0) != derive_seed(1, 1));
  CHECK(derive_seed(1, 0) != derive_seed(2, 0));
}
