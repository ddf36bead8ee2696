#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

#include "invit/bounds.hpp"
#include "invit/iteration.hpp"
#include "invit/problem_gen.hpp"

using namespace invit;

namespace {

using ld = long double;

// Independent long-double transcription of the reduction factor.
ld q_oracle(ld l1, ld l2, ld eta, ld lam) {
  const ld s = 1.0L - eta * eta;
  return 1.0L - s * lam * (l2 - lam) * (l2 - lam) / (l2 * l2 * lam + s * (l2 - lam) * (l2 - lam) * (lam - l1));
}

BoundInputs random_inputs(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> l1d(0.01, 100.0);
  std::uniform_real_distribution<double> ratio(1.0 + 1e-6, 50.0);
  std::uniform_real_distribution<double> etad(0.0, 0.999);
  const double l1 = l1d(rng);
  return {l1, l1 * ratio(rng), etad(rng)};
}

ErrorCode code_of(auto&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an invit::Error");
  return ErrorCode::IoError;
}

}  // namespace

TEST_CASE("formula examples") {
  const BoundInputs b0{1, 2, 0.0};
  const BoundInputs b5{1, 2, 0.5};
  CHECK(q_factor(b0, 1.0) == doctest::Approx(0.75).epsilon(1e-15));
  CHECK(q_factor(b0, 2.0) == 1.0);
  CHECK(q_factor(b5, 2.0) == 1.0);
  CHECK(q_limit(b0) == doctest::Approx(0.75).epsilon(1e-15));
  CHECK(q_limit(b5) == doctest::Approx(0.8125).epsilon(1e-15));
  CHECK(q_limit({1, 1e12, 0.0}) < 1e-11);
  CHECK(kn_optimal_rate(b0) == doctest::Approx(0.25).epsilon(1e-15));
  CHECK(kn_optimal_rate(b5) == doctest::Approx(0.5625).epsilon(1e-15));
  CHECK(kn_optimal_rate(b5) < q_limit(b5));

  CHECK(lemma31_bound(b0, 1.0) == 0.0);
  CHECK(lemma31_bound(b0, 1.5) == doctest::Approx(0.03125).epsilon(1e-15));
  CHECK(lemma31_bound(b0, 2.0 - 1e-9) < 1e-18);

  CHECK(lemma32_bound(b0, 1.5, 0.0) == 0.0);
  CHECK(lemma32_bound(b0, 1.5, 0.1875) == doctest::Approx(1.0 / 6.0).epsilon(1e-15));
  double prev = 0.0;
  for (int i = 1; i <= 100; ++i) {
    const double x = 0.05 * i;
    const double cur = lemma32_bound(b5, 1.5, x);
    CHECK(cur > prev);
    prev = cur;
  }

  CHECK(lemma33_bound(b0, 1.0) == 0.0);
  CHECK(lemma33_bound(b0, 1.5) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(std::isinf(lemma33_bound({1, 2, 1.0 - 1e-13}, 1.5)));
  CHECK(lemma33_bound({1, 2, 0.999}, 1.5) > lemma33_bound(b5, 1.5));

  CHECK(lemma34_constant({1, 4, 0.0}) == doctest::Approx(144.0).epsilon(1e-15));
  CHECK(lemma34_constant({1, 1 + 1e-12, 0.0}) == doctest::Approx(16.0).epsilon(1e-10));

  CHECK(thm32_bound(b0, 1.0) == 0.0);
  CHECK(thm32_bound(b0, 1.5) == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("formula examples agree with the correction-solver oracle values") {
  const BoundInputs b{1, 2, 0.0};
  // From diag(1,2), u = (1,1)/sqrt2: |w|^2 = 0.1875, lambda' = 1.2, |u - P1 u|^2 = 1.
  CHECK(0.1875 >= lemma31_bound(b, 1.5));
  CHECK(1.5 - 1.2 >= lemma32_bound(b, 1.5, 0.1875));
  CHECK(0.1875 <= lemma33_bound(b, 1.5));
  CHECK(passes_with_slack(1.0, thm32_bound(b, 1.5)));
  CHECK(1.2 - 1.0 <= q_factor(b, 1.5) * 0.5);
}

TEST_CASE("range errors") {
  const BoundInputs b{1, 2, 0.3};
  CHECK(code_of([&] { q_factor(b, 0.5); }) == ErrorCode::InvalidArgument);
  CHECK(code_of([&] { q_factor(b, 2.5); }) == ErrorCode::InvalidArgument);
  CHECK(code_of([&] { lemma31_bound(b, 2.0); }) == ErrorCode::InvalidArgument);
  CHECK(code_of([&] { lemma32_bound(b, 1.5, -1.0); }) == ErrorCode::InvalidArgument);
  CHECK(code_of([&] { lemma33_bound(b, 0.9); }) == ErrorCode::InvalidArgument);
  CHECK(code_of([&] { thm32_bound(b, 2.0); }) == ErrorCode::InvalidArgument);
  CHECK(code_of([] { BoundInputs{1, 1, 0.0}.validate(); }) == ErrorCode::InvalidArgument);
  CHECK(code_of([] { BoundInputs{1, 2, 1.0}.validate(); }) == ErrorCode::InvalidArgument);
  CHECK(code_of([] { BoundInputs{0, 2, 0.0}.validate(); }) == ErrorCode::InvalidArgument);
  CHECK(code_of([] { q_monotonicity_check({1, 2, 0.3}, 1); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("q_factor matches the long-double oracle and q_limit") {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int i = 0; i < 1000; ++i) {
    const auto b = random_inputs(rng);
    CHECK(std::abs(q_factor(b, b.lambda1) - q_limit(b)) <= 1e-14);
    CHECK(kn_optimal_rate(b) <= q_limit(b));
    const double lam = b.lambda1 + unit(rng) * (b.lambda2 - b.lambda1);
    const ld oracle = q_oracle(b.lambda1, b.lambda2, b.eta, lam);
    CHECK(std::abs(static_cast<ld>(q_factor(b, lam)) - oracle) <= 1e-14L);
    CHECK(q_factor(b, lam) >= q_limit(b) - 1e-15);
    CHECK(q_factor(b, lam) <= 1.0);
    // Purity.
    CHECK(q_factor(b, lam) == q_factor(b, lam));
  }
}

TEST_CASE("q is strictly increasing with the closed-form derivative") {
  const auto rep = q_monotonicity_report({1, 2, 0.3}, 1000);
  CHECK(rep.ok);
  CHECK(rep.strictly_increasing);
  CHECK(rep.derivative_positive);
  CHECK(rep.max_fd_rel_error <= 1e-6);

  std::mt19937_64 rng(7);
  for (int i = 0; i < 200; ++i) {
    const auto b = random_inputs(rng);
    CHECK(q_monotonicity_check(b, 200));
  }

  // Test-side central difference in long double at a few points.
  const BoundInputs b{1, 3, 0.4};
  for (double lam : {1.1, 1.5, 2.0, 2.7}) {
    const ld h = 1e-6L;
    const ld fd = (q_oracle(1, 3, 0.4L, lam + h) - q_oracle(1, 3, 0.4L, lam - h)) / (2 * h);
    CHECK(std::abs(static_cast<ld>(q_derivative(b, lam)) - fd) <= 1e-8L * std::abs(fd));
  }
}

TEST_CASE("passes_with_slack") {
  CHECK(passes_with_slack(1.0, 1.0));
  CHECK(passes_with_slack(1.0 + 5e-10, 1.0));
  CHECK_FALSE(passes_with_slack(1.0 + 2e-9, 1.0));
  CHECK(passes_with_slack(1e-12, 0.0));
  CHECK_FALSE(passes_with_slack(1e-11, 0.0));
}

TEST_CASE("verify_trajectory on exact and perturbed runs") {
  const auto p = diagonal_problem({1, 2, 3, 4, 5, 6, 7, 8, 9, 10});
  const Vector u0 = admissible_start(p, 0.5, 1);
  const auto exact = run(p, u0, RunConfig{});
  const auto rep = verify_trajectory(exact, p.metadata());
  CHECK(rep.all_pass);
  CHECK_FALSE(rep.first_failure);
  CHECK(rep.entries.size() == 9 * exact.records.size());
  REQUIRE(rep.min_margin_t31);
  CHECK(*rep.min_margin_t31 >= 0.0);
  REQUIRE(rep.max_ratio_over_q);
  CHECK(*rep.max_ratio_over_q <= 1.0);

  RunConfig cfg;
  cfg.eta = 0.9;
  cfg.solver_mode = SolverMode::Perturbed;
  cfg.policy.kind = PerturbationKind::WorstOfN;
  const auto pert = run(p, u0, cfg);
  CHECK(verify_trajectory(pert, p.metadata()).all_pass);
  // Verifying with a smaller eta than was used is not certified in general, but a larger one is.
  CHECK(verify_trajectory(pert, p.metadata(), 0.95).all_pass);
}

TEST_CASE("verify_trajectory detects a corrupted Rayleigh quotient") {
  const auto p = diagonal_problem({1, 2, 3, 4, 5, 6, 7, 8, 9, 10});
  const auto t = run(p, admissible_start(p, 0.5, 1), RunConfig{});
  const auto clean = verify_trajectory(t, p.metadata());
  for (std::size_t k = 0; k < 3; ++k) {
    auto bad = t;
    const auto& entry = clean.entries[9 * k];
    REQUIRE(entry.id == BoundId::T31);
    bad.records[k].lambda_next += 10.0 * entry.margin + 1e-6;
    const auto rep = verify_trajectory(bad, p.metadata());
    CHECK_FALSE(rep.all_pass);
    REQUIRE(rep.first_failure);
    CHECK(rep.first_failure->step == static_cast<int>(k));
    CHECK(rep.first_failure->id == BoundId::T31);
  }
}

TEST_CASE("verify_trajectory edge cases") {
  const auto p = diagonal_problem({1, 2, 3});
  const auto fixed = run(p, Vector::Unit(3, 0), RunConfig{});
  REQUIRE(fixed.records.size() == 1);
  CHECK(verify_trajectory(fixed, p.metadata()).all_pass);

  // diag(1,2) worked example: T3.2 is tight.
  const auto two = diagonal_problem({1, 2});
  Vector u(2);
  u << 1.0, 1.0;
  RunConfig one;
  one.max_steps = 1;
  const auto t = run(two, u, one);
  const auto rep = verify_trajectory(t, two.metadata());
  CHECK(rep.all_pass);
  for (const auto& e : rep.entries) {
    if (e.id == BoundId::T32) CHECK(std::abs(e.margin) <= 1e-15);
  }

  auto bad = fixed;
  bad.records[0].lambda = 3.0;
  CHECK(code_of([&] { verify_trajectory(bad, p.metadata()); }) == ErrorCode::PreconditionViolation);

  Trajectory empty;
  CHECK(verify_trajectory(empty, p.metadata()).all_pass);
  CHECK(to_string(BoundId::E38) == "E3.8");
  CHECK(bound_id_from_string("L3.4") == BoundId::L34);
}
