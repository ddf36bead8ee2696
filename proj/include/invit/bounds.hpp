#pragma once

// Closed-form convergence bounds of approximate inverse iteration and a
// per-step verifier that certifies a trajectory against them.

#include <optional>
#include <string>
#include <vector>

#include "invit/iteration.hpp"
#include "invit/operator_core.hpp"

namespace invit {

struct BoundInputs {
  double lambda1 = 0.0;
  double lambda2 = 0.0;
  double eta = 0.0;

  /// 0 < lambda1 < lambda2, 0 <= eta < 1.
  void validate() const;
};

/// Contraction factor for lambda - lambda1:
///   1 - (1-eta^2) lambda (lambda2-lambda)^2
///       / (lambda2^2 lambda + (1-eta^2) (lambda2-lambda)^2 (lambda-lambda1)).
/// Defined on [lambda1, lambda2], strictly increasing there, q(lambda2) = 1.
double q_factor(const BoundInputs& b, double lambda);

/// Analytic derivative of q_factor.
double q_derivative(const BoundInputs& b, double lambda);

/// q(lambda1) = 1 - (1-eta^2) ((lambda2-lambda1)/lambda2)^2.
double q_limit(const BoundInputs& b);

/// Limit rate of the sharp matrix-case analysis, (1 - (1-eta)(lambda2-lambda1)/lambda2)^2.
/// Reporting only.
double kn_optimal_rate(const BoundInputs& b);

/// Lower bound for |w|^2: ((lambda2-lambda)/lambda2)^2 (lambda-lambda1).
double lemma31_bound(const BoundInputs& b, double lambda);

/// Lower bound for lambda - lambda': lambda s |w|^2 / (lambda + s |w|^2), s = 1-eta^2.
double lemma32_bound(const BoundInputs& b, double lambda, double w_norm_sq);

/// Upper bound for |v|^2: (1+eta)/(1-eta) (lambda2/lambda1) (lambda-lambda1).
/// +inf once eta exceeds 1 - 1e-12.
double lemma33_bound(const BoundInputs& b, double lambda);

/// Constant c with |u - u'|^2 <= c (lambda - lambda1) whenever |v|^2 <= lambda1/4.
///
/// With |v|_0^2 <= |v|^2 / lambda1 <= 1/4 and |u|^2 = lambda <= lambda2 the
/// triangle inequality gives |u - u'| <= 2 (1 + sqrt(lambda2/lambda1)) |v|.
/// Squaring and inserting the |v|^2 bound above yields
///   c = 4 (1 + sqrt(lambda2/lambda1))^2 (1+eta)/(1-eta) (lambda2/lambda1).
double lemma34_constant(const BoundInputs& b);

/// Upper bound for |u - P1 u|^2: lambda2/(lambda2-lambda1) (lambda-lambda1).
double thm32_bound(const BoundInputs& b, double lambda);

struct MonotonicityResult {
  bool ok = false;
  bool strictly_increasing = false;
  bool derivative_positive = false;
  double max_fd_rel_error = 0.0;
};

/// Samples q and q' on n_samples equispaced points of [lambda1, lambda2] and
/// compares q' with central finite differences at interior samples.
MonotonicityResult q_monotonicity_report(const BoundInputs& b, int n_samples);
bool q_monotonicity_check(const BoundInputs& b, int n_samples);

enum class BoundId { T31, L31, L32, L33, L34, T32, E25, E27, E38 };
std::string to_string(BoundId id);
BoundId bound_id_from_string(const std::string& name);

/// Every inequality is stored in the form lhs <= rhs.
struct CheckEntry {
  int step = 0;
  BoundId id = BoundId::T31;
  double lhs = 0.0;
  double rhs = 0.0;
  double margin = 0.0;
  bool applicable = true;
  bool pass = true;
};

struct FailureLocation {
  int step = 0;
  BoundId id = BoundId::T31;
};

struct VerificationReport {
  std::vector<CheckEntry> entries;
  bool all_pass = true;
  std::optional<FailureLocation> first_failure;
  /// Smallest T3.1 margin over applicable steps (telemetry).
  std::optional<double> min_margin_t31;
  /// Largest (lambda_{k+1}-lambda1)/(lambda_k-lambda1) / q(lambda_k) seen (telemetry).
  std::optional<double> max_ratio_over_q;
};

inline constexpr double kRelSlack = 1e-9;
inline constexpr double kAbsSlack = 1e-12;
inline constexpr double kPythagorasTol = 1e-10;

/// lhs <= rhs (1 + 1e-9) + 1e-12.
bool passes_with_slack(double lhs, double rhs);

/// Verifies every step of a run. Each step is checked against its own
/// eta_used unless eta_override is given; the geometric envelope uses the
/// largest eta of the run.
VerificationReport verify_records(const std::vector<StepRecord>& records,
                                  const SpectralMetadata& meta,
                                  std::optional<double> eta_override = std::nullopt);

VerificationReport verify_trajectory(const Trajectory& t, const SpectralMetadata& meta,
                                     std::optional<double> eta_override = std::nullopt);

}  // namespace invit
