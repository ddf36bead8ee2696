#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "invit/operator_core.hpp"

namespace invit {

enum class SolverMode { Exact, Perturbed, TruncatedCg };
std::string to_string(SolverMode mode);
SolverMode solver_mode_from_string(const std::string& name);

enum class PerturbationKind { Random, WorstOfN, Aligned };
std::string to_string(PerturbationKind kind);
PerturbationKind perturbation_kind_from_string(const std::string& name);

struct PerturbationPolicy {
  PerturbationKind kind = PerturbationKind::Random;
  int n_candidates = 16;
  std::uint64_t seed = 0;
  /// Fraction of the eta budget used by the perturbation; 1 saturates it.
  double budget_fraction = 1.0;

  void validate() const;
};

/// An approximation v to the exact correction w, with its certified accuracy.
struct CorrectionResult {
  Vector v;
  std::optional<Vector> w_ref;
  /// |v - w| / |w| in the energy norm; exact whenever w_ref is present.
  double eta_actual = 0.0;
  SolverMode mode = SolverMode::Exact;
  /// False only for the residual-heuristic CG stop, which does not consult w_ref.
  bool certified = true;
  int cg_iterations = 0;
  /// Relative energy error of every CG iterate, starting with the zero iterate.
  std::vector<double> eta_history;
};

/// |w| <= kFixedPointTol * |u| (energy norms) means u is an eigenvector.
inline constexpr double kFixedPointTol = 1e-14;
inline constexpr double kNormalizationTol = 1e-10;

/// Checks |u|_0 = 1 and, with metadata, lambda(u) < lambda2.
void require_iterate(const Eigenproblem& p, const Vector& u);

/// G f solving A (G f) = M f.
Vector solution_operator(const Eigenproblem& p, const Vector& f);

/// w solving A w = A u - lambda(u) M u.
CorrectionResult exact_correction(const Eigenproblem& p, const Vector& u);

/// v = w + delta with |delta| = budget_fraction * eta * |w| in the energy norm.
/// Throws FixedPoint when w vanishes.
CorrectionResult perturbed_correction(const Eigenproblem& p, const Vector& u, double eta,
                                      const PerturbationPolicy& policy);

/// Same as above with w already computed.
CorrectionResult perturbed_correction(const Eigenproblem& p, const Vector& u, const Vector& w,
                                      double eta, const PerturbationPolicy& policy);

enum class CgStopRule {
  /// Stop at the first iterate whose true relative energy error is <= eta.
  Certified,
  /// Stop once |r|_2 / sqrt(lambda_min_estimate) <= eta |x|_A. Not certified.
  ResidualHeuristic,
};

struct CgOptions {
  int max_iter = 1000;
  CgStopRule rule = CgStopRule::Certified;
  /// Estimate of the smallest eigenvalue of A alone, used by the heuristic.
  double lambda_min_estimate = 1.0;
};

/// Conjugate gradients from zero on A w = A u - lambda(u) M u. Throws
/// NotCertifiedError when max_iter is reached before the stop rule fires.
CorrectionResult truncated_cg_correction(const Eigenproblem& p, const Vector& u, double eta,
                                         const CgOptions& options);

/// Deterministic per-step seed derivation (splitmix64 of seed and step).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t step);

}  // namespace invit
