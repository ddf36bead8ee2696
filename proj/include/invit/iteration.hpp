#pragma once

#include <optional>
#include <string>
#include <vector>

#include "invit/correction.hpp"
#include "invit/operator_core.hpp"

namespace invit {

struct RunConfig {
  double eta = 0.0;
  SolverMode solver_mode = SolverMode::Exact;
  PerturbationPolicy policy;
  int max_steps = 1000;
  double stop_tol = 1e-12;
  bool record_subspace_distance = true;
  /// Optional per-step eta; step k uses eta_schedule[min(k, size - 1)].
  std::vector<double> eta_schedule;
  CgOptions cg;
  /// Keep every iterate u_0, ..., u_K in the trajectory.
  bool record_iterates = false;

  void validate() const;
  double eta_at(int k) const;
  /// Largest eta any step may use.
  double eta_max() const;
};

/// Scalars produced by one step. Norms without a subscript are energy norms.
struct StepRecord {
  int k = 0;
  double lambda = 0.0;
  double lambda_next = 0.0;
  double w_norm = 0.0;
  double v_norm = 0.0;
  double v_norm_mass = 0.0;
  double u_minus_w_norm = 0.0;
  double u_minus_v_norm = 0.0;
  double u_diff_norm = 0.0;
  std::optional<double> subspace_dist;
  double eta_used = 0.0;
  /// Measured |v - w| / |w|; equal to eta_used when the budget is saturated.
  double eta_actual = 0.0;
  int cg_iterations = 0;
  bool fixed_point = false;
};

enum class StopReason { TolReached, EigenvectorFixedPoint, MaxSteps };
std::string to_string(StopReason reason);
StopReason stop_reason_from_string(const std::string& name);

struct Trajectory {
  std::vector<StepRecord> records;
  Vector final_u;
  StopReason stop_reason = StopReason::MaxSteps;
  /// "lambda_gap" (lambda_k - lambda1 <= tol), "decrement" (lambda_{k-1} - lambda_k <= tol),
  /// "fixed_point" or "max_steps".
  std::string stop_detail;
  RunConfig config;
  /// u_0, ..., u_K when RunConfig::record_iterates is set.
  std::vector<Vector> iterates;
};

struct StepResult {
  Vector u_next;
  StepRecord record;
};

/// One step of approximate inverse iteration: correct, u' = (u - v)/|u - v|_0.
/// At an eigenvector (w = 0) returns u unchanged with record.fixed_point set.
StepResult step(const Eigenproblem& p, const Vector& u, const RunConfig& cfg, int k = 0);

/// Iterates from m_normalize(u0) until the stop rule, a fixed point or max_steps.
Trajectory run(const Eigenproblem& p, const Vector& u0, const RunConfig& cfg);

/// Checks |u_k - u_{k+1}|^2 <= c (lambda_k - lambda1) at every step where
/// |v_k|^2 <= lambda1 / 4, with c from lemma34_constant.
bool cauchy_tail_check(const Trajectory& t, const SpectralMetadata& meta);

/// Reported (not asserted) tail data: S_k = sum_{j >= k} |u_j - u_{j+1}| and
/// the geometric envelope sqrt(c (lambda_0 - lambda1)) q0^{k/2} / (1 - sqrt(q0)).
struct CauchyTailReport {
  std::vector<double> tail_sums;
  std::vector<double> envelope;
};
CauchyTailReport cauchy_tail_report(const Trajectory& t, const SpectralMetadata& meta);

}  // namespace invit
