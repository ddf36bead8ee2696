#include "invit/iteration.hpp"

#include <algorithm>
#include <cmath>

#include "invit/bounds.hpp"

namespace invit {

std::string to_string(StopReason reason) {
  switch (reason) {
    case StopReason::TolReached: return "tol_reached";
    case StopReason::EigenvectorFixedPoint: return "eigenvector_fixed_point";
    case StopReason::MaxSteps: return "max_steps";
  }
  return "unknown";
}

StopReason stop_reason_from_string(const std::string& name) {
  if (name == "tol_reached") return StopReason::TolReached;
  if (name == "eigenvector_fixed_point") return StopReason::EigenvectorFixedPoint;
  if (name == "max_steps") return StopReason::MaxSteps;
  throw Error(ErrorCode::SchemaError, "unknown stop reason '" + name + "'");
}

void RunConfig::validate() const {
  auto check_eta = [](double e) {
    if (!(e >= 0.0 && e < 1.0)) {
      throw Error(ErrorCode::InvalidArgument, "eta must lie in [0, 1), got " + std::to_string(e));
    }
  };
  check_eta(eta);
  for (double e : eta_schedule) check_eta(e);
  if (max_steps < 1) throw Error(ErrorCode::InvalidArgument, "max_steps must be >= 1");
  if (!(stop_tol > 0.0)) throw Error(ErrorCode::InvalidArgument, "stop_tol must be > 0");
  if (cg.max_iter < 0) throw Error(ErrorCode::InvalidArgument, "cg max_iter must be >= 0");
  if (cg.rule == CgStopRule::ResidualHeuristic && !(cg.lambda_min_estimate > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "lambda_min_estimate must be > 0");
  }
  policy.validate();
}

double RunConfig::eta_at(int k) const {
  if (eta_schedule.empty()) return eta;
  const auto idx = std::min<std::size_t>(static_cast<std::size_t>(std::max(k, 0)),
                                         eta_schedule.size() - 1);
  return eta_schedule[idx];
}

double RunConfig::eta_max() const {
  if (eta_schedule.empty()) return eta;
  return *std::max_element(eta_schedule.begin(), eta_schedule.end());
}

StepResult step(const Eigenproblem& p, const Vector& u, const RunConfig& cfg, int k) {
  require_iterate(p, u);
  const double eta = cfg.eta_at(k);
  const double lambda = rayleigh_quotient(p, u);
  const Vector w = p.energy().solve(p.energy().apply(u) - lambda * p.mass().apply(u));

  StepRecord rec;
  rec.k = k;
  rec.lambda = lambda;
  rec.eta_used = eta;
  rec.w_norm = energy_norm(p, w);
  rec.u_minus_w_norm = energy_norm(p, u - w);
  if (cfg.record_subspace_distance && p.has_metadata()) {
    rec.subspace_dist = energy_norm(p, complement_project(p, u));
  }

  if (rec.w_norm <= kFixedPointTol * energy_norm(p, u)) {
    rec.lambda_next = lambda;
    rec.u_minus_v_norm = energy_norm(p, u);
    rec.fixed_point = true;
    return {u, rec};
  }

  CorrectionResult corr;
  switch (cfg.solver_mode) {
    case SolverMode::Exact:
      corr.v = w;
      corr.w_ref = w;
      break;
    case SolverMode::Perturbed: {
      PerturbationPolicy policy = cfg.policy;
      policy.seed = derive_seed(cfg.policy.seed, static_cast<std::uint64_t>(k));
      corr = perturbed_correction(p, u, w, eta, policy);
      break;
    }
    case SolverMode::TruncatedCg:
      corr = truncated_cg_correction(p, u, eta, cfg.cg);
      break;
  }

  const Vector& v = corr.v;
  const Vector u_minus_v = u - v;
  Vector u_next = m_normalize(p, u_minus_v);
  rec.eta_actual = corr.eta_actual;
  rec.cg_iterations = corr.cg_iterations;
  rec.v_norm = energy_norm(p, v);
  rec.v_norm_mass = mass_norm(p, v);
  rec.u_minus_v_norm = energy_norm(p, u_minus_v);
  rec.u_diff_norm = energy_norm(p, u - u_next);
  rec.lambda_next = rayleigh_quotient(p, u_next);
  return {std::move(u_next), rec};
}

Trajectory run(const Eigenproblem& p, const Vector& u0, const RunConfig& cfg) {
  cfg.validate();
  require_dim(p, u0);
  require_finite(u0, "start vector");
  Vector u = m_normalize(p, u0);
  if (p.has_metadata() && !(rayleigh_quotient(p, u) < p.metadata().lambda2)) {
    throw Error(ErrorCode::PreconditionViolation, "start vector has lambda(u0) >= lambda2");
  }

  Trajectory t;
  t.config = cfg;
  if (cfg.record_iterates) t.iterates.push_back(u);
  t.stop_reason = StopReason::MaxSteps;
  t.stop_detail = "max_steps";

  for (int k = 0; k < cfg.max_steps; ++k) {
    StepResult res;
    try {
      res = step(p, u, cfg, k);
    } catch (const Error& e) {
      throw StepError(k, e);
    }
    const StepRecord& rec = res.record;
    t.records.push_back(rec);
    u = std::move(res.u_next);
    if (cfg.record_iterates && !rec.fixed_point) t.iterates.push_back(u);
    if (rec.fixed_point) {
      t.stop_reason = StopReason::EigenvectorFixedPoint;
      t.stop_detail = "fixed_point";
      break;
    }
    if (p.has_metadata()) {
      if (rec.lambda_next - p.metadata().lambda1 <= cfg.stop_tol) {
        t.stop_reason = StopReason::TolReached;
        t.stop_detail = "lambda_gap";
        break;
      }
    } else if (rec.lambda - rec.lambda_next <= cfg.stop_tol) {
      t.stop_reason = StopReason::TolReached;
      t.stop_detail = "decrement";
      break;
    }
  }
  t.final_u = std::move(u);
  return t;
}

bool cauchy_tail_check(const Trajectory& t, const SpectralMetadata& meta) {
  const BoundInputs b{meta.lambda1, meta.lambda2, t.config.eta_max()};
  b.validate();
  const double c = lemma34_constant(b);
  for (const auto& r : t.records) {
    if (r.v_norm * r.v_norm > meta.lambda1 / 4.0) continue;
    const double gap = std::max(r.lambda, meta.lambda1) - meta.lambda1;
    if (!passes_with_slack(r.u_diff_norm * r.u_diff_norm, c * gap)) return false;
  }
  return true;
}

CauchyTailReport cauchy_tail_report(const Trajectory& t, const SpectralMetadata& meta) {
  CauchyTailReport out;
  const auto n = t.records.size();
  if (n == 0) return out;
  const BoundInputs b{meta.lambda1, meta.lambda2, t.config.eta_max()};
  const double c = lemma34_constant(b);
  const double lambda0 = std::clamp(t.records.front().lambda, meta.lambda1, meta.lambda2);
  const double sq = std::sqrt(q_factor(b, lambda0));
  const double scale = std::sqrt(c * (lambda0 - meta.lambda1)) / (1.0 - sq);
  out.tail_sums.assign(n, 0.0);
  double acc = 0.0;
  for (std::size_t i = n; i-- > 0;) {
    acc += t.records[i].u_diff_norm;
    out.tail_sums[i] = acc;
  }
  out.envelope.resize(n);
  for (std::size_t i = 0; i < n; ++i) out.envelope[i] = scale * std::pow(sq, static_cast<double>(i));
  return out;
}

}  // namespace invit
