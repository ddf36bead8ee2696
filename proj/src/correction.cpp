#include "invit/correction.hpp"

#include <cmath>
#include <random>

namespace invit {

std::string to_string(SolverMode mode) {
  switch (mode) {
    case SolverMode::Exact: return "exact";
    case SolverMode::Perturbed: return "perturbed";
    case SolverMode::TruncatedCg: return "truncated-cg";
  }
  return "unknown";
}

SolverMode solver_mode_from_string(const std::string& name) {
  if (name == "exact") return SolverMode::Exact;
  if (name == "perturbed") return SolverMode::Perturbed;
  if (name == "truncated-cg") return SolverMode::TruncatedCg;
  throw Error(ErrorCode::InvalidArgument, "unknown solver mode '" + name + "'");
}

std::string to_string(PerturbationKind kind) {
  switch (kind) {
    case PerturbationKind::Random: return "random";
    case PerturbationKind::WorstOfN: return "worst-of-N";
    case PerturbationKind::Aligned: return "aligned";
  }
  return "unknown";
}

PerturbationKind perturbation_kind_from_string(const std::string& name) {
  if (name == "random") return PerturbationKind::Random;
  if (name == "worst-of-N" || name == "worst-of-n") return PerturbationKind::WorstOfN;
  if (name == "aligned") return PerturbationKind::Aligned;
  throw Error(ErrorCode::InvalidArgument, "unknown perturbation policy '" + name + "'");
}

void PerturbationPolicy::validate() const {
  if (n_candidates < 1) throw Error(ErrorCode::InvalidArgument, "n_candidates must be >= 1");
  if (!(budget_fraction > 0.0 && budget_fraction <= 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "budget_fraction must lie in (0, 1]");
  }
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t step) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (step + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

void require_iterate(const Eigenproblem& p, const Vector& u) {
  require_dim(p, u);
  require_finite(u, "iterate");
  const double n0 = mass_norm(p, u);
  if (std::abs(n0 - 1.0) > kNormalizationTol) {
    throw Error(ErrorCode::InvalidArgument, "iterate is not mass-normalized (|u|_0 = " +
                                                std::to_string(n0) + ")");
  }
  if (p.has_metadata()) {
    const double lambda = rayleigh_quotient(p, u);
    if (!(lambda < p.metadata().lambda2)) {
      throw Error(ErrorCode::PreconditionViolation,
                  "Rayleigh quotient " + std::to_string(lambda) + " is not below lambda2");
    }
  }
}

Vector solution_operator(const Eigenproblem& p, const Vector& f) {
  require_dim(p, f);
  return p.energy().solve(p.mass().apply(f));
}

namespace {

Vector correction_rhs(const Eigenproblem& p, const Vector& u, double lambda) {
  return p.energy().apply(u) - lambda * p.mass().apply(u);
}

bool is_fixed_point(const Eigenproblem& p, const Vector& u, const Vector& w) {
  return energy_norm(p, w) <= kFixedPointTol * energy_norm(p, u);
}

Vector energy_normalized(const Eigenproblem& p, const Vector& d) {
  const double n = energy_norm(p, d);
  if (!(n > 0.0)) throw Error(ErrorCode::ZeroVector, "perturbation direction vanished");
  return d / n;
}

Vector gaussian(Index n, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  Vector g(n);
  for (Index i = 0; i < n; ++i) g[i] = normal(rng);
  return g;
}

}  // namespace

CorrectionResult exact_correction(const Eigenproblem& p, const Vector& u) {
  require_iterate(p, u);
  const double lambda = rayleigh_quotient(p, u);
  Vector w = p.energy().solve(correction_rhs(p, u, lambda));
  CorrectionResult out;
  out.v = w;
  out.w_ref = std::move(w);
  out.eta_actual = 0.0;
  out.mode = SolverMode::Exact;
  return out;
}

CorrectionResult perturbed_correction(const Eigenproblem& p, const Vector& u, double eta,
                                      const PerturbationPolicy& policy) {
  const auto exact = exact_correction(p, u);
  return perturbed_correction(p, u, *exact.w_ref, eta, policy);
}

CorrectionResult perturbed_correction(const Eigenproblem& p, const Vector& u, const Vector& w,
                                      double eta, const PerturbationPolicy& policy) {
  if (!(eta >= 0.0 && eta < 1.0)) throw Error(ErrorCode::InvalidArgument, "eta must lie in [0, 1)");
  policy.validate();
  require_dim(p, w);
  if (is_fixed_point(p, u, w)) {
    throw Error(ErrorCode::FixedPoint, "exact correction vanishes; u is an eigenvector");
  }
  const double radius = policy.budget_fraction * eta * energy_norm(p, w);

  CorrectionResult out;
  out.w_ref = w;
  out.mode = SolverMode::Perturbed;
  out.eta_actual = policy.budget_fraction * eta;
  if (radius == 0.0) {
    out.v = w;
    return out;
  }

  std::mt19937_64 rng(policy.seed);
  switch (policy.kind) {
    case PerturbationKind::Random:
      out.v = w + radius * energy_normalized(p, gaussian(p.dim(), rng));
      break;
    case PerturbationKind::Aligned:
      out.v = w + radius * energy_normalized(p, u);
      break;
    case PerturbationKind::WorstOfN: {
      // Candidate family: the aligned direction and n seeded Gaussian ones.
      // The one that leaves the largest Rayleigh quotient lambda(u - v) wins.
      Vector best = w + radius * energy_normalized(p, u);
      double best_lambda = rayleigh_quotient(p, u - best);
      for (int i = 0; i < policy.n_candidates; ++i) {
        Vector cand = w + radius * energy_normalized(p, gaussian(p.dim(), rng));
        const double lam = rayleigh_quotient(p, u - cand);
        if (lam > best_lambda) {
          best_lambda = lam;
          best = std::move(cand);
        }
      }
      out.v = std::move(best);
      break;
    }
  }
  return out;
}

CorrectionResult truncated_cg_correction(const Eigenproblem& p, const Vector& u, double eta,
                                         const CgOptions& options) {
  if (!(eta >= 0.0 && eta < 1.0)) throw Error(ErrorCode::InvalidArgument, "eta must lie in [0, 1)");
  if (options.max_iter < 0) throw Error(ErrorCode::InvalidArgument, "max_iter must be >= 0");
  require_iterate(p, u);
  const auto& a = p.energy();
  const double lambda = rayleigh_quotient(p, u);
  const Vector b = correction_rhs(p, u, lambda);
  const Vector w = a.solve(b);
  if (is_fixed_point(p, u, w)) {
    throw Error(ErrorCode::FixedPoint, "exact correction vanishes; u is an eigenvector");
  }
  const double w_norm = energy_norm(p, w);
  auto rel_error = [&](const Vector& x) { return energy_norm(p, x - w) / w_norm; };

  CorrectionResult out;
  out.mode = SolverMode::TruncatedCg;
  out.w_ref = w;
  out.certified = options.rule == CgStopRule::Certified;

  Vector x = Vector::Zero(p.dim());
  Vector r = b;
  Vector d = r;
  double rr = r.squaredNorm();
  out.eta_history.push_back(rel_error(x));

  auto stop = [&]() {
    if (options.rule == CgStopRule::Certified) return out.eta_history.back() <= eta;
    const double lhs = std::sqrt(rr) / std::sqrt(options.lambda_min_estimate);
    return lhs <= eta * energy_norm(p, x);
  };

  int iter = 0;
  while (!stop()) {
    if (iter >= options.max_iter || rr == 0.0) {
      double best = out.eta_history.front();
      for (double e : out.eta_history) best = std::min(best, e);
      throw NotCertifiedError(best, iter);
    }
    const Vector ad = a.apply(d);
    const double alpha = rr / d.dot(ad);
    x += alpha * d;
    r -= alpha * ad;
    const double rr_next = r.squaredNorm();
    d = r + (rr_next / rr) * d;
    rr = rr_next;
    ++iter;
    out.eta_history.push_back(rel_error(x));
  }
  out.v = std::move(x);
  out.eta_actual = out.eta_history.back();
  out.cg_iterations = iter;
  return out;
}

}  // namespace invit
