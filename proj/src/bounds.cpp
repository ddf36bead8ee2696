#include "invit/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace invit {

namespace {

constexpr double kEtaPole = 1.0 - 1e-12;

void require_range(const BoundInputs& b, double lambda, bool include_upper, const char* what) {
  b.validate();
  const bool upper_ok = include_upper ? lambda <= b.lambda2 : lambda < b.lambda2;
  if (!(lambda >= b.lambda1 && upper_ok)) {
    throw Error(ErrorCode::InvalidArgument,
                std::string(what) + ": lambda " + std::to_string(lambda) + " outside the valid range");
  }
}

template <class T>
T q_formula(const BoundInputs& b, T lambda) {
  const T s = 1 - static_cast<T>(b.eta) * b.eta;
  const T l1 = b.lambda1;
  const T l2 = b.lambda2;
  const T d2 = (l2 - lambda) * (l2 - lambda);
  return 1 - s * lambda * d2 / (l2 * l2 * lambda + s * d2 * (lambda - l1));
}

}  // namespace

void BoundInputs::validate() const {
  if (!(lambda1 > 0.0) || !(lambda2 > lambda1) || !std::isfinite(lambda2)) {
    throw Error(ErrorCode::InvalidArgument, "bounds require 0 < lambda1 < lambda2");
  }
  if (!(eta >= 0.0 && eta < 1.0)) throw Error(ErrorCode::InvalidArgument, "eta must lie in [0, 1)");
}

double q_factor(const BoundInputs& b, double lambda) {
  require_range(b, lambda, true, "q_factor");
  return q_formula<double>(b, lambda);
}

double q_derivative(const BoundInputs& b, double lambda) {
  require_range(b, lambda, true, "q_derivative");
  const double s = 1.0 - b.eta * b.eta;
  const double d = b.lambda2 - lambda;
  const double den = b.lambda2 * b.lambda2 * lambda + s * d * d * (lambda - b.lambda1);
  const double num = s * d * (s * b.lambda1 * d * d * d + 2.0 * b.lambda2 * b.lambda2 * lambda * lambda);
  return num / (den * den);
}

double q_limit(const BoundInputs& b) {
  b.validate();
  const double r = (b.lambda2 - b.lambda1) / b.lambda2;
  return 1.0 - (1.0 - b.eta * b.eta) * r * r;
}

double kn_optimal_rate(const BoundInputs& b) {
  b.validate();
  const double base = 1.0 - (1.0 - b.eta) * (b.lambda2 - b.lambda1) / b.lambda2;
  return base * base;
}

double lemma31_bound(const BoundInputs& b, double lambda) {
  require_range(b, lambda, false, "lemma31_bound");
  const double r = (b.lambda2 - lambda) / b.lambda2;
  return r * r * (lambda - b.lambda1);
}

double lemma32_bound(const BoundInputs& b, double lambda, double w_norm_sq) {
  b.validate();
  if (!(w_norm_sq >= 0.0)) throw Error(ErrorCode::InvalidArgument, "lemma32_bound: negative |w|^2");
  if (!(lambda > 0.0)) throw Error(ErrorCode::InvalidArgument, "lemma32_bound: lambda must be positive");
  const double x = (1.0 - b.eta * b.eta) * w_norm_sq;
  return lambda * x / (lambda + x);
}

double lemma33_bound(const BoundInputs& b, double lambda) {
  require_range(b, lambda, true, "lemma33_bound");
  if (b.eta > kEtaPole) return std::numeric_limits<double>::infinity();
  return (1.0 + b.eta) / (1.0 - b.eta) * (b.lambda2 / b.lambda1) * (lambda - b.lambda1);
}

double lemma34_constant(const BoundInputs& b) {
  b.validate();
  if (b.eta > kEtaPole) return std::numeric_limits<double>::infinity();
  const double ratio = b.lambda2 / b.lambda1;
  const double lead = 1.0 + std::sqrt(ratio);
  return 4.0 * lead * lead * (1.0 + b.eta) / (1.0 - b.eta) * ratio;
}

double thm32_bound(const BoundInputs& b, double lambda) {
  require_range(b, lambda, false, "thm32_bound");
  return b.lambda2 / (b.lambda2 - b.lambda1) * (lambda - b.lambda1);
}

MonotonicityResult q_monotonicity_report(const BoundInputs& b, int n_samples) {
  b.validate();
  if (n_samples < 2) throw Error(ErrorCode::InvalidArgument, "n_samples must be >= 2");
  MonotonicityResult out;
  out.strictly_increasing = true;
  out.derivative_positive = true;
  const double width = b.lambda2 - b.lambda1;
  const double fd_step = 1e-6 * width;
  auto sample = [&](int i) {
    return i == n_samples - 1 ? b.lambda2 : b.lambda1 + width * i / (n_samples - 1);
  };
  double prev = q_factor(b, sample(0));
  for (int i = 1; i < n_samples; ++i) {
    const double lam = sample(i);
    const double q = q_factor(b, lam);
    if (!(q > prev)) out.strictly_increasing = false;
    prev = q;
    if (i == n_samples - 1) break;
    const double dq = q_derivative(b, lam);
    if (!(dq > 0.0)) out.derivative_positive = false;
    // Central difference evaluated in extended precision.
    const long double x = lam;
    const long double h = std::min<long double>({fd_step, x - b.lambda1, b.lambda2 - x});
    const long double fd = (q_formula(b, x + h) - q_formula(b, x - h)) / (2 * h);
    const double rel = static_cast<double>(std::abs(fd - dq) / std::abs(fd));
    out.max_fd_rel_error = std::max(out.max_fd_rel_error, rel);
  }
  out.ok = out.strictly_increasing && out.derivative_positive && out.max_fd_rel_error <= 1e-6;
  return out;
}

bool q_monotonicity_check(const BoundInputs& b, int n_samples) {
  return q_monotonicity_report(b, n_samples).ok;
}

std::string to_string(BoundId id) {
  switch (id) {
    case BoundId::T31: return "T3.1";
    case BoundId::L31: return "L3.1";
    case BoundId::L32: return "L3.2";
    case BoundId::L33: return "L3.3";
    case BoundId::L34: return "L3.4";
    case BoundId::T32: return "T3.2";
    case BoundId::E25: return "E2.5";
    case BoundId::E27: return "E2.7";
    case BoundId::E38: return "E3.8";
  }
  return "unknown";
}

BoundId bound_id_from_string(const std::string& name) {
  for (auto id : {BoundId::T31, BoundId::L31, BoundId::L32, BoundId::L33, BoundId::L34,
                  BoundId::T32, BoundId::E25, BoundId::E27, BoundId::E38}) {
    if (to_string(id) == name) return id;
  }
  throw Error(ErrorCode::SchemaError, "unknown inequality id '" + name + "'");
}

bool passes_with_slack(double lhs, double rhs) {
  return lhs <= rhs * (1.0 + kRelSlack) + kAbsSlack;
}

VerificationReport verify_records(const std::vector<StepRecord>& records,
                                  const SpectralMetadata& meta,
                                  std::optional<double> eta_override) {
  const BoundInputs base{meta.lambda1, meta.lambda2, 0.0};
  base.validate();
  if (eta_override) BoundInputs{meta.lambda1, meta.lambda2, *eta_override}.validate();

  VerificationReport report;
  if (records.empty()) return report;

  auto clamp = [&](double lambda, int k) {
    if (!(lambda < meta.lambda2)) {
      throw Error(ErrorCode::PreconditionViolation,
                  "step " + std::to_string(k) + ": Rayleigh quotient is not below lambda2");
    }
    return std::max(lambda, meta.lambda1);
  };

  double eta_max = 0.0;
  for (const auto& r : records) eta_max = std::max(eta_max, eta_override.value_or(r.eta_used));
  const double lambda0 = clamp(records.front().lambda, records.front().k);
  const double q0 = q_factor({meta.lambda1, meta.lambda2, eta_max}, lambda0);

  auto add = [&](int k, BoundId id, double lhs, double rhs, bool applicable) {
    CheckEntry e{k, id, lhs, rhs, rhs - lhs, applicable, true};
    if (applicable) e.pass = passes_with_slack(lhs, rhs);
    if (applicable && !e.pass && report.all_pass) {
      report.all_pass = false;
      report.first_failure = FailureLocation{k, id};
    }
    report.entries.push_back(e);
  };

  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    const int k = r.k;
    const double eta = eta_override.value_or(r.eta_used);
    const BoundInputs b{meta.lambda1, meta.lambda2, eta};
    b.validate();
    const double lam = clamp(r.lambda, k);
    const double gap = lam - meta.lambda1;
    const double err_next = r.lambda_next - meta.lambda1;
    const double w2 = r.w_norm * r.w_norm;
    const double v2 = r.v_norm * r.v_norm;

    const double q = q_factor(b, lam);
    add(k, BoundId::T31, err_next, q * gap, true);
    if (gap > 0.0) {
      const double ratio = err_next / gap / q;
      report.max_ratio_over_q = std::max(report.max_ratio_over_q.value_or(ratio), ratio);
    }
    add(k, BoundId::L31, lemma31_bound(b, lam), w2, true);
    add(k, BoundId::L32, lemma32_bound(b, lam, w2), r.lambda - r.lambda_next, true);
    add(k, BoundId::L33, v2, lemma33_bound(b, lam), true);
    const bool l34 = v2 <= meta.lambda1 / 4.0;
    add(k, BoundId::L34, r.u_diff_norm * r.u_diff_norm,
        l34 ? lemma34_constant(b) * gap : std::numeric_limits<double>::quiet_NaN(), l34);
    if (r.subspace_dist) {
      add(k, BoundId::T32, *r.subspace_dist * *r.subspace_dist, thm32_bound(b, lam), true);
    } else {
      add(k, BoundId::T32, std::numeric_limits<double>::quiet_NaN(),
          std::numeric_limits<double>::quiet_NaN(), false);
    }
    // |u|^2 = lambda for a mass-normalized iterate.
    add(k, BoundId::E25,
        std::abs(r.u_minus_w_norm * r.u_minus_w_norm - r.lambda - w2), kPythagorasTol * r.lambda,
        true);
    add(k, BoundId::E27, (1.0 - eta) * r.u_minus_w_norm, r.u_minus_v_norm, true);
    const double steps = static_cast<double>(k - records.front().k + 1);
    add(k, BoundId::E38, err_next, std::pow(q0, steps) * (lambda0 - meta.lambda1), true);
  }

  for (const auto& e : report.entries) {
    if (e.id == BoundId::T31 && e.applicable) {
      report.min_margin_t31 = std::min(report.min_margin_t31.value_or(e.margin), e.margin);
    }
  }
  return report;
}

VerificationReport verify_trajectory(const Trajectory& t, const SpectralMetadata& meta,
                                     std::optional<double> eta_override) {
  return verify_records(t.records, meta, eta_override);
}

}  // namespace invit
