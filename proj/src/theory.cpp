#include "mkl/theory.hpp"

#include <cmath>
#include <limits>

namespace mkl {

namespace {

double guarded_div(double num, double den, const char* what) {
  if (den == 0.0) throw numerical_error(std::string("theory: zero denominator in ") + what);
  return num / den;
}

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

}  // namespace

std::string regime_name(Regime r) {
  switch (r) {
    case Regime::l2_best: return "l2_best";
    case Regime::elastic_case1: return "elastic_case1";
    case Regime::elastic_case2: return "elastic_case2";
    case Regime::elastic_case3: return "elastic_case3";
    case Regime::l1_best: return "l1_best";
    case Regime::undefined: return "undefined";
  }
  return "undefined";
}

TauThresholds thresholds(const TheoryParams& p) {
  p.validate();
  const double beta = p.beta, b = p.b, s = p.s;
  TauThresholds t{};
  t.tau1 = guarded_div(1.0, (2 * beta + b) * (2 + s) - 1 - s, "tau1");
  t.tau2 = guarded_div((s - 1) * (2 * beta - 1) + b * s,
                       (2 * beta + b) * (2 + s) - 1 - s, "tau2");
  t.tau3 = guarded_div(s * (2 * (b + beta) - 1), 2 * (2 + s) * (b + beta) - s, "tau3");
  t.tau4 = s / (2 + s);
  t.tau5 = guarded_div(b + 1, (beta + b) * (b * (2 + s) + 2), "tau5");
  t.tau6 = guarded_div(1.0, (1 - s) * (1 + b), "tau6");
  return t;
}

RegimeReport rate_exponents(const TheoryParams& p) {
  p.validate();
  const double beta = p.beta, b = p.b, s = p.s, tau = p.tau;

  RegimeReport rep;
  rep.taus = thresholds(p);
  rep.admissible = 2 * beta * (1 - s) < s * (b - 1);

  rep.gamma1 = guarded_div(4 * beta + b - 2, (2 + s) * (2 * beta + b) - 1 - s, "gamma1");
  rep.gamma2 = guarded_div(4 * beta + b * (2 + s) - 2,
                           2 * ((2 + s) * (b + beta) - s), "gamma2");
  rep.gamma3 = guarded_div(b + 2 * beta - 1, 2 * (b + beta), "gamma3");
  rep.gamma4 = guarded_div(2 * beta + b - 1, (beta + b) * (2 + s), "gamma4");
  rep.gamma5 = 2 / (2 + s);

  rep.l1_exponent = -rep.gamma4;
  rep.l2_exponent = tau * (b + 2 / (2 + s)) - rep.gamma5;
  rep.l1_hypothesis_met = rep.taus.tau5 < tau;
  rep.l2_hypothesis_met = tau < rep.taus.tau6;

  rep.regime = regime(p);
  switch (rep.regime) {
    case Regime::elastic_case1:
      rep.elastic_exponent = -rep.gamma1;
      break;
    case Regime::elastic_case2:
      rep.elastic_exponent =
          tau * guarded_div((2 + s) * b + 2, 2 * ((2 + s) * (b + beta) - s), "case2") -
          rep.gamma2;
      break;
    case Regime::elastic_case3:
      rep.elastic_exponent = rep.gamma3 * (tau - 1);
      break;
    default:
      rep.elastic_exponent = kNaN;
      break;
  }
  return rep;
}

Regime regime(const TheoryParams& p) {
  p.validate();
  if (!(2 * p.beta * (1 - p.s) < p.s * (p.b - 1))) return Regime::undefined;
  const TauThresholds t = thresholds(p);
  // Boundaries go to the coinciding single-regularizer method.
  if (p.tau <= t.tau1) return Regime::l2_best;
  if (p.tau < t.tau2) return Regime::elastic_case1;
  if (p.tau < t.tau3) return Regime::elastic_case2;
  if (p.tau < t.tau4) return Regime::elastic_case3;
  return Regime::l1_best;
}

bool sparse_small_d_branch(long d, double s, long n) {
  if (d < 1 || n < 1) throw invalid_input("sparse branch test: d and n must be >= 1");
  return std::pow(static_cast<double>(d), 3.0 + s) <= static_cast<double>(n);
}

Schedule lambda_schedule(ScheduleKind kind, long n, double s, long M, double t,
                         const ScheduleConstants& c, const ScheduleExtras& extras) {
  if (n < 1 || M < 1) throw invalid_input("lambda_schedule: n and M must be >= 1");
  if (t < 0.0) throw invalid_input("lambda_schedule: t must be nonnegative");
  const double dn = static_cast<double>(n);
  const double dM = static_cast<double>(M);
  const double log_term = c.F * std::sqrt(std::log(dM * dn) / dn);
  const double noise_term = c.K2 * std::sqrt(t / dn);

  auto need = [&](const std::optional<double>& v, const char* name) {
    if (!v) throw invalid_input(std::string("lambda_schedule: missing extra '") + name + "'");
    return *v;
  };

  Schedule out;
  switch (kind) {
    case ScheduleKind::sparse_small_d: {
      if (!extras.d) throw invalid_input("lambda_schedule: missing extra 'd'");
      out.lambda1 = std::max(c.K * std::pow(dn, -1.0 / (2 + s)) + noise_term, log_term);
      out.lambda2 = out.lambda1;
      break;
    }
    case ScheduleKind::sparse_large_d: {
      if (!extras.d) throw invalid_input("lambda_schedule: missing extra 'd'");
      out.lambda1 = std::max(c.K * (1 + std::sqrt(t)) / std::sqrt(dn), log_term);
      out.lambda2 = out.lambda1;  // any value <= lambda1 is admitted; use the cap
      break;
    }
    case ScheduleKind::elastic1: {
      const double beta = need(extras.beta, "beta");
      const double b = need(extras.b, "b");
      const double den = (2 * beta + b) * (2 + s) - 1 - s;
      out.lambda1 =
          std::max(c.K * std::pow(dn, -(3 * beta + b - 1) / den) + noise_term, log_term);
      out.lambda2 = c.K * std::pow(dn, -(2 * beta + b - 1) / den);
      break;
    }
    case ScheduleKind::elastic2: {
      const double beta = need(extras.beta, "beta");
      const double b = need(extras.b, "b");
      const double tau = need(extras.tau, "tau");
      out.lambda1 = std::max(c.K * std::sqrt(dM / dn) + noise_term, log_term);
      out.lambda2 = c.K * std::pow(dn, (tau - (2 * (b + beta) - 1)) /
                                           (2 * ((2 + s) * (b + beta) - s)));
      break;
    }
    case ScheduleKind::elastic3: {
      const double beta = need(extras.beta, "beta");
      const double b = need(extras.b, "b");
      out.lambda1 = std::max(c.K * std::sqrt(dM / dn) + noise_term, log_term);
      out.lambda2 =
          c.K * std::pow(dM / dn, (2 * (b + beta) - 1) / (4 * (b + beta)));
      break;
    }
    case ScheduleKind::l1: {
      out.lambda1 = std::max(c.K * std::pow(dn, -1.0 / (2 + s)) + noise_term, log_term);
      out.lambda2 = 0.0;
      break;
    }
    case ScheduleKind::l2: {
      out.lambda2 = std::max(c.K * std::pow(dM / dn, 1.0 / (2 + s)), log_term);
      out.lambda1 = 0.0;
      break;
    }
  }
  return out;
}

SparseRateBound sparse_rate_bound(long d, long n, double s, long M, double t) {
  if (d < 1 || n < 1 || M < 1)
    throw invalid_input("sparse_rate_bound: d, n, M must be >= 1");
  const double dd = static_cast<double>(d);
  const double dn = static_cast<double>(n);
  const double dM = static_cast<double>(M);
  SparseRateBound out;
  out.branch_small_d = dd * std::pow(dn, -2.0 / (2 + s)) + dd * t / dn;
  out.branch_large_d = std::pow(dd, (1 - s) / (1 + s)) * std::pow(dn, -1.0 / (1 + s)) +
                       dd * (std::log(dM * dn) + t) / dn;
  out.bound = std::min(out.branch_small_d, out.branch_large_d);
  return out;
}

}  // namespace mkl
