#pragma once

#include <map>
#include <optional>
#include <string>

#include "mkl/types.hpp"

namespace mkl {

/// Problem-regime parameters: beta (approximate sparsity decay), b (incoherence
/// exponent), s (spectral decay), tau (kernel-count growth, M = ceil(n^tau)).
struct TheoryParams {
  double beta = 2.0;
  double b = 1.0;
  double s = 0.5;
  double tau = 0.1;
  std::optional<long> d;
  long n = 0;
  long M = 0;

  void validate() const {
    if (!(beta > 1.0)) throw invalid_input("theory: beta must exceed 1");
    if (!(b > 0.0)) throw invalid_input("theory: b must be positive");
    if (!(s > 0.0 && s < 1.0)) throw invalid_input("theory: s must lie in (0,1)");
    if (!(tau > 0.0)) throw invalid_input("theory: tau must be positive");
  }
};

struct TauThresholds {
  double tau1, tau2, tau3, tau4, tau5, tau6;
};

enum class Regime { l2_best, elastic_case1, elastic_case2, elastic_case3, l1_best, undefined };

std::string regime_name(Regime r);

/// Rate exponents and regime classification at the given parameters.
/// Predicted exponents are for |fhat - f*|^2 as a power of n (leading term);
/// the elastic exponent is NaN outside (tau1, tau4).
struct RegimeReport {
  TauThresholds taus{};
  double gamma1 = 0, gamma2 = 0, gamma3 = 0, gamma4 = 0, gamma5 = 0;
  bool admissible = false;           // 2 beta (1-s) < s (b-1)
  Regime regime = Regime::undefined;
  double elastic_exponent = 0, l1_exponent = 0, l2_exponent = 0;
  bool l1_hypothesis_met = false;    // tau5 < tau
  bool l2_hypothesis_met = false;    // tau < tau6
};

TauThresholds thresholds(const TheoryParams& p);
RegimeReport rate_exponents(const TheoryParams& p);
Regime regime(const TheoryParams& p);

enum class ScheduleKind {
  sparse_small_d,  // d^{3+s} <= n branch
  sparse_large_d,
  elastic1,
  elastic2,
  elastic3,
  l1,
  l2,
};

/// Unprintable theory constants, exposed as caller calibration knobs.
struct ScheduleConstants {
  double K = 1.0;
  double K2 = 1.0;  // the sqrt(t/n) coefficient
  double F = 1.0;   // the sqrt(log(Mn)/n) coefficient
};

struct Schedule {
  double lambda1 = 0.0;
  double lambda2 = 0.0;
};

/// Extra schedule inputs; which fields are read depends on the kind.
struct ScheduleExtras {
  std::optional<long> d;        // sparse kinds
  std::optional<double> beta;   // elastic kinds
  std::optional<double> b;      // elastic kinds
  std::optional<double> tau;    // elastic2
};

/// True when the small-d sparse branch applies: d^{3+s} / n <= 1.
bool sparse_small_d_branch(long d, double s, long n);

/// The regularization pair prescribed for the given rate statement, with all
/// n, M, s, tau dependencies as printed and constants from `c`.
Schedule lambda_schedule(ScheduleKind kind, long n, double s, long M, double t,
                         const ScheduleConstants& c = {},
                         const ScheduleExtras& extras = {});

/// Both branch values of the sparse-case bound (unit constants) and their min.
struct SparseRateBound {
  double branch_small_d = 0.0;  // d n^{-2/(2+s)} + d t / n
  double branch_large_d = 0.0;  // d^{(1-s)/(1+s)} n^{-1/(1+s)} + d (log(Mn)+t)/n
  double bound = 0.0;
};

SparseRateBound sparse_rate_bound(long d, long n, double s, long M, double t);

}  // namespace mkl
