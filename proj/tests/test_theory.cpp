#include <doctest.h>

#include <cmath>

#include "mkl/theory.hpp"
#include "oracles.hpp"

using namespace mkl;

namespace {

TheoryParams params(double beta, double b, double s, double tau = 0.1) {
  TheoryParams p;
  p.beta = beta;
  p.b = b;
  p.s = s;
  p.tau = tau;
  return p;
}

/// Admissible draw: 2 beta (1-s) < s (b-1).
TheoryParams random_admissible(std::uint64_t seed) {
  std::uint64_t st = seed;
  for (;;) {
    const double s = oracle::uniform(st, 0.35, 0.98);
    const double beta = oracle::uniform(st, 1.05, 3.0);
    const double b_floor = 1.0 + 2.0 * beta * (1.0 - s) / s;
    const double b = b_floor + oracle::uniform(st, 0.05, 6.0);
    TheoryParams p = params(beta, b, s);
    if (2 * p.beta * (1 - p.s) < p.s * (p.b - 1)) return p;
  }
}

double elastic_at(TheoryParams p, double tau) {
  p.tau = tau;
  return rate_exponents(p).elastic_exponent;
}

double l2_at(const TheoryParams& p, double tau) {
  return tau * (p.b + 2.0 / (2.0 + p.s)) - 2.0 / (2.0 + p.s);
}

}  // namespace

TEST_CASE("printed threshold formulas at the worked parameter point") {
  TauThresholds t = thresholds(params(1.5, 5.0, 0.9));
  CHECK(t.tau1 == doctest::Approx(1.0 / 21.3).epsilon(1e-12));
  CHECK(t.tau2 == doctest::Approx(4.3 / 21.3).epsilon(1e-12));
  CHECK(t.tau3 == doctest::Approx(10.8 / 36.8).epsilon(1e-12));
  CHECK(t.tau4 == doctest::Approx(0.9 / 2.9).epsilon(1e-12));
  CHECK(rate_exponents(params(1.5, 5.0, 0.9)).admissible);
}

TEST_CASE("tau4 grows with s") {
  double prev = 0.0;
  for (double s = 0.05; s < 1.0; s += 0.05) {
    const double t4 = thresholds(params(1.5, 5.0, s)).tau4;
    CHECK(t4 > prev);
    prev = t4;
  }
}

TEST_CASE("gamma values at the worked point and inadmissibility flag") {
  RegimeReport rep = rate_exponents(params(2.0, 1.0, 0.5));
  CHECK(rep.gamma1 == doctest::Approx(7.0 / 11.0).epsilon(1e-12));
  CHECK(rep.gamma4 == doctest::Approx(4.0 / 7.5).epsilon(1e-12));
  CHECK(rep.gamma5 == doctest::Approx(0.8).epsilon(1e-12));
  CHECK(!rep.admissible);
  CHECK(rep.regime == Regime::undefined);
}

TEST_CASE("regime classification with boundary conventions") {
  CHECK(regime(params(1.5, 5.0, 0.9, 0.25)) == Regime::elastic_case2);
  const TauThresholds t = thresholds(params(1.5, 5.0, 0.9));
  CHECK(regime(params(1.5, 5.0, 0.9, t.tau1)) == Regime::l2_best);
  CHECK(regime(params(1.5, 5.0, 0.9, t.tau4)) == Regime::l1_best);
  CHECK(regime(params(1.5, 5.0, 0.9, 0.5 * (t.tau1 + t.tau2))) == Regime::elastic_case1);
  CHECK(regime(params(1.5, 5.0, 0.9, 0.5 * (t.tau3 + t.tau4))) == Regime::elastic_case3);
  CHECK(regime(params(2.0, 1.0, 0.5, 0.2)) == Regime::undefined);
}

TEST_CASE("threshold ordering holds on 1000 admissible draws") {
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    TheoryParams p = random_admissible(seed);
    TauThresholds t = thresholds(p);
    CHECK(t.tau1 < t.tau2);
    CHECK(t.tau2 < t.tau3);
    CHECK(t.tau3 < t.tau4);
  }
}

TEST_CASE("exponents agree at every regime boundary") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    TheoryParams p = random_admissible(seed * 7 + 1);
    TauThresholds t = thresholds(p);
    // l2 edge, case1/case2, case2/case3, l1 edge.
    CHECK(std::abs(elastic_at(p, t.tau1 + 1e-14) - l2_at(p, t.tau1)) <= 1e-11);
    const double eps = 1e-14;
    CHECK(std::abs(elastic_at(p, t.tau2 - eps) - elastic_at(p, t.tau2 + eps)) <= 1e-11);
    CHECK(std::abs(elastic_at(p, t.tau3 - eps) - elastic_at(p, t.tau3 + eps)) <= 1e-11);
    p.tau = t.tau4;
    const double gamma4 = rate_exponents(p).gamma4;
    CHECK(std::abs(elastic_at(p, t.tau4 - eps) - (-gamma4)) <= 1e-11);
  }
}

TEST_CASE("elastic dominates strictly inside (tau1, tau4)") {
  for (std::uint64_t seed = 0; seed < 25; ++seed) {
    TheoryParams p = random_admissible(seed * 13 + 5);
    TauThresholds t = thresholds(p);
    for (int i = 1; i <= 100; ++i) {
      const double tau = t.tau1 + (t.tau4 - t.tau1) * i / 101.0;
      p.tau = tau;
      RegimeReport rep = rate_exponents(p);
      CHECK(rep.elastic_exponent < rep.l1_exponent);
      CHECK(rep.elastic_exponent < rep.l2_exponent);
    }
  }
}

TEST_CASE("sparse schedule: worked example and branch test") {
  ScheduleExtras ex;
  ex.d = 1;
  Schedule sch = lambda_schedule(ScheduleKind::sparse_small_d, 1000, 1.0, 10, 0.0, {}, ex);
  CHECK(sch.lambda1 == doctest::Approx(0.1).epsilon(1e-12));
  CHECK(sch.lambda2 == doctest::Approx(0.1).epsilon(1e-12));

  CHECK(sparse_small_d_branch(10, 0.5, 100000));
  CHECK(!sparse_small_d_branch(10, 0.5, 1000));  // 10^3.5 ~ 3162 > 1000

  CHECK_THROWS_AS(lambda_schedule(ScheduleKind::sparse_small_d, 1000, 0.5, 10, 0.0),
                  invalid_input);
  CHECK_THROWS_AS(lambda_schedule(ScheduleKind::elastic1, 1000, 0.5, 10, 0.0),
                  invalid_input);
}

TEST_CASE("l2 schedule scales as (M/n)^{1/(2+s)} when that term dominates") {
  const double s = 0.5;
  Schedule a = lambda_schedule(ScheduleKind::l2, 100, s, 64, 0.0);
  Schedule b = lambda_schedule(ScheduleKind::l2, 100, s, 128, 0.0);
  CHECK(a.lambda1 == 0.0);
  CHECK(b.lambda2 / a.lambda2 == doctest::Approx(std::pow(2.0, 1.0 / (2 + s))).epsilon(1e-12));
  Schedule l1s = lambda_schedule(ScheduleKind::l1, 100, s, 64, 0.0);
  CHECK(l1s.lambda2 == 0.0);
  CHECK(l1s.lambda1 > 0.0);
}

TEST_CASE("sparse rate bound branches") {
  // d = 1, s = 1: n^{-2/3} beats n^{-1/2} for n > 1.
  for (long n : {10L, 100L, 10000L}) {
    SparseRateBound bd = sparse_rate_bound(1, n, 1.0, 2, 0.0);
    CHECK(bd.branch_small_d < bd.branch_large_d);
    CHECK(bd.bound == bd.branch_small_d);
  }
  // Branch one is linear in d.
  SparseRateBound b1 = sparse_rate_bound(2, 1000, 0.5, 4, 0.0);
  SparseRateBound b2 = sparse_rate_bound(4, 1000, 0.5, 4, 0.0);
  CHECK(b2.branch_small_d == doctest::Approx(2.0 * b1.branch_small_d).epsilon(1e-12));
  // s -> 0 turns branch one parametric.
  SparseRateBound b0 = sparse_rate_bound(3, 1 << 20, 1e-12, 4, 0.0);
  CHECK(b0.branch_small_d == doctest::Approx(3.0 / (1 << 20)).epsilon(1e-6));
}

TEST_CASE("invalid theory parameters are rejected") {
  CHECK_THROWS_AS(thresholds(params(1.0, 5.0, 0.9)), invalid_input);
  CHECK_THROWS_AS(thresholds(params(1.5, 0.0, 0.9)), invalid_input);
  CHECK_THROWS_AS(thresholds(params(1.5, 5.0, 1.0)), invalid_input);
}
