#include <doctest.h>

#include <cmath>

#include "mkl/solver.hpp"
#include "oracles.hpp"

using namespace mkl;

namespace {

MklProblem make_problem(std::uint64_t seed, int n, int M) {
  MklProblem p;
  std::uint64_t st = seed;
  for (int m = 0; m < M; ++m) {
    Mat K = oracle::random_low_rank_psd(n, 2 + (m + static_cast<int>(seed)) % 4,
                                        seed * 131 + m);
    p.blocks.push_back(gram(KernelSpec::from_matrix(K), Mat::Zero(n, 1)));
  }
  p.y.resize(n);
  for (int i = 0; i < n; ++i) p.y[i] = oracle::uniform(st, -1, 1);
  p.xs = Mat::Zero(n, 1);
  return p;
}

}  // namespace

TEST_CASE("prox: zero input, threshold case, and the hand-worked point") {
  RegPenalty pen{1.0, 0.5};
  CHECK(prox_group_elastic(Vec::Zero(3), 1.0, pen).isZero(0.0));

  Vec small(2);
  small << 0.3, 0.4;  // |v| = 0.5 <= step*lambda1
  CHECK(prox_group_elastic(small, 1.0, pen).isZero(0.0));

  Vec v(2);
  v << 3.0, 4.0;
  Vec u = prox_group_elastic(v, 1.0, pen);
  CHECK(u[0] == doctest::Approx(1.2).epsilon(1e-14));
  CHECK(u[1] == doctest::Approx(1.6).epsilon(1e-14));

  CHECK_THROWS_AS(prox_group_elastic(v, 0.0, pen), invalid_input);
}

TEST_CASE("prox beats a fine directional grid on random draws") {
  for (std::uint64_t seed = 1; seed <= 200; ++seed) {
    std::uint64_t st = seed;
    const int dim = 1 + static_cast<int>(seed % 5);
    Vec v(dim);
    for (int i = 0; i < dim; ++i) v[i] = oracle::uniform(st, -3, 3);
    const double step = oracle::uniform(st, 0.05, 2.0);
    RegPenalty pen{oracle::uniform(st, 0, 1.5), oracle::uniform(st, 0, 1.5)};
    Vec u = prox_group_elastic(v, step, pen);
    const double got = oracle::prox_objective_along(v, step, pen, u.norm());
    const double grid = oracle::prox_grid_min(v, step, pen, 2001);
    CHECK(got <= grid + 1e-12);
  }
}

TEST_CASE("block update: threshold, ridge normal equations, scalar closed form") {
  Mat K = oracle::random_low_rank_psd(8, 8, 5);
  K += 0.2 * Mat::Identity(8, 8);  // full rank
  K /= K.diagonal().maxCoeff();
  GramBlock b = gram(KernelSpec::from_matrix(K), Mat::Zero(8, 1));
  std::uint64_t st = 11;
  Vec r(8);
  for (int i = 0; i < 8; ++i) r[i] = oracle::uniform(st, -1, 1);

  const double thresh = zero_test_norm(b, r);
  CHECK(block_update(b, r, RegPenalty{thresh * 1.0000001, 0.1}).isZero(0.0));
  CHECK(!block_update(b, r, RegPenalty{thresh * 0.9999, 0.1}).isZero(0.0));

  // lambda1 = 0: exact ridge solve.
  const double l2 = 0.3;
  Vec a = block_update(b, r, RegPenalty{0.0, l2});
  Mat A = b.matrix / 8.0 + l2 * Mat::Identity(8, 8);
  Vec ref = A.ldlt().solve(r / 8.0);
  CHECK((b.matrix * (a - ref)).norm() <= 1e-8);

  // n = 1, K = [1]: soft threshold in one dimension.
  GramBlock one = gram(KernelSpec::from_matrix(Mat::Identity(1, 1)), Mat::Zero(1, 1));
  for (double rv : {0.9, -0.7, 0.1}) {
    Vec rr(1);
    rr << rv;
    const double l1 = 0.5, lam2 = 0.25;
    Vec got = block_update(one, rr, RegPenalty{l1, lam2});
    const double want =
        (rv > 0 ? 1.0 : -1.0) * std::max(0.0, 2.0 * std::abs(rv) - l1) / (2.0 + 2.0 * lam2);
    CHECK(got[0] == doctest::Approx(want).epsilon(1e-10));
  }
}

TEST_CASE("fit: zero response gives the empty model") {
  MklProblem p = make_problem(3, 10, 3);
  p.y.setZero();
  MklModel model = fit(p, RegPenalty{0.1, 0.1});
  CHECK(model.active_set.empty());
  CHECK(model.objective == 0.0);
  CHECK(model.converged);
  for (const auto& c : model.coeffs) CHECK(c.isZero(0.0));
}

TEST_CASE("fit without any penalty requires the explicit flag") {
  MklProblem p = make_problem(4, 10, 2);
  CHECK_THROWS_AS(fit(p, RegPenalty{0.0, 0.0}), ill_posed);
  try {
    fit(p, RegPenalty{0.0, 0.0});
  } catch (const ill_posed& e) {
    CHECK(std::string(e.what()).find("allow_unpenalized") != std::string::npos);
  }
  FitOptions opts;
  opts.allow_unpenalized = true;
  MklModel model = fit(p, RegPenalty{0.0, 0.0}, opts);
  CHECK(model.converged);
}

TEST_CASE("fit with lambda1 = 0 matches the closed-form l2 solution") {
  for (std::uint64_t seed : {11, 12, 13, 14, 15}) {
    MklProblem p = make_problem(seed, 14, 3);
    const double l2 = 0.05 + 0.01 * static_cast<double>(seed % 4);
    MklModel direct = closed_form_l2(p, l2);
    MklModel iterated = fit(p, RegPenalty{0.0, l2});
    CHECK(iterated.objective ==
          doctest::Approx(direct.objective).epsilon(1e-6));
    for (int m = 0; m < p.m_count(); ++m) {
      auto [r1, e1] = block_norms({direct.coeffs[m], m}, p.blocks[m]);
      auto [r2, e2] = block_norms({iterated.coeffs[m], m}, p.blocks[m]);
      CHECK(e1 == doctest::Approx(e2).epsilon(1e-4));
    }
  }
}

TEST_CASE("closed form l2: tiny worked case and random-probe optimality") {
  MklProblem p;
  p.blocks.push_back(gram(KernelSpec::from_matrix(Mat::Identity(2, 2)), Mat::Zero(2, 1)));
  p.y.resize(2);
  p.y << 3.0, 3.0;
  p.xs = Mat::Zero(2, 1);
  MklModel m = closed_form_l2(p, 1.0);
  CHECK(m.coeffs[0][0] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(m.coeffs[0][1] == doctest::Approx(1.0).epsilon(1e-12));

  MklProblem q = make_problem(77, 12, 3);
  MklModel best = closed_form_l2(q, 0.2);
  std::uint64_t st = 400;
  for (int probe = 0; probe < 50; ++probe) {
    std::vector<Vec> cand(q.m_count());
    for (int mm = 0; mm < q.m_count(); ++mm) {
      cand[mm].resize(q.n());
      for (Index i = 0; i < q.n(); ++i) cand[mm][i] = oracle::uniform(st, -1, 1);
    }
    CHECK(objective_value(q, cand, best.penalty) >= best.objective - 1e-12);
  }

  p.y.setZero();
  CHECK(closed_form_l2(p, 1.0).active_set.empty());
}

TEST_CASE("single-block threshold is the edge of the regularization path") {
  MklProblem p = make_problem(21, 16, 1);
  const double thresh = zero_test_norm(p.blocks[0], p.y);
  MklModel at = fit(p, RegPenalty{thresh * 1.0000001, 0.0});
  CHECK(at.active_set.empty());
  MklModel below = fit(p, RegPenalty{thresh * 0.999, 0.0});
  CHECK(below.active_set == std::vector<int>{0});
}

TEST_CASE("objective trace never increases across sweeps") {
  for (std::uint64_t seed : {31, 32, 33}) {
    MklProblem p = make_problem(seed, 20, 4);
    FitOptions opts;
    opts.record_trace = true;
    MklModel model = fit(p, RegPenalty{0.05, 0.01}, opts);
    REQUIRE(model.objective_trace.size() >= 2);
    for (std::size_t i = 1; i < model.objective_trace.size(); ++i)
      CHECK(model.objective_trace[i] <= model.objective_trace[i - 1] + 1e-12);
    CHECK(model.objective ==
          doctest::Approx(objective_value(p, model.coeffs, model.penalty))
              .epsilon(1e-10));
  }
}

TEST_CASE("fit objective matches a subgradient oracle on small problems") {
  for (std::uint64_t seed : {41, 42, 43}) {
    MklProblem p = make_problem(seed, 16, 2);
    RegPenalty pen{0.08, 0.05};
    MklModel model = fit(p, pen);
    const double oracle_best = oracle::subgradient_best_objective(p, pen, 40000);
    CHECK(model.objective <= oracle_best + 1e-9);
    CHECK(std::abs(model.objective - oracle_best) <=
          1e-4 * std::max(1.0, std::abs(oracle_best)));
  }
}

TEST_CASE("map lambda1 to fitted block norms is nonincreasing") {
  MklProblem p = make_problem(55, 18, 3);
  const double l2 = 0.02;
  std::vector<std::vector<double>> norms(p.m_count());
  std::optional<MklModel> warm;
  for (int k = 0; k < 20; ++k) {
    const double l1 = 0.35 - 0.017 * k;  // descending path with warm starts
    FitOptions opts;
    opts.init = warm;
    MklModel model = fit(p, RegPenalty{l1, l2}, opts);
    warm = model;
    for (int m = 0; m < p.m_count(); ++m) {
      auto [rkhs, emp] = block_norms({model.coeffs[m], m}, p.blocks[m]);
      norms[m].push_back(rkhs);
    }
  }
  // Path recorded with lambda1 descending, so norms must be nondecreasing.
  for (int m = 0; m < p.m_count(); ++m)
    for (std::size_t i = 1; i < norms[m].size(); ++i)
      CHECK(norms[m][i] >= norms[m][i - 1] - 1e-8);
}

TEST_CASE("kkt report validates fits, flags perturbations, accepts the zero edge") {
  MklProblem p = make_problem(61, 18, 3);
  RegPenalty pen{0.07, 0.03};
  MklModel model = fit(p, pen);
  KktReport rep = kkt_residual(model, p, pen);
  CHECK(rep.satisfied);
  CHECK(rep.max_zero_block_violation <= 1e-6);
  CHECK(rep.max_active_block_residual <= 1e-6);

  if (!model.active_set.empty()) {
    MklModel bad = model;
    bad.coeffs[model.active_set[0]][0] += 1e-2;
    CHECK(!kkt_residual(bad, p, pen).satisfied);
  }

  double global = 0.0;
  for (const auto& b : p.blocks) global = std::max(global, zero_test_norm(b, p.y));
  MklModel zero;
  zero.penalty = RegPenalty{global * 1.01, 0.0};
  zero.coeffs.assign(p.m_count(), Vec::Zero(p.n()));
  CHECK(kkt_residual(zero, p, zero.penalty).satisfied);

  // Coefficients in a block's null space represent the zero function.
  Mat K = Mat::Zero(4, 4);
  K(0, 0) = 1.0;
  MklProblem pn;
  pn.blocks.push_back(gram(KernelSpec::from_matrix(K), Mat::Zero(4, 1)));
  pn.y = Vec::Ones(4);
  pn.xs = Mat::Zero(4, 1);
  MklModel nullm;
  nullm.coeffs.assign(1, Vec::Zero(4));
  nullm.coeffs[0][3] = 1.0;  // null direction only
  CHECK_THROWS_AS(kkt_residual(nullm, pn, RegPenalty{0.1, 0.1}), inconsistent_model);
}

TEST_CASE("non-convergence is reported, never thrown") {
  MklProblem p = make_problem(71, 20, 4);
  FitOptions opts;
  opts.max_iter = 1;
  opts.tol = 1e-16;
  MklModel model = fit(p, RegPenalty{0.01, 0.001}, opts);
  CHECK(!model.converged);
  CHECK(model.iterations == 1);
}
