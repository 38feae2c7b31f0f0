#include "mkl/solver.hpp"

#include <algorithm>
#include <cmath>

namespace mkl {

namespace {

void validate_penalty(const RegPenalty& p, bool allow_unpenalized) {
  if (p.lambda1 < 0.0 || p.lambda2 < 0.0)
    throw invalid_input("penalty weights must be nonnegative");
  if (p.lambda1 == 0.0 && p.lambda2 == 0.0 && !allow_unpenalized)
    throw ill_posed(
        "lambda1 = lambda2 = 0 gives an ill-posed problem; "
        "set allow_unpenalized to fit anyway");
}

/// One-block subproblem in the eigenbasis. Input is w = Q' r (r = partial
/// residual including this block's contribution). Outputs the coefficient
/// vector alpha, the fitted contribution K*alpha, and nu = |f_m|_H.
struct BlockSolution {
  Vec alpha;
  Vec fitted;
  double nu = 0.0;
  bool zero = false;
};

BlockSolution solve_block_eig(const GramBlock& block, const Vec& w,
                              const RegPenalty& penalty) {
  const Index n = block.n;
  const double inv_n2 = 2.0 / static_cast<double>(n);
  const Vec& lam = block.eigenvalues;

  BlockSolution out;

  // b_i = (2/n) sqrt(lam_i) w_i; the zero test is |b| <= lambda1.
  Vec b(n);
  double b2 = 0.0;
  for (Index i = 0; i < n; ++i) {
    b[i] = lam[i] > 0.0 ? inv_n2 * std::sqrt(lam[i]) * w[i] : 0.0;
    b2 += b[i] * b[i];
  }
  const double bnorm = std::sqrt(b2);

  if (penalty.lambda1 > 0.0 && bnorm <= penalty.lambda1) {
    out.alpha = Vec::Zero(n);
    out.fitted = Vec::Zero(n);
    out.zero = true;
    return out;
  }
  if (penalty.lambda1 == 0.0 && bnorm == 0.0) {
    out.alpha = Vec::Zero(n);
    out.fitted = Vec::Zero(n);
    out.zero = true;
    return out;
  }

  // e_i are eigenbasis coefficients of alpha; null directions stay 0.
  Vec e = Vec::Zero(n);

  if (penalty.lambda1 == 0.0) {
    // Smooth ridge (or plain least squares when lambda2 = 0 as well).
    double nu2 = 0.0;
    for (Index i = 0; i < n; ++i) {
      if (lam[i] <= 0.0) continue;
      const double a = inv_n2 * lam[i] + 2.0 * penalty.lambda2;
      e[i] = inv_n2 * w[i] / a;
      const double u = b[i] / a;
      nu2 += u * u;
    }
    out.nu = std::sqrt(nu2);
  } else {
    // Root of G(nu) = sum b_i^2/(a_i nu + lambda1)^2 - 1, G decreasing convex.
    const double l1 = penalty.lambda1;
    double a_min = std::numeric_limits<double>::infinity();
    for (Index i = 0; i < n; ++i) {
      if (b[i] == 0.0) continue;
      a_min = std::min(a_min, inv_n2 * lam[i] + 2.0 * penalty.lambda2);
    }
    if (!std::isfinite(a_min) || a_min <= 0.0)
      throw numerical_error("block_update: degenerate subproblem scaling");

    auto G = [&](double nu, double& dG) {
      double g = -1.0, d = 0.0;
      for (Index i = 0; i < n; ++i) {
        if (b[i] == 0.0) continue;
        const double a = inv_n2 * lam[i] + 2.0 * penalty.lambda2;
        const double den = a * nu + l1;
        const double t = b[i] / den;
        g += t * t;
        d -= 2.0 * a * t * t / den;
      }
      dG = d;
      return g;
    };

    double nu = 0.0, dG = 0.0;
    double g = G(nu, dG);
    if (g <= 0.0)
      throw numerical_error("block_update: zero test passed but root finder entered");
    const double nu_hi = bnorm / a_min;
    int it = 0;
    // Newton from the left converges monotonically; bisect as safeguard.
    for (; it < 200; ++it) {
      double step = -g / dG;
      double nu_next = nu + step;
      if (!(nu_next > nu) || nu_next > nu_hi) {
        double lo = nu, hi = nu_hi;
        for (int k = 0; k < 200 && (hi - lo) > 1e-14 * std::max(1.0, hi); ++k) {
          double mid = 0.5 * (lo + hi);
          double dd;
          (G(mid, dd) > 0.0 ? lo : hi) = mid;
        }
        nu = 0.5 * (lo + hi);
        break;
      }
      nu = nu_next;
      g = G(nu, dG);
      if (std::abs(step) <= 1e-12 * std::max(1.0, nu)) break;
    }

    out.nu = nu;
    const double shift = l1 / nu;
    for (Index i = 0; i < n; ++i) {
      if (lam[i] <= 0.0) continue;
      e[i] = inv_n2 * w[i] / (inv_n2 * lam[i] + 2.0 * penalty.lambda2 + shift);
    }
  }

  out.alpha = block.eigenvectors * e;
  out.fitted = block.eigenvectors * (lam.cwiseProduct(e));
  return out;
}

}  // namespace

double objective_value(const MklProblem& problem, const std::vector<Vec>& coeffs,
                       const RegPenalty& penalty) {
  if (coeffs.size() != problem.blocks.size())
    throw invalid_input("objective_value: coefficient count mismatch");
  Vec r = problem.y;
  double pen = 0.0;
  for (std::size_t m = 0; m < coeffs.size(); ++m) {
    if (coeffs[m].size() != problem.n())
      throw invalid_input("objective_value: coefficient length mismatch");
    Vec Ka = problem.blocks[m].matrix * coeffs[m];
    r -= Ka;
    const double h2 = std::max(0.0, coeffs[m].dot(Ka));
    pen += penalty.lambda1 * std::sqrt(h2) + penalty.lambda2 * h2;
  }
  return r.squaredNorm() / static_cast<double>(problem.n()) + pen;
}

Vec fitted_values(const MklProblem& problem, const std::vector<Vec>& coeffs) {
  Vec out = Vec::Zero(problem.n());
  for (std::size_t m = 0; m < coeffs.size(); ++m)
    out += problem.blocks[m].matrix * coeffs[m];
  return out;
}

Vec prox_group_elastic(const Vec& v, double step, const RegPenalty& penalty) {
  if (step <= 0.0) throw invalid_input("prox_group_elastic: step must be positive");
  const double norm = v.norm();
  if (norm == 0.0 || norm <= step * penalty.lambda1) return Vec::Zero(v.size());
  const double factor =
      (1.0 - step * penalty.lambda1 / norm) / (1.0 + 2.0 * step * penalty.lambda2);
  return factor * v;
}

double zero_test_norm(const GramBlock& block, const Vec& residual) {
  if (residual.size() != block.n)
    throw invalid_input("zero_test_norm: residual length mismatch");
  const double q = std::max(0.0, residual.dot(block.matrix * residual));
  return 2.0 * std::sqrt(q) / static_cast<double>(block.n);
}

Vec block_update(const GramBlock& block, const Vec& residual, const RegPenalty& penalty) {
  if (residual.size() != block.n)
    throw invalid_input("block_update: residual length mismatch");
  Vec w = block.eigenvectors.transpose() * residual;
  return solve_block_eig(block, w, penalty).alpha;
}

MklModel fit(const MklProblem& problem, const RegPenalty& penalty, const FitOptions& opts) {
  problem.validate();
  validate_penalty(penalty, opts.allow_unpenalized);
  if (opts.tol <= 0.0) throw invalid_input("fit: tol must be positive");
  const Index n = problem.n();
  const int M = problem.m_count();

  std::vector<Vec> alpha(M), fitted(M);
  if (opts.init) {
    if (static_cast<int>(opts.init->coeffs.size()) != M)
      throw invalid_input("fit: warm start has wrong block count");
    for (int m = 0; m < M; ++m) {
      if (opts.init->coeffs[m].size() != n)
        throw invalid_input("fit: warm start has wrong coefficient length");
      alpha[m] = opts.init->coeffs[m];
      fitted[m] = problem.blocks[m].matrix * alpha[m];
    }
  } else {
    for (int m = 0; m < M; ++m) {
      alpha[m] = Vec::Zero(n);
      fitted[m] = Vec::Zero(n);
    }
  }

  Vec r = problem.y;
  for (int m = 0; m < M; ++m) r -= fitted[m];
  std::vector<double> nu(M, 0.0);
  for (int m = 0; m < M; ++m)
    nu[m] = std::sqrt(std::max(0.0, alpha[m].dot(fitted[m])));

  auto current_objective = [&]() {
    double pen = 0.0;
    for (int m = 0; m < M; ++m)
      pen += penalty.lambda1 * nu[m] + penalty.lambda2 * nu[m] * nu[m];
    return r.squaredNorm() / static_cast<double>(n) + pen;
  };

  MklModel model;
  model.penalty = penalty;
  double obj = current_objective();
  if (opts.record_trace) model.objective_trace.push_back(obj);

  int sweep = 0;
  bool converged = false;
  for (; sweep < opts.max_iter; ++sweep) {
    double max_coef_change = 0.0;
    for (int m = 0; m < M; ++m) {
      Vec rm = r + fitted[m];
      Vec w = problem.blocks[m].eigenvectors.transpose() * rm;
      BlockSolution sol = solve_block_eig(problem.blocks[m], w, penalty);
      max_coef_change =
          std::max(max_coef_change, (sol.alpha - alpha[m]).cwiseAbs().maxCoeff());
      alpha[m] = std::move(sol.alpha);
      r = rm - sol.fitted;
      fitted[m] = std::move(sol.fitted);
      nu[m] = sol.nu;
    }
    // Refresh the residual periodically to cap incremental round-off.
    if ((sweep & 63) == 63) {
      r = problem.y;
      for (int m = 0; m < M; ++m) r -= fitted[m];
    }
    const double obj_next = current_objective();
    if (opts.record_trace) model.objective_trace.push_back(obj_next);
    const double decrease = obj - obj_next;
    obj = obj_next;
    if (decrease <= opts.tol * std::max(1.0, std::abs(obj)) ||
        max_coef_change < opts.tol) {
      converged = true;
      ++sweep;
      break;
    }
  }

  model.coeffs = std::move(alpha);
  model.iterations = sweep;
  model.converged = converged;
  model.objective = objective_value(problem, model.coeffs, penalty);
  for (int m = 0; m < M; ++m)
    if (!model.coeffs[m].isZero(0.0)) model.active_set.push_back(m);
  return model;
}

MklModel closed_form_l2(const MklProblem& problem, double lambda2) {
  problem.validate();
  if (lambda2 <= 0.0) throw invalid_input("closed_form_l2: lambda2 must be positive");
  const Index n = problem.n();
  const int M = problem.m_count();

  Mat A = Mat::Zero(n, n);
  for (const auto& b : problem.blocks) A += b.matrix;
  A.diagonal().array() += static_cast<double>(n) * lambda2;
  Vec c = Eigen::LLT<Mat>(A).solve(problem.y);

  MklModel model;
  model.penalty = RegPenalty{0.0, lambda2};
  model.coeffs.assign(M, c);
  for (int m = 0; m < M; ++m)
    if (!(problem.blocks[m].matrix * c).isZero(0.0)) model.active_set.push_back(m);
  model.objective = objective_value(problem, model.coeffs, model.penalty);
  model.iterations = 1;
  model.converged = true;
  return model;
}

KktReport kkt_residual(const MklModel& model, const MklProblem& problem,
                       const RegPenalty& penalty, double tolerance) {
  problem.validate();
  if (static_cast<int>(model.coeffs.size()) != problem.m_count())
    throw invalid_input("kkt_residual: model block count mismatch");
  const Index n = problem.n();
  const double inv_n2 = 2.0 / static_cast<double>(n);

  Vec r = problem.y - fitted_values(problem, model.coeffs);

  KktReport report;
  report.tolerance = tolerance;
  for (int m = 0; m < problem.m_count(); ++m) {
    const GramBlock& block = problem.blocks[m];
    const Vec& lam = block.eigenvalues;
    Vec wr = block.eigenvectors.transpose() * r;
    if (model.coeffs[m].isZero(0.0)) {
      double t2 = 0.0;
      for (Index i = 0; i < n; ++i)
        if (lam[i] > 0.0) t2 += lam[i] * wr[i] * wr[i];
      const double viol = std::max(0.0, inv_n2 * std::sqrt(t2) - penalty.lambda1);
      report.max_zero_block_violation = std::max(report.max_zero_block_violation, viol);
    } else {
      Vec wa = block.eigenvectors.transpose() * model.coeffs[m];
      double nu2 = 0.0;
      for (Index i = 0; i < n; ++i)
        if (lam[i] > 0.0) nu2 += lam[i] * wa[i] * wa[i];
      const double nu = std::sqrt(nu2);
      if (nu == 0.0)
        throw inconsistent_model("kkt_residual: nonzero coefficients on block " +
                                 std::to_string(m) + " represent the zero function");
      const double shift = penalty.lambda1 / nu + 2.0 * penalty.lambda2;
      double res2 = 0.0;
      for (Index i = 0; i < n; ++i) {
        if (lam[i] <= 0.0) continue;
        const double s = std::sqrt(lam[i]);
        const double g = -inv_n2 * s * wr[i] + shift * s * wa[i];
        res2 += g * g;
      }
      report.max_active_block_residual =
          std::max(report.max_active_block_residual, std::sqrt(res2));
    }
  }
  report.satisfied = report.max_zero_block_violation <= tolerance &&
                     report.max_active_block_residual <= tolerance;
  return report;
}

}  // namespace mkl
