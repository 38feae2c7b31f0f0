#pragma once

#include <optional>

#include "mkl/problem.hpp"

namespace mkl {

struct FitOptions {
  int max_iter = 10000;   // block-coordinate sweeps
  double tol = 1e-10;
  std::optional<MklModel> init;        // warm start
  bool allow_unpenalized = false;      // permit lambda1 = lambda2 = 0
  bool record_trace = false;
};

/// Exact minimizer of 0.5|u - v|^2 + step*(lambda1*|u| + lambda2*|u|^2)
/// over u, where |.| is the Euclidean norm. Total function; v = 0 maps to 0.
Vec prox_group_elastic(const Vec& v, double step, const RegPenalty& penalty);

/// Exact minimizer over alpha of
///   (1/n)|residual - K alpha|^2 + lambda1 sqrt(alpha'K alpha) + lambda2 alpha'K alpha
/// for one block, solved in the block's eigenbasis. `residual` is the partial
/// residual y - sum_{l != m} K_l alpha_l. Coefficients along null eigenvalues
/// are pinned to 0.
Vec block_update(const GramBlock& block, const Vec& residual, const RegPenalty& penalty);

/// Dual-norm statistic of the block zero test: alpha_m = 0 is optimal iff
/// |(2/n) K_m^{1/2} residual| <= lambda1.
double zero_test_norm(const GramBlock& block, const Vec& residual);

/// Cyclic exact block coordinate descent. Stops when the relative objective
/// decrease or the largest blockwise coefficient change falls below tol, or
/// after max_iter sweeps (converged = false).
MklModel fit(const MklProblem& problem, const RegPenalty& penalty,
             const FitOptions& opts = {});

/// Closed-form solution for lambda1 = 0: every block shares the coefficient
/// vector c = (sum_l K_l + n*lambda2*I)^{-1} y.
MklModel closed_form_l2(const MklProblem& problem, double lambda2);

/// First-order optimality residuals of a model at the given penalty.
KktReport kkt_residual(const MklModel& model, const MklProblem& problem,
                       const RegPenalty& penalty, double tolerance = 1e-6);

}  // namespace mkl
