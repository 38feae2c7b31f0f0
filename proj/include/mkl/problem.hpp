#pragma once

#include <optional>
#include <vector>

#include "mkl/kernel.hpp"
#include "mkl/types.hpp"

namespace mkl {

/// Regularizer weights of the estimator: lambda1 scales the sum of block RKHS
/// norms, lambda2 the sum of their squares.
struct RegPenalty {
  double lambda1 = 0.0;
  double lambda2 = 0.0;
};

/// Regression problem over M kernel blocks sharing one sample.
/// `truth` optionally carries the generating block functions (coefficient
/// vectors over the training sections) for synthetic data.
struct MklProblem {
  Vec y;
  std::vector<GramBlock> blocks;
  Mat xs;
  std::optional<std::vector<Vec>> truth;

  Index n() const { return y.size(); }
  int m_count() const { return static_cast<int>(blocks.size()); }

  void validate() const {
    if (blocks.empty()) throw invalid_input("problem: need at least one block");
    if (!y.allFinite()) throw invalid_input("problem: y has non-finite entries");
    for (const auto& b : blocks)
      if (b.n != y.size())
        throw invalid_input("problem: block sample count mismatch");
    if (truth && static_cast<int>(truth->size()) != m_count())
      throw invalid_input("problem: truth must have one coefficient vector per block");
  }
};

/// Fitted model: per-block dual coefficients, the exact active set, and the
/// final objective. Inactive blocks hold exactly-zero vectors.
struct MklModel {
  std::vector<Vec> coeffs;
  std::vector<int> active_set;
  double objective = 0.0;
  int iterations = 0;
  bool converged = false;
  RegPenalty penalty;
  std::vector<double> objective_trace;  // per-sweep values, diagnostics only
};

/// First-order optimality report: dual-norm slack on inactive blocks and
/// stationarity residual on active ones.
struct KktReport {
  double max_zero_block_violation = 0.0;
  double max_active_block_residual = 0.0;
  double tolerance = 0.0;
  bool satisfied = false;
};

/// Objective value of the estimator at the given coefficients.
double objective_value(const MklProblem& problem, const std::vector<Vec>& coeffs,
                       const RegPenalty& penalty);

/// Training-sample evaluations of the combined fit: sum_m K_m alpha_m.
Vec fitted_values(const MklProblem& problem, const std::vector<Vec>& coeffs);

}  // namespace mkl
