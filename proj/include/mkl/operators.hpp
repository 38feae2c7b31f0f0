#pragma once

#include <map>
#include <optional>
#include <vector>

#include "mkl/problem.hpp"

namespace mkl {

/// Coefficient vectors indexed by block: entry m represents
/// h_m = sum_i c_{m,i} k_m(., x_i).
using CoeffStack = std::map<int, Vec>;

/// Within-group and between-group correlation constants of a block split.
struct IncoherenceReport {
  double kappa_min = 1.0;
  double rho = 0.0;
  std::vector<int> index_set;
  double regularizer_used = 0.0;
};

/// Per-inactive-block irrepresentable scores. The condition holds when every
/// score is strictly below 1.
struct IrrepresentableScore {
  std::map<int, double> per_inactive;
  double max_score = 0.0;
  bool condition_elastic_ok = true;
  std::optional<std::map<int, double>> condition_l1;
};

/// Applies the empirical cross covariance operator: returns the coefficient
/// vector (in the target block's section basis) of sum_{l in h} Shat_{m,l} h_l,
/// i.e. (1/n) sum_l K_l c_l. `target` only selects the reporting basis; the
/// coefficients are the same for every target block.
Vec cov_apply(const std::vector<GramBlock>& blocks, const CoeffStack& h, int target);

/// Solves (Shat_{I,I} + lambda2) c = rhs in coefficient space:
/// lambda2 c_m + (1/n) sum_{l in I} K_l c_l = rhs_m for every m in I.
CoeffStack resolvent_solve(const std::vector<GramBlock>& blocks,
                           const std::vector<int>& index_set, double lambda2,
                           const CoeffStack& rhs);

/// Elastic-net irrepresentable scores of the inactive blocks given the true
/// active set and its block functions (problem.truth required):
/// score_m = | Shat_{m,I} (Shat_{I,I} + lambda2)^{-1} (D + 2 lambda2/lambda1) f*_I |_{H_m}.
/// When with_l1_variant is set, also reports the lambda2 -> 0 limit score with
/// the 2 lambda2/lambda1 term dropped (computed at lambda2 = 1e-8).
IrrepresentableScore irrepresentable_score(const MklProblem& problem,
                                           const std::vector<int>& active,
                                           const RegPenalty& penalty,
                                           bool with_l1_variant = false);

/// Smallest generalized Rayleigh quotient |sum_m f_m|_n^2 / sum_m |f_m|_n^2
/// over the blocks' section spans, with the minimizing coefficient stack.
/// Value clamped to [0, 1].
std::pair<double, CoeffStack> kappa_min(const std::vector<GramBlock>& blocks,
                                        const std::vector<int>& index_set);

/// First canonical correlation between the column spans of the I-blocks and
/// the complement blocks in the (1/n)-weighted inner product, clamped to [0,1].
double rho(const std::vector<GramBlock>& blocks, const std::vector<int>& index_set);

/// Convenience bundle for diagnostics output.
IncoherenceReport incoherence_report(const std::vector<GramBlock>& blocks,
                                     const std::vector<int>& index_set);

}  // namespace mkl
