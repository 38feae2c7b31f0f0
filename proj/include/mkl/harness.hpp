#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mkl/problem.hpp"
#include "mkl/solver.hpp"
#include "mkl/theory.hpp"

namespace mkl {

/// Synthetic problem recipe. Exactly one of {d, beta} must be set: d gives an
/// exact-sparse truth with equal norms c3 on the first d blocks, beta a
/// near-sparse truth with norm law c3 * m^{-beta} on every block.
struct GeneratorConfig {
  int M = 5;
  std::optional<int> d;
  std::optional<double> beta;
  double c3 = 1.0;
  KernelFamily family = KernelFamily::gaussian;
  std::vector<double> widths = {0.25};  // cycled across kernels
  int kernel_dim = 1;                   // coordinates read per kernel
  double overlap = 0.0;                 // fraction of shared coordinates
  double noise_level = 0.1;             // bounded noise half-width L
  int n_train = 200;
  int n_test = 2000;
  int anchors = 10;
  std::uint64_t seed = 0;
  // Adversarial knobs. near_duplicate_last and adversary_union_last keep the
  // last kernel inactive: the former re-reads the first kernel's coordinates
  // with the width scaled by adversary_width_factor, the latter reads the
  // union of all active kernels' coordinates. duplicate_pair instead makes
  // kernel 1 a near-copy of kernel 0 with both active (needs d >= 2), the
  // design where block-l1 selection collapses a correlated active pair.
  bool near_duplicate_last = false;
  bool adversary_union_last = false;
  bool duplicate_pair = false;
  double adversary_width_factor = 1.25;

  void validate() const;
};

/// Generated problem plus everything needed for exact held-out evaluation.
struct SyntheticProblem {
  MklProblem problem;
  std::vector<int> true_active;
  std::vector<double> target_norms;
  std::vector<KernelSpec> kernels;  // scales resolved on the training sample
  Mat test_xs;
  Vec test_f_star;
};

struct RateRow {
  std::string method;
  long n = 0;
  int trial = 0;
  double error = 0.0;
  double lambda1 = 0.0;
  double lambda2 = 0.0;
  bool converged = true;
};

struct RateResult {
  std::vector<long> grid;
  std::vector<RateRow> rows;
  std::map<std::string, std::vector<double>> median_errors;  // per method, per n
  std::map<std::string, double> fitted_slope;
  std::map<std::string, double> slope_stderr;
  std::map<std::string, double> predicted_slope;
  double median_s_hat = 0.0;  // measured at the largest n
  int excluded = 0;
  int total = 0;
};

struct SupportRow {
  long n = 0;
  int trial = 0;
  bool recovered = false;
  double max_irrep_score = 0.0;
};

struct SupportResult {
  std::vector<long> grid;
  std::vector<SupportRow> rows;
  std::vector<double> recovery_frequency;  // per n
  std::vector<double> median_score;        // per n
};

/// Per-method schedule selection for rate experiments.
struct MethodSchedule {
  ScheduleKind kind = ScheduleKind::sparse_small_d;
  ScheduleConstants constants{};
  double t = 1.0;
  ScheduleExtras extras{};
  double s = 0.5;  // spectral decay fed to the schedule
};

struct RateOptions {
  std::map<std::string, MethodSchedule> schedules;  // keyed by method name
  std::map<std::string, double> predicted_slope;    // copied into the result
  FitOptions fit{};
  int threads = 0;  // 0 = MKL_THREADS env or 1
};

struct SupportOptions {
  double c1 = 1.0;  // lambda1 = c1 * n^{-1/3}
  double c2 = 1.0;  // lambda2 = c2 * n^{-1/2}; 0 gives the pure block-l1 path
  FitOptions fit{};
  int threads = 0;
};

/// Deterministic synthetic problem; identical config and seed reproduce it
/// bit for bit.
SyntheticProblem gen_problem(const GeneratorConfig& cfg);

/// Monte-Carlo surrogate of the squared L2 error over the held-out points.
double l2_error(const MklModel& model, const SyntheticProblem& sp);

/// Median held-out error per (method, n) over independent trials with
/// theory-scheduled penalties, plus fitted log-log slopes.
RateResult rate_experiment(const GeneratorConfig& cfg, const std::vector<long>& n_grid,
                           const std::vector<std::string>& methods, int trials,
                           const RateOptions& opts);

/// Recovery frequency of the exact active set under the consistency schedule
/// lambda1 ~ n^{-1/3}, lambda2 ~ n^{-1/2}.
SupportResult support_experiment(const GeneratorConfig& cfg,
                                 const std::vector<long>& n_grid, int trials,
                                 const SupportOptions& opts);

/// Thread cap for experiment trials: MKL_THREADS env var, default 1.
int harness_thread_cap();

/// Per-trial RNG stream derivation (splitmix64 over seed, n, trial).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b);

}  // namespace mkl
