#include "mkl/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <limits>
#include <mutex>
#include <numeric>
#include <random>
#include <thread>

#include "mkl/operators.hpp"

namespace mkl {

namespace {

/// mt19937_64 with a fixed 53-bit uniform converter so streams do not depend
/// on the standard library's distribution internals.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}
  double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

 private:
  std::mt19937_64 eng_;
};

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

double median_of(std::vector<double> v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

/// Runs fn(0..total-1) across up to `threads` workers. Tasks write to
/// preallocated slots, so the schedule never affects results.
void parallel_tasks(int total, int threads, const std::function<void(int)>& fn) {
  threads = std::min(threads, total);
  if (threads <= 1) {
    for (int i = 0; i < total; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  std::exception_ptr error;
  std::mutex error_mu;
  for (int w = 0; w < threads; ++w) {
    pool.emplace_back([&] {
      for (int i = next.fetch_add(1); i < total; i = next.fetch_add(1)) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mu);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

struct OlsFit {
  double slope = 0.0;
  double stderr_ = 0.0;
};

OlsFit loglog_slope(const std::vector<long>& ns, const std::vector<double>& ys) {
  const int m = static_cast<int>(ns.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (int i = 0; i < m; ++i) {
    const double x = std::log(static_cast<double>(ns[i]));
    const double y = std::log(ys[i]);
    sx += x; sy += y; sxx += x * x; sxy += x * y;
  }
  const double vxx = sxx - sx * sx / m;
  OlsFit fit;
  fit.slope = (sxy - sx * sy / m) / vxx;
  double ss_res = 0;
  const double intercept = (sy - fit.slope * sx) / m;
  for (int i = 0; i < m; ++i) {
    const double x = std::log(static_cast<double>(ns[i]));
    const double y = std::log(ys[i]);
    const double e = y - intercept - fit.slope * x;
    ss_res += e * e;
  }
  fit.stderr_ = m > 2 ? std::sqrt(ss_res / (m - 2) / vxx) : 0.0;
  return fit;
}

double support_score(const SyntheticProblem& sp, const RegPenalty& penalty) {
  if (penalty.lambda2 > 0.0) {
    return irrepresentable_score(sp.problem, sp.true_active, penalty).max_score;
  }
  // Pure block-l1 path: report the small-lambda2 limit variant.
  RegPenalty proxy{penalty.lambda1 > 0 ? penalty.lambda1 : 1.0, 1e-8};
  auto sc = irrepresentable_score(sp.problem, sp.true_active, proxy, true);
  double mx = 0.0;
  for (const auto& [m, s] : *sc.condition_l1) mx = std::max(mx, s);
  return mx;
}

}  // namespace

int harness_thread_cap() {
  const char* env = std::getenv("MKL_THREADS");
  if (!env) return 1;
  const long v = std::strtol(env, nullptr, 10);
  return v >= 1 ? static_cast<int>(v) : 1;
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
  return splitmix64(splitmix64(seed ^ splitmix64(a)) ^ b);
}

void GeneratorConfig::validate() const {
  if (M < 1) throw invalid_input("generator: M must be >= 1");
  if (d.has_value() == beta.has_value())
    throw invalid_input("generator: set exactly one of {d, beta}");
  if (d && (*d < 1 || *d > M)) throw invalid_input("generator: d must lie in [1, M]");
  if (beta && !(*beta > 1.0)) throw invalid_input("generator: beta must exceed 1");
  if (c3 <= 0.0) throw invalid_input("generator: c3 must be positive");
  if (widths.empty()) throw invalid_input("generator: need at least one width");
  for (double w : widths)
    if (w <= 0.0) throw invalid_input("generator: widths must be positive");
  if (kernel_dim < 1) throw invalid_input("generator: kernel_dim must be >= 1");
  if (overlap < 0.0 || overlap > 1.0)
    throw invalid_input("generator: overlap must lie in [0, 1]");
  if (noise_level < 0.0) throw invalid_input("generator: noise_level must be >= 0");
  if (n_train < 1) throw invalid_input("generator: n_train must be >= 1");
  if (n_test < 0) throw invalid_input("generator: n_test must be >= 0");
  if (anchors < 1) throw invalid_input("generator: anchors must be >= 1");
  if (family == KernelFamily::precomputed)
    throw invalid_input("generator: precomputed kernels cannot be sampled");
  if (near_duplicate_last || adversary_union_last || duplicate_pair) {
    if ((near_duplicate_last ? 1 : 0) + (adversary_union_last ? 1 : 0) +
            (duplicate_pair ? 1 : 0) > 1)
      throw invalid_input("generator: pick at most one adversary");
    if (duplicate_pair && (!d || *d < 2))
      throw invalid_input("generator: duplicate_pair needs an exact-sparse truth with d >= 2");
    if (M < 2) throw invalid_input("generator: an adversary block needs M >= 2");
    if (beta) throw invalid_input("generator: adversary blocks need an exact-sparse truth");
    if ((near_duplicate_last || adversary_union_last) && d && *d > M - 1)
      throw invalid_input("generator: the adversary keeps the last block inactive");
    if (adversary_width_factor <= 0.0)
      throw invalid_input("generator: adversary_width_factor must be positive");
  }
}

SyntheticProblem gen_problem(const GeneratorConfig& cfg) {
  cfg.validate();
  Rng rng(cfg.seed);
  const int M = cfg.M;
  const Index n = cfg.n_train;

  // Coordinate layout: a shared pool plus private coordinates per kernel.
  const int shared = std::clamp(
      static_cast<int>(std::lround(cfg.overlap * cfg.kernel_dim)), 0, cfg.kernel_dim);
  const int priv = cfg.kernel_dim - shared;
  const int p = std::max(1, shared + M * priv);

  Mat xs(n, p);
  for (Index i = 0; i < n; ++i)
    for (int j = 0; j < p; ++j) xs(i, j) = rng.uniform();
  Mat test_xs(cfg.n_test, p);
  for (Index i = 0; i < cfg.n_test; ++i)
    for (int j = 0; j < p; ++j) test_xs(i, j) = rng.uniform();

  std::vector<KernelSpec> kernels(M);
  for (int m = 0; m < M; ++m) {
    KernelSpec spec;
    spec.family = cfg.family;
    spec.width = cfg.widths[m % cfg.widths.size()];
    spec.coordinate_mask.clear();
    for (int j = 0; j < shared; ++j) spec.coordinate_mask.push_back(j);
    for (int j = 0; j < priv; ++j) spec.coordinate_mask.push_back(shared + m * priv + j);
    kernels[m] = std::move(spec);
  }
  if (cfg.near_duplicate_last) {
    kernels[M - 1].coordinate_mask = kernels[0].coordinate_mask;
    kernels[M - 1].width = kernels[0].width * cfg.adversary_width_factor;
  } else if (cfg.duplicate_pair) {
    kernels[1].coordinate_mask = kernels[0].coordinate_mask;
    kernels[1].width = kernels[0].width * cfg.adversary_width_factor;
  } else if (cfg.adversary_union_last) {
    std::vector<int> mask;
    for (int m = 0; m < (cfg.d ? *cfg.d : 1); ++m)
      for (int c : kernels[m].coordinate_mask) mask.push_back(c);
    std::sort(mask.begin(), mask.end());
    mask.erase(std::unique(mask.begin(), mask.end()), mask.end());
    kernels[M - 1].coordinate_mask = std::move(mask);
    kernels[M - 1].width = kernels[0].width * cfg.adversary_width_factor;
  }
  for (auto& spec : kernels) spec.scale *= normalization_scale(spec, xs);

  std::vector<GramBlock> blocks;
  blocks.reserve(M);
  for (int m = 0; m < M; ++m) {
    blocks.push_back(gram(kernels[m], xs));
    if (blocks.back().matrix.diagonal().maxCoeff() > 1.0 + 1e-12)
      throw numerical_error("generator: normalization failed on block " +
                            std::to_string(m));
  }

  std::vector<int> active;
  std::vector<double> target(M, 0.0);
  if (cfg.d) {
    for (int m = 0; m < *cfg.d; ++m) {
      active.push_back(m);
      target[m] = cfg.c3;
    }
  } else {
    for (int m = 0; m < M; ++m) {
      active.push_back(m);
      target[m] = cfg.c3 * std::pow(static_cast<double>(m + 1), -*cfg.beta);
    }
  }

  const int A = std::min<int>(cfg.anchors, static_cast<int>(n));
  std::vector<Vec> truth(M, Vec::Zero(n));
  for (int m : active) {
    const Mat& K = blocks[m].matrix;
    bool built = false;
    for (int retry = 0; retry < 10 && !built; ++retry) {
      const Index start = (static_cast<Index>(retry) * A) % std::max<Index>(1, n - A + 1);
      Vec theta(A);
      for (int j = 0; j < A; ++j) theta[j] = rng.uniform(-1.0, 1.0);

      // Drop the empirical-mean component so the truth is centered on the
      // training sample.
      Vec col_mean = K.middleCols(start, A).colwise().mean();
      const double g2 = col_mean.squaredNorm();
      if (g2 > 1e-24) theta -= (theta.dot(col_mean) / g2) * col_mean;

      const double norm2 =
          theta.dot(K.block(start, start, A, A) * theta);
      if (norm2 <= 1e-16) continue;
      theta *= target[m] / std::sqrt(norm2);
      truth[m].setZero();
      truth[m].segment(start, A) = theta;
      built = true;
    }
    if (!built)
      throw numerical_error("generator: target norm unreachable on block " +
                            std::to_string(m) + " after 10 anchor retries");
  }

  Vec y = Vec::Zero(n);
  for (int m : active) y += blocks[m].matrix * truth[m];
  const double L = cfg.noise_level;
  for (Index i = 0; i < n; ++i) {
    const double eps = L * rng.uniform(-1.0, 1.0);
    y[i] += eps;
  }

  Vec test_f = Vec::Zero(cfg.n_test);
  if (cfg.n_test > 0)
    for (int m : active)
      test_f += kernel_matrix(kernels[m], test_xs, xs) * truth[m];

  SyntheticProblem sp;
  sp.problem.y = std::move(y);
  sp.problem.xs = std::move(xs);
  sp.problem.blocks = std::move(blocks);
  sp.problem.truth = std::move(truth);
  sp.true_active = std::move(active);
  sp.target_norms = std::move(target);
  sp.kernels = std::move(kernels);
  sp.test_xs = std::move(test_xs);
  sp.test_f_star = std::move(test_f);
  return sp;
}

double l2_error(const MklModel& model, const SyntheticProblem& sp) {
  if (sp.test_xs.rows() == 0) throw invalid_input("l2_error: empty test set");
  if (model.coeffs.size() != sp.kernels.size())
    throw invalid_input("l2_error: model block count mismatch");
  Vec pred = Vec::Zero(sp.test_xs.rows());
  for (std::size_t m = 0; m < model.coeffs.size(); ++m) {
    if (model.coeffs[m].isZero(0.0)) continue;
    pred += kernel_matrix(sp.kernels[m], sp.test_xs, sp.problem.xs) * model.coeffs[m];
  }
  return (pred - sp.test_f_star).squaredNorm() / static_cast<double>(pred.size());
}

RateResult rate_experiment(const GeneratorConfig& cfg, const std::vector<long>& n_grid,
                           const std::vector<std::string>& methods, int trials,
                           const RateOptions& opts) {
  if (n_grid.size() < 4) throw invalid_input("rate_experiment: need >= 4 grid points");
  if (!std::is_sorted(n_grid.begin(), n_grid.end()))
    throw invalid_input("rate_experiment: n_grid must ascend");
  if (trials < 5) throw invalid_input("rate_experiment: need >= 5 trials");
  if (methods.empty()) throw invalid_input("rate_experiment: no methods");
  for (const auto& m : methods)
    if (!opts.schedules.count(m))
      throw invalid_input("rate_experiment: no schedule for method '" + m + "'");

  const int NG = static_cast<int>(n_grid.size());
  const int per_task = static_cast<int>(methods.size());
  const int tasks = NG * trials;

  std::vector<RateRow> rows(static_cast<std::size_t>(tasks) * per_task);
  std::vector<double> s_hats(trials, std::numeric_limits<double>::quiet_NaN());

  const int threads = opts.threads > 0 ? opts.threads : harness_thread_cap();
  parallel_tasks(tasks, threads, [&](int task) {
    const int gi = task / trials;
    const int trial = task % trials;
    const long nv = n_grid[gi];

    GeneratorConfig c = cfg;
    c.n_train = static_cast<int>(nv);
    c.seed = derive_seed(cfg.seed, static_cast<std::uint64_t>(nv),
                         static_cast<std::uint64_t>(trial));
    SyntheticProblem sp = gen_problem(c);

    if (nv == n_grid.back()) {
      std::vector<double> per_block;
      for (int m : sp.true_active) {
        try {
          per_block.push_back(spectral_decay(sp.problem.blocks[m]).s_hat);
        } catch (const insufficient_spectrum&) {
        }
      }
      if (!per_block.empty()) s_hats[trial] = median_of(per_block);
    }

    for (std::size_t k = 0; k < methods.size(); ++k) {
      const MethodSchedule& ms = opts.schedules.at(methods[k]);
      Schedule sch = lambda_schedule(ms.kind, nv, ms.s, cfg.M, ms.t, ms.constants,
                                     ms.extras);
      RegPenalty pen{sch.lambda1, sch.lambda2};
      MklModel model = fit(sp.problem, pen, opts.fit);
      RateRow row;
      row.method = methods[k];
      row.n = nv;
      row.trial = trial;
      row.lambda1 = pen.lambda1;
      row.lambda2 = pen.lambda2;
      row.converged = model.converged;
      row.error = l2_error(model, sp);
      rows[static_cast<std::size_t>(task) * per_task + k] = std::move(row);
    }
  });

  RateResult result;
  result.grid = n_grid;
  result.rows = std::move(rows);
  result.total = static_cast<int>(result.rows.size());
  result.predicted_slope = opts.predicted_slope;
  {
    std::vector<double> vals;
    for (double v : s_hats)
      if (std::isfinite(v)) vals.push_back(v);
    result.median_s_hat = median_of(vals);
  }

  for (const auto& method : methods) {
    std::vector<double> medians;
    for (long nv : n_grid) {
      std::vector<double> errs;
      for (const auto& row : result.rows) {
        if (row.method != method || row.n != nv) continue;
        if (!row.converged) {
          ++result.excluded;
          continue;
        }
        errs.push_back(row.error);
      }
      medians.push_back(median_of(errs));
    }
    result.median_errors[method] = medians;
    OlsFit fit = loglog_slope(n_grid, medians);
    result.fitted_slope[method] = fit.slope;
    result.slope_stderr[method] = fit.stderr_;
  }
  return result;
}

SupportResult support_experiment(const GeneratorConfig& cfg,
                                 const std::vector<long>& n_grid, int trials,
                                 const SupportOptions& opts) {
  if (!cfg.d) throw invalid_input("support_experiment: needs an exact-sparse config");
  if (n_grid.empty()) throw invalid_input("support_experiment: empty n grid");
  if (trials < 1) throw invalid_input("support_experiment: trials must be >= 1");

  const int NG = static_cast<int>(n_grid.size());
  const int tasks = NG * trials;
  std::vector<SupportRow> rows(tasks);

  const int threads = opts.threads > 0 ? opts.threads : harness_thread_cap();
  parallel_tasks(tasks, threads, [&](int task) {
    const int gi = task / trials;
    const int trial = task % trials;
    const long nv = n_grid[gi];

    GeneratorConfig c = cfg;
    c.n_train = static_cast<int>(nv);
    c.seed = derive_seed(cfg.seed, static_cast<std::uint64_t>(nv),
                         static_cast<std::uint64_t>(trial) + 0x5157ULL);
    SyntheticProblem sp = gen_problem(c);

    const double dn = static_cast<double>(nv);
    RegPenalty pen{opts.c1 * std::pow(dn, -1.0 / 3.0),
                   opts.c2 * std::pow(dn, -0.5)};
    MklModel model = fit(sp.problem, pen, opts.fit);

    SupportRow row;
    row.n = nv;
    row.trial = trial;
    row.recovered = model.active_set == sp.true_active;
    row.max_irrep_score = support_score(sp, pen);
    rows[task] = row;
  });

  SupportResult result;
  result.grid = n_grid;
  result.rows = std::move(rows);
  for (int gi = 0; gi < NG; ++gi) {
    int hit = 0;
    std::vector<double> scores;
    for (int t = 0; t < trials; ++t) {
      const SupportRow& row = result.rows[gi * trials + t];
      hit += row.recovered ? 1 : 0;
      scores.push_back(row.max_irrep_score);
    }
    result.recovery_frequency.push_back(static_cast<double>(hit) / trials);
    result.median_score.push_back(median_of(scores));
  }
  return result;
}

}  // namespace mkl
