#include "mkl/operators.hpp"

#include <algorithm>
#include <cmath>

namespace mkl {

namespace {

constexpr double kRankRidge = 1e-10;

Index shared_n(const std::vector<GramBlock>& blocks) {
  if (blocks.empty()) throw invalid_input("operators: empty block list");
  const Index n = blocks.front().n;
  for (const auto& b : blocks)
    if (b.n != n) throw invalid_input("operators: blocks disagree on sample count");
  return n;
}

void check_index_set(const std::vector<GramBlock>& blocks, const std::vector<int>& I) {
  for (int m : I)
    if (m < 0 || m >= static_cast<int>(blocks.size()))
      throw invalid_input("operators: block index " + std::to_string(m) +
                          " out of range");
}

/// Orthonormal basis of a block's column space: eigenvector columns whose
/// eigenvalue clears the relative rank threshold.
Mat range_basis(const GramBlock& block, double tol_rel) {
  const double lam_max = block.eigenvalues.size() ? block.eigenvalues[0] : 0.0;
  const double cut = tol_rel * std::max(lam_max, 0.0);
  Index r = 0;
  while (r < block.eigenvalues.size() && block.eigenvalues[r] > cut) ++r;
  return block.eigenvectors.leftCols(r);
}

}  // namespace

Vec cov_apply(const std::vector<GramBlock>& blocks, const CoeffStack& h, int target) {
  const Index n = shared_n(blocks);
  if (target < 0 || target >= static_cast<int>(blocks.size()))
    throw invalid_input("cov_apply: target block out of range");
  Vec out = Vec::Zero(n);
  for (const auto& [l, c] : h) {
    if (l < 0 || l >= static_cast<int>(blocks.size()))
      throw invalid_input("cov_apply: stack index out of range");
    if (c.size() != n) throw invalid_input("cov_apply: coefficient length mismatch");
    out += blocks[l].matrix * c;
  }
  return out / static_cast<double>(n);
}

CoeffStack resolvent_solve(const std::vector<GramBlock>& blocks,
                           const std::vector<int>& index_set, double lambda2,
                           const CoeffStack& rhs) {
  if (lambda2 <= 0.0) throw invalid_input("resolvent_solve: lambda2 must be positive");
  const Index n = shared_n(blocks);
  check_index_set(blocks, index_set);
  if (index_set.empty()) throw invalid_input("resolvent_solve: empty index set");

  // The block equations share the aggregate S = sum_l K_l c_l, so one n x n
  // SPD solve determines everything: (lambda2 I + (1/n) sum K_l) S = sum K_l g_l.
  Mat A = Mat::Zero(n, n);
  Vec rs = Vec::Zero(n);
  for (int m : index_set) {
    auto it = rhs.find(m);
    if (it == rhs.end() || it->second.size() != n)
      throw invalid_input("resolvent_solve: rhs missing block " + std::to_string(m));
    A += blocks[m].matrix;
    rs += blocks[m].matrix * it->second;
  }
  A /= static_cast<double>(n);
  A.diagonal().array() += lambda2;

  Eigen::LLT<Mat> llt(A);
  if (llt.info() != Eigen::Success)
    throw numerical_error("resolvent_solve: factorization failed");
  Vec S = llt.solve(rs);
  S += llt.solve(rs - A * S);  // one refinement pass

  CoeffStack out;
  for (int m : index_set)
    out[m] = (rhs.at(m) - S / static_cast<double>(n)) / lambda2;
  return out;
}

IrrepresentableScore irrepresentable_score(const MklProblem& problem,
                                           const std::vector<int>& active,
                                           const RegPenalty& penalty,
                                           bool with_l1_variant) {
  problem.validate();
  if (!problem.truth)
    throw invalid_input("irrepresentable_score: problem carries no truth");
  if (active.empty()) throw invalid_input("irrepresentable_score: empty active set");
  if (penalty.lambda1 <= 0.0 || penalty.lambda2 <= 0.0)
    throw invalid_input("irrepresentable_score: needs lambda1 > 0 and lambda2 > 0");
  check_index_set(problem.blocks, active);

  const auto& truth = *problem.truth;
  std::map<int, double> truth_norm;
  for (int m : active) {
    const double h2 = truth[m].dot(problem.blocks[m].matrix * truth[m]);
    if (!(h2 > 0.0))
      throw invalid_input("irrepresentable_score: active block " + std::to_string(m) +
                          " has zero-norm truth");
    truth_norm[m] = std::sqrt(h2);
  }

  std::vector<int> inactive;
  for (int m = 0; m < problem.m_count(); ++m)
    if (std::find(active.begin(), active.end(), m) == active.end())
      inactive.push_back(m);

  auto scores_for = [&](double lambda2, double ratio_term) {
    CoeffStack rhs;
    for (int m : active)
      rhs[m] = (1.0 / truth_norm[m] + ratio_term) * truth[m];
    CoeffStack w = resolvent_solve(problem.blocks, active, lambda2, rhs);
    Vec c = cov_apply(problem.blocks, w, active.front());
    std::map<int, double> scores;
    for (int m : inactive) {
      const double q = std::max(0.0, c.dot(problem.blocks[m].matrix * c));
      scores[m] = std::sqrt(q);
    }
    return scores;
  };

  IrrepresentableScore out;
  out.per_inactive =
      scores_for(penalty.lambda2, 2.0 * penalty.lambda2 / penalty.lambda1);
  out.max_score = 0.0;
  for (const auto& [m, s] : out.per_inactive) out.max_score = std::max(out.max_score, s);
  out.condition_elastic_ok = out.max_score < 1.0;
  if (with_l1_variant) out.condition_l1 = scores_for(1e-8, 0.0);
  return out;
}

std::pair<double, CoeffStack> kappa_min(const std::vector<GramBlock>& blocks,
                                        const std::vector<int>& index_set) {
  const Index n = shared_n(blocks);
  check_index_set(blocks, index_set);
  if (index_set.empty()) throw invalid_input("kappa_min: empty index set");

  // Restrict each block to its column space: with v_m = K_m c_m = Q_m+ d_m the
  // quotient becomes |G d|^2 / |d|^2 for G = [Q_1+ ... Q_q+], so kappa is the
  // smallest eigenvalue of G'G.
  std::vector<Mat> bases;
  std::vector<Index> offsets;
  Index total = 0;
  for (int m : index_set) {
    if (!(blocks[m].eigenvalues.size() > 0) || blocks[m].eigenvalues[0] <= 0.0)
      throw invalid_input("kappa_min: block " + std::to_string(m) +
                          " has no empirical mass");
    Mat Q = range_basis(blocks[m], kRankRidge);
    offsets.push_back(total);
    total += Q.cols();
    bases.push_back(std::move(Q));
  }

  Mat G(n, total);
  for (std::size_t j = 0; j < bases.size(); ++j)
    G.middleCols(offsets[j], bases[j].cols()) = bases[j];

  Eigen::SelfAdjointEigenSolver<Mat> es(G.transpose() * G);
  if (es.info() != Eigen::Success)
    throw numerical_error("kappa_min: eigensolver failed");
  const double value = std::clamp(es.eigenvalues()(0), 0.0, 1.0);
  Vec d = es.eigenvectors().col(0);

  // Map the minimizer back to section coefficients: c_m = Q_m+ diag(1/lam) d_m.
  CoeffStack argmin;
  for (std::size_t j = 0; j < bases.size(); ++j) {
    const int m = index_set[j];
    const Index r = bases[j].cols();
    Vec dm = d.segment(offsets[j], r);
    Vec scaled(r);
    for (Index i = 0; i < r; ++i) scaled[i] = dm[i] / blocks[m].eigenvalues[i];
    argmin[m] = bases[j] * scaled;
  }
  return {value, std::move(argmin)};
}

double rho(const std::vector<GramBlock>& blocks, const std::vector<int>& index_set) {
  shared_n(blocks);
  check_index_set(blocks, index_set);
  std::vector<int> complement;
  for (int m = 0; m < static_cast<int>(blocks.size()); ++m)
    if (std::find(index_set.begin(), index_set.end(), m) == index_set.end())
      complement.push_back(m);
  if (index_set.empty() || complement.empty())
    throw invalid_input("rho: both sides of the split must be nonempty");

  // The (1/n) weighting scales both sides identically, so plain Euclidean
  // orthonormal bases give the same correlations.
  auto side_basis = [&](const std::vector<int>& I) {
    Mat cols(blocks.front().n, static_cast<Index>(I.size()) * blocks.front().n);
    Index c = 0;
    for (int m : I) {
      cols.middleCols(c, blocks[m].n) = blocks[m].matrix;
      c += blocks[m].n;
    }
    Eigen::ColPivHouseholderQR<Mat> qr(cols);
    qr.setThreshold(kRankRidge);
    const Index r = qr.rank();
    Mat Q = qr.householderQ() * Mat::Identity(cols.rows(), r);
    return Q;
  };

  Mat qa = side_basis(index_set);
  Mat qb = side_basis(complement);
  if (qa.cols() == 0 || qb.cols() == 0) return 0.0;
  Eigen::JacobiSVD<Mat> svd(qa.transpose() * qb);
  return std::clamp(svd.singularValues()(0), 0.0, 1.0);
}

IncoherenceReport incoherence_report(const std::vector<GramBlock>& blocks,
                                     const std::vector<int>& index_set) {
  IncoherenceReport rep;
  rep.index_set = index_set;
  rep.regularizer_used = kRankRidge;
  rep.kappa_min = kappa_min(blocks, index_set).first;
  const bool full = index_set.size() == blocks.size();
  rep.rho = full ? 0.0 : rho(blocks, index_set);
  return rep;
}

}  // namespace mkl
