#include "mkl/kernel.hpp"

#include <lapacke.h>

#include <algorithm>
#include <cmath>

namespace mkl {

namespace {

Mat select_columns(const Mat& xs, const std::vector<int>& mask) {
  if (mask.empty()) return xs;
  Mat out(xs.rows(), static_cast<Index>(mask.size()));
  for (std::size_t j = 0; j < mask.size(); ++j) {
    int c = mask[j];
    if (c < 0 || c >= xs.cols())
      throw invalid_input("kernel coordinate_mask index " + std::to_string(c) +
                          " out of range for " + std::to_string(xs.cols()) + " columns");
    out.col(static_cast<Index>(j)) = xs.col(c);
  }
  return out;
}

extern "C" void openblas_set_num_threads(int);

/// Symmetric eigendecomposition, eigenvalues ascending. LAPACK's
/// divide-and-conquer driver; K is overwritten with eigenvectors.
void dsyevd_inplace(Mat& K, Vec& w) {
  // Trial-level parallelism lives in the harness; keep BLAS single-threaded
  // so runs reproduce bit for bit.
  static const bool pinned = [] {
    openblas_set_num_threads(1);
    return true;
  }();
  (void)pinned;
  const auto n = static_cast<lapack_int>(K.rows());
  w.resize(n);
  lapack_int info =
      LAPACKE_dsyevd(LAPACK_COL_MAJOR, 'V', 'L', n, K.data(), n, w.data());
  if (info != 0)
    throw numerical_error("symmetric eigensolver failed (dsyevd info=" +
                          std::to_string(info) + ")");
}

}  // namespace

Mat kernel_matrix(const KernelSpec& spec, const Mat& a, const Mat& b) {
  if (spec.scale <= 0.0) throw invalid_input("kernel scale must be positive");
  switch (spec.family) {
    case KernelFamily::gaussian: {
      if (spec.width <= 0.0) throw invalid_input("gaussian width must be positive");
      Mat xa = select_columns(a, spec.coordinate_mask);
      Mat xb = select_columns(b, spec.coordinate_mask);
      // |x-y|^2 = |x|^2 + |y|^2 - 2<x,y>
      Vec na = xa.rowwise().squaredNorm();
      Vec nb = xb.rowwise().squaredNorm();
      Mat d2 = (-2.0 * xa * xb.transpose());
      d2.colwise() += na;
      d2.rowwise() += nb.transpose();
      const double inv_w2 = 1.0 / (spec.width * spec.width);
      return spec.scale * (-(d2.array().max(0.0)) * inv_w2).exp().matrix();
    }
    case KernelFamily::polynomial: {
      if (spec.degree < 1) throw invalid_input("polynomial degree must be >= 1");
      if (spec.offset < 0.0) throw invalid_input("polynomial offset must be >= 0");
      Mat xa = select_columns(a, spec.coordinate_mask);
      Mat xb = select_columns(b, spec.coordinate_mask);
      Mat ip = xa * xb.transpose();
      return spec.scale *
             (ip.array() + spec.offset).pow(static_cast<double>(spec.degree)).matrix();
    }
    case KernelFamily::linear: {
      Mat xa = select_columns(a, spec.coordinate_mask);
      Mat xb = select_columns(b, spec.coordinate_mask);
      return spec.scale * (xa * xb.transpose());
    }
    case KernelFamily::precomputed:
      throw invalid_input("precomputed kernels cannot be evaluated on new points");
  }
  throw invalid_input("unknown kernel family");
}

double normalization_scale(const KernelSpec& spec, const Mat& xs) {
  const Index n = xs.rows();
  if (n < 1) throw invalid_input("empty sample");
  double dmax = 0.0;
  if (spec.family == KernelFamily::precomputed) {
    if (spec.precomputed.rows() != n || spec.precomputed.cols() != n)
      throw invalid_input("precomputed kernel size does not match sample count");
    dmax = (spec.scale * spec.precomputed.diagonal()).maxCoeff();
  } else {
    for (Index i = 0; i < n; ++i) {
      Mat xi = xs.row(i);
      double v = kernel_matrix(spec, xi, xi)(0, 0);
      dmax = std::max(dmax, v);
    }
  }
  if (!std::isfinite(dmax)) throw invalid_input("non-finite kernel diagonal");
  return dmax > 1.0 ? 1.0 / dmax : 1.0;
}

GramBlock gram(const KernelSpec& spec, const Mat& xs) {
  const Index n = xs.rows();
  if (n < 1) throw invalid_input("gram: need at least one sample");
  if (!xs.allFinite()) throw invalid_input("gram: sample matrix has non-finite entries");

  Mat K;
  if (spec.family == KernelFamily::precomputed) {
    if (spec.precomputed.rows() != n || spec.precomputed.cols() != n)
      throw invalid_input("precomputed kernel size does not match sample count");
    K = spec.scale * spec.precomputed;
    const double asym = (K - K.transpose()).cwiseAbs().maxCoeff();
    if (asym > 1e-10)
      throw invalid_input("precomputed kernel asymmetric beyond tolerance (" +
                          std::to_string(asym) + ")");
    K = Mat(0.5 * (K + K.transpose().eval()));
  } else {
    K = kernel_matrix(spec, xs, xs);
    K = Mat(0.5 * (K + K.transpose().eval()));  // kill round-off asymmetry
  }
  if (!K.allFinite()) throw invalid_input("gram: non-finite kernel value");

  const double dmax = K.diagonal().maxCoeff();
  if (dmax > 1.0) K *= 1.0 / dmax;

  GramBlock block;
  block.n = n;
  block.matrix = K;

  Mat Q = K;
  Vec w;
  dsyevd_inplace(Q, w);

  // LAPACK returns ascending order; store nonincreasing.
  block.eigenvalues.resize(n);
  block.eigenvectors.resize(n, n);
  for (Index i = 0; i < n; ++i) {
    block.eigenvalues[i] = w[n - 1 - i];
    block.eigenvectors.col(i) = Q.col(n - 1 - i);
  }

  const double lam_max = std::max(block.eigenvalues[0], 0.0);
  const double floor = -1e-10 * std::max(1.0, lam_max);
  for (Index i = 0; i < n; ++i) {
    double& lam = block.eigenvalues[i];
    if (lam < floor)
      throw numerical_error("gram: eigenvalue " + std::to_string(lam) +
                            " below PSD tolerance");
    if (lam < 0.0) lam = 0.0;
  }
  return block;
}

SpectrumEstimate spectral_decay(const GramBlock& block,
                                std::optional<std::pair<int, int>> fit_range) {
  const Index n = block.n;
  // Operator-scale spectrum: eigenvalues of K/n.
  Vec mu = block.eigenvalues / static_cast<double>(n);

  Index usable = 0;
  while (usable < n && mu[usable] > 1e-12) ++usable;
  if (usable < 8)
    throw insufficient_spectrum("spectral_decay: only " + std::to_string(usable) +
                                " eigenvalues above 1e-12, need 8");

  int k_lo = 3;  // 1-based rank; drop the top 2 by default
  int k_hi = static_cast<int>(usable);
  if (fit_range) {
    k_lo = std::max(1, fit_range->first);
    k_hi = std::min(k_hi, fit_range->second);
  }
  if (k_hi - k_lo + 1 < 2)
    throw insufficient_spectrum("spectral_decay: fit window has fewer than 2 points");

  // Least squares of log mu_k on log k.
  const int m = k_hi - k_lo + 1;
  double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
  for (int k = k_lo; k <= k_hi; ++k) {
    const double x = std::log(static_cast<double>(k));
    const double y = std::log(mu[k - 1]);
    sx += x; sy += y; sxx += x * x; sxy += x * y; syy += y * y;
  }
  const double vxx = sxx - sx * sx / m;
  const double vxy = sxy - sx * sy / m;
  const double vyy = syy - sy * sy / m;
  if (vxx <= 0.0)
    throw insufficient_spectrum("spectral_decay: degenerate rank window");
  const double slope = vxy / vxx;

  SpectrumEstimate est;
  est.k_lo = k_lo;
  est.k_hi = k_hi;
  est.s_hat = slope < 0.0 ? std::min(1.0, -1.0 / slope) : 1.0;
  if (vyy > 0.0) {
    const double ss_res = vyy - slope * vxy;
    est.r_squared = std::clamp(1.0 - ss_res / vyy, 0.0, 1.0);
  } else {
    est.r_squared = 1.0;  // flat spectrum fits itself exactly
  }
  return est;
}

std::pair<double, double> block_norms(const BlockFunction& f, const GramBlock& block) {
  if (f.coeffs.size() != block.n)
    throw invalid_input("block_norms: coefficient length " +
                        std::to_string(f.coeffs.size()) + " != n = " +
                        std::to_string(block.n));
  Vec Ka = block.matrix * f.coeffs;
  const double rkhs2 = std::max(0.0, f.coeffs.dot(Ka));
  const double emp2 = Ka.squaredNorm() / static_cast<double>(block.n);
  return {std::sqrt(rkhs2), std::sqrt(emp2)};
}

}  // namespace mkl
