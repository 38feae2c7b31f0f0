#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "mkl/types.hpp"

namespace mkl {

enum class KernelFamily { gaussian, polynomial, linear, precomputed };

/// A base kernel. `coordinate_mask` selects the input dimensions the kernel
/// reads (empty = all). `scale` is a positive multiplier folded into every
/// evaluation; normalization picks it so the diagonal stays <= 1.
struct KernelSpec {
  KernelFamily family = KernelFamily::gaussian;
  double width = 1.0;    // gaussian: k(x,x') = scale * exp(-|x-x'|^2 / width^2)
  int degree = 2;        // polynomial: scale * (<x,x'> + offset)^degree
  double offset = 0.0;
  std::vector<int> coordinate_mask;
  double scale = 1.0;
  Mat precomputed;       // raw n x n matrix when family == precomputed

  static KernelSpec gaussian_on(double width, std::vector<int> mask = {}) {
    KernelSpec k;
    k.family = KernelFamily::gaussian;
    k.width = width;
    k.coordinate_mask = std::move(mask);
    return k;
  }
  static KernelSpec linear_on(std::vector<int> mask = {}) {
    KernelSpec k;
    k.family = KernelFamily::linear;
    k.coordinate_mask = std::move(mask);
    return k;
  }
  static KernelSpec from_matrix(Mat m) {
    KernelSpec k;
    k.family = KernelFamily::precomputed;
    k.precomputed = std::move(m);
    return k;
  }
};

/// Normalized Gram matrix of one base kernel on the sample, with its
/// eigendecomposition cached. Eigenvalues are nonincreasing and clamped at 0;
/// eigenvector columns match them. Immutable after construction.
struct GramBlock {
  Mat matrix;
  Vec eigenvalues;
  Mat eigenvectors;
  Index n = 0;

  /// Number of strictly positive eigenvalues.
  Index positive_count() const {
    Index r = 0;
    while (r < eigenvalues.size() && eigenvalues[r] > 0.0) ++r;
    return r;
  }
};

/// A function in one block's span: f(.) = sum_i coeffs[i] * k_m(., x_i).
struct BlockFunction {
  Vec coeffs;
  int block_index = 0;
};

/// Power-law fit of the empirical kernel spectrum: mu_k ~ C k^{-1/s_hat}
/// over eigenvalue ranks [k_lo, k_hi] (1-based, inclusive).
struct SpectrumEstimate {
  double s_hat = 1.0;
  int k_lo = 0;
  int k_hi = 0;
  double r_squared = 0.0;
};

/// Raw kernel evaluations between two sample sets (spec.scale applied,
/// no diagonal normalization). rows index `a`, columns index `b`.
Mat kernel_matrix(const KernelSpec& spec, const Mat& a, const Mat& b);

/// Factor that normalization would fold into spec.scale for this sample:
/// 1/max_i k(x_i,x_i) when that max exceeds 1, otherwise 1.
double normalization_scale(const KernelSpec& spec, const Mat& xs);

/// Normalized Gram block over the sample with cached eigendecomposition.
GramBlock gram(const KernelSpec& spec, const Mat& xs);

/// Fits s_hat from log eigenvalue vs log rank of the empirical operator
/// spectrum (eigenvalues of K/n). Default window drops the top 2 ranks and
/// the tail below 1e-12; requires at least 8 usable eigenvalues.
SpectrumEstimate spectral_decay(const GramBlock& block,
                                std::optional<std::pair<int, int>> fit_range = {});

/// (RKHS norm, empirical L2 norm) of a block function:
/// sqrt(a'Ka) and sqrt(|Ka|^2 / n).
std::pair<double, double> block_norms(const BlockFunction& f, const GramBlock& block);

}  // namespace mkl
