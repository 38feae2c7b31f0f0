#include <doctest.h>

#include <cmath>

#include "mkl/kernel.hpp"
#include "oracles.hpp"

using namespace mkl;

namespace {

GramBlock block_from_spectrum(const Vec& mu) {
  Mat K = mu.asDiagonal();
  return gram(KernelSpec::from_matrix(K), Mat::Zero(mu.size(), 1));
}

}  // namespace

TEST_CASE("gaussian gram has unit diagonal and the 2x2 case solves by hand") {
  Mat xs(2, 1);
  xs << 0.0, 1.0;
  GramBlock b = gram(KernelSpec::gaussian_on(1.0), xs);
  const double e1 = std::exp(-1.0);
  CHECK(b.matrix(0, 0) == doctest::Approx(1.0));
  CHECK(b.matrix(1, 1) == doctest::Approx(1.0));
  CHECK(b.matrix(0, 1) == doctest::Approx(e1));
  // [[1, e^-1], [e^-1, 1]] has eigenvalues 1 +- e^-1.
  CHECK(b.eigenvalues[0] == doctest::Approx(1.0 + e1).epsilon(1e-12));
  CHECK(b.eigenvalues[1] == doctest::Approx(1.0 - e1).epsilon(1e-12));

  std::uint64_t st = 7;
  Mat xr(6, 2);
  for (Index i = 0; i < 6; ++i)
    for (Index j = 0; j < 2; ++j) xr(i, j) = oracle::uniform(st, 0, 1);
  GramBlock br = gram(KernelSpec::gaussian_on(0.5), xr);
  for (Index i = 0; i < 6; ++i) CHECK(br.matrix(i, i) == doctest::Approx(1.0));
}

TEST_CASE("duplicated point makes a singular linear gram, clamped not rejected") {
  Mat xs(3, 1);
  xs << 0.5, 0.5, 2.0;
  GramBlock b = gram(KernelSpec::linear_on(), xs);
  CHECK(b.eigenvalues[b.n - 1] == 0.0);
  CHECK(b.eigenvalues[0] > 0.0);
}

TEST_CASE("gram rejects non-finite inputs and asymmetric precomputed matrices") {
  Mat xs(2, 1);
  xs << 0.0, std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(gram(KernelSpec::gaussian_on(1.0), xs), invalid_input);

  Mat K(2, 2);
  K << 1.0, 0.5, 0.5 + 1e-6, 1.0;
  CHECK_THROWS_AS(gram(KernelSpec::from_matrix(K), Mat::Zero(2, 1)), invalid_input);

  // Asymmetry below tolerance is symmetrized away.
  Mat K2(2, 2);
  K2 << 1.0, 0.5, 0.5 + 1e-12, 1.0;
  GramBlock b = gram(KernelSpec::from_matrix(K2), Mat::Zero(2, 1));
  CHECK(b.matrix(0, 1) == b.matrix(1, 0));
}

TEST_CASE("gram symmetry, PSD clamp, and reconstruction on random inputs") {
  std::uint64_t st = 21;
  Mat xs(12, 3);
  for (Index i = 0; i < 12; ++i)
    for (Index j = 0; j < 3; ++j) xs(i, j) = oracle::uniform(st, 0, 1);

  KernelSpec poly;
  poly.family = KernelFamily::polynomial;
  poly.degree = 3;
  poly.offset = 1.0;
  for (const KernelSpec& spec :
       {KernelSpec::gaussian_on(0.3), KernelSpec::linear_on(), poly}) {
    GramBlock b = gram(spec, xs);
    CHECK((b.matrix - b.matrix.transpose()).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK(b.eigenvalues.minCoeff() >= 0.0);
    CHECK(std::is_sorted(b.eigenvalues.data(), b.eigenvalues.data() + b.n,
                         std::greater<double>()));
    Mat recon = b.eigenvectors * b.eigenvalues.asDiagonal() * b.eigenvectors.transpose();
    const double scale = b.matrix.cwiseAbs().maxCoeff();
    CHECK((recon - b.matrix).cwiseAbs().maxCoeff() <= 1e-8 * scale);
    CHECK(b.matrix.diagonal().maxCoeff() <= 1.0 + 1e-12);
  }
}

TEST_CASE("normalization is idempotent bit for bit") {
  Mat K = 3.7 * oracle::random_low_rank_psd(10, 4, 99);
  GramBlock once = gram(KernelSpec::from_matrix(K), Mat::Zero(10, 1));
  GramBlock twice = gram(KernelSpec::from_matrix(once.matrix), Mat::Zero(10, 1));
  CHECK((once.matrix.array() == twice.matrix.array()).all());
}

TEST_CASE("spectral decay recovers exact power laws") {
  Vec mu(100);
  for (Index k = 0; k < 100; ++k) mu[k] = std::pow(k + 1.0, -2.0);
  SpectrumEstimate est = spectral_decay(block_from_spectrum(mu));
  CHECK(std::abs(est.s_hat - 0.5) <= 1e-9);
  CHECK(est.r_squared >= 1.0 - 1e-9);
  CHECK(est.k_lo == 3);

  for (Index k = 0; k < 100; ++k) mu[k] = std::pow(k + 1.0, -1.0);
  SpectrumEstimate est1 = spectral_decay(block_from_spectrum(mu));
  CHECK(est1.s_hat == doctest::Approx(1.0).epsilon(1e-9));

  // Slower than k^-1 decays clamp at the boundary of (0, 1].
  for (Index k = 0; k < 100; ++k) mu[k] = std::pow(k + 1.0, -0.5);
  CHECK(spectral_decay(block_from_spectrum(mu)).s_hat == 1.0);
}

TEST_CASE("geometric spectra look simple and get simpler down the tail") {
  Vec mu(100);
  for (Index k = 0; k < 100; ++k) mu[k] = std::pow(0.9, k + 1.0);
  SpectrumEstimate tail = spectral_decay(block_from_spectrum(mu), {{20, 90}});
  CHECK(tail.s_hat < 0.3);
  SpectrumEstimate later = spectral_decay(block_from_spectrum(mu), {{50, 90}});
  CHECK(later.s_hat < tail.s_hat);
}

TEST_CASE("spectral decay needs eight usable eigenvalues") {
  Vec mu(10);
  mu.setZero();
  for (Index k = 0; k < 5; ++k) mu[k] = std::pow(2.0, -static_cast<double>(k));
  CHECK_THROWS_AS(spectral_decay(block_from_spectrum(mu)), insufficient_spectrum);
}

TEST_CASE("block norms: identity case and zero function") {
  GramBlock eye = gram(KernelSpec::from_matrix(Mat::Identity(3, 3)), Mat::Zero(3, 1));
  Vec a(3);
  a << 1, 2, 2;
  auto [rkhs, emp] = block_norms(BlockFunction{a, 0}, eye);
  CHECK(rkhs == doctest::Approx(3.0).epsilon(1e-14));
  CHECK(emp == doctest::Approx(std::sqrt(3.0)).epsilon(1e-14));

  auto [zr, ze] = block_norms(BlockFunction{Vec::Zero(3), 0}, eye);
  CHECK(zr == 0.0);
  CHECK(ze == 0.0);

  CHECK_THROWS_AS(block_norms(BlockFunction{Vec::Zero(4), 0}, eye), invalid_input);
}

TEST_CASE("norm chain under a unit-capped diagonal: sup, empirical L2, RKHS") {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const int n = 8 + static_cast<int>(seed % 5);
    Mat K = oracle::random_low_rank_psd(n, 3 + static_cast<int>(seed % 3), 1000 + seed);
    GramBlock b = gram(KernelSpec::from_matrix(K), Mat::Zero(n, 1));
    std::uint64_t st = 77 * seed + 5;
    Vec a(n);
    for (int i = 0; i < n; ++i) a[i] = oracle::uniform(st, -2, 2);
    auto [rkhs, emp] = block_norms(BlockFunction{a, 0}, b);
    CHECK(emp <= rkhs + 1e-10);
    const double sup = (b.matrix * a).cwiseAbs().maxCoeff();
    CHECK(sup <= rkhs + 1e-10);
  }
}
