#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "fixtures.hpp"
#include "saf/error.hpp"
#include "saf/filters.hpp"

namespace saf {
namespace {

SpectralBasis basis_with(std::vector<double> eigenvalues) {
  SpectralBasis b;
  b.eigenvalues = Eigen::Map<Eigen::VectorXd>(eigenvalues.data(), eigenvalues.size());
  b.eigenvectors = Eigen::MatrixXd::Identity(eigenvalues.size(), eigenvalues.size());
  b.is_full = true;
  b.source_dim = static_cast<std::int64_t>(eigenvalues.size());
  return b;
}

TEST(Bernstein, BasisValues) {
  EXPECT_EQ(bernstein_basis(0, 5, 0.0), 1.0);
  double sum = 0.0;
  for (int k = 0; k <= 5; ++k) sum += bernstein_basis(k, 5, 0.3);
  EXPECT_NEAR(sum, 1.0, 1e-15);
  EXPECT_DOUBLE_EQ(bernstein_basis(1, 2, 0.5), 0.5);
  EXPECT_THROW(bernstein_basis(1, 2, 1.5), Error);
  EXPECT_THROW(bernstein_basis(3, 2, 0.5), Error);
}

TEST(Bernstein, BinomialTable) {
  EXPECT_EQ(binomial(10, 3), 120.0);
  EXPECT_EQ(binomial(64, 0), 1.0);
  EXPECT_NEAR(binomial(64, 32) / 1832624140942590534.0, 1.0, 1e-14);
}

TEST(Bernstein, ResponseExamples) {
  const BernsteinFilter flat{std::vector<double>(8, 0.7)};
  for (double lam : {0.0, 0.37, 1.0, 1.6, 2.0}) EXPECT_NEAR(response(flat, lam), 1.0, 1e-15);

  std::vector<double> spike(6, 0.0);
  spike[0] = 1.0;
  EXPECT_EQ(response(BernsteinFilter{spike}, 0.0), 1.0);
  EXPECT_EQ(response(BernsteinFilter{spike}, 2.0), 0.0);

  const BernsteinFilter lin{{2.0, 1.0}};
  for (double lam : {0.0, 0.5, 1.3, 2.0}) EXPECT_NEAR(response(lin, lam), 1.0 - lam / 4.0, 1e-15);
  EXPECT_DOUBLE_EQ(response(lin, 2.0), 0.5);
}

TEST(Bernstein, ErrorsOnBadCoefficients) {
  try {
    response(BernsteinFilter{{0.0, 0.0}}, 1.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::AllZeroCoefficients);
  }
  EXPECT_THROW(response(BernsteinFilter{{1.0, -0.1}}, 1.0), Error);
  EXPECT_THROW(response(BernsteinFilter{{1.0, 1.0}}, 2.5), Error);
}

TEST(Bernstein, MaximumIsBoundedByLargestCoefficient) {
  std::mt19937_64 rng(17);
  for (int draw = 0; draw < 1000; ++draw) {
    const int order = 1 + static_cast<int>(rng() % 16);
    const auto psi = testing::random_coefficients(order, rng, 0.0, 3.0);
    const double bound = *std::max_element(psi.begin(), psi.end());
    double peak = 0.0;
    for (int i = 0; i <= 2000; ++i) {
      const double x = i / 2000.0;
      double s = 0.0;
      for (int k = 0; k <= order; ++k) s += psi[k] * bernstein_basis(k, order, x);
      peak = std::max(peak, s);
    }
    ASSERT_LE(peak, bound + 1e-12) << "draw " << draw;
  }
}

TEST(Bernstein, ResponseIsScaleInvariant) {
  std::mt19937_64 rng(2);
  for (int draw = 0; draw < 50; ++draw) {
    const auto psi = testing::random_coefficients(6, rng, 0.0, 1.0);
    auto scaled = psi;
    for (auto& v : scaled) v *= 4.0;  // a power of two keeps every product exact
    for (double lam : {0.0, 0.3, 1.1, 2.0}) {
      EXPECT_EQ(response(BernsteinFilter{psi}, lam), response(BernsteinFilter{scaled}, lam));
    }
  }
}

TEST(Cheb, ConstantValuesGiveConstantResponse) {
  const ChebInterpFilter c{std::vector<double>(6, 0.4)};
  const double first = cheb_response(c, 0.0).value;
  for (double lam : {0.2, 0.9, 1.5, 2.0}) EXPECT_NEAR(cheb_response(c, lam).value, first, 1e-14);
  EXPECT_NEAR(first, 1.0, 1e-14);
  const ChebInterpFilter ones{std::vector<double>(4, 1.0)};
  EXPECT_NEAR(cheb_response(ones, 0.7).value * cheb_response(ones, 0.7).bound, 1.0, 1e-14);
}

TEST(Cheb, RescaledResponseBoundedOnGrid) {
  std::mt19937_64 rng(5);
  for (int draw = 0; draw < 100; ++draw) {
    const ChebInterpFilter c{testing::random_coefficients(2, rng)};
    for (int i = 0; i <= 999; ++i) {
      EXPECT_LE(std::abs(cheb_response(c, 2.0 * i / 999.0).value), 1.0 + 1e-15);
    }
  }
}

TEST(Cheb, InterpolatesAtNodes) {
  const std::vector<double> gamma{0.2, 0.9, 0.5, 0.1, 0.7};
  const ChebInterpFilter c{gamma};
  const auto nodes = chebyshev_nodes(4);
  for (int j = 0; j <= 4; ++j) {
    const auto r = cheb_response(c, nodes[j]);
    EXPECT_NEAR(r.value * r.bound, gamma[j], 1e-13);
  }
}

TEST(Cheb, BarycentricMatchesSeries) {
  std::mt19937_64 rng(8);
  const ChebInterpFilter c{testing::random_coefficients(7, rng)};
  const auto e = expand(PolyFilter{c});
  for (double lam : {0.0, 0.33, 1.0, 1.77, 2.0}) {
    const double series = basis_values(FilterBasis::Chebyshev, 7, lam).dot(e.weights) / e.scale;
    EXPECT_NEAR(cheb_response(c, lam).value, series, 1e-13);
  }
}

TEST(ResponseOnBasis, Examples) {
  const auto ones = response_on_basis(identity_filter(FilterBasis::Bernstein, 5), basis_with({0.0, 0.4, 2.0}));
  EXPECT_EQ(ones, Eigen::Vector3d(1, 1, 1));

  std::vector<double> spike(4, 0.0);
  spike[0] = 1.0;
  const auto clamped = response_on_basis(BernsteinFilter{spike}, basis_with({0.0, 2.0}), 1e-6);
  EXPECT_EQ(clamped[0], 1.0);
  EXPECT_EQ(clamped[1], 1e-6);

  const auto lin = response_on_basis(BernsteinFilter{{2.0, 1.0}}, basis_with({0.0, 1.0, 2.0}));
  EXPECT_NEAR(lin[0], 1.0, 1e-15);
  EXPECT_NEAR(lin[1], 0.75, 1e-15);
  EXPECT_NEAR(lin[2], 0.5, 1e-15);
}

TEST(ResponseOnBasis, ToleratesRoundoffAtSpectrumEnds) {
  const auto r = response_on_basis(BernsteinFilter{{2.0, 1.0}}, basis_with({-1e-12, 2.0 + 1e-12}));
  EXPECT_NEAR(r[0], 1.0, 1e-12);
  EXPECT_NEAR(r[1], 0.5, 1e-12);
  EXPECT_THROW(response_on_basis(BernsteinFilter{{2.0, 1.0}}, basis_with({-1e-3})), Error);
}

TEST(ApplyFilter, IdentityAndZeroSignal) {
  const Graph g = testing::small_sbm(30, 2, 0.2, 0.05, 1, 2);
  const auto l = normalized_laplacian(g);
  std::mt19937_64 rng(1);
  const Eigen::MatrixXd x = Eigen::MatrixXd::Random(30, 3);
  for (auto basis : {FilterBasis::Bernstein, FilterBasis::Chebyshev}) {
    const auto y = apply_filter_poly(identity_filter(basis, 10), l, x);
    EXPECT_LT((y - x).cwiseAbs().maxCoeff(), 1e-10) << to_string(basis);
    const auto z = apply_filter_poly(identity_filter(basis, 10), l, Eigen::MatrixXd::Zero(30, 3));
    EXPECT_EQ(z.cwiseAbs().maxCoeff(), 0.0);
  }
}

TEST(ApplyFilter, PolynomialPathMatchesSpectralPath) {
  std::mt19937_64 rng(21);
  double worst = 0.0;
  for (int draw = 0; draw < 20; ++draw) {
    const std::int64_t n = 20 + static_cast<std::int64_t>(rng() % 180);
    const Graph g = testing::small_sbm(n, 3, 0.1, 0.02, 1, draw);
    const auto art = testing::full_artifacts(g);
    const int order = 1 + static_cast<int>(rng() % 12);
    const PolyFilter f = (draw % 2) ? PolyFilter{ChebInterpFilter{testing::random_coefficients(order, rng)}}
                                    : PolyFilter{BernsteinFilter{testing::random_coefficients(order, rng)}};
    const Eigen::MatrixXd x = Eigen::MatrixXd::Random(n, 4);
    const auto poly = apply_filter_poly(f, art.laplacian, x);
    const auto spec = apply_filter_spectral(f, art.basis, x);
    worst = std::max(worst, (poly - spec).cwiseAbs().maxCoeff());
  }
  EXPECT_LT(worst, 1e-8);
}

TEST(ApplyFilter, DimensionMismatch) {
  const auto l = normalized_laplacian(testing::path_graph(5));
  try {
    apply_filter_poly(identity_filter(FilterBasis::Bernstein, 2), l, Eigen::MatrixXd::Zero(4, 1));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DimensionMismatch);
  }
}

TEST(FilterBasisNames, ParseAndPrint) {
  EXPECT_EQ(parse_filter_basis("bern"), FilterBasis::Bernstein);
  EXPECT_EQ(parse_filter_basis("cheb"), FilterBasis::Chebyshev);
  EXPECT_EQ(to_string(FilterBasis::Chebyshev), "cheb");
  EXPECT_THROW(parse_filter_basis("jacobi"), Error);
}

TEST(FilterGradient, ChainRuleMatchesFiniteDifferences) {
  // d/dcoeff of sum_k a_k * w_k / scale for a fixed random a.
  std::mt19937_64 rng(3);
  for (auto basis : {FilterBasis::Bernstein, FilterBasis::Chebyshev}) {
    PolyFilter f = identity_filter(basis, 5);
    coefficients_of(f) = testing::random_coefficients(5, rng, 0.2, 1.0);
    const Eigen::VectorXd a = Eigen::VectorXd::Random(6);
    auto objective = [&](const PolyFilter& p) {
      const auto e = expand(p);
      return a.dot(e.weights) / e.scale;
    };
    const auto e = expand(f);
    const Eigen::VectorXd d_w = a / e.scale;
    const double d_s = -a.dot(e.weights) / (e.scale * e.scale);
    PolyFilter grad = identity_filter(basis, 5);
    std::fill(coefficients_of(grad).begin(), coefficients_of(grad).end(), 0.0);
    accumulate_filter_gradient(f, d_w, d_s, grad);
    for (int k = 0; k <= 5; ++k) {
      PolyFilter plus = f, minus = f;
      coefficients_of(plus)[k] += 1e-6;
      coefficients_of(minus)[k] -= 1e-6;
      const double numeric = (objective(plus) - objective(minus)) / 2e-6;
      EXPECT_NEAR(coefficients_of(grad)[k], numeric, 1e-7) << to_string(basis) << " k=" << k;
    }
  }
}

}  // namespace
}  // namespace saf
