#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <random>

#include "fixtures.hpp"
#include "saf/error.hpp"
#include "saf/spectra.hpp"

namespace saf {
namespace {

Eigen::MatrixXd random_symmetric(std::int64_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss;
  Eigen::MatrixXd m(n, n);
  for (std::int64_t i = 0; i < n; ++i) {
    for (std::int64_t j = 0; j <= i; ++j) m(i, j) = m(j, i) = gauss(rng);
  }
  return m;
}

MatVec dense_matvec(const Eigen::MatrixXd& m) {
  return [&m](const Eigen::VectorXd& x) -> Eigen::VectorXd { return m * x; };
}

TEST(DenseEigh, IdentityAndDiagonal) {
  const auto id = dense_eigh(Eigen::MatrixXd::Identity(3, 3));
  EXPECT_EQ(id.eigenvalues, Eigen::Vector3d(1, 1, 1));
  EXPECT_TRUE(id.is_full);
  EXPECT_LT(orthonormality_error(id), 1e-15);

  const auto d = dense_eigh(Eigen::Vector3d(3, 1, 2).asDiagonal().toDenseMatrix());
  EXPECT_NEAR(d.eigenvalues[0], 1.0, 1e-15);
  EXPECT_NEAR(d.eigenvalues[1], 2.0, 1e-15);
  EXPECT_NEAR(d.eigenvalues[2], 3.0, 1e-15);
}

TEST(DenseEigh, ReconstructsAndIsDeterministic) {
  const Eigen::MatrixXd m = random_symmetric(80, 3);
  const auto a = dense_eigh(m);
  const auto b = dense_eigh(m);
  EXPECT_EQ(a.eigenvalues, b.eigenvalues);
  EXPECT_EQ(a.eigenvectors, b.eigenvectors);
  const Eigen::MatrixXd rebuilt = a.eigenvectors * a.eigenvalues.asDiagonal() * a.eigenvectors.transpose();
  EXPECT_LT((rebuilt - m).cwiseAbs().maxCoeff(), 1e-6);
  EXPECT_LT(orthonormality_error(a), 1e-8);
  for (Eigen::Index i = 1; i < a.eigenvalues.size(); ++i) {
    EXPECT_LE(a.eigenvalues[i - 1], a.eigenvalues[i]);
  }
}

TEST(DenseEigh, Errors) {
  Eigen::MatrixXd asym = Eigen::MatrixXd::Identity(3, 3);
  asym(0, 1) = 0.5;
  try {
    dense_eigh(asym);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NotSymmetric);
  }
  try {
    dense_eigh(Eigen::MatrixXd::Identity(10, 10), 5);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DimensionTooLarge);
  }
}

TEST(Lanczos, DiagonalBothEnds) {
  const Eigen::MatrixXd m = Eigen::Vector4d(0.1, 0.5, 1.0, 1.9).asDiagonal();
  const auto r = lanczos_extremal(dense_matvec(m), 4, 2, SpectrumEnd::BothEnds, 1);
  ASSERT_EQ(r.basis.rank(), 2);
  EXPECT_NEAR(r.basis.eigenvalues[0], 0.1, 1e-8);
  EXPECT_NEAR(r.basis.eigenvalues[1], 1.9, 1e-8);
}

TEST(Lanczos, IdentityHasEigenvalueOne) {
  const Eigen::MatrixXd m = Eigen::MatrixXd::Identity(30, 30);
  const auto r = lanczos_extremal(dense_matvec(m), 30, 1, SpectrumEnd::Smallest, 4);
  ASSERT_EQ(r.basis.rank(), 1);
  EXPECT_NEAR(r.basis.eigenvalues[0], 1.0, 1e-12);
}

TEST(Lanczos, FullCountMatchesDenseSpectrum) {
  const Graph g = testing::small_sbm(50, 2, 0.2, 0.05, 1, 6);
  const auto l = normalized_laplacian(g);
  const auto dense = dense_eigh(l);
  const auto r = lanczos_extremal(l, 50, SpectrumEnd::Smallest, 2);
  ASSERT_EQ(r.basis.rank(), 50);
  EXPECT_LT((r.basis.eigenvalues - dense.eigenvalues).cwiseAbs().maxCoeff(), 1e-7);
}

TEST(Lanczos, ExtremesOfRandomSymmetricMatrices) {
  for (std::uint64_t seed = 0; seed < 6; ++seed) {
    const std::int64_t n = 100 + 80 * static_cast<std::int64_t>(seed);
    const Eigen::MatrixXd m = random_symmetric(n, seed);
    const auto dense = dense_eigh(m);
    for (auto mode : {SpectrumEnd::Smallest, SpectrumEnd::Largest, SpectrumEnd::BothEnds}) {
      const auto r = lanczos_extremal(dense_matvec(m), n, 6, mode, seed);
      ASSERT_EQ(r.converged, 6) << to_string(mode);
      const auto& got = r.basis.eigenvalues;
      for (int i = 0; i < 6; ++i) {
        double expected;
        if (mode == SpectrumEnd::Smallest) {
          expected = dense.eigenvalues[i];
        } else if (mode == SpectrumEnd::Largest) {
          expected = dense.eigenvalues[n - 6 + i];
        } else {
          expected = i < 3 ? dense.eigenvalues[i] : dense.eigenvalues[n - 6 + i];
        }
        EXPECT_NEAR(got[i], expected, 1e-8) << "seed " << seed << " " << to_string(mode);
      }
    }
  }
}

TEST(Lanczos, BasisInvariantsHold) {
  const Graph g = testing::small_sbm(300, 3, 0.05, 0.01, 1, 9);
  const auto l = normalized_laplacian(g);
  const auto r = lanczos_extremal(l, 10, SpectrumEnd::BothEnds, 3);
  EXPECT_FALSE(r.basis.is_full);
  EXPECT_EQ(r.basis.source_dim, 300);
  EXPECT_LT(orthonormality_error(r.basis), 1e-8);
  EXPECT_LT(max_residual(l, r.basis), 1e-6);
  EXPECT_GE(r.basis.eigenvalues.minCoeff(), -1e-8);
  EXPECT_LE(r.basis.eigenvalues.maxCoeff(), 2.0 + 1e-8);
}

TEST(Lanczos, RecoversRepeatedEigenvalues) {
  // Five disjoint 10-cycles: eigenvalue 0 five times, 1 - cos(2 pi / 10) ten times.
  std::vector<Edge> edges;
  for (std::int64_t c = 0; c < 5; ++c) {
    for (std::int64_t i = 0; i < 10; ++i) edges.emplace_back(10 * c + i, 10 * c + (i + 1) % 10);
  }
  const Graph g = Graph::from_raw_edges(50, edges, {}, {}, 1);
  const auto l = normalized_laplacian(g);
  const double second = 1.0 - std::cos(2.0 * M_PI / 10.0);
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    const auto r = lanczos_extremal(l, 8, SpectrumEnd::Smallest, seed);
    ASSERT_EQ(r.basis.rank(), 8);
    for (int i = 0; i < 5; ++i) EXPECT_NEAR(r.basis.eigenvalues[i], 0.0, 1e-10) << seed;
    for (int i = 5; i < 8; ++i) EXPECT_NEAR(r.basis.eigenvalues[i], second, 1e-10) << seed;
    EXPECT_LT(orthonormality_error(r.basis), 1e-8);
    // Largest end: 2 appears five times (even cycles are bipartite).
    const auto top = lanczos_extremal(l, 5, SpectrumEnd::Largest, seed);
    for (int i = 0; i < 5; ++i) EXPECT_NEAR(top.basis.eigenvalues[i], 2.0, 1e-10) << seed;
  }
}

TEST(Lanczos, RejectsBadArguments) {
  const Eigen::MatrixXd m = Eigen::MatrixXd::Identity(5, 5);
  EXPECT_THROW(lanczos_extremal(dense_matvec(m), 5, 0, SpectrumEnd::Smallest, 0), Error);
  EXPECT_THROW(lanczos_extremal(dense_matvec(m), 5, 6, SpectrumEnd::Smallest, 0), Error);
  try {
    parse_spectrum_end("middle");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InvalidMode);
  }
}

TEST(BasisFile, RoundTripsBitExactly) {
  testing::TempDir dir("basis");
  const auto basis = dense_eigh(normalized_laplacian(testing::small_sbm(40, 2, 0.2, 0.05, 1, 1)));
  write_basis(dir.path() / "basis.bin", basis);
  const auto back = read_basis(dir.path() / "basis.bin");
  EXPECT_EQ(back.eigenvalues, basis.eigenvalues);
  EXPECT_EQ(back.eigenvectors, basis.eigenvectors);
  EXPECT_EQ(back.is_full, basis.is_full);
  EXPECT_EQ(back.source_dim, 40);
  EXPECT_EQ(std::filesystem::file_size(dir.path() / "basis.bin"),
            4u + 4u + 8u + 8u + 1u + 8u * 40u + 8u * 40u * 40u);
}

TEST(BasisFile, ContentHashIsStable) {
  testing::TempDir dir("hash");
  {
    std::ofstream(dir.path() / "a.txt") << "0\t1\n";
    std::ofstream(dir.path() / "b.txt") << "0\t2\n";
  }
  const auto a = content_hash(dir.path() / "a.txt");
  EXPECT_EQ(a.size(), 16u);
  EXPECT_EQ(a, content_hash(dir.path() / "a.txt"));
  EXPECT_NE(a, content_hash(dir.path() / "b.txt"));
}

}  // namespace
}  // namespace saf
