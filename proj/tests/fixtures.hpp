#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "saf/dataio.hpp"
#include "saf/graph.hpp"
#include "saf/model.hpp"
#include "saf/spectra.hpp"

namespace saf::testing {

inline Graph small_sbm(std::int64_t n, int classes, double p_in, double p_out, int features,
                       std::uint64_t seed, double signal = 2.0) {
  SbmSpec spec;
  spec.num_nodes = n;
  spec.num_classes = classes;
  spec.p_in = p_in;
  spec.p_out = p_out;
  spec.feature_dim = features;
  spec.feature_signal = signal;
  spec.noise_std = 1.0;
  spec.seed = seed;
  return generate_sbm(spec);
}

inline Graph path_graph(std::int64_t n) {
  std::vector<Edge> edges;
  for (std::int64_t i = 0; i + 1 < n; ++i) edges.emplace_back(i, i + 1);
  std::vector<int> labels(static_cast<std::size_t>(n));
  for (std::int64_t i = 0; i < n; ++i) labels[i] = static_cast<int>(i % 2);
  return Graph(n, edges, labels, Eigen::MatrixXd::Zero(n, 1), 2);
}

inline GraphArtifacts full_artifacts(const Graph& g) {
  GraphArtifacts a;
  a.laplacian = normalized_laplacian(g);
  a.basis = dense_eigh(a.laplacian);
  return a;
}

/// Keeps `m` columns of a full basis: the lowest ceil(m/2) and highest floor(m/2).
inline SpectralBasis truncate_both_ends(const SpectralBasis& full, std::int64_t m) {
  const auto n = full.eigenvalues.size();
  const auto lo = (m + 1) / 2, hi = m / 2;
  SpectralBasis b;
  b.eigenvalues.resize(m);
  b.eigenvectors.resize(n, m);
  for (std::int64_t i = 0; i < lo; ++i) {
    b.eigenvalues[i] = full.eigenvalues[i];
    b.eigenvectors.col(i) = full.eigenvectors.col(i);
  }
  for (std::int64_t i = 0; i < hi; ++i) {
    b.eigenvalues[lo + i] = full.eigenvalues[n - hi + i];
    b.eigenvectors.col(lo + i) = full.eigenvectors.col(n - hi + i);
  }
  b.is_full = false;
  b.source_dim = n;
  return b;
}

inline std::vector<double> random_coefficients(int order, std::mt19937_64& rng, double lo = 0.0,
                                               double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<double> c(static_cast<std::size_t>(order) + 1);
  for (auto& v : c) v = u(rng);
  return c;
}

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("saf_" + tag + "_" + std::to_string(rd()) + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

}  // namespace saf::testing
