#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <string_view>

#include <Eigen/Dense>

#include "saf/graph.hpp"

namespace saf {

/// m eigenpairs of a symmetric operator, eigenvalues ascending.
struct SpectralBasis {
  Eigen::VectorXd eigenvalues;
  Eigen::MatrixXd eigenvectors;  // source_dim x m, orthonormal columns
  bool is_full = false;
  std::int64_t source_dim = 0;

  std::int64_t rank() const { return eigenvalues.size(); }
};

inline constexpr std::int64_t kDefaultDenseCap = 5000;

/// Full eigendecomposition via Householder tridiagonalization + implicit QL
/// (Eigen::SelfAdjointEigenSolver). Deterministic for identical inputs.
SpectralBasis dense_eigh(const Eigen::MatrixXd& matrix, std::int64_t dense_cap = kDefaultDenseCap);
SpectralBasis dense_eigh(const SymOperator& op, std::int64_t dense_cap = kDefaultDenseCap);

enum class SpectrumEnd { Smallest, Largest, BothEnds };

SpectrumEnd parse_spectrum_end(std::string_view name);
std::string_view to_string(SpectrumEnd mode);

using MatVec = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

struct LanczosOptions {
  double tolerance = 1e-6;  // Ritz residual ||A u - theta u||_2
  int max_restarts = -1;    // -1: 10 * m
  int subspace_dim = -1;    // -1: min(n, max(2m + 10, 24))
};

struct LanczosResult {
  SpectralBasis basis;
  std::int64_t requested = 0;
  std::int64_t converged = 0;
  int restarts = 0;
  std::int64_t matvecs = 0;
};

/// Thick-restart Lanczos with full reorthogonalization for the m extremal
/// eigenpairs of a symmetric operator given only through `apply`.
/// BothEnds takes ceil(m/2) smallest and floor(m/2) largest.
LanczosResult lanczos_extremal(const MatVec& apply, std::int64_t n, std::int64_t m,
                               SpectrumEnd mode, std::uint64_t seed,
                               const LanczosOptions& options = {});

LanczosResult lanczos_extremal(const SymOperator& op, std::int64_t m, SpectrumEnd mode,
                               std::uint64_t seed, const LanczosOptions& options = {});

/// max |U^T U - I|.
double orthonormality_error(const SpectralBasis& basis);
/// max_i ||A u_i - lambda_i u_i||_2.
double max_residual(const SymOperator& op, const SpectralBasis& basis);

// basis.bin: little-endian {"SAFB", u32 version, u64 N, u64 m, u8 is_full},
// m f64 eigenvalues, N*m f64 eigenvectors column-major.
void write_basis(const std::filesystem::path& path, const SpectralBasis& basis);
SpectralBasis read_basis(const std::filesystem::path& path);

/// FNV-1a 64 over the file bytes, as 16 lowercase hex digits.
std::string content_hash(const std::filesystem::path& path);

}  // namespace saf
