#include "saf/spectra.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <random>
#include <sstream>
#include <vector>

#include <Eigen/Eigenvalues>

#include "saf/error.hpp"

namespace saf {

static_assert(std::endian::native == std::endian::little,
              "basis.bin I/O assumes a little-endian host");

SpectralBasis dense_eigh(const Eigen::MatrixXd& matrix, std::int64_t dense_cap) {
  const auto n = matrix.rows();
  if (n != matrix.cols()) fail(ErrorCode::NotSymmetric, "matrix is not square");
  if (n > dense_cap) {
    fail(ErrorCode::DimensionTooLarge, "dense eigensolver capped at N = " +
                                           std::to_string(dense_cap) + ", got " +
                                           std::to_string(n));
  }
  const double scale = std::max(1.0, matrix.cwiseAbs().maxCoeff());
  const double asym = (matrix - matrix.transpose()).cwiseAbs().maxCoeff();
  if (!(asym <= 1e-10 * scale)) {
    fail(ErrorCode::NotSymmetric, "matrix asymmetry " + std::to_string(asym));
  }

  SpectralBasis basis;
  basis.source_dim = n;
  basis.is_full = true;
  if (n == 0) return basis;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(matrix, Eigen::ComputeEigenvectors);
  if (solver.info() != Eigen::Success) {
    fail(ErrorCode::NotConverged, "dense eigensolver did not converge");
  }
  basis.eigenvalues = solver.eigenvalues();
  basis.eigenvectors = solver.eigenvectors();
  return basis;
}

SpectralBasis dense_eigh(const SymOperator& op, std::int64_t dense_cap) {
  if (op.dim() > dense_cap) {
    fail(ErrorCode::DimensionTooLarge, "dense eigensolver capped at N = " +
                                           std::to_string(dense_cap) + ", got " +
                                           std::to_string(op.dim()));
  }
  return dense_eigh(op.to_dense(), dense_cap);
}

SpectrumEnd parse_spectrum_end(std::string_view name) {
  if (name == "smallest") return SpectrumEnd::Smallest;
  if (name == "largest") return SpectrumEnd::Largest;
  if (name == "both_ends" || name == "both") return SpectrumEnd::BothEnds;
  fail(ErrorCode::InvalidMode, "unknown spectrum end '" + std::string(name) + "'");
}

std::string_view to_string(SpectrumEnd mode) {
  switch (mode) {
    case SpectrumEnd::Smallest: return "smallest";
    case SpectrumEnd::Largest: return "largest";
    case SpectrumEnd::BothEnds: return "both_ends";
  }
  return "both_ends";
}

namespace {

// Orthogonalizes `w` against the first `cols` columns of `v` twice
// (classical Gram-Schmidt, "twice is enough"); returns the coefficients.
Eigen::VectorXd reorthogonalize(const Eigen::MatrixXd& v, Eigen::Index cols, Eigen::VectorXd& w) {
  Eigen::VectorXd h = Eigen::VectorXd::Zero(cols);
  for (int pass = 0; pass < 2; ++pass) {
    const Eigen::VectorXd c = v.leftCols(cols).transpose() * w;
    w.noalias() -= v.leftCols(cols) * c;
    h += c;
  }
  return h;
}

// Removes the span of the (orthonormal) locked vectors from `x`.
void deflate(const Eigen::MatrixXd& locked, Eigen::VectorXd& x) {
  if (locked.cols() == 0) return;
  for (int pass = 0; pass < 2; ++pass) x.noalias() -= locked * (locked.transpose() * x);
}

Eigen::VectorXd random_unit_orthogonal(const Eigen::MatrixXd& v, Eigen::Index cols,
                                       const Eigen::MatrixXd& locked, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  for (int attempt = 0; attempt < 8; ++attempt) {
    Eigen::VectorXd w(v.rows());
    for (Eigen::Index i = 0; i < w.size(); ++i) w[i] = normal(rng);
    deflate(locked, w);
    reorthogonalize(v, cols, w);
    const double norm = w.norm();
    if (norm > 1e-8) return w / norm;
  }
  fail(ErrorCode::BreakdownNotRecovered,
       "could not find a start vector orthogonal to the current Krylov basis");
}

std::vector<Eigen::Index> wanted_indices(Eigen::Index size, std::int64_t low, std::int64_t high) {
  std::vector<Eigen::Index> idx;
  for (Eigen::Index i = 0; i < std::min<Eigen::Index>(low, size); ++i) idx.push_back(i);
  for (Eigen::Index i = std::max<Eigen::Index>(size - high, 0); i < size; ++i) {
    if (std::find(idx.begin(), idx.end(), i) == idx.end()) idx.push_back(i);
  }
  return idx;
}

using RitzPair = std::pair<double, Eigen::VectorXd>;

// One thick-restart run restricted to the orthogonal complement of `locked`.
// Returns the wanted Ritz pairs whose true residual is below tolerance.
std::vector<RitzPair> lanczos_pass(const MatVec& apply, std::int64_t n, std::int64_t want_low,
                                   std::int64_t want_high, const LanczosOptions& options,
                                   int max_restarts, const Eigen::MatrixXd& locked,
                                   std::mt19937_64& rng, LanczosResult& result) {
  const std::int64_t m = want_low + want_high;
  const Eigen::Index n_free = n - locked.cols();
  const Eigen::Index ncv =
      options.subspace_dim > 0
          ? std::clamp<Eigen::Index>(options.subspace_dim, std::min<Eigen::Index>(m + 1, n_free), n_free)
          : std::min<Eigen::Index>(n_free, std::max<Eigen::Index>(2 * m + 10, 24));

  Eigen::MatrixXd v(n, ncv);
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(ncv, ncv);
  v.col(0) = random_unit_orthogonal(v, 0, locked, rng);

  Eigen::Index kept = 0;
  Eigen::VectorXd residual(n);
  Eigen::VectorXd theta;
  Eigen::MatrixXd ritz;
  std::vector<Eigen::Index> wanted;

  for (int cycle = 0;; ++cycle) {
    double beta_last = 0.0;
    for (Eigen::Index j = kept; j < ncv; ++j) {
      Eigen::VectorXd w = apply(v.col(j));
      ++result.matvecs;
      if (w.size() != n) fail(ErrorCode::DimensionMismatch, "matvec returned wrong length");
      deflate(locked, w);
      const Eigen::VectorXd coeffs = reorthogonalize(v, j + 1, w);
      h.col(j).head(j + 1) = coeffs;
      const double beta = w.norm();
      if (j + 1 < ncv) {
        if (beta <= 1e-12) {
          // Invariant subspace: continue the basis with a fresh direction.
          v.col(j + 1) = random_unit_orthogonal(v, j + 1, locked, rng);
        } else {
          v.col(j + 1) = w / beta;
        }
      } else {
        residual = w;
        beta_last = beta;
      }
    }

    Eigen::MatrixXd projected = h.triangularView<Eigen::Upper>();
    projected.triangularView<Eigen::StrictlyLower>() = projected.transpose();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> small(projected);
    if (small.info() != Eigen::Success) {
      fail(ErrorCode::BreakdownNotRecovered, "projected eigenproblem failed");
    }
    theta = small.eigenvalues();
    ritz = small.eigenvectors();

    wanted = wanted_indices(ncv, want_low, want_high);
    bool all_converged = true;
    for (auto i : wanted) all_converged = all_converged && beta_last * std::abs(ritz(ncv - 1, i)) < options.tolerance;

    result.restarts += cycle > 0 ? 1 : 0;
    if (all_converged || ncv == n_free || cycle >= max_restarts) break;

    // Thick restart: keep the wanted Ritz vectors plus a margin toward the interior.
    const Eigen::Index spare = std::max<Eigen::Index>(0, (ncv - 1) - static_cast<Eigen::Index>(wanted.size()));
    const Eigen::Index extra = spare / 2;
    std::int64_t keep_low = want_low;
    std::int64_t keep_high = want_high;
    if (want_low > 0 && want_high > 0) {
      keep_low += extra / 2;
      keep_high += extra - extra / 2;
    } else if (want_low > 0) {
      keep_low += extra;
    } else {
      keep_high += extra;
    }
    const auto keep = wanted_indices(ncv, keep_low, keep_high);
    kept = static_cast<Eigen::Index>(keep.size());

    Eigen::MatrixXd y(ncv, kept);
    for (Eigen::Index c = 0; c < kept; ++c) y.col(c) = ritz.col(keep[c]);
    const Eigen::MatrixXd new_v = v * y;
    v.leftCols(kept) = new_v;
    h.setZero();
    for (Eigen::Index c = 0; c < kept; ++c) h(c, c) = theta[keep[c]];
    if (beta_last <= 1e-12) {
      v.col(kept) = random_unit_orthogonal(v, kept, locked, rng);
    } else {
      Eigen::VectorXd r = residual / beta_last;
      deflate(locked, r);
      reorthogonalize(v, kept, r);
      v.col(kept) = r / r.norm();
    }
  }

  std::vector<RitzPair> pairs;
  for (auto i : wanted) {
    Eigen::VectorXd u = v * ritz.col(i);
    u.normalize();
    const Eigen::VectorXd au = apply(u);
    ++result.matvecs;
    if ((au - theta[i] * u).norm() < options.tolerance) pairs.emplace_back(theta[i], std::move(u));
  }
  return pairs;
}

// Picks the `low` smallest and `high` largest of locked + found, preferring
// locked pairs on ties. Sets `changed` when a newly found pair is selected.
std::vector<RitzPair> select_extremes(const std::vector<RitzPair>& locked, const std::vector<RitzPair>& found,
                                      std::int64_t low, std::int64_t high, bool& changed) {
  struct Ref {
    double value;
    bool fresh;
    std::size_t index;
  };
  std::vector<Ref> all;
  for (std::size_t i = 0; i < locked.size(); ++i) all.push_back({locked[i].first, false, i});
  for (std::size_t i = 0; i < found.size(); ++i) all.push_back({found[i].first, true, i});
  std::vector<Ref> asc = all, desc = all;
  std::stable_sort(asc.begin(), asc.end(), [](const Ref& a, const Ref& b) {
    return a.value < b.value || (a.value == b.value && !a.fresh && b.fresh);
  });
  std::stable_sort(desc.begin(), desc.end(), [](const Ref& a, const Ref& b) {
    return a.value > b.value || (a.value == b.value && !a.fresh && b.fresh);
  });
  std::vector<Ref> chosen(asc.begin(), asc.begin() + std::min<std::size_t>(low, asc.size()));
  auto taken = [&chosen](const Ref& r) {
    return std::any_of(chosen.begin(), chosen.end(),
                       [&r](const Ref& c) { return c.fresh == r.fresh && c.index == r.index; });
  };
  std::int64_t added = 0;
  for (const auto& r : desc) {
    if (added == high) break;
    if (taken(r)) continue;
    chosen.push_back(r);
    ++added;
  }
  changed = false;
  std::vector<RitzPair> out;
  for (const auto& r : chosen) {
    changed = changed || r.fresh;
    out.push_back(r.fresh ? found[r.index] : locked[r.index]);
  }
  return out;
}

}  // namespace

LanczosResult lanczos_extremal(const MatVec& apply, std::int64_t n, std::int64_t m,
                               SpectrumEnd mode, std::uint64_t seed,
                               const LanczosOptions& options) {
  if (m < 1 || m > n) {
    fail(ErrorCode::InvalidArgument, "Lanczos needs 1 <= m <= n (m = " + std::to_string(m) +
                                         ", n = " + std::to_string(n) + ")");
  }
  std::int64_t want_low = 0;
  std::int64_t want_high = 0;
  switch (mode) {
    case SpectrumEnd::Smallest: want_low = m; break;
    case SpectrumEnd::Largest: want_high = m; break;
    case SpectrumEnd::BothEnds:
      want_low = (m + 1) / 2;
      want_high = m / 2;
      break;
  }
  const int max_restarts = options.max_restarts >= 0 ? options.max_restarts
                                                     : static_cast<int>(10 * m);

  std::mt19937_64 rng(seed);
  LanczosResult result;
  result.requested = m;
  std::vector<RitzPair> pairs =
      lanczos_pass(apply, n, want_low, want_high, options, max_restarts, Eigen::MatrixXd(n, 0), rng, result);
  if (pairs.empty() && result.restarts >= max_restarts) {
    fail(ErrorCode::BreakdownNotRecovered,
         "Lanczos made no converged progress after " + std::to_string(result.restarts) +
             " restarts");
  }

  // A single Krylov sequence holds one copy of each repeated eigenvalue. Lock
  // what converged and rerun on the complement until nothing more extreme appears.
  for (std::int64_t pass = 0; pass < m && static_cast<std::int64_t>(pairs.size()) < n; ++pass) {
    Eigen::MatrixXd locked(n, static_cast<Eigen::Index>(pairs.size()));
    for (std::size_t c = 0; c < pairs.size(); ++c) locked.col(static_cast<Eigen::Index>(c)) = pairs[c].second;
    const std::int64_t free = n - locked.cols();
    const std::int64_t lo = std::min(want_low, free);
    const std::int64_t hi = std::min(want_high, free - lo);
    if (lo + hi == 0) break;
    const auto found = lanczos_pass(apply, n, lo, hi, options, max_restarts, locked, rng, result);
    bool changed = false;
    auto merged = select_extremes(pairs, found, want_low, want_high, changed);
    if (!changed) break;
    pairs = std::move(merged);
  }
  std::sort(pairs.begin(), pairs.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });

  auto& basis = result.basis;
  basis.source_dim = n;
  basis.eigenvalues.resize(static_cast<Eigen::Index>(pairs.size()));
  basis.eigenvectors.resize(n, static_cast<Eigen::Index>(pairs.size()));
  for (std::size_t c = 0; c < pairs.size(); ++c) {
    basis.eigenvalues[c] = pairs[c].first;
    basis.eigenvectors.col(c) = pairs[c].second;
  }
  basis.is_full = static_cast<std::int64_t>(pairs.size()) == n;
  result.converged = static_cast<std::int64_t>(pairs.size());
  return result;
}

LanczosResult lanczos_extremal(const SymOperator& op, std::int64_t m, SpectrumEnd mode,
                               std::uint64_t seed, const LanczosOptions& options) {
  const auto& a = op.matrix();
  return lanczos_extremal([&a](const Eigen::VectorXd& x) -> Eigen::VectorXd { return a * x; },
                          op.dim(), m, mode, seed, options);
}

double orthonormality_error(const SpectralBasis& basis) {
  if (basis.rank() == 0) return 0.0;
  const Eigen::MatrixXd gram = basis.eigenvectors.transpose() * basis.eigenvectors;
  return (gram - Eigen::MatrixXd::Identity(gram.rows(), gram.cols())).cwiseAbs().maxCoeff();
}

double max_residual(const SymOperator& op, const SpectralBasis& basis) {
  double worst = 0.0;
  for (Eigen::Index i = 0; i < basis.rank(); ++i) {
    const Eigen::VectorXd u = basis.eigenvectors.col(i);
    worst = std::max(worst, (op.matrix() * u - basis.eigenvalues[i] * u).norm());
  }
  return worst;
}

namespace {

constexpr char kMagic[4] = {'S', 'A', 'F', 'B'};
constexpr std::uint32_t kBasisVersion = 1;

template <typename T>
void put(std::ostream& out, const T& value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T get(std::istream& in) {
  T value{};
  in.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!in) fail(ErrorCode::ShapeMismatch, "truncated basis file");
  return value;
}

}  // namespace

void write_basis(const std::filesystem::path& path, const SpectralBasis& basis) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::MissingFile, "cannot open " + path.string() + " for writing");
  out.write(kMagic, 4);
  put<std::uint32_t>(out, kBasisVersion);
  put<std::uint64_t>(out, static_cast<std::uint64_t>(basis.source_dim));
  put<std::uint64_t>(out, static_cast<std::uint64_t>(basis.rank()));
  put<std::uint8_t>(out, basis.is_full ? 1 : 0);
  out.write(reinterpret_cast<const char*>(basis.eigenvalues.data()),
            static_cast<std::streamsize>(sizeof(double) * basis.eigenvalues.size()));
  out.write(reinterpret_cast<const char*>(basis.eigenvectors.data()),
            static_cast<std::streamsize>(sizeof(double) * basis.eigenvectors.size()));
  if (!out) fail(ErrorCode::MissingFile, "failed writing " + path.string());
}

SpectralBasis read_basis(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::MissingFile, "cannot open " + path.string());
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0) {
    fail(ErrorCode::ShapeMismatch, path.string() + " is not a basis file");
  }
  if (get<std::uint32_t>(in) != kBasisVersion) {
    fail(ErrorCode::ShapeMismatch, "unsupported basis file version");
  }
  SpectralBasis basis;
  basis.source_dim = static_cast<std::int64_t>(get<std::uint64_t>(in));
  const auto m = static_cast<Eigen::Index>(get<std::uint64_t>(in));
  basis.is_full = get<std::uint8_t>(in) != 0;
  basis.eigenvalues.resize(m);
  basis.eigenvectors.resize(basis.source_dim, m);
  in.read(reinterpret_cast<char*>(basis.eigenvalues.data()),
          static_cast<std::streamsize>(sizeof(double) * m));
  in.read(reinterpret_cast<char*>(basis.eigenvectors.data()),
          static_cast<std::streamsize>(sizeof(double) * basis.eigenvectors.size()));
  if (!in) fail(ErrorCode::ShapeMismatch, "truncated basis file " + path.string());
  return basis;
}

std::string content_hash(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::MissingFile, "cannot open " + path.string());
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  char buffer[1 << 16];
  while (in.read(buffer, sizeof(buffer)) || in.gcount() > 0) {
    for (std::streamsize i = 0; i < in.gcount(); ++i) {
      hash ^= static_cast<unsigned char>(buffer[i]);
      hash *= 0x100000001b3ULL;
    }
  }
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << hash;
  return os.str();
}

}  // namespace saf
