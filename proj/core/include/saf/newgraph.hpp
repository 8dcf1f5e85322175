#pragma once

#include <cstdint>
#include <map>
#include <vector>

#include <Eigen/Dense>

#include "saf/filters.hpp"
#include "saf/graph.hpp"
#include "saf/spectra.hpp"

namespace saf {

inline constexpr std::int64_t kDefaultAdaptedCap = 8000;

/// Dense signed graph I - tau (U diag(1/g) U^T - I) induced by a filter,
/// restricted to the span of the basis (identity on its complement).
struct AdaptedGraph {
  Eigen::MatrixXd matrix;
  double tau = 0.0;
  double epsilon = 0.0;
  std::int64_t rank = 0;
};

AdaptedGraph build_adapted_graph(const SpectralBasis& basis, const Eigen::VectorXd& response,
                                 double tau, std::int64_t dense_cap = kDefaultAdaptedCap);

/// Zeroes every entry with |value| <= epsilon, diagonal included.
AdaptedGraph sparsify(const AdaptedGraph& graph, double epsilon);

/// I - tau * sum_{t=1..T} (I - g(L))^t, evaluated on a full basis.
Eigen::MatrixXd neumann_truncation(const Eigen::VectorXd& response, const SpectralBasis& basis,
                                   double tau, int terms);

/// Hop-distance (in `original`) histogram over unordered pairs i < j with
/// |A_ij| > epsilon. Disconnected pairs land in the kUnreachable bucket.
std::map<std::int64_t, std::int64_t> distance_histogram(const AdaptedGraph& graph,
                                                        const Graph& original, double epsilon);

struct SignedEdgeStats {
  double pos_edge_homophily = 0.0;        // same-label share of positive entries
  double neg_cross_class_fraction = 0.0;  // cross-label share of negative entries
  std::int64_t pos_count = 0;
  std::int64_t neg_count = 0;
};

SignedEdgeStats signed_edge_stats(const AdaptedGraph& graph, const std::vector<int>& labels,
                                  double epsilon);

struct EquivalenceReport {
  double max_deviation = 0.0;
  std::int64_t iterations = 0;
  double alpha = 0.0;
  double g_min = 0.0;
  double contraction = 0.0;  // max_i |1 - alpha / g_i|
};

/// Runs Z <- alpha X + (1 - alpha) A_new Z (alpha = tau / (1 + tau)) from
/// Z = X until successive iterates differ by < `tolerance` (max-entry), and
/// compares the fixed point against ghat(L) X evaluated by polynomial
/// recurrence. Throws NotConverged if g_min <= alpha / 2 or the step budget
/// runs out.
EquivalenceReport check_equivalence(const SymOperator& laplacian, const SpectralBasis& full_basis,
                                    const PolyFilter& filter, double tau,
                                    const Eigen::MatrixXd& signal, double tolerance = 1e-10,
                                    std::int64_t max_steps = 10000);

}  // namespace saf
