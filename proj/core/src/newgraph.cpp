#include "saf/newgraph.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>

#include "saf/error.hpp"

namespace saf {

AdaptedGraph build_adapted_graph(const SpectralBasis& basis, const Eigen::VectorXd& response,
                                 double tau, std::int64_t dense_cap) {
  if (response.size() != basis.rank()) {
    fail(ErrorCode::MisalignedBasis, "response has " + std::to_string(response.size()) +
                                         " values for a rank-" + std::to_string(basis.rank()) +
                                         " basis");
  }
  if (!(tau > 0.0)) fail(ErrorCode::NonPositiveTau, "tau must be positive");
  if (basis.source_dim > dense_cap) {
    fail(ErrorCode::DimensionTooLarge, "adapted graph is dense; N = " +
                                           std::to_string(basis.source_dim) + " exceeds cap " +
                                           std::to_string(dense_cap));
  }
  if (response.size() > 0 && !(response.minCoeff() > 0.0)) {
    fail(ErrorCode::OutOfDomain, "filter response must be positive before inversion");
  }

  const Eigen::VectorXd excess = response.cwiseInverse().array() - 1.0;
  const Eigen::MatrixXd& u = basis.eigenvectors;
  Eigen::MatrixXd correction = (u * excess.asDiagonal()) * u.transpose();
  // Average with the transpose so the result is exactly symmetric.
  correction = 0.5 * (correction + correction.transpose()).eval();

  AdaptedGraph out;
  const auto n = basis.source_dim;
  out.matrix = Eigen::MatrixXd::Identity(n, n) - tau * correction;
  out.tau = tau;
  out.rank = basis.rank();
  return out;
}

AdaptedGraph sparsify(const AdaptedGraph& graph, double epsilon) {
  if (epsilon < 0.0) fail(ErrorCode::NegativeEpsilon, "epsilon must be non-negative");
  AdaptedGraph out = graph;
  out.matrix = graph.matrix.unaryExpr([epsilon](double v) { return std::abs(v) <= epsilon ? 0.0 : v; });
  out.epsilon = std::max(graph.epsilon, epsilon);
  return out;
}

Eigen::MatrixXd neumann_truncation(const Eigen::VectorXd& response, const SpectralBasis& basis,
                                   double tau, int terms) {
  if (!basis.is_full) {
    fail(ErrorCode::PartialBasisUnsupported, "Neumann truncation needs a full eigenbasis");
  }
  if (response.size() != basis.rank()) fail(ErrorCode::MisalignedBasis, "response/basis mismatch");
  if (terms < 1) fail(ErrorCode::InvalidArgument, "Neumann truncation needs T >= 1");

  Eigen::VectorXd series = Eigen::VectorXd::Zero(response.size());
  for (Eigen::Index i = 0; i < response.size(); ++i) {
    const double ratio = 1.0 - response[i];
    if (!(std::abs(ratio) < 1.0)) {
      fail(ErrorCode::OutOfDomain, "Neumann series diverges: |1 - g| >= 1");
    }
    double power = 1.0;
    for (int t = 1; t <= terms; ++t) {
      power *= ratio;
      series[i] += power;
    }
  }
  const Eigen::MatrixXd& u = basis.eigenvectors;
  Eigen::MatrixXd sum = (u * series.asDiagonal()) * u.transpose();
  sum = 0.5 * (sum + sum.transpose()).eval();
  return Eigen::MatrixXd::Identity(basis.source_dim, basis.source_dim) - tau * sum;
}

std::map<std::int64_t, std::int64_t> distance_histogram(const AdaptedGraph& graph,
                                                        const Graph& original, double epsilon) {
  const auto n = original.num_nodes();
  if (graph.matrix.rows() != n) fail(ErrorCode::DimensionMismatch, "adapted graph size mismatch");
  std::map<std::int64_t, std::int64_t> histogram;
  for (std::int64_t i = 0; i < n; ++i) {
    std::vector<std::int64_t> dist;
    for (std::int64_t j = i + 1; j < n; ++j) {
      if (std::abs(graph.matrix(i, j)) <= epsilon) continue;
      if (dist.empty()) dist = geodesic_distances_from(original, i);
      ++histogram[dist[j]];
    }
  }
  return histogram;
}

SignedEdgeStats signed_edge_stats(const AdaptedGraph& graph, const std::vector<int>& labels,
                                  double epsilon) {
  const auto n = graph.matrix.rows();
  if (static_cast<Eigen::Index>(labels.size()) != n) {
    fail(ErrorCode::ShapeMismatch, "label count does not match adapted graph size");
  }
  SignedEdgeStats stats;
  std::int64_t pos_same = 0;
  std::int64_t neg_cross = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double v = graph.matrix(i, j);
      if (std::abs(v) <= epsilon) continue;
      const bool same = labels[i] == labels[j];
      if (v > 0.0) {
        ++stats.pos_count;
        pos_same += same ? 1 : 0;
      } else {
        ++stats.neg_count;
        neg_cross += same ? 0 : 1;
      }
    }
  }
  if (stats.pos_count == 0 && stats.neg_count == 0) {
    fail(ErrorCode::NoSurvivingEdges, "no off-diagonal entry exceeds epsilon");
  }
  if (stats.pos_count > 0) {
    stats.pos_edge_homophily = static_cast<double>(pos_same) / static_cast<double>(stats.pos_count);
  }
  if (stats.neg_count > 0) {
    stats.neg_cross_class_fraction =
        static_cast<double>(neg_cross) / static_cast<double>(stats.neg_count);
  }
  return stats;
}

EquivalenceReport check_equivalence(const SymOperator& laplacian, const SpectralBasis& full_basis,
                                    const PolyFilter& filter, double tau,
                                    const Eigen::MatrixXd& signal, double tolerance,
                                    std::int64_t max_steps) {
  if (!full_basis.is_full) {
    fail(ErrorCode::PartialBasisUnsupported, "equivalence check needs a full eigenbasis");
  }
  if (!(tau > 0.0)) fail(ErrorCode::NonPositiveTau, "tau must be positive");
  if (signal.rows() != laplacian.dim() || full_basis.source_dim != laplacian.dim()) {
    fail(ErrorCode::DimensionMismatch, "signal/operator/basis dimensions disagree");
  }

  EquivalenceReport report;
  report.alpha = tau / (1.0 + tau);
  const Eigen::VectorXd g = response_on_basis(filter, full_basis);
  Eigen::Index worst = 0;
  report.g_min = g.size() ? g.minCoeff(&worst) : 1.0;
  for (Eigen::Index i = 0; i < g.size(); ++i) {
    report.contraction = std::max(report.contraction, std::abs(1.0 - report.alpha / g[i]));
  }
  if (!(report.g_min > report.alpha / 2.0)) {
    std::ostringstream msg;
    msg << "iteration cannot converge: at eigenvalue " << full_basis.eigenvalues[worst] << " g = " << report.g_min
        << " <= alpha/2 = " << report.alpha / 2.0;
    fail(ErrorCode::NotConverged, msg.str());
  }

  const AdaptedGraph adapted = build_adapted_graph(full_basis, g, tau);
  const Eigen::MatrixXd closed_form = apply_filter_poly(filter, laplacian, signal);

  Eigen::MatrixXd z = signal;
  const Eigen::MatrixXd anchor = report.alpha * signal;
  bool converged = false;
  for (std::int64_t step = 1; step <= max_steps; ++step) {
    Eigen::MatrixXd next = anchor + (1.0 - report.alpha) * (adapted.matrix * z);
    const double change = (next - z).cwiseAbs().maxCoeff();
    z = std::move(next);
    report.iterations = step;
    if (change < tolerance) {
      converged = true;
      break;
    }
  }
  if (!converged) {
    fail(ErrorCode::NotConverged, "fixed-point iteration did not settle within " +
                                      std::to_string(max_steps) + " steps");
  }
  report.max_deviation = (z - closed_form).cwiseAbs().maxCoeff();
  return report;
}

}  // namespace saf
