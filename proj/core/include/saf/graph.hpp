#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

namespace saf {

using Edge = std::pair<std::int64_t, std::int64_t>;

/// Undirected, unweighted graph with node labels and features.
///
/// Edges are stored canonically (u < v), sorted and unique. Construction
/// validates indices and labels and drops nothing silently: duplicates and
/// self-loops in the input are errors here; use `Graph::from_raw_edges` to
/// normalize an arbitrary edge list first.
class Graph {
 public:
  Graph() = default;
  Graph(std::int64_t num_nodes, std::vector<Edge> edges, std::vector<int> labels,
        Eigen::MatrixXd features, int num_classes);

  /// Canonicalizes direction, removes duplicates, reversed duplicates and
  /// self-loops, then constructs the graph.
  static Graph from_raw_edges(std::int64_t num_nodes, const std::vector<Edge>& raw,
                              std::vector<int> labels, Eigen::MatrixXd features,
                              int num_classes);

  std::int64_t num_nodes() const { return num_nodes_; }
  std::size_t num_edges() const { return edges_.size(); }
  int num_classes() const { return num_classes_; }
  std::int64_t num_features() const { return features_.cols(); }
  bool has_labels() const { return !labels_.empty(); }

  const std::vector<Edge>& edges() const { return edges_; }
  const std::vector<int>& labels() const { return labels_; }
  const Eigen::MatrixXd& features() const { return features_; }
  const std::vector<std::int64_t>& neighbors(std::int64_t node) const {
    return adjacency_[static_cast<std::size_t>(node)];
  }
  std::int64_t degree(std::int64_t node) const {
    return static_cast<std::int64_t>(neighbors(node).size());
  }

 private:
  std::int64_t num_nodes_ = 0;
  std::vector<Edge> edges_;
  std::vector<int> labels_;
  Eigen::MatrixXd features_;
  int num_classes_ = 0;
  std::vector<std::vector<std::int64_t>> adjacency_;
};

/// Symmetric sparse operator on R^N. Symmetry is exact by construction.
class SymOperator {
 public:
  using Sparse = Eigen::SparseMatrix<double>;

  SymOperator() = default;
  explicit SymOperator(Sparse matrix);

  std::int64_t dim() const { return matrix_.rows(); }
  const Sparse& matrix() const { return matrix_; }
  double entry(std::int64_t i, std::int64_t j) const { return matrix_.coeff(i, j); }

  Eigen::MatrixXd apply(const Eigen::MatrixXd& x) const { return matrix_ * x; }
  Eigen::MatrixXd to_dense() const { return Eigen::MatrixXd(matrix_); }
  bool is_exactly_symmetric() const;

 private:
  Sparse matrix_;
};

/// D^{-1/2} A D^{-1/2}, or the same for A + I when `add_self_loops`.
/// Degree-zero nodes get D^{-1/2} = 0.
SymOperator normalized_adjacency(const Graph& graph, bool add_self_loops);

/// I - D^{-1/2} A D^{-1/2}, with a zero diagonal entry for isolated nodes.
SymOperator normalized_laplacian(const Graph& graph);

double edge_homophily(const Graph& graph);
double class_homophily(const Graph& graph);
double adjusted_homophily(const Graph& graph);

inline constexpr std::int64_t kUnreachable = std::numeric_limits<std::int64_t>::max();

/// BFS hop counts from `source`; unreachable nodes get `kUnreachable`.
std::vector<std::int64_t> geodesic_distances_from(const Graph& graph, std::int64_t source);

}  // namespace saf
