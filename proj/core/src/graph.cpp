#include "saf/graph.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <string>

#include "saf/error.hpp"

namespace saf {

Graph::Graph(std::int64_t num_nodes, std::vector<Edge> edges, std::vector<int> labels,
             Eigen::MatrixXd features, int num_classes)
    : num_nodes_(num_nodes),
      edges_(std::move(edges)),
      labels_(std::move(labels)),
      features_(std::move(features)),
      num_classes_(num_classes) {
  if (num_nodes_ < 0) fail(ErrorCode::InvalidArgument, "negative node count");
  if (features_.rows() != num_nodes_ && !(features_.size() == 0)) {
    fail(ErrorCode::ShapeMismatch, "feature matrix has " + std::to_string(features_.rows()) +
                                       " rows, expected " + std::to_string(num_nodes_));
  }
  if (features_.size() == 0) features_.resize(num_nodes_, 0);
  if (!labels_.empty()) {
    if (static_cast<std::int64_t>(labels_.size()) != num_nodes_) {
      fail(ErrorCode::ShapeMismatch, "label count does not match node count");
    }
    for (int y : labels_) {
      if (y < 0 || y >= num_classes_) {
        fail(ErrorCode::BadLabel, "label " + std::to_string(y) + " outside [0, " +
                                      std::to_string(num_classes_) + ")");
      }
    }
  }

  for (auto& [u, v] : edges_) {
    if (u < 0 || v < 0 || u >= num_nodes_ || v >= num_nodes_) {
      fail(ErrorCode::ShapeMismatch, "edge (" + std::to_string(u) + ", " + std::to_string(v) +
                                         ") references a node outside [0, N)");
    }
    if (u == v) fail(ErrorCode::InvalidArgument, "self-loop at node " + std::to_string(u));
    if (u > v) std::swap(u, v);
  }
  std::sort(edges_.begin(), edges_.end());
  if (std::adjacent_find(edges_.begin(), edges_.end()) != edges_.end()) {
    fail(ErrorCode::InvalidArgument, "duplicate edge in edge list");
  }

  adjacency_.assign(static_cast<std::size_t>(num_nodes_), {});
  for (const auto& [u, v] : edges_) {
    adjacency_[static_cast<std::size_t>(u)].push_back(v);
    adjacency_[static_cast<std::size_t>(v)].push_back(u);
  }
  for (auto& list : adjacency_) std::sort(list.begin(), list.end());
}

Graph Graph::from_raw_edges(std::int64_t num_nodes, const std::vector<Edge>& raw,
                            std::vector<int> labels, Eigen::MatrixXd features,
                            int num_classes) {
  std::vector<Edge> edges;
  edges.reserve(raw.size());
  for (auto [u, v] : raw) {
    if (u == v) continue;
    if (u > v) std::swap(u, v);
    edges.emplace_back(u, v);
  }
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  return Graph(num_nodes, std::move(edges), std::move(labels), std::move(features),
               num_classes);
}

SymOperator::SymOperator(Sparse matrix) : matrix_(std::move(matrix)) {
  if (matrix_.rows() != matrix_.cols()) {
    fail(ErrorCode::DimensionMismatch, "symmetric operator must be square");
  }
  matrix_.makeCompressed();
}

bool SymOperator::is_exactly_symmetric() const {
  for (int k = 0; k < matrix_.outerSize(); ++k) {
    for (Sparse::InnerIterator it(matrix_, k); it; ++it) {
      if (matrix_.coeff(it.col(), it.row()) != it.value()) return false;
    }
  }
  return true;
}

namespace {

std::vector<double> inverse_sqrt_degrees(const Graph& graph, bool self_loops) {
  std::vector<double> out(static_cast<std::size_t>(graph.num_nodes()));
  for (std::int64_t i = 0; i < graph.num_nodes(); ++i) {
    const auto d = static_cast<double>(graph.degree(i) + (self_loops ? 1 : 0));
    out[static_cast<std::size_t>(i)] = d > 0.0 ? 1.0 / std::sqrt(d) : 0.0;
  }
  return out;
}

}  // namespace

SymOperator normalized_adjacency(const Graph& graph, bool add_self_loops) {
  const auto n = graph.num_nodes();
  const auto dinv = inverse_sqrt_degrees(graph, add_self_loops);
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(2 * graph.num_edges() + (add_self_loops ? n : 0));
  for (const auto& [u, v] : graph.edges()) {
    // Same product in both orientations keeps the matrix bit-symmetric.
    const double w = dinv[u] * dinv[v];
    triplets.emplace_back(u, v, w);
    triplets.emplace_back(v, u, w);
  }
  if (add_self_loops) {
    for (std::int64_t i = 0; i < n; ++i) triplets.emplace_back(i, i, dinv[i] * dinv[i]);
  }
  SymOperator::Sparse m(n, n);
  m.setFromTriplets(triplets.begin(), triplets.end());
  return SymOperator(std::move(m));
}

SymOperator normalized_laplacian(const Graph& graph) {
  const auto n = graph.num_nodes();
  const auto dinv = inverse_sqrt_degrees(graph, false);
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(2 * graph.num_edges() + n);
  for (const auto& [u, v] : graph.edges()) {
    const double w = -(dinv[u] * dinv[v]);
    triplets.emplace_back(u, v, w);
    triplets.emplace_back(v, u, w);
  }
  for (std::int64_t i = 0; i < n; ++i) {
    if (graph.degree(i) > 0) triplets.emplace_back(i, i, 1.0);
  }
  SymOperator::Sparse m(n, n);
  m.setFromTriplets(triplets.begin(), triplets.end());
  return SymOperator(std::move(m));
}

double edge_homophily(const Graph& graph) {
  if (!graph.has_labels()) fail(ErrorCode::BadLabel, "graph has no labels");
  if (graph.num_edges() == 0) fail(ErrorCode::EmptyEdgeSet, "edge homophily of an empty edge set");
  const auto& y = graph.labels();
  std::size_t same = 0;
  for (const auto& [u, v] : graph.edges()) same += (y[u] == y[v]) ? 1 : 0;
  return static_cast<double>(same) / static_cast<double>(graph.num_edges());
}

double class_homophily(const Graph& graph) {
  if (!graph.has_labels()) fail(ErrorCode::BadLabel, "graph has no labels");
  const int c = graph.num_classes();
  if (c < 2) fail(ErrorCode::DegenerateLabels, "class homophily needs at least two classes");
  const auto& y = graph.labels();
  std::vector<double> same(c, 0.0), degree(c, 0.0), count(c, 0.0);
  for (std::int64_t v = 0; v < graph.num_nodes(); ++v) {
    const int yv = y[v];
    count[yv] += 1.0;
    degree[yv] += static_cast<double>(graph.degree(v));
    for (auto u : graph.neighbors(v)) same[yv] += (y[u] == yv) ? 1.0 : 0.0;
  }
  const double n = static_cast<double>(graph.num_nodes());
  double total = 0.0;
  for (int k = 0; k < c; ++k) {
    if (count[k] == 0.0) {
      fail(ErrorCode::DegenerateLabels, "class " + std::to_string(k) + " has no nodes");
    }
    // A class whose nodes carry no edges contributes h_c = 0.
    const double h = degree[k] > 0.0 ? same[k] / degree[k] : 0.0;
    total += std::max(0.0, h - count[k] / n);
  }
  return total / static_cast<double>(c - 1);
}

double adjusted_homophily(const Graph& graph) {
  const double h_edge = edge_homophily(graph);
  const auto& y = graph.labels();
  std::vector<double> class_degree(graph.num_classes(), 0.0);
  for (std::int64_t v = 0; v < graph.num_nodes(); ++v) {
    class_degree[y[v]] += static_cast<double>(graph.degree(v));
  }
  const double two_m = 2.0 * static_cast<double>(graph.num_edges());
  double p = 0.0;
  for (double d : class_degree) p += (d / two_m) * (d / two_m);
  if (1.0 - p <= 0.0) {
    fail(ErrorCode::DegenerateLabels, "adjusted homophily undefined: a single class carries all degree");
  }
  return (h_edge - p) / (1.0 - p);
}

std::vector<std::int64_t> geodesic_distances_from(const Graph& graph, std::int64_t source) {
  if (source < 0 || source >= graph.num_nodes()) {
    fail(ErrorCode::InvalidArgument, "BFS source out of range");
  }
  std::vector<std::int64_t> dist(static_cast<std::size_t>(graph.num_nodes()), kUnreachable);
  std::queue<std::int64_t> frontier;
  dist[source] = 0;
  frontier.push(source);
  while (!frontier.empty()) {
    const auto v = frontier.front();
    frontier.pop();
    for (auto u : graph.neighbors(v)) {
      if (dist[u] == kUnreachable) {
        dist[u] = dist[v] + 1;
        frontier.push(u);
      }
    }
  }
  return dist;
}

}  // namespace saf
