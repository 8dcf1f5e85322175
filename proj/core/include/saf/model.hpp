#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "saf/filters.hpp"
#include "saf/graph.hpp"
#include "saf/newgraph.hpp"
#include "saf/spectra.hpp"

namespace saf {

/// Two-layer MLP f(X) = relu(X W1 + b1) W2 + b2 mapping F -> C via H units.
struct MlpParams {
  Eigen::MatrixXd w1;  // F x H
  Eigen::VectorXd b1;  // H
  Eigen::MatrixXd w2;  // H x C
  Eigen::VectorXd b2;  // C
};

/// Per-branch scorers R^C -> R; kappa = sigmoid(Z w + b).
struct AttentionParams {
  Eigen::VectorXd wf;
  double bf = 0.0;
  Eigen::VectorXd wa;
  double ba = 0.0;
};

struct SafParams {
  MlpParams mlp;
  PolyFilter filter;
  AttentionParams attention;
};

/// Uniform fan-in initialization for the MLP and attention maps; the filter
/// starts at the identity response (all coefficients one).
SafParams init_params(std::int64_t num_features, int hidden, int num_classes, FilterBasis basis,
                      int order, std::mt19937_64& rng);
SafParams zeros_like(const SafParams& params);

/// Every learnable tensor as a flat span, in a fixed order.
std::vector<std::span<double>> tensors(SafParams& params);
std::vector<std::span<const double>> tensors(const SafParams& params);
std::int64_t parameter_count(const SafParams& params);
bool all_finite(const SafParams& params);

struct ModelConfig {
  double tau = 0.5;
  double eta = 0.5;
  int layers = 2;  // L
  double epsilon = 0.0;
  double delta = 1e-9;
  double dropout = 0.0;
  double g_floor = kDefaultGFloor;
  bool no_attention = false;
  bool no_spectral = false;
  bool no_spatial = false;
  std::int64_t adapted_cap = kDefaultAdaptedCap;
};

/// Per-graph precomputation shared by every forward pass.
struct GraphArtifacts {
  SymOperator laplacian;
  SpectralBasis basis;
};

Eigen::MatrixXd mlp_forward(const Eigen::MatrixXd& x, const MlpParams& mlp, double dropout,
                            std::mt19937_64* rng, bool train_mode);

/// Z(l) = (1 - eta) Z0 + eta P Z(l-1), l = 1..L.
Eigen::MatrixXd spatial_branch(const Eigen::MatrixXd& z0, const Eigen::MatrixXd& propagation,
                               double eta, int layers);
Eigen::MatrixXd spatial_branch(const Eigen::MatrixXd& z0, const AdaptedGraph& propagation,
                               double eta, int layers);
Eigen::MatrixXd spatial_branch(const Eigen::MatrixXd& z0, const SymOperator& propagation,
                               double eta, int layers);

struct Amalgamation {
  Eigen::MatrixXd y;
  Eigen::VectorXd kappa_f;
  Eigen::VectorXd kappa_a;
};

/// kappa = sigmoid scores, normalized per node by max(kappa_f + kappa_a, delta);
/// Y = diag(kappa_f) Z_f + diag(kappa_a) Z_a.
Amalgamation amalgamate(const Eigen::MatrixXd& z_f, const Eigen::MatrixXd& z_a,
                        const AttentionParams& attention, double delta);

/// Everything the backward pass needs from one forward evaluation.
struct ForwardTape {
  // feature transform
  Eigen::MatrixXd x_in;         // input after dropout
  Eigen::MatrixXd hidden_pre;   // X W1 + b1
  Eigen::MatrixXd hidden_mask;  // dropout scale per hidden activation (1 when off)
  Eigen::MatrixXd hidden;       // relu + dropout
  Eigen::MatrixXd z0;
  // spectral branch
  FilterExpansion expansion;
  std::vector<Eigen::MatrixXd> terms;  // phi_k(L) Z0
  Eigen::MatrixXd z_f;
  // adapted graph
  Eigen::MatrixXd phi;          // m x (K+1) basis values at eigenvalues
  Eigen::VectorXd g_raw;        // unclamped responses
  Eigen::VectorXd g;            // clamped responses
  Eigen::VectorXd excess;       // 1/g - 1
  bool dense_propagation = false;
  Eigen::MatrixXd adapted;      // dense (thresholded) A_new when epsilon > 0
  std::vector<Eigen::MatrixXd> layers;  // Z(0..L)
  Eigen::MatrixXd z_a;
  // amalgamation
  Eigen::VectorXd raw_f;
  Eigen::VectorXd raw_a;
  Eigen::VectorXd kappa_f;
  Eigen::VectorXd kappa_a;
  Eigen::MatrixXd y;
};

struct ForwardResult {
  Eigen::MatrixXd y;
  Eigen::VectorXd kappa_f;
  Eigen::VectorXd kappa_a;
  double kappa_f_mean = 0.0;
  double kappa_a_mean = 0.0;
};

ForwardTape forward_tape(const Eigen::MatrixXd& x, const GraphArtifacts& artifacts,
                         const SafParams& params, const ModelConfig& config, bool train_mode,
                         std::mt19937_64* rng);

ForwardResult forward(const Eigen::MatrixXd& x, const GraphArtifacts& artifacts,
                      const SafParams& params, const ModelConfig& config, bool train_mode,
                      std::mt19937_64* rng = nullptr);

/// The adapted graph the spatial branch uses for these parameters, after
/// thresholding when config.epsilon > 0.
AdaptedGraph adapted_graph_for(const GraphArtifacts& artifacts, const SafParams& params,
                               const ModelConfig& config);

}  // namespace saf
