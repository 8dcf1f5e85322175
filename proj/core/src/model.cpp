#include "saf/model.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>

#include "saf/error.hpp"

namespace saf {

namespace {

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

Eigen::MatrixXd uniform_matrix(Eigen::Index rows, Eigen::Index cols, double bound,
                               std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(-bound, bound);
  Eigen::MatrixXd m(rows, cols);
  // Fill column-major so the draw order is independent of Eigen internals.
  for (Eigen::Index c = 0; c < cols; ++c) {
    for (Eigen::Index r = 0; r < rows; ++r) m(r, c) = dist(rng);
  }
  return m;
}

Eigen::MatrixXd dropout_mask(Eigen::Index rows, Eigen::Index cols, double rate,
                             std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(0.0, 1.0);
  const double keep = 1.0 - rate;
  Eigen::MatrixXd mask(rows, cols);
  for (Eigen::Index c = 0; c < cols; ++c) {
    for (Eigen::Index r = 0; r < rows; ++r) mask(r, c) = dist(rng) < keep ? 1.0 / keep : 0.0;
  }
  return mask;
}

void check_mlp_shapes(const Eigen::MatrixXd& x, const MlpParams& mlp) {
  if (x.cols() != mlp.w1.rows() || mlp.b1.size() != mlp.w1.cols() ||
      mlp.w2.rows() != mlp.w1.cols() || mlp.b2.size() != mlp.w2.cols()) {
    fail(ErrorCode::ShapeMismatch, "MLP parameter shapes do not match input with " +
                                       std::to_string(x.cols()) + " features");
  }
}

Eigen::MatrixXd run_recurrence(const Eigen::MatrixXd& z0,
                               const std::function<Eigen::MatrixXd(const Eigen::MatrixXd&)>& apply,
                               double eta, int layers, std::vector<Eigen::MatrixXd>* trace) {
  if (!(eta >= 0.0 && eta <= 1.0)) fail(ErrorCode::InvalidArgument, "eta must lie in [0, 1]");
  if (layers < 0) fail(ErrorCode::InvalidArgument, "layer count must be non-negative");
  Eigen::MatrixXd z = z0;
  if (trace) trace->push_back(z);
  for (int l = 0; l < layers; ++l) {
    z = (1.0 - eta) * z0 + eta * apply(z);
    if (trace) trace->push_back(z);
  }
  return z;
}

}  // namespace

SafParams init_params(std::int64_t num_features, int hidden, int num_classes, FilterBasis basis,
                      int order, std::mt19937_64& rng) {
  if (num_features < 1 || hidden < 1 || num_classes < 1) {
    fail(ErrorCode::ShapeMismatch, "model dimensions must be positive");
  }
  SafParams p;
  const double b_in = 1.0 / std::sqrt(static_cast<double>(num_features));
  const double b_hidden = 1.0 / std::sqrt(static_cast<double>(hidden));
  const double b_class = 1.0 / std::sqrt(static_cast<double>(num_classes));
  p.mlp.w1 = uniform_matrix(num_features, hidden, b_in, rng);
  p.mlp.b1 = uniform_matrix(hidden, 1, b_in, rng);
  p.mlp.w2 = uniform_matrix(hidden, num_classes, b_hidden, rng);
  p.mlp.b2 = uniform_matrix(num_classes, 1, b_hidden, rng);
  p.filter = identity_filter(basis, order);
  p.attention.wf = uniform_matrix(num_classes, 1, b_class, rng);
  p.attention.bf = uniform_matrix(1, 1, b_class, rng)(0, 0);
  p.attention.wa = uniform_matrix(num_classes, 1, b_class, rng);
  p.attention.ba = uniform_matrix(1, 1, b_class, rng)(0, 0);
  return p;
}

SafParams zeros_like(const SafParams& params) {
  SafParams z = params;
  for (auto t : tensors(z)) std::fill(t.begin(), t.end(), 0.0);
  return z;
}

std::vector<std::span<double>> tensors(SafParams& p) {
  auto& coeffs = coefficients_of(p.filter);
  return {
      {p.mlp.w1.data(), static_cast<std::size_t>(p.mlp.w1.size())},
      {p.mlp.b1.data(), static_cast<std::size_t>(p.mlp.b1.size())},
      {p.mlp.w2.data(), static_cast<std::size_t>(p.mlp.w2.size())},
      {p.mlp.b2.data(), static_cast<std::size_t>(p.mlp.b2.size())},
      {coeffs.data(), coeffs.size()},
      {p.attention.wf.data(), static_cast<std::size_t>(p.attention.wf.size())},
      {&p.attention.bf, 1},
      {p.attention.wa.data(), static_cast<std::size_t>(p.attention.wa.size())},
      {&p.attention.ba, 1},
  };
}

std::vector<std::span<const double>> tensors(const SafParams& params) {
  auto spans = tensors(const_cast<SafParams&>(params));
  return {spans.begin(), spans.end()};
}

std::int64_t parameter_count(const SafParams& params) {
  std::int64_t n = 0;
  for (auto t : tensors(params)) n += static_cast<std::int64_t>(t.size());
  return n;
}

bool all_finite(const SafParams& params) {
  for (auto t : tensors(params)) {
    for (double v : t) {
      if (!std::isfinite(v)) return false;
    }
  }
  return true;
}

Eigen::MatrixXd mlp_forward(const Eigen::MatrixXd& x, const MlpParams& mlp, double dropout,
                            std::mt19937_64* rng, bool train_mode) {
  check_mlp_shapes(x, mlp);
  const bool drop = train_mode && dropout > 0.0;
  if (drop && !rng) fail(ErrorCode::InvalidArgument, "dropout in train mode needs an RNG");
  Eigen::MatrixXd input = x;
  if (drop) input = input.cwiseProduct(dropout_mask(x.rows(), x.cols(), dropout, *rng));
  Eigen::MatrixXd h = ((input * mlp.w1).rowwise() + mlp.b1.transpose()).cwiseMax(0.0);
  if (drop) h = h.cwiseProduct(dropout_mask(h.rows(), h.cols(), dropout, *rng));
  return (h * mlp.w2).rowwise() + mlp.b2.transpose();
}

Eigen::MatrixXd spatial_branch(const Eigen::MatrixXd& z0, const Eigen::MatrixXd& propagation,
                               double eta, int layers) {
  if (propagation.rows() != z0.rows() || propagation.cols() != z0.rows()) {
    fail(ErrorCode::ShapeMismatch, "propagation matrix does not match signal rows");
  }
  return run_recurrence(
      z0, [&](const Eigen::MatrixXd& z) -> Eigen::MatrixXd { return propagation * z; }, eta,
      layers, nullptr);
}

Eigen::MatrixXd spatial_branch(const Eigen::MatrixXd& z0, const AdaptedGraph& propagation,
                               double eta, int layers) {
  return spatial_branch(z0, propagation.matrix, eta, layers);
}

Eigen::MatrixXd spatial_branch(const Eigen::MatrixXd& z0, const SymOperator& propagation,
                               double eta, int layers) {
  if (propagation.dim() != z0.rows()) {
    fail(ErrorCode::ShapeMismatch, "propagation operator does not match signal rows");
  }
  return run_recurrence(
      z0, [&](const Eigen::MatrixXd& z) -> Eigen::MatrixXd { return propagation.apply(z); }, eta,
      layers, nullptr);
}

Amalgamation amalgamate(const Eigen::MatrixXd& z_f, const Eigen::MatrixXd& z_a,
                        const AttentionParams& attention, double delta) {
  if (!(delta > 0.0)) fail(ErrorCode::NonPositiveDelta, "delta must be positive");
  if (z_f.rows() != z_a.rows() || z_f.cols() != z_a.cols() ||
      attention.wf.size() != z_f.cols() || attention.wa.size() != z_a.cols()) {
    fail(ErrorCode::ShapeMismatch, "branch outputs and attention maps disagree in shape");
  }
  Amalgamation out;
  const Eigen::VectorXd pre_f = (z_f * attention.wf).array() + attention.bf;
  const Eigen::VectorXd pre_a = (z_a * attention.wa).array() + attention.ba;
  out.kappa_f = pre_f.unaryExpr(&sigmoid);
  out.kappa_a = pre_a.unaryExpr(&sigmoid);
  for (Eigen::Index i = 0; i < out.kappa_f.size(); ++i) {
    const double denom = std::max(out.kappa_f[i] + out.kappa_a[i], delta);
    out.kappa_f[i] /= denom;
    out.kappa_a[i] /= denom;
  }
  out.y = out.kappa_f.asDiagonal() * z_f + out.kappa_a.asDiagonal() * z_a;
  return out;
}

namespace {

void check_config(const ModelConfig& config) {
  if (!(config.tau > 0.0)) fail(ErrorCode::NonPositiveTau, "tau must be positive");
  if (config.epsilon < 0.0) fail(ErrorCode::NegativeEpsilon, "epsilon must be non-negative");
  if (!(config.delta > 0.0)) fail(ErrorCode::NonPositiveDelta, "delta must be positive");
  if (!(config.dropout >= 0.0 && config.dropout < 1.0)) {
    fail(ErrorCode::InvalidArgument, "dropout must lie in [0, 1)");
  }
  if (config.no_spatial && config.no_spectral) {
    fail(ErrorCode::InvalidArgument, "cannot ablate both the spectral and spatial branches");
  }
}

Eigen::MatrixXd basis_value_matrix(FilterBasis basis, int order, const Eigen::VectorXd& lambdas) {
  Eigen::MatrixXd phi(lambdas.size(), order + 1);
  for (Eigen::Index i = 0; i < lambdas.size(); ++i) {
    phi.row(i) = basis_values(basis, order, lambdas[i]).transpose();
  }
  return phi;
}

}  // namespace

ForwardTape forward_tape(const Eigen::MatrixXd& x, const GraphArtifacts& artifacts,
                         const SafParams& params, const ModelConfig& config, bool train_mode,
                         std::mt19937_64* rng) {
  check_config(config);
  check_mlp_shapes(x, params.mlp);
  const auto n = x.rows();
  if (artifacts.laplacian.dim() != n || artifacts.basis.source_dim != n) {
    fail(ErrorCode::ShapeMismatch, "graph artifacts do not match the feature matrix");
  }

  ForwardTape t;
  const bool drop = train_mode && config.dropout > 0.0;
  if (drop && !rng) fail(ErrorCode::InvalidArgument, "dropout in train mode needs an RNG");

  // Feature transform.
  t.x_in = drop ? x.cwiseProduct(dropout_mask(x.rows(), x.cols(), config.dropout, *rng)) : x;
  t.hidden_pre = (t.x_in * params.mlp.w1).rowwise() + params.mlp.b1.transpose();
  t.hidden_mask = drop ? dropout_mask(n, params.mlp.w1.cols(), config.dropout, *rng)
                       : Eigen::MatrixXd::Ones(n, params.mlp.w1.cols());
  t.hidden = t.hidden_pre.cwiseMax(0.0).cwiseProduct(t.hidden_mask);
  t.z0 = (t.hidden * params.mlp.w2).rowwise() + params.mlp.b2.transpose();
  const auto c = t.z0.cols();

  const int order = order_of(params.filter);
  t.expansion = expand(params.filter);

  // Spectral branch.
  if (!config.no_spectral) {
    t.terms = basis_terms(t.expansion.basis, order, artifacts.laplacian, t.z0);
    t.z_f = Eigen::MatrixXd::Zero(n, c);
    for (int k = 0; k <= order; ++k) t.z_f += t.expansion.weights[k] * t.terms[k];
    t.z_f /= t.expansion.scale;
  } else {
    t.z_f = Eigen::MatrixXd::Zero(n, c);
  }

  // Non-local spatial branch over the adapted graph.
  if (!config.no_spatial) {
    const auto& basis = artifacts.basis;
    t.phi = basis_value_matrix(t.expansion.basis, order, basis.eigenvalues);
    t.g_raw = (t.phi * t.expansion.weights) / t.expansion.scale;
    t.g = t.g_raw.cwiseMax(config.g_floor).cwiseMin(1.0);
    t.excess = t.g.cwiseInverse().array() - 1.0;
    const Eigen::MatrixXd& u = basis.eigenvectors;

    std::function<Eigen::MatrixXd(const Eigen::MatrixXd&)> apply;
    if (config.epsilon > 0.0) {
      t.dense_propagation = true;
      t.adapted = sparsify(build_adapted_graph(basis, t.g, config.tau, config.adapted_cap),
                           config.epsilon)
                      .matrix;
      apply = [&t](const Eigen::MatrixXd& z) -> Eigen::MatrixXd { return t.adapted * z; };
    } else {
      // I - tau U diag(1/g - 1) U^T applied without materializing N x N.
      apply = [&](const Eigen::MatrixXd& z) -> Eigen::MatrixXd {
        const Eigen::MatrixXd coeffs = t.excess.asDiagonal() * (u.transpose() * z);
        return z - config.tau * (u * coeffs);
      };
    }
    t.z_a = run_recurrence(t.z0, apply, config.eta, config.layers, &t.layers);
  } else {
    t.z_a = Eigen::MatrixXd::Zero(n, c);
  }

  // Node-wise amalgamation.
  if (config.no_spatial) {
    t.kappa_f = Eigen::VectorXd::Ones(n);
    t.kappa_a = Eigen::VectorXd::Zero(n);
  } else if (config.no_spectral) {
    t.kappa_f = Eigen::VectorXd::Zero(n);
    t.kappa_a = Eigen::VectorXd::Ones(n);
  } else if (config.no_attention) {
    t.kappa_f = Eigen::VectorXd::Constant(n, 0.5);
    t.kappa_a = Eigen::VectorXd::Constant(n, 0.5);
  } else {
    const Eigen::VectorXd pre_f = (t.z_f * params.attention.wf).array() + params.attention.bf;
    const Eigen::VectorXd pre_a = (t.z_a * params.attention.wa).array() + params.attention.ba;
    t.raw_f = pre_f.unaryExpr(&sigmoid);
    t.raw_a = pre_a.unaryExpr(&sigmoid);
    t.kappa_f.resize(n);
    t.kappa_a.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const double denom = std::max(t.raw_f[i] + t.raw_a[i], config.delta);
      t.kappa_f[i] = t.raw_f[i] / denom;
      t.kappa_a[i] = t.raw_a[i] / denom;
    }
  }
  t.y = t.kappa_f.asDiagonal() * t.z_f + t.kappa_a.asDiagonal() * t.z_a;
  return t;
}

ForwardResult forward(const Eigen::MatrixXd& x, const GraphArtifacts& artifacts,
                      const SafParams& params, const ModelConfig& config, bool train_mode,
                      std::mt19937_64* rng) {
  ForwardTape t = forward_tape(x, artifacts, params, config, train_mode, rng);
  ForwardResult r;
  r.y = std::move(t.y);
  r.kappa_f = std::move(t.kappa_f);
  r.kappa_a = std::move(t.kappa_a);
  r.kappa_f_mean = r.kappa_f.size() ? r.kappa_f.mean() : 0.0;
  r.kappa_a_mean = r.kappa_a.size() ? r.kappa_a.mean() : 0.0;
  return r;
}

AdaptedGraph adapted_graph_for(const GraphArtifacts& artifacts, const SafParams& params,
                               const ModelConfig& config) {
  check_config(config);
  const Eigen::VectorXd g = response_on_basis(params.filter, artifacts.basis, config.g_floor);
  AdaptedGraph a = build_adapted_graph(artifacts.basis, g, config.tau, config.adapted_cap);
  return config.epsilon > 0.0 ? sparsify(a, config.epsilon) : a;
}

}  // namespace saf
