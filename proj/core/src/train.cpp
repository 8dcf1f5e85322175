#include "saf/train.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <string>
#include <thread>

#include "saf/error.hpp"

namespace saf {

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

void check_mask(const std::vector<std::int64_t>& mask, Eigen::Index rows,
                const std::vector<int>& labels) {
  if (mask.empty()) fail(ErrorCode::EmptyMask, "loss/accuracy mask is empty");
  if (static_cast<Eigen::Index>(labels.size()) != rows) {
    fail(ErrorCode::ShapeMismatch, "label count does not match logits");
  }
  for (auto i : mask) {
    if (i < 0 || i >= rows) fail(ErrorCode::ShapeMismatch, "mask index out of range");
  }
}

}  // namespace

ModelConfig TrainConfig::model_config() const {
  ModelConfig m;
  m.tau = tau;
  m.eta = eta;
  m.layers = layers;
  m.epsilon = epsilon;
  m.delta = delta;
  m.dropout = dropout;
  m.g_floor = g_floor;
  m.no_attention = no_attention;
  m.no_spectral = no_spectral;
  m.no_spatial = no_spatial;
  m.adapted_cap = adapted_cap;
  return m;
}

void TrainConfig::validate() const {
  if (order < 1 || order > kMaxFilterOrder) fail(ErrorCode::InvalidArgument, "K must be in [1, 64]");
  if (layers < 0) fail(ErrorCode::InvalidArgument, "L must be non-negative");
  if (hidden < 1) fail(ErrorCode::InvalidArgument, "hidden size must be positive");
  if (!(lr > 0.0)) fail(ErrorCode::InvalidArgument, "learning rate must be positive");
  if (weight_decay < 0.0) fail(ErrorCode::InvalidArgument, "weight decay must be non-negative");
  if (max_epochs < 1) fail(ErrorCode::InvalidArgument, "max_epochs must be positive");
  if (patience < 0 || patience > max_epochs) {
    fail(ErrorCode::InvalidArgument, "patience must lie in [0, max_epochs]");
  }
  if (!(tau > 0.0)) fail(ErrorCode::NonPositiveTau, "tau must be positive");
  if (!(eta >= 0.0 && eta <= 1.0)) fail(ErrorCode::InvalidArgument, "eta must lie in [0, 1]");
  if (epsilon < 0.0) fail(ErrorCode::NegativeEpsilon, "epsilon must be non-negative");
  if (!(delta > 0.0)) fail(ErrorCode::NonPositiveDelta, "delta must be positive");
  if (!(dropout >= 0.0 && dropout < 1.0)) fail(ErrorCode::InvalidArgument, "dropout must lie in [0, 1)");
  if (basis_mode != "full") {
    parse_spectrum_end(basis_mode);
    if (basis_m < 1) fail(ErrorCode::InvalidArgument, "partial basis needs basis_m >= 1");
  }
  if (no_spatial && no_spectral) {
    fail(ErrorCode::InvalidArgument, "cannot ablate both the spectral and spatial branches");
  }
}

SplitScheme parse_split_scheme(std::string_view name) {
  if (name == "standard") return SplitScheme::Standard;
  if (name == "sparse") return SplitScheme::Sparse;
  if (name == "dense") return SplitScheme::Dense;
  fail(ErrorCode::InvalidArgument, "unknown split scheme '" + std::string(name) + "'");
}

std::string_view to_string(SplitScheme scheme) {
  switch (scheme) {
    case SplitScheme::Standard: return "standard";
    case SplitScheme::Sparse: return "sparse";
    case SplitScheme::Dense: return "dense";
  }
  return "dense";
}

Split make_split(const Graph& graph, SplitScheme scheme, std::uint64_t seed) {
  const auto n = graph.num_nodes();
  std::mt19937_64 rng(seed);
  Split split;

  if (scheme == SplitScheme::Standard) {
    constexpr std::int64_t kPerClass = 20, kVal = 500, kTest = 1000;
    if (!graph.has_labels()) fail(ErrorCode::InfeasibleScheme, "standard split needs labels");
    std::vector<std::vector<std::int64_t>> by_class(graph.num_classes());
    for (std::int64_t v = 0; v < n; ++v) by_class[graph.labels()[v]].push_back(v);
    std::vector<std::int64_t> rest;
    for (int c = 0; c < graph.num_classes(); ++c) {
      auto& members = by_class[c];
      if (static_cast<std::int64_t>(members.size()) < kPerClass) {
        fail(ErrorCode::InfeasibleScheme, "class " + std::to_string(c) + " has fewer than 20 nodes");
      }
      std::shuffle(members.begin(), members.end(), rng);
      split.train.insert(split.train.end(), members.begin(), members.begin() + kPerClass);
      rest.insert(rest.end(), members.begin() + kPerClass, members.end());
    }
    if (static_cast<std::int64_t>(rest.size()) < kVal + kTest) {
      fail(ErrorCode::InfeasibleScheme, "standard split needs 1500 nodes beyond the training set");
    }
    std::sort(rest.begin(), rest.end());
    std::shuffle(rest.begin(), rest.end(), rng);
    split.val.assign(rest.begin(), rest.begin() + kVal);
    split.test.assign(rest.begin() + kVal, rest.begin() + kVal + kTest);
  } else {
    std::vector<std::int64_t> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    const std::int64_t n_train = scheme == SplitScheme::Sparse ? n * 25 / 1000 : n * 60 / 100;
    const std::int64_t n_val = scheme == SplitScheme::Sparse ? n * 25 / 1000 : n * 20 / 100;
    if (n_train < 1 || n_val < 1 || n - n_train - n_val < 1) {
      fail(ErrorCode::InfeasibleScheme, "graph too small for the " +
                                            std::string(to_string(scheme)) + " split");
    }
    split.train.assign(order.begin(), order.begin() + n_train);
    split.val.assign(order.begin() + n_train, order.begin() + n_train + n_val);
    split.test.assign(order.begin() + n_train + n_val, order.end());
  }
  std::sort(split.train.begin(), split.train.end());
  std::sort(split.val.begin(), split.val.end());
  std::sort(split.test.begin(), split.test.end());
  return split;
}

void validate_split(const Split& split, std::int64_t num_nodes) {
  if (split.train.empty()) fail(ErrorCode::MalformedSplit, "split has an empty training set");
  std::vector<char> seen(static_cast<std::size_t>(std::max<std::int64_t>(num_nodes, 0)), 0);
  for (const auto* part : {&split.train, &split.val, &split.test}) {
    for (auto i : *part) {
      if (i < 0 || i >= num_nodes) {
        fail(ErrorCode::MalformedSplit, "split index " + std::to_string(i) + " out of range");
      }
      if (seen[i]) fail(ErrorCode::MalformedSplit, "node " + std::to_string(i) + " appears twice");
      seen[i] = 1;
    }
  }
}

LossResult loss_with_gradient(const Eigen::MatrixXd& logits, const std::vector<int>& labels,
                              const std::vector<std::int64_t>& mask) {
  check_mask(mask, logits.rows(), labels);
  LossResult out;
  out.d_logits = Eigen::MatrixXd::Zero(logits.rows(), logits.cols());
  const double scale = 1.0 / static_cast<double>(mask.size());
  for (auto i : mask) {
    const Eigen::RowVectorXd row = logits.row(i);
    const double peak = row.maxCoeff();
    const Eigen::RowVectorXd shifted = (row.array() - peak).exp();
    const double total = shifted.sum();
    const int y = labels[i];
    out.value += -(row[y] - peak - std::log(total)) * scale;
    out.d_logits.row(i) = shifted / total * scale;
    out.d_logits(i, y) -= scale;
  }
  return out;
}

double loss(const Eigen::MatrixXd& logits, const std::vector<int>& labels,
            const std::vector<std::int64_t>& mask) {
  return loss_with_gradient(logits, labels, mask).value;
}

double accuracy(const Eigen::MatrixXd& logits, const std::vector<int>& labels,
                const std::vector<std::int64_t>& mask) {
  check_mask(mask, logits.rows(), labels);
  std::int64_t hits = 0;
  for (auto i : mask) {
    Eigen::Index best = 0;
    logits.row(i).maxCoeff(&best);
    hits += (best == labels[i]) ? 1 : 0;
  }
  return static_cast<double>(hits) / static_cast<double>(mask.size());
}

SafParams backward(const ForwardTape& t, const SafParams& params, const ModelConfig& config,
                   const GraphArtifacts& artifacts, const Eigen::MatrixXd& d_logits) {
  SafParams grads = zeros_like(params);
  const auto n = t.z0.rows();
  const auto c = t.z0.cols();
  const int order = order_of(params.filter);
  const auto& e = t.expansion;

  Eigen::MatrixXd d_zf = t.kappa_f.asDiagonal() * d_logits;
  Eigen::MatrixXd d_za = t.kappa_a.asDiagonal() * d_logits;

  // Attention scorers and the per-node normalization.
  const bool attention = !(config.no_attention || config.no_spectral || config.no_spatial);
  if (attention) {
    const Eigen::VectorXd d_kf = t.z_f.cwiseProduct(d_logits).rowwise().sum();
    const Eigen::VectorXd d_ka = t.z_a.cwiseProduct(d_logits).rowwise().sum();
    Eigen::VectorXd d_pre_f(n), d_pre_a(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const double rf = t.raw_f[i], ra = t.raw_a[i];
      const double s = rf + ra;
      double d_rf, d_ra;
      if (s >= config.delta) {
        const double shared = (d_kf[i] * rf + d_ka[i] * ra) / (s * s);
        d_rf = d_kf[i] / s - shared;
        d_ra = d_ka[i] / s - shared;
      } else {
        d_rf = d_kf[i] / config.delta;
        d_ra = d_ka[i] / config.delta;
      }
      d_pre_f[i] = d_rf * rf * (1.0 - rf);
      d_pre_a[i] = d_ra * ra * (1.0 - ra);
    }
    grads.attention.wf = t.z_f.transpose() * d_pre_f;
    grads.attention.bf = d_pre_f.sum();
    grads.attention.wa = t.z_a.transpose() * d_pre_a;
    grads.attention.ba = d_pre_a.sum();
    d_zf += d_pre_f * params.attention.wf.transpose();
    d_za += d_pre_a * params.attention.wa.transpose();
  }

  Eigen::MatrixXd d_z0 = Eigen::MatrixXd::Zero(n, c);
  Eigen::VectorXd d_weights = Eigen::VectorXd::Zero(order + 1);
  double d_scale = 0.0;

  // Spatial branch: unroll the recurrence, collecting d(1/g - 1).
  if (!config.no_spatial) {
    const Eigen::MatrixXd& u = artifacts.basis.eigenvectors;
    const double eta = config.eta, tau = config.tau;
    Eigen::VectorXd d_excess = Eigen::VectorXd::Zero(t.excess.size());
    Eigen::MatrixXd d_adapted;
    if (t.dense_propagation) d_adapted = Eigen::MatrixXd::Zero(n, n);

    Eigen::MatrixXd g_l = d_za;
    for (int l = config.layers; l >= 1; --l) {
      const Eigen::MatrixXd& prev = t.layers[l - 1];
      d_z0 += (1.0 - eta) * g_l;
      if (t.dense_propagation) {
        d_adapted.noalias() += eta * g_l * prev.transpose();
        g_l = eta * (t.adapted * g_l);
      } else {
        const Eigen::MatrixXd proj_g = u.transpose() * g_l;
        const Eigen::MatrixXd proj_z = u.transpose() * prev;
        d_excess -= (tau * eta) * proj_g.cwiseProduct(proj_z).rowwise().sum();
        g_l = eta * (g_l - tau * (u * (t.excess.asDiagonal() * proj_g)));
      }
    }
    d_z0 += g_l;

    if (t.dense_propagation) {
      // Entries zeroed by the threshold carry no gradient.
      d_adapted = (t.adapted.array() != 0.0).select(d_adapted, 0.0);
      const Eigen::MatrixXd w = d_adapted * u;
      d_excess -= tau * u.cwiseProduct(w).colwise().sum().transpose();
    }

    Eigen::VectorXd d_g_raw(t.g.size());
    for (Eigen::Index i = 0; i < t.g.size(); ++i) {
      const bool clamped = t.g_raw[i] < config.g_floor || t.g_raw[i] > 1.0;
      d_g_raw[i] = clamped ? 0.0 : -d_excess[i] / (t.g[i] * t.g[i]);
    }
    d_weights += t.phi.transpose() * d_g_raw / e.scale;
    d_scale -= d_g_raw.dot(t.g_raw) / e.scale;
  }

  // Spectral branch.
  if (!config.no_spectral) {
    for (int k = 0; k <= order; ++k) d_weights[k] += t.terms[k].cwiseProduct(d_zf).sum() / e.scale;
    d_scale -= t.z_f.cwiseProduct(d_zf).sum() / e.scale;
    const auto back_terms = basis_terms(e.basis, order, artifacts.laplacian, d_zf);
    Eigen::MatrixXd filtered = Eigen::MatrixXd::Zero(n, c);
    for (int k = 0; k <= order; ++k) filtered += e.weights[k] * back_terms[k];
    d_z0 += filtered / e.scale;
  }

  accumulate_filter_gradient(params.filter, d_weights, d_scale, grads.filter);

  // Two-layer MLP.
  grads.mlp.b2 = d_z0.colwise().sum().transpose();
  grads.mlp.w2 = t.hidden.transpose() * d_z0;
  const Eigen::MatrixXd d_hidden =
      (d_z0 * params.mlp.w2.transpose())
          .cwiseProduct(t.hidden_mask)
          .cwiseProduct((t.hidden_pre.array() > 0.0).cast<double>().matrix());
  grads.mlp.b1 = d_hidden.colwise().sum().transpose();
  grads.mlp.w1 = t.x_in.transpose() * d_hidden;
  return grads;
}

GradientResult gradients(const Eigen::MatrixXd& x, const std::vector<int>& labels,
                         const std::vector<std::int64_t>& mask, const GraphArtifacts& artifacts,
                         const SafParams& params, const ModelConfig& config, bool train_mode,
                         std::mt19937_64* rng) {
  if (!all_finite(params)) fail(ErrorCode::NonFiniteValue, "parameters contain non-finite values");
  GradientResult r;
  r.tape = forward_tape(x, artifacts, params, config, train_mode, rng);
  const LossResult l = loss_with_gradient(r.tape.y, labels, mask);
  if (!std::isfinite(l.value)) fail(ErrorCode::NonFiniteValue, "loss is not finite");
  r.loss = l.value;
  r.grads = backward(r.tape, params, config, artifacts, l.d_logits);
  if (!all_finite(r.grads)) fail(ErrorCode::NonFiniteValue, "gradient contains non-finite values");
  return r;
}

AdamState AdamState::for_params(const SafParams& params) {
  return {zeros_like(params), zeros_like(params), 0};
}

void adam_step(SafParams& params, const SafParams& grads, AdamState& state,
               const AdamOptions& options) {
  ++state.step;
  const double bc1 = 1.0 - std::pow(options.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(options.beta2, static_cast<double>(state.step));
  auto p = tensors(params);
  auto g = tensors(grads);
  auto m = tensors(state.m);
  auto v = tensors(state.v);
  if (p.size() != g.size()) fail(ErrorCode::ShapeMismatch, "gradient set does not match parameters");
  for (std::size_t t = 0; t < p.size(); ++t) {
    if (p[t].size() != g[t].size() || p[t].size() != m[t].size()) {
      fail(ErrorCode::ShapeMismatch, "gradient tensor does not match parameter tensor");
    }
    for (std::size_t i = 0; i < p[t].size(); ++i) {
      const double grad = g[t][i] + options.weight_decay * p[t][i];
      m[t][i] = options.beta1 * m[t][i] + (1.0 - options.beta1) * grad;
      v[t][i] = options.beta2 * v[t][i] + (1.0 - options.beta2) * grad * grad;
      const double m_hat = m[t][i] / bc1;
      const double v_hat = v[t][i] / bc2;
      p[t][i] -= options.lr * m_hat / (std::sqrt(v_hat) + options.eps);
    }
  }

  auto& coeffs = coefficients_of(params.filter);
  const auto top = std::max_element(coeffs.begin(), coeffs.end());
  const auto top_index = std::distance(coeffs.begin(), top);
  for (double& c : coeffs) c = std::max(c, 0.0);
  if (coeffs[top_index] < kPsiFloor) coeffs[top_index] = kPsiFloor;
}

FitResult fit(const Graph& graph, const GraphArtifacts& artifacts, const Split& split,
              const TrainConfig& config) {
  config.validate();
  validate_split(split, graph.num_nodes());
  if (split.val.empty()) fail(ErrorCode::MalformedSplit, "early stopping needs a validation set");

  std::mt19937_64 rng(config.seed);
  const ModelConfig model = config.model_config();
  SafParams params = init_params(graph.num_features(), config.hidden, graph.num_classes(),
                                 config.backbone, config.order, rng);
  AdamState adam = AdamState::for_params(params);
  const AdamOptions adam_options{config.lr, 0.9, 0.999, 1e-8, config.weight_decay};
  const auto& x = graph.features();
  const auto& y = graph.labels();

  FitResult result;
  result.best_params = params;
  result.best_val_acc = -1.0;
  result.best_val_loss = std::numeric_limits<double>::infinity();
  int stale = 0;
  const auto fit_start = Clock::now();

  for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
    const auto epoch_start = Clock::now();
    GradientResult step;
    try {
      step = gradients(x, y, split.train, artifacts, params, model, true, &rng);
    } catch (const Error& err) {
      if (err.code() == ErrorCode::NonFiniteValue) {
        fail(ErrorCode::DivergedRun, "training diverged at epoch " + std::to_string(epoch) +
                                         ": " + err.what());
      }
      throw;
    }
    adam_step(params, step.grads, adam, adam_options);
    if (!all_finite(params)) {
      fail(ErrorCode::DivergedRun, "parameters became non-finite at epoch " + std::to_string(epoch));
    }

    const ForwardResult eval = forward(x, artifacts, params, model, false);
    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = step.loss;
    rec.val_loss = loss(eval.y, y, split.val);
    rec.val_acc = accuracy(eval.y, y, split.val);
    rec.test_acc = split.test.empty() ? 0.0 : accuracy(eval.y, y, split.test);
    rec.kappa_f_mean = eval.kappa_f_mean;
    rec.kappa_a_mean = eval.kappa_a_mean;
    rec.epoch_ms = elapsed_ms(epoch_start);
    result.history.push_back(rec);

    const bool improved = rec.val_acc > result.best_val_acc ||
                          (rec.val_acc == result.best_val_acc && rec.val_loss < result.best_val_loss);
    if (improved) {
      result.best_val_acc = rec.val_acc;
      result.best_val_loss = rec.val_loss;
      result.best_epoch = epoch;
      result.test_acc = rec.test_acc;
      result.best_params = params;
      stale = 0;
    } else if (++stale >= config.patience) {
      break;
    }
  }
  result.train_ms = elapsed_ms(fit_start);
  return result;
}

PreparedArtifacts prepare_artifacts(const Graph& graph, const TrainConfig& config,
                                    const std::optional<std::filesystem::path>& cache_dir,
                                    const std::string& content_key) {
  PreparedArtifacts out;
  out.artifacts.laplacian = normalized_laplacian(graph);
  const bool full = config.basis_mode == "full";
  const std::int64_t m = full ? graph.num_nodes() : config.basis_m;

  std::filesystem::path cache_file;
  if (cache_dir && !content_key.empty()) {
    cache_file = *cache_dir / (content_key + "_" + config.basis_mode + "_" + std::to_string(m) + "_" +
                               std::to_string(config.seed)) / "basis.bin";
    if (std::filesystem::exists(cache_file)) {
      const auto start = Clock::now();
      out.artifacts.basis = read_basis(cache_file);
      out.decomposition_ms = elapsed_ms(start);
      if (out.artifacts.basis.source_dim == graph.num_nodes()) {
        out.from_cache = true;
        return out;
      }
    }
  }

  const auto start = Clock::now();
  if (full) {
    out.artifacts.basis = dense_eigh(out.artifacts.laplacian);
  } else {
    if (m > graph.num_nodes()) fail(ErrorCode::InvalidArgument, "basis_m exceeds node count");
    out.artifacts.basis = lanczos_extremal(out.artifacts.laplacian, m,
                                           parse_spectrum_end(config.basis_mode), config.seed)
                              .basis;
  }
  out.decomposition_ms = elapsed_ms(start);

  if (!cache_file.empty()) {
    std::filesystem::create_directories(cache_file.parent_path());
    write_basis(cache_file, out.artifacts.basis);
  }
  return out;
}

std::uint64_t GridSpace::size() const {
  return static_cast<std::uint64_t>(lr.size()) * weight_decay.size() * dropout.size() *
         layers.size() * tau.size() * eta.size() * epsilon.size();
}

TrainConfig GridSpace::at(std::uint64_t index, const TrainConfig& base) const {
  if (index >= size()) fail(ErrorCode::InvalidArgument, "grid index out of range");
  TrainConfig c = base;
  auto take = [&index](auto const& values) {
    const auto i = index % values.size();
    index /= values.size();
    return values[i];
  };
  // Innermost axis first; lr varies slowest.
  c.epsilon = take(epsilon);
  c.eta = take(eta);
  c.tau = take(tau);
  c.layers = take(layers);
  c.dropout = take(dropout);
  c.weight_decay = take(weight_decay);
  c.lr = take(lr);
  return c;
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  // splitmix64 over the combined value.
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

GridResult grid_search(const Graph& graph, const GraphArtifacts& artifacts, const Split& split,
                       const GridSpace& space, const TrainConfig& base, std::uint64_t budget,
                       int jobs) {
  const std::uint64_t total = space.size();
  if (total == 0) fail(ErrorCode::InvalidArgument, "grid search space is empty");

  std::vector<std::uint64_t> indices;
  if (budget == 0 || budget >= total) {
    indices.resize(total);
    std::iota(indices.begin(), indices.end(), 0);
  } else {
    std::mt19937_64 rng(base.seed);
    std::uniform_int_distribution<std::uint64_t> pick(0, total - 1);
    std::vector<std::uint64_t> chosen;
    while (chosen.size() < budget) {
      const auto i = pick(rng);
      if (std::find(chosen.begin(), chosen.end(), i) == chosen.end()) chosen.push_back(i);
    }
    std::sort(chosen.begin(), chosen.end());
    indices = std::move(chosen);
  }

  std::vector<LeaderboardEntry> board(indices.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t k = next++; k < indices.size(); k = next++) {
      LeaderboardEntry& entry = board[k];
      entry.index = indices[k];
      entry.config = space.at(indices[k], base);
      entry.config.seed = derive_seed(base.seed, indices[k]);
      try {
        const FitResult r = fit(graph, artifacts, split, entry.config);
        entry.val_acc = r.best_val_acc;
        entry.val_loss = r.best_val_loss;
        entry.test_acc = r.test_acc;
      } catch (const Error& err) {
        if (err.code() != ErrorCode::DivergedRun) throw;
        entry.val_acc = 0.0;
        entry.val_loss = std::numeric_limits<double>::infinity();
      }
    }
  };
  const int threads = std::max(1, std::min<int>(jobs, static_cast<int>(indices.size())));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(threads));
    for (int i = 0; i < threads; ++i) {
      pool.emplace_back([&, i] {
        try {
          worker();
        } catch (...) {
          errors[i] = std::current_exception();
          next = indices.size();
        }
      });
    }
    for (auto& th : pool) th.join();
    for (auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }

  std::sort(board.begin(), board.end(), [](const LeaderboardEntry& a, const LeaderboardEntry& b) {
    if (a.val_acc != b.val_acc) return a.val_acc > b.val_acc;
    if (a.val_loss != b.val_loss) return a.val_loss < b.val_loss;
    return a.index < b.index;
  });
  GridResult result;
  result.best = board.front().config;
  result.leaderboard = std::move(board);
  return result;
}

MeanCi mean_ci95(const std::vector<double>& values) {
  MeanCi out;
  if (values.empty()) return out;
  const double n = static_cast<double>(values.size());
  out.mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  if (values.size() < 2) return out;
  double ss = 0.0;
  for (double v : values) ss += (v - out.mean) * (v - out.mean);
  out.half_width = 1.96 * std::sqrt(ss / (n - 1.0)) / std::sqrt(n);
  return out;
}

}  // namespace saf
