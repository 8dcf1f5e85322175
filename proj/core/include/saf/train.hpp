#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "saf/filters.hpp"
#include "saf/graph.hpp"
#include "saf/model.hpp"
#include "saf/spectra.hpp"

namespace saf {

struct TrainConfig {
  double lr = 0.01;
  double weight_decay = 5e-4;
  double dropout = 0.5;
  int order = 10;  // K
  int layers = 2;  // L
  double tau = 0.5;
  double eta = 0.5;
  double epsilon = 0.0;
  double delta = 1e-9;
  int hidden = 64;
  int max_epochs = 1000;
  int patience = 200;
  std::uint64_t seed = 0;
  std::string basis_mode = "full";  // full | smallest | largest | both_ends
  std::int64_t basis_m = 0;         // ignored when basis_mode == "full"
  FilterBasis backbone = FilterBasis::Bernstein;
  bool no_attention = false;
  bool no_spectral = false;
  bool no_spatial = false;
  double g_floor = kDefaultGFloor;
  std::int64_t adapted_cap = kDefaultAdaptedCap;

  ModelConfig model_config() const;
  void validate() const;
};

struct Split {
  std::vector<std::int64_t> train;
  std::vector<std::int64_t> val;
  std::vector<std::int64_t> test;
};

enum class SplitScheme { Standard, Sparse, Dense };

SplitScheme parse_split_scheme(std::string_view name);
std::string_view to_string(SplitScheme scheme);

/// standard: 20 per class / 500 / 1000; sparse: 2.5% / 2.5% / rest;
/// dense: 60% / 20% / rest. Percentages round down.
Split make_split(const Graph& graph, SplitScheme scheme, std::uint64_t seed);

/// Throws MalformedSplit on overlap, out-of-range index, or empty train set.
void validate_split(const Split& split, std::int64_t num_nodes);

struct LossResult {
  double value = 0.0;
  Eigen::MatrixXd d_logits;  // d value / d Y
};

/// Mean softmax cross-entropy over `mask`.
double loss(const Eigen::MatrixXd& logits, const std::vector<int>& labels,
            const std::vector<std::int64_t>& mask);
LossResult loss_with_gradient(const Eigen::MatrixXd& logits, const std::vector<int>& labels,
                              const std::vector<std::int64_t>& mask);

double accuracy(const Eigen::MatrixXd& logits, const std::vector<int>& labels,
                const std::vector<std::int64_t>& mask);

/// Reverse pass through the recorded forward evaluation.
SafParams backward(const ForwardTape& tape, const SafParams& params, const ModelConfig& config,
                   const GraphArtifacts& artifacts, const Eigen::MatrixXd& d_logits);

struct GradientResult {
  double loss = 0.0;
  SafParams grads;
  ForwardTape tape;
};

/// Loss on `mask` and its exact gradient w.r.t. every learnable. The basis is
/// held constant.
GradientResult gradients(const Eigen::MatrixXd& x, const std::vector<int>& labels,
                         const std::vector<std::int64_t>& mask, const GraphArtifacts& artifacts,
                         const SafParams& params, const ModelConfig& config, bool train_mode,
                         std::mt19937_64* rng = nullptr);

inline constexpr double kPsiFloor = 1e-8;

struct AdamOptions {
  double lr = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.0;  // adds weight_decay * p to each gradient
};

struct AdamState {
  SafParams m;
  SafParams v;
  std::int64_t step = 0;

  static AdamState for_params(const SafParams& params);
};

/// One bias-corrected Adam update, then projects filter coefficients onto
/// [0, inf) keeping the largest one at least kPsiFloor.
void adam_step(SafParams& params, const SafParams& grads, AdamState& state,
               const AdamOptions& options);

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
  double val_acc = 0.0;
  double test_acc = 0.0;
  double kappa_f_mean = 0.0;
  double kappa_a_mean = 0.0;
  double epoch_ms = 0.0;
};

struct FitResult {
  SafParams best_params;
  std::vector<EpochRecord> history;
  int best_epoch = 0;
  double best_val_acc = 0.0;
  double best_val_loss = 0.0;
  double test_acc = 0.0;  // at the best-validation epoch
  double train_ms = 0.0;
};

/// Full-batch training with early stopping on validation accuracy (ties by
/// validation loss); returns the best-validation parameters.
FitResult fit(const Graph& graph, const GraphArtifacts& artifacts, const Split& split,
              const TrainConfig& config);

struct PreparedArtifacts {
  GraphArtifacts artifacts;
  double decomposition_ms = 0.0;
  bool from_cache = false;
};

/// Laplacian plus the eigenbasis requested by `config` (dense for "full",
/// Lanczos otherwise). When `cache_dir` is set the basis is read from or
/// written to <cache_dir>/<key>/basis.bin, keyed by `content_key`.
PreparedArtifacts prepare_artifacts(const Graph& graph, const TrainConfig& config,
                                    const std::optional<std::filesystem::path>& cache_dir = {},
                                    const std::string& content_key = {});

struct GridSpace {
  std::vector<double> lr{1e-3, 5e-3, 1e-2, 5e-2, 0.1};
  std::vector<double> weight_decay{0.0, 1e-6, 5e-6, 1e-5, 5e-5, 1e-4, 5e-4, 1e-3, 5e-3, 1e-2};
  std::vector<double> dropout{0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8};
  std::vector<int> layers{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  std::vector<double> tau{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
  std::vector<double> eta{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
  std::vector<double> epsilon{0.0, 1e-5, 5e-5, 1e-4, 5e-4, 1e-3, 5e-3, 1e-2};

  std::uint64_t size() const;
  /// Config at lexicographic position `index` (lr varies slowest).
  TrainConfig at(std::uint64_t index, const TrainConfig& base) const;
};

struct LeaderboardEntry {
  std::uint64_t index = 0;
  TrainConfig config;
  double val_acc = 0.0;
  double val_loss = 0.0;
  double test_acc = 0.0;
};

struct GridResult {
  TrainConfig best;
  std::vector<LeaderboardEntry> leaderboard;  // best first
};

/// Exhaustive when budget == 0 or budget >= space size, otherwise a seeded
/// sample of `budget` configurations. Each fit gets a seed derived from
/// (base.seed, config index), so results do not depend on `jobs`.
GridResult grid_search(const Graph& graph, const GraphArtifacts& artifacts, const Split& split,
                       const GridSpace& space, const TrainConfig& base, std::uint64_t budget,
                       int jobs = 1);

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

struct MeanCi {
  double mean = 0.0;
  double half_width = 0.0;  // 1.96 * sample sd / sqrt(n)
};

MeanCi mean_ci95(const std::vector<double>& values);

}  // namespace saf
