#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "saf/dataio.hpp"
#include "saf/newgraph.hpp"
#include "saf/train.hpp"

namespace saf::cli {

// Entries below this are treated as roundoff when analysis runs at epsilon 0.
inline constexpr double kAnalysisFloor = 1e-12;

struct TrainOptions {
  std::string data;
  std::string out = "saf_out";
  std::string scheme = "dense";
  std::string split_file;
  std::string cache_dir;
  int runs = 1;
  TrainConfig config;
};

struct EvalOptions {
  std::string data;
  std::string checkpoint;
  std::string split_file;
  std::string cache_dir;
};

struct AnalyzeOptions {
  std::string data;
  std::string checkpoint;
  std::string out;  // defaults to the checkpoint's directory
  std::string history;
  std::string cache_dir;
  std::optional<double> epsilon;
};

struct EquivalenceOptions {
  std::string data;
  std::vector<double> coefficients{1.0};
  FilterBasis backbone = FilterBasis::Bernstein;
  double tau = 0.5;
  double tolerance = 1e-10;
  std::int64_t max_steps = 10000;
  double threshold = 1e-9;
  std::int64_t max_nodes = 200;
};

struct GridOptions {
  std::string data;
  std::string out = "saf_grid";
  std::string scheme = "dense";
  std::string split_file;
  std::string cache_dir;
  std::uint64_t budget = 0;
  int jobs = 1;
  int top = 10;
  GridSpace space;
  TrainConfig base;
};

struct SbmOptions {
  std::string out;
  SbmSpec spec;
};

struct StatsOptions {
  std::string data;
};

/// Each command prints a short table to `out` and returns the JSON it wrote
/// (or would report). Errors propagate as saf::Error.
nlohmann::json cmd_train(const TrainOptions& opts, std::ostream& out);
nlohmann::json cmd_eval(const EvalOptions& opts, std::ostream& out);
nlohmann::json cmd_analyze(const AnalyzeOptions& opts, std::ostream& out);
nlohmann::json cmd_check_equivalence(const EquivalenceOptions& opts, std::ostream& out);
nlohmann::json cmd_grid(const GridOptions& opts, std::ostream& out);
nlohmann::json cmd_gen_sbm(const SbmOptions& opts, std::ostream& out);
nlohmann::json cmd_stats(const StatsOptions& opts, std::ostream& out);

/// In-memory core of check-equivalence: uses the graph's features as the
/// signal. Throws NotConverged when the contraction condition fails.
EquivalenceReport equivalence_on_graph(const Graph& graph, const PolyFilter& filter, double tau,
                                       double tolerance, std::int64_t max_steps);

/// Newgraph statistics for an adapted graph (histogram, signed-edge stats,
/// entry range), thresholded at max(epsilon, kAnalysisFloor).
nlohmann::json adapted_graph_stats(const AdaptedGraph& adapted, const Graph& graph, double epsilon);

}  // namespace saf::cli
