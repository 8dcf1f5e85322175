#include "commands.hpp"

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>

#include "saf/checkpoint.hpp"
#include "saf/error.hpp"
#include "saf/graph.hpp"
#include "saf/model.hpp"
#include "saf/spectra.hpp"

namespace saf::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

std::optional<fs::path> resolve_cache(const std::string& flag) {
  if (!flag.empty()) return fs::path(flag);
  if (const char* env = std::getenv("SAF_CACHE_DIR"); env != nullptr && *env != '\0') return fs::path(env);
  return std::nullopt;
}

std::string cache_key(const std::string& data) { return content_hash(fs::path(data) / "edges.tsv"); }

void write_json(const fs::path& path, const json& j) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) fail(ErrorCode::MissingFile, "cannot write " + path.string());
  out << j.dump(2) << '\n';
}

json mean_ci_json(const std::vector<double>& values) {
  const auto ci = mean_ci95(values);
  return {{"mean", ci.mean}, {"ci95", ci.half_width}, {"values", values}};
}

// Homophily metrics that may be undefined on a given graph come back as null.
template <typename F>
json maybe(F&& f) {
  try {
    return f();
  } catch (const Error& e) {
    if (e.code() == ErrorCode::EmptyEdgeSet || e.code() == ErrorCode::DegenerateLabels) return nullptr;
    throw;
  }
}

const Graph& check_nodes(const Graph& graph, const Checkpoint& ck) {
  if (ck.num_nodes != graph.num_nodes()) {
    fail(ErrorCode::ShapeMismatch, "checkpoint was trained on " + std::to_string(ck.num_nodes) +
                                       " nodes, dataset has " + std::to_string(graph.num_nodes()));
  }
  return graph;
}

fs::path sibling_dir(const std::string& file) {
  const fs::path p(file);
  return p.has_parent_path() ? p.parent_path() : fs::path(".");
}

std::ostream& row(std::ostream& out, const std::string& key) {
  return out << std::left << std::setw(26) << key << std::right;
}

}  // namespace

json cmd_train(const TrainOptions& opts, std::ostream& out) {
  if (opts.runs < 1) fail(ErrorCode::InvalidArgument, "--runs must be at least 1");
  opts.config.validate();
  const Graph graph = load_dataset(opts.data);
  const SplitScheme scheme = parse_split_scheme(opts.scheme);
  std::optional<Split> fixed;
  if (!opts.split_file.empty()) fixed = load_split(opts.split_file, graph.num_nodes());
  const PreparedArtifacts prepared =
      prepare_artifacts(graph, opts.config, resolve_cache(opts.cache_dir), cache_key(opts.data));

  const fs::path dir(opts.out);
  fs::create_directories(dir);
  std::ofstream history(dir / "history.jsonl");
  if (!history) fail(ErrorCode::MissingFile, "cannot write " + (dir / "history.jsonl").string());

  std::vector<double> test_acc, val_acc;
  double train_ms = 0.0;
  int best_run = -1;
  double best_val = -1.0;
  Checkpoint best;
  best.num_nodes = graph.num_nodes();

  out << std::setw(4) << "run" << std::setw(8) << "epochs" << std::setw(8) << "best" << std::setw(10)
      << "val_acc" << std::setw(10) << "test_acc" << '\n';
  out << std::fixed << std::setprecision(4);
  for (int r = 0; r < opts.runs; ++r) {
    TrainConfig config = opts.config;
    config.seed = opts.config.seed + static_cast<std::uint64_t>(r);
    const Split split = fixed ? *fixed : make_split(graph, scheme, config.seed);
    FitResult fit_result = fit(graph, prepared.artifacts, split, config);
    for (const auto& rec : fit_result.history) {
      history << json{{"run", r},
                      {"epoch", rec.epoch},
                      {"train_loss", rec.train_loss},
                      {"val_loss", rec.val_loss},
                      {"val_acc", rec.val_acc},
                      {"test_acc", rec.test_acc},
                      {"kappa_f_mean", rec.kappa_f_mean},
                      {"kappa_a_mean", rec.kappa_a_mean},
                      {"epoch_ms", rec.epoch_ms}}
                     .dump()
              << '\n';
    }
    test_acc.push_back(fit_result.test_acc);
    val_acc.push_back(fit_result.best_val_acc);
    train_ms += fit_result.train_ms;
    out << std::setw(4) << r << std::setw(8) << fit_result.history.size() << std::setw(8)
        << fit_result.best_epoch << std::setw(10) << fit_result.best_val_acc << std::setw(10)
        << fit_result.test_acc << '\n';
    if (fit_result.best_val_acc > best_val) {
      best_val = fit_result.best_val_acc;
      best_run = r;
      best.config = config;
      best.params = std::move(fit_result.best_params);
      best.split = split;
    }
  }
  history.close();

  save_checkpoint(dir / "model.json", best);
  save_split(dir / "split.json", *best.split);

  json result{{"command", "train"},
              {"data", opts.data},
              {"scheme", fixed ? "file" : opts.scheme},
              {"runs", opts.runs},
              {"config", config_to_json(opts.config)},
              {"test_acc", mean_ci_json(test_acc)},
              {"val_acc", mean_ci_json(val_acc)},
              {"checkpoint_run", best_run},
              {"basis", {{"mode", opts.config.basis_mode},
                         {"rank", prepared.artifacts.basis.rank()},
                         {"from_cache", prepared.from_cache}}},
              {"timing", {{"decomposition_ms", prepared.decomposition_ms}, {"train_ms", train_ms}}},
              {"artifacts", {{"result", (dir / "result.json").string()},
                             {"history", (dir / "history.jsonl").string()},
                             {"model", (dir / "model.json").string()},
                             {"split", (dir / "split.json").string()}}}};
  write_json(dir / "result.json", result);

  const auto ci = mean_ci95(test_acc);
  out << "test_acc " << ci.mean << " +- " << ci.half_width << " (" << opts.runs << " runs)\n";
  out << std::defaultfloat;
  return result;
}

json cmd_eval(const EvalOptions& opts, std::ostream& out) {
  const Checkpoint ck = load_checkpoint(opts.checkpoint);
  const Graph graph = load_dataset(opts.data);
  check_nodes(graph, ck);
  std::optional<Split> split = ck.split;
  if (!opts.split_file.empty()) split = load_split(opts.split_file, graph.num_nodes());

  const auto prepared = prepare_artifacts(graph, ck.config, resolve_cache(opts.cache_dir), cache_key(opts.data));
  const auto r = forward(graph.features(), prepared.artifacts, ck.params, ck.config.model_config(), false);

  json result{{"command", "eval"}, {"checkpoint", opts.checkpoint}, {"data", opts.data}};
  out << std::fixed << std::setprecision(4);
  auto report = [&](const char* name, const std::vector<std::int64_t>& mask) {
    if (mask.empty()) return;
    const double acc = accuracy(r.y, graph.labels(), mask);
    result[std::string(name)] = acc;
    row(out, name) << acc << '\n';
  };
  if (split) {
    report("train_acc", split->train);
    report("val_acc", split->val);
    report("test_acc", split->test);
  } else {
    std::vector<std::int64_t> all(static_cast<std::size_t>(graph.num_nodes()));
    for (std::int64_t i = 0; i < graph.num_nodes(); ++i) all[i] = i;
    report("all_acc", all);
  }
  result["kappa_f_mean"] = r.kappa_f_mean;
  result["kappa_a_mean"] = r.kappa_a_mean;
  out << std::defaultfloat;
  return result;
}

json adapted_graph_stats(const AdaptedGraph& adapted, const Graph& graph, double epsilon) {
  const double threshold = std::max(epsilon, kAnalysisFloor);
  const auto hist = distance_histogram(adapted, graph, threshold);
  json histogram = json::array();
  std::int64_t local = 0, non_local = 0, unreachable = 0;
  for (const auto& [d, count] : hist) {
    histogram.push_back({{"distance", d == kUnreachable ? json("unreachable") : json(d)}, {"count", count}});
    if (d == kUnreachable) {
      unreachable += count;
    } else if (d >= 2) {
      non_local += count;
    } else {
      local += count;
    }
  }

  json signed_stats = nullptr;
  try {
    const auto s = signed_edge_stats(adapted, graph.labels(), threshold);
    signed_stats = {{"pos_edge_homophily", s.pos_edge_homophily},
                    {"neg_cross_class_fraction", s.neg_cross_class_fraction},
                    {"pos_count", s.pos_count},
                    {"neg_count", s.neg_count}};
  } catch (const Error& e) {
    if (e.code() != ErrorCode::NoSurvivingEdges) throw;
  }

  const auto& m = adapted.matrix;
  const auto n = m.rows();
  double off_min = std::numeric_limits<double>::infinity(), off_max = -off_min;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      off_min = std::min(off_min, m(i, j));
      off_max = std::max(off_max, m(i, j));
    }
  }
  json entries{{"min", n ? m.minCoeff() : 0.0},
               {"max", n ? m.maxCoeff() : 0.0},
               {"diag_min", n ? m.diagonal().minCoeff() : 0.0},
               {"diag_max", n ? m.diagonal().maxCoeff() : 0.0},
               {"offdiag_min", n > 1 ? off_min : 0.0},
               {"offdiag_max", n > 1 ? off_max : 0.0}};

  return {{"epsilon", epsilon},
          {"threshold", threshold},
          {"tau", adapted.tau},
          {"rank", adapted.rank},
          {"num_nodes", n},
          {"distance_histogram", histogram},
          {"pairs_within_one_hop", local},
          {"pairs_beyond_one_hop", non_local},
          {"pairs_unreachable", unreachable},
          {"signed_edges", signed_stats},
          {"entries", entries}};
}

json cmd_analyze(const AnalyzeOptions& opts, std::ostream& out) {
  const Checkpoint ck = load_checkpoint(opts.checkpoint);
  const Graph graph = load_dataset(opts.data);
  check_nodes(graph, ck);
  ModelConfig mc = ck.config.model_config();
  if (opts.epsilon) {
    if (*opts.epsilon < 0.0) fail(ErrorCode::NegativeEpsilon, "epsilon must be non-negative");
    mc.epsilon = *opts.epsilon;
  }
  const auto prepared = prepare_artifacts(graph, ck.config, resolve_cache(opts.cache_dir), cache_key(opts.data));
  const AdaptedGraph adapted = adapted_graph_for(prepared.artifacts, ck.params, mc);

  json stats = adapted_graph_stats(adapted, graph, mc.epsilon);
  stats["basis_mode"] = ck.config.basis_mode;
  stats["original_edge_homophily"] = maybe([&] { return json(edge_homophily(graph)); });

  const fs::path dir = opts.out.empty() ? sibling_dir(opts.checkpoint) : fs::path(opts.out);
  const fs::path history = opts.history.empty() ? sibling_dir(opts.checkpoint) / "history.jsonl"
                                                : fs::path(opts.history);
  json trend_path = nullptr;
  if (fs::exists(history)) {
    std::ifstream in(history);
    fs::create_directories(dir);
    std::ofstream csv(dir / "attention_trend.csv");
    csv << "run,epoch,kappa_f_mean,kappa_a_mean\n";
    csv << std::setprecision(17);
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      const json rec = json::parse(line, nullptr, false);
      if (rec.is_discarded()) fail(ErrorCode::InvalidArgument, "malformed line in " + history.string());
      csv << rec.value("run", 0) << ',' << rec.at("epoch").get<int>() << ','
          << rec.at("kappa_f_mean").get<double>() << ',' << rec.at("kappa_a_mean").get<double>() << '\n';
    }
    trend_path = (dir / "attention_trend.csv").string();
  } else if (!opts.history.empty()) {
    fail(ErrorCode::MissingFile, "missing " + history.string());
  }
  stats["artifacts"] = {{"newgraph_stats", (dir / "newgraph_stats.json").string()},
                        {"attention_trend", trend_path}};
  write_json(dir / "newgraph_stats.json", stats);

  row(out, "rank") << adapted.rank << '\n';
  row(out, "threshold") << stats["threshold"].get<double>() << '\n';
  row(out, "pairs_within_one_hop") << stats["pairs_within_one_hop"] << '\n';
  row(out, "pairs_beyond_one_hop") << stats["pairs_beyond_one_hop"] << '\n';
  if (!stats["signed_edges"].is_null()) {
    row(out, "pos_edge_homophily") << stats["signed_edges"]["pos_edge_homophily"].get<double>() << '\n';
    row(out, "neg_cross_class_fraction") << stats["signed_edges"]["neg_cross_class_fraction"].get<double>()
                                         << '\n';
  }
  return stats;
}

EquivalenceReport equivalence_on_graph(const Graph& graph, const PolyFilter& filter, double tau,
                                       double tolerance, std::int64_t max_steps) {
  if (graph.num_features() == 0) fail(ErrorCode::InvalidArgument, "graph has no features to use as the signal");
  const SymOperator laplacian = normalized_laplacian(graph);
  const SpectralBasis basis = dense_eigh(laplacian);
  return check_equivalence(laplacian, basis, filter, tau, graph.features(), tolerance, max_steps);
}

json cmd_check_equivalence(const EquivalenceOptions& opts, std::ostream& out) {
  const Graph graph = load_dataset(opts.data);
  if (graph.num_nodes() > opts.max_nodes) {
    fail(ErrorCode::DimensionTooLarge, "check-equivalence is limited to " + std::to_string(opts.max_nodes) +
                                           " nodes, got " + std::to_string(graph.num_nodes()));
  }
  const PolyFilter filter = opts.backbone == FilterBasis::Bernstein
                                ? PolyFilter{BernsteinFilter{opts.coefficients}}
                                : PolyFilter{ChebInterpFilter{opts.coefficients}};
  const auto r = equivalence_on_graph(graph, filter, opts.tau, opts.tolerance, opts.max_steps);
  const bool pass = r.max_deviation < opts.threshold;
  json result{{"command", "check-equivalence"},
              {"num_nodes", graph.num_nodes()},
              {"tau", opts.tau},
              {"alpha", r.alpha},
              {"g_min", r.g_min},
              {"contraction", r.contraction},
              {"iterations", r.iterations},
              {"max_deviation", r.max_deviation},
              {"threshold", opts.threshold},
              {"pass", pass}};
  row(out, "alpha") << r.alpha << '\n';
  row(out, "g_min") << r.g_min << '\n';
  row(out, "iterations") << r.iterations << '\n';
  row(out, "max_deviation") << r.max_deviation << '\n';
  row(out, "result") << (pass ? "PASS" : "FAIL") << '\n';
  return result;
}

json cmd_grid(const GridOptions& opts, std::ostream& out) {
  opts.base.validate();
  if (opts.space.size() == 0) fail(ErrorCode::InvalidArgument, "every grid dimension needs at least one value");
  if (opts.jobs < 1) fail(ErrorCode::InvalidArgument, "--jobs must be at least 1");
  const Graph graph = load_dataset(opts.data);
  const Split split = opts.split_file.empty()
                          ? make_split(graph, parse_split_scheme(opts.scheme), opts.base.seed)
                          : load_split(opts.split_file, graph.num_nodes());
  const auto prepared =
      prepare_artifacts(graph, opts.base, resolve_cache(opts.cache_dir), cache_key(opts.data));
  const GridResult g = grid_search(graph, prepared.artifacts, split, opts.space, opts.base, opts.budget, opts.jobs);

  json board = json::array();
  for (const auto& e : g.leaderboard) {
    board.push_back({{"index", e.index},
                     {"val_acc", e.val_acc},
                     {"val_loss", e.val_loss},
                     {"test_acc", e.test_acc},
                     {"config", config_to_json(e.config)}});
  }
  const fs::path dir(opts.out);
  json result{{"command", "grid"},
              {"space_size", opts.space.size()},
              {"budget", opts.budget},
              {"evaluated", g.leaderboard.size()},
              {"best", config_to_json(g.best)},
              {"leaderboard", board},
              {"artifacts", {{"grid", (dir / "grid.json").string()}, {"split", (dir / "split.json").string()}}}};
  write_json(dir / "grid.json", result);
  save_split(dir / "split.json", split);

  out << std::setw(5) << "rank" << std::setw(9) << "index" << std::setw(8) << "lr" << std::setw(9) << "wd"
      << std::setw(6) << "drop" << std::setw(4) << "L" << std::setw(6) << "tau" << std::setw(6) << "eta"
      << std::setw(8) << "eps" << std::setw(9) << "val_acc" << std::setw(9) << "test_acc" << '\n';
  const auto shown = std::min<std::size_t>(g.leaderboard.size(), static_cast<std::size_t>(std::max(opts.top, 0)));
  for (std::size_t i = 0; i < shown; ++i) {
    const auto& e = g.leaderboard[i];
    const auto& c = e.config;
    out << std::setw(5) << i + 1 << std::setw(9) << e.index << std::setw(8) << c.lr << std::setw(9)
        << c.weight_decay << std::setw(6) << c.dropout << std::setw(4) << c.layers << std::setw(6) << c.tau
        << std::setw(6) << c.eta << std::setw(8) << c.epsilon << std::fixed << std::setprecision(4)
        << std::setw(9) << e.val_acc << std::setw(9) << e.test_acc << std::defaultfloat
        << std::setprecision(6) << '\n';
  }
  return result;
}

json cmd_gen_sbm(const SbmOptions& opts, std::ostream& out) {
  if (opts.out.empty()) fail(ErrorCode::InvalidArgument, "--out is required");
  const Graph graph = generate_sbm(opts.spec);
  save_dataset(opts.out, graph);
  json result{{"command", "gen-sbm"},
              {"out", opts.out},
              {"num_nodes", graph.num_nodes()},
              {"num_edges", graph.num_edges()},
              {"num_features", graph.num_features()},
              {"num_classes", graph.num_classes()},
              {"seed", opts.spec.seed},
              {"edge_homophily", maybe([&] { return json(edge_homophily(graph)); })}};
  row(out, "num_nodes") << graph.num_nodes() << '\n';
  row(out, "num_edges") << graph.num_edges() << '\n';
  row(out, "edge_homophily") << result["edge_homophily"].dump() << '\n';
  return result;
}

json cmd_stats(const StatsOptions& opts, std::ostream& out) {
  const Graph graph = load_dataset(opts.data);
  json result{{"command", "stats"},
              {"num_nodes", graph.num_nodes()},
              {"num_edges", graph.num_edges()},
              {"num_features", graph.num_features()},
              {"num_classes", graph.num_classes()},
              {"edge_homophily", maybe([&] { return json(edge_homophily(graph)); })},
              {"class_homophily", maybe([&] { return json(class_homophily(graph)); })},
              {"adjusted_homophily", maybe([&] { return json(adjusted_homophily(graph)); })}};
  for (const char* key : {"num_nodes", "num_edges", "num_features", "num_classes", "edge_homophily",
                          "class_homophily", "adjusted_homophily"}) {
    row(out, key) << result[key].dump() << '\n';
  }
  return result;
}

}  // namespace saf::cli
