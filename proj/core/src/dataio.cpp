#include "saf/dataio.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <system_error>
#include <algorithm>

#include <nlohmann/json.hpp>

#include "saf/error.hpp"

namespace saf {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::ifstream open_input(const fs::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::MissingFile, "cannot open " + path.string());
  return in;
}

std::ofstream open_output(const fs::path& path) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::InvalidArgument, "cannot write " + path.string());
  return out;
}

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

template <typename T>
T parse_number(std::string_view text, const fs::path& file, std::int64_t line) {
  text = trim(text);
  T value{};
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc{} || ptr != end) {
    fail(ErrorCode::ShapeMismatch, file.filename().string() + ":" + std::to_string(line) +
                                       ": cannot parse '" + std::string(text) + "'");
  }
  return value;
}

std::string format_double(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

json read_json(const fs::path& path) {
  auto in = open_input(path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    fail(ErrorCode::ShapeMismatch, path.filename().string() + ": " + e.what());
  }
}

}  // namespace

Graph load_dataset(const fs::path& dir) {
  for (const char* name : {"edges.tsv", "features.csv", "labels.txt", "meta.json"}) {
    if (!fs::exists(dir / name)) fail(ErrorCode::MissingFile, "missing " + (dir / name).string());
  }

  const json meta = read_json(dir / "meta.json");
  std::int64_t n = 0, f = 0;
  int c = 0;
  try {
    n = meta.at("num_nodes").get<std::int64_t>();
    f = meta.at("num_features").get<std::int64_t>();
    c = meta.at("num_classes").get<int>();
  } catch (const json::exception& e) {
    fail(ErrorCode::ShapeMismatch, std::string("meta.json: ") + e.what());
  }
  if (n < 0 || f < 0 || c < 1) fail(ErrorCode::ShapeMismatch, "meta.json has invalid counts");

  std::vector<int> labels;
  {
    const auto path = dir / "labels.txt";
    auto in = open_input(path);
    std::string line;
    std::int64_t no = 0;
    while (std::getline(in, line)) {
      ++no;
      if (trim(line).empty()) continue;
      const int y = parse_number<int>(line, path, no);
      if (y < 0 || y >= c) {
        fail(ErrorCode::BadLabel, "labels.txt:" + std::to_string(no) + ": label " +
                                      std::to_string(y) + " outside [0, " + std::to_string(c) + ")");
      }
      labels.push_back(y);
    }
  }
  if (static_cast<std::int64_t>(labels.size()) != n) {
    fail(ErrorCode::ShapeMismatch, "labels.txt has " + std::to_string(labels.size()) +
                                       " rows, meta says " + std::to_string(n));
  }

  Eigen::MatrixXd features(n, f);
  {
    const auto path = dir / "features.csv";
    auto in = open_input(path);
    std::string line;
    std::int64_t row = 0, no = 0;
    while (std::getline(in, line)) {
      ++no;
      if (trim(line).empty() && f > 0) continue;
      if (row >= n) fail(ErrorCode::ShapeMismatch, "features.csv has more than " + std::to_string(n) + " rows");
      std::int64_t col = 0;
      std::string_view rest(line);
      while (f > 0) {
        const auto comma = rest.find(',');
        const auto cell = rest.substr(0, comma);
        if (col >= f) {
          fail(ErrorCode::ShapeMismatch, "features.csv:" + std::to_string(no) + ": more than " +
                                             std::to_string(f) + " columns");
        }
        features(row, col++) = parse_number<double>(cell, path, no);
        if (comma == std::string_view::npos) break;
        rest.remove_prefix(comma + 1);
      }
      if (col != f) {
        fail(ErrorCode::ShapeMismatch, "features.csv:" + std::to_string(no) + ": expected " +
                                           std::to_string(f) + " columns, found " + std::to_string(col));
      }
      ++row;
    }
    if (row != n) {
      fail(ErrorCode::ShapeMismatch, "features.csv has " + std::to_string(row) + " rows, meta says " +
                                         std::to_string(n));
    }
  }

  std::vector<Edge> raw;
  {
    const auto path = dir / "edges.tsv";
    auto in = open_input(path);
    std::string line;
    std::int64_t no = 0;
    while (std::getline(in, line)) {
      ++no;
      const auto body = trim(line);
      if (body.empty()) continue;
      const auto tab = body.find_first_of("\t ");
      if (tab == std::string_view::npos) {
        fail(ErrorCode::ShapeMismatch, "edges.tsv:" + std::to_string(no) + ": expected two columns");
      }
      const auto u = parse_number<std::int64_t>(body.substr(0, tab), path, no);
      const auto v = parse_number<std::int64_t>(body.substr(tab + 1), path, no);
      raw.emplace_back(u, v);
    }
  }
  return Graph::from_raw_edges(n, raw, std::move(labels), std::move(features), c);
}

void save_dataset(const fs::path& dir, const Graph& graph) {
  fs::create_directories(dir);
  {
    auto out = open_output(dir / "edges.tsv");
    for (const auto& [u, v] : graph.edges()) out << u << '\t' << v << '\n';
  }
  {
    auto out = open_output(dir / "features.csv");
    const auto& x = graph.features();
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      for (Eigen::Index j = 0; j < x.cols(); ++j) {
        if (j) out << ',';
        out << format_double(x(i, j));
      }
      out << '\n';
    }
  }
  {
    auto out = open_output(dir / "labels.txt");
    for (int y : graph.labels()) out << y << '\n';
  }
  {
    auto out = open_output(dir / "meta.json");
    const json meta{{"num_nodes", graph.num_nodes()},
                    {"num_features", graph.num_features()},
                    {"num_classes", graph.num_classes()}};
    out << meta.dump(2) << '\n';
  }
}

void SbmSpec::validate() const {
  if (num_nodes < 1) fail(ErrorCode::InvalidArgument, "SBM needs at least one node");
  if (num_classes < 1) fail(ErrorCode::InvalidArgument, "SBM needs at least one class");
  if (!(p_in >= 0.0 && p_in <= 1.0) || !(p_out >= 0.0 && p_out <= 1.0)) {
    fail(ErrorCode::InvalidArgument, "SBM probabilities must lie in [0, 1]");
  }
  if (feature_dim < 1) fail(ErrorCode::InvalidArgument, "SBM feature_dim must be >= 1");
  if (!(noise_std >= 0.0)) fail(ErrorCode::InvalidArgument, "SBM noise_std must be >= 0");
  if (!std::isfinite(feature_signal)) fail(ErrorCode::InvalidArgument, "SBM feature_signal must be finite");
}

Graph generate_sbm(const SbmSpec& spec) {
  spec.validate();
  const auto n = spec.num_nodes;
  const int c = spec.num_classes;
  std::mt19937_64 rng(spec.seed);

  std::vector<int> labels(static_cast<std::size_t>(n));
  for (std::int64_t v = 0; v < n; ++v) labels[v] = static_cast<int>(v % c);

  std::uniform_real_distribution<double> coin(0.0, 1.0);
  std::vector<Edge> edges;
  for (std::int64_t u = 0; u < n; ++u) {
    for (std::int64_t v = u + 1; v < n; ++v) {
      const double p = labels[u] == labels[v] ? spec.p_in : spec.p_out;
      if (coin(rng) < p) edges.emplace_back(u, v);
    }
  }

  // Class means with pairwise distance feature_signal: scaled one-hot vectors
  // when there is room, otherwise random unit directions of the same length.
  const int f = spec.feature_dim;
  const double radius = spec.feature_signal / std::sqrt(2.0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::MatrixXd means = Eigen::MatrixXd::Zero(c, f);
  if (f >= c) {
    for (int k = 0; k < c; ++k) means(k, k) = radius;
  } else {
    for (int k = 0; k < c; ++k) {
      for (int j = 0; j < f; ++j) means(k, j) = gauss(rng);
      const double norm = means.row(k).norm();
      if (norm > 0.0) means.row(k) *= radius / norm;
    }
  }

  Eigen::MatrixXd x(n, f);
  for (std::int64_t v = 0; v < n; ++v) {
    for (int j = 0; j < f; ++j) x(v, j) = means(labels[v], j) + spec.noise_std * gauss(rng);
  }
  return Graph(n, std::move(edges), std::move(labels), std::move(x), c);
}

void save_split(const fs::path& path, const Split& split) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  auto out = open_output(path);
  const json j{{"train", split.train}, {"val", split.val}, {"test", split.test}};
  out << j.dump() << '\n';
}

Split load_split(const fs::path& path, std::int64_t num_nodes) {
  if (!fs::exists(path)) fail(ErrorCode::MissingFile, "missing " + path.string());
  json j;
  {
    auto in = open_input(path);
    try {
      j = json::parse(in);
    } catch (const json::exception& e) {
      fail(ErrorCode::MalformedSplit, path.filename().string() + ": " + e.what());
    }
  }
  Split s;
  try {
    s.train = j.at("train").get<std::vector<std::int64_t>>();
    s.val = j.at("val").get<std::vector<std::int64_t>>();
    s.test = j.at("test").get<std::vector<std::int64_t>>();
  } catch (const json::exception& e) {
    fail(ErrorCode::MalformedSplit, path.filename().string() + ": " + e.what());
  }
  if (num_nodes < 0) {
    num_nodes = 0;
    for (const auto* part : {&s.train, &s.val, &s.test}) {
      for (auto i : *part) {
        if (i < 0) fail(ErrorCode::MalformedSplit, "negative split index");
        num_nodes = std::max(num_nodes, i + 1);
      }
    }
  }
  validate_split(s, num_nodes);
  return s;
}

}  // namespace saf
