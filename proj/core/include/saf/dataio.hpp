#pragma once

#include <cstdint>
#include <filesystem>

#include "saf/graph.hpp"
#include "saf/train.hpp"

namespace saf {

/// Directory layout: edges.tsv, features.csv, labels.txt, meta.json.
/// Edge direction is ignored; duplicates and self-loops are dropped.
Graph load_dataset(const std::filesystem::path& dir);
void save_dataset(const std::filesystem::path& dir, const Graph& graph);

struct SbmSpec {
  std::int64_t num_nodes = 400;
  int num_classes = 2;
  double p_in = 0.1;
  double p_out = 0.01;
  int feature_dim = 16;
  double feature_signal = 2.0;  // distance between class means
  double noise_std = 1.0;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Node v belongs to class v % C. Each unordered pair is an edge with
/// probability p_in (same class) or p_out. Features are the class mean plus
/// isotropic Gaussian noise.
Graph generate_sbm(const SbmSpec& spec);

/// split.json: {"train": [...], "val": [...], "test": [...]}.
void save_split(const std::filesystem::path& path, const Split& split);
/// Throws MalformedSplit unless the split is valid for `num_nodes`
/// (pass a negative count to skip the range check).
Split load_split(const std::filesystem::path& path, std::int64_t num_nodes = -1);

}  // namespace saf
