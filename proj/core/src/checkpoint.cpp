#include "saf/checkpoint.hpp"

#include <fstream>
#include <string>

#include "saf/error.hpp"

namespace saf {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kFormat = "saf-model";

json matrix_to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::MatrixXd matrix_from_json(const json& j) {
  const auto rows = static_cast<Eigen::Index>(j.size());
  const auto cols = rows ? static_cast<Eigen::Index>(j.at(0).size()) : 0;
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const auto& row = j.at(i);
    if (static_cast<Eigen::Index>(row.size()) != cols) {
      fail(ErrorCode::ShapeMismatch, "ragged matrix in checkpoint");
    }
    for (Eigen::Index k = 0; k < cols; ++k) m(i, k) = row.at(k).get<double>();
  }
  return m;
}

json vector_to_json(const Eigen::VectorXd& v) {
  return json(std::vector<double>(v.data(), v.data() + v.size()));
}

Eigen::VectorXd vector_from_json(const json& j) {
  const auto values = j.get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
}

}  // namespace

json config_to_json(const TrainConfig& c) {
  return {
      {"lr", c.lr},
      {"weight_decay", c.weight_decay},
      {"dropout", c.dropout},
      {"order", c.order},
      {"layers", c.layers},
      {"tau", c.tau},
      {"eta", c.eta},
      {"epsilon", c.epsilon},
      {"delta", c.delta},
      {"hidden", c.hidden},
      {"max_epochs", c.max_epochs},
      {"patience", c.patience},
      {"seed", c.seed},
      {"basis_mode", c.basis_mode},
      {"basis_m", c.basis_m},
      {"backbone", std::string(to_string(c.backbone))},
      {"no_attention", c.no_attention},
      {"no_spectral", c.no_spectral},
      {"no_spatial", c.no_spatial},
      {"g_floor", c.g_floor},
      {"adapted_cap", c.adapted_cap},
  };
}

TrainConfig config_from_json(const json& j) {
  TrainConfig c;
  auto read = [&j](const char* key, auto& field) {
    if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
  };
  read("lr", c.lr);
  read("weight_decay", c.weight_decay);
  read("dropout", c.dropout);
  read("order", c.order);
  read("layers", c.layers);
  read("tau", c.tau);
  read("eta", c.eta);
  read("epsilon", c.epsilon);
  read("delta", c.delta);
  read("hidden", c.hidden);
  read("max_epochs", c.max_epochs);
  read("patience", c.patience);
  read("seed", c.seed);
  read("basis_mode", c.basis_mode);
  read("basis_m", c.basis_m);
  if (j.contains("backbone")) c.backbone = parse_filter_basis(j.at("backbone").get<std::string>());
  read("no_attention", c.no_attention);
  read("no_spectral", c.no_spectral);
  read("no_spatial", c.no_spatial);
  read("g_floor", c.g_floor);
  read("adapted_cap", c.adapted_cap);
  return c;
}

json params_to_json(const SafParams& p) {
  return {
      {"mlp",
       {{"w1", matrix_to_json(p.mlp.w1)},
        {"b1", vector_to_json(p.mlp.b1)},
        {"w2", matrix_to_json(p.mlp.w2)},
        {"b2", vector_to_json(p.mlp.b2)}}},
      {"filter",
       {{"basis", std::string(to_string(basis_of(p.filter)))},
        {"coefficients", coefficients_of(p.filter)}}},
      {"attention",
       {{"wf", vector_to_json(p.attention.wf)},
        {"bf", p.attention.bf},
        {"wa", vector_to_json(p.attention.wa)},
        {"ba", p.attention.ba}}},
  };
}

SafParams params_from_json(const json& j) {
  SafParams p;
  const auto& mlp = j.at("mlp");
  p.mlp.w1 = matrix_from_json(mlp.at("w1"));
  p.mlp.b1 = vector_from_json(mlp.at("b1"));
  p.mlp.w2 = matrix_from_json(mlp.at("w2"));
  p.mlp.b2 = vector_from_json(mlp.at("b2"));
  const auto& filter = j.at("filter");
  auto coeffs = filter.at("coefficients").get<std::vector<double>>();
  if (parse_filter_basis(filter.at("basis").get<std::string>()) == FilterBasis::Bernstein) {
    p.filter = BernsteinFilter{std::move(coeffs)};
  } else {
    p.filter = ChebInterpFilter{std::move(coeffs)};
  }
  validate_filter(p.filter);
  const auto& att = j.at("attention");
  p.attention.wf = vector_from_json(att.at("wf"));
  p.attention.bf = att.at("bf").get<double>();
  p.attention.wa = vector_from_json(att.at("wa"));
  p.attention.ba = att.at("ba").get<double>();

  const auto h = p.mlp.w1.cols(), c = p.mlp.w2.cols();
  if (p.mlp.b1.size() != h || p.mlp.w2.rows() != h || p.mlp.b2.size() != c ||
      p.attention.wf.size() != c || p.attention.wa.size() != c) {
    fail(ErrorCode::ShapeMismatch, "checkpoint parameter shapes are inconsistent");
  }
  return p;
}

void save_checkpoint(const fs::path& path, const Checkpoint& ck) {
  json j{
      {"format", kFormat},
      {"version", kCheckpointVersion},
      {"seed", ck.config.seed},
      {"num_nodes", ck.num_nodes},
      {"config", config_to_json(ck.config)},
      {"params", params_to_json(ck.params)},
  };
  if (ck.split) {
    j["split"] = {{"train", ck.split->train}, {"val", ck.split->val}, {"test", ck.split->test}};
  }
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) fail(ErrorCode::InvalidArgument, "cannot write " + path.string());
  out << j.dump() << '\n';
}

Checkpoint load_checkpoint(const fs::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::MissingCheckpoint, "no checkpoint at " + path.string());
  Checkpoint ck;
  try {
    const json j = json::parse(in);
    if (j.value("format", std::string()) != kFormat) {
      fail(ErrorCode::MissingCheckpoint, path.string() + " is not a model checkpoint");
    }
    if (j.at("version").get<int>() != kCheckpointVersion) {
      fail(ErrorCode::MissingCheckpoint, "unsupported checkpoint version in " + path.string());
    }
    ck.config = config_from_json(j.at("config"));
    ck.config.seed = j.at("seed").get<std::uint64_t>();
    ck.num_nodes = j.at("num_nodes").get<std::int64_t>();
    ck.params = params_from_json(j.at("params"));
    if (j.contains("split")) {
      const auto& s = j.at("split");
      ck.split = Split{s.at("train").get<std::vector<std::int64_t>>(),
                       s.at("val").get<std::vector<std::int64_t>>(),
                       s.at("test").get<std::vector<std::int64_t>>()};
    }
  } catch (const json::exception& e) {
    fail(ErrorCode::MissingCheckpoint, path.string() + ": " + e.what());
  }
  return ck;
}

}  // namespace saf
