#include "gdtm/checkpoint.hpp"

#include "gdtm/io.hpp"

#include <json.hpp>

namespace gdtm {

using Json = nlohmann::ordered_json;

std::string write_checkpoint(const Checkpoint& checkpoint) {
  const auto& m = checkpoint.model;
  m.validate();
  Json j;
  j["schema_version"] = kCheckpointSchemaVersion;
  j["kind"] = to_string(m.kind);
  j["alignment"] = to_string(m.alignment);
  j["layer_dims"] = m.mlp.dims();
  j["parameter_count"] = m.parameter_count();
  j["mlp_parameters"] = m.mlp.flatten();
  if (m.gat) {
    Json g;
    g["width"] = m.gat->width();
    g["feature_dim"] = m.gat->feature_dim();
    g["edge_type_count"] = m.gat->edge_type_count();
    g["leaky_slope"] = m.gat->leaky_slope;
    g["parameters"] = m.gat->flatten();
    j["attention"] = g;
  }
  j["scalers"] = {{"acceleration", m.scalers.acceleration},
                  {"velocity", m.scalers.velocity},
                  {"displacement", m.scalers.displacement},
                  {"excitation", m.scalers.excitation}};
  j["integration"] = {{"dt", m.dt}, {"beta", m.beta}, {"gamma", m.gamma}};
  j["training_seed"] = checkpoint.training_seed;
  j["adjacency"] = {{"kind", m.kind == ModelKind::heterogeneous ? "heterogeneous" : "homogeneous"},
                    {"matrix_count", m.matrix_count}};
  return j.dump(2) + "\n";
}

Checkpoint read_checkpoint(const std::string& text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const std::exception& e) {
    fail(ErrorCode::io, std::string("checkpoint is not valid JSON: ") + e.what());
  }
  try {
    const int version = j.at("schema_version").get<int>();
    require(version == kCheckpointSchemaVersion, ErrorCode::io,
            "unsupported checkpoint schema_version " + std::to_string(version));
    Checkpoint c;
    auto& m = c.model;
    m.kind = parse_model_kind(j.at("kind").get<std::string>());
    m.alignment = parse_alignment(j.at("alignment").get<std::string>());
    m.matrix_count = j.at("adjacency").at("matrix_count").get<std::size_t>();
    const auto dims = j.at("layer_dims").get<std::vector<std::size_t>>();
    require(dims.size() >= 2 && dims.back() == 1, ErrorCode::compat, "checkpoint layer_dims must end in 1");
    m.mlp = MlpModel::zeros(dims);
    const auto mlp_params = j.at("mlp_parameters").get<std::vector<double>>();
    require(mlp_params.size() == m.mlp.parameter_count(), ErrorCode::compat,
            "checkpoint MLP parameter count does not match layer_dims");
    m.mlp.assign(mlp_params);
    if (j.contains("attention")) {
      const auto& g = j.at("attention");
      auto layer = GatLayer::initialize(g.at("width").get<std::size_t>(), g.at("edge_type_count").get<std::size_t>(), 0,
                                        g.at("feature_dim").get<std::size_t>());
      layer.leaky_slope = g.at("leaky_slope").get<double>();
      const auto p = g.at("parameters").get<std::vector<double>>();
      require(p.size() == layer.parameter_count(), ErrorCode::compat,
              "checkpoint attention parameter count does not match its layout");
      layer.assign(p);
      m.gat = std::move(layer);
    }
    const auto& s = j.at("scalers");
    m.scalers = {s.at("acceleration").get<double>(), s.at("velocity").get<double>(),
                 s.at("displacement").get<double>(), s.at("excitation").get<double>()};
    const auto& in = j.at("integration");
    m.dt = in.at("dt").get<double>();
    m.beta = in.at("beta").get<double>();
    m.gamma = in.at("gamma").get<double>();
    c.training_seed = j.at("training_seed").get<std::uint64_t>();
    require(j.at("parameter_count").get<std::size_t>() == m.parameter_count(), ErrorCode::compat,
            "checkpoint parameter_count disagrees with its arrays");
    m.validate();
    return c;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::io, std::string("malformed checkpoint: ") + e.what());
  }
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint) {
  write_text_file(path, write_checkpoint(checkpoint));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) { return read_checkpoint(read_text_file(path)); }

}  // namespace gdtm
