#include "lexpand/snapshot.hpp"

#include "lexpand/error.hpp"
#include "lexpand/hash.hpp"

#include <fstream>

namespace lexpand {
namespace {

using nlohmann::json;

json block(const Eigen::MatrixXd& m) {
  std::vector<double> data;
  data.reserve(static_cast<std::size_t>(m.size()));
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) data.push_back(m(r, c));
  }
  return json{{"rows", m.rows()}, {"cols", m.cols()}, {"data", std::move(data)}};
}

Eigen::MatrixXd read_block(const json& blocks, const char* name) {
  if (!blocks.contains(name)) throw Error(std::string("snapshot lacks parameter block '") + name + "'");
  const auto& b = blocks.at(name);
  const auto rows = b.at("rows").get<Eigen::Index>();
  const auto cols = b.at("cols").get<Eigen::Index>();
  const auto data = b.at("data").get<std::vector<double>>();
  if (rows < 0 || cols < 0 || static_cast<std::size_t>(rows * cols) != data.size()) {
    throw Error(std::string("parameter block '") + name + "' has inconsistent shape");
  }
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = data[static_cast<std::size_t>(r * cols + c)];
  }
  if (!m.allFinite()) throw Error(std::string("parameter block '") + name + "' has non-finite values");
  return m;
}

Eigen::VectorXd as_vector(const Eigen::MatrixXd& m) {
  return Eigen::Map<const Eigen::VectorXd>(m.data(), m.size());
}

json parameters(const TrainedModel& model) {
  json doc;
  doc["kind"] = model_kind_tag(model);
  doc["input_dim"] = input_dim(model);
  doc["classes"] = classes_of(model);
  json blocks = json::object();
  if (const auto* m = std::get_if<SubspaceClassifier>(&model)) {
    doc["subspace_size"] = m->subspace_size();
    blocks["projection"] = block(m->projection);
    blocks["weights"] = block(m->weights);
  } else if (const auto* m = std::get_if<SubspaceRegressor>(&model)) {
    doc["subspace_size"] = m->subspace_size();
    blocks["projection"] = block(m->projection);
    blocks["weights"] = block(m->weights.transpose());
    blocks["bias"] = block(Eigen::MatrixXd::Constant(1, 1, m->bias));
  } else {
    const auto& p = std::get<LinearPredictor>(model);
    doc["regularizer"] = p.model.regularizer == Regularizer::l1 ? "l1" : "l2";
    doc["lambda"] = p.model.lambda;
    blocks["weights"] = block(p.model.weights);
    blocks["bias"] = block(p.model.bias.transpose());
    if (p.pca) {
      doc["pca_components"] = p.pca->num_components();
      blocks["pca_mean"] = block(p.pca->mean.transpose());
      blocks["pca_components"] = block(p.pca->components);
      blocks["pca_explained_variance"] = block(p.pca->explained_variance.transpose());
    }
  }
  doc["blocks"] = std::move(blocks);
  return doc;
}

}  // namespace

std::string model_kind_tag(const TrainedModel& model) {
  if (std::holds_alternative<SubspaceClassifier>(model)) return "subspace_classifier";
  if (std::holds_alternative<SubspaceRegressor>(model)) return "subspace_regressor";
  const auto& p = std::get<LinearPredictor>(model);
  const std::string head = p.model.head == Head::classifier ? "classifier" : "regressor";
  return (p.pca ? "pca_linear_" : "linear_") + head;
}

json model_to_json(const TrainedModel& model, const SnapshotMetadata& metadata) {
  json doc;
  doc["format"] = "lexpand-model";
  doc["version"] = kSnapshotVersion;
  doc.update(parameters(model));
  doc["metadata"] = json{{"source_lexicon", metadata.source_lexicon},
                         {"normalized_targets", metadata.normalized_targets},
                         {"extra", metadata.extra}};
  return doc;
}

LoadedModel model_from_json(const json& doc) {
  try {
    if (doc.value("format", "") != "lexpand-model") throw Error("not a lexpand model snapshot");
    const int version = doc.at("version").get<int>();
    if (version != kSnapshotVersion) throw Error("unsupported snapshot version " + std::to_string(version));
    const auto kind = doc.at("kind").get<std::string>();
    const auto& blocks = doc.at("blocks");
    const auto d = doc.at("input_dim").get<Eigen::Index>();
    auto classes = doc.at("classes").get<std::vector<std::string>>();

    LoadedModel loaded{SubspaceRegressor{}, {}, {}};
    if (kind == "subspace_classifier") {
      SubspaceClassifier m;
      m.projection = read_block(blocks, "projection");
      m.weights = read_block(blocks, "weights");
      m.classes = std::move(classes);
      if (m.weights.rows() != static_cast<Eigen::Index>(m.classes.size()) || m.weights.cols() != m.projection.rows()) {
        throw Error("classifier blocks disagree on shape");
      }
      loaded.model = std::move(m);
    } else if (kind == "subspace_regressor") {
      SubspaceRegressor m;
      m.projection = read_block(blocks, "projection");
      m.weights = as_vector(read_block(blocks, "weights"));
      m.bias = read_block(blocks, "bias")(0, 0);
      if (m.weights.size() != m.projection.rows()) throw Error("regressor blocks disagree on shape");
      loaded.model = std::move(m);
    } else if (kind.starts_with("linear_") || kind.starts_with("pca_linear_")) {
      LinearPredictor p;
      p.model.head = kind.ends_with("classifier") ? Head::classifier : Head::regressor;
      p.model.regularizer = doc.at("regularizer").get<std::string>() == "l1" ? Regularizer::l1 : Regularizer::l2;
      p.model.lambda = doc.at("lambda").get<double>();
      p.model.weights = read_block(blocks, "weights");
      p.model.bias = as_vector(read_block(blocks, "bias"));
      p.model.classes = std::move(classes);
      p.model.converged = true;
      if (kind.starts_with("pca_")) {
        PcaTransform t;
        t.mean = as_vector(read_block(blocks, "pca_mean"));
        t.components = read_block(blocks, "pca_components");
        t.explained_variance = as_vector(read_block(blocks, "pca_explained_variance"));
        p.pca = std::move(t);
      }
      loaded.model = std::move(p);
    } else {
      throw Error("unknown model kind '" + kind + "'");
    }
    if (input_dim(loaded.model) != d) throw Error("snapshot input_dim disagrees with its parameter blocks");

    if (doc.contains("metadata")) {
      const auto& meta = doc.at("metadata");
      loaded.metadata.source_lexicon = meta.value("source_lexicon", "");
      loaded.metadata.normalized_targets = meta.value("normalized_targets", false);
      if (meta.contains("extra")) loaded.metadata.extra = meta.at("extra");
    }
    loaded.id = snapshot_id(loaded.model);
    return loaded;
  } catch (const json::exception& e) {
    throw Error(std::string("malformed snapshot: ") + e.what());
  }
}

void save_model(const TrainedModel& model, const SnapshotMetadata& metadata, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << model_to_json(model, metadata).dump(1) << '\n';
  if (!out) throw Error("write failed: " + path.string());
}

LoadedModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw Error(path.string() + ": " + e.what());
  }
  return model_from_json(doc);
}

std::string snapshot_id(const TrainedModel& model) {
  Fnv1a h;
  h.update(parameters(model).dump());
  return to_hex(h.digest());
}

}  // namespace lexpand
