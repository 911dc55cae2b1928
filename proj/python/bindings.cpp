#include "lexpand/error.hpp"
#include "lexpand/evaluation.hpp"
#include "lexpand/expansion.hpp"
#include "lexpand/message_sentiment.hpp"
#include "lexpand/metrics.hpp"
#include "lexpand/snapshot.hpp"
#include "lexpand/subspace_model.hpp"

#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

namespace py = pybind11;

// Exposed as a class rather than converted to a Python union.
PYBIND11_MAKE_OPAQUE(lexpand::Lexicon)
using namespace lexpand;

namespace {

// Python-facing wrapper so the variant stays opaque.
struct Model {
  TrainedModel model;
  SnapshotMetadata metadata;
};

LexiconKind parse_kind(const std::string& name) {
  if (name == "categorical") return LexiconKind::categorical;
  if (name == "continuous") return LexiconKind::continuous;
  throw Error("lexicon kind must be 'categorical' or 'continuous'");
}

std::string kind_name(LexiconKind kind) { return kind == LexiconKind::categorical ? "categorical" : "continuous"; }

HyperParams to_params(const std::map<std::string, double>& values, ModelKind kind) {
  HyperParams params;
  for (const auto& axis : default_grid(kind).axes) {
    const auto it = values.find(axis.name);
    if (it == values.end()) throw Error("missing hyper-parameter '" + axis.name + "'");
    params.emplace_back(axis.name, it->second);
  }
  if (params.size() != values.size()) throw Error("unknown hyper-parameter for model " + to_string(kind));
  return params;
}

py::dict params_dict(const HyperParams& params) {
  py::dict d;
  for (const auto& [k, v] : params) d[py::str(k)] = v;
  return d;
}

py::dict report_dict(const EvalReport& r) {
  py::list cells;
  for (const auto& c : r.cells) {
    py::dict cell;
    cell["params"] = params_dict(c.params);
    cell["ok"] = c.ok;
    cell["dev_score"] = c.ok ? py::object(py::float_(c.dev_score)) : py::none();
    cell["best_epoch"] = c.best_epoch;
    cell["error"] = c.error;
    cells.append(cell);
  }
  py::dict d;
  d["task"] = r.task;
  d["model"] = to_string(r.kind);
  d["chosen"] = params_dict(r.chosen);
  d["metric"] = r.metric;
  d["dev_score"] = r.dev_score;
  d["test_score"] = r.test_score;
  d["seed"] = r.seed;
  d["seconds"] = r.seconds;
  d["cells"] = cells;
  return d;
}

SearchOptions search_options(int max_epochs, int patience, bool refit, std::size_t workers) {
  SearchOptions o;
  o.max_epochs = max_epochs;
  o.patience = patience;
  o.refit_on_train_dev = refit;
  o.workers = workers;
  return o;
}

}  // namespace

PYBIND11_MODULE(_lexpand, m) {
  m.doc() = "Sentiment lexicon expansion with task-specific embedding subspaces";
  // Later registrations are tried first, so the subclass goes last.
  const auto& base = py::register_exception<Error>(m, "LexpandError", PyExc_ValueError);
  py::register_exception<ParseError>(m, "ParseError", base);

  py::class_<EmbeddingMatrix>(m, "Embeddings")
      .def(py::init<std::vector<std::string>, Eigen::MatrixXd>(), py::arg("vocab"), py::arg("values"),
           "Build from tokens and a d x |V| matrix, one column per token.")
      .def_property_readonly("dim", &EmbeddingMatrix::dim)
      .def("__len__", &EmbeddingMatrix::size)
      .def_property_readonly("vocab", &EmbeddingMatrix::vocab)
      .def_property_readonly("values", &EmbeddingMatrix::values)
      .def("__contains__", &EmbeddingMatrix::contains)
      .def("lookup", &EmbeddingMatrix::lookup, py::arg("token"))
      .def("checksum", &EmbeddingMatrix::checksum);
  m.def(
      "load_embeddings",
      [](const std::filesystem::path& path, bool binary) {
        return load_embeddings(path, binary ? EmbeddingFormat::binary : EmbeddingFormat::text);
      },
      py::arg("path"), py::arg("binary") = false);

  py::class_<Lexicon>(m, "Lexicon")
      .def_property_readonly("kind", [](const Lexicon& l) { return kind_name(kind_of(l)); })
      .def("__len__", [](const Lexicon& l) { return size_of(l); })
      .def_property_readonly("tokens", [](const Lexicon& l) { return tokens_of(l); })
      .def_property_readonly("classes",
                             [](const Lexicon& l) {
                               const auto* c = std::get_if<CategoricalLexicon>(&l);
                               return c ? c->classes : std::vector<std::string>{};
                             })
      .def("items", [](const Lexicon& l) {
        py::list out;
        if (const auto* c = std::get_if<CategoricalLexicon>(&l)) {
          for (const auto& e : c->entries) out.append(py::make_tuple(e.token, c->classes[e.label]));
        } else {
          for (const auto& e : std::get<ContinuousLexicon>(l).entries) out.append(py::make_tuple(e.token, e.score));
        }
        return out;
      });
  m.def(
      "parse_lexicon",
      [](const std::filesystem::path& path, const std::string& kind, std::optional<std::pair<double, double>> scale,
         bool label_first) {
        LexiconFormat format{parse_kind(kind), std::nullopt,
                             label_first ? ColumnOrder::label_first : ColumnOrder::token_first};
        if (scale) format.scale = Scale{scale->first, scale->second};
        return parse_lexicon(path, format);
      },
      py::arg("path"), py::arg("kind") = "continuous", py::arg("scale") = py::none(),
      py::arg("label_first") = false);
  m.def(
      "continuous_lexicon",
      [](const std::vector<std::pair<std::string, double>>& items, std::optional<std::pair<double, double>> scale) {
        ContinuousLexicon lex;
        if (scale) lex.scale = Scale{scale->first, scale->second};
        for (const auto& [t, s] : items) lex.entries.push_back({t, s});
        return Lexicon{std::move(lex)};
      },
      py::arg("items"), py::arg("scale") = py::none());
  m.def(
      "normalize",
      [](const Lexicon& l) { return Lexicon{normalize_to_unit_range(std::get<ContinuousLexicon>(l))}; },
      py::arg("lexicon"));
  m.def(
      "filter_neutral",
      [](const Lexicon& l, double band) { return Lexicon{filter_neutral(std::get<ContinuousLexicon>(l), band)}; },
      py::arg("lexicon"), py::arg("band") = 0.2);
  m.def("restrict_to_vocabulary", &restrict_to_vocabulary, py::arg("lexicon"), py::arg("embeddings"));

  py::class_<DatasetSplit>(m, "Split")
      .def_readonly("train", &DatasetSplit::train)
      .def_readonly("dev", &DatasetSplit::dev)
      .def_readonly("test", &DatasetSplit::test)
      .def_readonly("seed", &DatasetSplit::seed);
  m.def(
      "split_dataset",
      [](const Lexicon& l, double test_fraction, double dev_fraction, std::uint64_t seed) {
        return split_dataset(l, {test_fraction, dev_fraction, seed});
      },
      py::arg("lexicon"), py::arg("test_fraction") = 0.2, py::arg("dev_fraction") = 0.2, py::arg("seed") = 1);

  py::class_<Model>(m, "Model")
      .def_property_readonly("kind", [](const Model& mdl) { return model_kind_tag(mdl.model); })
      .def_property_readonly("input_dim", [](const Model& mdl) { return input_dim(mdl.model); })
      .def_property_readonly("classes", [](const Model& mdl) { return classes_of(mdl.model); })
      .def_property_readonly("is_classifier", [](const Model& mdl) { return is_classifier(mdl.model); })
      .def_property_readonly("snapshot_id", [](const Model& mdl) { return snapshot_id(mdl.model); })
      .def(
          "predict",
          [](const Model& mdl, const Eigen::VectorXd& x) -> py::object {
            if (x.size() != input_dim(mdl.model)) throw DimensionError("input has the wrong dimension");
            if (is_classifier(mdl.model)) return py::cast(Eigen::VectorXd(class_probabilities(mdl.model, x)));
            return py::float_(predicted_value(mdl.model, x));
          },
          py::arg("x"), "Class probabilities for classifiers, the predicted score for regressors.")
      .def(
          "score",
          [](const Model& mdl, const EmbeddingMatrix& e, const Lexicon& part) { return score_lexicon(mdl.model, e, part); },
          py::arg("embeddings"), py::arg("lexicon"), "Macro-F1 or Kendall tau on a lexicon part.")
      .def(
          "project",
          [](const Model& mdl, const EmbeddingMatrix& e, const std::string& token) {
            if (const auto* c = std::get_if<SubspaceClassifier>(&mdl.model)) return project_word(SubspaceModel{*c}, e, token);
            if (const auto* r = std::get_if<SubspaceRegressor>(&mdl.model)) return project_word(SubspaceModel{*r}, e, token);
            throw Error("only nlse models have a subspace");
          },
          py::arg("embeddings"), py::arg("token"))
      .def(
          "save", [](const Model& mdl, const std::filesystem::path& path) { save_model(mdl.model, mdl.metadata, path); },
          py::arg("path"));
  m.def(
      "load_model",
      [](const std::filesystem::path& path) {
        auto loaded = load_model(path);
        return Model{std::move(loaded.model), std::move(loaded.metadata)};
      },
      py::arg("path"));

  m.def(
      "default_grid",
      [](const std::string& model) {
        std::map<std::string, std::vector<double>> out;
        for (const auto& a : default_grid(parse_model_kind(model)).axes) out[a.name] = a.values;
        return out;
      },
      py::arg("model"));
  m.def(
      "train",
      [](const std::string& model, const std::map<std::string, double>& params, const EmbeddingMatrix& e,
         const DatasetSplit& split, std::uint64_t seed, int max_epochs, int patience) {
        const ModelKind kind = parse_model_kind(model);
        const HyperParams hp = to_params(params, kind);
        std::optional<TrainedCell> cell;
        {
          py::gil_scoped_release release;
          cell = train_cell(kind, hp, e, split.train, split.dev, seed, search_options(max_epochs, patience, false, 1));
        }
        return py::make_tuple(Model{std::move(cell->model), {}}, cell->best_epoch);
      },
      py::arg("model"), py::arg("params"), py::arg("embeddings"), py::arg("split"), py::arg("seed") = 1,
      py::arg("max_epochs") = 200, py::arg("patience") = 10,
      "Train one model on split.train with early stopping on split.dev; returns (model, best_epoch).");
  m.def(
      "grid_search",
      [](const std::string& model, const DatasetSplit& split, const EmbeddingMatrix& e, std::uint64_t seed,
         std::optional<std::map<std::string, std::vector<double>>> grid, int max_epochs, int patience, bool refit,
         std::size_t workers, const std::string& task) {
        const ModelKind kind = parse_model_kind(model);
        HyperGrid g = default_grid(kind);
        if (grid) {
          for (const auto& [name, values] : *grid) {
            if (!g.override_axis(name, values)) throw Error("model " + model + " has no hyper-parameter '" + name + "'");
          }
        }
        std::optional<std::pair<EvalReport, TrainedModel>> result;
        {
          py::gil_scoped_release release;
          result = grid_search_with_model(task, kind, g, split, e, seed,
                                          search_options(max_epochs, patience, refit, workers));
        }
        return py::make_tuple(report_dict(result->first), Model{std::move(result->second), {}});
      },
      py::arg("model"), py::arg("split"), py::arg("embeddings"), py::arg("seed") = 1, py::arg("grid") = py::none(),
      py::arg("max_epochs") = 200, py::arg("patience") = 10, py::arg("refit") = true, py::arg("workers") = 1,
      py::arg("task") = "task", "Select hyper-parameters on dev and score on test; returns (report, model).");

  m.def(
      "expand",
      [](const Model& mdl, const EmbeddingMatrix& e, std::optional<double> min_confidence, bool clamp,
         std::size_t workers, std::optional<std::filesystem::path> out) {
        ExpansionOptions o;
        o.min_confidence = min_confidence;
        o.clamp_to_unit = clamp;
        o.workers = workers;
        const auto lex = expand(mdl.model, e, o);
        if (out) write_lexicon(lex, *out);
        py::list entries;
        for (const auto& entry : lex.entries) {
          if (entry.label) {
            entries.append(py::make_tuple(entry.token, lex.classes[*entry.label], entry.score));
          } else {
            entries.append(py::make_tuple(entry.token, entry.score));
          }
        }
        return entries;
      },
      py::arg("model"), py::arg("embeddings"), py::arg("min_confidence") = py::none(), py::arg("clamp") = false,
      py::arg("workers") = 1, py::arg("out") = py::none(),
      "Score every embedding word; optionally write the TSV lexicon to `out`.");

  m.def("kendall_tau", [](const std::vector<double>& x, const std::vector<double>& y) { return kendall_tau(x, y); },
        py::arg("x"), py::arg("y"));
  m.def(
      "macro_f1",
      [](const std::vector<std::string>& gold, const std::vector<std::string>& pred,
         const std::vector<std::string>& classes) { return macro_avg_f1(gold, pred, classes); },
      py::arg("gold"), py::arg("pred"), py::arg("classes"));

  m.def("tokenize", &tokenize, py::arg("text"));
  m.def(
      "score_message",
      [](const ScoreTable& lexicon, const std::string& text) { return score_message(lexicon, Message::from_text(text)); },
      py::arg("lexicon"), py::arg("text"));
  m.def(
      "classify",
      [](const ScoreTable& lexicon, const std::vector<std::string>& texts, std::optional<double> threshold) {
        std::vector<Message> messages;
        for (const auto& t : texts) messages.push_back(Message::from_text(t));
        LexiconClassifier clf{lexicon, threshold ? *threshold : estimate_threshold(lexicon, messages)};
        py::list out;
        for (const auto& msg : messages) {
          const auto d = classify_message(clf, msg);
          out.append(py::make_tuple(std::string(to_string(d.label)), d.score));
        }
        return py::make_tuple(out, clf.threshold);
      },
      py::arg("lexicon"), py::arg("texts"), py::arg("threshold") = py::none(),
      "Label messages; returns ([(label, score or None)], threshold).");
  m.def(
      "lexicon_features",
      [](const ScoreTable& lexicon, const std::string& text) {
        return extract_lexicon_features(lexicon, Message::from_text(text));
      },
      py::arg("lexicon"), py::arg("text"));
}
