#include "lexpand/predictor.hpp"

#include "lexpand/error.hpp"
#include "lexpand/metrics.hpp"
#include "lexpand/numeric.hpp"

namespace lexpand {
namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

void check_input(const TrainedModel& model, const Eigen::Ref<const Eigen::VectorXd>& x) {
  if (x.size() != input_dim(model)) {
    throw DimensionError("model expects " + std::to_string(input_dim(model)) + "-dimensional input, got " +
                         std::to_string(x.size()));
  }
}

}  // namespace

bool is_classifier(const TrainedModel& model) {
  return std::visit(overloaded{[](const SubspaceClassifier&) { return true; },
                               [](const SubspaceRegressor&) { return false; },
                               [](const LinearPredictor& p) { return p.model.head == Head::classifier; }},
                    model);
}

Eigen::Index input_dim(const TrainedModel& model) {
  return std::visit([](const auto& m) { return m.input_dim(); }, model);
}

const std::vector<std::string>& classes_of(const TrainedModel& model) {
  static const std::vector<std::string> none;
  return std::visit(overloaded{[](const SubspaceClassifier& m) -> const std::vector<std::string>& { return m.classes; },
                               [](const SubspaceRegressor&) -> const std::vector<std::string>& { return none; },
                               [](const LinearPredictor& p) -> const std::vector<std::string>& {
                                 return p.model.classes;
                               }},
                    model);
}

Eigen::VectorXd class_probabilities(const TrainedModel& model, const Eigen::Ref<const Eigen::VectorXd>& x) {
  check_input(model, x);
  return std::visit(
      overloaded{[&](const SubspaceClassifier& m) -> Eigen::VectorXd {
                   const Eigen::VectorXd h = sigmoid(Eigen::VectorXd(m.projection * x));
                   return softmax(m.weights * h);
                 },
                 [](const SubspaceRegressor&) -> Eigen::VectorXd {
                   throw Error("class probabilities requested from a regressor");
                 },
                 [&](const LinearPredictor& p) -> Eigen::VectorXd { return p.model.probabilities(p.features(x)); }},
      model);
}

double predicted_value(const TrainedModel& model, const Eigen::Ref<const Eigen::VectorXd>& x) {
  check_input(model, x);
  return std::visit(overloaded{[](const SubspaceClassifier&) -> double {
                                 throw Error("value requested from a classifier");
                               },
                               [&](const SubspaceRegressor& m) {
                                 const Eigen::VectorXd h = sigmoid(Eigen::VectorXd(m.projection * x));
                                 return m.weights.dot(h) + m.bias;
                               },
                               [&](const LinearPredictor& p) { return p.model.predict_value(p.features(x)); }},
                    model);
}

double score_lexicon(const TrainedModel& model, const EmbeddingMatrix& embeddings, const Lexicon& part,
                     bool strict) {
  if (input_dim(model) != embeddings.dim()) throw DimensionError("model and embeddings disagree on dimension");
  if (const auto* cat = std::get_if<CategoricalLexicon>(&part)) {
    if (!is_classifier(model)) throw Error("categorical lexicon scored with a regressor");
    if (cat->empty()) throw Error("cannot score an empty lexicon");
    std::vector<std::size_t> gold, pred;
    for (const auto& e : cat->entries) {
      const auto column = embeddings.index_of(e.token);
      if (!column) throw Error("no embedding for '" + e.token + "'");
      gold.push_back(e.label);
      pred.push_back(argmax(class_probabilities(model, embeddings.column(*column))));
    }
    return macro_avg_f1(gold, pred, cat->classes.size());
  }
  const auto& cont = std::get<ContinuousLexicon>(part);
  if (is_classifier(model)) throw Error("continuous lexicon scored with a classifier");
  std::vector<double> gold, pred;
  for (const auto& e : cont.entries) {
    const auto column = embeddings.index_of(e.token);
    if (!column) throw Error("no embedding for '" + e.token + "'");
    gold.push_back(e.score);
    pred.push_back(predicted_value(model, embeddings.column(*column)));
  }
  try {
    return kendall_tau(gold, pred);
  } catch (const UndefinedValueError&) {
    if (strict) throw;
    return 0.0;
  }
}

std::string metric_name(LexiconKind kind) {
  return kind == LexiconKind::categorical ? "macro_f1" : "kendall_tau";
}

}  // namespace lexpand
