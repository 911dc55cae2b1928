#pragma once

#include "lexpand/baselines.hpp"
#include "lexpand/embedding_store.hpp"
#include "lexpand/subspace_model.hpp"

#include <Eigen/Dense>

#include <string>
#include <variant>
#include <vector>

namespace lexpand {

// Any model that maps one embedding column to a class or a value.
using TrainedModel = std::variant<SubspaceClassifier, SubspaceRegressor, LinearPredictor>;

bool is_classifier(const TrainedModel& model);
Eigen::Index input_dim(const TrainedModel& model);
const std::vector<std::string>& classes_of(const TrainedModel& model);  // empty for regressors

// Class probabilities (classifiers only).
Eigen::VectorXd class_probabilities(const TrainedModel& model, const Eigen::Ref<const Eigen::VectorXd>& x);
// Regression output (regressors only).
double predicted_value(const TrainedModel& model, const Eigen::Ref<const Eigen::VectorXd>& x);

// Task metric of `model` on a lexicon part: macro F1 for categorical lexicons,
// Kendall tau-b for continuous ones. An undefined tau (constant predictions)
// scores 0 unless `strict` is set, in which case UndefinedValueError propagates.
double score_lexicon(const TrainedModel& model, const EmbeddingMatrix& embeddings, const Lexicon& part,
                     bool strict = false);

std::string metric_name(LexiconKind kind);

}  // namespace lexpand
