#pragma once

#include "lexpand/embedding_store.hpp"
#include "lexpand/lexicon.hpp"

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace lexpand {

// Projection S (s x d) into a sigmoid sub-space followed by a softmax over |Y| classes.
struct SubspaceClassifier {
  Eigen::MatrixXd projection;  // s x d
  Eigen::MatrixXd weights;     // |Y| x s
  std::vector<std::string> classes;

  Eigen::Index input_dim() const noexcept { return projection.cols(); }
  Eigen::Index subspace_size() const noexcept { return projection.rows(); }
};

// Same projection followed by a linear regressor w . h + b.
struct SubspaceRegressor {
  Eigen::MatrixXd projection;  // s x d
  Eigen::VectorXd weights;     // s
  double bias = 0.0;

  Eigen::Index input_dim() const noexcept { return projection.cols(); }
  Eigen::Index subspace_size() const noexcept { return projection.rows(); }
};

// Zero heads, projection uniform in +-bound; bound defaults to sqrt(6 / (d + s)).
SubspaceClassifier make_classifier(Eigen::Index input_dim, Eigen::Index subspace_size,
                                   std::vector<std::string> classes, std::uint64_t seed,
                                   std::optional<double> init_bound = std::nullopt);
SubspaceRegressor make_regressor(Eigen::Index input_dim, Eigen::Index subspace_size, std::uint64_t seed,
                                 std::optional<double> init_bound = std::nullopt);

struct ClassSample {
  Eigen::Index column = 0;
  std::size_t label = 0;
};

struct ValueSample {
  Eigen::Index column = 0;
  double target = 0.0;
};

// Maps lexicon entries to embedding columns; throws on tokens missing from E.
std::vector<ClassSample> resolve_samples(const EmbeddingMatrix& embeddings, const CategoricalLexicon& lexicon);
std::vector<ValueSample> resolve_samples(const EmbeddingMatrix& embeddings, const ContinuousLexicon& lexicon);

// h = sigmoid(S E[:, i]); every component lies strictly in (0, 1).
Eigen::VectorXd forward_hidden(const Eigen::MatrixXd& projection, const EmbeddingMatrix& embeddings,
                               Eigen::Index column);
Eigen::VectorXd forward_hidden(const SubspaceClassifier& model, const EmbeddingMatrix& embeddings,
                               Eigen::Index column);
Eigen::VectorXd forward_hidden(const SubspaceRegressor& model, const EmbeddingMatrix& embeddings,
                               Eigen::Index column);

Eigen::VectorXd classify_proba(const SubspaceClassifier& model, const EmbeddingMatrix& embeddings,
                               Eigen::Index column);
std::size_t predict_class(const SubspaceClassifier& model, const EmbeddingMatrix& embeddings,
                          Eigen::Index column);
double predict_value(const SubspaceRegressor& model, const EmbeddingMatrix& embeddings, Eigen::Index column);

// Summed negative log-likelihood (natural log) over the batch.
double nll_loss(const SubspaceClassifier& model, const EmbeddingMatrix& embeddings,
                std::span<const ClassSample> batch);
// Summed squared error over the batch.
double mse_loss(const SubspaceRegressor& model, const EmbeddingMatrix& embeddings,
                std::span<const ValueSample> batch);

struct ClassifierGradient {
  Eigen::MatrixXd projection;
  Eigen::MatrixXd weights;
};

struct RegressorGradient {
  Eigen::MatrixXd projection;
  Eigen::VectorXd weights;
  double bias = 0.0;
};

// Analytic gradients of the summed losses. E is never differentiated.
ClassifierGradient gradients(const SubspaceClassifier& model, const EmbeddingMatrix& embeddings,
                             std::span<const ClassSample> batch);
RegressorGradient gradients(const SubspaceRegressor& model, const EmbeddingMatrix& embeddings,
                            std::span<const ValueSample> batch);

struct TrainConfig {
  Eigen::Index subspace_size = 10;
  double learning_rate = 0.05;
  int max_epochs = 200;
  int patience = 10;
  std::uint64_t seed = 1;
  std::optional<double> init_bound;  // nullopt: sqrt(6 / (d + s))
};

struct EpochRecord {
  int epoch = 0;             // 1-based
  double train_loss = 0.0;   // summed loss over the train set after the epoch
  double mean_train_loss = 0.0;
  std::optional<double> dev_metric;
};

struct TrainTrace {
  std::string metric;        // "macro_f1" or "kendall_tau"
  double initial_train_loss = 0.0;
  std::vector<EpochRecord> epochs;
  int best_epoch = 0;
  std::string snapshot_id;   // hash of the returned parameters
};

struct ClassifierFit {
  SubspaceClassifier model;
  TrainTrace trace;
};

struct RegressorFit {
  SubspaceRegressor model;
  TrainTrace trace;
};

// Per-example SGD with a constant learning rate; the order is reshuffled every
// epoch. When `dev` is non-empty the dev metric is evaluated after each epoch
// and the best epoch's parameters are returned, stopping after `patience`
// epochs without improvement. With an empty dev set exactly `max_epochs`
// epochs run and the final parameters are returned.
ClassifierFit train_classifier(const EmbeddingMatrix& embeddings, std::span<const ClassSample> train,
                               std::span<const ClassSample> dev, std::vector<std::string> classes,
                               const TrainConfig& config);
RegressorFit train_regressor(const EmbeddingMatrix& embeddings, std::span<const ValueSample> train,
                             std::span<const ValueSample> dev, const TrainConfig& config);

using SubspaceModel = std::variant<SubspaceClassifier, SubspaceRegressor>;

struct SubspaceFit {
  SubspaceModel model;
  TrainTrace trace;
};

// Trains the head matching the split's lexicon kind. Every token must have an embedding.
SubspaceFit train_subspace(const EmbeddingMatrix& embeddings, const DatasetSplit& split,
                           const TrainConfig& config);

// The adapted representation h of a word.
Eigen::VectorXd project_word(const SubspaceModel& model, const EmbeddingMatrix& embeddings,
                             std::string_view token);

std::string parameter_hash(const SubspaceClassifier& model);
std::string parameter_hash(const SubspaceRegressor& model);

nlohmann::json trace_to_json(const TrainTrace& trace);

}  // namespace lexpand
