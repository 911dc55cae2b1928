#include "lexpand/subspace_model.hpp"

#include "lexpand/error.hpp"
#include "lexpand/hash.hpp"
#include "lexpand/metrics.hpp"
#include "lexpand/numeric.hpp"
#include "lexpand/random.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace lexpand {
namespace {

void check_dims(Eigen::Index input_dim, const EmbeddingMatrix& embeddings) {
  if (input_dim != embeddings.dim()) {
    throw DimensionError("model expects " + std::to_string(input_dim) + "-dimensional embeddings, got " +
                         std::to_string(embeddings.dim()));
  }
}

void check_subspace(Eigen::Index input_dim, Eigen::Index subspace_size) {
  if (input_dim < 1) throw DimensionError("input dimension must be positive");
  if (subspace_size < 1 || subspace_size > input_dim) {
    throw DimensionError("subspace size " + std::to_string(subspace_size) + " must lie in [1, " +
                         std::to_string(input_dim) + "]");
  }
}

Eigen::MatrixXd init_projection(Eigen::Index d, Eigen::Index s, std::uint64_t seed, std::optional<double> bound) {
  check_subspace(d, s);
  const double b = bound ? *bound : std::sqrt(6.0 / static_cast<double>(d + s));
  if (!(b >= 0.0) || !std::isfinite(b)) throw Error("initialization bound must be finite and non-negative");
  Rng rng(derive_seed(seed, 0x1417));
  Eigen::MatrixXd projection(s, d);
  // Row-major fill order so the draw sequence matches the serialized layout.
  for (Eigen::Index r = 0; r < s; ++r) {
    for (Eigen::Index c = 0; c < d; ++c) projection(r, c) = rng.uniform(-b, b);
  }
  return projection;
}

void check_batch(std::size_t size) {
  if (size == 0) throw Error("batch must not be empty");
}

void check_label(const SubspaceClassifier& model, std::size_t label) {
  if (label >= static_cast<std::size_t>(model.weights.rows())) {
    throw Error("class index " + std::to_string(label) + " outside the model's class set");
  }
}

// Scratch buffers for one forward/backward pass.
struct Workspace {
  Eigen::VectorXd hidden;
  Eigen::VectorXd scores;
  Eigen::VectorXd delta_hidden;

  void hidden_from(const Eigen::MatrixXd& projection, const Eigen::Ref<const Eigen::VectorXd>& x) {
    hidden.noalias() = projection * x;
    for (Eigen::Index k = 0; k < hidden.size(); ++k) hidden[k] = sigmoid(hidden[k]);
  }
};

// Loss of one example; fills grad_scores = dloss/dlogits.
double classifier_pass(const SubspaceClassifier& model, const Eigen::Ref<const Eigen::VectorXd>& x,
                       std::size_t label, Workspace& ws) {
  ws.hidden_from(model.projection, x);
  ws.scores.noalias() = model.weights * ws.hidden;
  const double lse = log_sum_exp(ws.scores);
  const double loss = lse - ws.scores[static_cast<Eigen::Index>(label)];
  ws.scores = (ws.scores.array() - lse).exp();  // probabilities
  ws.scores[static_cast<Eigen::Index>(label)] -= 1.0;
  return loss;
}

// Returns the residual dloss/dprediction = 2 (prediction - target) via `residual`.
double regressor_pass(const SubspaceRegressor& model, const Eigen::Ref<const Eigen::VectorXd>& x,
                      double target, Workspace& ws, double& residual) {
  ws.hidden_from(model.projection, x);
  const double prediction = model.weights.dot(ws.hidden) + model.bias;
  const double err = prediction - target;
  residual = 2.0 * err;
  return err * err;
}

// delta_hidden = (dloss/dh) * h * (1 - h)
void backprop_hidden(Workspace& ws) {
  ws.delta_hidden.array() *= ws.hidden.array() * (1.0 - ws.hidden.array());
}

double dev_macro_f1(const SubspaceClassifier& model, const EmbeddingMatrix& embeddings,
                    std::span<const ClassSample> dev) {
  std::vector<std::size_t> gold, pred;
  gold.reserve(dev.size());
  pred.reserve(dev.size());
  for (const auto& s : dev) {
    gold.push_back(s.label);
    pred.push_back(predict_class(model, embeddings, s.column));
  }
  return macro_avg_f1(gold, pred, model.classes.size());
}

double dev_kendall(const SubspaceRegressor& model, const EmbeddingMatrix& embeddings,
                   std::span<const ValueSample> dev) {
  if (dev.size() < 2) return 0.0;
  std::vector<double> gold, pred;
  gold.reserve(dev.size());
  pred.reserve(dev.size());
  for (const auto& s : dev) {
    gold.push_back(s.target);
    pred.push_back(predict_value(model, embeddings, s.column));
  }
  try {
    return kendall_tau(gold, pred);
  } catch (const UndefinedValueError&) {
    return 0.0;  // constant predictions carry no ranking information
  }
}

// Shared epoch loop. `Model` is SubspaceClassifier or SubspaceRegressor.
template <typename Model, typename Sample, typename Step, typename Loss, typename Metric>
TrainTrace run_sgd(Model& model, std::span<const Sample> train, std::span<const Sample> dev,
                   const TrainConfig& config, const char* metric_name, Step&& step, Loss&& loss,
                   Metric&& metric) {
  if (config.max_epochs < 1) throw Error("max_epochs must be positive");
  if (config.patience < 1) throw Error("patience must be positive");
  if (!(config.learning_rate > 0.0) || !std::isfinite(config.learning_rate)) {
    throw Error("learning rate must be positive");
  }

  TrainTrace trace;
  trace.metric = metric_name;
  trace.initial_train_loss = loss(model);

  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), 0);
  Rng rng(derive_seed(config.seed, 0x5eed));

  Model best = model;
  double best_metric = -std::numeric_limits<double>::infinity();
  int stale = 0;
  const double n = static_cast<double>(train.size());

  for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
    rng.shuffle(std::span<std::size_t>(order));
    for (const auto i : order) step(model, train[i]);

    EpochRecord record;
    record.epoch = epoch;
    record.train_loss = loss(model);
    record.mean_train_loss = record.train_loss / n;
    if (!std::isfinite(record.train_loss)) throw Error("training diverged (non-finite loss)");

    if (!dev.empty()) {
      record.dev_metric = metric(model);
      if (*record.dev_metric > best_metric) {
        best_metric = *record.dev_metric;
        best = model;
        trace.best_epoch = epoch;
        stale = 0;
      } else {
        ++stale;
      }
    } else {
      trace.best_epoch = epoch;
    }
    trace.epochs.push_back(record);
    if (!dev.empty() && stale >= config.patience) break;
  }
  if (!dev.empty()) model = std::move(best);
  return trace;
}

}  // namespace

SubspaceClassifier make_classifier(Eigen::Index input_dim, Eigen::Index subspace_size,
                                   std::vector<std::string> classes, std::uint64_t seed,
                                   std::optional<double> init_bound) {
  if (classes.size() < 2) throw Error("a classifier needs at least two classes");
  SubspaceClassifier model;
  model.projection = init_projection(input_dim, subspace_size, seed, init_bound);
  model.weights = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(classes.size()), subspace_size);
  model.classes = std::move(classes);
  return model;
}

SubspaceRegressor make_regressor(Eigen::Index input_dim, Eigen::Index subspace_size, std::uint64_t seed,
                                 std::optional<double> init_bound) {
  SubspaceRegressor model;
  model.projection = init_projection(input_dim, subspace_size, seed, init_bound);
  model.weights = Eigen::VectorXd::Zero(subspace_size);
  model.bias = 0.0;
  return model;
}

std::vector<ClassSample> resolve_samples(const EmbeddingMatrix& embeddings, const CategoricalLexicon& lexicon) {
  std::vector<ClassSample> out;
  out.reserve(lexicon.size());
  for (const auto& e : lexicon.entries) {
    const auto column = embeddings.index_of(e.token);
    if (!column) throw Error("no embedding for lexicon word '" + e.token + "'");
    out.push_back({*column, e.label});
  }
  return out;
}

std::vector<ValueSample> resolve_samples(const EmbeddingMatrix& embeddings, const ContinuousLexicon& lexicon) {
  std::vector<ValueSample> out;
  out.reserve(lexicon.size());
  for (const auto& e : lexicon.entries) {
    const auto column = embeddings.index_of(e.token);
    if (!column) throw Error("no embedding for lexicon word '" + e.token + "'");
    out.push_back({*column, e.score});
  }
  return out;
}

Eigen::VectorXd forward_hidden(const Eigen::MatrixXd& projection, const EmbeddingMatrix& embeddings,
                               Eigen::Index column) {
  check_dims(projection.cols(), embeddings);
  return sigmoid(Eigen::VectorXd(projection * embeddings.column(column)));
}

Eigen::VectorXd forward_hidden(const SubspaceClassifier& model, const EmbeddingMatrix& embeddings,
                               Eigen::Index column) {
  return forward_hidden(model.projection, embeddings, column);
}

Eigen::VectorXd forward_hidden(const SubspaceRegressor& model, const EmbeddingMatrix& embeddings,
                               Eigen::Index column) {
  return forward_hidden(model.projection, embeddings, column);
}

Eigen::VectorXd classify_proba(const SubspaceClassifier& model, const EmbeddingMatrix& embeddings,
                               Eigen::Index column) {
  if (model.weights.cols() != model.projection.rows()) throw DimensionError("weights and projection disagree");
  return softmax(model.weights * forward_hidden(model, embeddings, column));
}

std::size_t predict_class(const SubspaceClassifier& model, const EmbeddingMatrix& embeddings,
                          Eigen::Index column) {
  return argmax(classify_proba(model, embeddings, column));
}

double predict_value(const SubspaceRegressor& model, const EmbeddingMatrix& embeddings, Eigen::Index column) {
  if (model.weights.size() != model.projection.rows()) throw DimensionError("weights and projection disagree");
  return model.weights.dot(forward_hidden(model, embeddings, column)) + model.bias;
}

double nll_loss(const SubspaceClassifier& model, const EmbeddingMatrix& embeddings,
                std::span<const ClassSample> batch) {
  check_batch(batch.size());
  check_dims(model.input_dim(), embeddings);
  Workspace ws;
  double total = 0.0;
  for (const auto& s : batch) {
    check_label(model, s.label);
    total += classifier_pass(model, embeddings.column(s.column), s.label, ws);
  }
  return total;
}

double mse_loss(const SubspaceRegressor& model, const EmbeddingMatrix& embeddings,
                std::span<const ValueSample> batch) {
  check_batch(batch.size());
  check_dims(model.input_dim(), embeddings);
  Workspace ws;
  double total = 0.0;
  double residual = 0.0;
  for (const auto& s : batch) total += regressor_pass(model, embeddings.column(s.column), s.target, ws, residual);
  return total;
}

ClassifierGradient gradients(const SubspaceClassifier& model, const EmbeddingMatrix& embeddings,
                             std::span<const ClassSample> batch) {
  check_batch(batch.size());
  check_dims(model.input_dim(), embeddings);
  ClassifierGradient grad{Eigen::MatrixXd::Zero(model.projection.rows(), model.projection.cols()),
                          Eigen::MatrixXd::Zero(model.weights.rows(), model.weights.cols())};
  Workspace ws;
  for (const auto& s : batch) {
    check_label(model, s.label);
    const auto x = embeddings.column(s.column);
    classifier_pass(model, x, s.label, ws);
    grad.weights.noalias() += ws.scores * ws.hidden.transpose();
    ws.delta_hidden.noalias() = model.weights.transpose() * ws.scores;
    backprop_hidden(ws);
    grad.projection.noalias() += ws.delta_hidden * x.transpose();
  }
  return grad;
}

RegressorGradient gradients(const SubspaceRegressor& model, const EmbeddingMatrix& embeddings,
                            std::span<const ValueSample> batch) {
  check_batch(batch.size());
  check_dims(model.input_dim(), embeddings);
  RegressorGradient grad{Eigen::MatrixXd::Zero(model.projection.rows(), model.projection.cols()),
                         Eigen::VectorXd::Zero(model.weights.size()), 0.0};
  Workspace ws;
  double residual = 0.0;
  for (const auto& s : batch) {
    const auto x = embeddings.column(s.column);
    regressor_pass(model, x, s.target, ws, residual);
    grad.weights += residual * ws.hidden;
    grad.bias += residual;
    ws.delta_hidden = residual * model.weights;
    backprop_hidden(ws);
    grad.projection.noalias() += ws.delta_hidden * x.transpose();
  }
  return grad;
}

ClassifierFit train_classifier(const EmbeddingMatrix& embeddings, std::span<const ClassSample> train,
                               std::span<const ClassSample> dev, std::vector<std::string> classes,
                               const TrainConfig& config) {
  if (train.empty()) throw Error("empty training set");
  const std::size_t num_classes = classes.size();
  for (const auto& s : train) {
    if (s.label >= num_classes) throw Error("training label outside class set");
  }
  for (const auto& s : dev) {
    if (s.label >= num_classes) throw Error("dev label outside class set");
  }
  const bool single_class = std::all_of(train.begin(), train.end(),
                                        [&](const ClassSample& s) { return s.label == train.front().label; });
  if (single_class) throw Error("training set contains a single class");

  ClassifierFit fit;
  fit.model = make_classifier(embeddings.dim(), config.subspace_size, std::move(classes), config.seed,
                              config.init_bound);
  Workspace ws;
  const double lr = config.learning_rate;
  auto step = [&](SubspaceClassifier& m, const ClassSample& s) {
    const auto x = embeddings.column(s.column);
    classifier_pass(m, x, s.label, ws);
    ws.delta_hidden.noalias() = m.weights.transpose() * ws.scores;  // uses W before its update
    backprop_hidden(ws);
    m.weights.noalias() -= lr * ws.scores * ws.hidden.transpose();
    m.projection.noalias() -= lr * ws.delta_hidden * x.transpose();
  };
  auto loss = [&](const SubspaceClassifier& m) { return nll_loss(m, embeddings, train); };
  auto metric = [&](const SubspaceClassifier& m) { return dev_macro_f1(m, embeddings, dev); };
  fit.trace = run_sgd(fit.model, train, dev, config, "macro_f1", step, loss, metric);
  fit.trace.snapshot_id = parameter_hash(fit.model);
  return fit;
}

RegressorFit train_regressor(const EmbeddingMatrix& embeddings, std::span<const ValueSample> train,
                             std::span<const ValueSample> dev, const TrainConfig& config) {
  if (train.empty()) throw Error("empty training set");
  RegressorFit fit;
  fit.model = make_regressor(embeddings.dim(), config.subspace_size, config.seed, config.init_bound);
  Workspace ws;
  const double lr = config.learning_rate;
  auto step = [&](SubspaceRegressor& m, const ValueSample& s) {
    const auto x = embeddings.column(s.column);
    double residual = 0.0;
    regressor_pass(m, x, s.target, ws, residual);
    ws.delta_hidden = residual * m.weights;
    backprop_hidden(ws);
    m.weights -= (lr * residual) * ws.hidden;
    m.bias -= lr * residual;
    m.projection.noalias() -= lr * ws.delta_hidden * x.transpose();
  };
  auto loss = [&](const SubspaceRegressor& m) { return mse_loss(m, embeddings, train); };
  auto metric = [&](const SubspaceRegressor& m) { return dev_kendall(m, embeddings, dev); };
  fit.trace = run_sgd(fit.model, train, dev, config, "kendall_tau", step, loss, metric);
  fit.trace.snapshot_id = parameter_hash(fit.model);
  return fit;
}

SubspaceFit train_subspace(const EmbeddingMatrix& embeddings, const DatasetSplit& split,
                           const TrainConfig& config) {
  if (const auto* train = std::get_if<CategoricalLexicon>(&split.train)) {
    const auto train_samples = resolve_samples(embeddings, *train);
    const auto dev_samples = resolve_samples(embeddings, std::get<CategoricalLexicon>(split.dev));
    auto fit = train_classifier(embeddings, train_samples, dev_samples, train->classes, config);
    return {std::move(fit.model), std::move(fit.trace)};
  }
  const auto train_samples = resolve_samples(embeddings, std::get<ContinuousLexicon>(split.train));
  const auto dev_samples = resolve_samples(embeddings, std::get<ContinuousLexicon>(split.dev));
  auto fit = train_regressor(embeddings, train_samples, dev_samples, config);
  return {std::move(fit.model), std::move(fit.trace)};
}

Eigen::VectorXd project_word(const SubspaceModel& model, const EmbeddingMatrix& embeddings,
                             std::string_view token) {
  const auto column = embeddings.index_of(token);
  if (!column) throw Error("unknown token '" + std::string(token) + "'");
  return std::visit([&](const auto& m) { return forward_hidden(m, embeddings, *column); }, model);
}

std::string parameter_hash(const SubspaceClassifier& model) {
  Fnv1a h;
  h.update("classifier");
  h.update(model.projection.data(), static_cast<std::size_t>(model.projection.size()) * sizeof(double));
  h.update(model.weights.data(), static_cast<std::size_t>(model.weights.size()) * sizeof(double));
  for (const auto& c : model.classes) {
    h.update(c);
    h.update("\0", 1);
  }
  return to_hex(h.digest());
}

std::string parameter_hash(const SubspaceRegressor& model) {
  Fnv1a h;
  h.update("regressor");
  h.update(model.projection.data(), static_cast<std::size_t>(model.projection.size()) * sizeof(double));
  h.update(model.weights.data(), static_cast<std::size_t>(model.weights.size()) * sizeof(double));
  h.update(model.bias);
  return to_hex(h.digest());
}

nlohmann::json trace_to_json(const TrainTrace& trace) {
  nlohmann::json epochs = nlohmann::json::array();
  for (const auto& e : trace.epochs) {
    nlohmann::json row{{"epoch", e.epoch}, {"train_loss", e.train_loss}, {"mean_train_loss", e.mean_train_loss}};
    row["dev_metric"] = e.dev_metric ? nlohmann::json(*e.dev_metric) : nlohmann::json();
    epochs.push_back(std::move(row));
  }
  return nlohmann::json{{"metric", trace.metric},
                        {"initial_train_loss", trace.initial_train_loss},
                        {"best_epoch", trace.best_epoch},
                        {"snapshot_id", trace.snapshot_id},
                        {"epochs", std::move(epochs)}};
}

}  // namespace lexpand
