#include "fixtures.hpp"
#include "oracles.hpp"

#include "lexpand/error.hpp"
#include "lexpand/metrics.hpp"
#include "lexpand/numeric.hpp"
#include "lexpand/random.hpp"
#include "lexpand/subspace_model.hpp"

#include <gtest/gtest.h>

#include <cmath>

namespace lexpand {
namespace {

EmbeddingMatrix random_embeddings(Eigen::Index d, std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<std::string> vocab;
  Eigen::MatrixXd values(d, static_cast<Eigen::Index>(n));
  for (std::size_t j = 0; j < n; ++j) {
    vocab.push_back(testing::token_name(j));
    for (Eigen::Index k = 0; k < d; ++k) values(k, static_cast<Eigen::Index>(j)) = rng.normal();
  }
  return EmbeddingMatrix(std::move(vocab), std::move(values));
}

std::vector<std::string> class_names(std::size_t n) {
  std::vector<std::string> names;
  for (std::size_t i = 0; i < n; ++i) names.push_back("c" + std::to_string(i));
  return names;
}

double train_accuracy(const SubspaceClassifier& model, const EmbeddingMatrix& e, std::span<const ClassSample> data) {
  std::size_t hits = 0;
  for (const auto& s : data) hits += predict_class(model, e, s.column) == s.label;
  return static_cast<double>(hits) / static_cast<double>(data.size());
}

TEST(Subspace, ZeroProjectionGivesHalf) {
  const auto e = random_embeddings(4, 3, 1);
  auto model = make_regressor(4, 2, 1);
  model.projection.setZero();
  const auto h = forward_hidden(model, e, 1);
  EXPECT_EQ(h, Eigen::Vector2d(0.5, 0.5));
}

TEST(Subspace, LogThreeGivesThreeQuarters) {
  const EmbeddingMatrix e({"x"}, Eigen::MatrixXd::Constant(1, 1, std::log(3.0)));
  auto model = make_regressor(1, 1, 1);
  model.projection(0, 0) = 1.0;
  EXPECT_NEAR(forward_hidden(model, e, 0)[0], 0.75, 1e-15);
}

TEST(Subspace, HiddenUnitsStayInsideOpenInterval) {
  Eigen::MatrixXd values(2, 3);
  values << 1e4, -1e4, 0.0, 1e4, -1e4, 1e-300;
  const EmbeddingMatrix e({"hi", "lo", "mid"}, values);
  auto model = make_regressor(2, 2, 3, 5.0);
  for (Eigen::Index c = 0; c < 3; ++c) {
    const auto h = forward_hidden(model, e, c);
    EXPECT_TRUE((h.array() > 0.0).all() && (h.array() < 1.0).all());
  }
}

TEST(Subspace, UniformSoftmaxForZeroWeights) {
  const auto e = random_embeddings(5, 4, 2);
  const auto model = make_classifier(5, 3, class_names(3), 7);
  const auto p = classify_proba(model, e, 2);
  for (Eigen::Index k = 0; k < 3; ++k) EXPECT_NEAR(p[k], 1.0 / 3.0, 1e-15);
}

TEST(Subspace, AnalyticSoftmaxCase) {
  const auto e = random_embeddings(3, 2, 2);
  auto model = make_classifier(3, 1, class_names(2), 7);
  model.projection.setZero();  // h = 0.5
  model.weights << 2.0 * std::log(2.0), 0.0;
  const auto p = classify_proba(model, e, 0);
  EXPECT_NEAR(p[0], 2.0 / 3.0, 1e-15);
  EXPECT_NEAR(p[1], 1.0 / 3.0, 1e-15);
}

TEST(Subspace, RegressorOutputs) {
  const auto e = random_embeddings(3, 5, 2);
  auto model = make_regressor(3, 2, 9);
  model.bias = 0.7;
  for (Eigen::Index c = 0; c < 5; ++c) EXPECT_EQ(predict_value(model, e, c), 0.7);

  auto single = make_regressor(3, 1, 9);
  single.projection.setZero();
  single.weights << 2.0;
  EXPECT_EQ(predict_value(single, e, 0), 1.0);
}

TEST(Subspace, NegativeLogLikelihoodCases) {
  const auto e = random_embeddings(3, 2, 2);
  auto model = make_classifier(3, 1, class_names(2), 7);
  const std::vector<ClassSample> one = {{0, 1}};
  EXPECT_NEAR(nll_loss(model, e, one), std::log(2.0), 1e-15);
  const std::vector<ClassSample> twice = {{0, 1}, {0, 1}};
  EXPECT_EQ(nll_loss(model, e, twice), 2.0 * nll_loss(model, e, one));

  model.projection.setZero();
  model.weights << 0.0, 2000.0;  // logits (0, 1000)
  EXPECT_EQ(nll_loss(model, e, one), 0.0);
}

TEST(Subspace, SquaredErrorCases) {
  const auto e = random_embeddings(3, 2, 2);
  auto model = make_regressor(3, 2, 1);
  const std::vector<ValueSample> exact = {{0, 0.0}, {1, 0.0}};
  EXPECT_EQ(mse_loss(model, e, exact), 0.0);
  const std::vector<ValueSample> one = {{0, 1.0}};
  EXPECT_EQ(mse_loss(model, e, one), 1.0);
}

TEST(Subspace, EmptyBatchIsAnError) {
  const auto e = random_embeddings(3, 2, 2);
  const auto c = make_classifier(3, 1, class_names(2), 7);
  const auto r = make_regressor(3, 1, 7);
  EXPECT_THROW(gradients(c, e, std::span<const ClassSample>{}), Error);
  EXPECT_THROW(gradients(r, e, std::span<const ValueSample>{}), Error);
  EXPECT_THROW(nll_loss(c, e, std::span<const ClassSample>{}), Error);
}

TEST(Subspace, SubspaceSizeBounds) {
  EXPECT_THROW(make_regressor(3, 4, 1), DimensionError);
  EXPECT_THROW(make_regressor(3, 0, 1), DimensionError);
  EXPECT_THROW(make_classifier(3, 2, {"only"}, 1), Error);
  EXPECT_NO_THROW(make_regressor(3, 3, 1));
}

TEST(Subspace, DefaultInitializationBound) {
  const auto model = make_regressor(40, 10, 5);
  const double bound = std::sqrt(6.0 / 50.0);
  EXPECT_LE(model.projection.cwiseAbs().maxCoeff(), bound);
  EXPECT_GT(model.projection.cwiseAbs().maxCoeff(), 0.9 * bound);
  EXPECT_EQ(model.weights, Eigen::VectorXd::Zero(10));
}

class ClassifierGradientCheck : public ::testing::TestWithParam<std::tuple<int, int>> {};

TEST_P(ClassifierGradientCheck, MatchesCentralDifferences) {
  const auto [s, classes] = GetParam();
  Rng rng(static_cast<std::uint64_t>(100 * s + classes));
  const Eigen::Index d = 7;
  const auto e = random_embeddings(d, 8, rng.next());
  auto model = make_classifier(d, s, class_names(static_cast<std::size_t>(classes)), rng.next(), 1.0);
  for (Eigen::Index i = 0; i < model.weights.size(); ++i) model.weights.data()[i] = rng.uniform(-1.5, 1.5);
  std::vector<ClassSample> batch;
  for (Eigen::Index j = 0; j < 8; ++j) batch.push_back({j, rng.below(static_cast<std::uint64_t>(classes))});

  const auto g = gradients(model, e, batch);
  const auto loss = [&] { return nll_loss(model, e, batch); };
  for (Eigen::Index i = 0; i < model.projection.size(); ++i) {
    const double fd = testing::central_difference(model.projection.data() + i, 1e-5, loss);
    EXPECT_LE(testing::relative_error(g.projection.data()[i], fd), 1e-4) << "projection " << i;
  }
  for (Eigen::Index i = 0; i < model.weights.size(); ++i) {
    const double fd = testing::central_difference(model.weights.data() + i, 1e-5, loss);
    EXPECT_LE(testing::relative_error(g.weights.data()[i], fd), 1e-4) << "weights " << i;
  }
}

INSTANTIATE_TEST_SUITE_P(Shapes, ClassifierGradientCheck,
                         ::testing::Combine(::testing::Values(1, 3, 5), ::testing::Values(2, 4)));

class RegressorGradientCheck : public ::testing::TestWithParam<int> {};

TEST_P(RegressorGradientCheck, MatchesCentralDifferences) {
  const int s = GetParam();
  Rng rng(static_cast<std::uint64_t>(s));
  const Eigen::Index d = 6;
  const auto e = random_embeddings(d, 8, rng.next());
  auto model = make_regressor(d, s, rng.next(), 1.0);
  for (Eigen::Index i = 0; i < s; ++i) model.weights[i] = rng.uniform(-2.0, 2.0);
  model.bias = 0.3;
  std::vector<ValueSample> batch;
  for (Eigen::Index j = 0; j < 8; ++j) batch.push_back({j, rng.normal()});

  const auto g = gradients(model, e, batch);
  const auto loss = [&] { return mse_loss(model, e, batch); };
  for (Eigen::Index i = 0; i < model.projection.size(); ++i) {
    const double fd = testing::central_difference(model.projection.data() + i, 1e-5, loss);
    EXPECT_LE(testing::relative_error(g.projection.data()[i], fd), 1e-4) << "projection " << i;
  }
  for (Eigen::Index i = 0; i < s; ++i) {
    const double fd = testing::central_difference(model.weights.data() + i, 1e-5, loss);
    EXPECT_LE(testing::relative_error(g.weights[i], fd), 1e-4) << "weights " << i;
  }
  EXPECT_LE(testing::relative_error(g.bias, testing::central_difference(&model.bias, 1e-5, loss)), 1e-4);
}

INSTANTIATE_TEST_SUITE_P(Shapes, RegressorGradientCheck, ::testing::Values(1, 3, 5));

TEST(Subspace, WeightGradientSumsToZeroOverClasses) {
  const auto e = random_embeddings(5, 4, 3);
  const auto model = make_classifier(5, 3, class_names(2), 4);
  const std::vector<ClassSample> balanced = {{0, 0}, {1, 1}, {2, 0}, {3, 1}};
  const auto g = gradients(model, e, balanced);
  EXPECT_LE(g.weights.colwise().sum().cwiseAbs().maxCoeff(), 1e-14);
}

TEST(Subspace, SoftmaxSumsToOne) {
  Rng rng(99);
  for (int i = 0; i < 1000; ++i) {
    Eigen::VectorXd z(2 + static_cast<Eigen::Index>(rng.below(6)));
    for (Eigen::Index k = 0; k < z.size(); ++k) z[k] = 50.0 * rng.normal();
    EXPECT_NEAR(softmax(z).sum(), 1.0, 1e-12);
  }
}

TEST(Subspace, ArgmaxIgnoresLogitShift) {
  Rng rng(5);
  for (int i = 0; i < 200; ++i) {
    Eigen::VectorXd z(4);
    for (Eigen::Index k = 0; k < 4; ++k) z[k] = rng.normal();
    const double c = 100.0 * rng.normal();
    EXPECT_EQ(argmax(softmax(z)), argmax(softmax((z.array() + c).matrix())));
  }
}

TEST(Subspace, SeparableFixtureReachesPerfectTrainAccuracy) {
  const auto fixture = testing::make_separable();
  const auto train = resolve_samples(fixture.embeddings, fixture.lexicon);
  TrainConfig cfg;
  cfg.subspace_size = 3;
  cfg.learning_rate = 0.05;
  cfg.seed = 1;
  int first_perfect = 0;
  for (int epochs = 1; epochs <= 50 && first_perfect == 0; ++epochs) {
    cfg.max_epochs = epochs;
    const auto fit = train_classifier(fixture.embeddings, train, {}, fixture.lexicon.classes, cfg);
    if (train_accuracy(fit.model, fixture.embeddings, train) == 1.0) first_perfect = epochs;
  }
  EXPECT_GT(first_perfect, 0);
  EXPECT_EQ(first_perfect, 4);
}

TEST(Subspace, TrainingIsDeterministic) {
  const auto fixture = testing::make_separable(10, 120, 0.2, 4);
  const auto split = split_dataset(fixture.lexicon, {0.2, 0.2, 4});
  TrainConfig cfg;
  cfg.subspace_size = 4;
  cfg.max_epochs = 30;
  const auto a = train_subspace(fixture.embeddings, split, cfg);
  const auto b = train_subspace(fixture.embeddings, split, cfg);
  const auto& ma = std::get<SubspaceClassifier>(a.model);
  const auto& mb = std::get<SubspaceClassifier>(b.model);
  EXPECT_EQ(ma.projection, mb.projection);
  EXPECT_EQ(ma.weights, mb.weights);
  EXPECT_EQ(a.trace.snapshot_id, b.trace.snapshot_id);
  EXPECT_EQ(a.trace.snapshot_id, parameter_hash(ma));

  cfg.seed = 2;
  const auto c = train_subspace(fixture.embeddings, split, cfg);
  EXPECT_NE(a.trace.snapshot_id, c.trace.snapshot_id);
}

TEST(Subspace, EmbeddingsStayFrozen) {
  testing::PlantedOptions options;
  options.dim = 12;
  options.vocab = 200;
  options.high_variance_dims = 4;
  const auto fixture = testing::make_planted(options);
  const auto before = fixture.embeddings.checksum();
  const Eigen::MatrixXd copy = fixture.embeddings.values();
  const auto split = split_dataset(fixture.lexicon, {0.2, 0.2, 1});
  (void)train_subspace(fixture.embeddings, split, {});
  EXPECT_EQ(fixture.embeddings.checksum(), before);
  EXPECT_EQ(fixture.embeddings.values(), copy);
}

TEST(Subspace, BestEpochLossNotAboveInitial) {
  for (bool categorical : {false, true}) {
    testing::PlantedOptions options;
    options.dim = 12;
    options.vocab = 200;
    options.high_variance_dims = 4;
    options.categorical = categorical;
    const auto fixture = testing::make_planted(options);
    const auto split = split_dataset(fixture.lexicon, {0.2, 0.2, 1});
    TrainConfig cfg;
    cfg.learning_rate = 0.01;
    const auto fit = train_subspace(fixture.embeddings, split, cfg);
    ASSERT_GE(fit.trace.best_epoch, 1);
    const auto& best = fit.trace.epochs[static_cast<std::size_t>(fit.trace.best_epoch - 1)];
    EXPECT_LE(best.train_loss, fit.trace.initial_train_loss);
    EXPECT_EQ(fit.trace.metric, categorical ? "macro_f1" : "kendall_tau");
  }
}

TEST(Subspace, EarlyStoppingRespectsPatience) {
  const auto fixture = testing::make_separable(10, 150, 0.3, 2);
  const auto split = split_dataset(fixture.lexicon, {0.2, 0.2, 2});
  TrainConfig cfg;
  cfg.patience = 3;
  cfg.max_epochs = 200;
  const auto fit = train_subspace(fixture.embeddings, split, cfg);
  const auto& epochs = fit.trace.epochs;
  ASSERT_FALSE(epochs.empty());
  EXPECT_LE(epochs.size(), 200u);
  EXPECT_GE(fit.trace.best_epoch, 1);
  EXPECT_LE(fit.trace.best_epoch, static_cast<int>(epochs.size()));
  if (epochs.size() < 200u) EXPECT_EQ(static_cast<int>(epochs.size()), fit.trace.best_epoch + cfg.patience);
  double best = -1.0;
  for (const auto& r : epochs) best = std::max(best, *r.dev_metric);
  EXPECT_EQ(*epochs[static_cast<std::size_t>(fit.trace.best_epoch - 1)].dev_metric, best);
}

TEST(Subspace, EmptyDevRunsEveryEpoch) {
  const auto fixture = testing::make_separable(10, 60, 0.3, 2);
  const auto train = resolve_samples(fixture.embeddings, fixture.lexicon);
  TrainConfig cfg;
  cfg.max_epochs = 7;
  const auto fit = train_classifier(fixture.embeddings, train, {}, fixture.lexicon.classes, cfg);
  EXPECT_EQ(fit.trace.epochs.size(), 7u);
  EXPECT_EQ(fit.trace.best_epoch, 7);
}

TEST(Subspace, TrainingErrors) {
  const auto fixture = testing::make_separable(10, 60, 0.3, 2);
  TrainConfig cfg;
  EXPECT_THROW(train_classifier(fixture.embeddings, {}, {}, fixture.lexicon.classes, cfg), Error);
  EXPECT_THROW(train_regressor(fixture.embeddings, {}, {}, cfg), Error);
  const std::vector<ClassSample> one_class = {{0, 1}, {1, 1}};
  EXPECT_THROW(train_classifier(fixture.embeddings, one_class, {}, fixture.lexicon.classes, cfg), Error);
  const std::vector<ClassSample> ok = {{0, 0}, {1, 1}};
  cfg.learning_rate = 0.0;
  EXPECT_THROW(train_classifier(fixture.embeddings, ok, {}, fixture.lexicon.classes, cfg), Error);
  cfg.learning_rate = 0.05;
  cfg.subspace_size = 11;
  EXPECT_THROW(train_classifier(fixture.embeddings, ok, {}, fixture.lexicon.classes, cfg), DimensionError);
}

TEST(Subspace, ProjectWord) {
  const auto e = random_embeddings(6, 10, 3);
  const SubspaceModel model = make_regressor(6, 4, 3);
  for (const std::string token : {"w0", "w3", "w9"}) {
    const auto h = project_word(model, e, token);
    EXPECT_EQ(h.size(), 4);
    EXPECT_EQ(h, forward_hidden(std::get<SubspaceRegressor>(model), e, *e.index_of(token)));
    EXPECT_EQ(h, project_word(model, e, token));
  }
  EXPECT_THROW(project_word(model, e, "nope"), Error);
}

TEST(Subspace, DimensionMismatch) {
  const auto e = random_embeddings(6, 3, 3);
  const auto model = make_regressor(5, 2, 3);
  EXPECT_THROW(predict_value(model, e, 0), DimensionError);
}

}  // namespace
}  // namespace lexpand
