#include "lexpand/baselines.hpp"

#include "lexpand/error.hpp"
#include "lexpand/numeric.hpp"
#include "lexpand/random.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <set>

namespace lexpand {
namespace {

void check_lambda(double lambda) {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw Error("regularization strength must be >= 0");
}

// Largest eigenvalue of [X 1]^T [X 1] by power iteration.
template <typename Matrix>
double augmented_spectral_norm_sq(const Matrix& x) {
  const Eigen::Index p = x.cols();
  Rng rng(0x9a11);
  Eigen::VectorXd v(p);
  double vb = 1.0;
  for (Eigen::Index j = 0; j < p; ++j) v[j] = 1.0 + 0.1 * rng.uniform();
  double estimate = 0.0;
  for (int it = 0; it < 300; ++it) {
    const double norm = std::sqrt(v.squaredNorm() + vb * vb);
    if (norm == 0.0) return 0.0;
    v /= norm;
    vb /= norm;
    const Eigen::VectorXd u = x * v + Eigen::VectorXd::Constant(x.rows(), vb);
    Eigen::VectorXd next = x.transpose() * u;
    const double next_b = u.sum();
    const double value = v.dot(next) + vb * next_b;  // Rayleigh quotient
    v = std::move(next);
    vb = next_b;
    if (it > 10 && std::abs(value - estimate) <= 1e-10 * std::abs(value)) {
      estimate = value;
      break;
    }
    estimate = value;
  }
  return estimate;
}

struct Params {
  Eigen::MatrixXd weights;
  Eigen::VectorXd bias;
};

double max_abs_diff(const Params& a, const Params& b) {
  return std::max((a.weights - b.weights).cwiseAbs().maxCoeff(), (a.bias - b.bias).cwiseAbs().maxCoeff());
}

double max_abs(const Params& a) {
  return std::max(a.weights.size() ? a.weights.cwiseAbs().maxCoeff() : 0.0,
                  a.bias.size() ? a.bias.cwiseAbs().maxCoeff() : 0.0);
}

// FISTA with gradient-based adaptive restart. `grad(params, out)` writes the
// gradient of the mean loss. The step is diagonal: 1/(L + 2 lambda_l2) on the
// weights and 1/L on the bias, which dominates the Hessian blockwise.
template <typename Grad>
Params proximal_descent(Params theta, double lipschitz, Regularizer reg, double lambda,
                        const LinearConfig& config, Grad&& grad, int& iterations, bool& converged) {
  const double l2 = reg == Regularizer::l2 ? lambda : 0.0;
  const double step_w = 1.0 / (lipschitz + 2.0 * l2);
  const double step_b = 1.0 / lipschitz;
  const double threshold = reg == Regularizer::l1 ? step_w * lambda : 0.0;

  Params y = theta;
  Params g{Eigen::MatrixXd::Zero(theta.weights.rows(), theta.weights.cols()), Eigen::VectorXd::Zero(theta.bias.size())};
  double t = 1.0;
  converged = false;
  iterations = 0;
  for (int it = 1; it <= config.max_iterations; ++it) {
    iterations = it;
    grad(y, g);
    if (l2 > 0.0) g.weights += 2.0 * l2 * y.weights;
    Params next{y.weights - step_w * g.weights, y.bias - step_b * g.bias};
    if (threshold > 0.0) {
      next.weights = next.weights.unaryExpr([threshold](double w) {
        return w > threshold ? w - threshold : (w < -threshold ? w + threshold : 0.0);
      });
    }
    const double change = max_abs_diff(next, theta);
    // Restart momentum when the step opposes the previous direction.
    const double momentum_check = ((y.weights - next.weights).cwiseProduct(next.weights - theta.weights)).sum() +
                                  (y.bias - next.bias).dot(next.bias - theta.bias);
    double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    if (momentum_check > 0.0) {
      t = 1.0;
      t_next = 1.0;
    }
    const double beta = (t - 1.0) / t_next;
    y.weights = next.weights + beta * (next.weights - theta.weights);
    y.bias = next.bias + beta * (next.bias - theta.bias);
    theta = std::move(next);
    t = t_next;
    if (!theta.weights.allFinite() || !theta.bias.allFinite()) throw Error("linear model diverged");
    if (change <= config.tolerance * std::max(1.0, max_abs(theta))) {
      converged = true;
      break;
    }
  }
  return theta;
}

template <typename Matrix>
LinearModel fit_classifier_impl(const Matrix& x, std::span<const std::size_t> labels,
                                std::vector<std::string> classes, Regularizer reg, double lambda,
                                const LinearConfig& config) {
  check_lambda(lambda);
  const Eigen::Index n = x.rows();
  const auto k = static_cast<Eigen::Index>(classes.size());
  if (n == 0) throw Error("empty training set");
  if (static_cast<std::size_t>(n) != labels.size()) throw DimensionError("feature rows and labels disagree");
  if (k < 2) throw Error("a classifier needs at least two classes");
  for (auto l : labels) {
    if (l >= classes.size()) throw Error("label outside class set");
  }
  if (std::all_of(labels.begin(), labels.end(), [&](std::size_t l) { return l == labels.front(); })) {
    throw Error("training set contains a single class");
  }

  const double inv_n = 1.0 / static_cast<double>(n);
  const double lipschitz = std::max(0.5 * augmented_spectral_norm_sq(x) * inv_n * 1.02, 1e-12);
  Eigen::MatrixXd onehot = Eigen::MatrixXd::Zero(n, k);
  for (Eigen::Index i = 0; i < n; ++i) onehot(i, static_cast<Eigen::Index>(labels[static_cast<std::size_t>(i)])) = 1.0;

  Eigen::MatrixXd logits(n, k);
  auto grad = [&](const Params& p, Params& g) {
    logits.noalias() = x * p.weights.transpose();
    logits.rowwise() += p.bias.transpose();
    for (Eigen::Index i = 0; i < n; ++i) {
      const double m = logits.row(i).maxCoeff();
      logits.row(i) = (logits.row(i).array() - m).exp();
      logits.row(i) /= logits.row(i).sum();
    }
    logits -= onehot;  // P - Y
    g.weights.noalias() = inv_n * (logits.transpose() * x);
    g.bias = inv_n * logits.colwise().sum().transpose();
  };

  LinearModel model;
  model.head = Head::classifier;
  model.regularizer = reg;
  model.lambda = lambda;
  model.classes = std::move(classes);
  Params theta{Eigen::MatrixXd::Zero(k, x.cols()), Eigen::VectorXd::Zero(k)};
  theta = proximal_descent(std::move(theta), lipschitz, reg, lambda, config, grad, model.iterations,
                           model.converged);
  model.weights = std::move(theta.weights);
  model.bias = std::move(theta.bias);
  return model;
}

Eigen::MatrixXd gather_rows(const EmbeddingMatrix& embeddings, const std::vector<std::string>& tokens) {
  Eigen::MatrixXd x(static_cast<Eigen::Index>(tokens.size()), embeddings.dim());
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    const auto column = embeddings.index_of(tokens[i]);
    if (!column) throw Error("no embedding for lexicon word '" + tokens[i] + "'");
    x.row(static_cast<Eigen::Index>(i)) = embeddings.column(*column).transpose();
  }
  return x;
}

LinearModel fit_on_rows(const Eigen::MatrixXd& x, const Lexicon& train, Regularizer reg, double lambda,
                        const LinearConfig& config) {
  if (const auto* cat = std::get_if<CategoricalLexicon>(&train)) {
    std::vector<std::size_t> labels;
    labels.reserve(cat->size());
    for (const auto& e : cat->entries) labels.push_back(e.label);
    return fit_linear_classifier(x, labels, cat->classes, reg, lambda, config);
  }
  const auto& cont = std::get<ContinuousLexicon>(train);
  std::vector<double> targets;
  targets.reserve(cont.size());
  for (const auto& e : cont.entries) targets.push_back(e.score);
  return fit_linear_regressor(x, targets, reg, lambda, config);
}

}  // namespace

Eigen::VectorXd LinearModel::scores(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  if (x.size() != weights.cols()) {
    throw DimensionError("linear model expects " + std::to_string(weights.cols()) + " features, got " +
                         std::to_string(x.size()));
  }
  return weights * x + bias;
}

Eigen::VectorXd LinearModel::probabilities(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  if (head != Head::classifier) throw Error("probabilities requested from a regressor");
  return softmax(scores(x));
}

std::size_t LinearModel::predict_class(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  if (head != Head::classifier) throw Error("class requested from a regressor");
  return argmax(scores(x));
}

double LinearModel::predict_value(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  if (head != Head::regressor) throw Error("value requested from a classifier");
  return scores(x)[0];
}

std::size_t LinearModel::nonzero_weights() const {
  return static_cast<std::size_t>((weights.array() != 0.0).count());
}

LinearModel fit_linear_classifier(const Eigen::MatrixXd& features, std::span<const std::size_t> labels,
                                  std::vector<std::string> classes, Regularizer regularizer, double lambda,
                                  const LinearConfig& config) {
  return fit_classifier_impl(features, labels, std::move(classes), regularizer, lambda, config);
}

LinearModel fit_linear_classifier(const SparseRows& features, std::span<const std::size_t> labels,
                                  std::vector<std::string> classes, Regularizer regularizer, double lambda,
                                  const LinearConfig& config) {
  return fit_classifier_impl(features, labels, std::move(classes), regularizer, lambda, config);
}

LinearModel fit_linear_regressor(const Eigen::MatrixXd& features, std::span<const double> targets,
                                 Regularizer regularizer, double lambda, const LinearConfig& config) {
  check_lambda(lambda);
  const Eigen::Index n = features.rows();
  if (n == 0) throw Error("empty training set");
  if (static_cast<std::size_t>(n) != targets.size()) throw DimensionError("feature rows and targets disagree");
  const Eigen::Map<const Eigen::VectorXd> y(targets.data(), n);
  const double inv_n = 1.0 / static_cast<double>(n);
  const double lipschitz = std::max(2.0 * augmented_spectral_norm_sq(features) * inv_n * 1.02, 1e-12);

  Eigen::VectorXd residual(n);
  auto grad = [&](const Params& p, Params& g) {
    residual.noalias() = features * p.weights.row(0).transpose();
    residual.array() += p.bias[0];
    residual -= y;
    g.weights.row(0).noalias() = (2.0 * inv_n) * (features.transpose() * residual).transpose();
    g.bias[0] = 2.0 * inv_n * residual.sum();
  };

  LinearModel model;
  model.head = Head::regressor;
  model.regularizer = regularizer;
  model.lambda = lambda;
  Params theta{Eigen::MatrixXd::Zero(1, features.cols()), Eigen::VectorXd::Zero(1)};
  theta = proximal_descent(std::move(theta), lipschitz, regularizer, lambda, config, grad, model.iterations,
                           model.converged);
  model.weights = std::move(theta.weights);
  model.bias = std::move(theta.bias);
  return model;
}

PcaTransform fit_pca(const Eigen::MatrixXd& data, Eigen::Index k) {
  const Eigen::Index d = data.rows();
  const Eigen::Index n = data.cols();
  if (k < 1 || k > d) {
    throw DimensionError("PCA components " + std::to_string(k) + " must lie in [1, " + std::to_string(d) + "]");
  }
  {
    std::set<std::vector<double>> distinct;
    for (Eigen::Index j = 0; j < n && static_cast<Eigen::Index>(distinct.size()) <= k; ++j) {
      distinct.emplace(data.col(j).data(), data.col(j).data() + d);
    }
    if (static_cast<Eigen::Index>(distinct.size()) < k + 1) {
      throw Error("PCA with " + std::to_string(k) + " components needs at least " + std::to_string(k + 1) +
                  " distinct vectors");
    }
  }
  PcaTransform t;
  t.mean = data.rowwise().mean();
  const Eigen::MatrixXd centered = data.colwise() - t.mean;
  const Eigen::MatrixXd covariance = (centered * centered.transpose()) / static_cast<double>(n - 1);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(covariance);
  if (solver.info() != Eigen::Success) throw Error("PCA eigendecomposition failed");

  t.components.resize(k, d);
  t.explained_variance.resize(k);
  for (Eigen::Index c = 0; c < k; ++c) {
    const Eigen::Index source = d - 1 - c;  // eigenvalues come in ascending order
    Eigen::VectorXd v = solver.eigenvectors().col(source);
    Eigen::Index pivot = 0;
    v.cwiseAbs().maxCoeff(&pivot);
    if (v[pivot] < 0.0) v = -v;
    t.components.row(c) = v.transpose();
    t.explained_variance[c] = std::max(0.0, solver.eigenvalues()[source]);
  }
  return t;
}

PcaTransform fit_pca(const EmbeddingMatrix& embeddings, std::span<const std::string> tokens, Eigen::Index k) {
  Eigen::MatrixXd data(embeddings.dim(), static_cast<Eigen::Index>(tokens.size()));
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    const auto column = embeddings.index_of(tokens[i]);
    if (!column) throw Error("no embedding for '" + tokens[i] + "'");
    data.col(static_cast<Eigen::Index>(i)) = embeddings.column(*column);
  }
  return fit_pca(data, k);
}

Eigen::VectorXd apply_pca(const PcaTransform& transform, const Eigen::Ref<const Eigen::VectorXd>& x) {
  if (x.size() != transform.mean.size()) {
    throw DimensionError("PCA expects " + std::to_string(transform.mean.size()) + "-dimensional input");
  }
  return transform.components * (x - transform.mean);
}

Eigen::VectorXd LinearPredictor::features(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  if (pca) return apply_pca(*pca, x);
  return x;
}

LinearPredictor train_linear(const EmbeddingMatrix& embeddings, const Lexicon& train, Regularizer regularizer,
                             double lambda, const LinearConfig& config) {
  check_lambda(lambda);
  const auto x = gather_rows(embeddings, tokens_of(train));
  return {std::nullopt, fit_on_rows(x, train, regularizer, lambda, config)};
}

LinearPredictor train_pca_linear(const EmbeddingMatrix& embeddings, const Lexicon& train, Eigen::Index k,
                                 Regularizer regularizer, double lambda, const LinearConfig& config) {
  check_lambda(lambda);
  const auto tokens = tokens_of(train);
  PcaTransform pca = fit_pca(embeddings, tokens, k);
  const Eigen::MatrixXd raw = gather_rows(embeddings, tokens);
  const Eigen::MatrixXd reduced = (raw.rowwise() - pca.mean.transpose()) * pca.components.transpose();
  auto model = fit_on_rows(reduced, train, regularizer, lambda, config);
  return {std::move(pca), std::move(model)};
}

}  // namespace lexpand
