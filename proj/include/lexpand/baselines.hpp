#pragma once

#include "lexpand/embedding_store.hpp"
#include "lexpand/lexicon.hpp"

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace lexpand {

enum class Regularizer { l2, l1 };
enum class Head { classifier, regressor };

using SparseRows = Eigen::SparseMatrix<double, Eigen::RowMajor>;

struct LinearConfig {
  int max_iterations = 5000;
  double tolerance = 1e-9;  // on the largest parameter change, relative to max(1, |theta|)
};

// Softmax (logistic) classifier or least-squares regressor over raw features.
struct LinearModel {
  Head head = Head::regressor;
  Regularizer regularizer = Regularizer::l2;
  double lambda = 0.0;
  Eigen::MatrixXd weights;  // |Y| x p, or 1 x p for a regressor
  Eigen::VectorXd bias;     // |Y|, or 1
  std::vector<std::string> classes;
  int iterations = 0;
  bool converged = false;

  Eigen::Index num_features() const noexcept { return weights.cols(); }
  Eigen::VectorXd scores(const Eigen::Ref<const Eigen::VectorXd>& x) const;
  Eigen::VectorXd probabilities(const Eigen::Ref<const Eigen::VectorXd>& x) const;
  std::size_t predict_class(const Eigen::Ref<const Eigen::VectorXd>& x) const;
  double predict_value(const Eigen::Ref<const Eigen::VectorXd>& x) const;
  std::size_t nonzero_weights() const;
};

// Minimizes mean loss + lambda * penalty(weights) by accelerated proximal
// gradient (FISTA with adaptive restart). The l1 penalty is applied through
// soft-thresholding after every gradient step; the bias is never penalized.
// Rows of `features` are samples. Full-batch and deterministic.
LinearModel fit_linear_classifier(const Eigen::MatrixXd& features, std::span<const std::size_t> labels,
                                  std::vector<std::string> classes, Regularizer regularizer, double lambda,
                                  const LinearConfig& config = {});
LinearModel fit_linear_classifier(const SparseRows& features, std::span<const std::size_t> labels,
                                  std::vector<std::string> classes, Regularizer regularizer, double lambda,
                                  const LinearConfig& config = {});
LinearModel fit_linear_regressor(const Eigen::MatrixXd& features, std::span<const double> targets,
                                 Regularizer regularizer, double lambda, const LinearConfig& config = {});

struct PcaTransform {
  Eigen::VectorXd mean;                // d
  Eigen::MatrixXd components;          // k x d, orthonormal rows
  Eigen::VectorXd explained_variance;  // k, non-increasing

  Eigen::Index num_components() const noexcept { return components.rows(); }
};

// Top-k principal directions of the columns of `data` (d x n). Each component
// is oriented so that its largest-magnitude entry is positive.
PcaTransform fit_pca(const Eigen::MatrixXd& data, Eigen::Index k);
PcaTransform fit_pca(const EmbeddingMatrix& embeddings, std::span<const std::string> tokens, Eigen::Index k);

// components * (x - mean)
Eigen::VectorXd apply_pca(const PcaTransform& transform, const Eigen::Ref<const Eigen::VectorXd>& x);

// A linear baseline over raw embeddings, optionally behind a PCA reduction.
struct LinearPredictor {
  std::optional<PcaTransform> pca;
  LinearModel model;

  Eigen::Index input_dim() const noexcept {
    return pca ? pca->components.cols() : model.num_features();
  }
  Eigen::VectorXd features(const Eigen::Ref<const Eigen::VectorXd>& x) const;
};

// Head follows the lexicon kind. Every token must have an embedding.
LinearPredictor train_linear(const EmbeddingMatrix& embeddings, const Lexicon& train, Regularizer regularizer,
                             double lambda, const LinearConfig& config = {});

// PCA fitted on the training tokens only, then train_linear on the k-dim features.
LinearPredictor train_pca_linear(const EmbeddingMatrix& embeddings, const Lexicon& train, Eigen::Index k,
                                 Regularizer regularizer, double lambda, const LinearConfig& config = {});

}  // namespace lexpand
