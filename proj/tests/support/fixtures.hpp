#pragma once

#include "lexpand/embedding_store.hpp"
#include "lexpand/lexicon.hpp"
#include "lexpand/logging.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace lexpand::testing {

// Synthetic embeddings whose labels depend only on a known low-dimensional
// subspace that is orthogonal to the directions of largest variance.
//
// An orthonormal basis Q of R^d is drawn at random. The first
// `high_variance_dims` basis vectors carry standard deviation `high_std`, the
// next `label_dims` carry `label_std` and the rest `low_std`. The label
// directions U are those middle basis vectors; with z = U^T x / label_std the
// continuous label is
//     y = sum_k sigmoid(steepness * z_k) + noise * N(0, 1),
// which is monotone in every z_k but not linear in x. The categorical variant
// thresholds y at its median into classes {"neg", "pos"}.
struct PlantedOptions {
  Eigen::Index dim = 50;
  std::size_t vocab = 2000;
  Eigen::Index high_variance_dims = 20;
  double high_std = 3.0;
  double low_std = 1.0;
  Eigen::Index label_dims = 3;
  double label_std = 2.0;  // between low_std and high_std: visible, but never a top principal direction
  double steepness = 4.0;
  double noise = 0.05;
  double scale = 1.0;  // multiplies the stored vectors after labelling
  bool categorical = false;
  std::uint64_t seed = 1;
};

struct PlantedFixture {
  EmbeddingMatrix embeddings;
  Lexicon lexicon;
  Eigen::MatrixXd label_basis;    // d x label_dims
  Eigen::MatrixXd variance_basis; // d x high_variance_dims
};

PlantedFixture make_planted(const PlantedOptions& options);

// `words` points in R^dim labelled by the sign of a planted direction u,
// pushed at least `margin` away from the separating hyperplane.
struct SeparableFixture {
  EmbeddingMatrix embeddings;
  CategoricalLexicon lexicon;
  Eigen::VectorXd direction;
};

SeparableFixture make_separable(Eigen::Index dim = 10, std::size_t words = 200, double margin = 0.5,
                                std::uint64_t seed = 1);

// Token names "w0", "w1", ... used by the fixtures.
std::string token_name(std::size_t i);

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir();
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const noexcept { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

// Records warnings and errors while alive instead of printing them.
class CaptureLog {
 public:
  CaptureLog() {
    previous_ = set_log_sink([this](LogLevel level, std::string_view message) {
      (level == LogLevel::error ? errors : warnings).emplace_back(message);
    });
  }
  ~CaptureLog() { set_log_sink(std::move(previous_)); }
  CaptureLog(const CaptureLog&) = delete;
  CaptureLog& operator=(const CaptureLog&) = delete;

  std::vector<std::string> warnings;
  std::vector<std::string> errors;

 private:
  LogSink previous_;
};

void write_file(const std::filesystem::path& path, const std::string& content);
std::string read_file(const std::filesystem::path& path);

}  // namespace lexpand::testing
