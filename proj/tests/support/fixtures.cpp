#include "fixtures.hpp"

#include "lexpand/numeric.hpp"
#include "lexpand/random.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <unistd.h>

namespace lexpand::testing {

std::string token_name(std::size_t i) { return "w" + std::to_string(i); }

PlantedFixture make_planted(const PlantedOptions& o) {
  const Eigen::Index d = o.dim;
  if (o.high_variance_dims + o.label_dims > d) throw std::invalid_argument("planted: too many planted directions");
  Rng rng(derive_seed(o.seed, 0xf1c7));
  Eigen::MatrixXd gaussian(d, d);
  for (Eigen::Index r = 0; r < d; ++r) {
    for (Eigen::Index c = 0; c < d; ++c) gaussian(r, c) = rng.normal();
  }
  const Eigen::MatrixXd q = Eigen::HouseholderQR<Eigen::MatrixXd>(gaussian).householderQ();

  Eigen::VectorXd stddev = Eigen::VectorXd::Constant(d, o.low_std);
  stddev.head(o.high_variance_dims).setConstant(o.high_std);
  stddev.segment(o.high_variance_dims, o.label_dims).setConstant(o.label_std);

  const auto n = static_cast<Eigen::Index>(o.vocab);
  Eigen::MatrixXd values(d, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    Eigen::VectorXd g(d);
    for (Eigen::Index k = 0; k < d; ++k) g[k] = rng.normal() * stddev[k];
    values.col(j) = q * g;
  }
  const Eigen::MatrixXd label_basis = q.middleCols(o.high_variance_dims, o.label_dims);

  std::vector<double> y(o.vocab);
  for (Eigen::Index j = 0; j < n; ++j) {
    const Eigen::VectorXd z = label_basis.transpose() * values.col(j) / o.label_std;
    double v = 0.0;
    for (Eigen::Index k = 0; k < z.size(); ++k) v += sigmoid(o.steepness * z[k]);
    y[static_cast<std::size_t>(j)] = v + o.noise * rng.normal();
  }

  std::vector<std::string> vocab(o.vocab);
  for (std::size_t i = 0; i < o.vocab; ++i) vocab[i] = token_name(i);

  Lexicon lexicon;
  if (o.categorical) {
    std::vector<double> sorted = y;
    std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(sorted.size() / 2), sorted.end());
    const double median = sorted[sorted.size() / 2];
    CategoricalLexicon lex;
    lex.classes = {"neg", "pos"};
    for (std::size_t i = 0; i < o.vocab; ++i) lex.entries.push_back({vocab[i], y[i] >= median ? 1u : 0u});
    lexicon = std::move(lex);
  } else {
    ContinuousLexicon lex;
    for (std::size_t i = 0; i < o.vocab; ++i) lex.entries.push_back({vocab[i], y[i]});
    lexicon = std::move(lex);
  }
  values *= o.scale;
  return {EmbeddingMatrix(std::move(vocab), std::move(values)), std::move(lexicon), label_basis,
          q.leftCols(o.high_variance_dims)};
}

SeparableFixture make_separable(Eigen::Index dim, std::size_t words, double margin, std::uint64_t seed) {
  Rng rng(derive_seed(seed, 0x5e9a));
  Eigen::VectorXd u(dim);
  for (Eigen::Index k = 0; k < dim; ++k) u[k] = rng.normal();
  u.normalize();
  const auto n = static_cast<Eigen::Index>(words);
  Eigen::MatrixXd values(dim, n);
  CategoricalLexicon lex;
  lex.classes = {"negative", "positive"};
  std::vector<std::string> vocab(words);
  for (Eigen::Index j = 0; j < n; ++j) {
    Eigen::VectorXd x(dim);
    for (Eigen::Index k = 0; k < dim; ++k) x[k] = rng.normal();
    const double p = u.dot(x);
    const bool positive = p >= 0.0;
    x += (positive ? margin : -margin) * u;
    values.col(j) = x;
    vocab[static_cast<std::size_t>(j)] = token_name(static_cast<std::size_t>(j));
    lex.entries.push_back({vocab[static_cast<std::size_t>(j)], positive ? 1u : 0u});
  }
  return {EmbeddingMatrix(std::move(vocab), std::move(values)), std::move(lex), u};
}

TempDir::TempDir() {
  static std::atomic<int> counter{0};
  path_ = std::filesystem::temp_directory_path() /
          ("lexpand-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
  std::filesystem::remove_all(path_);
  std::filesystem::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  std::filesystem::remove_all(path_, ec);
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << content;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace lexpand::testing
