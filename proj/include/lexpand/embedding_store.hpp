#pragma once

#include "lexpand/lexicon.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace lexpand {

enum class EmbeddingFormat { text, binary };

// Frozen d x |V| embedding matrix, one column per vocabulary token.
// Immutable after construction; safe to share across threads.
class EmbeddingMatrix {
 public:
  // Throws if tokens repeat, the column count differs from the vocabulary size,
  // the dimension is zero, or any value is non-finite.
  EmbeddingMatrix(std::vector<std::string> vocab, Eigen::MatrixXd values);

  Eigen::Index dim() const noexcept { return values_.rows(); }
  std::size_t size() const noexcept { return vocab_.size(); }
  const std::vector<std::string>& vocab() const noexcept { return vocab_; }
  const Eigen::MatrixXd& values() const noexcept { return values_; }

  std::optional<Eigen::Index> index_of(std::string_view token) const;
  bool contains(std::string_view token) const { return index_of(token).has_value(); }

  // Copy of the stored column, or nullopt for unknown tokens.
  std::optional<Eigen::VectorXd> lookup(std::string_view token) const;

  // Read-only view of column `index`; throws on an invalid index.
  Eigen::Ref<const Eigen::VectorXd> column(Eigen::Index index) const;

  // FNV-1a over the vocabulary and the raw value bytes.
  std::uint64_t checksum() const;

 private:
  std::vector<std::string> vocab_;
  Eigen::MatrixXd values_;
  std::unordered_map<std::string, Eigen::Index> index_;
};

// Text format: header "|V| d", then one line per token: token followed by d reals.
// Binary format: the same header line, then per token the token text, a space,
// and d little-endian float32 values (an optional newline may follow each record).
// Duplicate tokens keep their first vector and log a warning.
EmbeddingMatrix load_embeddings(const std::filesystem::path& path,
                                EmbeddingFormat format = EmbeddingFormat::text);
EmbeddingMatrix parse_embeddings_text(std::string_view content,
                                      const std::string& source = "<memory>");

void write_embeddings_text(const EmbeddingMatrix& embeddings, std::ostream& out);
void write_embeddings_text(const EmbeddingMatrix& embeddings, const std::filesystem::path& path);

struct CoverageReport {
  std::size_t total_lexicon_words = 0;
  std::size_t covered = 0;
  std::vector<std::string> missing;  // lexicon order
};

CoverageReport coverage(const EmbeddingMatrix& embeddings, const Lexicon& lexicon);

// Drops lexicon words without an embedding and logs how many were removed.
Lexicon restrict_to_vocabulary(const Lexicon& lexicon, const EmbeddingMatrix& embeddings);

}  // namespace lexpand
