#include "lexpand/embedding_store.hpp"

#include "lexpand/error.hpp"
#include "lexpand/hash.hpp"
#include "lexpand/logging.hpp"

#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <ostream>
#include <sstream>

namespace lexpand {
namespace {

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\r'; }

// Splits on runs of spaces/tabs.
void split_fields(std::string_view line, std::vector<std::string_view>& fields) {
  fields.clear();
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && is_space(line[i])) ++i;
    if (i >= line.size()) break;
    std::size_t j = i;
    while (j < line.size() && !is_space(line[j])) ++j;
    fields.push_back(line.substr(i, j - i));
    i = j;
  }
}

template <typename T>
bool parse_number(std::string_view text, T& value) {
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  return ec == std::errc() && ptr == text.data() + text.size() && !text.empty();
}

struct Header {
  std::size_t vocab_size = 0;
  std::size_t dim = 0;
};

Header parse_header(std::string_view line, const std::string& source) {
  std::vector<std::string_view> fields;
  split_fields(line, fields);
  Header h;
  if (fields.size() != 2 || !parse_number(fields[0], h.vocab_size) || !parse_number(fields[1], h.dim) ||
      h.dim == 0) {
    throw ParseError(source, 1, "malformed header, expected \"<vocab size> <dimension>\"");
  }
  return h;
}

// Accumulates rows, keeping the first vector of repeated tokens.
class MatrixBuilder {
 public:
  MatrixBuilder(std::size_t expected, std::size_t dim, std::string source)
      : dim_(dim), source_(std::move(source)) {
    data_.reserve(expected * dim);
    vocab_.reserve(expected);
  }

  // Returns false for a duplicate (already warned).
  bool add(std::string token, std::size_t line) {
    if (!seen_.emplace(token, vocab_.size()).second) {
      log_warning(source_ + ":" + std::to_string(line) + ": duplicate token '" + token +
                  "', keeping the first vector");
      return false;
    }
    vocab_.push_back(std::move(token));
    return true;
  }

  std::vector<double>& data() { return data_; }

  EmbeddingMatrix finish() && {
    const auto cols = static_cast<Eigen::Index>(vocab_.size());
    Eigen::MatrixXd values = Eigen::Map<const Eigen::MatrixXd>(data_.data(), static_cast<Eigen::Index>(dim_), cols);
    return EmbeddingMatrix(std::move(vocab_), std::move(values));
  }

 private:
  std::size_t dim_;
  std::string source_;
  std::vector<double> data_;
  std::vector<std::string> vocab_;
  std::unordered_map<std::string, std::size_t> seen_;
};

std::string read_all(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

EmbeddingMatrix parse_binary(std::string_view content, const std::string& source) {
  const auto eol = content.find('\n');
  if (eol == std::string_view::npos) throw ParseError(source, 1, "missing header line");
  const Header header = parse_header(content.substr(0, eol), source);
  MatrixBuilder builder(header.vocab_size, header.dim, source);
  std::size_t pos = eol + 1;
  for (std::size_t record = 0; record < header.vocab_size; ++record) {
    while (pos < content.size() && (content[pos] == '\n' || content[pos] == '\r')) ++pos;
    const auto space = content.find(' ', pos);
    if (space == std::string_view::npos) {
      throw ParseError(source, record + 2, "truncated record, expected token");
    }
    std::string token(content.substr(pos, space - pos));
    pos = space + 1;
    const std::size_t bytes = header.dim * sizeof(float);
    if (content.size() - pos < bytes) throw ParseError(source, record + 2, "truncated vector");
    std::vector<double> row(header.dim);
    for (std::size_t k = 0; k < header.dim; ++k) {
      std::uint32_t raw;
      std::memcpy(&raw, content.data() + pos + k * sizeof(float), sizeof raw);
      if constexpr (std::endian::native == std::endian::big) raw = __builtin_bswap32(raw);
      float f;
      std::memcpy(&f, &raw, sizeof f);
      if (!std::isfinite(f)) throw ParseError(source, record + 2, "non-finite value");
      row[k] = f;
    }
    pos += bytes;
    if (builder.add(std::move(token), record + 2)) {
      builder.data().insert(builder.data().end(), row.begin(), row.end());
    }
  }
  return std::move(builder).finish();
}

}  // namespace

EmbeddingMatrix::EmbeddingMatrix(std::vector<std::string> vocab, Eigen::MatrixXd values)
    : vocab_(std::move(vocab)), values_(std::move(values)) {
  if (values_.rows() < 1) throw DimensionError("embedding dimension must be positive");
  if (static_cast<std::size_t>(values_.cols()) != vocab_.size()) {
    throw DimensionError("embedding matrix has " + std::to_string(values_.cols()) + " columns for " +
                         std::to_string(vocab_.size()) + " tokens");
  }
  if (!values_.allFinite()) throw Error("embedding matrix contains non-finite values");
  index_.reserve(vocab_.size());
  for (std::size_t i = 0; i < vocab_.size(); ++i) {
    if (!index_.emplace(vocab_[i], static_cast<Eigen::Index>(i)).second) {
      throw Error("duplicate vocabulary token '" + vocab_[i] + "'");
    }
  }
}

std::optional<Eigen::Index> EmbeddingMatrix::index_of(std::string_view token) const {
  const auto it = index_.find(std::string(token));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::optional<Eigen::VectorXd> EmbeddingMatrix::lookup(std::string_view token) const {
  const auto index = index_of(token);
  if (!index) return std::nullopt;
  return Eigen::VectorXd(values_.col(*index));
}

Eigen::Ref<const Eigen::VectorXd> EmbeddingMatrix::column(Eigen::Index index) const {
  if (index < 0 || index >= values_.cols()) {
    throw Error("embedding column " + std::to_string(index) + " out of range");
  }
  return values_.col(index);
}

std::uint64_t EmbeddingMatrix::checksum() const {
  Fnv1a h;
  h.update(static_cast<std::uint64_t>(values_.rows()));
  for (const auto& token : vocab_) {
    h.update(token);
    h.update("\0", 1);
  }
  h.update(values_.data(), static_cast<std::size_t>(values_.size()) * sizeof(double));
  return h.digest();
}

EmbeddingMatrix load_embeddings(const std::filesystem::path& path, EmbeddingFormat format) {
  const std::string content = read_all(path);
  if (format == EmbeddingFormat::binary) return parse_binary(content, path.string());
  return parse_embeddings_text(content, path.string());
}

EmbeddingMatrix parse_embeddings_text(std::string_view content, const std::string& source) {
  std::size_t pos = 0;
  std::size_t line_no = 0;
  auto next_line = [&](std::string_view& line) {
    if (pos >= content.size()) return false;
    auto end = content.find('\n', pos);
    if (end == std::string_view::npos) end = content.size();
    line = content.substr(pos, end - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    pos = end + 1;
    ++line_no;
    return true;
  };

  std::string_view line;
  if (!next_line(line)) throw ParseError(source, 1, "empty file, expected header");
  const Header header = parse_header(line, source);
  MatrixBuilder builder(header.vocab_size, header.dim, source);

  std::vector<std::string_view> fields;
  std::size_t rows = 0;
  while (next_line(line)) {
    split_fields(line, fields);
    if (fields.empty()) continue;
    if (rows == header.vocab_size) {
      throw ParseError(source, line_no, "more vectors than the header's " + std::to_string(header.vocab_size));
    }
    ++rows;
    if (fields.size() != header.dim + 1) {
      throw ParseError(source, line_no, "expected " + std::to_string(header.dim) + " values, found " +
                                            std::to_string(fields.size() - 1));
    }
    std::vector<double> row(header.dim);
    for (std::size_t k = 0; k < header.dim; ++k) {
      if (!parse_number(fields[k + 1], row[k])) {
        throw ParseError(source, line_no, "malformed number '" + std::string(fields[k + 1]) + "'");
      }
      if (!std::isfinite(row[k])) throw ParseError(source, line_no, "non-finite value");
    }
    if (builder.add(std::string(fields[0]), line_no)) {
      builder.data().insert(builder.data().end(), row.begin(), row.end());
    }
  }
  if (rows != header.vocab_size) {
    throw ParseError(source, line_no + 1, "expected " + std::to_string(header.vocab_size) +
                                              " vectors, found " + std::to_string(rows));
  }
  return std::move(builder).finish();
}

void write_embeddings_text(const EmbeddingMatrix& embeddings, std::ostream& out) {
  out << embeddings.size() << ' ' << embeddings.dim() << '\n';
  char buf[32];
  const auto& values = embeddings.values();
  for (std::size_t i = 0; i < embeddings.size(); ++i) {
    out << embeddings.vocab()[i];
    for (Eigen::Index k = 0; k < values.rows(); ++k) {
      const auto [end, ec] = std::to_chars(buf, buf + sizeof buf, values(k, static_cast<Eigen::Index>(i)));
      out << ' ' << std::string_view(buf, static_cast<std::size_t>(end - buf));
    }
    out << '\n';
  }
}

void write_embeddings_text(const EmbeddingMatrix& embeddings, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  write_embeddings_text(embeddings, out);
  if (!out) throw Error("write failed: " + path.string());
}

CoverageReport coverage(const EmbeddingMatrix& embeddings, const Lexicon& lexicon) {
  CoverageReport report;
  for (auto& token : tokens_of(lexicon)) {
    ++report.total_lexicon_words;
    if (embeddings.contains(token)) {
      ++report.covered;
    } else {
      report.missing.push_back(std::move(token));
    }
  }
  return report;
}

Lexicon restrict_to_vocabulary(const Lexicon& lexicon, const EmbeddingMatrix& embeddings) {
  return std::visit(
      [&](const auto& lex) -> Lexicon {
        auto out = lex;
        out.entries.clear();
        for (const auto& e : lex.entries) {
          if (embeddings.contains(e.token)) out.entries.push_back(e);
        }
        const auto dropped = lex.size() - out.size();
        if (dropped > 0) {
          log_warning("dropped " + std::to_string(dropped) + " of " + std::to_string(lex.size()) +
                      " lexicon words without an embedding");
        }
        return out;
      },
      lexicon);
}

}  // namespace lexpand
