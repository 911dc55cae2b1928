#pragma once

#include <nlohmann/json.hpp>

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

namespace lexpand {

enum class LexiconKind { categorical, continuous };

// Declared bounds of an annotation scheme, e.g. (1, 9) for valence ratings.
struct Scale {
  double min = 0.0;
  double max = 0.0;
  bool operator==(const Scale&) const = default;
};

struct CategoricalEntry {
  std::string token;
  std::size_t label = 0;  // index into CategoricalLexicon::classes
  bool operator==(const CategoricalEntry&) const = default;
};

struct ContinuousEntry {
  std::string token;
  double score = 0.0;
  bool operator==(const ContinuousEntry&) const = default;
};

// Word -> class mapping. Entries keep file order; `classes` is the ordered class set.
struct CategoricalLexicon {
  std::vector<std::string> classes;
  std::vector<CategoricalEntry> entries;

  std::size_t size() const noexcept { return entries.size(); }
  bool empty() const noexcept { return entries.empty(); }
  const std::string& class_name(std::size_t label) const { return classes.at(label); }
  std::optional<std::size_t> class_index(std::string_view name) const;
};

// Word -> real score mapping.
struct ContinuousLexicon {
  std::optional<Scale> scale;
  std::vector<ContinuousEntry> entries;

  std::size_t size() const noexcept { return entries.size(); }
  bool empty() const noexcept { return entries.empty(); }
};

using Lexicon = std::variant<CategoricalLexicon, ContinuousLexicon>;

LexiconKind kind_of(const Lexicon& lexicon) noexcept;
std::size_t size_of(const Lexicon& lexicon) noexcept;
std::vector<std::string> tokens_of(const Lexicon& lexicon);

enum class ColumnOrder { token_first, label_first };

struct LexiconFormat {
  LexiconKind kind = LexiconKind::continuous;
  std::optional<Scale> scale;
  ColumnOrder columns = ColumnOrder::token_first;
};

// Parses a TSV lexicon (token TAB label per line).
//
// Lines starting with '#' followed by a non-word character are comments; a
// line such as "#happy\t0.8" is an entry for the hashtag token "#happy". Two
// comment directives are understood: "# classes:\tA\tB..." fixes the class
// order of a categorical lexicon, and "# scale:\tMIN\tMAX" declares the scale
// of a continuous one when the caller does not. Columns after the label are
// ignored. Duplicate tokens, non-numeric or out-of-scale scores are errors.
Lexicon parse_lexicon(const std::filesystem::path& path, const LexiconFormat& format);
Lexicon parse_lexicon_text(std::string_view content, const LexiconFormat& format,
                           const std::string& source = "<memory>");

// Reads "token TAB property TAB 0|1" rows (an EmoLex-style word/emotion
// association list) into one binary lexicon per property, classes {"0", "1"},
// in order of first appearance of each property.
std::vector<std::pair<std::string, CategoricalLexicon>> parse_multilabel_lexicon(
    const std::filesystem::path& path);

// x -> 2 (x - min) / (max - min) - 1 over the declared scale; the result has scale (-1, 1).
ContinuousLexicon normalize_to_unit_range(const ContinuousLexicon& lexicon);

// Keeps entries with |score| > band. Requires 0 <= band < 1 and scores in [-1, 1].
ContinuousLexicon filter_neutral(const ContinuousLexicon& lexicon, double band = 0.2);

struct SplitOptions {
  double test_fraction = 0.2;
  double dev_fraction_of_train = 0.2;
  std::uint64_t seed = 1;
};

// Disjoint train/dev/test parts of one lexicon. Each part has the same
// alternative as the source; categorical parts share the full class list.
struct DatasetSplit {
  Lexicon train;
  Lexicon dev;
  Lexicon test;
  std::uint64_t seed = 0;
};

// Deterministic shuffled split. Categorical lexicons are stratified when every
// class has at least five members.
DatasetSplit split_dataset(const Lexicon& lexicon, const SplitOptions& options);

// Concatenation of two lexicons of the same kind (used to fold dev back into train).
Lexicon concatenate(const Lexicon& first, const Lexicon& second);

// Entries at `indices`, in that order.
Lexicon take_entries(const Lexicon& lexicon, std::span<const std::size_t> indices);

nlohmann::json split_to_json(const DatasetSplit& split);

}  // namespace lexpand
