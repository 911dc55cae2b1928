#pragma once

#include "lexpand/embedding_store.hpp"
#include "lexpand/lexicon.hpp"
#include "lexpand/predictor.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace lexpand {

struct ExpandedEntry {
  std::string token;
  double score = 0.0;                // regression output, or the argmax class probability
  std::optional<std::size_t> label;  // categorical heads only
};

struct ExpandedLexicon {
  LexiconKind kind = LexiconKind::continuous;
  std::vector<std::string> classes;
  std::vector<ExpandedEntry> entries;  // embedding vocabulary order
  bool clamped = false;                // scores clamped to [-1, 1]
  std::string model_id;
  std::string source_id;
};

struct ExpansionOptions {
  // Categorical heads: omit entries whose top probability is below this value. Must lie in [0, 1].
  std::optional<double> min_confidence;
  std::function<bool(std::string_view)> vocab_filter;  // keep tokens for which this returns true
  bool clamp_to_unit = false;                          // continuous heads: clamp scores to [-1, 1]
  std::size_t workers = 1;
  std::string source_id;
};

// Labels every vocabulary token (passing the filter) with the model.
ExpandedLexicon expand(const TrainedModel& model, const EmbeddingMatrix& embeddings,
                       const ExpansionOptions& options = {});

// TSV in the lexicon input format with scores at 6 decimals. Continuous lexicons
// write "token\tscore"; categorical ones write "token\tclass\tconfidence" after a
// "# classes:" directive. Clamped continuous output carries a "# scale:\t-1\t1" directive.
void write_lexicon(const ExpandedLexicon& lexicon, std::ostream& out);
void write_lexicon(const ExpandedLexicon& lexicon, const std::filesystem::path& path);

nlohmann::json provenance_json(const ExpandedLexicon& lexicon);

}  // namespace lexpand
