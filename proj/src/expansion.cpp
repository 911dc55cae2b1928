#include "lexpand/expansion.hpp"

#include "lexpand/error.hpp"
#include "lexpand/numeric.hpp"
#include "lexpand/parallel.hpp"
#include "lexpand/snapshot.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <ostream>

namespace lexpand {

ExpandedLexicon expand(const TrainedModel& model, const EmbeddingMatrix& embeddings,
                       const ExpansionOptions& options) {
  if (input_dim(model) != embeddings.dim()) {
    throw DimensionError("model expects " + std::to_string(input_dim(model)) + "-dimensional embeddings, got " +
                         std::to_string(embeddings.dim()));
  }
  if (options.min_confidence && !(*options.min_confidence >= 0.0 && *options.min_confidence <= 1.0)) {
    throw Error("min_confidence must lie in [0, 1]");
  }
  const bool categorical = is_classifier(model);

  ExpandedLexicon out;
  out.kind = categorical ? LexiconKind::categorical : LexiconKind::continuous;
  out.classes = classes_of(model);
  out.clamped = !categorical && options.clamp_to_unit;
  out.model_id = snapshot_id(model);
  out.source_id = options.source_id;

  const std::size_t n = embeddings.size();
  std::vector<std::optional<ExpandedEntry>> slots(n);
  constexpr std::size_t kShard = 1024;
  const std::size_t shards = (n + kShard - 1) / kShard;
  parallel_for(shards, options.workers, [&](std::size_t shard) {
    const std::size_t end = std::min(n, (shard + 1) * kShard);
    for (std::size_t i = shard * kShard; i < end; ++i) {
      const auto& token = embeddings.vocab()[i];
      if (options.vocab_filter && !options.vocab_filter(token)) continue;
      const auto x = embeddings.column(static_cast<Eigen::Index>(i));
      ExpandedEntry entry{token, 0.0, std::nullopt};
      if (categorical) {
        const Eigen::VectorXd p = class_probabilities(model, x);
        const std::size_t label = argmax(p);
        entry.label = label;
        entry.score = p[static_cast<Eigen::Index>(label)];
        if (options.min_confidence && entry.score < *options.min_confidence) continue;
      } else {
        entry.score = predicted_value(model, x);
        if (out.clamped) entry.score = std::clamp(entry.score, -1.0, 1.0);
      }
      slots[i] = std::move(entry);
    }
  });
  for (auto& slot : slots) {
    if (slot) out.entries.push_back(std::move(*slot));
  }
  return out;
}

void write_lexicon(const ExpandedLexicon& lexicon, std::ostream& out) {
  char buf[64];
  if (lexicon.kind == LexiconKind::categorical) {
    out << "# classes:";
    for (const auto& c : lexicon.classes) out << '\t' << c;
    out << '\n';
  } else if (lexicon.clamped) {
    out << "# scale:\t-1\t1\n";
  }
  for (const auto& e : lexicon.entries) {
    std::snprintf(buf, sizeof buf, "%.6f", e.score);
    if (lexicon.kind == LexiconKind::categorical) {
      out << e.token << '\t' << lexicon.classes.at(*e.label) << '\t' << buf << '\n';
    } else {
      out << e.token << '\t' << buf << '\n';
    }
  }
}

void write_lexicon(const ExpandedLexicon& lexicon, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  write_lexicon(lexicon, out);
  if (!out) throw Error("write failed: " + path.string());
}

nlohmann::json provenance_json(const ExpandedLexicon& lexicon) {
  return nlohmann::json{{"kind", lexicon.kind == LexiconKind::categorical ? "categorical" : "continuous"},
                        {"classes", lexicon.classes},
                        {"entries", lexicon.entries.size()},
                        {"clamped", lexicon.clamped},
                        {"model_id", lexicon.model_id},
                        {"source_lexicon", lexicon.source_id}};
}

}  // namespace lexpand
