#include "lexpand/lexicon.hpp"

#include "lexpand/error.hpp"
#include "lexpand/logging.hpp"
#include "lexpand/random.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

namespace lexpand {
namespace {

std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const auto tab = line.find('\t', start);
    if (tab == std::string_view::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, tab - start));
    start = tab + 1;
  }
  return fields;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::optional<double> parse_double(std::string_view text) {
  text = trim(text);
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size() || text.empty()) return std::nullopt;
  return value;
}

bool is_word_byte(char c) {
  const auto u = static_cast<unsigned char>(c);
  return std::isalnum(u) || c == '_' || u >= 0x80;
}

bool is_comment(std::string_view line) {
  return !line.empty() && line.front() == '#' && (line.size() == 1 || !is_word_byte(line[1]));
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

template <typename Fn>
void for_each_line(std::string_view content, Fn&& fn) {
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start < content.size()) {
    auto end = content.find('\n', start);
    if (end == std::string_view::npos) end = content.size();
    std::string_view line = content.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    fn(++line_no, line);
    start = end + 1;
  }
}

void check_scale(const Scale& scale, const std::string& source) {
  if (!std::isfinite(scale.min) || !std::isfinite(scale.max) || scale.max < scale.min) {
    throw Error(source + ": invalid scale bounds");
  }
}

}  // namespace

std::optional<std::size_t> CategoricalLexicon::class_index(std::string_view name) const {
  const auto it = std::find(classes.begin(), classes.end(), name);
  if (it == classes.end()) return std::nullopt;
  return static_cast<std::size_t>(it - classes.begin());
}

LexiconKind kind_of(const Lexicon& lexicon) noexcept {
  return std::holds_alternative<CategoricalLexicon>(lexicon) ? LexiconKind::categorical
                                                             : LexiconKind::continuous;
}

std::size_t size_of(const Lexicon& lexicon) noexcept {
  return std::visit([](const auto& lex) { return lex.size(); }, lexicon);
}

std::vector<std::string> tokens_of(const Lexicon& lexicon) {
  return std::visit(
      [](const auto& lex) {
        std::vector<std::string> tokens;
        tokens.reserve(lex.size());
        for (const auto& e : lex.entries) tokens.push_back(e.token);
        return tokens;
      },
      lexicon);
}

Lexicon parse_lexicon(const std::filesystem::path& path, const LexiconFormat& format) {
  return parse_lexicon_text(read_file(path), format, path.string());
}

Lexicon parse_lexicon_text(std::string_view content, const LexiconFormat& format,
                           const std::string& source) {
  std::unordered_set<std::string> seen;
  std::vector<std::string> declared_classes;
  std::optional<Scale> declared_scale;
  std::vector<std::pair<std::string, std::string>> raw;  // token, label text
  std::vector<std::size_t> raw_lines;

  for_each_line(content, [&](std::size_t line_no, std::string_view line) {
    if (trim(line).empty()) return;
    if (is_comment(line)) {
      const auto fields = split_tabs(line);
      const auto head = trim(fields.front());
      if (head == "# classes:") {
        for (std::size_t i = 1; i < fields.size(); ++i) declared_classes.emplace_back(fields[i]);
      } else if (head == "# scale:" && fields.size() >= 3) {
        const auto lo = parse_double(fields[1]);
        const auto hi = parse_double(fields[2]);
        if (!lo || !hi) throw ParseError(source, line_no, "malformed scale directive");
        declared_scale = Scale{*lo, *hi};
      }
      return;
    }
    const auto fields = split_tabs(line);
    if (fields.size() < 2) throw ParseError(source, line_no, "expected token<TAB>label");
    std::string_view token = fields[0];
    std::string_view label = fields[1];
    if (format.columns == ColumnOrder::label_first) std::swap(token, label);
    if (token.empty()) throw ParseError(source, line_no, "empty token");
    std::string key(token);
    if (!seen.insert(key).second) {
      throw ParseError(source, line_no, "duplicate token '" + key + "'");
    }
    raw.emplace_back(std::move(key), std::string(trim(label)));
    raw_lines.push_back(line_no);
  });

  if (format.kind == LexiconKind::categorical) {
    CategoricalLexicon lex;
    lex.classes = declared_classes;
    for (std::size_t i = 0; i < raw.size(); ++i) {
      auto& [token, label] = raw[i];
      if (label.empty()) throw ParseError(source, raw_lines[i], "empty label");
      auto index = lex.class_index(label);
      if (!index) {
        if (!declared_classes.empty()) {
          throw ParseError(source, raw_lines[i], "label '" + label + "' not among declared classes");
        }
        lex.classes.push_back(label);
        index = lex.classes.size() - 1;
      }
      lex.entries.push_back({std::move(token), *index});
    }
    if (!lex.entries.empty() && lex.classes.size() < 2) {
      throw ParseError(source, 0, "categorical lexicon needs at least two classes");
    }
    return lex;
  }

  ContinuousLexicon lex;
  lex.scale = format.scale ? format.scale : declared_scale;
  if (lex.scale) check_scale(*lex.scale, source);
  for (std::size_t i = 0; i < raw.size(); ++i) {
    auto& [token, label] = raw[i];
    const auto score = parse_double(label);
    if (!score) throw ParseError(source, raw_lines[i], "non-numeric score '" + label + "'");
    if (!std::isfinite(*score)) throw ParseError(source, raw_lines[i], "non-finite score");
    if (lex.scale && (*score < lex.scale->min || *score > lex.scale->max)) {
      throw ParseError(source, raw_lines[i], "score " + label + " outside declared scale");
    }
    lex.entries.push_back({std::move(token), *score});
  }
  return lex;
}

std::vector<std::pair<std::string, CategoricalLexicon>> parse_multilabel_lexicon(
    const std::filesystem::path& path) {
  const std::string content = read_file(path);
  const std::string source = path.string();
  std::vector<std::pair<std::string, CategoricalLexicon>> result;
  std::unordered_map<std::string, std::size_t> property_index;
  std::vector<std::unordered_set<std::string>> seen;

  for_each_line(content, [&](std::size_t line_no, std::string_view line) {
    if (trim(line).empty() || is_comment(line)) return;
    const auto fields = split_tabs(line);
    if (fields.size() < 3) throw ParseError(source, line_no, "expected token<TAB>property<TAB>0|1");
    const std::string token(fields[0]);
    const std::string property(trim(fields[1]));
    const auto flag = trim(fields[2]);
    if (flag != "0" && flag != "1") throw ParseError(source, line_no, "association must be 0 or 1");
    auto [it, inserted] = property_index.try_emplace(property, result.size());
    if (inserted) {
      CategoricalLexicon lex;
      lex.classes = {"0", "1"};
      result.emplace_back(property, std::move(lex));
      seen.emplace_back();
    }
    if (!seen[it->second].insert(token).second) {
      throw ParseError(source, line_no, "duplicate token '" + token + "' for " + property);
    }
    result[it->second].second.entries.push_back({token, flag == "1" ? 1u : 0u});
  });
  return result;
}

ContinuousLexicon normalize_to_unit_range(const ContinuousLexicon& lexicon) {
  if (!lexicon.scale) throw Error("normalization requires a declared scale");
  const auto [lo, hi] = *lexicon.scale;
  if (!(hi > lo)) throw Error("degenerate scale: max must exceed min");
  ContinuousLexicon out;
  out.scale = Scale{-1.0, 1.0};
  out.entries.reserve(lexicon.size());
  for (const auto& e : lexicon.entries) {
    const double y = 2.0 * (e.score - lo) / (hi - lo) - 1.0;
    out.entries.push_back({e.token, std::clamp(y, -1.0, 1.0)});
  }
  return out;
}

ContinuousLexicon filter_neutral(const ContinuousLexicon& lexicon, double band) {
  if (!(band >= 0.0 && band < 1.0)) throw Error("neutral band must lie in [0, 1)");
  ContinuousLexicon out;
  out.scale = lexicon.scale;
  for (const auto& e : lexicon.entries) {
    if (e.score < -1.0 || e.score > 1.0) {
      throw Error("filter_neutral expects scores in [-1, 1]; got " + std::to_string(e.score) +
                  " for '" + e.token + "'");
    }
    if (std::abs(e.score) > band) out.entries.push_back(e);
  }
  return out;
}

Lexicon take_entries(const Lexicon& lexicon, std::span<const std::size_t> indices) {
  return std::visit(
      [&](const auto& lex) -> Lexicon {
        auto out = lex;
        out.entries.clear();
        out.entries.reserve(indices.size());
        for (auto i : indices) out.entries.push_back(lex.entries.at(i));
        return out;
      },
      lexicon);
}

Lexicon concatenate(const Lexicon& first, const Lexicon& second) {
  if (first.index() != second.index()) throw Error("cannot concatenate lexicons of different kinds");
  return std::visit(
      [&](const auto& a) -> Lexicon {
        using L = std::decay_t<decltype(a)>;
        const auto& b = std::get<L>(second);
        if constexpr (std::is_same_v<L, CategoricalLexicon>) {
          if (a.classes != b.classes) throw Error("cannot concatenate lexicons with different classes");
        }
        auto out = a;
        out.entries.insert(out.entries.end(), b.entries.begin(), b.entries.end());
        return out;
      },
      first);
}

DatasetSplit split_dataset(const Lexicon& lexicon, const SplitOptions& options) {
  const auto in_open_unit = [](double f) { return f > 0.0 && f < 1.0; };
  if (!in_open_unit(options.test_fraction) || !in_open_unit(options.dev_fraction_of_train)) {
    throw Error("split fractions must lie in (0, 1)");
  }
  const std::size_t n = size_of(lexicon);
  if (n < 5) throw Error("split requires at least 5 entries, got " + std::to_string(n));

  Rng rng(derive_seed(options.seed, 0x5917));
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);

  bool stratified = false;
  if (const auto* cat = std::get_if<CategoricalLexicon>(&lexicon)) {
    std::vector<std::vector<std::size_t>> members(cat->classes.size());
    for (std::size_t i = 0; i < n; ++i) members[cat->entries[i].label].push_back(i);
    stratified = std::all_of(members.begin(), members.end(),
                             [](const auto& m) { return m.size() >= 5; });
    if (stratified) {
      // Interleave classes proportionally: an item at rank r of a class with m
      // members sits at position (r + 0.5) / m, so every prefix of `order`
      // holds each class in proportion to its size (within one item).
      struct Slot {
        double position;
        std::size_t label;
        std::size_t index;
      };
      std::vector<Slot> slots;
      slots.reserve(n);
      for (std::size_t c = 0; c < members.size(); ++c) {
        auto& m = members[c];
        rng.shuffle(std::span<std::size_t>(m));
        for (std::size_t r = 0; r < m.size(); ++r) {
          slots.push_back({(static_cast<double>(r) + 0.5) / static_cast<double>(m.size()), c, m[r]});
        }
      }
      std::sort(slots.begin(), slots.end(), [](const Slot& a, const Slot& b) {
        if (a.position != b.position) return a.position < b.position;
        return a.label < b.label;
      });
      for (std::size_t i = 0; i < n; ++i) order[i] = slots[i].index;
    } else {
      log_warning("split: some class has fewer than 5 members; using an unstratified shuffle");
    }
  }
  if (!stratified) rng.shuffle(std::span<std::size_t>(order));

  const auto n_test = static_cast<std::size_t>(std::llround(options.test_fraction * static_cast<double>(n)));
  const std::size_t n_rest = n - n_test;
  const auto n_dev =
      static_cast<std::size_t>(std::llround(options.dev_fraction_of_train * static_cast<double>(n_rest)));

  const std::span<const std::size_t> all(order);
  DatasetSplit split;
  split.seed = options.seed;
  split.test = take_entries(lexicon, all.subspan(0, n_test));
  split.dev = take_entries(lexicon, all.subspan(n_test, n_dev));
  split.train = take_entries(lexicon, all.subspan(n_test + n_dev));
  return split;
}

nlohmann::json split_to_json(const DatasetSplit& split) {
  nlohmann::json doc;
  doc["seed"] = split.seed;
  doc["kind"] = kind_of(split.train) == LexiconKind::categorical ? "categorical" : "continuous";
  doc["train"] = tokens_of(split.train);
  doc["dev"] = tokens_of(split.dev);
  doc["test"] = tokens_of(split.test);
  return doc;
}

}  // namespace lexpand
