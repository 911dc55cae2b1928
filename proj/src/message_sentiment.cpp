#include "lexpand/message_sentiment.hpp"

#include "lexpand/error.hpp"
#include "lexpand/metrics.hpp"
#include "lexpand/numeric.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>

namespace lexpand {
namespace {

bool is_word_char(char c) {
  const auto u = static_cast<unsigned char>(c);
  return std::isalnum(u) || c == '_' || u >= 0x80;
}

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; }

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) {
    if (static_cast<unsigned char>(c) < 0x80) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  }
  return out;
}

bool starts_with_ci(std::string_view s, std::string_view prefix) {
  if (s.size() < prefix.size()) return false;
  for (std::size_t i = 0; i < prefix.size(); ++i) {
    if (std::tolower(static_cast<unsigned char>(s[i])) != prefix[i]) return false;
  }
  return true;
}

// Length of an emoticon at the start of `s`, or 0.
std::size_t match_emoticon(std::string_view s) {
  if (s.starts_with("</3")) return 3;
  if (s.starts_with("<3")) return 2;
  if (s.empty() || (s[0] != ':' && s[0] != ';' && s[0] != '=')) return 0;
  std::size_t i = 1;
  if (i < s.size() && (s[i] == '-' || s[i] == '\'' || s[i] == '^')) ++i;
  if (i >= s.size()) return 0;
  constexpr std::string_view mouths = ")(][dDpP/\\|*3oO0$@";
  const char mouth = s[i];
  if (mouths.find(mouth) == std::string_view::npos) return 0;
  std::size_t end = i + 1;
  while (end < s.size() && s[end] == mouth) ++end;
  // "10:30" or "re:do" are not emoticons.
  if (std::isalnum(static_cast<unsigned char>(mouth)) && end < s.size() && is_word_char(s[end])) return 0;
  return end;
}

std::size_t word_run(std::string_view s) {
  std::size_t i = 0;
  while (i < s.size()) {
    if (is_word_char(s[i])) {
      ++i;
    } else if (s[i] == '\'' && i > 0 && i + 1 < s.size() && is_word_char(s[i + 1])) {
      ++i;
    } else {
      break;
    }
  }
  return i;
}

void tokenize_chunk(std::string_view chunk, std::vector<std::string>& out) {
  std::size_t i = 0;
  while (i < chunk.size()) {
    const std::string_view rest = chunk.substr(i);
    if (starts_with_ci(rest, "http://") || starts_with_ci(rest, "https://") || starts_with_ci(rest, "www.")) {
      out.emplace_back("<url>");
      return;
    }
    if ((rest[0] == '@' || rest[0] == '#') && rest.size() > 1 && is_word_char(rest[1])) {
      const std::size_t len = 1 + word_run(rest.substr(1));
      out.push_back(rest[0] == '@' ? std::string("<user>") : lower(rest.substr(0, len)));
      i += len;
      continue;
    }
    if (const std::size_t len = match_emoticon(rest); len > 0) {
      out.emplace_back(rest.substr(0, len));
      i += len;
      continue;
    }
    if (is_word_char(rest[0])) {
      const std::size_t len = word_run(rest);
      out.push_back(lower(rest.substr(0, len)));
      i += len;
      continue;
    }
    out.emplace_back(1, rest[0]);
    ++i;
  }
}

}  // namespace

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && is_space(text[i])) ++i;
    std::size_t j = i;
    while (j < text.size() && !is_space(text[j])) ++j;
    if (j > i) tokenize_chunk(text.substr(i, j - i), tokens);
    i = j;
  }
  return tokens;
}

Message Message::from_text(std::string text) {
  Message m;
  m.tokens = tokenize(text);
  m.raw = std::move(text);
  return m;
}

std::string_view to_string(Polarity polarity) {
  return polarity == Polarity::positive ? "positive" : "negative";
}

std::optional<Polarity> parse_polarity(std::string_view text) {
  if (text == "positive") return Polarity::positive;
  if (text == "negative") return Polarity::negative;
  return std::nullopt;
}

MessageDataset parse_message_dataset(std::istream& in, const std::string& name) {
  MessageDataset dataset;
  dataset.name = name;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) throw ParseError(name, line_no, "expected label<TAB>text");
    const auto label = parse_polarity(std::string_view(line).substr(0, tab));
    if (!label) throw ParseError(name, line_no, "label must be 'positive' or 'negative'");
    dataset.messages.push_back({Message::from_text(line.substr(tab + 1)), *label});
  }
  return dataset;
}

MessageDataset parse_message_dataset(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  return parse_message_dataset(in, path.stem().string());
}

ScoreTable make_score_table(const ContinuousLexicon& lexicon) {
  ScoreTable table;
  table.reserve(lexicon.size());
  for (const auto& e : lexicon.entries) table.emplace(e.token, e.score);
  return table;
}

std::optional<double> score_message(const ScoreTable& lexicon, const Message& message) {
  CompensatedSum sum;
  std::size_t matched = 0;
  for (const auto& token : message.tokens) {
    const auto it = lexicon.find(token);
    if (it == lexicon.end()) continue;
    sum.add(it->second);
    ++matched;
  }
  if (matched == 0) return std::nullopt;
  return sum.value() / static_cast<double>(matched);
}

double estimate_threshold(const ScoreTable& lexicon, std::span<const Message> corpus) {
  CompensatedSum sum;
  std::size_t scored = 0;
  for (const auto& m : corpus) {
    if (const auto s = score_message(lexicon, m)) {
      sum.add(*s);
      ++scored;
    }
  }
  if (scored == 0) throw Error("no message in the corpus matches the lexicon");
  return sum.value() / static_cast<double>(scored);
}

Decision classify_message(const LexiconClassifier& classifier, const Message& message) {
  Decision d;
  d.score = score_message(classifier.lexicon, message);
  d.label = d.score && *d.score >= classifier.threshold ? Polarity::positive : Polarity::negative;
  return d;
}

SentimentReport evaluate_lexicon_classifier(const LexiconClassifier& classifier, const MessageDataset& dataset) {
  if (dataset.messages.empty()) throw Error("empty message dataset");
  SentimentReport report;
  report.dataset = dataset.name;
  report.messages = dataset.messages.size();
  report.threshold = classifier.threshold;
  std::vector<std::size_t> gold, pred;
  for (const auto& lm : dataset.messages) {
    const Decision d = classify_message(classifier, lm.message);
    report.abstentions += d.abstained();
    gold.push_back(static_cast<std::size_t>(lm.label));
    pred.push_back(static_cast<std::size_t>(d.label));
  }
  report.accuracy = accuracy(gold, pred);
  report.macro_f1 = macro_avg_f1(gold, pred, 2);
  report.abstention_rate = static_cast<double>(report.abstentions) / static_cast<double>(report.messages);
  return report;
}

void write_sentiment_csv(std::span<const SentimentReport> reports, std::ostream& out) {
  char value[64], threshold[64];
  out << "task,model,row,params,metric,dev_score,test_score,best_epoch,status,seed\n";
  for (const auto& r : reports) {
    std::snprintf(threshold, sizeof threshold, "%.10g", r.threshold);
    const std::string params = std::string("threshold=") + threshold + ";abstentions=" + std::to_string(r.abstentions);
    for (const auto& [metric, score] : {std::pair{"accuracy", r.accuracy}, std::pair{"macro_f1", r.macro_f1}}) {
      std::snprintf(value, sizeof value, "%.6f", score);
      out << r.dataset << ",lexicon,summary," << params << ',' << metric << ",," << value << ",0,ok,0\n";
    }
  }
}

nlohmann::json sentiment_report_json(const SentimentReport& report) {
  return nlohmann::json{{"task", report.dataset},
                        {"model", "lexicon"},
                        {"messages", report.messages},
                        {"abstentions", report.abstentions},
                        {"abstention_rate", report.abstention_rate},
                        {"accuracy", report.accuracy},
                        {"macro_f1", report.macro_f1},
                        {"threshold", report.threshold}};
}

std::array<double, 5> extract_lexicon_features(const ScoreTable& lexicon, const Message& message) {
  std::vector<double> scores;
  for (const auto& token : message.tokens) {
    if (const auto it = lexicon.find(token); it != lexicon.end()) scores.push_back(it->second);
  }
  if (scores.empty()) return {0.0, 0.0, 0.0, 0.0, 0.0};
  CompensatedSum sum;
  for (double s : scores) sum.add(s);
  const double total = sum.value();
  const double mean = total / static_cast<double>(scores.size());
  CompensatedSum ss;
  for (double s : scores) ss.add((s - mean) * (s - mean));
  const double stddev = std::sqrt(ss.value() / static_cast<double>(scores.size()));
  const auto [lo, hi] = std::minmax_element(scores.begin(), scores.end());
  return {mean, total, *hi, *lo, stddev};
}

Eigen::VectorXd BowClassifier::features(const Message& message) const {
  const auto vocab_size = static_cast<Eigen::Index>(vocab_.size());
  Eigen::VectorXd x = Eigen::VectorXd::Zero(model_.num_features());
  for (const auto& token : message.tokens) {
    if (const auto it = vocab_.find(token); it != vocab_.end()) x[it->second] += 1.0;
  }
  if (lexicon_) {
    const auto f = extract_lexicon_features(*lexicon_, message);
    for (Eigen::Index k = 0; k < 5; ++k) {
      x[vocab_size + k] = (f[static_cast<std::size_t>(k)] - feature_mean_[k]) / feature_scale_[k];
    }
  }
  return x;
}

Polarity BowClassifier::predict(const Message& message) const {
  return model_.predict_class(features(message)) == 1 ? Polarity::positive : Polarity::negative;
}

BowClassifier train_bow_classifier(const MessageDataset& train, const ScoreTable* lexicon, const BowConfig& config) {
  if (train.messages.empty()) throw Error("empty training dataset");
  const bool has_both =
      std::any_of(train.messages.begin(), train.messages.end(), [](const auto& m) { return m.label == Polarity::positive; }) &&
      std::any_of(train.messages.begin(), train.messages.end(), [](const auto& m) { return m.label == Polarity::negative; });
  if (!has_both) throw Error("bag-of-words training needs both classes");

  BowClassifier clf;
  for (const auto& lm : train.messages) {
    for (const auto& token : lm.message.tokens) {
      clf.vocab_.try_emplace(token, static_cast<Eigen::Index>(clf.vocab_.size()));
    }
  }
  const auto vocab_size = static_cast<Eigen::Index>(clf.vocab_.size());
  const Eigen::Index extra = lexicon ? 5 : 0;
  const auto n = static_cast<Eigen::Index>(train.messages.size());

  std::vector<std::array<double, 5>> lex_features;
  if (lexicon) {
    clf.lexicon_ = *lexicon;
    clf.feature_mean_ = Eigen::VectorXd::Zero(5);
    clf.feature_scale_ = Eigen::VectorXd::Ones(5);
    for (const auto& lm : train.messages) lex_features.push_back(extract_lexicon_features(*lexicon, lm.message));
    for (Eigen::Index k = 0; k < 5; ++k) {
      double mean = 0.0;
      for (const auto& f : lex_features) mean += f[static_cast<std::size_t>(k)];
      mean /= static_cast<double>(n);
      double var = 0.0;
      for (const auto& f : lex_features) var += std::pow(f[static_cast<std::size_t>(k)] - mean, 2);
      const double sd = std::sqrt(var / static_cast<double>(n));
      clf.feature_mean_[k] = mean;
      clf.feature_scale_[k] = sd > 0.0 ? sd : 1.0;
    }
  }

  std::vector<Eigen::Triplet<double>> triplets;
  std::vector<std::size_t> labels;
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& lm = train.messages[static_cast<std::size_t>(i)];
    for (const auto& token : lm.message.tokens) triplets.emplace_back(i, clf.vocab_.at(token), 1.0);
    if (lexicon) {
      const auto& f = lex_features[static_cast<std::size_t>(i)];
      for (Eigen::Index k = 0; k < 5; ++k) {
        triplets.emplace_back(i, vocab_size + k, (f[static_cast<std::size_t>(k)] - clf.feature_mean_[k]) / clf.feature_scale_[k]);
      }
    }
    labels.push_back(static_cast<std::size_t>(lm.label));
  }
  SparseRows x(n, vocab_size + extra);
  x.setFromTriplets(triplets.begin(), triplets.end());  // duplicate tokens sum into counts
  clf.model_ = fit_linear_classifier(x, labels, {"negative", "positive"}, Regularizer::l2, config.lambda, config.linear);
  return clf;
}

}  // namespace lexpand
