#pragma once

#include "lexpand/baselines.hpp"
#include "lexpand/lexicon.hpp"

#include <nlohmann/json.hpp>

#include <array>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace lexpand {

// Lowercases, maps URLs to "<url>" and user mentions to "<user>", and splits on
// whitespace and punctuation. Hashtags (#word) and emoticons such as ":)" or
// ":-D" stay whole; emoticons keep their case.
std::vector<std::string> tokenize(std::string_view text);

struct Message {
  std::string raw;
  std::vector<std::string> tokens;

  static Message from_text(std::string text);
};

enum class Polarity { negative, positive };

std::string_view to_string(Polarity polarity);
std::optional<Polarity> parse_polarity(std::string_view text);

struct LabeledMessage {
  Message message;
  Polarity label = Polarity::negative;
};

struct MessageDataset {
  std::string name;
  std::vector<LabeledMessage> messages;
};

// Reads "label TAB raw-text" lines with label "positive" or "negative".
MessageDataset parse_message_dataset(const std::filesystem::path& path);
MessageDataset parse_message_dataset(std::istream& in, const std::string& name);

using ScoreTable = std::unordered_map<std::string, double>;

ScoreTable make_score_table(const ContinuousLexicon& lexicon);

// Mean lexicon score over the tokens found in the lexicon (every occurrence
// counts); nullopt when no token matches.
std::optional<double> score_message(const ScoreTable& lexicon, const Message& message);

// Mean of the defined message scores, by compensated summation.
double estimate_threshold(const ScoreTable& lexicon, std::span<const Message> corpus);

struct LexiconClassifier {
  ScoreTable lexicon;
  double threshold = 0.0;
};

struct Decision {
  Polarity label = Polarity::negative;
  std::optional<double> score;
  bool abstained() const noexcept { return !score.has_value(); }
};

// positive iff score >= threshold; unscorable messages are negative abstentions.
Decision classify_message(const LexiconClassifier& classifier, const Message& message);

struct SentimentReport {
  std::string dataset;
  std::size_t messages = 0;
  std::size_t abstentions = 0;
  double accuracy = 0.0;
  double macro_f1 = 0.0;
  double abstention_rate = 0.0;
  double threshold = 0.0;
};

SentimentReport evaluate_lexicon_classifier(const LexiconClassifier& classifier, const MessageDataset& dataset);

void write_sentiment_csv(std::span<const SentimentReport> reports, std::ostream& out);
nlohmann::json sentiment_report_json(const SentimentReport& report);

// (mean, sum, max, min, population std) of the matched token scores; zeros when none match.
std::array<double, 5> extract_lexicon_features(const ScoreTable& lexicon, const Message& message);

struct BowConfig {
  double lambda = 1e-2;  // l2 strength
  LinearConfig linear;
};

// Regularized linear classifier over bag-of-words counts, optionally extended
// with the five lexicon features standardized by training statistics.
class BowClassifier {
 public:
  Polarity predict(const Message& message) const;
  std::size_t feature_count() const noexcept { return static_cast<std::size_t>(model_.num_features()); }
  std::size_t vocabulary_size() const noexcept { return vocab_.size(); }
  const LinearModel& model() const noexcept { return model_; }

  friend BowClassifier train_bow_classifier(const MessageDataset& train, const ScoreTable* lexicon,
                                            const BowConfig& config);

 private:
  Eigen::VectorXd features(const Message& message) const;

  std::unordered_map<std::string, Eigen::Index> vocab_;
  std::optional<ScoreTable> lexicon_;
  Eigen::VectorXd feature_mean_;
  Eigen::VectorXd feature_scale_;
  LinearModel model_;
};

BowClassifier train_bow_classifier(const MessageDataset& train, const ScoreTable* lexicon = nullptr,
                                   const BowConfig& config = {});

}  // namespace lexpand
