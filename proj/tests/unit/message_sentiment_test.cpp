#include "fixtures.hpp"
#include "oracles.hpp"

#include "lexpand/error.hpp"
#include "lexpand/message_sentiment.hpp"
#include "lexpand/metrics.hpp"
#include "lexpand/random.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <sstream>

namespace lexpand {
namespace {

using Tokens = std::vector<std::string>;

Message tokens_message(Tokens tokens) {
  Message m;
  m.tokens = std::move(tokens);
  return m;
}

std::vector<Message> as_messages(const std::vector<Tokens>& all) {
  std::vector<Message> out;
  for (const auto& t : all) out.push_back(tokens_message(t));
  return out;
}

TEST(Tokenize, StatedExamples) {
  EXPECT_EQ(tokenize("GOOD movie!"), (Tokens{"good", "movie", "!"}));
  EXPECT_EQ(tokenize("@bob http://x.co :)"), (Tokens{"<user>", "<url>", ":)"}));
  EXPECT_TRUE(tokenize("").empty());
  EXPECT_TRUE(tokenize(" \t\r\n").empty());
}

TEST(Tokenize, HashtagsEmoticonsAndPunctuation) {
  EXPECT_EQ(tokenize("#Happy day"), (Tokens{"#happy", "day"}));
  EXPECT_EQ(tokenize("so sad :-( <3"), (Tokens{"so", "sad", ":-(", "<3"}));
  EXPECT_EQ(tokenize("don't stop, ok?"), (Tokens{"don't", "stop", ",", "ok", "?"}));
  EXPECT_EQ(tokenize("at 10:30 www.example.org"), (Tokens{"at", "10", ":", "30", "<url>"}));
  EXPECT_EQ(tokenize("hey:)"), (Tokens{"hey", ":)"}));
  EXPECT_EQ(tokenize("xD :D"), (Tokens{"xd", ":D"}));
}

TEST(Tokenize, EveryTokenIsLowercase) {
  Rng rng(3);
  const std::string alphabet = "aBcDeF GH!?:)@#";
  for (int trial = 0; trial < 100; ++trial) {
    std::string text;
    for (int i = 0; i < 30; ++i) text += alphabet[rng.below(alphabet.size())];
    for (const auto& t : tokenize(text)) {
      if (t.size() >= 2 && (t[0] == ':' || t[0] == ';')) continue;  // emoticons keep their case
      EXPECT_TRUE(std::none_of(t.begin(), t.end(), [](char c) { return std::isupper(static_cast<unsigned char>(c)); }))
          << t;
    }
  }
}

TEST(Score, StatedExamples) {
  const ScoreTable lex{{"good", 0.5}, {"awful", -0.9}};
  EXPECT_EQ(score_message(lex, tokens_message({"good", "meh"})), 0.5);
  EXPECT_NEAR(*score_message(lex, tokens_message({"good", "awful"})), -0.2, 1e-15);
  EXPECT_FALSE(score_message(lex, tokens_message({"meh"})));
  EXPECT_FALSE(score_message(lex, tokens_message({})));
}

TEST(Score, InvariantUnderPermutationAndDuplication) {
  Rng rng(11);
  ScoreTable lex;
  for (int i = 0; i < 20; ++i) lex[testing::token_name(static_cast<std::size_t>(i))] = rng.uniform() * 2 - 1;
  for (int trial = 0; trial < 200; ++trial) {
    Tokens tokens;
    const auto n = 1 + rng.below(12);
    for (std::size_t i = 0; i < n; ++i) tokens.push_back(testing::token_name(rng.below(30)));
    const auto base = score_message(lex, tokens_message(tokens));
    Tokens shuffled = tokens;
    rng.shuffle(std::span<std::string>(shuffled));
    Tokens doubled;
    for (const auto& t : tokens) doubled.insert(doubled.end(), {t, t});
    const auto a = score_message(lex, tokens_message(shuffled));
    const auto b = score_message(lex, tokens_message(doubled));
    ASSERT_EQ(base.has_value(), a.has_value());
    ASSERT_EQ(base.has_value(), b.has_value());
    if (base) {
      EXPECT_EQ(*a, *base);
      EXPECT_EQ(*b, *base);
    }
  }
}

TEST(Threshold, StatedExamples) {
  const ScoreTable lex{{"a", 0.2}, {"b", 0.4}};
  EXPECT_NEAR(estimate_threshold(lex, as_messages({{"a"}, {"b"}})), 0.3, 1e-15);
  EXPECT_EQ(estimate_threshold(lex, as_messages({{"b"}})), 0.4);
  EXPECT_NEAR(estimate_threshold(lex, as_messages({{"a"}, {"zzz"}, {"b"}})), 0.3, 1e-15);
  EXPECT_THROW(estimate_threshold(lex, as_messages({{"zzz"}})), Error);
  EXPECT_THROW(estimate_threshold(lex, {}), Error);
}

TEST(Threshold, SplitsItsOwnCorpus) {
  Rng rng(5);
  ScoreTable lex;
  for (int i = 0; i < 10; ++i) lex[testing::token_name(static_cast<std::size_t>(i))] = rng.normal();
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<Message> corpus;
    const auto n = 1 + rng.below(8);
    for (std::size_t m = 0; m < n; ++m) {
      Tokens tokens;
      for (std::size_t k = 0, len = 1 + rng.below(4); k < len; ++k) {
        tokens.push_back(testing::token_name(rng.below(12)));
      }
      corpus.push_back(tokens_message(tokens));
    }
    std::vector<double> scores;
    for (const auto& m : corpus) {
      if (const auto s = score_message(lex, m)) scores.push_back(*s);
    }
    if (scores.empty()) continue;
    const double t = estimate_threshold(lex, corpus);
    const auto [lo, hi] = std::minmax_element(scores.begin(), scores.end());
    EXPECT_GE(*hi, t);
    if (*lo != *hi) EXPECT_LT(*lo, t);
  }
}

TEST(Classify, BoundaryAndAbstention) {
  const LexiconClassifier clf{{{"good", 0.5}, {"ok", 0.3}}, 0.3};
  const auto pos = classify_message(clf, tokens_message({"good"}));
  EXPECT_EQ(pos.label, Polarity::positive);
  EXPECT_FALSE(pos.abstained());
  EXPECT_EQ(classify_message(clf, tokens_message({"ok"})).label, Polarity::positive);
  const auto none = classify_message(clf, tokens_message({"meh"}));
  EXPECT_EQ(none.label, Polarity::negative);
  EXPECT_TRUE(none.abstained());
}

TEST(Classify, SignFlipReversesDecisions) {
  Rng rng(8);
  LexiconClassifier clf, flipped;
  for (int i = 0; i < 15; ++i) {
    const double s = std::round((rng.uniform() * 2 - 1) * 8) / 8;  // dyadic, so means are exact
    clf.lexicon[testing::token_name(static_cast<std::size_t>(i))] = s;
    flipped.lexicon[testing::token_name(static_cast<std::size_t>(i))] = -s;
  }
  clf.threshold = 0.125;
  flipped.threshold = -0.125;
  for (int trial = 0; trial < 300; ++trial) {
    Tokens tokens;
    for (std::size_t k = 0, len = 1 + rng.below(2); k < len; ++k) {
      tokens.push_back(testing::token_name(rng.below(18)));
    }
    const auto m = tokens_message(tokens);
    const auto a = classify_message(clf, m);
    const auto b = classify_message(flipped, m);
    ASSERT_EQ(a.abstained(), b.abstained());
    if (a.abstained()) continue;
    EXPECT_EQ(*b.score, -*a.score);
    if (*a.score != clf.threshold) EXPECT_NE(a.label, b.label) << *a.score;
  }
}

TEST(Evaluate, PerfectClassifierScoresOne) {
  std::istringstream in("positive\tgreat\nnegative\tawful\npositive\tgreat great\n");
  const auto data = parse_message_dataset(in, "toy");
  const LexiconClassifier clf{{{"great", 1.0}, {"awful", -1.0}}, 0.0};
  const auto r = evaluate_lexicon_classifier(clf, data);
  EXPECT_EQ(r.accuracy, 1.0);
  EXPECT_EQ(r.macro_f1, 1.0);
  EXPECT_EQ(r.abstentions, 0u);
}

TEST(Evaluate, HandFixture) {
  const std::filesystem::path dir = LEXPAND_FIXTURE_DIR;
  const auto lexicon = std::get<ContinuousLexicon>(
      parse_lexicon(dir / "hand_lexicon.tsv", {LexiconKind::continuous, Scale{-1, 1}, {}}));
  const auto data = parse_message_dataset(dir / "hand_messages.tsv");
  ASSERT_EQ(data.messages.size(), 5u);
  LexiconClassifier clf{make_score_table(lexicon), 0.0};
  std::vector<Message> corpus;
  for (const auto& lm : data.messages) corpus.push_back(lm.message);
  clf.threshold = estimate_threshold(clf.lexicon, corpus);
  EXPECT_EQ(clf.threshold, 0.0);

  const std::vector<std::pair<Polarity, std::optional<double>>> expected{{Polarity::positive, 0.75},
                                                                         {Polarity::negative, -0.5},
                                                                         {Polarity::negative, -0.25},
                                                                         {Polarity::negative, std::nullopt},
                                                                         {Polarity::positive, 0.0}};
  for (std::size_t i = 0; i < expected.size(); ++i) {
    const auto d = classify_message(clf, data.messages[i].message);
    EXPECT_EQ(d.label, expected[i].first) << i;
    EXPECT_EQ(d.score, expected[i].second) << i;
  }
  const auto r = evaluate_lexicon_classifier(clf, data);
  EXPECT_DOUBLE_EQ(r.accuracy, 0.8);
  EXPECT_DOUBLE_EQ(r.macro_f1, 0.8);
  EXPECT_EQ(r.abstentions, 1u);
  EXPECT_DOUBLE_EQ(r.abstention_rate, 0.2);
}

TEST(Evaluate, AgreesWithSharedMetrics) {
  Rng rng(17);
  LexiconClassifier clf;
  for (int i = 0; i < 8; ++i) clf.lexicon[testing::token_name(static_cast<std::size_t>(i))] = rng.normal();
  MessageDataset data{"random", {}};
  for (int m = 0; m < 60; ++m) {
    const auto label = rng.uniform() < 0.5 ? Polarity::positive : Polarity::negative;
    data.messages.push_back({tokens_message({testing::token_name(rng.below(10))}), label});
  }
  const auto r = evaluate_lexicon_classifier(clf, data);
  std::vector<std::size_t> gold, pred;
  for (const auto& lm : data.messages) {
    gold.push_back(static_cast<std::size_t>(lm.label));
    pred.push_back(static_cast<std::size_t>(classify_message(clf, lm.message).label));
  }
  EXPECT_DOUBLE_EQ(r.macro_f1, testing::confusion_macro_f1(gold, pred, 2));
  EXPECT_DOUBLE_EQ(r.macro_f1, macro_avg_f1(gold, pred, 2));
  EXPECT_DOUBLE_EQ(r.accuracy, accuracy(gold, pred));
  EXPECT_THROW(evaluate_lexicon_classifier(clf, MessageDataset{"empty", {}}), Error);
}

TEST(Evaluate, CsvAndJsonReports) {
  SentimentReport r{"toy", 5, 1, 0.8, 0.75, 0.2, 0.25};
  std::ostringstream out;
  write_sentiment_csv(std::span(&r, 1), out);
  EXPECT_EQ(out.str(),
            "task,model,row,params,metric,dev_score,test_score,best_epoch,status,seed\n"
            "toy,lexicon,summary,threshold=0.25;abstentions=1,accuracy,,0.800000,0,ok,0\n"
            "toy,lexicon,summary,threshold=0.25;abstentions=1,macro_f1,,0.750000,0,ok,0\n");
  EXPECT_EQ(sentiment_report_json(r).at("abstentions"), 1);
}

TEST(Dataset, ParsesLabelsAndRejectsBadLines) {
  std::istringstream good("positive\tYay!\r\n\nnegative\tBoo\n");
  const auto data = parse_message_dataset(good, "d");
  ASSERT_EQ(data.messages.size(), 2u);
  EXPECT_EQ(data.messages[0].message.tokens, (Tokens{"yay", "!"}));
  EXPECT_EQ(data.messages[1].label, Polarity::negative);
  std::istringstream neutral("neutral\tmeh\n");
  EXPECT_THROW(parse_message_dataset(neutral, "d"), ParseError);
  std::istringstream no_tab("positive yay\n");
  EXPECT_THROW(parse_message_dataset(no_tab, "d"), ParseError);
}

TEST(Features, StatedExamples) {
  const ScoreTable lex{{"a", 1.0}, {"b", -1.0}, {"c", 0.4}};
  EXPECT_EQ(extract_lexicon_features(lex, tokens_message({"a", "b"})), (std::array<double, 5>{0, 0, 1, -1, 1}));
  EXPECT_EQ(extract_lexicon_features(lex, tokens_message({"c", "zzz"})), (std::array<double, 5>{0.4, 0.4, 0.4, 0.4, 0}));
  EXPECT_EQ(extract_lexicon_features(lex, tokens_message({"zzz"})), (std::array<double, 5>{0, 0, 0, 0, 0}));
}

MessageDataset separable_messages() {
  std::ostringstream text;
  const char* pos[] = {"sunny", "bright", "warm", "lovely", "joy"};
  const char* neg[] = {"rainy", "dark", "cold", "dreary", "gloom"};
  for (int i = 0; i < 5; ++i) {
    text << "positive\t" << pos[i] << ' ' << pos[(i + 1) % 5] << '\n';
    text << "negative\t" << neg[i] << ' ' << neg[(i + 2) % 5] << '\n';
  }
  std::istringstream in(text.str());
  return parse_message_dataset(in, "separable");
}

TEST(Bow, SeparableMessagesAreLearnt) {
  const auto data = separable_messages();
  const auto clf = train_bow_classifier(data);
  for (const auto& lm : data.messages) EXPECT_EQ(clf.predict(lm.message), lm.label) << lm.message.raw;
  EXPECT_EQ(clf.vocabulary_size(), 10u);
  EXPECT_EQ(clf.feature_count(), 10u);
}

TEST(Bow, LexiconAddsExactlyFiveFeatures) {
  const auto data = separable_messages();
  const ScoreTable lex{{"sunny", 0.9}, {"gloom", -0.7}};
  const auto plain = train_bow_classifier(data);
  const auto with = train_bow_classifier(data, &lex);
  EXPECT_EQ(with.feature_count(), plain.feature_count() + 5);
  for (const auto& lm : data.messages) EXPECT_EQ(with.predict(lm.message), lm.label);
}

TEST(Bow, IsDeterministic) {
  const auto data = separable_messages();
  const ScoreTable lex{{"sunny", 0.9}};
  EXPECT_EQ(train_bow_classifier(data, &lex).model().weights, train_bow_classifier(data, &lex).model().weights);
}

TEST(Bow, NeedsBothClasses) {
  std::istringstream in("positive\ta\npositive\tb\n");
  EXPECT_THROW(train_bow_classifier(parse_message_dataset(in, "one")), Error);
  EXPECT_THROW(train_bow_classifier(MessageDataset{}), Error);
}

}  // namespace
}  // namespace lexpand
