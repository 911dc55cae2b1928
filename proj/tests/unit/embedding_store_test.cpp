#include "fixtures.hpp"

#include "lexpand/embedding_store.hpp"
#include "lexpand/error.hpp"
#include "lexpand/logging.hpp"

#include <gtest/gtest.h>

#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

namespace lexpand {
namespace {

constexpr const char* kSmall = "2 3\napple 0.1 0.2 0.3\nbad -1.0 0.0 1.0";

using testing::CaptureLog;

TEST(EmbeddingStore, ParsesTextFormat) {
  const auto e = parse_embeddings_text(kSmall);
  EXPECT_EQ(e.dim(), 3);
  EXPECT_EQ(e.size(), 2u);
  const auto bad = e.lookup("bad");
  ASSERT_TRUE(bad);
  EXPECT_EQ(*bad, Eigen::Vector3d(-1.0, 0.0, 1.0));
}

TEST(EmbeddingStore, WrongVectorLengthNamesLine) {
  try {
    (void)parse_embeddings_text("1 3\nx 0.5 0.5\n");
    FAIL() << "expected a parse error";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
}

TEST(EmbeddingStore, RejectsMalformedHeaderAndValues) {
  EXPECT_THROW(parse_embeddings_text("two 3\n"), ParseError);
  EXPECT_THROW(parse_embeddings_text("1 0\n"), ParseError);
  EXPECT_THROW(parse_embeddings_text("1 2\nx 0.5 abc\n"), ParseError);
  EXPECT_THROW(parse_embeddings_text("1 2\nx 0.5 nan\n"), ParseError);
  EXPECT_THROW(parse_embeddings_text("1 2\nx 0.5 inf\n"), ParseError);
  EXPECT_THROW(parse_embeddings_text("2 2\nx 0.5 1\n"), ParseError);
  EXPECT_THROW(parse_embeddings_text("1 2\nx 0.5 1\ny 1 1\n"), ParseError);
}

TEST(EmbeddingStore, NonFiniteValueNamesLine) {
  try {
    (void)parse_embeddings_text("2 2\nx 0.5 1\ny inf 1\n");
    FAIL() << "expected a parse error";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3u);
  }
}

TEST(EmbeddingStore, DuplicateTokenKeepsFirstAndWarns) {
  CaptureLog log;
  const auto e = parse_embeddings_text("2 2\nok 1 2\nok 3 4\n");
  EXPECT_EQ(e.size(), 1u);
  EXPECT_EQ(*e.lookup("ok"), Eigen::Vector2d(1, 2));
  EXPECT_FALSE(log.warnings.empty());
}

TEST(EmbeddingStore, AcceptsCarriageReturns) {
  const auto e = parse_embeddings_text("1 2\r\nx 1 2\r\n");
  EXPECT_EQ(*e.lookup("x"), Eigen::Vector2d(1, 2));
}

TEST(EmbeddingStore, Lookup) {
  const auto e = parse_embeddings_text(kSmall);
  EXPECT_EQ(*e.lookup("apple"), Eigen::Vector3d(0.1, 0.2, 0.3));
  EXPECT_FALSE(e.lookup("unseen"));
  EXPECT_EQ(*e.lookup("apple"), *e.lookup("apple"));
  EXPECT_THROW((void)e.column(2), Error);
}

TEST(EmbeddingStore, ConstructorValidates) {
  EXPECT_THROW(EmbeddingMatrix({"a", "a"}, Eigen::MatrixXd::Zero(2, 2)), Error);
  EXPECT_THROW(EmbeddingMatrix({"a"}, Eigen::MatrixXd::Zero(2, 2)), Error);
  EXPECT_THROW(EmbeddingMatrix({}, Eigen::MatrixXd::Zero(0, 0)), Error);
}

TEST(EmbeddingStore, Coverage) {
  const auto e = parse_embeddings_text(kSmall);
  CategoricalLexicon lex{{"neg", "pos"}, {{"apple", 1}, {"zzz", 0}}};
  auto report = coverage(e, lex);
  EXPECT_EQ(report.covered, 1u);
  EXPECT_EQ(report.missing, std::vector<std::string>{"zzz"});

  report = coverage(e, ContinuousLexicon{});
  EXPECT_EQ(report.covered, 0u);
  EXPECT_TRUE(report.missing.empty());

  report = coverage(e, ContinuousLexicon{std::nullopt, {{"apple", 1.0}, {"bad", -1.0}}});
  EXPECT_EQ(report.covered, 2u);
  EXPECT_TRUE(report.missing.empty());
}

TEST(EmbeddingStore, RestrictToVocabulary) {
  const auto e = parse_embeddings_text(kSmall);
  const Lexicon lex = ContinuousLexicon{std::nullopt, {{"apple", 1.0}, {"zzz", 0.5}, {"bad", -1.0}}};
  const auto kept = std::get<ContinuousLexicon>(restrict_to_vocabulary(lex, e));
  ASSERT_EQ(kept.size(), 2u);
  EXPECT_EQ(kept.entries[0].token, "apple");
  EXPECT_EQ(kept.entries[1].token, "bad");
}

TEST(EmbeddingStore, TextRoundTripIsExact) {
  const auto fixture = testing::make_separable(7, 30);
  testing::TempDir dir;
  write_embeddings_text(fixture.embeddings, dir / "e.txt");
  const auto back = load_embeddings(dir / "e.txt");
  EXPECT_EQ(back.vocab(), fixture.embeddings.vocab());
  EXPECT_EQ(back.values(), fixture.embeddings.values());
  EXPECT_EQ(back.checksum(), fixture.embeddings.checksum());
}

TEST(EmbeddingStore, LoadsBinaryFormat) {
  testing::TempDir dir;
  {
    std::ofstream out(dir / "e.bin", std::ios::binary);
    out << "2 2\n";
    const float a[2] = {0.5f, -1.25f};
    const float b[2] = {2.0f, 0.0f};
    out << "alpha ";
    out.write(reinterpret_cast<const char*>(a), sizeof a);
    out << "\nbeta ";
    out.write(reinterpret_cast<const char*>(b), sizeof b);
    out << "\n";
  }
  const auto e = load_embeddings(dir / "e.bin", EmbeddingFormat::binary);
  EXPECT_EQ(e.size(), 2u);
  EXPECT_EQ(*e.lookup("alpha"), Eigen::Vector2d(0.5, -1.25));
  EXPECT_EQ(*e.lookup("beta"), Eigen::Vector2d(2.0, 0.0));
}

TEST(EmbeddingStore, TruncatedBinaryIsAnError) {
  testing::TempDir dir;
  {
    std::ofstream out(dir / "e.bin", std::ios::binary);
    out << "2 2\nalpha ";
    const float a[2] = {0.5f, -1.25f};
    out.write(reinterpret_cast<const char*>(a), sizeof a);
  }
  EXPECT_THROW(load_embeddings(dir / "e.bin", EmbeddingFormat::binary), ParseError);
}

TEST(EmbeddingStore, MissingFileIsAnError) {
  EXPECT_THROW(load_embeddings("/nonexistent/embeddings.txt"), Error);
}

TEST(EmbeddingStore, ChecksumSeesValuesAndVocabulary) {
  const auto e = parse_embeddings_text(kSmall);
  const auto renamed = parse_embeddings_text("2 3\napple 0.1 0.2 0.3\nbag -1.0 0.0 1.0");
  const auto changed = parse_embeddings_text("2 3\napple 0.1 0.2 0.3\nbad -1.0 0.0 1.5");
  EXPECT_NE(e.checksum(), renamed.checksum());
  EXPECT_NE(e.checksum(), changed.checksum());
  EXPECT_EQ(e.checksum(), parse_embeddings_text(kSmall).checksum());
}

}  // namespace
}  // namespace lexpand
