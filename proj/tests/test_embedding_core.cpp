#include <gtest/gtest.h>

#include "clwe/dictionary.hpp"
#include "clwe/embedding_space.hpp"
#include "clwe/io.hpp"
#include "support.hpp"

using namespace clwe;
using clwe::testing::read_file;
using clwe::testing::TempDir;
using clwe::testing::write_file;

namespace {

std::string error_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const std::exception& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST(LoadEmbeddings, ReadsRowsInFileOrder) {
  TempDir dir;
  write_file(dir.file("a.vec"), "2 3\na 1 0 0\nb 0 1 0\n");
  const auto s = load_embeddings(dir.file("a.vec"));
  ASSERT_EQ(s.size(), 2u);
  EXPECT_EQ(s.dim(), 3u);
  EXPECT_EQ(s.token(0), "a");
  EXPECT_EQ(s.token(1), "b");
  EXPECT_EQ(s.matrix(0, 0), 1.0);
  EXPECT_EQ(s.matrix(1, 1), 1.0);
  EXPECT_EQ(s.matrix(1, 2), 0.0);
  EXPECT_TRUE(s.norm_state.empty());
  EXPECT_EQ(s.vocab->count(0), 2u);
  EXPECT_EQ(s.vocab->count(1), 1u);
}

TEST(LoadEmbeddings, ArityErrorNamesLine) {
  TempDir dir;
  write_file(dir.file("bad.vec"), "1 2\na 1 0 extra\n");
  const auto msg = error_of([&] { load_embeddings(dir.file("bad.vec")); });
  EXPECT_NE(msg.find("bad.vec:2:"), std::string::npos) << msg;
}

TEST(LoadEmbeddings, RejectsMalformedInput) {
  TempDir dir;
  const std::vector<std::pair<std::string, std::string>> cases{
      {"two words\n", ":1:"},
      {"2 2\na 1 2\na 3 4\n", ":3:"},
      {"1 2\na 1 nan\n", ":2:"},
      {"1 2\na 1 inf\n", ":2:"},
      {"1 2\na 1 x\n", ":2:"},
      {"3 2\na 1 2\nb 3 4\n", "promises 3"},
      {"1 2\na 1 2\nb 3 4\n", ":3:"},
  };
  for (const auto& [text, marker] : cases) {
    write_file(dir.file("e.vec"), text);
    const auto msg = error_of([&] { load_embeddings(dir.file("e.vec")); });
    EXPECT_NE(msg.find(marker), std::string::npos) << text << " -> " << msg;
  }
  EXPECT_THROW(load_embeddings(dir.file("missing.vec")), DataError);
}

TEST(SaveEmbeddings, OneWordTranscription) {
  TempDir dir;
  Matrix m(1, 2);
  m << 0.5, -0.25;
  save_embeddings(EmbeddingSpace(Vocabulary::from_ranked({"w"}), m), dir.file("w.vec"));
  EXPECT_EQ(read_file(dir.file("w.vec")), "1 2\nw 0.5 -0.25\n");
}

TEST(SaveEmbeddings, EmptyVocabularyIsAnError) {
  TempDir dir;
  EmbeddingSpace empty(Vocabulary(), Matrix(0, 3));
  EXPECT_THROW(save_embeddings(empty, dir.file("e.vec")), DataError);
}

TEST(SaveEmbeddings, RoundTripWithinTolerance) {
  TempDir dir;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    auto s = clwe::testing::random_space(100, 20, seed);
    s.matrix.row(0) *= 40.0;  // entries well above 1 need more than six digits
    save_embeddings(s, dir.file("r.vec"));
    const auto back = load_embeddings(dir.file("r.vec"));
    ASSERT_EQ(back.vocab->tokens(), s.vocab->tokens());
    EXPECT_LE((back.matrix - s.matrix).cwiseAbs().maxCoeff(), 1e-6);
    // save after load reproduces the file exactly
    save_embeddings(back, dir.file("r2.vec"));
    EXPECT_EQ(read_file(dir.file("r.vec")), read_file(dir.file("r2.vec")));
  }
}

TEST(Vocabulary, Bijection) {
  const auto v = Vocabulary::from_ranked(clwe::testing::numbered_tokens("t", 50));
  for (WordId i = 0; i < v.size(); ++i) {
    ASSERT_EQ(v.find(v.token(i)), i);
    EXPECT_EQ(v.token(*v.find(v.token(i))), v.token(i));
  }
  EXPECT_FALSE(v.find("absent").has_value());
}

TEST(Vocabulary, RejectsBadInput) {
  EXPECT_THROW(Vocabulary({"a", "a"}, {2, 1}), DataError);
  EXPECT_THROW(Vocabulary({"a b"}, {1}), DataError);
  EXPECT_THROW(Vocabulary({"a", "b"}, {1, 2}), DataError);
  EXPECT_THROW(Vocabulary({""}, {1}), DataError);
}

TEST(UnitNormalize, ThreeFourFive) {
  Matrix m(1, 2);
  m << 3, 4;
  const auto s = unit_normalize(EmbeddingSpace(Vocabulary::from_ranked({"a"}), m));
  EXPECT_NEAR(s.matrix(0, 0), 0.6, 1e-15);
  EXPECT_NEAR(s.matrix(0, 1), 0.8, 1e-15);
  ASSERT_EQ(s.norm_state.size(), 1u);
  EXPECT_EQ(s.norm_state[0], NormStep::unit);
}

TEST(UnitNormalize, IdempotentAndUnitNorm) {
  const auto once = unit_normalize(clwe::testing::random_space(200, 16, 3));
  for (Eigen::Index i = 0; i < once.matrix.rows(); ++i) EXPECT_NEAR(once.matrix.row(i).norm(), 1.0, 1e-6);
  const auto twice = unit_normalize(once);
  EXPECT_LE((twice.matrix - once.matrix).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(UnitNormalize, ZeroRowNamesToken) {
  Matrix m(2, 2);
  m << 1, 0, 0, 0;
  const auto msg = error_of([&] { unit_normalize(EmbeddingSpace(Vocabulary::from_ranked({"ok", "hollow"}), m)); });
  EXPECT_NE(msg.find("'hollow'"), std::string::npos) << msg;
}

TEST(MeanCenter, Examples) {
  Matrix m(2, 2);
  m << 1, 1, 3, 3;
  const auto s = mean_center(EmbeddingSpace(Vocabulary::from_ranked({"a", "b"}), m));
  Matrix expect(2, 2);
  expect << -1, -1, 1, 1;
  EXPECT_EQ(s.matrix, expect);
  EXPECT_EQ(s.norm_state.back(), NormStep::center);

  Matrix one(1, 3);
  one << 0.5, -2, 7;
  EXPECT_EQ(mean_center(EmbeddingSpace(Vocabulary::from_ranked({"a"}), one)).matrix.cwiseAbs().maxCoeff(), 0.0);
}

TEST(MeanCenter, ZeroMeansAndIdempotence) {
  auto s = clwe::testing::random_space(300, 10, 4);
  s.matrix.array() += 5.0;
  const auto c = mean_center(s);
  EXPECT_LE(c.matrix.colwise().mean().cwiseAbs().maxCoeff(), 1e-9);
  EXPECT_LE((mean_center(c).matrix - c.matrix).cwiseAbs().maxCoeff(), 1e-9);
  EXPECT_THROW(mean_center(EmbeddingSpace(Vocabulary(), Matrix(0, 2))), DataError);
}

TEST(NormalizeChain, UnitRowsAndDeterminism) {
  const auto s = clwe::testing::random_space(150, 12, 5);
  const auto a = normalize_chain(s), b = normalize_chain(s);
  EXPECT_EQ(a.matrix, b.matrix);
  for (Eigen::Index i = 0; i < a.matrix.rows(); ++i) EXPECT_NEAR(a.matrix.row(i).norm(), 1.0, 1e-6);
  EXPECT_TRUE(a.chain_normalized());
  EXPECT_EQ(ensure_chain_normalized(a).matrix, a.matrix);
}

class DictionaryFile : public ::testing::Test {
 protected:
  TempDir dir;
  std::shared_ptr<const Vocabulary> src = std::make_shared<const Vocabulary>(Vocabulary::from_ranked({"a", "b"}));
  std::shared_ptr<const Vocabulary> tgt = std::make_shared<const Vocabulary>(Vocabulary::from_ranked({"x", "y"}));
};

TEST_F(DictionaryFile, FullCoverage) {
  write_file(dir.file("d.txt"), "a x\nb y\n");
  const auto d = load_dictionary(dir.file("d.txt"), src, tgt);
  EXPECT_EQ(d.pairs.size(), 2u);
  EXPECT_EQ(d.coverage.skipped_source_words, 0u);
}

TEST_F(DictionaryFile, OovSkippedAndCounted) {
  write_file(dir.file("d.txt"), "q x\n");
  const auto d = load_dictionary(dir.file("d.txt"), src, tgt, OovPolicy::skip);
  EXPECT_EQ(d.pairs.size(), 0u);
  EXPECT_EQ(d.coverage.skipped_source_words, 1u);
}

TEST_F(DictionaryFile, OovErrorNamesLine) {
  write_file(dir.file("d.txt"), "a x\nq x\n");
  const auto msg = error_of([&] { load_dictionary(dir.file("d.txt"), src, tgt, OovPolicy::error); });
  EXPECT_NE(msg.find("d.txt:2:"), std::string::npos) << msg;
}

TEST_F(DictionaryFile, MultipleTranslationsKept) {
  write_file(dir.file("d.txt"), "a x\na y\na x\n");
  const auto d = load_dictionary(dir.file("d.txt"), src, tgt);
  ASSERT_EQ(d.pairs.size(), 2u);
  const auto groups = d.pairs.grouped();
  ASSERT_EQ(groups.size(), 1u);
  EXPECT_EQ(groups[0].first, 0u);
  EXPECT_EQ(groups[0].second, (std::vector<WordId>{0, 1}));
}

TEST_F(DictionaryFile, SaveLoadRoundTrip) {
  DictionaryPairs d(src, tgt);
  d.add(1, 0);
  d.add(0, 1);
  save_dictionary(d, dir.file("o.txt"));
  EXPECT_EQ(read_file(dir.file("o.txt")), "b x\na y\n");
  EXPECT_EQ(load_dictionary(dir.file("o.txt"), src, tgt).pairs.pairs(), d.pairs());
}

TEST(DictionaryPairs, RangeChecked) {
  auto v = std::make_shared<const Vocabulary>(Vocabulary::from_ranked({"a"}));
  DictionaryPairs d(v, v);
  EXPECT_THROW(d.add(0, 1), DataError);
  d.add(0, 0);
  d.add(0, 0);
  EXPECT_EQ(d.size(), 1u);
}
