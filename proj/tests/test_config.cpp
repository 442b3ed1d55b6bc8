#include <gtest/gtest.h>

#include <sstream>

#include "clwe/config.hpp"
#include "clwe/pipeline.hpp"
#include "support.hpp"

using namespace clwe;

namespace {

Settings parse(const std::string& text) {
  std::istringstream in(text);
  return Settings::parse(in, "cfg");
}

}  // namespace

TEST(Settings, CommentsBlanksAndLastWins) {
  const auto s = parse("# header\n\ntrain.dim = 10  # trailing\ntrain.dim=20\n  map.csls_k=5\n");
  EXPECT_EQ(s.values().at("train.dim"), "20");
  EXPECT_EQ(s.values().at("map.csls_k"), "5");
  EXPECT_EQ(s.values().size(), 2u);
}

TEST(Settings, MalformedLinesNameTheLine) {
  try {
    parse("train.dim=1\nnonsense\n");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("cfg:2:"), std::string::npos);
  }
  EXPECT_THROW(parse("=3\n"), ConfigError);
  EXPECT_THROW(Settings::load("/nonexistent/clwe.cfg"), ConfigError);
}

TEST(Schema, AppliesTypedValues) {
  TrainConfig t;
  MapConfig m;
  auto schema = train_fields(t);
  const auto ms = map_fields(m, "map.");
  schema.insert(schema.end(), ms.begin(), ms.end());
  clwe::apply(schema, parse("train.dim=32\ntrain.learning_rate=0.5\nmap.retrieval=nn\nmap.direction=forward\n"
                      "map.seed_mode=identical\nother.key=ignored\n"));
  EXPECT_EQ(t.dim, 32u);
  EXPECT_EQ(t.learning_rate, 0.5);
  EXPECT_EQ(m.retrieval, Retrieval::nn);
  EXPECT_EQ(m.direction, Direction::forward);
  EXPECT_EQ(m.seed_mode, SeedMode::identical);
}

TEST(Schema, RejectsUnknownKeysAndBadValues) {
  TrainConfig t;
  const auto schema = train_fields(t);
  EXPECT_THROW(clwe::apply(schema, parse("train.dimm=3\n")), ConfigError);
  EXPECT_THROW(clwe::apply(schema, parse("train.dim=-3\n")), ConfigError);
  EXPECT_THROW(clwe::apply(schema, parse("train.dim=3.5\n")), ConfigError);
  EXPECT_THROW(clwe::apply(schema, parse("train.learning_rate=fast\n")), ConfigError);
  MapConfig m;
  EXPECT_THROW(clwe::apply(map_fields(m, "map."), parse("map.retrieval=cosine\n")), ConfigError);
  PivotConfig p;
  EXPECT_THROW(clwe::apply(pivot_fields(p), parse("pivot.warm_start=maybe\n")), ConfigError);
}

TEST(Schema, DumpRoundTrips) {
  TrainConfig a;
  a.dim = 77;
  a.learning_rate = 0.0125;
  const auto text = dump(train_fields(a));
  EXPECT_NE(text.find("train.dim=77\n"), std::string::npos);
  TrainConfig b;
  clwe::apply(train_fields(b), parse(text));
  EXPECT_EQ(dump(train_fields(b)), text);
}

TEST(PivotConfig, DefaultsAndHash) {
  PivotConfig a;
  EXPECT_EQ(a.stage3.seed_mode, SeedMode::best);
  EXPECT_TRUE(a.warm_start);
  PivotConfig b = a;
  EXPECT_EQ(config_hash(a), config_hash(b));
  b.run_from = Stage::stage3;  // resume range does not change what is computed
  EXPECT_EQ(config_hash(a), config_hash(b));
  b.set_seed(99);
  EXPECT_NE(config_hash(a), config_hash(b));
  PivotConfig c = a;
  c.train.dim = 10;
  EXPECT_NE(config_hash(a), config_hash(c));
}

TEST(Hash, Fnv1aKnownValues) {
  EXPECT_EQ(fnv1a64(""), 0xcbf29ce484222325ull);
  EXPECT_EQ(hex64(fnv1a64("a")), "af63dc4c8601ec8c");
}
