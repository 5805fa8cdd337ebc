#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <set>

#include "doctest.h"
#include "kidlab/tokenizer.hpp"
#include "kidlab/toysql.hpp"

using namespace kidlab;

TEST_CASE("vocabulary layout") {
  const Vocabulary& v = Vocabulary::standard();
  CHECK(v.size() <= 160);
  CHECK(v.token(kPadId) == "<pad>");
  CHECK(v.token(kBosId) == "<bos>");
  CHECK(v.token(kEosId) == "<eos>");
  CHECK(v.token(kMaskId) == "<mask>");
  // injective
  std::set<std::string> seen(v.tokens().begin(), v.tokens().end());
  CHECK(int(seen.size()) == v.size());
}

TEST_CASE("encode appends EOS and round-trips") {
  const Vocabulary& v = Vocabulary::standard();
  TokenSequence seq = v.encode("SELECT price FROM items");
  REQUIRE(seq.size() == 5);
  CHECK(seq.ids[0] == v.id("SELECT"));
  CHECK(seq.ids[1] == v.id("price"));
  CHECK(seq.ids[2] == v.id("FROM"));
  CHECK(seq.ids[3] == v.id("items"));
  CHECK(seq.ids[4] == kEosId);
  CHECK(v.decode(seq) == "SELECT price FROM items");

  TokenSequence empty = v.encode("");
  REQUIRE(empty.size() == 1);
  CHECK(empty.ids[0] == kEosId);
  CHECK(v.decode(empty) == "");

  CHECK_THROWS_AS(v.encode("SELECT nonsense_word"), UnknownTokenError);
}

TEST_CASE("compact punctuation splits and rejoins") {
  const Vocabulary& v = Vocabulary::standard();
  std::string sql = "SELECT COUNT(id), MAX(price) FROM items LIMIT 3";
  TokenSequence seq = v.encode(sql);
  CHECK(v.decode(seq) == sql);
  auto toks = Vocabulary::split_text("COUNT(id), MAX(price)");
  REQUIRE(toks.size() == 9);
  CHECK(toks[0] == "COUNT");
  CHECK(toks[1] == "(");
  CHECK(toks[2] == "id");
  CHECK(toks[3] == ")");
  CHECK(toks[4] == ",");
}

TEST_CASE("decode handles specials and unknown ids") {
  const Vocabulary& v = Vocabulary::standard();
  std::vector<int> ids = {v.id("SELECT"), kMaskId, v.id("FROM"), 9999,
                          kEosId, v.id("items")};
  CHECK(v.decode(ids) == "SELECT <mask> FROM <unk-9999>");
}

TEST_CASE("round trip over a generated corpus; MASK never appears") {
  const Vocabulary& v = Vocabulary::standard();
  ToyWorld world = generate_world(7, 300, 60);
  auto sweep = [&](const std::vector<Example>& split) {
    for (const Example& ex : split) {
      const Schema& schema = world.schemas[size_t(ex.schema_index)];
      for (const std::string& text :
           {ex.gold_sql_text, serialize_prompt(schema, ex.question)}) {
        TokenSequence seq = v.encode(
            text, text == ex.gold_sql_text ? SeqRole::Output : SeqRole::Prompt);
        CHECK(v.decode(seq) == text);
        for (size_t i = 0; i + 1 < seq.ids.size(); ++i) {
          CHECK(seq.ids[i] != kMaskId);
          CHECK(seq.ids[i] != kEosId);
        }
        CHECK(seq.ids.back() == kEosId);
      }
    }
  };
  sweep(world.train);
  sweep(world.eval);
}

TEST_CASE("vocabulary file round-trips") {
  const Vocabulary& v = Vocabulary::standard();
  std::string path = "tokenizer_test_vocab.json";
  v.save(path);
  Vocabulary loaded = Vocabulary::load(path);
  CHECK(loaded.tokens() == v.tokens());
  std::remove(path.c_str());
}

TEST_CASE("sequence length limits are enforced") {
  const Vocabulary& v = Vocabulary::standard();
  std::string longtext = "price";
  for (int i = 0; i < kMaxOutputTokens; ++i) longtext += " price";
  CHECK_THROWS_AS(v.encode(longtext, SeqRole::Output), SequenceTooLongError);
  CHECK_NOTHROW(v.encode(longtext, SeqRole::Prompt));
}
