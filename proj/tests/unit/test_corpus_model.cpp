#include <doctest.h>

#include <sstream>

#include "figbias/corpus_model.hpp"
#include "figbias/errors.hpp"
#include "fixtures.hpp"

using namespace figbias;
using fbtest::make_instance;

namespace {

bool has_message(const ValidationReport& report, const std::string& id, const std::string& text) {
  for (const auto& v : report) {
    if (v.id == id && v.message == text) return true;
  }
  return false;
}

}  // namespace

TEST_CASE("validate accepts a well-formed dataset") {
  Dataset d;
  d.instances.push_back(fbtest::dark_age());
  d.instances.push_back(make_instance("ex-2", "I like dark colors", {{2, 3}}, Label::literal));
  CHECK(validate(d).empty());
}

TEST_CASE("validate reports span and length violations by id") {
  Dataset d;
  d.instances.push_back(make_instance("a", "one two three four", {{3, 3}}, Label::literal));
  auto b = make_instance("b", "one two three", {{0, 1}}, Label::literal);
  b.lemmas = std::vector<std::string>{"one", "two"};
  d.instances.push_back(b);
  d.instances.push_back(make_instance("c", "one two", {{1, 5}}, Label::literal));
  d.instances.push_back(make_instance("d", "one two three four", {{2, 3}, {0, 1}}, Label::literal));
  d.instances.push_back(make_instance("e", "one two three four", {{0, 2}, {1, 3}}, Label::literal));
  d.instances.push_back(make_instance("a", "x y", {{0, 1}}, Label::literal));
  auto g = make_instance("g", "x y", {{0, 1}}, Label::literal);
  g.pos = std::vector<std::string>{"X"};
  d.instances.push_back(g);

  const Dataset before = d;
  const ValidationReport report = validate(d);
  CHECK(has_message(report, "a", "empty span"));
  CHECK(has_message(report, "b", "lemma length mismatch"));
  CHECK(has_message(report, "c", "span out of range"));
  CHECK(has_message(report, "d", "spans not sorted"));
  CHECK(has_message(report, "e", "overlapping spans"));
  CHECK(has_message(report, "a", "duplicate id"));
  CHECK(has_message(report, "g", "pos length mismatch"));

  // Pure: same report again, input untouched.
  CHECK(validate(d) == report);
  REQUIRE(d.instances.size() == before.instances.size());
  for (std::size_t i = 0; i < d.instances.size(); ++i) {
    CHECK(to_json(d.instances[i]) == to_json(before.instances[i]));
  }
}

TEST_CASE("validate flags missing spans and tokens") {
  Instance empty;
  empty.id = "z";
  auto report = validate(empty);
  CHECK(has_message(report, "z", "no tokens"));
  CHECK(has_message(report, "z", "no spans"));
}

TEST_CASE("split keys") {
  auto like = make_instance("k1", "I like dark colors", {{2, 3}}, Label::literal);
  CHECK(split_key_of(like, SplitKey::surface()) == "dark");

  auto boat = make_instance("k2", "Do not Rock the Boat now", {{2, 5}}, Label::metaphoric);
  CHECK(split_key_of(boat, SplitKey::surface()) == "rock the boat");

  auto pair = make_instance("k3", "dark thoughts", {{0, 2}}, Label::metaphoric);
  pair.lemmas = std::vector<std::string>{"dark", "thought"};
  CHECK(split_key_of(pair, SplitKey::head(0)) == "dark");
  CHECK(split_key_of(pair, SplitKey::head(1)) == "thought");
  CHECK(split_key_of(pair, SplitKey::lemma()) == "dark thought");
  CHECK_FALSE(split_key_of(pair, SplitKey::head(2)).has_value());

  SUBCASE("lemma kinds fall back to surface without lemmas") {
    CHECK_FALSE(split_key_of(like, SplitKey::lemma()).has_value());
    CHECK_FALSE(split_key_of(like, SplitKey::head(0)).has_value());
    auto resolved = resolve_split_key(like, SplitKey::lemma());
    CHECK(resolved.value == "dark");
    CHECK(resolved.fell_back);
    auto direct = resolve_split_key(pair, SplitKey::head(1));
    CHECK(direct.value == "thought");
    CHECK_FALSE(direct.fell_back);
  }

  SUBCASE("discontiguous spans join span tokens only") {
    auto rock = make_instance("k4", "rock the political boat", {{0, 2}, {3, 4}}, Label::metaphoric);
    CHECK(split_key_of(rock, SplitKey::surface()) == "rock the boat");
  }

  SUBCASE("deterministic") {
    CHECK(split_key_of(boat, SplitKey::surface()) == split_key_of(boat, SplitKey::surface()));
  }
}

TEST_CASE("SplitKey parsing") {
  CHECK(SplitKey::parse("surface") == SplitKey::surface());
  CHECK(SplitKey::parse("lemma") == SplitKey::lemma());
  CHECK(SplitKey::parse("head:3") == SplitKey::head(3));
  CHECK(SplitKey::head(3).to_string() == "head:3");
  CHECK_THROWS_AS(SplitKey::parse("head:"), ConfigError);
  CHECK_THROWS_AS(SplitKey::parse("head:x"), ConfigError);
  CHECK_THROWS_AS(SplitKey::parse("stem"), ConfigError);
}

TEST_CASE("labels and partitions parse") {
  CHECK(parse_label("metaphoric") == Label::metaphoric);
  CHECK(parse_label("literal") == Label::literal);
  CHECK_THROWS_AS(parse_label("maybe"), DataError);
  CHECK(parse_partition("dev") == Partition::dev);
  CHECK_THROWS_AS(parse_partition("holdout"), DataError);
}

TEST_CASE("canonical JSONL") {
  const std::string line =
      R"({"id":"trofi-00017","dataset":"trofi","tokens":["The","latest","developments","move","us","closer","to","a","dark","age","."],"spans":[[8,9]],"label":"metaphoric","lemmas":null,"pos":null,"split_hint":"train"})";
  Instance instance = instance_from_json(Json::parse(line));
  CHECK(instance.id == "trofi-00017");
  CHECK(instance.tokens.size() == 11);
  REQUIRE(instance.spans.size() == 1);
  CHECK(instance.spans[0] == Span{8, 9});
  CHECK(instance.label == Label::metaphoric);
  CHECK_FALSE(instance.lemmas.has_value());
  CHECK(instance.split_hint == Partition::train);
  CHECK(split_key_of(instance, SplitKey::surface()) == "dark");

  SUBCASE("unknown fields survive a round trip") {
    Json object = Json::parse(line);
    object["annotator"] = "x7";
    object["score"] = 2.5;
    Instance with_extra = instance_from_json(object);
    Json back = to_json(with_extra);
    CHECK(back["annotator"] == "x7");
    CHECK(back["score"] == 2.5);
    CHECK(to_json(instance_from_json(back)) == back);
  }

  SUBCASE("dataset round trip") {
    Dataset d;
    d.name = "trofi";
    d.instances.push_back(instance);
    auto second = make_instance("trofi-00018", "rock the political boat", {{0, 2}, {3, 4}},
                                Label::literal, "trofi");
    second.lemmas = std::vector<std::string>{"rock", "the", "political", "boat"};
    second.pos = std::vector<std::string>{"VERB", "DET", "ADJ", "NOUN"};
    d.instances.push_back(second);

    std::stringstream first;
    write_jsonl(first, d);
    Dataset read = read_jsonl(first, "trofi");
    std::stringstream again;
    write_jsonl(again, read);
    CHECK(first.str() == again.str());
    CHECK(read.instances.size() == 2);
    CHECK(read.instances[1].spans.size() == 2);
  }

  SUBCASE("malformed rows are data errors") {
    std::stringstream bad(R"({"id":"x","tokens":["a"],"spans":[[0]],"label":"literal"})");
    CHECK_THROWS_AS(read_jsonl(bad, "bad"), DataError);
    std::stringstream garbage("not json\n");
    CHECK_THROWS_AS(read_jsonl(garbage, "bad"), DataError);
  }
}

TEST_CASE("dataset statistics") {
  Dataset d;
  for (int i = 0; i < 4; ++i) {
    d.instances.push_back(make_instance("s" + std::to_string(i), "a b", {{0, 1}},
                                        i < 1 ? Label::metaphoric : Label::literal));
  }
  CHECK(d.count(Label::metaphoric) == 1);
  CHECK(d.metaphoric_percent() == doctest::Approx(25.0));
  CHECK(Dataset{}.metaphoric_percent() == 0.0);
}

TEST_CASE("merged span and span tokens") {
  auto rock = make_instance("r", "rock the political boat", {{0, 2}, {3, 4}}, Label::metaphoric);
  CHECK(rock.merged_span() == Span{0, 4});
  CHECK(rock.span_tokens() == std::vector<std::string>{"rock", "the", "boat"});
  CHECK(rock.in_span(3));
  CHECK_FALSE(rock.in_span(2));
}
