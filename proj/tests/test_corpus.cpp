#include <algorithm>
#include <numeric>
#include <span>
#include <sstream>

#include "doctest.h"
#include "respsel/corpus.hpp"
#include "respsel/errors.hpp"
#include "respsel/hashing.hpp"
#include "respsel/text.hpp"
#include "support.hpp"

using namespace respsel;
using testing::alternating;
using testing::collector;
using testing::debtor;

namespace {

std::string line_of(const Dialogue& d) { return to_json(d).dump(); }

std::vector<std::string> labels(std::span<const Utterance> us) {
  std::vector<std::string> out;
  for (const auto& u : us) out.push_back(u.text);
  return out;
}

}  // namespace

TEST_SUITE("corpus") {
  TEST_CASE("minimal two-turn dialogue parses") {
    std::istringstream in(line_of(alternating(2)));
    const auto r = parse_dialogues(in);
    REQUIRE(r.dialogues.size() == 1);
    CHECK(r.dialogues[0].utterances.size() == 2);
    CHECK(r.rejections.empty());
  }

  TEST_CASE("two consecutive debtor turns are rejected") {
    Dialogue d = alternating(3);
    d.utterances[2] = debtor("again");
    CHECK_THROWS_AS(validate_dialogue(d), ValidationError);

    std::istringstream in(line_of(alternating(4, "ok")) + "\n" + line_of(d) + "\n");
    const auto r = parse_dialogues(in);
    CHECK(r.dialogues.size() == 1);
    REQUIRE(r.rejections.size() == 1);
    CHECK(r.rejections[0].line == 2);
    CHECK(r.rejections[0].dialogue_id == "dlg");

    std::istringstream again(line_of(d));
    ParseOptions strict;
    strict.strict = true;
    CHECK_THROWS_AS(parse_dialogues(again, strict), ValidationError);
  }

  TEST_CASE("debtor-first, empty text, one turn and misplaced labels are rejected") {
    Dialogue d = alternating(2);
    std::swap(d.utterances[0], d.utterances[1]);
    CHECK_THROWS_AS(validate_dialogue(d), ValidationError);

    Dialogue blank = alternating(2);
    blank.utterances[1].text = "   ";
    CHECK_THROWS_AS(validate_dialogue(blank), ValidationError);

    CHECK_THROWS_AS(validate_dialogue(alternating(1)), ValidationError);

    Dialogue wrong = alternating(2);
    wrong.utterances[1].strategy = "Credit Report";
    CHECK_THROWS_AS(validate_dialogue(wrong), ValidationError);
  }

  TEST_CASE("labels outside the vocabulary are rejected") {
    LabelVocab vocab{{"Credit Report"}, {"Unemployment"}};
    Dialogue d{"v", {collector("c1"), debtor("d1", "Unemployment"), collector("c2", "Card Suspension")}};
    CHECK_THROWS_AS(validate_dialogue(d, &vocab), ValidationError);
    d.utterances[2].strategy = "Credit Report";
    CHECK_NOTHROW(validate_dialogue(d, &vocab));
  }

  TEST_CASE("malformed JSON reports its line number") {
    std::istringstream in(line_of(alternating(2)) + "\n\n{not json\n");
    try {
      parse_dialogues(in);
      FAIL("expected a parse error");
    } catch (const ParseError& e) {
      CHECK(e.line() == 3);
    }
  }

  TEST_CASE("missing fields become rejections, not crashes") {
    std::istringstream in(R"({"dialogue_id":"x","utterances":[{"speaker":"collector"}]})");
    const auto r = parse_dialogues(in);
    CHECK(r.dialogues.empty());
    CHECK(r.rejections.size() == 1);
  }

  TEST_CASE("dialogue json round-trips") {
    Dialogue d{"rt", {collector("hello"), debtor("no money", "Inability to repay"), collector("pay", "Full Payment")}};
    std::istringstream in(line_of(d));
    const auto r = parse_dialogues(in);
    REQUIRE(r.dialogues.size() == 1);
    CHECK(r.dialogues[0] == d);
  }

  TEST_CASE("pair extraction keeps labeled adjacencies only") {
    Dialogue one{"p", {collector("c1"), debtor("d1", "X"), collector("c2", "Y")}};
    const auto pairs = extract_pairs(one);
    REQUIRE(pairs.size() == 1);
    CHECK(pairs[0].debtor_utterance.text == "d1");
    CHECK(pairs[0].collector_utterance.text == "c2");
    CHECK(pairs[0].dialogue_id == "p");

    Dialogue none{"p", {collector("c1"), debtor("d1"), collector("c2", "Y")}};
    CHECK(extract_pairs(none).empty());

    Dialogue two{"p", {collector("c1"), debtor("d1", "X"), collector("c2", "Y"), debtor("d2", "Z"),
                       collector("c3", "W")}};
    const auto both = extract_pairs(two);
    REQUIRE(both.size() == 2);
    CHECK(both[0].debtor_utterance.text == "d1");
    CHECK(both[1].debtor_utterance.text == "d2");
    CHECK(both[1].collector_utterance.text == "c3");
  }

  TEST_CASE("windows match a hand enumeration") {
    CHECK(segment_windows(alternating(4)).empty());

    const auto w8 = segment_windows(alternating(8));
    REQUIRE(w8.size() == 1);
    CHECK(labels(w8[0].context) == std::vector<std::string>{"d1", "c2", "d2", "c3", "d3"});
    CHECK(w8[0].response.text == "c4");

    const auto w10 = segment_windows(alternating(10));
    REQUIRE(w10.size() == 2);
    CHECK(labels(w10[1].context) == std::vector<std::string>{"d2", "c3", "d3", "c4", "d4"});
    CHECK(w10[1].response.text == "c5");
  }

  TEST_CASE("windows follow the index formula for every length") {
    for (std::size_t n = 2; n <= 30; ++n) {
      const auto windows = segment_windows(alternating(n));
      // Window t (1-based) is d_t c_{t+1} d_{t+1} c_{t+2} d_{t+2} -> c_{t+3}.
      std::vector<std::vector<std::string>> expected;
      for (std::size_t t = 1; 2 * (t + 3) - 1 <= n; ++t) {
        const auto s = [](char who, std::size_t k) { return std::string(1, who) + std::to_string(k); };
        expected.push_back({s('d', t), s('c', t + 1), s('d', t + 1), s('c', t + 2), s('d', t + 2), s('c', t + 3)});
      }
      REQUIRE(windows.size() == expected.size());
      for (std::size_t i = 0; i < windows.size(); ++i) {
        auto got = labels(windows[i].context);
        got.push_back(windows[i].response.text);
        CHECK(got == expected[i]);
      }
    }
  }

  TEST_CASE("split sizes") {
    const auto big = split_sizes(40000, {8, 1, 1});
    CHECK(big.train == 32000);
    CHECK(big.val == 4000);
    CHECK(big.test == 4000);
    const auto small = split_sizes(10, {8, 1, 1});
    CHECK(small.train == 8);
    CHECK(small.val == 1);
    CHECK(small.test == 1);
    CHECK_THROWS_AS(split_sizes(10, {8, 0, 1}), DomainError);
  }

  TEST_CASE("split is deterministic and a partition") {
    std::vector<int> items(1000);
    std::iota(items.begin(), items.end(), 0);
    const auto a = split_dataset(items, {8, 1, 1}, 42);
    const auto b = split_dataset(items, {8, 1, 1}, 42);
    CHECK(a.train == b.train);
    CHECK(a.val == b.val);
    CHECK(a.test == b.test);
    std::vector<int> all = a.train;
    all.insert(all.end(), a.val.begin(), a.val.end());
    all.insert(all.end(), a.test.begin(), a.test.end());
    std::sort(all.begin(), all.end());
    CHECK(all == items);
    CHECK(split_dataset(items, {8, 1, 1}, 43).train != a.train);
  }

  TEST_CASE("tokenizers") {
    CHECK(tokenize("  a  b\tc\n", Tokenizer::whitespace) == std::vector<std::string>{"a", "b", "c"});
    CHECK(tokenize("ab c", Tokenizer::character) == std::vector<std::string>{"a", "b", "c"});
    CHECK(tokenize("\xe4\xbd\xa0\xe5\xa5\xbd", Tokenizer::character).size() == 2);
    CHECK(tokenizer_from_string("character") == Tokenizer::character);
    CHECK_THROWS_AS(tokenizer_from_string("bpe"), ConfigError);
  }

  TEST_CASE("fnv-1a reference values") {
    CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
    CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
    CHECK(fnv1a64("foobar") == 0x85944171f73967e8ULL);
    CHECK(hex64(0xabcULL) == "0000000000000abc");
  }
}
