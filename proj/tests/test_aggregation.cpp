#include <doctest.h>

#include "cdec/aggregation.hpp"
#include "cdec/decoding.hpp"
#include "cdec/error.hpp"
#include "oracles.hpp"

using namespace cdec;

namespace {

ExtractedAnswer ans(const std::string& s) {
  if (s.empty()) return ExtractedAnswer::none();
  return {s, s, true};
}

std::vector<ExtractedAnswer> answers(const std::vector<std::string>& xs) {
  std::vector<ExtractedAnswer> out;
  for (const auto& x : xs) out.push_back(ans(x));
  return out;
}

}  // namespace

TEST_CASE("canonicalize_number") {
  CHECK(canonicalize_number("1,234.50") == "1234.5");
  CHECK(canonicalize_number("007") == "7");
  CHECK(canonicalize_number("+3") == "3");
  CHECK(canonicalize_number("-0") == "0");
  CHECK(canonicalize_number("-0012.000") == "-12");
  CHECK(canonicalize_number("0.50") == "0.5");
}

TEST_CASE("extract_answer") {
  auto r = extract_answer("...so the total is 42.", AnswerPattern::last_number());
  CHECK(r.found);
  CHECK(r.canonical == "42");
  CHECK_FALSE(extract_answer("no digits here", AnswerPattern::last_number()).found);
  CHECK(extract_answer("1,234.50 then 7", AnswerPattern::last_number()).canonical == "7");
  r = extract_answer("the answer is 1,234.50", AnswerPattern::after_marker("answer is"));
  CHECK(r.found);
  CHECK(r.canonical == "1234.5");
  CHECK(r.raw_text == "1,234.50");
  CHECK_FALSE(extract_answer("12 and 13", AnswerPattern::after_marker("answer is")).found);
  CHECK(extract_answer("12 - 30 = -18", AnswerPattern::last_number()).canonical == "-18");
  CHECK(extract_answer("9-3", AnswerPattern::last_number()).canonical == "3");
  CHECK(extract_answer(" 4521\n12", AnswerPattern::last_number()).canonical == "12");
}

TEST_CASE("majority_vote") {
  auto v = majority_vote(answers({"8", "8", "3"}));
  CHECK(v.winner == "8");
  CHECK(v.counts == std::map<std::string, std::size_t>{{"8", 2}, {"3", 1}});
  CHECK(v.k == 3);
  CHECK(majority_vote(answers({"8", "3"})).winner == "8");
  CHECK(majority_vote(answers({"3", "8"})).winner == "3");
  v = majority_vote(answers({"", "", "5"}));
  CHECK(v.winner == "5");
  CHECK(v.valid_paths == 1);
  CHECK(majority_vote(answers({"", ""})).winner.empty());
  CHECK_THROWS_AS(majority_vote({}), Error);
}

TEST_CASE("majority_vote matches the brute-force mode") {
  oracle::TestRng rng(41);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<std::string> xs;
    const int n = 1 + rng.below(25);
    const int alphabet = 1 + rng.below(6);
    for (int i = 0; i < n; ++i) {
      const int pick = rng.below(alphabet + 1);
      xs.push_back(pick == alphabet ? "" : std::to_string(pick * 7));
    }
    CHECK(majority_vote(answers(xs)).winner == oracle::mode(xs));
  }
}

TEST_CASE("self_consistency") {
  const auto vocab = Vocabulary::arithmetic();
  TableScorer seven(vocab);
  seven.set_default_logits(std::vector<double>(vocab.size(), 0.0));
  // always emits " 7" then EOS
  std::vector<double> space(vocab.size(), -20.0), seven_row(vocab.size(), -20.0), end(vocab.size(), -20.0);
  space[static_cast<std::size_t>(*vocab.find(" "))] = 0.0;
  seven_row[static_cast<std::size_t>(*vocab.find("7"))] = 0.0;
  end[static_cast<std::size_t>(vocab.eos())] = 0.0;
  seven.set_default_logits(space);
  seven.add_rule_logits({*vocab.find("=")}, space);
  seven.add_rule_logits({*vocab.find(" ")}, seven_row);
  seven.add_rule_logits({*vocab.find("7")}, end);

  DecodeRequest req;
  req.prompt = make_prompt(vocab, "3 * 4 =");
  req.max_new_tokens = 5;
  req.stop = {vocab.eos()};
  req.seed = 9;
  req.strategy = Sample{1.0};
  const auto sc = self_consistency(seven, nullptr, vocab, req, 5, AnswerPattern::last_number(), 2);
  CHECK(sc.vote.winner == "7");
  CHECK(sc.vote.counts == std::map<std::string, std::size_t>{{"7", 5}});

  // k = 1 matches single-path decoding
  TableScorer noisy(vocab);
  const auto one = self_consistency(noisy, nullptr, vocab, req, 1, AnswerPattern::last_number());
  const auto single = decode(noisy, nullptr, req, 0);
  CHECK(one.vote.winner ==
        extract_answer(vocab.decode(single.continuation.ids), AnswerPattern::last_number()).canonical);
}
