#include <doctest.h>

#include <cmath>

#include "cdec/core_math.hpp"
#include "cdec/datasets.hpp"
#include "cdec/error.hpp"
#include "cdec/scorers.hpp"
#include "oracles.hpp"

using namespace cdec;

namespace {

// <s>=0 </s>=1 a=2 b=3 x=4
Vocabulary small_vocab() { return Vocabulary::characters("toy-v1", "abx"); }

TokenSequence seq(const Vocabulary& v, std::vector<TokenId> ids) { return {v.id(), std::move(ids)}; }

ErrorKind kind_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  return ErrorKind::kInternal;
}

}  // namespace

TEST_CASE("vocabulary encode/decode") {
  const auto v = Vocabulary::arithmetic();
  CHECK(v.size() == 17);
  CHECK(v.id() == "arith-char-v1");
  const auto ids = v.encode("12 - 3 =\n");
  CHECK(ids.size() == 9);
  CHECK(v.decode(ids) == "12 - 3 =\n");
  CHECK(v.char_length(ids) == 9);
  CHECK(kind_of([&] { v.encode("12+3"); }) == ErrorKind::kData);
  const auto p = make_prompt(v, "7");
  CHECK(p.ids.front() == v.bos());
  CHECK(v.decode(p.ids) == "7");

  const auto w = Vocabulary::words("w", {"the", "cat"});
  CHECK(w.decode(w.encode("the cat the")) == "the cat the");
}

TEST_CASE("table scorer") {
  const auto v = small_vocab();
  TableScorer t(v);
  t.add_rule_probs({v.bos()}, {{2, 0.9}, {3, 0.1}});
  const auto logits = t.score_next(seq(v, {v.bos()}));
  const auto p = softmax(logits.values());
  CHECK(p[2] / (p[2] + p[3]) == doctest::Approx(0.9).epsilon(1e-9));
  CHECK(p[3] / (p[2] + p[3]) == doctest::Approx(0.1).epsilon(1e-9));
  // determinism
  CHECK(t.score_next(seq(v, {v.bos()})) == logits);
  // longest suffix wins
  t.add_rule_logits({2}, {0, 0, 0, 5, 0});
  t.add_rule_logits({3, 2}, {0, 0, 0, 0, 5});
  CHECK(t.score_next(seq(v, {0, 2})).argmax() == 3);
  CHECK(t.score_next(seq(v, {0, 3, 2})).argmax() == 4);
  CHECK(kind_of([&] { t.score_next(seq(v, {})); }) == ErrorKind::kUsage);
  CHECK(kind_of([&] { t.score_next(TokenSequence{"other", {0}}); }) == ErrorKind::kScorerCompatibility);
}

TEST_CASE("n-gram add-k estimate, order 1") {
  const auto v = Vocabulary::characters("ab", "ab");
  const auto m = train_ngram(v, {seq(v, {2, 2, 2, 3})}, {1, 1.0, 0.0});
  // smoothing covers the full vocabulary (BOS/EOS included): (c+1)/(4+4)
  CHECK(m->probability({0}, 2) == doctest::Approx(4.0 / 8.0));
  CHECK(m->probability({0}, 3) == doctest::Approx(2.0 / 8.0));
  // restricted to {a, b} this is exactly the 4/6, 2/6 of the hand calculation
  const double pa = m->probability({0}, 2);
  const double pb = m->probability({0}, 3);
  CHECK(pa / (pa + pb) == doctest::Approx(4.0 / 6.0).epsilon(1e-12));
  CHECK(pb / (pa + pb) == doctest::Approx(2.0 / 6.0).epsilon(1e-12));
}

TEST_CASE("n-gram bigram statistics") {
  const auto v = Vocabulary::characters("ab", "ab");
  const auto corpus = std::vector{seq(v, {0, 2, 3, 2, 3})};
  for (int order : {2, 3}) {
    const auto m = train_ngram(v, corpus, {order, 0.1, 0.0});
    const auto l = m->score_next(seq(v, {0, 2}));
    CHECK(l.at(3) > l.at(2));
    CHECK(m->probability({0, 2}, 3) > m->probability({0, 2}, 2));
  }
  // hand count: after "a", b seen twice, a never; (2+k)/(2+4k)
  const auto m2 = train_ngram(v, corpus, {2, 0.1, 0.0});
  CHECK(m2->probability({0, 2}, 3) == doctest::Approx(2.1 / 2.4));
}

TEST_CASE("n-gram back-off to the longest seen context") {
  const auto v = Vocabulary::characters("ab", "ab");
  const auto m3 = train_ngram(v, {seq(v, {0, 2, 3, 2, 3})}, {3, 0.1, 0.0});
  const auto m2 = train_ngram(v, {seq(v, {0, 2, 3, 2, 3})}, {2, 0.1, 0.0});
  // (b,b) never seen as a trigram context; falls to the bigram row for b
  CHECK(m3->score_next(seq(v, {0, 3, 3})) == m2->score_next(seq(v, {0, 3, 3})));
}

TEST_CASE("n-gram serialization round-trip") {
  const auto vocab = Vocabulary::arithmetic();
  CorpusSpec spec;
  spec.size = 200;
  spec.seed = 3;
  const auto corpus = arithmetic_corpus(vocab, gen_arithmetic(spec));
  for (int order = 1; order <= 5; ++order) {
    const auto m = train_ngram(vocab, corpus, {order, 0.137, 1.5});
    const auto text = serialize_ngram(*m);
    const auto back = deserialize_ngram(text);
    CHECK(serialize_ngram(*back) == text);
    CHECK(back->order() == order);
    CHECK(back->smoothing_k() == 0.137);
    CHECK(back->descriptor().parameter_count == 1.5);
    CHECK(back->vocabulary() == vocab);
    oracle::TestRng rng(static_cast<std::uint64_t>(order));
    for (int trial = 0; trial < 50; ++trial) {
      std::vector<TokenId> ctx{vocab.bos()};
      const int len = rng.below(8);
      for (int i = 0; i < len; ++i) ctx.push_back(2 + rng.below(15));
      CHECK(back->score_next(seq(vocab, ctx)) == m->score_next(seq(vocab, ctx)));
    }
  }
  // word vocabulary with awkward tokens survives too
  const Vocabulary words("odd \"id\"", {"<s>", "</s>", "a b", "x:y", "\\"}, 0, 1, TokenizeMode::kWords);
  const auto wm = train_ngram(words, {seq(words, {0, 2, 3, 4, 2})}, {2, 0.5, 0.0});
  CHECK(deserialize_ngram(serialize_ngram(*wm))->vocabulary() == words);
}

TEST_CASE("n-gram deserialization rejects damaged input") {
  const auto v = Vocabulary::characters("ab", "ab");
  const auto text = serialize_ngram(*train_ngram(v, {seq(v, {0, 2, 3, 2, 3})}, {2, 0.1, 0.0}));
  CHECK(kind_of([&] { deserialize_ngram(""); }) == ErrorKind::kData);
  CHECK(kind_of([&] { deserialize_ngram("cdec-ngram 9\n"); }) == ErrorKind::kData);
  CHECK(kind_of([&] { deserialize_ngram(text.substr(0, text.size() / 2)); }) == ErrorKind::kData);
  // random byte corruption never crashes; it parses or fails with a data error
  oracle::TestRng rng(99);
  int rejected = 0;
  for (int trial = 0; trial < 2000; ++trial) {
    std::string bad = text;
    const int edits = 1 + rng.below(3);
    for (int e = 0; e < edits; ++e) {
      bad[static_cast<std::size_t>(rng.below(static_cast<int>(bad.size())))] =
          static_cast<char>(32 + rng.below(95));
    }
    try {
      deserialize_ngram(bad);
    } catch (const Error& e) {
      CHECK(e.kind() != ErrorKind::kInternal);
      ++rejected;
    }
  }
  CHECK(rejected > 0);
}

TEST_CASE("with_prefix") {
  const auto v = small_vocab();
  auto table = std::make_shared<TableScorer>(v);
  table->add_rule_logits({4}, {0, 0, 3, 0, 0});
  table->add_rule_logits({0}, {0, 0, 0, 3, 0});
  ScorerPtr inner = table;

  const auto same = with_prefix(inner, seq(v, {}), v.bos());
  CHECK(same->score_next(seq(v, {0})) == inner->score_next(seq(v, {0})));
  CHECK(same->score_next(seq(v, {0, 2, 3})) == inner->score_next(seq(v, {0, 2, 3})));

  const auto wrapped = with_prefix(inner, seq(v, {4}), v.bos());
  CHECK(wrapped->score_next(seq(v, {0})) == inner->score_next(seq(v, {0, 4})));
  CHECK(wrapped->descriptor().kind == ScorerKind::kPrefixWrapped);
  // a leading BOS on the prefix is not duplicated
  const auto with_bos = with_prefix(inner, seq(v, {0, 4}), v.bos());
  CHECK(with_bos->score_next(seq(v, {0, 3})) == inner->score_next(seq(v, {0, 4, 3})));
}

TEST_CASE("check_pair") {
  ScorerDescriptor e{ScorerKind::kNgram, 65.2, "arith-char-v1", 17};
  ScorerDescriptor a{ScorerKind::kNgram, 1.5, "arith-char-v1", 17};
  auto r = check_pair(e, a);
  CHECK(r.ok);
  CHECK(r.parameter_ratio == doctest::Approx(0.0230).epsilon(0.01));
  CHECK(r.parameter_ratio == doctest::Approx(1.5 / 65.2));
  a.vocab_id = "other";
  r = check_pair(e, a);
  CHECK_FALSE(r.ok);
  REQUIRE_FALSE(r.reasons.empty());
  CHECK(r.reasons.front() == "vocabulary mismatch");
  a.vocab_id = e.vocab_id;
  a.vocab_size = 18;
  CHECK_FALSE(check_pair(e, a).ok);
}
