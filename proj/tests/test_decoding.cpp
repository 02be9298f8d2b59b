#include <doctest.h>

#include <cmath>

#include "cdec/decoding.hpp"
#include "cdec/error.hpp"
#include "cdec/rng.hpp"
#include "oracles.hpp"

using namespace cdec;

namespace {

// <s>=0 </s>=1 a=2 b=3 c=4 d=5 e=6
Vocabulary vocab5() { return Vocabulary::characters("five-v1", "abcde"); }

TokenSequence bos_prompt(const Vocabulary& v) { return {v.id(), {v.bos()}}; }

std::shared_ptr<TableScorer> random_table(const Vocabulary& v, std::uint64_t seed) {
  oracle::TestRng rng(seed);
  auto t = std::make_shared<TableScorer>(v);
  auto row = [&] {
    std::vector<double> r(v.size());
    for (double& x : r) x = rng.range(-3, 3);
    return r;
  };
  t->set_default_logits(row());
  for (TokenId a = 0; a < static_cast<TokenId>(v.size()); ++a) t->add_rule_logits({a}, row());
  return t;
}

DecodeRequest request(const Vocabulary& v, Strategy s, int n = 12, std::uint64_t seed = 1) {
  DecodeRequest r;
  r.prompt = bos_prompt(v);
  r.max_new_tokens = n;
  r.strategy = s;
  r.seed = seed;
  return r;
}

CdConfig cd(double alpha, double beta) {
  CdConfig c;
  c.alpha = alpha;
  c.beta = beta;
  return c;
}

}  // namespace

TEST_CASE("rng is counter-based and reproducible") {
  CounterRng a(42, 0), b(42, 0), c(42, 1);
  CHECK(a.bits(7) == b.bits(7));
  CHECK(a.bits(7) != c.bits(7));
  CHECK(a.bits(7) != a.bits(8));
  for (std::uint64_t i = 0; i < 1000; ++i) {
    const double u = a.uniform(i);
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
  }
  CHECK(derive_seed(1, 0) != derive_seed(1, 1));
}

TEST_CASE("greedy on deterministic chains") {
  const auto v = vocab5();
  TableScorer only_b(v);
  only_b.set_default_probs({{3, 1.0}});
  auto rec = decode_greedy(only_b, request(v, Greedy{}, 6));
  CHECK(rec.continuation.ids == std::vector<TokenId>(6, 3));
  CHECK(rec.finish_reason == FinishReason::kLength);
  CHECK(same_generation(rec, decode_greedy(only_b, request(v, Greedy{}, 6))));

  // stop token is emitted and ends the generation
  TableScorer stops(v);
  stops.set_default_logits({0, 0, 5, 0, 0, 0, 0});
  stops.add_rule_logits({2, 2}, {0, 9, 0, 0, 0, 0, 0});
  auto req = request(v, Greedy{}, 10);
  req.stop = {v.eos()};
  rec = decode_greedy(stops, req);
  CHECK(rec.continuation.ids == std::vector<TokenId>{2, 2, 1});
  CHECK(rec.finish_reason == FinishReason::kStopToken);
}

TEST_CASE("cd greedy limits") {
  const auto v = vocab5();
  for (std::uint64_t s = 0; s < 20; ++s) {
    const auto e = random_table(v, s);
    const auto a = random_table(v, s + 100);
    const auto g = decode_greedy(*e, request(v, Greedy{}, 15));
    CHECK(decode_cd_greedy(*e, *a, request(v, CdGreedy{cd(0.1, 0.0)}, 15)).continuation ==
          g.continuation);
    CHECK(decode_cd_greedy(*e, *e, request(v, CdGreedy{cd(0.1, 2.0)}, 15)).continuation ==
          g.continuation);
  }
}

TEST_CASE("anti-copy scenario") {
  // copy=2, correct=3, other=4; BOS/EOS carry ~e^-50 mass
  const auto v = Vocabulary::characters("anticopy", "abc");
  TableScorer expert(v), amateur(v);
  expert.set_default_logits({-50, -50, std::log(0.45), std::log(0.40), std::log(0.15)});
  amateur.set_default_logits({-50, -50, std::log(0.80), std::log(0.10), std::log(0.10)});
  CHECK(decode_greedy(expert, request(v, Greedy{}, 1)).continuation.ids.front() == 2);
  const auto rec = decode_cd_greedy(expert, amateur, request(v, CdGreedy{cd(0.1, 0.5)}, 1));
  CHECK(rec.continuation.ids.front() == 3);

  // p_e^1.5 / p_a^0.5 by hand: 0.40^1.5 / 0.10^0.5 = 0.8 and 0.45^1.5 / 0.80^0.5 = 0.3375
  const auto lp = log_softmax_valid(expert.score_next(bos_prompt(v)));
  const auto la = log_softmax_valid(amateur.score_next(bos_prompt(v)));
  auto cd_score = [&](TokenId t) { return 1.5 * lp.at(t) - 0.5 * la.at(t); };
  CHECK(std::fabs(cd_score(3) - std::log(0.8)) <= 1e-9);
  CHECK(std::fabs(cd_score(2) - std::log(0.3375)) <= 1e-9);
  CHECK(std::fabs(cd_score(3) - (-0.223143551314)) <= 1e-9);
  CHECK(std::fabs(cd_score(2) - (-1.086189768670)) <= 1e-9);
  // the refactored logits differ from the probability form only by a shared constant
  const auto step = cd_step_logits(expert.score_next(bos_prompt(v)), amateur.score_next(bos_prompt(v)),
                                   cd(0.1, 0.5));
  CHECK(step.excluded(0));
  CHECK(std::fabs((step.at(3) - step.at(2)) - (cd_score(3) - cd_score(2))) <= 1e-9);
}

TEST_CASE("sampling selection") {
  LogitVector l({1.0, 2.0, 0.5}, {true, true, false});
  CHECK(sample_from_logits(l, 1.0, 0.0) == 0);
  CHECK(sample_from_logits(l, 1.0, 0.999999) == 1);
  const auto top1 = truncate_top_k(LogitVector({1.0, 3.0, 3.0, 2.0}), 1);
  CHECK(top1.valid_count() == 1);
  CHECK(!top1.excluded(1));
  // nucleus keeps the crossing token
  const auto nuc = truncate_nucleus(LogitVector({std::log(0.5), std::log(0.3), std::log(0.2)}), 0.6);
  CHECK(nuc.valid_count() == 2);
  CHECK(nuc.excluded(2));
}

TEST_CASE("sampling matches the target distribution") {
  const std::vector<double> cdl{1.2, 0.3, -0.5, 2.0, 0.0};
  const double tau = 0.8;
  const auto want = oracle::softmax(cdl, tau);
  std::vector<double> counts(5, 0.0);
  const CounterRng rng(2024, 0);
  const int draws = 100000;
  for (int i = 0; i < draws; ++i) counts[sample_from_logits(LogitVector(cdl), tau, rng.uniform(i))] += 1;
  for (double& c : counts) c /= draws;
  CHECK(oracle::tv_distance(counts, want) <= 0.01);
}

TEST_CASE("sampling paths: limits, golden sequence, streams") {
  const auto v = vocab5();
  const auto e = random_table(v, 1);
  const auto a = random_table(v, 2);
  const auto greedy = decode_greedy(*e, request(v, Greedy{}, 20));
  CHECK(decode_sample(*e, nullptr, request(v, Sample{1e-6}, 20)).continuation == greedy.continuation);
  CHECK(decode_sample(*e, nullptr, request(v, TopK{1, 1.0}, 20)).continuation == greedy.continuation);

  CdSample s{cd(0.1, 0.5), true};
  const auto rec = decode_sample(*e, a.get(), request(v, s, 20, 7));
  const std::vector<TokenId> golden{0, 0, 3, 2, 1, 1, 3, 4, 4, 4, 4, 4, 4, 4, 4, 4, 4, 4, 4, 2};
  CHECK(rec.continuation.ids == golden);
  CHECK(same_generation(rec, decode_sample(*e, a.get(), request(v, s, 20, 7))));

  // replay with the probability-space oracle and inverse-CDF on the same uniforms
  const CounterRng rng(7, 0);
  TokenSequence ctx = bos_prompt(v);
  for (std::size_t step = 0; step < golden.size(); ++step) {
    const auto el = e->score_next(ctx);
    const auto al = a->score_next(ctx);
    const auto pe = oracle::softmax({el.values().begin(), el.values().end()});
    const auto pa = oracle::softmax({al.values().begin(), al.values().end()});
    const auto p = oracle::cd_probs(pe, pa, 0.5, oracle::mask_probs(pe, 0.1));
    const double u = rng.uniform(step);
    double cum = 0.0;
    TokenId pick = -1;
    for (std::size_t i = 0; i < p.size() && pick < 0; ++i) {
      cum += p[i];
      if (p[i] > 0.0 && u < cum) pick = static_cast<TokenId>(i);
    }
    CHECK(pick == golden[step]);
    ctx.ids.push_back(golden[step]);
  }
  CHECK(rec.continuation != decode_sample(*e, a.get(), request(v, s, 20, 7), 1).continuation);
}

TEST_CASE("decode_batch is independent of parallelism") {
  const auto v = vocab5();
  const auto e = random_table(v, 5);
  const auto a = random_table(v, 6);
  std::vector<DecodeRequest> reqs;
  for (int i = 0; i < 20; ++i) reqs.push_back(request(v, CdSample{cd(0.1, 0.5), true}, 16, 3));
  const auto one = decode_batch(*e, a.get(), reqs, 1);
  const auto eight = decode_batch(*e, a.get(), reqs, 8);
  REQUIRE(one.size() == 20);
  int distinct = 0;
  for (std::size_t i = 0; i < 20; ++i) {
    REQUIRE(one[i].ok());
    CHECK(same_generation(*one[i].record, *eight[i].record));
    CHECK(one[i].record->stream == i);
    if (i > 0 && one[i].record->continuation != one[0].record->continuation) ++distinct;
  }
  CHECK(distinct >= 15);
  CHECK(decode_batch(*e, a.get(), {}, 4).empty());
}

TEST_CASE("request validation and failures") {
  const auto v = vocab5();
  const auto e = random_table(v, 1);
  auto r = request(v, Greedy{}, 0);
  CHECK_THROWS_AS(decode_greedy(*e, r), Error);
  r = request(v, CdGreedy{cd(0.1, 0.5)}, 3);
  const Vocabulary other = Vocabulary::characters("other", "abcde");
  TableScorer mismatched(other);
  try {
    decode_cd_greedy(*e, mismatched, r);
    FAIL("expected a pair failure");
  } catch (const Error& err) {
    CHECK(err.kind() == ErrorKind::kScorerCompatibility);
  }
  // batch captures per-request errors
  std::vector<DecodeRequest> reqs{request(v, Greedy{}, 2), request(v, Greedy{}, 0)};
  const auto out = decode_batch(*e, nullptr, reqs, 2);
  CHECK(out[0].ok());
  CHECK_FALSE(out[1].ok());
}

