#include <doctest.h>

#include <cmath>

#include "cdec/analysis.hpp"
#include "cdec/error.hpp"
#include "oracles.hpp"

using namespace cdec;

namespace {

ErrorKind kind_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  return ErrorKind::kInternal;
}

}  // namespace

TEST_CASE("copy_metrics examples") {
  auto r = copy_metrics({1, 2, 3}, {1, 2, 4}, 1);
  CHECK(r.precision == doctest::Approx(2.0 / 3.0));
  CHECK(r.recall == doctest::Approx(2.0 / 3.0));
  CHECK(r.f1 == doctest::Approx(2.0 / 3.0));
  for (int n = 1; n <= 4; ++n) {
    r = copy_metrics({5, 6, 7, 8, 9}, {5, 6, 7, 8, 9}, n);
    CHECK(r.precision == 1.0);
    CHECK(r.recall == 1.0);
  }
  r = copy_metrics({1, 2, 3}, {4, 5, 6}, 2);
  CHECK(r.precision == 0.0);
  CHECK(r.f1 == 0.0);
  CHECK(kind_of([] { copy_metrics({1, 2}, {1, 2, 3}, 3); }) == ErrorKind::kUndefinedMetric);
  CHECK(kind_of([] { copy_metrics({1, 2}, {1, 2}, 5); }) == ErrorKind::kUsage);
  // multiset counting differs on repeats
  r = copy_metrics({1, 1, 2}, {1, 1, 1}, 1, OverlapMode::kMultiset);
  CHECK(r.precision == doctest::Approx(2.0 / 3.0));
  CHECK(copy_metrics({1, 1, 2}, {1, 1, 1}, 1).precision == 1.0);
}

TEST_CASE("copy_metrics against the set-intersection oracle") {
  oracle::TestRng rng(8);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<int> p(4 + rng.below(30)), g(4 + rng.below(30));
    const int alpha = 2 + rng.below(8);
    for (int& x : p) x = rng.below(alpha);
    for (int& x : g) x = rng.below(alpha);
    for (int n = 1; n <= 4; ++n) {
      const auto got = copy_metrics(p, g, n);
      const auto want = oracle::copy_overlap(p, g, n);
      CHECK(got.precision == doctest::Approx(want.precision).epsilon(1e-12));
      CHECK(got.recall == doctest::Approx(want.recall).epsilon(1e-12));
      CHECK(got.f1 == doctest::Approx(want.f1).epsilon(1e-12));
    }
  }
}

TEST_CASE("generation_stats_text") {
  const auto pat = AnswerPattern::last_number();
  auto s = generation_stats_text({" 7", " 12"}, pat, {"7", "12"});
  CHECK(s.correct_fraction == 1.0);
  s = generation_stats_text({"none", "nope"}, pat, {"7", "12"});
  CHECK(s.parseable_fraction == 0.0);
  CHECK(s.correct_fraction == 0.0);
  s = generation_stats_text({std::string(10, 'x'), std::string(20, 'y')}, pat, {"1", "2"});
  CHECK(s.mean_chars == 15.0);
  CHECK(kind_of([&] { generation_stats_text({"1"}, pat, {"1", "2"}); }) == ErrorKind::kUsage);
}

TEST_CASE("flop_overhead") {
  auto r = flop_overhead(65.2, 1.5, 1.0);
  CHECK(std::fabs(r.per_token_overhead * 100 - 2.30) <= 0.005);
  CHECK(r.per_token_overhead == doctest::Approx(1.5 / 65.2));
  r = flop_overhead(65.2, 1.5, 217.2 / 215.2);
  CHECK(std::fabs(r.total_overhead * 100 - 3.25) <= 0.005);
  CHECK(r.total_overhead == doctest::Approx((1 + 1.5 / 65.2) * (217.2 / 215.2) - 1));
  CHECK(flop_overhead(13.0, 0.0, 1.0).total_overhead == 0.0);
  CHECK(kind_of([] { flop_overhead(0.0, 1.0, 1.0); }) == ErrorKind::kDomain);
  CHECK(kind_of([] { flop_overhead(1.0, 1.0, 0.0); }) == ErrorKind::kDomain);
}

TEST_CASE("self-consistency cost") {
  const auto reported = flop_overhead(65.2, 1.5, 217.2 / 215.2);
  auto pts = self_consistency_cost(1, reported);
  REQUIRE(pts.size() == 2);
  CHECK(pts[0].method == "plain");
  CHECK(pts[0].relative_flops == 1.0);
  CHECK(pts[1].method == "cd");
  CHECK(pts[1].relative_flops == doctest::Approx(1.0325).epsilon(1e-4));
  CHECK(self_consistency_cost(20, reported)[0].relative_flops == 20.0);
  const auto csv = cost_curve_csv(self_consistency_cost(2, flop_overhead(10, 1, 1)));
  CHECK(csv == "k,method,relative_flops\n2,plain,2\n2,cd,2.2\n");
}
