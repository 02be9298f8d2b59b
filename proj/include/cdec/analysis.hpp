#pragma once

// Post-hoc analytics: prompt-copy overlap, generation statistics and the FLOP
// overhead model. Every report is recomputable from its inputs.

#include <string>
#include <vector>

#include <json.hpp>

#include "cdec/aggregation.hpp"
#include "cdec/decoding.hpp"
#include "cdec/scorers.hpp"

namespace cdec {

// kDistinct compares n-gram sets; kMultiset clips shared counts (BLEU-style).
enum class OverlapMode { kDistinct, kMultiset };

struct CopyReport {
  int n = 1;
  double precision = 0.0;  // shared / generation n-grams
  double recall = 0.0;     // shared / prompt n-grams
  double f1 = 0.0;
};

CopyReport copy_metrics(const std::vector<TokenId>& prompt, const std::vector<TokenId>& generation,
                        int n, OverlapMode mode = OverlapMode::kDistinct);

struct GenStats {
  double correct_fraction = 0.0;
  double parseable_fraction = 0.0;
  double mean_chars = 0.0;
};

GenStats generation_stats(const std::vector<GenerationRecord>& records, const Vocabulary& vocab,
                          const AnswerPattern& pattern, const std::vector<std::string>& gold);
// Same statistics over already-detokenized continuations.
GenStats generation_stats_text(const std::vector<std::string>& continuations,
                               const AnswerPattern& pattern, const std::vector<std::string>& gold);

// Per-token forward cost is taken as 2N FLOPs for N non-embedding parameters; the
// context-length attention term is dropped, so cost per token is constant.
struct FlopReport {
  double expert_params = 0.0;   // billions
  double amateur_params = 0.0;  // billions
  double length_ratio = 1.0;    // CD generation length / baseline generation length
  double per_token_overhead = 0.0;
  double total_overhead = 0.0;
};

FlopReport flop_overhead(double expert_params, double amateur_params, double length_ratio);

struct CostPoint {
  int k = 1;
  std::string method;  // "plain" or "cd"
  double relative_flops = 1.0;
};

// Relative to one plain expert generation: plain = k, cd = k (1 + per_token) length_ratio.
std::vector<CostPoint> self_consistency_cost(int k, const FlopReport& report);
// Header "k,method,relative_flops", one row per point.
std::string cost_curve_csv(const std::vector<CostPoint>& points);

nlohmann::json to_json(const CopyReport& r);
nlohmann::json to_json(const GenStats& s);
nlohmann::json to_json(const FlopReport& r);

}  // namespace cdec
