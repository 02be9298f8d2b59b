#include "cdec/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <set>

#include "cdec/error.hpp"

namespace cdec {
namespace {

using Ngram = std::vector<TokenId>;

std::map<Ngram, std::size_t> count_ngrams(const std::vector<TokenId>& seq, int n) {
  std::map<Ngram, std::size_t> counts;
  const auto len = static_cast<std::size_t>(n);
  for (std::size_t i = 0; i + len <= seq.size(); ++i) {
    ++counts[Ngram(seq.begin() + static_cast<std::ptrdiff_t>(i),
                   seq.begin() + static_cast<std::ptrdiff_t>(i + len))];
  }
  return counts;
}

double harmonic(double p, double r) { return p + r == 0.0 ? 0.0 : 2.0 * p * r / (p + r); }

}  // namespace

CopyReport copy_metrics(const std::vector<TokenId>& prompt, const std::vector<TokenId>& generation,
                        int n, OverlapMode mode) {
  require(n >= 1 && n <= 4, ErrorKind::kUsage, "n-gram order must be in [1, 4]");
  const auto len = static_cast<std::size_t>(n);
  if (prompt.size() < len || generation.size() < len) {
    fail(ErrorKind::kUndefinedMetric,
         "sequence shorter than n = " + std::to_string(n) + "; copy metrics are undefined");
  }
  const auto gen = count_ngrams(generation, n);
  const auto ref = count_ngrams(prompt, n);

  double shared = 0.0;
  double gen_total = 0.0;
  double ref_total = 0.0;
  if (mode == OverlapMode::kDistinct) {
    gen_total = static_cast<double>(gen.size());
    ref_total = static_cast<double>(ref.size());
    for (const auto& [g, _] : gen) shared += ref.count(g) ? 1.0 : 0.0;
  } else {
    for (const auto& [g, c] : gen) {
      gen_total += static_cast<double>(c);
      if (auto it = ref.find(g); it != ref.end()) shared += static_cast<double>(std::min(c, it->second));
    }
    for (const auto& [g, c] : ref) ref_total += static_cast<double>(c);
  }
  CopyReport r;
  r.n = n;
  r.precision = shared / gen_total;
  r.recall = shared / ref_total;
  r.f1 = harmonic(r.precision, r.recall);
  return r;
}

GenStats generation_stats_text(const std::vector<std::string>& continuations,
                               const AnswerPattern& pattern, const std::vector<std::string>& gold) {
  require(!continuations.empty(), ErrorKind::kUsage, "generation_stats needs at least one record");
  require(gold.size() == continuations.size(), ErrorKind::kUsage,
          "gold answers (" + std::to_string(gold.size()) + ") not aligned with records (" +
              std::to_string(continuations.size()) + ")");
  std::size_t correct = 0;
  std::size_t parseable = 0;
  double chars = 0.0;
  for (std::size_t i = 0; i < continuations.size(); ++i) {
    const auto answer = extract_answer(continuations[i], pattern);
    if (answer.found) {
      ++parseable;
      if (answer.canonical == canonicalize_number(gold[i])) ++correct;
    }
    chars += static_cast<double>(continuations[i].size());
  }
  const auto n = static_cast<double>(continuations.size());
  return {static_cast<double>(correct) / n, static_cast<double>(parseable) / n, chars / n};
}

GenStats generation_stats(const std::vector<GenerationRecord>& records, const Vocabulary& vocab,
                          const AnswerPattern& pattern, const std::vector<std::string>& gold) {
  std::vector<std::string> texts;
  texts.reserve(records.size());
  for (const auto& r : records) texts.push_back(vocab.decode(r.continuation.ids));
  return generation_stats_text(texts, pattern, gold);
}

FlopReport flop_overhead(double expert_params, double amateur_params, double length_ratio) {
  if (!(expert_params > 0.0) || !std::isfinite(expert_params)) {
    fail(ErrorKind::kDomain, "expert parameter count must be > 0");
  }
  if (!(amateur_params >= 0.0) || !std::isfinite(amateur_params)) {
    fail(ErrorKind::kDomain, "amateur parameter count must be >= 0");
  }
  if (!(length_ratio > 0.0) || !std::isfinite(length_ratio)) {
    fail(ErrorKind::kDomain, "length ratio must be > 0");
  }
  FlopReport r;
  r.expert_params = expert_params;
  r.amateur_params = amateur_params;
  r.length_ratio = length_ratio;
  // 2N per token for each model; the factor 2 cancels in the ratio.
  r.per_token_overhead = amateur_params / expert_params;
  r.total_overhead = (1.0 + r.per_token_overhead) * length_ratio - 1.0;
  return r;
}

std::vector<CostPoint> self_consistency_cost(int k, const FlopReport& report) {
  require(k >= 1, ErrorKind::kUsage, "k must be >= 1");
  const double kk = static_cast<double>(k);
  return {
      {k, "plain", kk},
      {k, "cd", kk * (1.0 + report.per_token_overhead) * report.length_ratio},
  };
}

std::string cost_curve_csv(const std::vector<CostPoint>& points) {
  std::string out = "k,method,relative_flops\n";
  char buf[64];
  for (const auto& p : points) {
    std::snprintf(buf, sizeof buf, "%.9g", p.relative_flops);
    out += std::to_string(p.k) + "," + p.method + "," + buf + "\n";
  }
  return out;
}

nlohmann::json to_json(const CopyReport& r) {
  return {{"n", r.n}, {"precision", r.precision}, {"recall", r.recall}, {"f1", r.f1}};
}

nlohmann::json to_json(const GenStats& s) {
  return {{"correct_fraction", s.correct_fraction},
          {"parseable_fraction", s.parseable_fraction},
          {"mean_chars", s.mean_chars}};
}

nlohmann::json to_json(const FlopReport& r) {
  return {{"expert_params", r.expert_params},
          {"amateur_params", r.amateur_params},
          {"length_ratio", r.length_ratio},
          {"per_token_overhead", r.per_token_overhead},
          {"total_overhead", r.total_overhead}};
}

}  // namespace cdec
