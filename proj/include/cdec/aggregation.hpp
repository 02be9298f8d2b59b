#pragma once

// Self-consistency: answer extraction and majority voting over sampled paths.

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "cdec/decoding.hpp"

namespace cdec {

struct AnswerPattern {
  enum class Kind { kLastNumber, kAfterMarker };
  Kind kind = Kind::kLastNumber;
  std::string marker;  // kAfterMarker only

  static AnswerPattern last_number() { return {}; }
  static AnswerPattern after_marker(std::string marker) {
    return {Kind::kAfterMarker, std::move(marker)};
  }
  std::string describe() const;
};

struct ExtractedAnswer {
  std::string raw_text;   // the matched number as written
  std::string canonical;  // empty iff !found
  bool found = false;

  static ExtractedAnswer none() { return {}; }
};

// Canonical decimal string: no thousands separators, no leading '+', no redundant
// leading zeros, no trailing fractional zeros, "-0" -> "0".
std::string canonicalize_number(std::string_view number);

ExtractedAnswer extract_answer(std::string_view text, const AnswerPattern& pattern);

struct VoteResult {
  std::string winner;  // empty when no path produced an answer
  std::map<std::string, std::size_t> counts;
  std::size_t k = 0;
  std::size_t valid_paths = 0;
};

// Most frequent canonical answer; ties go to the answer that appeared first.
VoteResult majority_vote(const std::vector<ExtractedAnswer>& answers);

struct SelfConsistencyResult {
  VoteResult vote;
  std::vector<BatchItem> paths;
  std::vector<ExtractedAnswer> answers;  // failed paths count as not found
};

// k paths of `request` on streams 0..k-1 (same seed), then extraction and a vote.
SelfConsistencyResult self_consistency(const Scorer& expert, const Scorer* amateur,
                                       const Vocabulary& vocab, const DecodeRequest& request,
                                       std::size_t k, const AnswerPattern& pattern,
                                       std::size_t parallelism = 1);

}  // namespace cdec
