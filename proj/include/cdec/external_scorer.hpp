#pragma once

// Scorer backed by a child process speaking a newline-delimited text protocol:
//
//   adapter -> engine   VOCAB <size> <vocab-id>                (once, at startup)
//   engine  -> adapter  SCORE <space-separated token ids>
//   adapter -> engine   LOGITS <size space-separated decimal floats>
//
// Floats are written with 9 significant digits. Any other line is a protocol
// violation and surfaces as a scorer error quoting the offending line.

#include <chrono>
#include <mutex>
#include <string>
#include <vector>

#include "cdec/scorers.hpp"

namespace cdec {

struct ExternalScorerOptions {
  std::vector<std::string> command;  // argv; command[0] is looked up on PATH
  std::chrono::milliseconds timeout{10000};
  double parameter_count = 0.0;
};

class ExternalScorer final : public Scorer {
 public:
  explicit ExternalScorer(ExternalScorerOptions options);
  ~ExternalScorer() override;

  ExternalScorer(const ExternalScorer&) = delete;
  ExternalScorer& operator=(const ExternalScorer&) = delete;

  const ScorerDescriptor& descriptor() const override { return descriptor_; }
  // Serialized across threads; the child handles one request at a time.
  LogitVector score_next(const TokenSequence& context) const override;

 private:
  void shutdown();
  std::string read_line() const;
  void write_line(const std::string& line) const;
  [[noreturn]] void protocol_error(const std::string& what, const std::string& line) const;

  ExternalScorerOptions options_;
  ScorerDescriptor descriptor_;
  int pid_ = -1;
  int to_child_ = -1;
  int from_child_ = -1;
  mutable std::string buffer_;
  mutable std::mutex mutex_;
};

// A full LOGITS response line (9 significant digits, no newline).
std::string format_logits_line(const std::vector<double>& logits);

}  // namespace cdec
