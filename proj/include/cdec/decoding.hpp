#pragma once

// Sequence-level decoding loops over one expert (and optionally one amateur) scorer.

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "cdec/core_math.hpp"
#include "cdec/error.hpp"
#include "cdec/scorers.hpp"

namespace cdec {

struct Greedy {};
struct Sample {
  double temperature = 1.0;
};
struct TopK {
  int k = 1;
  double temperature = 1.0;
};
struct Nucleus {
  double p = 0.9;
  double temperature = 1.0;
};
struct CdGreedy {
  CdConfig cd;
};
// Draws from softmax(cd_logits / cd.output_temp) over the valid set.
struct CdSample {
  CdConfig cd;
  bool mask_every_step = true;
};

using Strategy = std::variant<Greedy, Sample, TopK, Nucleus, CdGreedy, CdSample>;

std::string strategy_name(const Strategy& strategy);
bool needs_amateur(const Strategy& strategy);

inline constexpr std::size_t kDefaultDiagnosticsCap = 4096;

struct DecodeRequest {
  TokenSequence prompt;
  int max_new_tokens = 32;
  std::set<TokenId> stop;
  Strategy strategy = Greedy{};
  std::uint64_t seed = 0;
  std::size_t diagnostics_cap = kDefaultDiagnosticsCap;

  void validate() const;
};

struct StepDiagnostic {
  TokenId chosen = 0;
  std::size_t valid_size = 0;
  double score = 0.0;  // active (CD or expert) logit of the chosen token

  friend bool operator==(const StepDiagnostic&, const StepDiagnostic&) = default;
};

enum class FinishReason { kStopToken, kLength };
std::string_view to_string(FinishReason reason);

struct GenerationRecord {
  DecodeRequest request;
  std::uint64_t stream = 0;
  TokenSequence continuation;
  // One entry per generated token, truncated at request.diagnostics_cap.
  std::vector<StepDiagnostic> per_step;
  FinishReason finish_reason = FinishReason::kLength;
};

// Same generated tokens, diagnostics and finish reason (the request echo is not compared).
bool same_generation(const GenerationRecord& a, const GenerationRecord& b);

// --- single-step selection -------------------------------------------------

// Index drawn from softmax(logits / temperature) over non-excluded entries, using one
// uniform u in [0,1). Works on max-subtracted logits, never on renormalized probabilities.
TokenId sample_from_logits(const LogitVector& logits, double temperature, double u);

// Keeps the k highest entries (ties to the lower id); the rest become excluded.
LogitVector truncate_top_k(const LogitVector& logits, int k, double temperature = 1.0);
// Keeps the smallest high-probability prefix whose mass reaches p, including the
// token that crosses p.
LogitVector truncate_nucleus(const LogitVector& logits, double p, double temperature = 1.0);

// CD logits for one step. With apply_mask == false the alpha mask is skipped.
LogitVector cd_step_logits(const LogitVector& expert, const LogitVector& amateur,
                           const CdConfig& cfg, bool apply_mask = true);

// --- decoding loops --------------------------------------------------------

GenerationRecord decode_greedy(const Scorer& expert, const DecodeRequest& request);
GenerationRecord decode_cd_greedy(const Scorer& expert, const Scorer& amateur,
                                  const DecodeRequest& request);
// Sample/TopK/Nucleus use only the expert; CdSample requires an amateur.
GenerationRecord decode_sample(const Scorer& expert, const Scorer* amateur,
                               const DecodeRequest& request, std::uint64_t stream = 0);
// Dispatches on request.strategy.
GenerationRecord decode(const Scorer& expert, const Scorer* amateur, const DecodeRequest& request,
                        std::uint64_t stream = 0);

struct BatchItem {
  std::optional<GenerationRecord> record;
  std::optional<ErrorKind> error_kind;
  std::string error;

  bool ok() const { return record.has_value(); }
};

// Request i decodes on RNG stream i. Output order matches input order and does not
// depend on `parallelism`. Per-request failures are captured in the item.
std::vector<BatchItem> decode_batch(const Scorer& expert, const Scorer* amateur,
                                    const std::vector<DecodeRequest>& requests,
                                    std::size_t parallelism = 1);

}  // namespace cdec
