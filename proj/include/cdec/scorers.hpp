#pragma once

// Next-token scorers: the expert/amateur abstraction plus desk-scale built-ins.

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "cdec/core_math.hpp"

namespace cdec {

enum class TokenizeMode { kCharacters, kWords };

class Vocabulary {
 public:
  // `tokens` must be distinct; bos/eos index into it and differ.
  Vocabulary(std::string id, std::vector<std::string> tokens, TokenId bos, TokenId eos,
             TokenizeMode mode = TokenizeMode::kCharacters);

  // "<s>" and "</s>" at ids 0 and 1, then one token per distinct character of `alphabet`.
  static Vocabulary characters(std::string id, std::string_view alphabet);
  static Vocabulary words(std::string id, const std::vector<std::string>& words);
  // Digits, space, '=', '-', '*', '\n': everything the arithmetic task renders.
  static Vocabulary arithmetic();

  const std::string& id() const { return id_; }
  std::size_t size() const { return tokens_.size(); }
  TokenId bos() const { return bos_; }
  TokenId eos() const { return eos_; }
  TokenizeMode mode() const { return mode_; }
  const std::vector<std::string>& tokens() const { return tokens_; }
  const std::string& token(TokenId id) const;
  std::optional<TokenId> find(std::string_view token) const;
  bool is_special(TokenId id) const { return id == bos_ || id == eos_; }

  // No BOS is added. Unknown characters/words are a data error.
  std::vector<TokenId> encode(std::string_view text) const;
  // Specials are dropped.
  std::string decode(const std::vector<TokenId>& ids) const;
  std::size_t char_length(const std::vector<TokenId>& ids) const;

  friend bool operator==(const Vocabulary& a, const Vocabulary& b) {
    return a.id_ == b.id_ && a.tokens_ == b.tokens_ && a.bos_ == b.bos_ && a.eos_ == b.eos_ &&
           a.mode_ == b.mode_;
  }

 private:
  std::string id_;
  std::vector<std::string> tokens_;
  TokenId bos_;
  TokenId eos_;
  TokenizeMode mode_;
  std::unordered_map<std::string, TokenId> index_;
};

struct TokenSequence {
  std::string vocab_id;
  std::vector<TokenId> ids;

  std::size_t size() const { return ids.size(); }
  friend bool operator==(const TokenSequence&, const TokenSequence&) = default;
};

// BOS followed by the encoded text.
TokenSequence make_prompt(const Vocabulary& vocab, std::string_view text);
void validate_sequence(const TokenSequence& seq, const Vocabulary& vocab);

enum class ScorerKind { kTable, kNgram, kPrefixWrapped, kExternal };
std::string_view to_string(ScorerKind kind);

struct ScorerDescriptor {
  ScorerKind kind = ScorerKind::kTable;
  double parameter_count = 0.0;  // billions; feeds the FLOP model
  std::string vocab_id;
  std::size_t vocab_size = 0;
};

// Immutable after construction; score_next must be safe to call concurrently.
class Scorer {
 public:
  virtual ~Scorer() = default;
  virtual const ScorerDescriptor& descriptor() const = 0;
  // Finite logits over the full vocabulary for the token following `context`.
  virtual LogitVector score_next(const TokenSequence& context) const = 0;

 protected:
  // Non-empty, same vocabulary id, ids in range.
  void check_context(const TokenSequence& context) const;
};

using ScorerPtr = std::shared_ptr<const Scorer>;

// Rules keyed by context suffix; the longest matching suffix wins, else the default row.
class TableScorer final : public Scorer {
 public:
  // Probability assigned to tokens a probability rule leaves unspecified.
  static constexpr double kFloorProbability = 1e-9;

  explicit TableScorer(Vocabulary vocab, double parameter_count = 0.0);

  TableScorer& set_default_logits(std::vector<double> logits);
  TableScorer& set_default_probs(const std::map<TokenId, double>& probs);
  TableScorer& add_rule_logits(std::vector<TokenId> suffix, std::vector<double> logits);
  TableScorer& add_rule_probs(std::vector<TokenId> suffix, const std::map<TokenId, double>& probs);

  const ScorerDescriptor& descriptor() const override { return descriptor_; }
  LogitVector score_next(const TokenSequence& context) const override;
  const Vocabulary& vocabulary() const { return vocab_; }

 private:
  std::vector<double> probs_to_logits(const std::map<TokenId, double>& probs) const;
  void check_row(const std::vector<double>& logits) const;

  Vocabulary vocab_;
  ScorerDescriptor descriptor_;
  std::vector<double> default_row_;
  std::map<std::vector<TokenId>, std::vector<double>> rules_;
  std::size_t longest_rule_ = 0;
};

struct NgramOptions {
  int order = 3;
  double smoothing_k = 0.1;
  double parameter_count = 0.0;
};

// Add-k smoothed n-gram model with back-off (no discount) to the longest seen context.
class NgramScorer final : public Scorer {
 public:
  struct Row {
    std::uint64_t total = 0;
    std::map<TokenId, std::uint64_t> counts;
  };
  using Level = std::map<std::vector<TokenId>, Row>;

  NgramScorer(Vocabulary vocab, NgramOptions options, std::vector<Level> levels);

  const ScorerDescriptor& descriptor() const override { return descriptor_; }
  LogitVector score_next(const TokenSequence& context) const override;

  const Vocabulary& vocabulary() const { return vocab_; }
  int order() const { return options_.order; }
  double smoothing_k() const { return options_.smoothing_k; }
  // levels()[m] holds rows keyed by contexts of exactly m tokens.
  const std::vector<Level>& levels() const { return levels_; }
  // Probability of `next` after `context`, as used by score_next.
  double probability(const std::vector<TokenId>& context, TokenId next) const;

 private:
  const Row* find_row(const std::vector<TokenId>& context) const;

  Vocabulary vocab_;
  NgramOptions options_;
  ScorerDescriptor descriptor_;
  std::vector<Level> levels_;
};

// Sequences lacking a leading BOS get one prepended.
std::shared_ptr<const NgramScorer> train_ngram(const Vocabulary& vocab,
                                               const std::vector<TokenSequence>& corpus,
                                               const NgramOptions& options);

// Versioned text format; serialize(deserialize(text)) == text.
std::string serialize_ngram(const NgramScorer& model);
std::shared_ptr<const NgramScorer> deserialize_ngram(std::string_view text);
void save_ngram(const NgramScorer& model, const std::string& path);
std::shared_ptr<const NgramScorer> load_ngram(const std::string& path);

// Answers score_next(ctx) as inner.score_next([BOS] ++ prefix ++ ctx[1:]).
class PrefixScorer final : public Scorer {
 public:
  PrefixScorer(ScorerPtr inner, TokenSequence prefix, TokenId bos);

  const ScorerDescriptor& descriptor() const override { return descriptor_; }
  LogitVector score_next(const TokenSequence& context) const override;

 private:
  ScorerPtr inner_;
  std::vector<TokenId> prefix_;
  TokenId bos_;
  ScorerDescriptor descriptor_;
};

// A leading BOS in `negative_prefix` is ignored.
ScorerPtr with_prefix(ScorerPtr inner, const TokenSequence& negative_prefix, TokenId bos);

struct PairReport {
  bool ok = true;
  std::vector<std::string> reasons;
  double parameter_ratio = 0.0;  // amateur / expert
};

PairReport check_pair(const ScorerDescriptor& expert, const ScorerDescriptor& amateur);

}  // namespace cdec
