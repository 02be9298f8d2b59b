#pragma once

// Contrastive-decoding numeric kernel.
//
// Scores are natural-log logits. A LogitVector may carry an exclusion mask;
// excluded entries have no value and only become -inf when materialized for a
// softmax/sampling boundary (see to_dense()).

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

namespace cdec {

using TokenId = std::int32_t;

inline constexpr double kProbTolerance = 1e-9;   // absolute, probabilities
inline constexpr double kLogitRelTolerance = 1e-6;  // relative, logits

class LogitVector {
 public:
  LogitVector() = default;
  explicit LogitVector(std::vector<double> values);
  // Entries with valid[i] == false are excluded; their values are ignored.
  LogitVector(std::vector<double> values, std::vector<bool> valid);

  std::size_t vocab_size() const { return values_.size(); }
  bool empty() const { return values_.empty(); }

  bool excluded(TokenId id) const { return !valid_[static_cast<std::size_t>(id)]; }
  // Throws kInternal when called on an excluded entry.
  double at(TokenId id) const;
  // Raw storage; excluded slots hold 0.
  std::span<const double> values() const { return values_; }
  std::size_t valid_count() const;

  // Materializes excluded entries as -inf.
  std::vector<double> to_dense() const;

  // Lowest-id argmax over non-excluded entries.
  TokenId argmax() const;

  LogitVector scaled(double factor) const;

  friend bool operator==(const LogitVector&, const LogitVector&) = default;

 private:
  std::vector<double> values_;
  std::vector<bool> valid_;
};

class ProbVector {
 public:
  // Validates entries in [0,1] and sum within 1e-6 of 1.
  explicit ProbVector(std::vector<double> values);

  std::size_t vocab_size() const { return values_.size(); }
  double operator[](TokenId id) const { return values_[static_cast<std::size_t>(id)]; }
  std::span<const double> values() const { return values_; }

 private:
  std::vector<double> values_;
};

// Sorted, duplicate-free token ids that survived the alpha mask.
class ValidSet {
 public:
  ValidSet() = default;
  ValidSet(std::vector<TokenId> members, std::size_t vocab_size);
  static ValidSet all(std::size_t vocab_size);

  bool contains(TokenId id) const;
  std::size_t size() const { return members_.size(); }
  bool empty() const { return members_.empty(); }
  std::size_t vocab_size() const { return vocab_size_; }
  const std::vector<TokenId>& members() const { return members_; }

  friend bool operator==(const ValidSet& a, const ValidSet& b) {
    return a.members_ == b.members_ && a.vocab_size_ == b.vocab_size_;
  }

 private:
  std::vector<TokenId> members_;
  std::size_t vocab_size_ = 0;
};

enum class Formulation { kOriginal, kRefactored };
enum class TieBreak { kLowestTokenId };

struct CdConfig {
  double alpha = 0.1;
  double beta = 0.5;
  double expert_temp = 1.0;
  double amateur_temp = 1.0;
  double output_temp = 1.0;
  Formulation formulation = Formulation::kRefactored;
  TieBreak tie_break = TieBreak::kLowestTokenId;
  std::uint64_t seed = 0;

  // Throws kConfiguration naming the offending field.
  void validate() const;
};

// --- numeric utilities -----------------------------------------------------

double log_sum_exp(std::span<const double> xs);
std::vector<double> log_softmax(std::span<const double> logits, double temperature = 1.0);
std::vector<double> softmax(std::span<const double> logits, double temperature = 1.0);
ProbVector softmax_probs(const LogitVector& logits, double temperature = 1.0);
// Log-softmax over the non-excluded entries; excluded entries stay excluded.
LogitVector log_softmax_valid(const LogitVector& logits, double temperature = 1.0);

// --- contrastive decoding --------------------------------------------------

ValidSet alpha_mask_logits(const LogitVector& expert_logits, double alpha);
ValidSet alpha_mask_probs(const ProbVector& expert_probs, double alpha);

// (1+beta)*e - beta*a on the logit-space alpha mask; excluded elsewhere.
LogitVector combine_refactored(const LogitVector& expert, const LogitVector& amateur,
                               const CdConfig& cfg);

// log softmax(e) - log softmax(a / amateur_temp) on the probability-space mask.
LogitVector combine_original(const LogitVector& expert, const LogitVector& amateur,
                             double amateur_temp, double alpha);

// Dispatches on cfg.formulation.
LogitVector combine(const LogitVector& expert, const LogitVector& amateur, const CdConfig& cfg);

// p_e * (p_e / p_a)^beta restricted to `valid` and renormalized. Computed in log space.
ProbVector cd_probabilities(const ProbVector& expert_probs, const ProbVector& amateur_probs,
                            double beta, const ValidSet& valid);

struct KappaPair {
  double kappa_e;
  double kappa_a;
};

KappaPair map_parameters(double beta, double tau_out, double tau_e, double tau_a);

// alpha^(1/tau): the mask threshold that keeps the valid set fixed when logits are divided by tau.
double scaled_mask_alpha(double alpha, double tau);

}  // namespace cdec
