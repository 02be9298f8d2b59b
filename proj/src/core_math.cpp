#include "cdec/core_math.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "cdec/error.hpp"

namespace cdec {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

void require_finite(std::span<const double> xs, const char* what) {
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (!std::isfinite(xs[i])) {
      fail(ErrorKind::kValidation,
           std::string(what) + ": non-finite value at token " + std::to_string(i));
    }
  }
}

void require_alpha(double alpha) {
  if (!(alpha > 0.0 && alpha <= 1.0)) {
    fail(ErrorKind::kConfiguration, "alpha must be in (0, 1], got " + std::to_string(alpha));
  }
}

void require_same_vocab(const LogitVector& expert, const LogitVector& amateur) {
  if (expert.vocab_size() != amateur.vocab_size()) {
    fail(ErrorKind::kScorerCompatibility,
         "vocabulary size mismatch: expert " + std::to_string(expert.vocab_size()) +
             " vs amateur " + std::to_string(amateur.vocab_size()));
  }
  if (expert.empty()) fail(ErrorKind::kConfiguration, "empty logits");
}

}  // namespace

// --- LogitVector -----------------------------------------------------------

LogitVector::LogitVector(std::vector<double> values)
    : values_(std::move(values)), valid_(values_.size(), true) {
  require_finite(values_, "logits");
}

LogitVector::LogitVector(std::vector<double> values, std::vector<bool> valid)
    : values_(std::move(values)), valid_(std::move(valid)) {
  require(values_.size() == valid_.size(), ErrorKind::kInternal, "logit/mask length mismatch");
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (!valid_[i]) {
      values_[i] = 0.0;
    } else if (!std::isfinite(values_[i])) {
      fail(ErrorKind::kValidation, "logits: non-finite value at token " + std::to_string(i));
    }
  }
}

double LogitVector::at(TokenId id) const {
  const auto i = static_cast<std::size_t>(id);
  require(i < values_.size(), ErrorKind::kInternal, "token id out of range");
  require(valid_[i], ErrorKind::kInternal, "read of excluded logit " + std::to_string(id));
  return values_[i];
}

std::size_t LogitVector::valid_count() const {
  return static_cast<std::size_t>(std::count(valid_.begin(), valid_.end(), true));
}

std::vector<double> LogitVector::to_dense() const {
  std::vector<double> out(values_.size());
  for (std::size_t i = 0; i < values_.size(); ++i) out[i] = valid_[i] ? values_[i] : kNegInf;
  return out;
}

TokenId LogitVector::argmax() const {
  TokenId best = -1;
  double best_value = kNegInf;
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (!valid_[i]) continue;
    if (best < 0 || values_[i] > best_value) {
      best = static_cast<TokenId>(i);
      best_value = values_[i];
    }
  }
  require(best >= 0, ErrorKind::kInternal, "argmax over fully excluded logits");
  return best;
}

LogitVector LogitVector::scaled(double factor) const {
  std::vector<double> out(values_);
  for (auto& v : out) v *= factor;
  return LogitVector(std::move(out), valid_);
}

// --- ProbVector / ValidSet -------------------------------------------------

ProbVector::ProbVector(std::vector<double> values) : values_(std::move(values)) {
  require(!values_.empty(), ErrorKind::kValidation, "empty probability vector");
  double sum = 0.0;
  for (std::size_t i = 0; i < values_.size(); ++i) {
    const double p = values_[i];
    if (!(p >= 0.0 && p <= 1.0)) {
      fail(ErrorKind::kValidation, "probability out of [0,1] at token " + std::to_string(i));
    }
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-6) {
    fail(ErrorKind::kValidation, "probabilities sum to " + std::to_string(sum) + ", not 1");
  }
}

ValidSet::ValidSet(std::vector<TokenId> members, std::size_t vocab_size)
    : members_(std::move(members)), vocab_size_(vocab_size) {
  std::sort(members_.begin(), members_.end());
  members_.erase(std::unique(members_.begin(), members_.end()), members_.end());
  for (TokenId id : members_) {
    require(id >= 0 && static_cast<std::size_t>(id) < vocab_size_, ErrorKind::kInternal,
            "valid-set member out of vocabulary range");
  }
}

ValidSet ValidSet::all(std::size_t vocab_size) {
  std::vector<TokenId> ids(vocab_size);
  for (std::size_t i = 0; i < vocab_size; ++i) ids[i] = static_cast<TokenId>(i);
  return ValidSet(std::move(ids), vocab_size);
}

bool ValidSet::contains(TokenId id) const {
  return std::binary_search(members_.begin(), members_.end(), id);
}

// --- CdConfig --------------------------------------------------------------

void CdConfig::validate() const {
  if (!(alpha > 0.0 && alpha <= 1.0)) {
    fail(ErrorKind::kConfiguration, "alpha: must be in (0, 1], got " + std::to_string(alpha));
  }
  if (!(beta >= 0.0) || !std::isfinite(beta)) {
    fail(ErrorKind::kConfiguration, "beta: must be a finite value >= 0");
  }
  const std::pair<const char*, double> temps[] = {
      {"expert_temp", expert_temp}, {"amateur_temp", amateur_temp}, {"output_temp", output_temp}};
  for (const auto& [name, value] : temps) {
    if (!(value > 0.0) || !std::isfinite(value)) {
      fail(ErrorKind::kConfiguration, std::string(name) + ": must be > 0");
    }
  }
}

// --- numeric utilities -----------------------------------------------------

double log_sum_exp(std::span<const double> xs) {
  double max = kNegInf;
  for (double x : xs) max = std::max(max, x);
  if (max == kNegInf) return kNegInf;
  double sum = 0.0;
  for (double x : xs) sum += std::exp(x - max);
  return max + std::log(sum);
}

std::vector<double> log_softmax(std::span<const double> logits, double temperature) {
  std::vector<double> scaled(logits.begin(), logits.end());
  if (temperature != 1.0) {
    for (auto& v : scaled) v /= temperature;
  }
  const double lse = log_sum_exp(scaled);
  for (auto& v : scaled) v -= lse;
  return scaled;
}

std::vector<double> softmax(std::span<const double> logits, double temperature) {
  auto out = log_softmax(logits, temperature);
  for (auto& v : out) v = std::exp(v);
  return out;
}

ProbVector softmax_probs(const LogitVector& logits, double temperature) {
  auto probs = softmax(logits.to_dense(), temperature);
  return ProbVector(std::move(probs));
}

LogitVector log_softmax_valid(const LogitVector& logits, double temperature) {
  auto dense = log_softmax(logits.to_dense(), temperature);
  std::vector<bool> valid(dense.size());
  for (std::size_t i = 0; i < dense.size(); ++i) {
    valid[i] = !logits.excluded(static_cast<TokenId>(i));
  }
  return LogitVector(std::move(dense), std::move(valid));
}

// --- contrastive decoding --------------------------------------------------

ValidSet alpha_mask_logits(const LogitVector& expert_logits, double alpha) {
  require_alpha(alpha);
  if (expert_logits.empty()) fail(ErrorKind::kConfiguration, "empty logits");
  const auto values = expert_logits.values();
  double max = kNegInf;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!expert_logits.excluded(static_cast<TokenId>(i))) max = std::max(max, values[i]);
  }
  const double cutoff = std::log(alpha) + max;
  std::vector<TokenId> members;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const auto id = static_cast<TokenId>(i);
    // The max token always passes its own cutoff.
    if (!expert_logits.excluded(id) && (values[i] >= cutoff || values[i] == max)) {
      members.push_back(id);
    }
  }
  return ValidSet(std::move(members), values.size());
}

ValidSet alpha_mask_probs(const ProbVector& expert_probs, double alpha) {
  require_alpha(alpha);
  const auto values = expert_probs.values();
  const double max = *std::max_element(values.begin(), values.end());
  const double cutoff = alpha * max;
  std::vector<TokenId> members;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (values[i] >= cutoff) members.push_back(static_cast<TokenId>(i));
  }
  return ValidSet(std::move(members), values.size());
}

LogitVector combine_refactored(const LogitVector& expert, const LogitVector& amateur,
                               const CdConfig& cfg) {
  require_same_vocab(expert, amateur);
  const ValidSet valid = alpha_mask_logits(expert, cfg.alpha);
  const double beta = cfg.beta;
  std::vector<double> out(expert.vocab_size(), 0.0);
  std::vector<bool> mask(expert.vocab_size(), false);
  for (TokenId id : valid.members()) {
    const auto i = static_cast<std::size_t>(id);
    out[i] = (1.0 + beta) * expert.at(id) - beta * amateur.at(id);
    mask[i] = true;
  }
  return LogitVector(std::move(out), std::move(mask));
}

LogitVector combine_original(const LogitVector& expert, const LogitVector& amateur,
                             double amateur_temp, double alpha) {
  require_same_vocab(expert, amateur);
  require_alpha(alpha);
  if (!(amateur_temp > 0.0)) fail(ErrorKind::kConfiguration, "amateur_temp: must be > 0");
  const auto expert_logp = log_softmax(expert.to_dense());
  const auto amateur_logp = log_softmax(amateur.to_dense(), amateur_temp);

  // Probability-space mask: p_e(j) >= alpha * max p_e, evaluated on exp(log p).
  std::vector<double> expert_p(expert_logp.size());
  for (std::size_t i = 0; i < expert_p.size(); ++i) expert_p[i] = std::exp(expert_logp[i]);
  const double cutoff = alpha * *std::max_element(expert_p.begin(), expert_p.end());

  std::vector<double> out(expert_logp.size(), 0.0);
  std::vector<bool> mask(expert_logp.size(), false);
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (expert_p[i] < cutoff) continue;
    if (!std::isfinite(amateur_logp[i])) {
      fail(ErrorKind::kDegenerateScorer,
           "amateur assigns zero probability to valid token " + std::to_string(i));
    }
    out[i] = expert_logp[i] - amateur_logp[i];
    mask[i] = true;
  }
  return LogitVector(std::move(out), std::move(mask));
}

LogitVector combine(const LogitVector& expert, const LogitVector& amateur, const CdConfig& cfg) {
  if (cfg.formulation == Formulation::kOriginal) {
    return combine_original(expert, amateur, cfg.amateur_temp, cfg.alpha);
  }
  return combine_refactored(expert, amateur, cfg);
}

ProbVector cd_probabilities(const ProbVector& expert_probs, const ProbVector& amateur_probs,
                            double beta, const ValidSet& valid) {
  if (expert_probs.vocab_size() != amateur_probs.vocab_size()) {
    fail(ErrorKind::kScorerCompatibility, "vocabulary size mismatch");
  }
  require(valid.vocab_size() == expert_probs.vocab_size(), ErrorKind::kValidation,
          "valid set built for a different vocabulary size");
  require(!valid.empty(), ErrorKind::kValidation, "empty valid set");
  if (!(beta >= 0.0)) fail(ErrorKind::kConfiguration, "beta: must be >= 0");

  std::vector<double> log_scores;
  log_scores.reserve(valid.size());
  for (TokenId id : valid.members()) {
    const double pe = expert_probs[id];
    const double pa = amateur_probs[id];
    if (pa == 0.0) {
      fail(ErrorKind::kDegenerateScorer,
           "amateur probability is exactly 0 on valid token " + std::to_string(id));
    }
    if (pe == 0.0) {
      fail(ErrorKind::kDegenerateScorer,
           "expert probability is exactly 0 on valid token " + std::to_string(id));
    }
    const double log_pe = std::log(pe);
    log_scores.push_back(log_pe + beta * (log_pe - std::log(pa)));
  }
  const double lse = log_sum_exp(log_scores);
  std::vector<double> out(expert_probs.vocab_size(), 0.0);
  for (std::size_t k = 0; k < valid.size(); ++k) {
    out[static_cast<std::size_t>(valid.members()[k])] = std::exp(log_scores[k] - lse);
  }
  return ProbVector(std::move(out));
}

KappaPair map_parameters(double beta, double tau_out, double tau_e, double tau_a) {
  if (!(beta >= 0.0)) fail(ErrorKind::kConfiguration, "beta: must be >= 0");
  if (!(tau_out > 0.0 && tau_e > 0.0 && tau_a > 0.0)) {
    fail(ErrorKind::kConfiguration, "temperatures must be > 0");
  }
  const KappaPair kappa{(1.0 + beta) / (tau_out * tau_e), beta / (tau_out * tau_a)};
  if (std::abs(kappa.kappa_e - kappa.kappa_a) <= 1e-12) {
    fail(ErrorKind::kUnsupportedConfiguration,
         "kappa_e == kappa_a: equal expert/amateur weighting is not supported");
  }
  return kappa;
}

double scaled_mask_alpha(double alpha, double tau) {
  require_alpha(alpha);
  if (!(tau > 0.0) || !std::isfinite(tau)) fail(ErrorKind::kConfiguration, "tau: must be > 0");
  return std::pow(alpha, 1.0 / tau);
}

}  // namespace cdec
