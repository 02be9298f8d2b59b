#include "cdec/decoding.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <numeric>
#include <thread>

#include "cdec/rng.hpp"

namespace cdec {
namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

void require_temperature(double t, const char* field) {
  if (!(t > 0.0) || !std::isfinite(t)) {
    fail(ErrorKind::kConfiguration, std::string(field) + ": temperature must be > 0");
  }
}

struct Choice {
  TokenId id;
  std::size_t valid_size;
  double score;
};

class Loop {
 public:
  Loop(const Scorer& expert, const Scorer* amateur, const DecodeRequest& request,
       std::uint64_t stream)
      : expert_(expert), amateur_(amateur), request_(request), rng_(request.seed, stream) {
    record_.request = request;
    record_.stream = stream;
    record_.continuation.vocab_id = request.prompt.vocab_id;
  }

  template <typename Select>
  GenerationRecord run(Select&& select) {
    TokenSequence context = request_.prompt;
    for (int step = 0; step < request_.max_new_tokens; ++step) {
      Choice choice{};
      try {
        choice = select(context, static_cast<std::uint64_t>(step));
      } catch (const Error& e) {
        throw Error(e.kind(), "step " + std::to_string(step) + ": " + e.what());
      } catch (const std::exception& e) {
        throw Error(ErrorKind::kScorer, "step " + std::to_string(step) + ": " + e.what());
      }
      context.ids.push_back(choice.id);
      record_.continuation.ids.push_back(choice.id);
      if (record_.per_step.size() < request_.diagnostics_cap) {
        record_.per_step.push_back({choice.id, choice.valid_size, choice.score});
      }
      if (request_.stop.count(choice.id) != 0) {
        record_.finish_reason = FinishReason::kStopToken;
        return std::move(record_);
      }
    }
    record_.finish_reason = FinishReason::kLength;
    return std::move(record_);
  }

  LogitVector expert_logits(const TokenSequence& ctx) const { return expert_.score_next(ctx); }
  LogitVector amateur_logits(const TokenSequence& ctx) const {
    require(amateur_ != nullptr, ErrorKind::kUsage, "strategy requires an amateur scorer");
    return amateur_->score_next(ctx);
  }
  double uniform(std::uint64_t step) const { return rng_.uniform(step); }

 private:
  const Scorer& expert_;
  const Scorer* amateur_;
  const DecodeRequest& request_;
  CounterRng rng_;
  GenerationRecord record_;
};

Choice pick_max(const LogitVector& logits) {
  const TokenId id = logits.argmax();
  return {id, logits.valid_count(), logits.at(id)};
}

Choice pick_sample(const LogitVector& logits, double temperature, double u) {
  const TokenId id = sample_from_logits(logits, temperature, u);
  return {id, logits.valid_count(), logits.at(id)};
}

void require_pair(const Scorer& expert, const Scorer& amateur) {
  const auto report = check_pair(expert.descriptor(), amateur.descriptor());
  if (!report.ok) {
    std::string why;
    for (const auto& r : report.reasons) why += (why.empty() ? "" : "; ") + r;
    fail(ErrorKind::kScorerCompatibility, "invalid expert/amateur pair: " + why);
  }
}

}  // namespace

std::string strategy_name(const Strategy& strategy) {
  return std::visit(Overloaded{
                        [](const Greedy&) { return std::string("greedy"); },
                        [](const Sample&) { return std::string("sample"); },
                        [](const TopK&) { return std::string("top_k"); },
                        [](const Nucleus&) { return std::string("nucleus"); },
                        [](const CdGreedy&) { return std::string("cd_greedy"); },
                        [](const CdSample&) { return std::string("cd_sample"); },
                    },
                    strategy);
}

bool needs_amateur(const Strategy& strategy) {
  return std::holds_alternative<CdGreedy>(strategy) || std::holds_alternative<CdSample>(strategy);
}

std::string_view to_string(FinishReason reason) {
  return reason == FinishReason::kStopToken ? "stop-token" : "length";
}

void DecodeRequest::validate() const {
  require(max_new_tokens >= 1, ErrorKind::kConfiguration, "max_new_tokens: must be >= 1");
  require(!prompt.ids.empty(), ErrorKind::kUsage, "prompt must contain at least BOS");
  std::visit(Overloaded{
                 [](const Greedy&) {},
                 [](const Sample& s) { require_temperature(s.temperature, "sample.temperature"); },
                 [](const TopK& s) {
                   require(s.k >= 1, ErrorKind::kConfiguration, "top_k.k: must be >= 1");
                   require_temperature(s.temperature, "top_k.temperature");
                 },
                 [](const Nucleus& s) {
                   require(s.p > 0.0 && s.p <= 1.0, ErrorKind::kConfiguration,
                           "nucleus.p: must be in (0, 1]");
                   require_temperature(s.temperature, "nucleus.temperature");
                 },
                 [](const CdGreedy& s) { s.cd.validate(); },
                 [](const CdSample& s) { s.cd.validate(); },
             },
             strategy);
}

bool same_generation(const GenerationRecord& a, const GenerationRecord& b) {
  return a.continuation == b.continuation && a.per_step == b.per_step &&
         a.finish_reason == b.finish_reason;
}

// --- single-step selection -------------------------------------------------

TokenId sample_from_logits(const LogitVector& logits, double temperature, double u) {
  require_temperature(temperature, "temperature");
  require(u >= 0.0 && u < 1.0, ErrorKind::kInternal, "uniform draw outside [0,1)");
  const auto values = logits.values();
  double max = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!logits.excluded(static_cast<TokenId>(i))) max = std::max(max, values[i]);
  }
  require(std::isfinite(max), ErrorKind::kInternal, "empty candidate set at sampling time");

  std::vector<double> weights(values.size(), 0.0);
  double total = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (logits.excluded(static_cast<TokenId>(i))) continue;
    weights[i] = std::exp((values[i] - max) / temperature);
    total += weights[i];
  }
  const double target = u * total;
  double cumulative = 0.0;
  TokenId last = -1;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (weights[i] == 0.0) continue;
    cumulative += weights[i];
    last = static_cast<TokenId>(i);
    if (target < cumulative) return last;
  }
  require(last >= 0, ErrorKind::kInternal, "sampling found no candidate");
  return last;
}

LogitVector truncate_top_k(const LogitVector& logits, int k, double temperature) {
  require(k >= 1, ErrorKind::kConfiguration, "top_k.k: must be >= 1");
  require_temperature(temperature, "temperature");
  std::vector<TokenId> order;
  for (std::size_t i = 0; i < logits.vocab_size(); ++i) {
    if (!logits.excluded(static_cast<TokenId>(i))) order.push_back(static_cast<TokenId>(i));
  }
  std::stable_sort(order.begin(), order.end(),
                   [&](TokenId a, TokenId b) { return logits.at(a) > logits.at(b); });
  order.resize(std::min(order.size(), static_cast<std::size_t>(k)));
  std::vector<double> values(logits.values().begin(), logits.values().end());
  std::vector<bool> keep(values.size(), false);
  for (TokenId id : order) keep[static_cast<std::size_t>(id)] = true;
  return LogitVector(std::move(values), std::move(keep));
}

LogitVector truncate_nucleus(const LogitVector& logits, double p, double temperature) {
  require(p > 0.0 && p <= 1.0, ErrorKind::kConfiguration, "nucleus.p: must be in (0, 1]");
  const auto probs = softmax(logits.to_dense(), temperature);
  std::vector<TokenId> order;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (!logits.excluded(static_cast<TokenId>(i))) order.push_back(static_cast<TokenId>(i));
  }
  std::stable_sort(order.begin(), order.end(), [&](TokenId a, TokenId b) {
    return probs[static_cast<std::size_t>(a)] > probs[static_cast<std::size_t>(b)];
  });
  std::vector<double> values(logits.values().begin(), logits.values().end());
  std::vector<bool> keep(values.size(), false);
  double cumulative = 0.0;
  for (TokenId id : order) {
    keep[static_cast<std::size_t>(id)] = true;
    cumulative += probs[static_cast<std::size_t>(id)];
    if (cumulative >= p) break;
  }
  return LogitVector(std::move(values), std::move(keep));
}

LogitVector cd_step_logits(const LogitVector& expert, const LogitVector& amateur,
                           const CdConfig& cfg, bool apply_mask) {
  if (apply_mask) return combine(expert, amateur, cfg);
  require(expert.vocab_size() == amateur.vocab_size(), ErrorKind::kScorerCompatibility,
          "vocabulary size mismatch");
  std::vector<double> out(expert.vocab_size());
  if (cfg.formulation == Formulation::kOriginal) {
    const auto le = log_softmax(expert.to_dense());
    const auto la = log_softmax(amateur.to_dense(), cfg.amateur_temp);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = le[i] - la[i];
  } else {
    for (std::size_t i = 0; i < out.size(); ++i) {
      const auto id = static_cast<TokenId>(i);
      out[i] = (1.0 + cfg.beta) * expert.at(id) - cfg.beta * amateur.at(id);
    }
  }
  return LogitVector(std::move(out));
}

// --- decoding loops --------------------------------------------------------

GenerationRecord decode_greedy(const Scorer& expert, const DecodeRequest& request) {
  request.validate();
  require(std::holds_alternative<Greedy>(request.strategy), ErrorKind::kUsage,
          "decode_greedy requires the greedy strategy");
  Loop loop(expert, nullptr, request, 0);
  return loop.run([&](const TokenSequence& ctx, std::uint64_t) {
    return pick_max(loop.expert_logits(ctx));
  });
}

GenerationRecord decode_cd_greedy(const Scorer& expert, const Scorer& amateur,
                                  const DecodeRequest& request) {
  request.validate();
  const auto* strategy = std::get_if<CdGreedy>(&request.strategy);
  require(strategy != nullptr, ErrorKind::kUsage, "decode_cd_greedy requires cd_greedy");
  require_pair(expert, amateur);
  const CdConfig cfg = strategy->cd;
  Loop loop(expert, &amateur, request, 0);
  return loop.run([&](const TokenSequence& ctx, std::uint64_t) {
    return pick_max(combine(loop.expert_logits(ctx), loop.amateur_logits(ctx), cfg));
  });
}

GenerationRecord decode_sample(const Scorer& expert, const Scorer* amateur,
                               const DecodeRequest& request, std::uint64_t stream) {
  request.validate();
  Loop loop(expert, amateur, request, stream);
  return std::visit(
      Overloaded{
          [&](const Sample& s) {
            return loop.run([&](const TokenSequence& ctx, std::uint64_t step) {
              return pick_sample(loop.expert_logits(ctx), s.temperature, loop.uniform(step));
            });
          },
          [&](const TopK& s) {
            return loop.run([&](const TokenSequence& ctx, std::uint64_t step) {
              auto kept = truncate_top_k(loop.expert_logits(ctx), s.k, s.temperature);
              return pick_sample(kept, s.temperature, loop.uniform(step));
            });
          },
          [&](const Nucleus& s) {
            return loop.run([&](const TokenSequence& ctx, std::uint64_t step) {
              auto kept = truncate_nucleus(loop.expert_logits(ctx), s.p, s.temperature);
              return pick_sample(kept, s.temperature, loop.uniform(step));
            });
          },
          [&](const CdSample& s) {
            require(amateur != nullptr, ErrorKind::kUsage, "cd_sample requires an amateur scorer");
            require_pair(expert, *amateur);
            return loop.run([&](const TokenSequence& ctx, std::uint64_t step) {
              auto cd = cd_step_logits(loop.expert_logits(ctx), loop.amateur_logits(ctx), s.cd,
                                       s.mask_every_step);
              return pick_sample(cd, s.cd.output_temp, loop.uniform(step));
            });
          },
          [&](const auto&) -> GenerationRecord {
            fail(ErrorKind::kUsage, "decode_sample requires a sampling strategy");
          },
      },
      request.strategy);
}

GenerationRecord decode(const Scorer& expert, const Scorer* amateur, const DecodeRequest& request,
                        std::uint64_t stream) {
  if (std::holds_alternative<Greedy>(request.strategy)) return decode_greedy(expert, request);
  if (std::holds_alternative<CdGreedy>(request.strategy)) {
    require(amateur != nullptr, ErrorKind::kUsage, "cd_greedy requires an amateur scorer");
    return decode_cd_greedy(expert, *amateur, request);
  }
  return decode_sample(expert, amateur, request, stream);
}

std::vector<BatchItem> decode_batch(const Scorer& expert, const Scorer* amateur,
                                    const std::vector<DecodeRequest>& requests,
                                    std::size_t parallelism) {
  std::vector<BatchItem> out(requests.size());
  if (requests.empty()) return out;
  parallelism = std::clamp<std::size_t>(parallelism, 1, requests.size());

  auto run_one = [&](std::size_t i) {
    try {
      out[i].record = decode(expert, amateur, requests[i], i);
    } catch (const Error& e) {
      out[i].error_kind = e.kind();
      out[i].error = e.what();
    } catch (const std::exception& e) {
      out[i].error_kind = ErrorKind::kInternal;
      out[i].error = e.what();
    }
  };

  if (parallelism == 1) {
    for (std::size_t i = 0; i < requests.size(); ++i) run_one(i);
    return out;
  }
  std::atomic<std::size_t> next{0};
  {
    std::vector<std::jthread> workers;
    workers.reserve(parallelism);
    for (std::size_t w = 0; w < parallelism; ++w) {
      workers.emplace_back([&] {
        for (std::size_t i = next.fetch_add(1); i < requests.size(); i = next.fetch_add(1)) {
          run_one(i);
        }
      });
    }
  }
  return out;
}

}  // namespace cdec
