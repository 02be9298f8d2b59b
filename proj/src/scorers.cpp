#include "cdec/scorers.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "cdec/error.hpp"

namespace cdec {

// --- Vocabulary ------------------------------------------------------------

Vocabulary::Vocabulary(std::string id, std::vector<std::string> tokens, TokenId bos, TokenId eos,
                       TokenizeMode mode)
    : id_(std::move(id)), tokens_(std::move(tokens)), bos_(bos), eos_(eos), mode_(mode) {
  require(!id_.empty(), ErrorKind::kData, "vocabulary id must be non-empty");
  require(tokens_.size() >= 2, ErrorKind::kData, "vocabulary needs at least 2 tokens");
  const auto n = static_cast<TokenId>(tokens_.size());
  require(bos_ >= 0 && bos_ < n && eos_ >= 0 && eos_ < n, ErrorKind::kData,
          "BOS/EOS id out of range");
  require(bos_ != eos_, ErrorKind::kData, "BOS and EOS must differ");
  for (TokenId i = 0; i < n; ++i) {
    auto [it, inserted] = index_.emplace(tokens_[static_cast<std::size_t>(i)], i);
    require(inserted, ErrorKind::kData, "duplicate token '" + it->first + "' in vocabulary");
  }
}

Vocabulary Vocabulary::characters(std::string id, std::string_view alphabet) {
  std::vector<std::string> tokens{"<s>", "</s>"};
  for (char c : alphabet) {
    std::string t(1, c);
    if (std::find(tokens.begin(), tokens.end(), t) == tokens.end()) tokens.push_back(t);
  }
  return Vocabulary(std::move(id), std::move(tokens), 0, 1, TokenizeMode::kCharacters);
}

Vocabulary Vocabulary::words(std::string id, const std::vector<std::string>& words) {
  std::vector<std::string> tokens{"<s>", "</s>"};
  for (const auto& w : words) {
    if (std::find(tokens.begin(), tokens.end(), w) == tokens.end()) tokens.push_back(w);
  }
  return Vocabulary(std::move(id), std::move(tokens), 0, 1, TokenizeMode::kWords);
}

Vocabulary Vocabulary::arithmetic() { return characters("arith-char-v1", "0123456789 =-*\n"); }

const std::string& Vocabulary::token(TokenId id) const {
  require(id >= 0 && static_cast<std::size_t>(id) < tokens_.size(), ErrorKind::kData,
          "token id " + std::to_string(id) + " out of range");
  return tokens_[static_cast<std::size_t>(id)];
}

std::optional<TokenId> Vocabulary::find(std::string_view token) const {
  auto it = index_.find(std::string(token));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::vector<TokenId> Vocabulary::encode(std::string_view text) const {
  std::vector<TokenId> ids;
  auto push = [&](std::string_view piece) {
    auto id = find(piece);
    if (!id) fail(ErrorKind::kData, "token '" + std::string(piece) + "' not in vocabulary " + id_);
    ids.push_back(*id);
  };
  if (mode_ == TokenizeMode::kCharacters) {
    for (std::size_t i = 0; i < text.size(); ++i) push(text.substr(i, 1));
  } else {
    std::istringstream in{std::string(text)};
    std::string word;
    while (in >> word) push(word);
  }
  return ids;
}

std::string Vocabulary::decode(const std::vector<TokenId>& ids) const {
  std::string out;
  bool first = true;
  for (TokenId id : ids) {
    if (is_special(id)) continue;
    if (mode_ == TokenizeMode::kWords && !first) out += ' ';
    out += token(id);
    first = false;
  }
  return out;
}

std::size_t Vocabulary::char_length(const std::vector<TokenId>& ids) const {
  return decode(ids).size();
}

TokenSequence make_prompt(const Vocabulary& vocab, std::string_view text) {
  TokenSequence seq{vocab.id(), {vocab.bos()}};
  auto body = vocab.encode(text);
  seq.ids.insert(seq.ids.end(), body.begin(), body.end());
  return seq;
}

void validate_sequence(const TokenSequence& seq, const Vocabulary& vocab) {
  if (seq.vocab_id != vocab.id()) {
    fail(ErrorKind::kScorerCompatibility,
         "sequence vocabulary '" + seq.vocab_id + "' does not match '" + vocab.id() + "'");
  }
  for (TokenId id : seq.ids) {
    if (id < 0 || static_cast<std::size_t>(id) >= vocab.size()) {
      fail(ErrorKind::kData, "token id " + std::to_string(id) + " out of vocabulary range");
    }
  }
}

// --- Scorer ----------------------------------------------------------------

std::string_view to_string(ScorerKind kind) {
  switch (kind) {
    case ScorerKind::kTable: return "table";
    case ScorerKind::kNgram: return "ngram";
    case ScorerKind::kPrefixWrapped: return "prefix-wrapped";
    case ScorerKind::kExternal: return "external";
  }
  return "unknown";
}

void Scorer::check_context(const TokenSequence& context) const {
  const auto& desc = descriptor();
  if (context.vocab_id != desc.vocab_id) {
    fail(ErrorKind::kScorerCompatibility, "context vocabulary '" + context.vocab_id +
                                              "' does not match scorer vocabulary '" +
                                              desc.vocab_id + "'");
  }
  require(!context.ids.empty(), ErrorKind::kUsage, "scorers never accept an empty context");
  for (TokenId id : context.ids) {
    if (id < 0 || static_cast<std::size_t>(id) >= desc.vocab_size) {
      fail(ErrorKind::kData, "context token id " + std::to_string(id) + " out of range");
    }
  }
}

// --- TableScorer -----------------------------------------------------------

TableScorer::TableScorer(Vocabulary vocab, double parameter_count)
    : vocab_(std::move(vocab)),
      descriptor_{ScorerKind::kTable, parameter_count, vocab_.id(), vocab_.size()},
      default_row_(vocab_.size(), 0.0) {
  require(parameter_count >= 0.0, ErrorKind::kConfiguration, "parameter_count must be >= 0");
}

void TableScorer::check_row(const std::vector<double>& logits) const {
  require(logits.size() == vocab_.size(), ErrorKind::kScorerCompatibility,
          "table row length does not match vocabulary size");
  for (double v : logits) require(std::isfinite(v), ErrorKind::kValidation, "non-finite table logit");
}

std::vector<double> TableScorer::probs_to_logits(const std::map<TokenId, double>& probs) const {
  std::vector<double> logits(vocab_.size(), std::log(kFloorProbability));
  for (const auto& [id, p] : probs) {
    require(id >= 0 && static_cast<std::size_t>(id) < vocab_.size(), ErrorKind::kData,
            "table rule token out of range");
    require(p > 0.0 && p <= 1.0, ErrorKind::kValidation, "table probability must be in (0,1]");
    logits[static_cast<std::size_t>(id)] = std::log(p);
  }
  return logits;
}

TableScorer& TableScorer::set_default_logits(std::vector<double> logits) {
  check_row(logits);
  default_row_ = std::move(logits);
  return *this;
}

TableScorer& TableScorer::set_default_probs(const std::map<TokenId, double>& probs) {
  return set_default_logits(probs_to_logits(probs));
}

TableScorer& TableScorer::add_rule_logits(std::vector<TokenId> suffix, std::vector<double> logits) {
  check_row(logits);
  require(!suffix.empty(), ErrorKind::kUsage, "empty rule suffix; use set_default_* instead");
  longest_rule_ = std::max(longest_rule_, suffix.size());
  rules_[std::move(suffix)] = std::move(logits);
  return *this;
}

TableScorer& TableScorer::add_rule_probs(std::vector<TokenId> suffix,
                                         const std::map<TokenId, double>& probs) {
  return add_rule_logits(std::move(suffix), probs_to_logits(probs));
}

LogitVector TableScorer::score_next(const TokenSequence& context) const {
  check_context(context);
  const auto& ids = context.ids;
  for (std::size_t len = std::min(longest_rule_, ids.size()); len > 0; --len) {
    std::vector<TokenId> suffix(ids.end() - static_cast<std::ptrdiff_t>(len), ids.end());
    if (auto it = rules_.find(suffix); it != rules_.end()) return LogitVector(it->second);
  }
  return LogitVector(default_row_);
}

// --- NgramScorer -----------------------------------------------------------

NgramScorer::NgramScorer(Vocabulary vocab, NgramOptions options, std::vector<Level> levels)
    : vocab_(std::move(vocab)),
      options_(options),
      descriptor_{ScorerKind::kNgram, options.parameter_count, vocab_.id(), vocab_.size()},
      levels_(std::move(levels)) {
  require(options_.order >= 1 && options_.order <= 5, ErrorKind::kConfiguration,
          "order: must be in [1, 5]");
  require(options_.smoothing_k > 0.0 && std::isfinite(options_.smoothing_k),
          ErrorKind::kConfiguration, "smoothing_k: must be > 0");
  require(options_.parameter_count >= 0.0, ErrorKind::kConfiguration,
          "parameter_count: must be >= 0");
  require(levels_.size() == static_cast<std::size_t>(options_.order), ErrorKind::kData,
          "n-gram level count does not match order");
  for (std::size_t m = 0; m < levels_.size(); ++m) {
    for (const auto& [ctx, row] : levels_[m]) {
      require(ctx.size() == m, ErrorKind::kData, "n-gram context length does not match level");
      std::uint64_t total = 0;
      for (const auto& [id, c] : row.counts) {
        require(id >= 0 && static_cast<std::size_t>(id) < vocab_.size(), ErrorKind::kData,
                "n-gram token out of range");
        total += c;
      }
      require(total == row.total, ErrorKind::kData, "n-gram row total mismatch");
    }
  }
  require(!levels_[0].empty() && levels_[0].begin()->second.total > 0, ErrorKind::kData,
          "n-gram model has no unigram counts");
}

const NgramScorer::Row* NgramScorer::find_row(const std::vector<TokenId>& context) const {
  const std::size_t longest = std::min(context.size(), levels_.size() - 1);
  for (std::size_t m = longest + 1; m-- > 0;) {
    std::vector<TokenId> key(context.end() - static_cast<std::ptrdiff_t>(m), context.end());
    auto it = levels_[m].find(key);
    if (it != levels_[m].end() && it->second.total > 0) return &it->second;
  }
  return nullptr;
}

double NgramScorer::probability(const std::vector<TokenId>& context, TokenId next) const {
  const Row* row = find_row(context);
  const double k = options_.smoothing_k;
  const double denom = static_cast<double>(row->total) + k * static_cast<double>(vocab_.size());
  auto it = row->counts.find(next);
  const double count = it == row->counts.end() ? 0.0 : static_cast<double>(it->second);
  return (count + k) / denom;
}

LogitVector NgramScorer::score_next(const TokenSequence& context) const {
  check_context(context);
  const Row* row = find_row(context.ids);
  const double k = options_.smoothing_k;
  const double log_denom =
      std::log(static_cast<double>(row->total) + k * static_cast<double>(vocab_.size()));
  std::vector<double> logits(vocab_.size(), std::log(k) - log_denom);
  for (const auto& [id, c] : row->counts) {
    logits[static_cast<std::size_t>(id)] = std::log(static_cast<double>(c) + k) - log_denom;
  }
  return LogitVector(std::move(logits));
}

std::shared_ptr<const NgramScorer> train_ngram(const Vocabulary& vocab,
                                               const std::vector<TokenSequence>& corpus,
                                               const NgramOptions& options) {
  require(!corpus.empty(), ErrorKind::kData, "n-gram training corpus is empty");
  require(options.order >= 1 && options.order <= 5, ErrorKind::kConfiguration,
          "order: must be in [1, 5]");
  std::vector<NgramScorer::Level> levels(static_cast<std::size_t>(options.order));
  std::size_t targets = 0;
  for (const auto& raw : corpus) {
    validate_sequence(raw, vocab);
    std::vector<TokenId> ids;
    if (raw.ids.empty() || raw.ids.front() != vocab.bos()) ids.push_back(vocab.bos());
    ids.insert(ids.end(), raw.ids.begin(), raw.ids.end());
    for (std::size_t t = 1; t < ids.size(); ++t) {
      ++targets;
      for (std::size_t m = 0; m < levels.size() && m <= t; ++m) {
        std::vector<TokenId> ctx(ids.begin() + static_cast<std::ptrdiff_t>(t - m),
                                 ids.begin() + static_cast<std::ptrdiff_t>(t));
        auto& row = levels[m][std::move(ctx)];
        ++row.total;
        ++row.counts[ids[t]];
      }
    }
  }
  require(targets > 0, ErrorKind::kData, "n-gram training corpus has no tokens after BOS");
  return std::make_shared<const NgramScorer>(vocab, options, std::move(levels));
}

// --- serialization ---------------------------------------------------------
//
// cdec-ngram 1
// vocab <json-string id> <chars|words> <bos> <eos> <size>
// <json-string token>            (size lines)
// order <n>
// smoothing_k <shortest round-trip double>
// parameter_count <shortest round-trip double>
// level <m> <row count>
// <ctx ids (m of them)> <total> <entries> <id>:<count> ...   (row count lines)

namespace {

constexpr std::string_view kNgramMagic = "cdec-ngram";
constexpr int kNgramFormatVersion = 1;

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

double parse_double(std::string_view s) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  require(ec == std::errc() && ptr == s.data() + s.size(), ErrorKind::kData,
          "malformed number '" + std::string(s) + "' in n-gram file");
  return v;
}

template <typename Int>
Int parse_int(std::string_view s) {
  Int v{};
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  require(ec == std::errc() && ptr == s.data() + s.size(), ErrorKind::kData,
          "malformed integer '" + std::string(s) + "' in n-gram file");
  return v;
}

class LineReader {
 public:
  explicit LineReader(std::string_view text) : text_(text) {}

  std::string_view next() {
    require(pos_ < text_.size(), ErrorKind::kData, "truncated n-gram file");
    auto end = text_.find('\n', pos_);
    require(end != std::string_view::npos, ErrorKind::kData, "n-gram file missing final newline");
    auto line = text_.substr(pos_, end - pos_);
    pos_ = end + 1;
    return line;
  }
  bool done() const { return pos_ >= text_.size(); }

 private:
  std::string_view text_;
  std::size_t pos_ = 0;
};

std::vector<std::string_view> split_spaces(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    auto j = line.find(' ', i);
    if (j == std::string_view::npos) j = line.size();
    out.push_back(line.substr(i, j - i));
    i = j + 1;
  }
  return out;
}

std::string_view expect_key(std::string_view line, std::string_view key) {
  require(line.substr(0, key.size() + 1) == std::string(key) + " ", ErrorKind::kData,
          "expected '" + std::string(key) + "' line in n-gram file");
  return line.substr(key.size() + 1);
}

}  // namespace

std::string serialize_ngram(const NgramScorer& model) {
  const auto& vocab = model.vocabulary();
  std::ostringstream out;
  out << kNgramMagic << ' ' << kNgramFormatVersion << '\n';
  out << "vocab " << nlohmann::json(vocab.id()).dump() << ' '
      << (vocab.mode() == TokenizeMode::kWords ? "words" : "chars") << ' ' << vocab.bos() << ' '
      << vocab.eos() << ' ' << vocab.size() << '\n';
  for (const auto& t : vocab.tokens()) out << nlohmann::json(t).dump() << '\n';
  out << "order " << model.order() << '\n';
  out << "smoothing_k " << format_double(model.smoothing_k()) << '\n';
  out << "parameter_count " << format_double(model.descriptor().parameter_count) << '\n';
  for (std::size_t m = 0; m < model.levels().size(); ++m) {
    const auto& level = model.levels()[m];
    out << "level " << m << ' ' << level.size() << '\n';
    for (const auto& [ctx, row] : level) {
      for (TokenId id : ctx) out << id << ' ';
      out << row.total << ' ' << row.counts.size();
      for (const auto& [id, c] : row.counts) out << ' ' << id << ':' << c;
      out << '\n';
    }
  }
  return out.str();
}

std::shared_ptr<const NgramScorer> deserialize_ngram(std::string_view text) {
  LineReader in(text);
  {
    auto header = split_spaces(in.next());
    require(header.size() == 2 && header[0] == kNgramMagic, ErrorKind::kData,
            "not a cdec n-gram file");
    const int version = parse_int<int>(header[1]);
    require(version == kNgramFormatVersion, ErrorKind::kData,
            "unsupported n-gram format version " + std::to_string(version));
  }
  auto vocab_line = expect_key(in.next(), "vocab");
  // The id is a JSON string and may contain spaces; the numeric tail never does.
  auto tail = split_spaces(vocab_line);
  require(tail.size() >= 5, ErrorKind::kData, "malformed vocab line");
  const std::size_t n_tail = tail.size();
  const auto size = parse_int<std::size_t>(tail[n_tail - 1]);
  const auto eos = parse_int<TokenId>(tail[n_tail - 2]);
  const auto bos = parse_int<TokenId>(tail[n_tail - 3]);
  const auto mode_str = tail[n_tail - 4];
  require(mode_str == "chars" || mode_str == "words", ErrorKind::kData, "unknown vocab mode");
  const auto id_end = static_cast<std::size_t>(mode_str.data() - vocab_line.data()) - 1;
  std::string vocab_id;
  try {
    vocab_id = nlohmann::json::parse(vocab_line.substr(0, id_end)).get<std::string>();
  } catch (const nlohmann::json::exception&) {
    fail(ErrorKind::kData, "malformed vocabulary id in n-gram file");
  }
  std::vector<std::string> tokens;
  tokens.reserve(size);
  for (std::size_t i = 0; i < size; ++i) {
    try {
      tokens.push_back(nlohmann::json::parse(in.next()).get<std::string>());
    } catch (const nlohmann::json::exception&) {
      fail(ErrorKind::kData, "malformed token line in n-gram file");
    }
  }
  Vocabulary vocab(std::move(vocab_id), std::move(tokens), bos, eos,
                   mode_str == "words" ? TokenizeMode::kWords : TokenizeMode::kCharacters);

  NgramOptions options;
  options.order = parse_int<int>(expect_key(in.next(), "order"));
  options.smoothing_k = parse_double(expect_key(in.next(), "smoothing_k"));
  options.parameter_count = parse_double(expect_key(in.next(), "parameter_count"));
  require(options.order >= 1 && options.order <= 5, ErrorKind::kData, "order out of range");

  std::vector<NgramScorer::Level> levels(static_cast<std::size_t>(options.order));
  for (std::size_t m = 0; m < levels.size(); ++m) {
    auto head = split_spaces(expect_key(in.next(), "level"));
    require(head.size() == 2 && parse_int<std::size_t>(head[0]) == m, ErrorKind::kData,
            "malformed level header");
    const auto rows = parse_int<std::size_t>(head[1]);
    for (std::size_t r = 0; r < rows; ++r) {
      auto fields = split_spaces(in.next());
      require(fields.size() >= m + 2, ErrorKind::kData, "malformed n-gram row");
      std::vector<TokenId> ctx;
      for (std::size_t i = 0; i < m; ++i) ctx.push_back(parse_int<TokenId>(fields[i]));
      NgramScorer::Row row;
      row.total = parse_int<std::uint64_t>(fields[m]);
      const auto entries = parse_int<std::size_t>(fields[m + 1]);
      require(fields.size() == m + 2 + entries, ErrorKind::kData, "n-gram row entry count");
      for (std::size_t e = 0; e < entries; ++e) {
        auto f = fields[m + 2 + e];
        auto colon = f.find(':');
        require(colon != std::string_view::npos, ErrorKind::kData, "malformed n-gram entry");
        row.counts[parse_int<TokenId>(f.substr(0, colon))] =
            parse_int<std::uint64_t>(f.substr(colon + 1));
      }
      levels[m].emplace(std::move(ctx), std::move(row));
    }
  }
  require(in.done(), ErrorKind::kData, "trailing data in n-gram file");
  return std::make_shared<const NgramScorer>(std::move(vocab), options, std::move(levels));
}

void save_ngram(const NgramScorer& model, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  require(static_cast<bool>(out), ErrorKind::kData, "cannot open '" + path + "' for writing");
  out << serialize_ngram(model);
  require(static_cast<bool>(out), ErrorKind::kData, "write to '" + path + "' failed");
}

std::shared_ptr<const NgramScorer> load_ngram(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorKind::kData, "cannot open n-gram file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return deserialize_ngram(buf.str());
}

// --- PrefixScorer ----------------------------------------------------------

PrefixScorer::PrefixScorer(ScorerPtr inner, TokenSequence prefix, TokenId bos)
    : inner_(std::move(inner)), bos_(bos) {
  require(inner_ != nullptr, ErrorKind::kUsage, "null inner scorer");
  descriptor_ = inner_->descriptor();
  descriptor_.kind = ScorerKind::kPrefixWrapped;
  if (prefix.vocab_id != descriptor_.vocab_id) {
    fail(ErrorKind::kScorerCompatibility, "negative prefix vocabulary '" + prefix.vocab_id +
                                              "' does not match scorer vocabulary '" +
                                              descriptor_.vocab_id + "'");
  }
  auto begin = prefix.ids.begin();
  if (begin != prefix.ids.end() && *begin == bos_) ++begin;
  prefix_.assign(begin, prefix.ids.end());
  for (TokenId id : prefix_) {
    require(id >= 0 && static_cast<std::size_t>(id) < descriptor_.vocab_size, ErrorKind::kData,
            "prefix token out of range");
  }
}

LogitVector PrefixScorer::score_next(const TokenSequence& context) const {
  check_context(context);
  TokenSequence wrapped{context.vocab_id, {bos_}};
  wrapped.ids.reserve(1 + prefix_.size() + context.ids.size());
  wrapped.ids.insert(wrapped.ids.end(), prefix_.begin(), prefix_.end());
  auto rest = context.ids.begin();
  if (*rest == bos_) ++rest;
  wrapped.ids.insert(wrapped.ids.end(), rest, context.ids.end());
  return inner_->score_next(wrapped);
}

ScorerPtr with_prefix(ScorerPtr inner, const TokenSequence& negative_prefix, TokenId bos) {
  return std::make_shared<const PrefixScorer>(std::move(inner), negative_prefix, bos);
}

PairReport check_pair(const ScorerDescriptor& expert, const ScorerDescriptor& amateur) {
  PairReport report;
  if (expert.vocab_id != amateur.vocab_id) {
    report.ok = false;
    report.reasons.push_back("vocabulary mismatch");
  }
  if (expert.vocab_size != amateur.vocab_size) {
    report.ok = false;
    report.reasons.push_back("vocabulary size mismatch: " + std::to_string(expert.vocab_size) +
                             " vs " + std::to_string(amateur.vocab_size));
  }
  report.parameter_ratio =
      expert.parameter_count > 0.0 ? amateur.parameter_count / expert.parameter_count : 0.0;
  return report;
}

}  // namespace cdec
