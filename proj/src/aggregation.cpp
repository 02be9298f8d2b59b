#include "cdec/aggregation.hpp"

#include <algorithm>
#include <cctype>

#include "cdec/error.hpp"

namespace cdec {
namespace {

bool is_digit(char c) { return std::isdigit(static_cast<unsigned char>(c)) != 0; }

struct NumberSpan {
  std::size_t begin;
  std::size_t end;
};

// Numbers in order of appearance. A sign belongs to a number only when it directly
// precedes a digit and does not follow a digit ("4 - 3" and "4-3" are two positives).
std::vector<NumberSpan> scan_numbers(std::string_view text, std::size_t from = 0) {
  std::vector<NumberSpan> out;
  std::size_t i = from;
  while (i < text.size()) {
    if (!is_digit(text[i])) {
      ++i;
      continue;
    }
    std::size_t begin = i;
    if (begin > from && (text[begin - 1] == '-' || text[begin - 1] == '+') &&
        (begin - 1 == 0 || !is_digit(text[begin - 2]))) {
      --begin;
    }
    std::size_t j = i;
    while (j < text.size()) {
      if (is_digit(text[j])) {
        ++j;
      } else if (text[j] == ',' && j + 1 < text.size() && is_digit(text[j + 1])) {
        ++j;
      } else {
        break;
      }
    }
    if (j + 1 < text.size() && text[j] == '.' && is_digit(text[j + 1])) {
      ++j;
      while (j < text.size() && is_digit(text[j])) ++j;
    }
    out.push_back({begin, j});
    i = j;
  }
  return out;
}

ExtractedAnswer make_answer(std::string_view text, NumberSpan span) {
  ExtractedAnswer a;
  a.raw_text = std::string(text.substr(span.begin, span.end - span.begin));
  a.canonical = canonicalize_number(a.raw_text);
  a.found = true;
  return a;
}

}  // namespace

std::string AnswerPattern::describe() const {
  return kind == Kind::kLastNumber ? std::string("last-number") : "after-marker(" + marker + ")";
}

std::string canonicalize_number(std::string_view number) {
  bool negative = false;
  if (!number.empty() && (number.front() == '-' || number.front() == '+')) {
    negative = number.front() == '-';
    number.remove_prefix(1);
  }
  std::string integer;
  std::string fraction;
  bool in_fraction = false;
  for (char c : number) {
    if (c == ',') continue;
    if (c == '.') {
      in_fraction = true;
      continue;
    }
    (in_fraction ? fraction : integer).push_back(c);
  }
  const auto first_nonzero = integer.find_first_not_of('0');
  integer = first_nonzero == std::string::npos ? "0" : integer.substr(first_nonzero);
  while (!fraction.empty() && fraction.back() == '0') fraction.pop_back();
  std::string out = integer;
  if (!fraction.empty()) out += "." + fraction;
  if (negative && out != "0") out.insert(out.begin(), '-');
  return out;
}

ExtractedAnswer extract_answer(std::string_view text, const AnswerPattern& pattern) {
  if (pattern.kind == AnswerPattern::Kind::kLastNumber) {
    const auto spans = scan_numbers(text);
    if (spans.empty()) return ExtractedAnswer::none();
    return make_answer(text, spans.back());
  }
  require(!pattern.marker.empty(), ErrorKind::kConfiguration, "after-marker pattern needs a marker");
  const auto pos = text.find(pattern.marker);
  if (pos == std::string_view::npos) return ExtractedAnswer::none();
  const auto spans = scan_numbers(text, pos + pattern.marker.size());
  if (spans.empty()) return ExtractedAnswer::none();
  return make_answer(text, spans.front());
}

VoteResult majority_vote(const std::vector<ExtractedAnswer>& answers) {
  require(!answers.empty(), ErrorKind::kUsage, "majority_vote needs at least one answer");
  VoteResult result;
  result.k = answers.size();
  std::vector<std::string> first_seen;
  for (const auto& a : answers) {
    if (!a.found) continue;
    ++result.valid_paths;
    if (result.counts[a.canonical]++ == 0) first_seen.push_back(a.canonical);
  }
  std::size_t best = 0;
  for (const auto& answer : first_seen) {
    const auto count = result.counts[answer];
    if (count > best) {
      best = count;
      result.winner = answer;
    }
  }
  return result;
}

SelfConsistencyResult self_consistency(const Scorer& expert, const Scorer* amateur,
                                       const Vocabulary& vocab, const DecodeRequest& request,
                                       std::size_t k, const AnswerPattern& pattern,
                                       std::size_t parallelism) {
  require(k >= 1, ErrorKind::kUsage, "self-consistency needs k >= 1");
  SelfConsistencyResult result;
  result.paths = decode_batch(expert, amateur, std::vector<DecodeRequest>(k, request), parallelism);
  result.answers.reserve(k);
  for (const auto& path : result.paths) {
    result.answers.push_back(path.ok()
                                 ? extract_answer(vocab.decode(path.record->continuation.ids), pattern)
                                 : ExtractedAnswer::none());
  }
  result.vote = majority_vote(result.answers);
  return result;
}

}  // namespace cdec
