#include "cdec/datasets.hpp"

#include <cmath>
#include <fstream>

#include <json.hpp>

#include "cdec/error.hpp"
#include "cdec/rng.hpp"

namespace cdec {
namespace {

constexpr int kDatasetSchemaVersion = 1;

std::int64_t evaluate(std::int64_t lhs, char op, std::int64_t rhs) {
  return op == '*' ? lhs * rhs : lhs - rhs;
}

// Draw counters per item: 0 op, 1 lhs, 2 rhs, 3 corruption coin, 4 delta, 5 delta sign.
ArithmeticProblem make_problem(std::uint64_t seed, std::size_t index, double corruption) {
  const CounterRng rng(seed, index);
  ArithmeticProblem p;
  p.op = (rng.bits(0) & 1u) ? '*' : '-';
  p.operands = {static_cast<std::int64_t>(rng.bits(1) % (kMaxOperand + 1)),
                static_cast<std::int64_t>(rng.bits(2) % (kMaxOperand + 1))};
  p.expression = std::to_string(p.operands[0]) + " " + p.op + " " + std::to_string(p.operands[1]) + " =";
  const std::int64_t value = evaluate(p.operands[0], p.op, p.operands[1]);
  p.answer = std::to_string(value);
  if (corruption > 0.0 && rng.uniform(3) < corruption) {
    const auto delta = static_cast<std::int64_t>(1 + rng.bits(4) % 9);
    p.corrupted_answer = std::to_string((rng.bits(5) & 1u) ? value + delta : value - delta);
  }
  return p;
}

const std::vector<std::string>& template_words() {
  static const std::vector<std::string> words = {
      "the", "a", "cat", "dog", "bird", "child", "sat", "ran", "slept", "sang",
      "on", "under", "near", "mat", "tree", "house", "quietly", "loudly", "today", "."};
  return words;
}

}  // namespace

void CorpusSpec::validate() const {
  require(size >= 1, ErrorKind::kUsage, "size: must be >= 1");
  require(corruption >= 0.0 && corruption <= 1.0, ErrorKind::kConfiguration,
          "corruption: must be in [0, 1]");
}

std::vector<ArithmeticProblem> gen_arithmetic(const CorpusSpec& spec) {
  spec.validate();
  require(spec.generator == Generator::kArithmetic, ErrorKind::kUsage,
          "gen_arithmetic needs the arithmetic generator");
  std::vector<ArithmeticProblem> out;
  out.reserve(spec.size);
  for (std::size_t i = 0; i < spec.size; ++i) {
    auto p = make_problem(spec.seed, i, spec.corruption);
    require(std::to_string(evaluate(p.operands[0], p.op, p.operands[1])) == p.answer,
            ErrorKind::kInternal, "arithmetic answer failed re-evaluation");
    out.push_back(std::move(p));
  }
  return out;
}

std::string fewshot_text(const std::vector<ArithmeticProblem>& problems, std::size_t shots,
                         const ArithmeticProblem& target) {
  require(shots <= problems.size(), ErrorKind::kUsage,
          "requested " + std::to_string(shots) + " shots but only " +
              std::to_string(problems.size()) + " problems are available");
  std::string text;
  for (std::size_t i = 0; i < shots; ++i) {
    require(problems[i].expression != target.expression, ErrorKind::kUsage,
            "target problem '" + target.expression + "' also appears among the shots");
    text += problems[i].expression + " " + problems[i].answer + "\n";
  }
  text += target.expression;
  return text;
}

TokenSequence build_fewshot_prompt(const Vocabulary& vocab,
                                   const std::vector<ArithmeticProblem>& problems,
                                   std::size_t shots, const ArithmeticProblem& target) {
  return make_prompt(vocab, fewshot_text(problems, shots, target));
}

std::vector<TokenSequence> arithmetic_corpus(const Vocabulary& vocab,
                                             const std::vector<ArithmeticProblem>& problems,
                                             std::size_t lines_per_sequence) {
  require(lines_per_sequence >= 1, ErrorKind::kUsage, "lines_per_sequence must be >= 1");
  std::vector<TokenSequence> corpus;
  std::string text;
  std::size_t lines = 0;
  auto flush = [&] {
    if (lines == 0) return;
    corpus.push_back(make_prompt(vocab, text));
    text.clear();
    lines = 0;
  };
  for (const auto& p : problems) {
    text += p.expression + " " + p.shown_answer() + "\n";
    if (++lines == lines_per_sequence) flush();
  }
  flush();
  return corpus;
}

std::vector<std::string> gen_template_text(const CorpusSpec& spec) {
  spec.validate();
  require(spec.generator == Generator::kTemplateText, ErrorKind::kUsage,
          "gen_template_text needs the template-text generator");
  static const std::vector<std::string> subjects = {"cat", "dog", "bird", "child"};
  static const std::vector<std::string> verbs = {"sat", "ran", "slept", "sang"};
  static const std::vector<std::string> preps = {"on", "under", "near"};
  static const std::vector<std::string> objects = {"mat", "tree", "house"};
  static const std::vector<std::string> adverbs = {"quietly", "loudly", "today"};
  const auto& words = template_words();
  std::vector<std::string> out;
  out.reserve(spec.size);
  for (std::size_t i = 0; i < spec.size; ++i) {
    const CounterRng rng(spec.seed, i);
    auto pick = [&](const std::vector<std::string>& from, std::uint64_t c) {
      return from[rng.bits(c) % from.size()];
    };
    std::vector<std::string> sentence = {"the",        pick(subjects, 0), pick(verbs, 1),
                                         pick(preps, 2), "the",           pick(objects, 3),
                                         pick(adverbs, 4), "."};
    if (spec.corruption > 0.0 && rng.uniform(5) < spec.corruption) {
      sentence[rng.bits(6) % sentence.size()] = words[rng.bits(7) % words.size()];
    }
    std::string line;
    for (const auto& w : sentence) line += (line.empty() ? "" : " ") + w;
    out.push_back(std::move(line));
  }
  return out;
}

Vocabulary template_text_vocabulary() { return Vocabulary::words("template-words-v1", template_words()); }

std::string format_problem_line(const ArithmeticProblem& p) {
  nlohmann::json j;
  j["schema_version"] = kDatasetSchemaVersion;
  j["expression"] = p.expression;
  j["answer"] = p.answer;
  j["op"] = std::string(1, p.op);
  j["operands"] = {p.operands[0], p.operands[1]};
  if (p.corrupted_answer) j["corrupted_answer"] = *p.corrupted_answer;
  return j.dump();
}

ArithmeticProblem parse_problem_line(std::string_view line) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::kData, std::string("dataset line is not valid JSON: ") + e.what());
  }
  require(j.is_object(), ErrorKind::kData, "dataset line must be a JSON object");
  for (const auto& [key, _] : j.items()) {
    require(key == "schema_version" || key == "expression" || key == "answer" || key == "op" ||
                key == "operands" || key == "corrupted_answer",
            ErrorKind::kData, "unknown dataset field '" + key + "'");
  }
  ArithmeticProblem p;
  try {
    require(j.at("schema_version").get<int>() == kDatasetSchemaVersion, ErrorKind::kData,
            "unsupported dataset schema_version");
    p.expression = j.at("expression").get<std::string>();
    p.answer = j.at("answer").get<std::string>();
    const auto op = j.at("op").get<std::string>();
    require(op == "-" || op == "*", ErrorKind::kData, "op must be '-' or '*'");
    p.op = op[0];
    const auto operands = j.at("operands").get<std::vector<std::int64_t>>();
    require(operands.size() == 2, ErrorKind::kData, "operands must have two entries");
    p.operands = {operands[0], operands[1]};
    if (j.contains("corrupted_answer")) p.corrupted_answer = j["corrupted_answer"].get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::kData, std::string("malformed dataset record: ") + e.what());
  }
  for (auto v : p.operands) {
    require(v >= 0 && v <= kMaxOperand, ErrorKind::kData, "operand out of [0, 9999]");
  }
  require(std::to_string(evaluate(p.operands[0], p.op, p.operands[1])) == p.answer,
          ErrorKind::kData, "answer does not match expression '" + p.expression + "'");
  return p;
}

void write_problems(const std::vector<ArithmeticProblem>& problems, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  require(static_cast<bool>(out), ErrorKind::kData, "cannot open '" + path + "' for writing");
  for (const auto& p : problems) out << format_problem_line(p) << '\n';
}

std::vector<ArithmeticProblem> read_problems(const std::string& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), ErrorKind::kData, "cannot open dataset '" + path + "'");
  std::vector<ArithmeticProblem> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      out.push_back(parse_problem_line(line));
    } catch (const Error& e) {
      throw Error(e.kind(), path + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace cdec
