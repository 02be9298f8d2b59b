#pragma once

// Deterministic desk-scale datasets: the synthetic arithmetic task and the corpora
// used to train toy expert/amateur scorers.

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "cdec/scorers.hpp"

namespace cdec {

enum class Generator { kArithmetic, kTemplateText };

struct CorpusSpec {
  Generator generator = Generator::kArithmetic;
  std::size_t size = 1000;
  std::uint64_t seed = 0;
  // Fraction of examples carrying an injected error (weak-amateur corpora).
  double corruption = 0.0;

  void validate() const;
};

struct ArithmeticProblem {
  std::string expression;  // "4821 - 907 ="
  std::string answer;      // exact value of the expression
  std::array<std::int64_t, 2> operands{};
  char op = '-';  // '-' or '*'
  // Present on corrupted examples: the wrong answer shown in training text.
  std::optional<std::string> corrupted_answer;

  const std::string& shown_answer() const { return corrupted_answer ? *corrupted_answer : answer; }
  friend bool operator==(const ArithmeticProblem&, const ArithmeticProblem&) = default;
};

inline constexpr std::int64_t kMaxOperand = 9999;

std::vector<ArithmeticProblem> gen_arithmetic(const CorpusSpec& spec);

// Shots are problems[0..shots), rendered "expr answer" one per line, then the
// target's expression with the answer withheld.
TokenSequence build_fewshot_prompt(const Vocabulary& vocab,
                                   const std::vector<ArithmeticProblem>& problems,
                                   std::size_t shots, const ArithmeticProblem& target);
std::string fewshot_text(const std::vector<ArithmeticProblem>& problems, std::size_t shots,
                         const ArithmeticProblem& target);

// Training sequences of `lines_per_sequence` solved lines each (shown answers).
std::vector<TokenSequence> arithmetic_corpus(const Vocabulary& vocab,
                                             const std::vector<ArithmeticProblem>& problems,
                                             std::size_t lines_per_sequence = 8);

// Short templated sentences over a fixed word list; corruption swaps in a random word.
std::vector<std::string> gen_template_text(const CorpusSpec& spec);
Vocabulary template_text_vocabulary();

// JSON lines: {"schema_version":1,"expression":..,"answer":..,"op":"-","operands":[a,b]}
// plus "corrupted_answer" on corrupted examples.
std::string format_problem_line(const ArithmeticProblem& p);
ArithmeticProblem parse_problem_line(std::string_view line);
void write_problems(const std::vector<ArithmeticProblem>& problems, const std::string& path);
std::vector<ArithmeticProblem> read_problems(const std::string& path);

}  // namespace cdec
