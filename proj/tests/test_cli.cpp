#include <doctest.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sys/wait.h>

#include <json.hpp>

#include "cdec/aggregation.hpp"
#include "cdec/datasets.hpp"
#include "cdec/harness.hpp"
#include "cdec/rng.hpp"

using nlohmann::json;

namespace {

struct Result {
  int code;
  std::string out;
};

Result run(const std::string& args) {
  const std::string cmd = std::string(CDEC_BIN) + " " + args + " 2>/dev/null";
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  std::string out;
  std::array<char, 4096> buf{};
  while (std::fgets(buf.data(), buf.size(), pipe)) out += buf.data();
  const int status = pclose(pipe);
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, out};
}

std::string quote(const std::string& s) {
  std::string q = "'";
  for (char c : s) q += c == '\'' ? std::string("'\\''") : std::string(1, c);
  return q + "'";
}

std::string tmp(const std::string& name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

}  // namespace

TEST_CASE("flops prints the per-token and total overheads") {
  auto r = run("flops --expert 65.2 --amateur 1.5 --length-ratio 1.009294");
  CHECK(r.code == 0);
  CHECK(r.out.find("2.30%") != std::string::npos);
  CHECK(r.out.find("3.25%") != std::string::npos);
  r = run("flops --expert 65.2 --amateur 1.5 --json");
  CHECK(json::parse(r.out)["per_token_overhead"].get<double>() == doctest::Approx(1.5 / 65.2));
  r = run("flops --expert 65.2 --amateur 1.5 --length-ratio 1.009294 --k-max 20");
  CHECK(r.out.rfind("k,method,relative_flops\n", 0) == 0);
}

TEST_CASE("usage and data errors map to exit codes") {
  CHECK(run("").code == 1);
  CHECK(run("flops --expert 1 --nonsense").code == 1);
  CHECK(run("frobnicate").code == 1);
  CHECK(run("flops --expert -1 --amateur 1").code == 1);
  CHECK(run("analyze --input /nonexistent/gen.jsonl").code == 2);
  const auto bad = tmp("cdec_cli_bad.json");
  auto cfg = json::parse(std::ifstream(DEMO_CONFIG));
  cfg["cd"]["alpha"] = 1.5;
  std::ofstream(bad) << cfg.dump();
  const std::string cmd = std::string(CDEC_BIN) + " run --config " + bad + " 2>&1";
  FILE* pipe = popen(cmd.c_str(), "r");
  std::array<char, 4096> buf{};
  std::string err;
  while (std::fgets(buf.data(), buf.size(), pipe)) err += buf.data();
  CHECK(WEXITSTATUS(pclose(pipe)) == 1);
  CHECK(err.find("cd.alpha") != std::string::npos);
  std::remove(bad.c_str());
}

TEST_CASE("decode: cd_greedy with beta 0 equals greedy") {
  const std::string base = "decode --config " + std::string(DEMO_CONFIG) + " --json --prompt " +
                           quote("12 - 7 = 5\\n4 * 3 =") + " --max-new-tokens 12";
  const auto g = run(base + " --strategy greedy");
  const auto c = run(base + " --strategy cd_greedy --beta 0");
  REQUIRE(g.code == 0);
  REQUIRE(c.code == 0);
  CHECK(json::parse(g.out)["continuation"] == json::parse(c.out)["continuation"]);
  const auto c5 = run(base + " --strategy cd_sample --seed 4");
  CHECK(c5.code == 0);
  CHECK(json::parse(c5.out)["per_step"].size() == json::parse(c5.out)["token_ids"].size());
}

TEST_CASE("selfcons --k 1 agrees with decode on the same seeds") {
  auto cfg = json::parse(std::ifstream(DEMO_CONFIG));
  cfg["dataset"]["size"] = 6;
  const auto cfg_path = tmp("cdec_cli_small.json");
  std::ofstream(cfg_path) << cfg.dump();
  const auto rows = tmp("cdec_cli_rows.jsonl");
  const auto gens = tmp("cdec_cli_gens.jsonl");
  std::remove(rows.c_str());
  std::remove(gens.c_str());
  const auto r = run("selfcons --config " + cfg_path + " --k 1 --methods sample --json --output " + rows +
                     " --generations " + gens);
  REQUIRE(r.code == 0);
  double selfcons_acc = -1;
  std::istringstream lines(r.out);
  for (std::string line; std::getline(lines, line);) {
    const auto j = json::parse(line);
    if (j["metric"] == "accuracy") selfcons_acc = j["value"].get<double>();
  }

  const auto config = cdec::parse_config(cfg);
  const auto data = cdec::load_evaluation_set(config);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < data.targets.size(); ++i) {
    std::string prompt = cdec::fewshot_text(data.shots, data.shots.size(), data.targets[i]);
    std::string escaped;
    for (char ch : prompt) escaped += ch == '\n' ? std::string("\\n") : std::string(1, ch);
    const auto d = run("decode --config " + cfg_path + " --json --strategy sample --stop-newline" +
                       " --max-new-tokens " + std::to_string(config.max_new_tokens) + " --seed " +
                       std::to_string(cdec::derive_seed(config.seed, i)) + " --prompt " + quote(escaped));
    REQUIRE(d.code == 0);
    const auto text = json::parse(d.out)["continuation"].get<std::string>();
    const auto ans = cdec::extract_answer(text, config.answer_pattern);
    correct += ans.found && ans.canonical == data.targets[i].answer ? 1 : 0;
  }
  CHECK(selfcons_acc == static_cast<double>(correct) / static_cast<double>(data.targets.size()));

  const auto a = run("analyze --json --input " + gens);
  REQUIRE(a.code == 0);
  const auto report = json::parse(a.out);
  CHECK(report.contains("sample"));
  CHECK(report["sample"]["copy"].size() == 4);
  CHECK(report["sample"]["stats"]["correct_fraction"].get<double>() == selfcons_acc);
  std::remove(cfg_path.c_str());
  std::remove(rows.c_str());
  std::remove(gens.c_str());
}

TEST_CASE("gen-data, train-scorer and rank round trip") {
  const auto data = tmp("cdec_cli_data.jsonl");
  auto r = run("gen-data --size 20 --seed 3 --corruption 0.5 --output " + data);
  CHECK(r.code == 0);
  const auto problems = cdec::read_problems(data);
  CHECK(problems.size() == 20);
  cdec::CorpusSpec spec;
  spec.size = 20;
  spec.seed = 3;
  spec.corruption = 0.5;
  CHECK(problems == cdec::gen_arithmetic(spec));

  const auto expert = tmp("cdec_cli_expert.ngram");
  const auto amateur = tmp("cdec_cli_amateur.ngram");
  CHECK(run("train-scorer --arithmetic-size 500 --order 4 --parameter-count 6.7 --output " + expert).code == 0);
  CHECK(run("train-scorer --config " + std::string(DEMO_CONFIG) + " --role amateur --output " + amateur).code == 0);
  r = run("decode --expert-model " + expert + " --amateur-model " + amateur +
          " --strategy cd_greedy --prompt '1 - 1 =' --json");
  CHECK(r.code == 0);

  const auto tasks = tmp("cdec_cli_tasks.jsonl");
  std::ofstream(tasks) << R"({"schema_version":1,"context":"12 - 3 =","candidates":[" 9"," 15"],"gold":0})"
                       << "\n"
                       << R"({"context":"2 * 3 =","candidates":[" 6"," 5"," 66"],"gold":0})" << "\n";
  r = run("rank --expert-model " + expert + " --amateur-model " + amateur + " --tasks " + tasks + " --json");
  REQUIRE(r.code == 0);
  std::istringstream lines(r.out);
  std::size_t n = 0;
  for (std::string line; std::getline(lines, line);) ++n;
  CHECK(n == 3);
  r = run("rank --expert-model " + expert + " --negative-prefix '9 - 9 = 5\\n' --tasks " + tasks);
  CHECK(r.code == 0);
  for (const auto& p : {data, expert, amateur, tasks}) std::remove(p.c_str());
}
