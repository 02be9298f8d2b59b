// Minimal external scorer speaking the cdec line protocol. Returns uniform logits.
//
//   cdec-echo-adapter --vocab-size 17 --vocab-id arith-char-v1 [--die-after N] [--garbage]
//                     [--short] [--hang]

#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <iostream>
#include <string>
#include <thread>

int main(int argc, char** argv) {
  long vocab_size = 17;
  std::string vocab_id = "arith-char-v1";
  long die_after = -1;
  bool garbage = false;
  bool short_reply = false;
  bool hang = false;
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--vocab-size" && i + 1 < argc) {
      vocab_size = std::strtol(argv[++i], nullptr, 10);
    } else if (arg == "--vocab-id" && i + 1 < argc) {
      vocab_id = argv[++i];
    } else if (arg == "--die-after" && i + 1 < argc) {
      die_after = std::strtol(argv[++i], nullptr, 10);
    } else if (arg == "--garbage") {
      garbage = true;
    } else if (arg == "--short") {
      short_reply = true;
    } else if (arg == "--hang") {
      hang = true;
    } else {
      std::fprintf(stderr, "unknown argument %s\n", arg.c_str());
      return 1;
    }
  }
  std::cout << "VOCAB " << vocab_size << ' ' << vocab_id << std::endl;
  std::string line;
  long served = 0;
  while (std::getline(std::cin, line)) {
    if (die_after >= 0 && served >= die_after) return 3;
    if (hang) std::this_thread::sleep_for(std::chrono::hours(1));
    if (line.rfind("SCORE", 0) != 0) {
      std::cout << "ERROR expected SCORE" << std::endl;
      continue;
    }
    if (garbage) {
      std::cout << "HELLO there" << std::endl;
    } else {
      std::string out = "LOGITS";
      const long n = short_reply ? vocab_size - 1 : vocab_size;
      for (long i = 0; i < n; ++i) out += " 0";
      std::cout << out << std::endl;
    }
    ++served;
  }
  return 0;
}
