#include "cdec/external_scorer.hpp"

#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <mutex>
#include <sstream>

#include "cdec/error.hpp"

namespace cdec {
namespace {

std::string excerpt(const std::string& line) {
  constexpr std::size_t kMax = 80;
  return line.size() <= kMax ? line : line.substr(0, kMax) + "...";
}

void ignore_sigpipe_once() {
  static std::once_flag flag;
  std::call_once(flag, [] { ::signal(SIGPIPE, SIG_IGN); });
}

}  // namespace

std::string format_logits_line(const std::vector<double>& logits) {
  std::string out = "LOGITS";
  char buf[32];
  for (double v : logits) {
    std::snprintf(buf, sizeof buf, " %.9g", v);
    out += buf;
  }
  return out;
}

ExternalScorer::ExternalScorer(ExternalScorerOptions options) : options_(std::move(options)) {
  require(!options_.command.empty(), ErrorKind::kConfiguration, "external scorer command is empty");
  require(options_.parameter_count >= 0.0, ErrorKind::kConfiguration,
          "parameter_count: must be >= 0");
  ignore_sigpipe_once();

  int in_pipe[2];
  int out_pipe[2];
  require(::pipe(in_pipe) == 0 && ::pipe(out_pipe) == 0, ErrorKind::kScorer,
          std::string("pipe() failed: ") + std::strerror(errno));
  const pid_t pid = ::fork();
  require(pid >= 0, ErrorKind::kScorer, std::string("fork() failed: ") + std::strerror(errno));
  if (pid == 0) {
    ::dup2(in_pipe[0], STDIN_FILENO);
    ::dup2(out_pipe[1], STDOUT_FILENO);
    ::close(in_pipe[0]);
    ::close(in_pipe[1]);
    ::close(out_pipe[0]);
    ::close(out_pipe[1]);
    std::vector<char*> argv;
    for (auto& arg : options_.command) argv.push_back(arg.data());
    argv.push_back(nullptr);
    ::execvp(argv[0], argv.data());
    ::_exit(127);
  }
  pid_ = pid;
  ::close(in_pipe[0]);
  ::close(out_pipe[1]);
  to_child_ = in_pipe[1];
  from_child_ = out_pipe[0];

  try {
    const std::string hello = read_line();
    std::istringstream in(hello);
    std::string tag;
    std::size_t size = 0;
    std::string vocab_id;
    std::string extra;
    if (!(in >> tag >> size >> vocab_id) || tag != "VOCAB" || size < 2 || (in >> extra)) {
      protocol_error("bad handshake", hello);
    }
    descriptor_ = {ScorerKind::kExternal, options_.parameter_count, vocab_id, size};
  } catch (...) {
    shutdown();
    throw;
  }
}

ExternalScorer::~ExternalScorer() { shutdown(); }

void ExternalScorer::shutdown() {
  if (to_child_ >= 0) ::close(to_child_);
  if (from_child_ >= 0) ::close(from_child_);
  to_child_ = from_child_ = -1;
  if (pid_ > 0) {
    int status = 0;
    if (::waitpid(pid_, &status, WNOHANG) == 0) {
      ::kill(pid_, SIGTERM);
      ::waitpid(pid_, &status, 0);
    }
    pid_ = -1;
  }
}

void ExternalScorer::protocol_error(const std::string& what, const std::string& line) const {
  fail(ErrorKind::kScorer,
       "external scorer protocol violation (" + what + "): '" + excerpt(line) + "'");
}

std::string ExternalScorer::read_line() const {
  const auto deadline = std::chrono::steady_clock::now() + options_.timeout;
  while (true) {
    if (auto nl = buffer_.find('\n'); nl != std::string::npos) {
      std::string line = buffer_.substr(0, nl);
      buffer_.erase(0, nl + 1);
      if (!line.empty() && line.back() == '\r') line.pop_back();
      return line;
    }
    const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(
        deadline - std::chrono::steady_clock::now());
    if (left.count() <= 0) {
      fail(ErrorKind::kScorer, "external scorer timed out after " +
                                   std::to_string(options_.timeout.count()) + " ms");
    }
    pollfd pfd{from_child_, POLLIN, 0};
    const int ready = ::poll(&pfd, 1, static_cast<int>(left.count()));
    if (ready < 0 && errno == EINTR) continue;
    require(ready >= 0, ErrorKind::kScorer, std::string("poll() failed: ") + std::strerror(errno));
    if (ready == 0) continue;
    char chunk[4096];
    const auto n = ::read(from_child_, chunk, sizeof chunk);
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) {
      fail(ErrorKind::kScorer, "external scorer exited or closed its output" +
                                   (buffer_.empty() ? std::string() : " after '" + excerpt(buffer_) + "'"));
    }
    buffer_.append(chunk, static_cast<std::size_t>(n));
  }
}

void ExternalScorer::write_line(const std::string& line) const {
  std::string data = line + "\n";
  std::size_t written = 0;
  while (written < data.size()) {
    const auto n = ::write(to_child_, data.data() + written, data.size() - written);
    if (n < 0 && errno == EINTR) continue;
    require(n > 0, ErrorKind::kScorer,
            std::string("external scorer is not accepting input: ") + std::strerror(errno));
    written += static_cast<std::size_t>(n);
  }
}

LogitVector ExternalScorer::score_next(const TokenSequence& context) const {
  check_context(context);
  std::string request = "SCORE";
  for (TokenId id : context.ids) request += " " + std::to_string(id);

  std::lock_guard lock(mutex_);
  write_line(request);
  const std::string line = read_line();
  if (line.rfind("LOGITS", 0) != 0) protocol_error("expected LOGITS", line);
  std::vector<double> logits;
  logits.reserve(descriptor_.vocab_size);
  const char* p = line.data() + 6;
  const char* end = line.data() + line.size();
  while (p < end) {
    if (*p == ' ') {
      ++p;
      continue;
    }
    double v = 0.0;
    auto [next, ec] = std::from_chars(p, end, v);
    if (ec != std::errc() || (next < end && *next != ' ')) protocol_error("malformed float", line);
    logits.push_back(v);
    p = next;
  }
  if (logits.size() != descriptor_.vocab_size) {
    protocol_error("expected " + std::to_string(descriptor_.vocab_size) + " logits, got " +
                       std::to_string(logits.size()),
                   line);
  }
  for (double v : logits) {
    if (!std::isfinite(v)) protocol_error("non-finite logit", line);
  }
  return LogitVector(std::move(logits));
}

}  // namespace cdec
