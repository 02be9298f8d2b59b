#pragma once

// Independent reference implementations used by the tests. These work in plain
// probability space with naive loops and deliberately share no code with the library.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

namespace oracle {

inline std::vector<double> softmax(const std::vector<double>& x, double temperature = 1.0) {
  double m = -INFINITY;
  for (double v : x) m = std::max(m, v / temperature);
  std::vector<double> p(x.size());
  double z = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    p[i] = std::exp(x[i] / temperature - m);
    z += p[i];
  }
  for (double& v : p) v /= z;
  return p;
}

// Tokens whose probability is at least alpha times the largest probability.
inline std::vector<int> mask_probs(const std::vector<double>& p, double alpha) {
  const double top = *std::max_element(p.begin(), p.end());
  std::vector<int> out;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] >= alpha * top) out.push_back(static_cast<int>(i));
  }
  return out;
}

// p_cd proportional to p_e * (p_e / p_a)^beta on valid, directly in probability space.
inline std::vector<double> cd_probs(const std::vector<double>& pe, const std::vector<double>& pa,
                                    double beta, const std::vector<int>& valid) {
  std::vector<double> out(pe.size(), 0.0);
  double z = 0.0;
  for (int i : valid) {
    out[i] = pe[i] * std::pow(pe[i] / pa[i], beta);
    z += out[i];
  }
  for (double& v : out) v /= z;
  return out;
}

// Mode with first-occurrence tie-break; empty strings are not votes.
inline std::string mode(const std::vector<std::string>& votes) {
  std::string best;
  std::size_t best_count = 0;
  for (std::size_t i = 0; i < votes.size(); ++i) {
    if (votes[i].empty()) continue;
    bool seen_before = false;
    for (std::size_t j = 0; j < i; ++j) seen_before = seen_before || votes[j] == votes[i];
    if (seen_before) continue;
    std::size_t c = 0;
    for (const auto& v : votes) c += v == votes[i] ? 1 : 0;
    if (c > best_count) {
      best = votes[i];
      best_count = c;
    }
  }
  return best;
}

struct Overlap {
  double precision, recall, f1;
};

// Distinct n-gram sets by linear search.
inline Overlap copy_overlap(const std::vector<int>& prompt, const std::vector<int>& gen, int n) {
  auto grams = [n](const std::vector<int>& s) {
    std::vector<std::vector<int>> out;
    for (std::size_t i = 0; i + n <= s.size(); ++i) {
      std::vector<int> g(s.begin() + i, s.begin() + i + n);
      if (std::find(out.begin(), out.end(), g) == out.end()) out.push_back(g);
    }
    return out;
  };
  const auto a = grams(prompt);
  const auto b = grams(gen);
  double shared = 0.0;
  for (const auto& g : b) shared += std::find(a.begin(), a.end(), g) != a.end() ? 1.0 : 0.0;
  Overlap o{shared / b.size(), shared / a.size(), 0.0};
  o.f1 = o.precision + o.recall == 0.0 ? 0.0 : 2 * o.precision * o.recall / (o.precision + o.recall);
  return o;
}

// Schoolbook decimal arithmetic on non-negative digit strings.
inline std::string strip(std::string s) {
  std::size_t i = 0;
  while (i + 1 < s.size() && s[i] == '0') ++i;
  return s.substr(i);
}

inline bool less(const std::string& a, const std::string& b) {
  return a.size() != b.size() ? a.size() < b.size() : a < b;
}

inline std::string sub(std::string a, std::string b) {
  bool neg = false;
  a = strip(a);
  b = strip(b);
  if (less(a, b)) {
    std::swap(a, b);
    neg = true;
  }
  std::string out(a.size(), '0');
  int borrow = 0;
  for (int i = static_cast<int>(a.size()) - 1, j = static_cast<int>(b.size()) - 1; i >= 0; --i, --j) {
    int d = (a[i] - '0') - borrow - (j >= 0 ? b[j] - '0' : 0);
    borrow = d < 0 ? 1 : 0;
    out[i] = static_cast<char>('0' + (d + 10) % 10);
  }
  out = strip(out);
  return neg && out != "0" ? "-" + out : out;
}

inline std::string mul(const std::string& a, const std::string& b) {
  std::vector<int> acc(a.size() + b.size(), 0);
  for (int i = static_cast<int>(a.size()) - 1; i >= 0; --i) {
    for (int j = static_cast<int>(b.size()) - 1; j >= 0; --j) {
      acc[i + j + 1] += (a[i] - '0') * (b[j] - '0');
    }
  }
  for (int k = static_cast<int>(acc.size()) - 1; k > 0; --k) {
    acc[k - 1] += acc[k] / 10;
    acc[k] %= 10;
  }
  std::string out;
  for (int d : acc) out += static_cast<char>('0' + d);
  return strip(out);
}

inline double tv_distance(const std::vector<double>& p, const std::vector<double>& q) {
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) s += std::fabs(p[i] - q[i]);
  return 0.5 * s;
}

// xorshift64* for test inputs; independent of the engine RNG.
struct TestRng {
  std::uint64_t s;
  explicit TestRng(std::uint64_t seed) : s(seed * 2654435761ULL + 0x9E3779B97F4A7C15ULL) {}
  std::uint64_t next() {
    s ^= s >> 12;
    s ^= s << 25;
    s ^= s >> 27;
    return s * 2685821657736338717ULL;
  }
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
  double range(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  int below(int n) { return static_cast<int>(next() % static_cast<std::uint64_t>(n)); }
};

}  // namespace oracle
