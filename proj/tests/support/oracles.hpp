#pragma once

// Brute-force reference computations and small random generators shared by
// the unit tests and the acceptance binary. Nothing here calls into the
// library's numeric code; only the tokenizer is reused so both sides compare
// the same word sequences.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "cspeech/textmetrics.hpp"

namespace oracle {

using Gen = std::mt19937_64;

inline std::size_t pick(Gen& g, std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(g); }

// Short sentence over a tiny vocabulary so overlaps are common.
inline std::string random_sentence(Gen& g, std::size_t max_words, const std::vector<std::string>& vocab) {
  const std::size_t n = 1 + pick(g, max_words);
  std::string s;
  for (std::size_t i = 0; i < n; ++i) {
    if (i) s += pick(g, 7) == 0 ? ", " : " ";
    s += vocab[pick(g, vocab.size())];
  }
  if (pick(g, 2) == 0) s += ".";
  return s;
}

inline const std::vector<std::string>& small_vocab() {
  static const std::vector<std::string> v{"the", "cat", "sat", "on", "mat", "dog", "ran", "a", "big", "red", "Sun"};
  return v;
}

inline std::vector<std::string> words(const std::string& s) { return cspeech::text::tokenize(s).tokens; }

// O(n m) dynamic-programming table.
inline std::size_t lcs_table(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  std::vector<std::vector<std::size_t>> t(a.size() + 1, std::vector<std::size_t>(b.size() + 1, 0));
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      t[i][j] = a[i - 1] == b[j - 1] ? t[i - 1][j - 1] + 1 : std::max(t[i - 1][j], t[i][j - 1]);
    }
  }
  return t[a.size()][b.size()];
}

inline double f_measure(double overlap, double cand_units, double ref_units) {
  if (cand_units == 0 || ref_units == 0 || overlap == 0) return 0.0;
  const double p = overlap / cand_units;
  const double r = overlap / ref_units;
  return 2 * p * r / (p + r);
}

inline double rouge_l(const std::string& a, const std::string& b) {
  const auto wa = words(a), wb = words(b);
  return f_measure(static_cast<double>(lcs_table(wa, wb)), static_cast<double>(wa.size()),
                   static_cast<double>(wb.size()));
}

// Clipped n-gram overlap.
inline double rouge_n(const std::string& a, const std::string& b, std::size_t n) {
  auto grams = [n](const std::vector<std::string>& w) {
    std::map<std::vector<std::string>, int> m;
    for (std::size_t i = 0; i + n <= w.size(); ++i) m[std::vector<std::string>(w.begin() + i, w.begin() + i + n)]++;
    return m;
  };
  const auto wa = words(a), wb = words(b);
  const auto ga = grams(wa), gb = grams(wb);
  double overlap = 0, ca = 0, cb = 0;
  for (const auto& [g, c] : ga) {
    ca += c;
    const auto it = gb.find(g);
    if (it != gb.end()) overlap += std::min(c, it->second);
  }
  for (const auto& [g, c] : gb) cb += c;
  return f_measure(overlap, ca, cb);
}

inline double diversity_double_loop(const std::vector<std::string>& s) {
  double sum = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    for (std::size_t j = 0; j < s.size(); ++j) {
      if (i != j) sum += rouge_l(s[i], s[j]);
    }
  }
  const double n = static_cast<double>(s.size());
  return 1.0 - sum / (n * (n - 1));
}

// ---- rankings --------------------------------------------------------------

inline long footrule(const std::vector<int>& perm_a, const std::vector<int>& perm_b) {
  // position arrays: pos[item] = index
  long d = 0;
  for (std::size_t i = 0; i < perm_a.size(); ++i) d += std::labs(static_cast<long>(perm_a[i]) - perm_b[i]);
  return d;
}

// Minimum total footrule distance over every permutation. Rankings are given
// as position arrays (rankings[r][item] = position).
inline long brute_force_footrule(const std::vector<std::vector<int>>& positions, std::size_t n) {
  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  long best = -1;
  do {
    // perm[p] = item at position p -> position array
    std::vector<int> pos(n);
    for (std::size_t p = 0; p < n; ++p) pos[static_cast<std::size_t>(perm[p])] = static_cast<int>(p);
    long cost = 0;
    for (const auto& r : positions) cost += footrule(pos, r);
    if (best < 0 || cost < best) best = cost;
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

// ---- statistics --------------------------------------------------------------

inline std::vector<double> average_ranks(const std::vector<double>& v) {
  std::vector<double> r(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    double less = 0, equal = 0;
    for (double w : v) {
      if (w < v[i]) ++less;
      if (w == v[i]) ++equal;
    }
    r[i] = less + (equal + 1) / 2;
  }
  return r;
}

// Two-sided p over every sign assignment of the ranked non-zero differences.
inline double wilcoxon_enumeration_p(const std::vector<double>& x, const std::vector<double>& y) {
  std::vector<double> mag, sign;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = x[i] - y[i];
    if (d != 0) {
      mag.push_back(std::abs(d));
      sign.push_back(d > 0 ? 1 : -1);
    }
  }
  const auto ranks = average_ranks(mag);
  double observed = 0;
  for (std::size_t i = 0; i < ranks.size(); ++i) {
    if (sign[i] > 0) observed += ranks[i];
  }
  const std::size_t n = ranks.size();
  double le = 0, ge = 0;
  const std::uint64_t total = std::uint64_t{1} << n;
  for (std::uint64_t mask = 0; mask < total; ++mask) {
    double w = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (mask >> i & 1) w += ranks[i];
    }
    if (w <= observed + 1e-9) ++le;
    if (w >= observed - 1e-9) ++ge;
  }
  return std::min(1.0, 2 * std::min(le, ge) / static_cast<double>(total));
}

// Two-sided p over every way of labelling n1 of the pooled values as `a`.
inline double mann_whitney_enumeration_p(const std::vector<double>& a, const std::vector<double>& b) {
  std::vector<double> pooled(a);
  pooled.insert(pooled.end(), b.begin(), b.end());
  const std::size_t n = pooled.size(), n1 = a.size();
  auto u_of = [&](const std::vector<bool>& in_a) {
    double u = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (!in_a[i]) continue;
      for (std::size_t j = 0; j < n; ++j) {
        if (in_a[j]) continue;
        u += pooled[i] > pooled[j] ? 1.0 : pooled[i] == pooled[j] ? 0.5 : 0.0;
      }
    }
    return u;
  };
  std::vector<bool> first(n, false);
  std::fill(first.begin(), first.begin() + static_cast<std::ptrdiff_t>(n1), true);
  const double observed = u_of(first);
  double le = 0, ge = 0, total = 0;
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << n); ++mask) {
    if (static_cast<std::size_t>(__builtin_popcountll(mask)) != n1) continue;
    std::vector<bool> in_a(n);
    for (std::size_t i = 0; i < n; ++i) in_a[i] = mask >> i & 1;
    const double u = u_of(in_a);
    ++total;
    if (u <= observed + 1e-9) ++le;
    if (u >= observed - 1e-9) ++ge;
  }
  return std::min(1.0, 2 * std::min(le, ge) / total);
}

// Tie-corrected Friedman statistic from the textbook formula.
inline double friedman_statistic(const std::vector<std::vector<double>>& rows) {
  const double n = static_cast<double>(rows.size());
  const double k = static_cast<double>(rows.front().size());
  std::vector<double> rsum(rows.front().size(), 0.0);
  double ties = 0;
  for (const auto& row : rows) {
    const auto r = average_ranks(row);
    for (std::size_t j = 0; j < r.size(); ++j) rsum[j] += r[j];
    std::map<double, int> groups;
    for (double v : row) groups[v]++;
    for (const auto& [v, t] : groups) ties += static_cast<double>(t) * t * t - t;
  }
  double sq = 0;
  for (double r : rsum) sq += r * r;
  const double chi = 12.0 / (n * k * (k + 1)) * sq - 3 * n * (k + 1);
  return chi / (1 - ties / (n * (k * k * k - k)));
}

}  // namespace oracle
