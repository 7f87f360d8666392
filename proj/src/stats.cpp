#include "cspeech/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/normal.hpp>

#include "cspeech/common.hpp"

namespace cspeech::stats {
namespace {

constexpr std::size_t kBootstrapChunk = 250;

double clamp_p(double p) { return std::clamp(p, 0.0, 1.0); }

double tail_p(double lower, double upper, Alternative alt) {
  switch (alt) {
    case Alternative::Less:
      return clamp_p(lower);
    case Alternative::Greater:
      return clamp_p(upper);
    case Alternative::TwoSided:
      return clamp_p(2.0 * std::min(lower, upper));
  }
  return 1.0;
}

// Normal approximation with 0.5 continuity correction.
double normal_p(double stat, double mean, double var, Alternative alt) {
  if (var <= 0.0) return 1.0;
  const double sd = std::sqrt(var);
  const double diff = stat - mean;
  switch (alt) {
    case Alternative::Less:
      return clamp_p(normal_cdf((diff + 0.5) / sd));
    case Alternative::Greater:
      return clamp_p(1.0 - normal_cdf((diff - 0.5) / sd));
    case Alternative::TwoSided: {
      const double z = std::max(0.0, std::abs(diff) - 0.5) / sd;
      return clamp_p(std::erfc(z / std::numbers::sqrt2));
    }
  }
  return 1.0;
}

std::vector<double> run_bootstrap(std::size_t resamples, std::uint64_t seed, std::size_t workers,
                                  const std::function<std::optional<double>(Rng&)>& draw) {
  const std::size_t chunks = (resamples + kBootstrapChunk - 1) / kBootstrapChunk;
  std::vector<std::vector<double>> per_chunk(chunks);
  parallel_for(chunks, workers, [&](std::size_t c) {
    Rng rng(derive_seed(seed, "bootstrap", static_cast<std::uint64_t>(c)));
    const std::size_t count = std::min(kBootstrapChunk, resamples - c * kBootstrapChunk);
    per_chunk[c].reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
      if (const auto v = draw(rng)) per_chunk[c].push_back(*v);
    }
  });
  std::vector<double> all;
  for (auto& chunk : per_chunk) all.insert(all.end(), chunk.begin(), chunk.end());
  return all;
}

EffectEstimate finish(double r, std::vector<double> draws, double confidence) {
  EffectEstimate e;
  e.r = r;
  e.resamples_used = draws.size();
  if (draws.empty()) {
    e.ci_low = e.ci_high = r;
    return e;
  }
  std::sort(draws.begin(), draws.end());
  const double tail = (1.0 - confidence) / 2.0;
  e.ci_low = quantile_sorted(draws, tail);
  e.ci_high = quantile_sorted(draws, 1.0 - tail);
  return e;
}

void check_bootstrap(const BootstrapOptions& o) {
  if (o.resamples == 0) throw StatsError("bootstrap needs at least one resample");
  if (!(o.confidence > 0.0 && o.confidence < 1.0)) throw StatsError("confidence must lie in (0, 1)");
}

}  // namespace

Eigen::Index PairedMatrix::column(std::string_view condition) const {
  for (std::size_t i = 0; i < conditions.size(); ++i) {
    if (conditions[i] == condition) return static_cast<Eigen::Index>(i);
  }
  throw StatsError("matrix for '" + question + "' has no condition '" + std::string(condition) + "'");
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw StatsError("normal quantile needs p in (0, 1)");
  return boost::math::quantile(boost::math::normal(), p);
}

std::vector<double> midranks(std::span<const double> v, double* tie_term) {
  const std::size_t n = v.size();
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&v](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> ranks(n);
  double ties = 0.0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j + 1 < n && v[idx[j + 1]] == v[idx[i]]) ++j;
    const double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[idx[k]] = avg;
    const double t = static_cast<double>(j - i + 1);
    ties += t * t * t - t;
    i = j + 1;
  }
  if (tie_term) *tie_term = ties;
  return ranks;
}

SignedRank signed_ranks(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw StatsError("paired samples differ in length");
  std::vector<double> d;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i] != y[i]) d.push_back(x[i] - y[i]);
  }
  if (d.empty()) throw StatsError("all paired differences are zero");
  std::vector<double> mag(d.size());
  std::transform(d.begin(), d.end(), mag.begin(), [](double v) { return std::abs(v); });
  SignedRank s;
  const auto ranks = midranks(mag, &s.tie_term);
  s.n = d.size();
  for (std::size_t i = 0; i < d.size(); ++i) {
    (d[i] > 0 ? s.w_plus : s.w_minus) += ranks[i];
    s.doubled_ranks.push_back(static_cast<int>(std::lround(2.0 * ranks[i])));
  }
  return s;
}

std::pair<double, double> wilcoxon_exact_tails(std::span<const int> doubled_ranks, double w_plus) {
  const int total = std::accumulate(doubled_ranks.begin(), doubled_ranks.end(), 0);
  // prob[s]: probability that the doubled positive-rank sum equals s.
  std::vector<double> prob(static_cast<std::size_t>(total) + 1, 0.0);
  prob[0] = 1.0;
  int reach = 0;
  for (int r : doubled_ranks) {
    reach += r;
    for (int s = reach; s >= 0; --s) {
      const double with = s >= r ? prob[static_cast<std::size_t>(s - r)] : 0.0;
      prob[static_cast<std::size_t>(s)] = 0.5 * prob[static_cast<std::size_t>(s)] + 0.5 * with;
    }
  }
  const long target = std::lround(2.0 * w_plus);
  double lower = 0.0, upper = 0.0;
  for (int s = 0; s <= total; ++s) {
    if (s <= target) lower += prob[static_cast<std::size_t>(s)];
    if (s >= target) upper += prob[static_cast<std::size_t>(s)];
  }
  return {std::min(lower, 1.0), std::min(upper, 1.0)};
}

TestResult wilcoxon_signed_rank(std::span<const double> x, std::span<const double> y, Alternative alt,
                                PMethod method) {
  const SignedRank s = signed_ranks(x, y);
  TestResult r;
  r.test = "wilcoxon";
  r.statistic = s.w_plus;
  r.n = s.n;
  if (s.n < x.size()) r.note = std::to_string(x.size() - s.n) + " zero differences dropped";
  const bool exact = method == PMethod::Exact || (method == PMethod::Auto && s.n <= kWilcoxonExactMax);
  if (exact) {
    const auto [lower, upper] = wilcoxon_exact_tails(s.doubled_ranks, s.w_plus);
    r.p = tail_p(lower, upper, alt);
    r.method = "exact";
  } else {
    const double n = static_cast<double>(s.n);
    const double mean = n * (n + 1.0) / 4.0;
    const double var = n * (n + 1.0) * (2.0 * n + 1.0) / 24.0 - s.tie_term / 48.0;
    r.p = normal_p(s.w_plus, mean, var, alt);
    r.method = "normal";
  }
  r.p_corrected = r.p;
  return r;
}

double mann_whitney_u_statistic(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw StatsError("Mann-Whitney needs two non-empty samples");
  std::vector<double> pooled(a.begin(), a.end());
  pooled.insert(pooled.end(), b.begin(), b.end());
  const auto ranks = midranks(pooled);
  const double ra = std::accumulate(ranks.begin(), ranks.begin() + static_cast<std::ptrdiff_t>(a.size()), 0.0);
  const double n1 = static_cast<double>(a.size());
  return ra - n1 * (n1 + 1.0) / 2.0;
}

std::pair<double, double> mann_whitney_exact_tails(std::span<const double> a, std::span<const double> b, double u) {
  if (a.empty() || b.empty()) throw StatsError("Mann-Whitney needs two non-empty samples");
  std::vector<double> pooled(a.begin(), a.end());
  pooled.insert(pooled.end(), b.begin(), b.end());
  const auto ranks = midranks(pooled);
  std::vector<int> doubled(ranks.size());
  std::transform(ranks.begin(), ranks.end(), doubled.begin(), [](double r) { return static_cast<int>(std::lround(2 * r)); });
  const std::size_t n1 = a.size();
  const int total = std::accumulate(doubled.begin(), doubled.end(), 0);
  // ways[k][s]: number of k-subsets with doubled rank sum s.
  std::vector<std::vector<double>> ways(n1 + 1, std::vector<double>(static_cast<std::size_t>(total) + 1, 0.0));
  ways[0][0] = 1.0;
  for (std::size_t i = 0; i < doubled.size(); ++i) {
    const int r = doubled[i];
    for (std::size_t k = std::min(n1, i + 1); k >= 1; --k) {
      for (int s = total; s >= r; --s) {
        ways[k][static_cast<std::size_t>(s)] += ways[k - 1][static_cast<std::size_t>(s - r)];
      }
    }
  }
  const double n1d = static_cast<double>(n1);
  const long target = std::lround(2.0 * u + n1d * (n1d + 1.0));
  double lower = 0.0, upper = 0.0, all = 0.0;
  for (int s = 0; s <= total; ++s) {
    const double w = ways[n1][static_cast<std::size_t>(s)];
    all += w;
    if (s <= target) lower += w;
    if (s >= target) upper += w;
  }
  return {lower / all, upper / all};
}

TestResult mann_whitney_u(std::span<const double> a, std::span<const double> b, Alternative alt, PMethod method) {
  TestResult r;
  r.test = "mann-whitney";
  r.statistic = mann_whitney_u_statistic(a, b);
  r.n = a.size() + b.size();
  const bool exact = method == PMethod::Exact || (method == PMethod::Auto && r.n <= kMannWhitneyExactMax);
  if (exact) {
    const auto [lower, upper] = mann_whitney_exact_tails(a, b, r.statistic);
    r.p = tail_p(lower, upper, alt);
    r.method = "exact";
  } else {
    std::vector<double> pooled(a.begin(), a.end());
    pooled.insert(pooled.end(), b.begin(), b.end());
    double ties = 0.0;
    midranks(pooled, &ties);
    const double n1 = static_cast<double>(a.size());
    const double n2 = static_cast<double>(b.size());
    const double n = n1 + n2;
    const double var = n1 * n2 / 12.0 * ((n + 1.0) - ties / (n * (n - 1.0)));
    r.p = normal_p(r.statistic, n1 * n2 / 2.0, var, alt);
    r.method = "normal";
  }
  r.p_corrected = r.p;
  return r;
}

TestResult friedman(const PairedMatrix& m) {
  const auto n = m.data.rows();
  const auto k = m.data.cols();
  if (k < 3) throw StatsError("Friedman test needs at least 3 conditions");
  if (n < 2) throw StatsError("Friedman test needs at least 2 rows");
  Eigen::VectorXd rank_sums = Eigen::VectorXd::Zero(k);
  double ties = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    std::vector<double> row(static_cast<std::size_t>(k));
    for (Eigen::Index j = 0; j < k; ++j) row[static_cast<std::size_t>(j)] = m.data(i, j);
    double t = 0.0;
    const auto ranks = midranks(row, &t);
    ties += t;
    for (Eigen::Index j = 0; j < k; ++j) rank_sums[j] += ranks[static_cast<std::size_t>(j)];
  }
  const double nd = static_cast<double>(n);
  const double kd = static_cast<double>(k);
  TestResult r;
  r.test = "friedman";
  r.n = static_cast<std::size_t>(n);
  r.method = "chi-square";
  const double correction = 1.0 - ties / (nd * (kd * kd * kd - kd));
  if (correction <= 1e-12) {
    r.statistic = 0.0;
    r.p = r.p_corrected = 1.0;
    r.note = "every row is constant";
    return r;
  }
  const double q = 12.0 / (nd * kd * (kd + 1.0)) * rank_sums.squaredNorm() - 3.0 * nd * (kd + 1.0);
  r.statistic = std::max(0.0, q / correction);
  r.p = r.p_corrected =
      clamp_p(boost::math::cdf(boost::math::complement(boost::math::chi_squared(kd - 1.0), r.statistic)));
  return r;
}

double matched_rank_biserial(std::span<const double> x, std::span<const double> y) {
  const SignedRank s = signed_ranks(x, y);
  return (s.w_plus - s.w_minus) / (s.w_plus + s.w_minus);
}

double glass_rank_biserial(std::span<const double> a, std::span<const double> b) {
  const double u = mann_whitney_u_statistic(a, b);
  return 2.0 * u / (static_cast<double>(a.size()) * static_cast<double>(b.size())) - 1.0;
}

double quantile_sorted(std::span<const double> sorted, double q) {
  if (sorted.empty()) throw StatsError("quantile of empty data");
  const double h = (static_cast<double>(sorted.size()) - 1.0) * std::clamp(q, 0.0, 1.0);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

EffectEstimate rank_biserial_matched(std::span<const double> x, std::span<const double> y,
                                     const BootstrapOptions& options) {
  check_bootstrap(options);
  const double r = matched_rank_biserial(x, y);
  const std::size_t n = x.size();
  auto draws = run_bootstrap(options.resamples, options.seed, options.workers, [&](Rng& rng) -> std::optional<double> {
    std::vector<double> bx(n), by(n);
    bool any = false;
    for (std::size_t i = 0; i < n; ++i) {
      const auto j = static_cast<std::size_t>(uniform_index(rng, n));
      bx[i] = x[j];
      by[i] = y[j];
      any = any || bx[i] != by[i];
    }
    if (!any) return std::nullopt;
    return matched_rank_biserial(bx, by);
  });
  return finish(r, std::move(draws), options.confidence);
}

EffectEstimate glass_rank_biserial_ci(std::span<const double> a, std::span<const double> b,
                                      const BootstrapOptions& options) {
  check_bootstrap(options);
  const double r = glass_rank_biserial(a, b);
  auto draws = run_bootstrap(options.resamples, options.seed, options.workers, [&](Rng& rng) -> std::optional<double> {
    std::vector<double> ba(a.size()), bb(b.size());
    for (auto& v : ba) v = a[static_cast<std::size_t>(uniform_index(rng, a.size()))];
    for (auto& v : bb) v = b[static_cast<std::size_t>(uniform_index(rng, b.size()))];
    return glass_rank_biserial(ba, bb);
  });
  return finish(r, std::move(draws), options.confidence);
}

std::vector<double> bonferroni(std::span<const double> pvals, std::size_t m) {
  if (m < pvals.size()) throw StatsError("Bonferroni m is smaller than the number of p-values");
  std::vector<double> out(pvals.size());
  std::transform(pvals.begin(), pvals.end(), out.begin(),
                 [m](double p) { return std::min(1.0, static_cast<double>(m) * p); });
  return out;
}

std::string_view stars(double p) {
  if (p < 0.01) return "***";
  if (p < 0.05) return "**";
  if (p < 0.1) return "*";
  return "";
}

double shift_for_effect(double r, PowerTest test) {
  if (!(r > 0.0 && r < 1.0)) throw StatsError("effect size must lie in (0, 1)");
  const double z = normal_quantile((1.0 + r) / 2.0);
  // Matched: r = 2 P(D_i + D_j > 0) - 1 with D ~ N(delta, 1).
  // Independent: r = 2 P(A > B) - 1 with A ~ N(delta, 1), B ~ N(0, 1).
  return test == PowerTest::WilcoxonSignedRank ? z / std::numbers::sqrt2 : z * std::numbers::sqrt2;
}

double simulated_power(std::size_t n, double shift, const PowerOptions& options) {
  if (n == 0) return 0.0;
  const std::size_t chunk = 250;
  const std::size_t chunks = (options.replicates + chunk - 1) / chunk;
  std::vector<std::size_t> rejections(chunks, 0);
  parallel_for(chunks, options.workers, [&](std::size_t c) {
    Rng rng(derive_seed(options.seed, "power", static_cast<std::uint64_t>(n), static_cast<std::uint64_t>(c)));
    const std::size_t count = std::min(chunk, options.replicates - c * chunk);
    std::vector<double> a(n), b(n);
    for (std::size_t rep = 0; rep < count; ++rep) {
      double p = 1.0;
      if (options.test == PowerTest::WilcoxonSignedRank) {
        for (auto& v : a) v = shift + standard_normal(rng);
        std::fill(b.begin(), b.end(), 0.0);
        if (std::all_of(a.begin(), a.end(), [](double v) { return v == 0.0; })) continue;
        p = wilcoxon_signed_rank(a, b).p;
      } else {
        for (auto& v : a) v = shift + standard_normal(rng);
        for (auto& v : b) v = standard_normal(rng);
        p = mann_whitney_u(a, b).p;
      }
      if (p < options.alpha) ++rejections[c];
    }
  });
  const auto total = std::accumulate(rejections.begin(), rejections.end(), std::size_t{0});
  return static_cast<double>(total) / static_cast<double>(options.replicates);
}

PowerResult power_sample_size(double r, const PowerOptions& options) {
  if (!(options.power > 0.0 && options.power < 1.0)) throw StatsError("power must lie in (0, 1)");
  if (!(options.alpha > 0.0 && options.alpha < 1.0)) throw StatsError("alpha must lie in (0, 1)");
  if (options.replicates == 0) throw StatsError("power simulation needs replicates");
  PowerResult out;
  out.shift = shift_for_effect(r, options.test);
  auto power_at = [&](std::size_t n) {
    ++out.candidates_evaluated;
    return simulated_power(n, out.shift, options);
  };
  std::size_t lo = 1;  // known to fall short
  std::size_t hi = 2;
  double hi_power = power_at(hi);
  while (hi_power < options.power) {
    if (hi >= options.max_n) {
      throw StatsError("power " + format_fixed(options.power, 2) + " not reached within n = " +
                       std::to_string(options.max_n));
    }
    lo = hi;
    hi = std::min(hi * 2, options.max_n);
    hi_power = power_at(hi);
  }
  while (hi - lo > 1) {
    const std::size_t mid = lo + (hi - lo) / 2;
    const double p = power_at(mid);
    if (p >= options.power) {
      hi = mid;
      hi_power = p;
    } else {
      lo = mid;
    }
  }
  out.n = hi;
  out.achieved_power = hi_power;
  return out;
}

}  // namespace cspeech::stats
