#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

namespace cspeech::stats {

enum class Alternative { TwoSided, Less, Greater };
// Auto: exact below the size threshold of each test, normal approximation above.
enum class PMethod { Auto, Exact, Normal };

struct TestResult {
  std::string test;
  std::string comparison;
  double statistic = 0.0;
  double p = 1.0;
  double p_corrected = 1.0;
  std::optional<double> effect;
  std::optional<double> ci_low;
  std::optional<double> ci_high;
  std::size_t n = 0;
  std::string method;  // "exact", "normal", "chi-square", ...
  std::string note;
};

// Participants x conditions. Rows are complete by construction.
struct PairedMatrix {
  std::string question;
  std::vector<std::string> conditions;
  std::vector<std::string> participants;
  Eigen::MatrixXd data;

  Eigen::Index column(std::string_view condition) const;
};

double normal_cdf(double z);
double normal_quantile(double p);

// Average ranks (1-based) plus the tie term sum(t^3 - t) over tie groups.
std::vector<double> midranks(std::span<const double> v, double* tie_term = nullptr);

// ---- Wilcoxon signed-rank ---------------------------------------------------------

struct SignedRank {
  double w_plus = 0.0;
  double w_minus = 0.0;
  std::size_t n = 0;  // pairs with non-zero difference
  double tie_term = 0.0;
  std::vector<int> doubled_ranks;  // 2 * midrank of |d|, integral
};

// Drops zero differences, ranks |x - y|. Throws StatsError on size mismatch
// or when every difference is zero.
SignedRank signed_ranks(std::span<const double> x, std::span<const double> y);

// Exact null distribution of W+ over all 2^n sign assignments given the
// (possibly tied) ranks; returns P(W+ <= w), P(W+ >= w).
std::pair<double, double> wilcoxon_exact_tails(std::span<const int> doubled_ranks, double w_plus);

inline constexpr std::size_t kWilcoxonExactMax = 20;

// x - y is the tested difference: Greater means x tends to exceed y.
TestResult wilcoxon_signed_rank(std::span<const double> x, std::span<const double> y,
                                Alternative alt = Alternative::TwoSided, PMethod method = PMethod::Auto);

// ---- Mann-Whitney U -----------------------------------------------------------------

// U_a = #{(i, j) : a_i > b_j} + 0.5 #{a_i == b_j}. U_a + U_b = n1 * n2.
double mann_whitney_u_statistic(std::span<const double> a, std::span<const double> b);

// Exact P(U_a <= u), P(U_a >= u) over all C(n1 + n2, n1) arrangements of the
// pooled midranks.
std::pair<double, double> mann_whitney_exact_tails(std::span<const double> a, std::span<const double> b, double u);

inline constexpr std::size_t kMannWhitneyExactMax = 14;

// Statistic is U_a. Greater means a tends to exceed b.
TestResult mann_whitney_u(std::span<const double> a, std::span<const double> b,
                          Alternative alt = Alternative::TwoSided, PMethod method = PMethod::Auto);

// ---- Friedman ---------------------------------------------------------------------------

// Tie-corrected chi-square over within-row ranks, k - 1 degrees of freedom.
// Needs k >= 3 and n >= 2. All-constant rows give statistic 0 and p 1.
TestResult friedman(const PairedMatrix& m);

// ---- effect sizes -------------------------------------------------------------------------

struct BootstrapOptions {
  std::size_t resamples = 10000;
  double confidence = 0.95;
  std::uint64_t seed = 0;
  std::size_t workers = 1;
};

struct EffectEstimate {
  double r = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  std::size_t resamples_used = 0;  // resamples with a defined statistic
};

// (W+ - W-) / (W+ + W-). Throws StatsError when every difference is zero.
double matched_rank_biserial(std::span<const double> x, std::span<const double> y);
// 2 U_a / (n1 n2) - 1: +1 when every a exceeds every b.
double glass_rank_biserial(std::span<const double> a, std::span<const double> b);

// Point estimate plus percentile bootstrap CI. Pairs (or each sample) are
// resampled with replacement; resamples where the statistic is undefined are
// skipped. Results depend only on the seed, never on `workers`.
EffectEstimate rank_biserial_matched(std::span<const double> x, std::span<const double> y,
                                     const BootstrapOptions& options = {});
EffectEstimate glass_rank_biserial_ci(std::span<const double> a, std::span<const double> b,
                                      const BootstrapOptions& options = {});

// Linear-interpolation quantile (type 7) of sorted data.
double quantile_sorted(std::span<const double> sorted, double q);

// ---- corrections and rendering ---------------------------------------------------------------

// min(1, m p). Throws StatsError when m < pvals.size().
std::vector<double> bonferroni(std::span<const double> pvals, std::size_t m);

// "***" p < 0.01, "**" p < 0.05, "*" p < 0.1, else "".
std::string_view stars(double p);

// ---- power ------------------------------------------------------------------------------------

enum class PowerTest { WilcoxonSignedRank, MannWhitney };

struct PowerOptions {
  PowerTest test = PowerTest::WilcoxonSignedRank;
  double power = 0.85;
  double alpha = 0.05;
  std::size_t replicates = 5000;
  std::uint64_t seed = 0;
  std::size_t max_n = 200000;
  std::size_t workers = 1;
};

struct PowerResult {
  std::size_t n = 0;  // pairs (Wilcoxon) or per-group size (Mann-Whitney)
  double achieved_power = 0.0;
  std::size_t candidates_evaluated = 0;
  double shift = 0.0;  // location shift of the simulated normal model
};

// Location shift in standard-normal units whose population rank-biserial is r.
double shift_for_effect(double r, PowerTest test);

// Fraction of simulated two-sided tests at level alpha that reject.
double simulated_power(std::size_t n, double shift, const PowerOptions& options);

// Smallest n reaching the target power under a normal shift model
// (doubling, then bisection). Throws StatsError if max_n is not enough.
PowerResult power_sample_size(double r, const PowerOptions& options);

}  // namespace cspeech::stats
