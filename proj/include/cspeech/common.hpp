#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <random>
#include <stdexcept>
#include <type_traits>
#include <string>
#include <string_view>
#include <vector>

namespace cspeech {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class CorpusError : public Error {
 public:
  using Error::Error;
};

class GenerationError : public Error {
 public:
  using Error::Error;
};

class EndpointError : public GenerationError {
 public:
  using GenerationError::GenerationError;
};

class MetricError : public Error {
 public:
  using Error::Error;
};

class RankingError : public Error {
 public:
  using Error::Error;
};

class StatsError : public Error {
 public:
  using Error::Error;
};

class SurveyError : public Error {
 public:
  // HTTP-ish status the service layer maps this error to.
  SurveyError(int status, const std::string& what) : Error(what), status_(status) {}
  int status() const { return status_; }

 private:
  int status_;
};

class PipelineError : public Error {
 public:
  using Error::Error;
};

// Seconds since the epoch. Injected wherever a component stamps time so runs
// can be replayed byte-for-byte.
using Clock = std::function<std::int64_t()>;
Clock system_clock();
Clock fixed_clock(std::int64_t epoch_seconds);

// ---- hashing and seed derivation ------------------------------------------

// 64-bit FNV-1a. Stable across platforms and runs, unlike std::hash.
std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t basis = 0xcbf29ce484222325ULL);
std::uint64_t splitmix64(std::uint64_t x);
std::string hex64(std::uint64_t v);

// Mixes a master seed with any number of string/integer components.
template <typename... Parts>
std::uint64_t derive_seed(std::uint64_t master, const Parts&... parts) {
  std::uint64_t h = splitmix64(master);
  auto mix = [&h](const auto& part) {
    if constexpr (std::is_integral_v<std::decay_t<decltype(part)>>) {
      h = splitmix64(h ^ static_cast<std::uint64_t>(part));
    } else {
      h = splitmix64(h ^ fnv1a64(std::string_view(part)));
    }
  };
  (mix(parts), ...);
  return h;
}

using Rng = std::mt19937_64;

// Uniform integer in [0, n) by rejection; identical on every standard library,
// which std::uniform_int_distribution does not guarantee.
std::uint64_t uniform_index(Rng& rng, std::uint64_t n);
// Uniform double in [0, 1) from the top 53 bits.
double uniform_unit(Rng& rng);
// Standard normal via Box-Muller (portable, unlike std::normal_distribution).
double standard_normal(Rng& rng);

// Partial Fisher-Yates: the first k entries of the result are a uniform
// sample without replacement, in selection order.
template <typename T>
void partial_shuffle(std::vector<T>& v, std::size_t k, Rng& rng) {
  const std::size_t n = v.size();
  for (std::size_t i = 0; i < k && i + 1 < n; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(uniform_index(rng, n - i));
    std::swap(v[i], v[j]);
  }
}

// ---- strings ----------------------------------------------------------------

std::string_view trim(std::string_view s);
std::vector<std::string> split(std::string_view s, char delim);
std::string join(const std::vector<std::string>& parts, std::string_view sep);
bool starts_with(std::string_view s, std::string_view prefix);

// Fixed-precision rendering used in every exported table so outputs are
// byte-stable.
std::string format_fixed(double v, int precision = 6);

// ---- delimiter-separated values -------------------------------------------

// Quotes a field only when it contains the delimiter, a quote or a newline.
std::string csv_escape(std::string_view field, char delim = ',');
void write_csv_row(std::ostream& out, const std::vector<std::string>& fields, char delim = ',');
// Reads one logical record (quoted fields may span lines). Returns false at EOF.
bool read_csv_row(std::istream& in, std::vector<std::string>& fields, char delim = ',');

// ---- files ----------------------------------------------------------------

std::string read_file(const std::string& path);
// Writes to a sibling temp file and renames it into place.
void write_file_atomic(const std::string& path, std::string_view contents);

// ---- parallelism ----------------------------------------------------------

// Runs body(i) for i in [0, n) on up to `workers` threads. Exceptions from
// the body are rethrown on the calling thread (first one wins).
void parallel_for(std::size_t n, std::size_t workers, const std::function<void(std::size_t)>& body);
std::size_t default_workers();

}  // namespace cspeech
