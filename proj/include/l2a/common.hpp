#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace l2a {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// File could not be opened, read or written.
class IoError : public Error {
 public:
  using Error::Error;
};

/// Malformed container header, truncated payload, schema violation.
class FormatError : public Error {
 public:
  using Error::Error;
};

/// A value lies outside the domain the operation accepts.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Tensor, vector or parameter shapes do not line up.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Invalid configuration or world specification.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Unknown sample or class id.
class NotFoundError : public Error {
 public:
  using Error::Error;
};

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Derives an independent stream seed from a parent seed and a stream label.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  return splitmix64(splitmix64(seed) ^ splitmix64(stream + 0x632BE59BD9B4E019ULL));
}

inline std::uint64_t derive_seed(std::uint64_t seed, std::string_view label) {
  // FNV-1a over the label, then mixed with the seed.
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (char ch : label) {
    h ^= static_cast<unsigned char>(ch);
    h *= 0x100000001B3ULL;
  }
  return derive_seed(seed, h);
}

template <typename... Rest>
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t first, std::uint64_t second, Rest... rest) {
  return derive_seed(derive_seed(seed, first), second, static_cast<std::uint64_t>(rest)...);
}

template <typename... Rest>
std::uint64_t derive_seed(std::uint64_t seed, std::string_view label, std::uint64_t first, Rest... rest) {
  return derive_seed(derive_seed(seed, label), first, static_cast<std::uint64_t>(rest)...);
}

/// Portable random stream: mt19937_64 output is fixed by the standard, and the
/// conversions below avoid the implementation-defined std distributions.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform in [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n). n must be positive.
  std::uint64_t uniform_index(std::uint64_t n) {
    // Rejection sampling removes modulo bias.
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x = engine_();
    while (x >= limit) x = engine_();
    return x % n;
  }

  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * 3.14159265358979323846 * u2;
    spare_ = r * std::sin(angle);
    has_spare_ = true;
    return r * std::cos(angle);
  }

  bool bernoulli(double p) { return uniform() < p; }

  template <typename Container>
  void shuffle(Container& items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(uniform_index(i));
      using std::swap;
      swap(items[i - 1], items[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};


inline constexpr double kSimplexTolerance = 1e-6;

inline bool is_simplex(std::span<const double> v, double tol = kSimplexTolerance) {
  if (v.empty()) return false;
  double sum = 0.0;
  for (double x : v) {
    if (!std::isfinite(x) || x < -tol) return false;
    sum += x;
  }
  return std::fabs(sum - 1.0) <= tol;
}

inline std::vector<double> one_hot(std::size_t index, std::size_t size) {
  if (index >= size) throw DomainError("one-hot index out of range");
  std::vector<double> v(size, 0.0);
  v[index] = 1.0;
  return v;
}

}  // namespace l2a
