#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <limits>
#include <numbers>
#include <string_view>

namespace v2x {

// SplitMix64 output function.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

constexpr std::uint64_t hash_combine(std::uint64_t h, std::uint64_t v) noexcept {
  return mix64(h ^ mix64(v + kGolden));
}

constexpr std::uint64_t hash_name(std::string_view name) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : name) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return mix64(h);
}

/// Counter-based random stream.
///
/// A stream is identified by a 64-bit key derived from the master seed and a
/// path of names or integers. Draw i is mix64(key + (i + 1) * golden), so any
/// draw can be evaluated out of order and two streams with different keys never
/// share state. The simulator keys fading and decode draws by
/// (link, block, attempt) which gives common random numbers across technology
/// modes.
class RngStream {
 public:
  using result_type = std::uint64_t;

  RngStream() = default;
  explicit RngStream(std::uint64_t master_seed)
      : seed_(master_seed), key_(mix64(master_seed ^ 0x5851f42d4c957f2dULL)) {}
  RngStream(std::uint64_t master_seed, std::string_view name)
      : RngStream(RngStream(master_seed).substream(name)) {}

  [[nodiscard]] RngStream substream(std::string_view name) const {
    return RngStream(seed_, hash_combine(key_, hash_name(name)));
  }
  [[nodiscard]] RngStream substream(std::initializer_list<std::uint64_t> path) const {
    std::uint64_t k = key_;
    for (auto v : path) k = hash_combine(k, v);
    return RngStream(seed_, k);
  }

  [[nodiscard]] std::uint64_t master_seed() const noexcept { return seed_; }
  [[nodiscard]] std::uint64_t key() const noexcept { return key_; }
  [[nodiscard]] std::uint64_t position() const noexcept { return counter_; }

  [[nodiscard]] std::uint64_t at(std::uint64_t index) const noexcept {
    return mix64(key_ + (index + 1) * kGolden);
  }
  // [0, 1)
  [[nodiscard]] double uniform_at(std::uint64_t index) const noexcept {
    return static_cast<double>(at(index) >> 11) * 0x1.0p-53;
  }
  // (0, 1]
  [[nodiscard]] double uniform_open_at(std::uint64_t index) const noexcept {
    return static_cast<double>((at(index) >> 11) + 1) * 0x1.0p-53;
  }

  std::uint64_t operator()() noexcept { return at(counter_++); }
  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept {
    return std::numeric_limits<result_type>::max();
  }

  double uniform() noexcept { return uniform_at(counter_++); }
  double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }
  double uniform_open() noexcept { return uniform_open_at(counter_++); }
  bool bernoulli(double p) noexcept { return uniform() < p; }

  // Uniform integer in [lo, hi].
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) noexcept {
    const auto span = static_cast<std::uint64_t>(hi - lo) + 1;
    if (span == 0) return static_cast<std::int64_t>((*this)());
    // Lemire's multiply-shift; the bias is below 2^-40 for the spans used here.
    const auto r = static_cast<unsigned __int128>((*this)()) * span;
    return lo + static_cast<std::int64_t>(r >> 64);
  }

  double normal() noexcept {
    const double u = uniform_open();
    const double v = uniform();
    return std::sqrt(-2.0 * std::log(u)) * std::cos(2.0 * std::numbers::pi * v);
  }

 private:
  RngStream(std::uint64_t seed, std::uint64_t key) : seed_(seed), key_(key) {}

  std::uint64_t seed_ = 0;
  std::uint64_t key_ = mix64(0x5851f42d4c957f2dULL);
  std::uint64_t counter_ = 0;
};

}  // namespace v2x
