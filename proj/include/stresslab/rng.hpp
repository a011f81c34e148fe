#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <string_view>

namespace stresslab {

/// SplitMix64 finaliser; used to fold several identifiers into one key.
constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t combine_keys(std::uint64_t a, std::uint64_t b) {
  return mix64(a ^ mix64(b + 0x632BE59BD9B4E019ULL));
}

/// Folds an arbitrary string (e.g. a hex digest) into a 64-bit key.
std::uint64_t key_from_string(std::string_view s);

/// Philox4x32-10 block function.
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr,
                                        std::array<std::uint32_t, 2> key);

/// Counter-based random stream: the n-th draw of stream `id` under `key` is a pure
/// function of (key, id, n), so streams can be consumed in any order or thread.
class CounterRng {
 public:
  CounterRng(std::uint64_t key, std::uint64_t stream_id) : key_(key), stream_(stream_id) {}

  /// Uniform in the open interval (0, 1).
  double uniform();
  double normal();
  /// Gamma(shape, 1) via Marsaglia-Tsang.
  double gamma(double shape);
  double chi_squared(double dof) { return 2.0 * gamma(0.5 * dof); }
  double student_t(double dof) { return normal() / std::sqrt(chi_squared(dof) / dof); }
  /// Integer uniform on [0, n).
  std::uint64_t below(std::uint64_t n);

 private:
  std::uint64_t next_u64();

  std::uint64_t key_;
  std::uint64_t stream_;
  std::uint64_t block_ = 0;
  std::array<std::uint32_t, 4> buf_{};
  int buf_pos_ = 4;
  double spare_normal_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace stresslab
