#pragma once

#include <cmath>
#include <cstdint>
#include <string>

namespace prepcast {

// splitmix64. Chosen over std::mt19937 etc. so that identical seeds give
// identical streams on every platform and standard library.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    state_ += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  // uniform in [0, 1), 53 bits of mantissa
  double next_double() { return double(next() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

  // modulo bias is < 2^-53 for any n that fits realistic index ranges
  std::uint64_t next_below(std::uint64_t n) { return n == 0 ? 0 : next() % n; }

  // standard normal via Box-Muller (one uniform pair per draw)
  double gaussian() {
    double u1 = next_double();
    double u2 = next_double();
    // 1-u1 keeps the log argument in (0, 1]
    return std::sqrt(-2.0 * std::log(1.0 - u1)) * std::cos(6.283185307179586476925286766559 * u2);
  }

 private:
  std::uint64_t state_;
};

// Seed for an independent substream, e.g. one per generated record or per
// forest tree. Runs the splitmix finalizer over (seed, index) so nearby
// indices do not produce correlated streams.
inline std::uint64_t substream_seed(std::uint64_t seed, std::uint64_t index) {
  std::uint64_t z = seed + (index + 1) * 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// FNV-1a, used to fold strings (resource class names etc.) into stream seeds.
inline std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  return h;
}

}  // namespace prepcast
