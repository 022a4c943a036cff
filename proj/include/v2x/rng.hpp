#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <random>
#include <string_view>

namespace v2x {

using Rng = std::mt19937_64;

constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

// Derives independent named child streams from one master seed. A child
// depends only on (master, purpose, index), so adding a new purpose never
// perturbs existing ones.
class SeedTree {
 public:
  explicit SeedTree(std::uint64_t master) : master_(master) {}

  std::uint64_t master() const { return master_; }

  std::uint64_t seed(std::string_view purpose, std::uint64_t index = 0) const {
    return mix64(mix64(master_ ^ fnv1a(purpose)) ^ mix64(~index));
  }

  Rng stream(std::string_view purpose, std::uint64_t index = 0) const {
    return Rng(seed(purpose, index));
  }

 private:
  std::uint64_t master_;
};

// The transforms below are written out instead of using <random>
// distributions, whose output is implementation-defined.

// [0, 1)
inline double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// (0, 1)
inline double uniform_open01(Rng& rng) {
  return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
}

inline std::size_t uniform_index(Rng& rng, std::size_t n) {
  auto i = static_cast<std::size_t>(uniform01(rng) * static_cast<double>(n));
  return i < n ? i : n - 1;
}

// Box-Muller, one output per call.
inline double standard_normal(Rng& rng) {
  const double u1 = uniform_open01(rng);
  const double u2 = uniform01(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

// Exp(1), strictly positive.
inline double unit_exponential(Rng& rng) { return -std::log(uniform_open01(rng)); }

}  // namespace v2x
