#pragma once

#include <cstdint>
#include <string_view>

namespace slicesim {

// FNV-1a, used for manifest digests and for deriving labeled sub-seeds.
constexpr std::uint64_t fnv1a64(std::string_view s, std::uint64_t h = 0xcbf29ce484222325ull) {
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ull;
  }
  return h;
}

constexpr std::uint64_t fnv1a64_u64(std::uint64_t v, std::uint64_t h = 0xcbf29ce484222325ull) {
  for (int i = 0; i < 8; ++i) {
    h ^= (v >> (8 * i)) & 0xff;
    h *= 0x100000001b3ull;
  }
  return h;
}

constexpr std::uint64_t splitmix64(std::uint64_t& s) {
  s += 0x9e3779b97f4a7c15ull;
  std::uint64_t z = s;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

// xoshiro256++ with splitmix64 seeding. Self-contained so that streams are
// bit-identical across platforms and standard-library versions (the
// std::uniform_* distributions are implementation-defined).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) {
    std::uint64_t s = seed;
    for (auto& w : state_) w = splitmix64(s);
  }

  std::uint64_t next_u64() {
    const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  // Uniform in [0,1) with 53 bits of resolution.
  double next_double() { return (next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

  // Uniform integer in [0, n). n must be >= 1.
  std::uint64_t next_below(std::uint64_t n) {
    // Unbiased rejection sampling (Lemire-style threshold).
    const std::uint64_t threshold = (0 - n) % n;
    for (;;) {
      std::uint64_t r = next_u64();
      if (r >= threshold) return r % n;
    }
  }

 private:
  static constexpr std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }
  std::uint64_t state_[4]{};
};

// Derives a child seed from a root seed and a label, plus optional numeric
// qualifiers. All experiment randomness flows from one root seed through this.
inline std::uint64_t derive_seed(std::uint64_t root, std::string_view label,
                                 std::uint64_t a = 0, std::uint64_t b = 0) {
  std::uint64_t h = fnv1a64(label);
  h = fnv1a64_u64(root, h);
  h = fnv1a64_u64(a, h);
  h = fnv1a64_u64(b, h);
  return h;
}

}  // namespace slicesim
