#ifndef HOMSYNTH_RANDOM_HPP
#define HOMSYNTH_RANDOM_HPP

#include <cstdint>
#include <limits>
#include <random>

#include "homsynth/error.hpp"

namespace homsynth {

// splitmix64 finalizer. Used to derive decorrelated child seeds and to hash
// lattice coordinates for procedural noise.
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Seed for the index-th child stream of a master seed. Children are
// independent of how much the parent stream has been consumed, which keeps
// per-sample reproducibility intact under reordering or threading.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
  return mix64(master + (index + 1) * 0x9e3779b97f4a7c15ULL);
}

// Deterministic random stream. std::mt19937_64 output is pinned by the
// standard, and the distributions below are written out explicitly because
// std::uniform_*_distribution is not bit-stable across standard libraries.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed) : seed_(seed), engine_(seed) {}

  std::uint64_t seed() const noexcept { return seed_; }

  std::uint64_t next_u64() { return engine_(); }

  // Uniform double in [lo, hi). Uses the top 53 bits of the generator.
  double uniform_real(double lo, double hi) {
    if (!(lo <= hi)) throw Error(Errc::InvalidArgument, "empty real range");
    double u = static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    return lo + u * (hi - lo);
  }

  // Uniform integer in [lo, hi], inclusive, bias-free via rejection.
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
    if (lo > hi) throw Error(Errc::InvalidArgument, "empty integer range");
    std::uint64_t range =
        static_cast<std::uint64_t>(hi) - static_cast<std::uint64_t>(lo) + 1;
    if (range == 0) {  // full 64-bit span
      return static_cast<std::int64_t>(next_u64());
    }
    std::uint64_t reject_below = (-range) % range;  // (2^64 - range) % range
    std::uint64_t x;
    do {
      x = next_u64();
    } while (x < reject_below);
    return lo + static_cast<std::int64_t>(x % range);
  }

  // Child stream for a subtask. Derivation depends only on the construction
  // seed, not on the number of values drawn so far.
  RandomStream split(std::uint64_t index) const {
    return RandomStream(derive_seed(seed_, index));
  }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

}  // namespace homsynth

#endif  // HOMSYNTH_RANDOM_HPP
