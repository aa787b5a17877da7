#pragma once

#include <cstdint>
#include <random>

namespace istab {

// Deterministic random source. All randomness in the library flows from a
// root seed; parallel tasks derive their own stream via derive(root, index).
class Rng {
public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  // Uniform double in [0, 1). Mapped by hand from the raw 64-bit output so
  // the stream does not depend on the standard library's distribution
  // implementation.
  double uniform() {
    return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  std::uint64_t next_u64() { return gen_(); }

  // Index into [0, n).
  std::size_t index(std::size_t n) {
    return static_cast<std::size_t>(uniform() * static_cast<double>(n)) % n;
  }

private:
  std::mt19937_64 gen_;
};

// splitmix64 finalizer; used to derive per-task seeds from a root seed.
inline std::uint64_t derive_seed(std::uint64_t root, std::uint64_t task_index) {
  std::uint64_t z = root + 0x9e3779b97f4a7c15ULL * (task_index + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

} // namespace istab
