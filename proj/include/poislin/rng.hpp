#ifndef POISLIN_RNG_HPP
#define POISLIN_RNG_HPP

#include <cstdint>

namespace poislin {

// Deterministic splitmix64 generator; identical streams for identical seeds
// regardless of the standard library, which keeps experiment outputs
// byte-for-byte reproducible.
class DetRng {
 public:
  explicit DetRng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  // uniform in [0, 1)
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  // uniform in [-1, 1]
  double symmetric() { return 2.0 * uniform() - 1.0; }

  int uniform_int(int lo, int hi) {  // inclusive bounds
    return lo + static_cast<int>(next() % static_cast<std::uint64_t>(hi - lo + 1));
  }

 private:
  std::uint64_t state_;
};

}  // namespace poislin

#endif
