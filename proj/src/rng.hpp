#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace ftsqa {

// mt19937_64 with hand-rolled draws: the engine's output sequence is fixed
// by the standard, the std:: distributions are not, and training must be
// reproducible from a seed alone.
class Rng {
public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  std::uint64_t next() { return eng_(); }

  // [0, 1) with 53-bit resolution
  double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // unbiased integer in [0, n)
  std::uint64_t below(std::uint64_t n) {
    if (n < 2) return 0;
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x;
    do {
      x = next();
    } while (x >= limit);
    return x % n;
  }

  template <class T>
  void shuffle(std::vector<T>& xs) {
    for (std::size_t i = xs.size(); i > 1; --i) {
      std::swap(xs[i - 1], xs[below(i)]);
    }
  }

private:
  std::mt19937_64 eng_;
};

} // namespace ftsqa
