#ifndef LANESTRESS_RNG_HPP_
#define LANESTRESS_RNG_HPP_

#include <cstdint>
#include <random>

namespace lanestress {

// Seeded random source whose draws do not depend on the standard library's
// distribution implementations, so traces replay identically across builds.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t NextU64() { return engine_(); }

  // Uniform on [0, 1) with 53 random mantissa bits.
  double Uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  double Uniform(double lo, double hi) { return lo + (hi - lo) * Uniform(); }

  // Uniform integer in [0, n). n must be positive.
  int UniformInt(int n) {
    return static_cast<int>(engine_() % static_cast<std::uint64_t>(n));
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace lanestress

#endif  // LANESTRESS_RNG_HPP_
