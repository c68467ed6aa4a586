#pragma once

#include <cstdint>
#include <random>

namespace msband {

// Deterministic random source.  std::mt19937_64 output is fixed by the
// standard, but the std distributions are not, so the draws below are
// implemented by hand to keep results byte-identical across toolchains.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform on [0, 1) with 53 random bits.
  double uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer on [lo, hi] inclusive.  Modulo bias is negligible for
  // the small ranges used here and keeps the draw to one engine step.
  int uniform_int(int lo, int hi) {
    std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
    return lo + static_cast<int>(next_u64() % span);
  }

  // Standard normal via Box-Muller; the spare value is cached so draws cost
  // one transform per pair.
  double normal();

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

// Derives an independent child seed from a master seed and a stream index.
// splitmix64 finalizer: distinct indices give uncorrelated streams even for
// adjacent master seeds.
std::uint64_t split_seed(std::uint64_t master, std::uint64_t index);

}  // namespace msband
