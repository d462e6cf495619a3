#pragma once

#include <cstdint>
#include <limits>

namespace satdesign {

inline constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Stream tags for the `stage` slot of a StreamRng key.
enum class Stage : std::uint64_t {
  Saturation = 1,
  Assignment = 2,
  Graph = 3,
  Outcomes = 4,
  Optimizer = 5,
  Permutation = 6,
};

// Counter-based generator. The i-th output is a pure function of the key and
// i, so streams keyed by (seed, replication, stage, cluster) never depend on
// scheduling order.
class StreamRng {
 public:
  using result_type = std::uint64_t;

  StreamRng(std::uint64_t seed, std::uint64_t replication = 0, Stage stage = Stage::Saturation,
            std::uint64_t cluster = 0)
      : key_(make_key(seed, replication, static_cast<std::uint64_t>(stage), cluster)) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() { return splitmix64(key_ + 0x632be59bd9b4e019ULL * ++counter_); }

  // Uniform double in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

  // Uniform double in (0, 1).
  double uniform_open() {
    double u;
    do {
      u = uniform();
    } while (u == 0.0);
    return u;
  }

  // Unbiased integer in [0, n).
  std::uint64_t below(std::uint64_t n) {
    if (n <= 1) return 0;
    const std::uint64_t threshold = (0 - n) % n;
    for (;;) {
      const std::uint64_t r = (*this)();
      if (r >= threshold) return r % n;
    }
  }

  std::uint64_t key() const { return key_; }

 private:
  static std::uint64_t make_key(std::uint64_t seed, std::uint64_t rep, std::uint64_t stage,
                                std::uint64_t cluster) {
    std::uint64_t k = splitmix64(seed ^ 0x3c6ef372fe94f82bULL);
    k = splitmix64(k ^ rep);
    k = splitmix64(k ^ (stage * 0xa54ff53a5f1d36f1ULL));
    k = splitmix64(k ^ cluster);
    return k;
  }

  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace satdesign
