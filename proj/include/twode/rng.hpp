// Counter-based splittable random number streams.
//
// Every consumer owns a stream derived from (seed, purpose, index), so
// simulators can replay one randomness source (e.g. transition noise)
// while another (e.g. latent draws) is swapped out. Stepping is the
// splitmix64 sequence: state += GOLDEN; output = mix(state). All state
// is 64-bit integer arithmetic, so a given seed reproduces the same
// sequence on every run.

#ifndef TWODE_RNG_HPP
#define TWODE_RNG_HPP

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>

namespace twode {

namespace detail {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ull;

// splitmix64 finalizer (Vigna 2015). Bijective with strong avalanche.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

}  // namespace detail

// Purpose tags keep streams for different roles disjoint even when they
// share a trajectory index.
enum class StreamPurpose : std::uint64_t {
  InitObs = 1,
  LatentU = 2,
  LatentW = 3,
  NoiseObs = 4,
  NoiseReward = 5,
  Action = 6,
  Group = 7,
  Rollout = 8,
  ModelInit = 9,
  Shuffle = 10,
  Split = 11,
};

class RngStream {
 public:
  explicit RngStream(std::uint64_t key) : state_(key) {}

  static RngStream derive(std::uint64_t seed, StreamPurpose purpose,
                          std::uint64_t index = 0) {
    std::uint64_t k = detail::mix64(seed + detail::kGolden);
    k = detail::mix64(k ^ (static_cast<std::uint64_t>(purpose) * detail::kGolden));
    k = detail::mix64(k ^ (index * 0xD1B54A32D192ED03ull));
    return RngStream(k);
  }

  // Extra derivation level for nested indices (e.g. per-cell seeds).
  static std::uint64_t derive_key(std::uint64_t seed, std::uint64_t a,
                                  std::uint64_t b = 0, std::uint64_t c = 0) {
    std::uint64_t k = detail::mix64(seed + detail::kGolden);
    k = detail::mix64(k ^ (a * detail::kGolden));
    k = detail::mix64(k ^ (b * 0xD1B54A32D192ED03ull));
    k = detail::mix64(k ^ (c * 0x8CB92BA72F3D8DD7ull));
    return k;
  }

  std::uint64_t next_u64() {
    state_ += detail::kGolden;
    return detail::mix64(state_);
  }

  // Uniform on [0, 1) with 53 random bits.
  double uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // Standard normal via Box-Muller; one transcendental pair per two draws.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = 1.0 - uniform();  // (0, 1], keeps log finite
    const double u2 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 6.283185307179586476925286766559 * u2;
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
  }

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  int bernoulli(double p) { return uniform() < p ? 1 : 0; }

  // Index into a probability vector; probabilities must sum to ~1.
  int categorical(std::span<const double> probs) {
    const double u = uniform();
    double acc = 0.0;
    for (std::size_t k = 0; k < probs.size(); ++k) {
      acc += probs[k];
      if (u < acc) return static_cast<int>(k);
    }
    return static_cast<int>(probs.size()) - 1;
  }

  double uniform_range(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  int uniform_int(int n) {
    if (n <= 0) throw std::invalid_argument("uniform_int: n must be positive");
    // Rejection-free modulo is fine here: n is tiny relative to 2^64.
    return static_cast<int>(next_u64() % static_cast<std::uint64_t>(n));
  }

 private:
  std::uint64_t state_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace twode

#endif  // TWODE_RNG_HPP
