#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>

namespace gridlab {

/// SplitMix64 finalizer. Used to expand seeds and to derive per-epoch and
/// per-agent sub-seeds.
constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Sub-seed for epoch `epoch` of a run seeded with `seed`:
/// splitmix64(seed XOR epoch). Independent of how many epochs run in total.
constexpr std::uint64_t epoch_seed(std::uint64_t seed, std::uint64_t epoch) {
  return splitmix64(seed ^ epoch);
}

/// Sub-seed for the model attached to agent slot `agent_id`.
constexpr std::uint64_t model_seed(std::uint64_t seed, std::uint64_t agent_id) {
  return splitmix64(splitmix64(seed) + 0xA24BAED4963EE407ULL * (agent_id + 1));
}

/// xoshiro256** 1.0 (Blackman & Vigna). State is seeded by four successive
/// SplitMix64 outputs.
///
/// Draw quanta, each consuming exactly one call to next():
///   - uniform01():       (next() >> 11) * 2^-53, in [0, 1)
///   - uniform_index(n):  floor(next() * n / 2^64), in [0, n)
///   - bernoulli(p):      uniform01() < p
class Rng {
 public:
  using State = std::array<std::uint64_t, 4>;

  explicit Rng(std::uint64_t seed = 0) { reseed(seed); }

  void reseed(std::uint64_t seed) {
    std::uint64_t sm = seed;
    for (auto& word : state_) {
      sm += 0x9E3779B97F4A7C15ULL;
      std::uint64_t z = sm;
      z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
      z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
      word = z ^ (z >> 31);
    }
  }

  std::uint64_t next() {
    const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  std::size_t uniform_index(std::size_t n) {
    const auto wide = static_cast<unsigned __int128>(next()) * n;
    return static_cast<std::size_t>(wide >> 64);
  }

  bool bernoulli(double p) { return uniform01() < p; }

  const State& state() const { return state_; }
  void set_state(const State& s) { state_ = s; }

  /// Hex serialization of the four state words.
  std::string serialize() const;
  static Rng deserialize(const std::string& text);

  friend bool operator==(const Rng&, const Rng&) = default;

 private:
  static constexpr std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }

  State state_{};
};

}  // namespace gridlab
