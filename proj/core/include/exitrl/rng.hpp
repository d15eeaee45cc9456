#pragma once

#include <cstdint>
#include <initializer_list>
#include <span>
#include <string_view>

namespace exitrl {

// All randomness in the engine flows through explicitly seeded splitmix64
// streams. The single-word state makes checkpoints trivial and keeps runs
// bit-reproducible across toolchains, which <random> distributions do not
// guarantee. Derived streams are obtained by hashing a master seed together
// with a stream tag, so per-rollout substreams need no shared state.

std::uint64_t mix64(std::uint64_t x);

// FNV-1a, used to fold string identifiers into stream seeds.
std::uint64_t hash_str(std::string_view s);

std::uint64_t hash_combine(std::uint64_t seed, std::uint64_t value);

// Hash of a word sequence; order-sensitive.
std::uint64_t hash_words(std::uint64_t seed, std::span<const std::uint64_t> words);
std::uint64_t hash_words(std::uint64_t seed, std::initializer_list<std::uint64_t> words);

class Rng {
 public:
  Rng() = default;
  explicit Rng(std::uint64_t seed) : state_(mix64(seed ^ 0x9e3779b97f4a7c15ULL)) {}

  std::uint64_t next_u64();

  // Uniform in [0, 1) with 53 bits of mantissa.
  double uniform();

  // Uniform integer in [0, n); n must be positive.
  std::uint64_t uniform_int(std::uint64_t n);

  bool bernoulli(double p) { return uniform() < p; }

  std::uint64_t state() const { return state_; }
  void set_state(std::uint64_t s) { state_ = s; }

 private:
  std::uint64_t state_ = 0x853c49e6748fea9bULL;
};

// Stream derivation: stable tagged substreams of a master seed.
Rng derive_rng(std::uint64_t master, std::string_view tag,
               std::initializer_list<std::uint64_t> words = {});

}  // namespace exitrl
