#include "exitrl/rng.hpp"

#include <stdexcept>

namespace exitrl {

std::uint64_t mix64(std::uint64_t x) {
  // splitmix64 finalizer (Steele, Lea, Flood 2014).
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t hash_str(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t hash_combine(std::uint64_t seed, std::uint64_t value) {
  return mix64(seed ^ (value + 0x9e3779b97f4a7c15ULL + (seed << 6) + (seed >> 2)));
}

std::uint64_t hash_words(std::uint64_t seed, std::span<const std::uint64_t> words) {
  std::uint64_t h = seed;
  for (std::uint64_t w : words) h = hash_combine(h, w);
  return h;
}

std::uint64_t hash_words(std::uint64_t seed, std::initializer_list<std::uint64_t> words) {
  return hash_words(seed, std::span<const std::uint64_t>(words.begin(), words.size()));
}

std::uint64_t Rng::next_u64() {
  state_ += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = state_;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

double Rng::uniform() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

std::uint64_t Rng::uniform_int(std::uint64_t n) {
  if (n == 0) throw std::invalid_argument("Rng::uniform_int: n must be positive");
  // Lemire's multiply-shift rejection method; unbiased and branch-light.
  __uint128_t m = static_cast<__uint128_t>(next_u64()) * n;
  auto lo = static_cast<std::uint64_t>(m);
  if (lo < n) {
    std::uint64_t threshold = (0ULL - n) % n;
    while (lo < threshold) {
      m = static_cast<__uint128_t>(next_u64()) * n;
      lo = static_cast<std::uint64_t>(m);
    }
  }
  return static_cast<std::uint64_t>(m >> 64);
}

Rng derive_rng(std::uint64_t master, std::string_view tag,
               std::initializer_list<std::uint64_t> words) {
  std::uint64_t h = hash_combine(master, hash_str(tag));
  h = hash_words(h, words);
  Rng rng;
  rng.set_state(mix64(h));
  return rng;
}

}  // namespace exitrl
