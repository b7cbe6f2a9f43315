#pragma once

// Counter-based seed derivation. Every random stream in the library is seeded
// by hashing a master seed with a tuple of stream coordinates, so a stream's
// contents never depend on how many other streams exist or in which order
// they are consumed.

#include <cstdint>
#include <initializer_list>
#include <random>
#include <string_view>

namespace gsv {

using Rng = std::mt19937_64;

// splitmix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// FNV-1a, for turning stream labels into integer coordinates.
constexpr std::uint64_t label_hash(std::string_view label) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : label) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t derive_seed(std::uint64_t master,
                          std::initializer_list<std::uint64_t> coordinates);

Rng make_rng(std::uint64_t seed);

}  // namespace gsv
