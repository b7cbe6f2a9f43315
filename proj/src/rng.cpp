#include "gsv/rng.hpp"

namespace gsv {

std::uint64_t derive_seed(std::uint64_t master,
                          std::initializer_list<std::uint64_t> coordinates) {
  std::uint64_t h = mix64(master);
  for (std::uint64_t c : coordinates) h = mix64(h ^ mix64(c + 0x632be59bd9b4e019ULL));
  return h;
}

Rng make_rng(std::uint64_t seed) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
  return Rng(seq);
}

}  // namespace gsv
