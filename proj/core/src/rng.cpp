#include "edm/rng.hpp"

namespace edm {

std::uint64_t Rng::next_u64() noexcept {
  std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

double Rng::uniform() noexcept {
  constexpr double kScale = 1.0 / 9007199254740992.0;  // 2^-53
  return static_cast<double>(next_u64() >> 11) * kScale;
}

std::size_t Rng::below(std::size_t n) noexcept {
  auto j = static_cast<std::size_t>(uniform() * static_cast<double>(n));
  return j < n ? j : n - 1;
}

}  // namespace edm
