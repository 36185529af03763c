#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>

namespace edm {

// splitmix64 stream. Every stochastic operation in the library takes one of
// these explicitly; there is no global generator.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) noexcept : state_(seed) {}

  std::uint64_t next_u64() noexcept;

  // Top 53 bits of the next output scaled by 2^-53, so the result is in [0, 1).
  double uniform() noexcept;

  // Uniform real in [lo, hi).
  double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }

  // floor(uniform() * n); n must be positive.
  std::size_t below(std::size_t n) noexcept;

  std::uint64_t state() const noexcept { return state_; }

 private:
  std::uint64_t state_;
};

// In-place Fisher-Yates: for i from size-1 down to 1, swap items[i] with
// items[floor(uniform * (i + 1))].
template <typename T>
void shuffle(Rng& rng, std::span<T> items) {
  if (items.size() < 2) return;
  for (std::size_t i = items.size() - 1; i > 0; --i) {
    std::size_t j = rng.below(i + 1);
    using std::swap;
    swap(items[i], items[j]);
  }
}

template <typename Container>
void shuffle(Rng& rng, Container& items) {
  shuffle(rng, std::span(items.data(), items.size()));
}

}  // namespace edm
