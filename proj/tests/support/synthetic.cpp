#include "synthetic.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <unistd.h>

#include <fmt/format.h>

#include "edm/dataset.hpp"
#include "edm/task.hpp"

namespace fs = std::filesystem;

namespace edm::testing {

namespace {

struct Rgb {
  double c[3];
};

Rgb random_color(Rng& rng, double lo, double hi) {
  return {{rng.uniform(lo, hi), rng.uniform(lo, hi), rng.uniform(lo, hi)}};
}

}  // namespace

Image make_texture(Texture texture, std::size_t size, Rng& rng) {
  Rgb dark = random_color(rng, 0.0, 90.0);
  Rgb light = random_color(rng, 165.0, 255.0);
  if (rng.uniform() < 0.5) std::swap(dark, light);
  const std::size_t width = 3 + rng.below(6);
  const std::size_t px = rng.below(2 * width);
  const std::size_t py = rng.below(2 * width);
  const Rgb flat = random_color(rng, 0.0, 255.0);

  Image img(size, size);
  for (std::size_t y = 0; y < size; ++y) {
    for (std::size_t x = 0; x < size; ++x) {
      const std::size_t bx = (x + px) / width;
      const std::size_t by = (y + py) / width;
      bool second = false;
      switch (texture) {
        case Texture::horizontal_stripes: second = by % 2 == 1; break;
        case Texture::vertical_stripes: second = bx % 2 == 1; break;
        case Texture::checkerboard: second = (bx + by) % 2 == 1; break;
        case Texture::solid: break;
      }
      const Rgb& base = texture == Texture::solid ? flat : (second ? light : dark);
      for (std::size_t c = 0; c < 3; ++c) {
        const double v = base.c[c] + rng.uniform(-12.75, 12.75);
        img.at(x, y, c) = static_cast<std::uint8_t>(std::clamp(std::floor(v + 0.5), 0.0, 255.0));
      }
    }
  }
  return img;
}

void write_texture_dataset(const fs::path& root, std::size_t per_class, std::size_t size, std::uint64_t seed) {
  constexpr Texture kOrder[] = {Texture::horizontal_stripes, Texture::vertical_stripes, Texture::checkerboard,
                                Texture::solid};
  Rng rng(seed);
  for (std::size_t k = 0; k < 4; ++k) {
    const fs::path dir = root / std::string(kFaultDirs[k]);
    fs::create_directories(dir);
    for (std::size_t i = 0; i < per_class; ++i)
      write_ppm(dir / fmt::format("img_{:04}.ppm", i), make_texture(kOrder[k], size, rng));
  }
}

void write_full_count_tree(const fs::path& root) {
  const Image pixel(1, 1, {10, 20, 30});
  auto fill = [&](std::string_view dir, std::size_t n) {
    fs::create_directories(root / dir);
    for (std::size_t i = 0; i < n; ++i) write_ppm(root / dir / fmt::format("{:04}.ppm", i), pixel);
  };
  fill(kNormalDir, 500);
  for (auto dir : kFaultDirs) fill(dir, 200);
}

TempDir::TempDir(const std::string& tag) {
  static std::atomic<int> counter{0};
  path_ = fs::temp_directory_path() / fmt::format("edm-{}-{}-{}", tag, ::getpid(), counter++);
  fs::remove_all(path_);
  fs::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  fs::remove_all(path_, ec);
}

}  // namespace edm::testing
