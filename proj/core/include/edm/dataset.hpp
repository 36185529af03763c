#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "edm/image.hpp"
#include "edm/rng.hpp"
#include "edm/task.hpp"

namespace edm {

// Binary PPM (P6, maxval 255). Comments ('#' to end of line) are accepted
// wherever header whitespace is.
Image decode_ppm(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> encode_ppm(const Image& img);
void write_ppm(const std::filesystem::path& path, const Image& img);

// Dispatch on extension: .ppm is decoded in-house; .png/.jpg/.jpeg go through the
// system codecs when available. Errors carry the path.
Image decode_image(const std::filesystem::path& path);
bool has_image_extension(const std::filesystem::path& path);

struct LabeledSample {
  std::filesystem::path path;
  int class_id = 0;
  std::string origin_dir;

  friend bool operator==(const LabeledSample&, const LabeledSample&) = default;
};

struct ScanResult {
  LabelMap labels;
  std::vector<LabeledSample> samples;  // sorted by path
  std::size_t skipped = 0;             // non-image entries ignored
};

// Directory-per-class layout under root: normal/, layer_shift/, strings/,
// under_extrusion/, warping/. Binary maps normal -> 0 and every fault dir -> 1;
// multi maps the fault dirs to 0..3 and ignores normal/.
ScanResult scan_dataset(const std::filesystem::path& root, Task task);

std::vector<std::size_t> class_counts(std::span<const LabeledSample> samples, std::size_t num_classes);

struct Split {
  std::vector<LabeledSample> train;
  std::vector<LabeledSample> test;
  std::uint64_t seed = 0;
  double ratio = 0.8;
};

// Per class: shuffle with Rng(seed ^ class_id), first clamp(floor(ratio * n), 1, n - 1)
// go to train, the rest to test. Classes are emitted in ascending id order.
Split stratified_split(std::span<const LabeledSample> samples, double ratio, std::uint64_t seed);

// Optional Fisher-Yates with Rng(seed), then contiguous chunks; the final chunk may be short.
template <typename T>
std::vector<std::vector<T>> make_batches(std::span<const T> items, std::size_t batch_size,
                                         std::uint64_t seed, bool shuffle_items) {
  std::vector<T> order(items.begin(), items.end());
  if (shuffle_items) {
    Rng rng(seed);
    shuffle(rng, order);
  }
  std::vector<std::vector<T>> batches;
  if (batch_size == 0) batch_size = 1;
  for (std::size_t i = 0; i < order.size(); i += batch_size) {
    const std::size_t end = std::min(order.size(), i + batch_size);
    batches.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(i),
                         order.begin() + static_cast<std::ptrdiff_t>(end));
  }
  return batches;
}

}  // namespace edm
