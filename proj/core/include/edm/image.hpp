#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "edm/rng.hpp"
#include "edm/tensor.hpp"

namespace edm {

// 8-bit RGB, row-major, channels interleaved.
struct Image {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<std::uint8_t> pixels;

  Image() = default;
  // Zero-filled; throws a shape error for a zero extent.
  Image(std::size_t width, std::size_t height);
  Image(std::size_t width, std::size_t height, std::vector<std::uint8_t> pixels);

  std::uint8_t& at(std::size_t x, std::size_t y, std::size_t c) { return pixels[(y * width + x) * 3 + c]; }
  std::uint8_t at(std::size_t x, std::size_t y, std::size_t c) const { return pixels[(y * width + x) * 3 + c]; }

  friend bool operator==(const Image&, const Image&) = default;
};

struct AugmentPolicy {
  std::size_t target_size = 256;
  double hflip_prob = 0.5;
  double vflip_prob = 0.5;

  // Flip-free policy used for evaluation.
  static AugmentPolicy deterministic(std::size_t target_size) { return {target_size, 0.0, 0.0}; }
  void validate() const;
};

// Bilinear resize so the shorter side equals target (aspect preserved, long side
// rounded to nearest). Source coordinate per axis is (dst + 0.5) * (src/dst) - 0.5,
// clamped to the image; results are rounded half-up to 8 bits.
Image resize_shorter_side(const Image& img, std::size_t target);

// size x size window at offsets (floor((w - size)/2), floor((h - size)/2)).
Image center_crop(const Image& img, std::size_t size);

Image flip_h(const Image& img);
Image flip_v(const Image& img);

// [3, S, S] planar, each sample / 255.
Tensor to_input_tensor(const Image& img);

// Writes the planar normalized image into slot `index` of a [N, 3, S, S] batch.
void write_input(const Image& img, Tensor& batch, std::size_t index);

// resize_shorter_side + center_crop to the policy's target size.
Image prepare(const Image& img, std::size_t target_size);

// Flips on an already prepared image. Always draws two uniforms (h then v) so the
// stream position is independent of the outcome.
Image apply_flips(Image prepared, const AugmentPolicy& policy, Rng& rng);

// resize -> crop -> flip_h (p) -> flip_v (p) -> to_input_tensor.
Tensor apply_train_augment(const Image& img, const AugmentPolicy& policy, Rng& rng);

// Evaluation path: resize -> crop -> to_input_tensor.
Tensor to_eval_tensor(const Image& img, std::size_t target_size);

}  // namespace edm
