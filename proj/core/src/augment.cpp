#include "edm/image.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "edm/error.hpp"

namespace edm {

Image::Image(std::size_t w, std::size_t h) : width(w), height(h) {
  if (w == 0 || h == 0) throw_error(ErrorKind::shape, "image extents must be positive");
  pixels.assign(w * h * 3, 0);
}

Image::Image(std::size_t w, std::size_t h, std::vector<std::uint8_t> px)
    : width(w), height(h), pixels(std::move(px)) {
  if (w == 0 || h == 0) throw_error(ErrorKind::shape, "image extents must be positive");
  if (pixels.size() != w * h * 3)
    throw_error(ErrorKind::shape, std::to_string(w) + "x" + std::to_string(h) + " image needs " +
                                      std::to_string(w * h * 3) + " samples, got " +
                                      std::to_string(pixels.size()));
}

void AugmentPolicy::validate() const {
  if (target_size < 8) throw_error(ErrorKind::data, "augment target size below 8");
  auto ok = [](double p) { return p >= 0.0 && p <= 1.0; };
  if (!ok(hflip_prob) || !ok(vflip_prob))
    throw_error(ErrorKind::data, "flip probabilities must lie in [0, 1]");
}

namespace {

struct Tap {
  std::size_t lo;
  std::size_t hi;
  double frac;
};

std::vector<Tap> bilinear_taps(std::size_t src, std::size_t dst) {
  const double scale = static_cast<double>(src) / static_cast<double>(dst);
  const double max_coord = static_cast<double>(src - 1);
  std::vector<Tap> taps(dst);
  for (std::size_t d = 0; d < dst; ++d) {
    double s = (static_cast<double>(d) + 0.5) * scale - 0.5;
    s = std::clamp(s, 0.0, max_coord);
    const auto lo = static_cast<std::size_t>(std::floor(s));
    taps[d] = {lo, std::min(lo + 1, src - 1), s - static_cast<double>(lo)};
  }
  return taps;
}

}  // namespace

Image resize_shorter_side(const Image& img, std::size_t target) {
  if (target == 0) throw_error(ErrorKind::data, "resize target must be positive");
  const std::size_t shorter = std::min(img.width, img.height);
  const std::size_t longer = std::max(img.width, img.height);
  const auto scaled_long = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::llround(static_cast<double>(longer) *
                                                static_cast<double>(target) /
                                                static_cast<double>(shorter))));
  const std::size_t out_w = img.width <= img.height ? target : scaled_long;
  const std::size_t out_h = img.width <= img.height ? scaled_long : target;
  if (out_w == img.width && out_h == img.height) return img;

  const auto xs = bilinear_taps(img.width, out_w);
  const auto ys = bilinear_taps(img.height, out_h);
  Image out(out_w, out_h);
  for (std::size_t y = 0; y < out_h; ++y) {
    const Tap& ty = ys[y];
    for (std::size_t x = 0; x < out_w; ++x) {
      const Tap& tx = xs[x];
      for (std::size_t c = 0; c < 3; ++c) {
        const double top = img.at(tx.lo, ty.lo, c) * (1.0 - tx.frac) + img.at(tx.hi, ty.lo, c) * tx.frac;
        const double bot = img.at(tx.lo, ty.hi, c) * (1.0 - tx.frac) + img.at(tx.hi, ty.hi, c) * tx.frac;
        const double v = top * (1.0 - ty.frac) + bot * ty.frac;
        out.at(x, y, c) = static_cast<std::uint8_t>(std::clamp(std::floor(v + 0.5), 0.0, 255.0));
      }
    }
  }
  return out;
}

Image center_crop(const Image& img, std::size_t size) {
  if (size == 0 || img.width < size || img.height < size)
    throw_error(ErrorKind::data, std::to_string(img.width) + "x" + std::to_string(img.height) +
                                     " image cannot be center-cropped to " + std::to_string(size));
  if (img.width == size && img.height == size) return img;
  const std::size_t ox = (img.width - size) / 2;
  const std::size_t oy = (img.height - size) / 2;
  Image out(size, size);
  for (std::size_t y = 0; y < size; ++y) {
    const auto* src = img.pixels.data() + ((oy + y) * img.width + ox) * 3;
    std::copy(src, src + size * 3, out.pixels.data() + y * size * 3);
  }
  return out;
}

Image flip_h(const Image& img) {
  Image out = img;
  for (std::size_t y = 0; y < img.height; ++y)
    for (std::size_t x = 0; x < img.width; ++x)
      for (std::size_t c = 0; c < 3; ++c) out.at(x, y, c) = img.at(img.width - 1 - x, y, c);
  return out;
}

Image flip_v(const Image& img) {
  Image out = img;
  const std::size_t row = img.width * 3;
  for (std::size_t y = 0; y < img.height; ++y) {
    const auto* src = img.pixels.data() + (img.height - 1 - y) * row;
    std::copy(src, src + row, out.pixels.data() + y * row);
  }
  return out;
}

void write_input(const Image& img, Tensor& batch, std::size_t index) {
  if (img.width != img.height)
    throw_error(ErrorKind::shape, "input image must be square, got " + std::to_string(img.width) +
                                      "x" + std::to_string(img.height));
  const std::size_t s = img.width;
  if (batch.rank() != 4 || batch.dim(1) != 3 || batch.dim(2) != s || batch.dim(3) != s ||
      index >= batch.dim(0))
    throw_error(ErrorKind::shape, "batch " + shape_string(batch.dims()) + " cannot hold a " +
                                      std::to_string(s) + "px image at slot " + std::to_string(index));
  const std::size_t plane = s * s;
  float* dst = batch.data() + index * 3 * plane;
  for (std::size_t p = 0; p < plane; ++p)
    for (std::size_t c = 0; c < 3; ++c)
      dst[c * plane + p] = static_cast<float>(img.pixels[p * 3 + c]) / 255.0f;
}

Tensor to_input_tensor(const Image& img) {
  if (img.width != img.height)
    throw_error(ErrorKind::shape, "input image must be square, got " + std::to_string(img.width) +
                                      "x" + std::to_string(img.height));
  Tensor batch({1, 3, img.height, img.width});
  write_input(img, batch, 0);
  return std::move(batch).reshaped({3, img.height, img.width});
}

Image prepare(const Image& img, std::size_t target_size) {
  return center_crop(resize_shorter_side(img, target_size), target_size);
}

Image apply_flips(Image prepared, const AugmentPolicy& policy, Rng& rng) {
  const double uh = rng.uniform();
  const double uv = rng.uniform();
  if (uh < policy.hflip_prob) prepared = flip_h(prepared);
  if (uv < policy.vflip_prob) prepared = flip_v(prepared);
  return prepared;
}

Tensor apply_train_augment(const Image& img, const AugmentPolicy& policy, Rng& rng) {
  policy.validate();
  return to_input_tensor(apply_flips(prepare(img, policy.target_size), policy, rng));
}

Tensor to_eval_tensor(const Image& img, std::size_t target_size) {
  return to_input_tensor(prepare(img, target_size));
}

}  // namespace edm
