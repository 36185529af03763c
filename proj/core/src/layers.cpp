#include "edm/layers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "edm/error.hpp"

namespace edm {

namespace {

void expect_rank(const Shape& dims, std::size_t rank, const char* what) {
  if (dims.size() != rank)
    throw_error(ErrorKind::shape, std::string(what) + " expects rank " + std::to_string(rank) +
                                      ", got " + shape_string(dims));
}

// Patch matrix for one image: col[(c*9 + di*3 + dj), i*W + j] = x[c, i+di-1, j+dj-1]
// with zeros outside the image.
template <typename T>
void im2col(const T* x, std::size_t channels, std::size_t h, std::size_t w, T* col) {
  const std::size_t plane = h * w;
  for (std::size_t c = 0; c < channels; ++c) {
    const T* xc = x + c * plane;
    for (std::size_t di = 0; di < kKernel; ++di) {
      for (std::size_t dj = 0; dj < kKernel; ++dj) {
        T* dst = col + ((c * kKernel + di) * kKernel + dj) * plane;
        for (std::size_t i = 0; i < h; ++i) {
          const auto si = static_cast<std::ptrdiff_t>(i + di) - 1;
          T* drow = dst + i * w;
          if (si < 0 || si >= static_cast<std::ptrdiff_t>(h)) {
            std::fill(drow, drow + w, T{0});
            continue;
          }
          const T* srow = xc + static_cast<std::size_t>(si) * w;
          for (std::size_t j = 0; j < w; ++j) {
            const auto sj = static_cast<std::ptrdiff_t>(j + dj) - 1;
            drow[j] = (sj < 0 || sj >= static_cast<std::ptrdiff_t>(w))
                          ? T{0}
                          : srow[static_cast<std::size_t>(sj)];
          }
        }
      }
    }
  }
}

// Adjoint of im2col: scatter-add patch gradients back onto the image.
template <typename T>
void col2im(const T* col, std::size_t channels, std::size_t h, std::size_t w, T* x) {
  const std::size_t plane = h * w;
  for (std::size_t c = 0; c < channels; ++c) {
    T* xc = x + c * plane;
    for (std::size_t di = 0; di < kKernel; ++di) {
      for (std::size_t dj = 0; dj < kKernel; ++dj) {
        const T* src = col + ((c * kKernel + di) * kKernel + dj) * plane;
        for (std::size_t i = 0; i < h; ++i) {
          const auto si = static_cast<std::ptrdiff_t>(i + di) - 1;
          if (si < 0 || si >= static_cast<std::ptrdiff_t>(h)) continue;
          T* xrow = xc + static_cast<std::size_t>(si) * w;
          const T* srow = src + i * w;
          for (std::size_t j = 0; j < w; ++j) {
            const auto sj = static_cast<std::ptrdiff_t>(j + dj) - 1;
            if (sj < 0 || sj >= static_cast<std::ptrdiff_t>(w)) continue;
            xrow[static_cast<std::size_t>(sj)] += srow[j];
          }
        }
      }
    }
  }
}

template <typename T>
void check_conv_layer(const BasicConvLayer<T>& layer) {
  const auto& wd = layer.weight.dims();
  if (wd.size() != 4 || wd[2] != kKernel || wd[3] != kKernel)
    throw_error(ErrorKind::shape, "conv weight must be [C_out, C_in, 3, 3], got " + shape_string(wd));
  if (layer.bias.dims() != Shape{wd[0]})
    throw_error(ErrorKind::shape, "conv bias " + shape_string(layer.bias.dims()) +
                                      " does not match " + std::to_string(wd[0]) + " output channels");
}

template <typename T>
void check_conv_input(const BasicTensor<T>& x, const BasicConvLayer<T>& layer) {
  check_conv_layer(layer);
  expect_rank(x.dims(), 4, "conv2d");
  if (x.dim(1) != layer.in_channels())
    throw_error(ErrorKind::shape, "conv2d input " + shape_string(x.dims()) + " vs weight " +
                                      shape_string(layer.weight.dims()) + ": channel mismatch");
}

template <typename T>
void check_fc(const BasicTensor<T>& x, const BasicFcLayer<T>& layer) {
  expect_rank(layer.weight.dims(), 2, "fc weight");
  expect_rank(x.dims(), 2, "fc input");
  if (layer.bias.dims() != Shape{layer.out_features()})
    throw_error(ErrorKind::shape, "fc bias " + shape_string(layer.bias.dims()) + " vs weight " +
                                      shape_string(layer.weight.dims()));
  if (x.dim(1) != layer.in_features())
    throw_error(ErrorKind::shape, "fc input " + shape_string(x.dims()) + " vs weight " +
                                      shape_string(layer.weight.dims()));
}

}  // namespace

template <typename T>
BasicTensor<T> conv2d_forward(const BasicTensor<T>& x, const BasicConvLayer<T>& layer) {
  check_conv_input(x, layer);
  const std::size_t n = x.dim(0), cin = x.dim(1), h = x.dim(2), w = x.dim(3);
  const std::size_t cout = layer.out_channels();
  const std::size_t plane = h * w;
  const std::size_t k = cin * kKernel * kKernel;

  BasicTensor<T> out({n, cout, h, w});
  std::vector<T> col(k * plane);
  const T* wt = layer.weight.data();
  for (std::size_t b = 0; b < n; ++b) {
    im2col(x.data() + b * cin * plane, cin, h, w, col.data());
    T* ob = out.data() + b * cout * plane;
    for (std::size_t o = 0; o < cout; ++o) {
      T* row = ob + o * plane;
      std::fill(row, row + plane, layer.bias[o]);
      const T* wrow = wt + o * k;
      for (std::size_t t = 0; t < k; ++t) {
        const T wv = wrow[t];
        const T* crow = col.data() + t * plane;
        for (std::size_t p = 0; p < plane; ++p) row[p] += wv * crow[p];
      }
    }
  }
  return out;
}

template <typename T>
LayerGrads<T> conv2d_backward(const BasicTensor<T>& x, const BasicConvLayer<T>& layer,
                              const BasicTensor<T>& grad_out, bool want_input_grad) {
  check_conv_input(x, layer);
  const std::size_t n = x.dim(0), cin = x.dim(1), h = x.dim(2), w = x.dim(3);
  const std::size_t cout = layer.out_channels();
  if (grad_out.dims() != Shape{n, cout, h, w})
    throw_error(ErrorKind::shape, "conv2d_backward grad " + shape_string(grad_out.dims()) +
                                      " does not match output " +
                                      shape_string(Shape{n, cout, h, w}));
  const std::size_t plane = h * w;
  const std::size_t k = cin * kKernel * kKernel;

  LayerGrads<T> g;
  g.weight = BasicTensor<T>(layer.weight.dims());
  g.bias = BasicTensor<T>(layer.bias.dims());
  if (want_input_grad) g.input = BasicTensor<T>(x.dims());

  std::vector<T> col(k * plane);
  std::vector<T> gcol(want_input_grad ? k * plane : 0);
  const T* wt = layer.weight.data();
  T* gw = g.weight.data();
  for (std::size_t b = 0; b < n; ++b) {
    const T* gob = grad_out.data() + b * cout * plane;
    im2col(x.data() + b * cin * plane, cin, h, w, col.data());
    for (std::size_t o = 0; o < cout; ++o) {
      const T* grow = gob + o * plane;
      T bsum = 0;
      for (std::size_t p = 0; p < plane; ++p) bsum += grow[p];
      g.bias[o] += bsum;
      T* gwrow = gw + o * k;
      for (std::size_t t = 0; t < k; ++t) {
        const T* crow = col.data() + t * plane;
        T acc = 0;
        for (std::size_t p = 0; p < plane; ++p) acc += grow[p] * crow[p];
        gwrow[t] += acc;
      }
    }
    if (!want_input_grad) continue;
    std::fill(gcol.begin(), gcol.end(), T{0});
    for (std::size_t o = 0; o < cout; ++o) {
      const T* grow = gob + o * plane;
      const T* wrow = wt + o * k;
      for (std::size_t t = 0; t < k; ++t) {
        const T wv = wrow[t];
        T* gc = gcol.data() + t * plane;
        for (std::size_t p = 0; p < plane; ++p) gc[p] += wv * grow[p];
      }
    }
    col2im(gcol.data(), cin, h, w, g.input.data() + b * cin * plane);
  }
  return g;
}

template <typename T>
PoolResult<T> maxpool2x2_forward(const BasicTensor<T>& x) {
  expect_rank(x.dims(), 4, "maxpool2x2");
  const std::size_t n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
  if (h % 2 != 0 || w % 2 != 0)
    throw_error(ErrorKind::shape, "maxpool2x2 needs even spatial extents, got " + shape_string(x.dims()));
  const std::size_t oh = h / 2, ow = w / 2;
  PoolResult<T> r{BasicTensor<T>({n, c, oh, ow}), {}};
  r.argmax.resize(r.output.size());
  const T* src = x.data();
  std::size_t out_idx = 0;
  for (std::size_t plane = 0; plane < n * c; ++plane) {
    const std::size_t base = plane * h * w;
    for (std::size_t i = 0; i < oh; ++i) {
      for (std::size_t j = 0; j < ow; ++j, ++out_idx) {
        const std::size_t top = base + (2 * i) * w + 2 * j;
        // Ascending linear order; strict '>' keeps the earliest maximum.
        const std::size_t candidates[4] = {top, top + 1, top + w, top + w + 1};
        std::size_t best = candidates[0];
        for (std::size_t q = 1; q < 4; ++q)
          if (src[candidates[q]] > src[best]) best = candidates[q];
        r.output[out_idx] = src[best];
        r.argmax[out_idx] = best;
      }
    }
  }
  return r;
}

template <typename T>
BasicTensor<T> maxpool2x2_backward(const BasicTensor<T>& grad_y, std::span<const std::size_t> argmax,
                                   const Shape& input_shape) {
  expect_rank(input_shape, 4, "maxpool2x2_backward");
  const Shape expected{input_shape[0], input_shape[1], input_shape[2] / 2, input_shape[3] / 2};
  if (input_shape[2] % 2 != 0 || input_shape[3] % 2 != 0 || grad_y.dims() != expected ||
      argmax.size() != grad_y.size())
    throw_error(ErrorKind::shape, "maxpool2x2_backward grad " + shape_string(grad_y.dims()) +
                                      " inconsistent with input " + shape_string(input_shape));
  BasicTensor<T> gx(input_shape);
  for (std::size_t i = 0; i < argmax.size(); ++i) {
    if (argmax[i] >= gx.size())
      throw_error(ErrorKind::shape, "maxpool2x2_backward argmax index out of range");
    gx[argmax[i]] += grad_y[i];
  }
  return gx;
}

template <typename T>
BasicTensor<T> relu(const BasicTensor<T>& x) {
  BasicTensor<T> y = x;
  for (auto& v : y.values()) v = v > T{0} ? v : T{0};
  return y;
}

template <typename T>
BasicTensor<T> relu_backward(const BasicTensor<T>& x, const BasicTensor<T>& grad_y) {
  if (x.dims() != grad_y.dims())
    throw_error(ErrorKind::shape, "relu_backward " + shape_string(x.dims()) + " vs " +
                                      shape_string(grad_y.dims()));
  BasicTensor<T> gx(x.dims());
  for (std::size_t i = 0; i < x.size(); ++i) gx[i] = x[i] > T{0} ? grad_y[i] : T{0};
  return gx;
}

template <typename T>
BasicTensor<T> fc_forward(const BasicTensor<T>& x, const BasicFcLayer<T>& layer) {
  check_fc(x, layer);
  const std::size_t n = x.dim(0), nin = layer.in_features(), nout = layer.out_features();
  BasicTensor<T> out({n, nout});
  for (std::size_t r = 0; r < n; ++r) {
    const T* xr = x.data() + r * nin;
    for (std::size_t o = 0; o < nout; ++o) {
      const T* wr = layer.weight.data() + o * nin;
      T acc = layer.bias[o];
      for (std::size_t i = 0; i < nin; ++i) acc += xr[i] * wr[i];
      out[r * nout + o] = acc;
    }
  }
  return out;
}

template <typename T>
LayerGrads<T> fc_backward(const BasicTensor<T>& x, const BasicFcLayer<T>& layer,
                          const BasicTensor<T>& grad_out) {
  check_fc(x, layer);
  const std::size_t n = x.dim(0), nin = layer.in_features(), nout = layer.out_features();
  if (grad_out.dims() != Shape{n, nout})
    throw_error(ErrorKind::shape, "fc_backward grad " + shape_string(grad_out.dims()) +
                                      " vs output " + shape_string(Shape{n, nout}));
  LayerGrads<T> g{BasicTensor<T>(x.dims()), BasicTensor<T>(layer.weight.dims()),
                  BasicTensor<T>(layer.bias.dims())};
  for (std::size_t r = 0; r < n; ++r) {
    const T* xr = x.data() + r * nin;
    T* gxr = g.input.data() + r * nin;
    for (std::size_t o = 0; o < nout; ++o) {
      const T go = grad_out[r * nout + o];
      g.bias[o] += go;
      const T* wr = layer.weight.data() + o * nin;
      T* gwr = g.weight.data() + o * nin;
      for (std::size_t i = 0; i < nin; ++i) {
        gxr[i] += go * wr[i];
        gwr[i] += go * xr[i];
      }
    }
  }
  return g;
}

namespace {

// Probabilities of one row in double, max-subtracted.
void softmax_row(const auto* logits, std::size_t c, std::vector<double>& p) {
  double mx = -std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < c; ++j) mx = std::max(mx, static_cast<double>(logits[j]));
  double sum = 0.0;
  for (std::size_t j = 0; j < c; ++j) {
    p[j] = std::exp(static_cast<double>(logits[j]) - mx);
    sum += p[j];
  }
  for (std::size_t j = 0; j < c; ++j) p[j] /= sum;
}

}  // namespace

template <typename T>
BasicTensor<T> softmax(const BasicTensor<T>& logits) {
  expect_rank(logits.dims(), 2, "softmax");
  const std::size_t n = logits.dim(0), c = logits.dim(1);
  BasicTensor<T> out(logits.dims());
  std::vector<double> p(c);
  for (std::size_t r = 0; r < n; ++r) {
    softmax_row(logits.data() + r * c, c, p);
    for (std::size_t j = 0; j < c; ++j) out[r * c + j] = static_cast<T>(p[j]);
  }
  return out;
}

template <typename T>
LossResult<T> softmax_cross_entropy(const BasicTensor<T>& logits, std::span<const int> labels) {
  expect_rank(logits.dims(), 2, "softmax_cross_entropy");
  const std::size_t n = logits.dim(0), c = logits.dim(1);
  if (labels.size() != n)
    throw_error(ErrorKind::shape, "softmax_cross_entropy: " + std::to_string(labels.size()) +
                                      " labels for " + std::to_string(n) + " rows");
  LossResult<T> r{0.0, BasicTensor<T>(logits.dims())};
  std::vector<double> p(c);
  const double inv_n = 1.0 / static_cast<double>(n);
  for (std::size_t row = 0; row < n; ++row) {
    const int label = labels[row];
    if (label < 0 || static_cast<std::size_t>(label) >= c)
      throw_error(ErrorKind::data, "label " + std::to_string(label) + " outside [0, " +
                                       std::to_string(c) + ")");
    const auto* lr = logits.data() + row * c;
    // log p[label] = z_label - max - log(sum exp(z - max)), avoiding log(0) on saturation.
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < c; ++j) mx = std::max(mx, static_cast<double>(lr[j]));
    double sum = 0.0;
    for (std::size_t j = 0; j < c; ++j) {
      p[j] = std::exp(static_cast<double>(lr[j]) - mx);
      sum += p[j];
    }
    r.loss -= (static_cast<double>(lr[label]) - mx - std::log(sum)) * inv_n;
    for (std::size_t j = 0; j < c; ++j) {
      const double onehot = static_cast<std::size_t>(label) == j ? 1.0 : 0.0;
      r.grad_logits[row * c + j] = static_cast<T>((p[j] / sum - onehot) * inv_n);
    }
  }
  return r;
}

#define EDM_INSTANTIATE_LAYERS(T)                                                                \
  template BasicTensor<T> conv2d_forward(const BasicTensor<T>&, const BasicConvLayer<T>&);       \
  template LayerGrads<T> conv2d_backward(const BasicTensor<T>&, const BasicConvLayer<T>&,        \
                                         const BasicTensor<T>&, bool);                           \
  template PoolResult<T> maxpool2x2_forward(const BasicTensor<T>&);                              \
  template BasicTensor<T> maxpool2x2_backward(const BasicTensor<T>&, std::span<const std::size_t>, \
                                              const Shape&);                                     \
  template BasicTensor<T> relu(const BasicTensor<T>&);                                           \
  template BasicTensor<T> relu_backward(const BasicTensor<T>&, const BasicTensor<T>&);           \
  template BasicTensor<T> fc_forward(const BasicTensor<T>&, const BasicFcLayer<T>&);             \
  template LayerGrads<T> fc_backward(const BasicTensor<T>&, const BasicFcLayer<T>&,              \
                                     const BasicTensor<T>&);                                     \
  template BasicTensor<T> softmax(const BasicTensor<T>&);                                        \
  template LossResult<T> softmax_cross_entropy(const BasicTensor<T>&, std::span<const int>);

EDM_INSTANTIATE_LAYERS(float)
EDM_INSTANTIATE_LAYERS(double)

#undef EDM_INSTANTIATE_LAYERS

}  // namespace edm
