#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "edm/tensor.hpp"

namespace edm {

// 3x3 convolution, stride 1, zero padding 1: output spatial extents equal the input's.
template <typename T>
struct BasicConvLayer {
  BasicTensor<T> weight;  // [C_out, C_in, 3, 3]
  BasicTensor<T> bias;    // [C_out]

  std::size_t out_channels() const { return weight.dim(0); }
  std::size_t in_channels() const { return weight.dim(1); }
};

template <typename T>
struct BasicFcLayer {
  BasicTensor<T> weight;  // [n_out, n_in]
  BasicTensor<T> bias;    // [n_out]

  std::size_t out_features() const { return weight.dim(0); }
  std::size_t in_features() const { return weight.dim(1); }
};

template <typename T>
struct LayerGrads {
  BasicTensor<T> input;
  BasicTensor<T> weight;
  BasicTensor<T> bias;
};

template <typename T>
struct PoolResult {
  BasicTensor<T> output;
  // Flat index into the pooled input of each output element's winner.
  std::vector<std::size_t> argmax;
};

template <typename T>
struct LossResult {
  double loss = 0.0;
  BasicTensor<T> grad_logits;
};

constexpr std::size_t kKernel = 3;

// x: [N, C_in, H, W] -> [N, C_out, H, W]
template <typename T>
BasicTensor<T> conv2d_forward(const BasicTensor<T>& x, const BasicConvLayer<T>& layer);

// When want_input_grad is false the returned input gradient is left empty
// (first layer of a network never needs it).
template <typename T>
LayerGrads<T> conv2d_backward(const BasicTensor<T>& x, const BasicConvLayer<T>& layer,
                              const BasicTensor<T>& grad_out, bool want_input_grad = true);

// 2x2 window, stride 2. Ties go to the lowest linear index in the window.
template <typename T>
PoolResult<T> maxpool2x2_forward(const BasicTensor<T>& x);

template <typename T>
BasicTensor<T> maxpool2x2_backward(const BasicTensor<T>& grad_y,
                                   std::span<const std::size_t> argmax, const Shape& input_shape);

template <typename T>
BasicTensor<T> relu(const BasicTensor<T>& x);

// Derivative at exactly 0 is taken as 0.
template <typename T>
BasicTensor<T> relu_backward(const BasicTensor<T>& x, const BasicTensor<T>& grad_y);

// x: [N, n_in] -> x * W^T + b : [N, n_out]
template <typename T>
BasicTensor<T> fc_forward(const BasicTensor<T>& x, const BasicFcLayer<T>& layer);

template <typename T>
LayerGrads<T> fc_backward(const BasicTensor<T>& x, const BasicFcLayer<T>& layer,
                          const BasicTensor<T>& grad_out);

// Row-wise softmax with per-row max subtraction, evaluated in double.
template <typename T>
BasicTensor<T> softmax(const BasicTensor<T>& logits);

// Mean over rows of -log p[label]; grad = (softmax - onehot) / N.
template <typename T>
LossResult<T> softmax_cross_entropy(const BasicTensor<T>& logits, std::span<const int> labels);

using ConvLayer = BasicConvLayer<float>;
using FcLayer = BasicFcLayer<float>;

}  // namespace edm
