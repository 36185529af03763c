#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "edm/layers.hpp"
#include "edm/rng.hpp"
#include "edm/task.hpp"
#include "edm/tensor.hpp"

namespace edm {

inline constexpr std::size_t kMaxDepth = 10;
inline constexpr std::size_t kChannelSchedule[kMaxDepth] = {8, 16, 32, 64, 128, 128, 128, 128, 128, 128};

struct ModelConfig {
  Task task = Task::binary;
  std::size_t input_size = 256;
  std::size_t depth = 5;
  std::vector<std::size_t> channels;
  std::vector<bool> pool_after;
  std::vector<std::string> class_names;

  // Default architecture for a depth: channels (8, 16, 32, 64, 128, ...) truncated to
  // depth, 2x2 pooling after each leading layer for as long as the side stays even
  // and at least 8 after halving.
  static ModelConfig for_depth(Task task, std::size_t input_size, std::size_t depth);

  // Throws a shape error when the invariants do not hold.
  void validate() const;

  std::size_t num_classes() const noexcept { return class_names.size(); }
  std::size_t pooled_layers() const noexcept;
  // Spatial side of the last conv block's output.
  std::size_t final_side() const noexcept;
  std::size_t head_inputs() const noexcept;
  std::size_t parameter_count() const noexcept;

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

// Number of leading layers that get a pool for the given input size.
std::size_t default_pool_count(std::size_t input_size, std::size_t depth) noexcept;

// conv{i}.weight, conv{i}.bias for i = 1..depth, then head.weight, head.bias.
std::vector<std::string> parameter_names(std::size_t depth);

enum class Mode { inference, training };

template <typename T>
class BasicModel {
 public:
  // Kaiming-uniform weights in [-sqrt(6/fan_in), sqrt(6/fan_in)), zero biases,
  // drawn layer by layer in parameter order.
  static BasicModel initialize(ModelConfig config, Rng& rng);

  BasicModel(ModelConfig config, std::vector<BasicConvLayer<T>> convs, BasicFcLayer<T> head);

  const ModelConfig& config() const noexcept { return config_; }
  const std::vector<BasicConvLayer<T>>& conv_layers() const noexcept { return convs_; }
  const BasicFcLayer<T>& head() const noexcept { return head_; }

  // batch: [N, 3, S, S] -> logits [N, classes]. Training mode keeps the activations
  // needed by backward().
  BasicTensor<T> forward(const BasicTensor<T>& batch, Mode mode = Mode::inference);
  BasicTensor<T> predict(const BasicTensor<T>& batch) const;

  // One gradient per parameter tensor, in parameter_names() order. Consumes the
  // training cache; a second call without a new training forward is a state error.
  std::vector<BasicTensor<T>> backward(const BasicTensor<T>& grad_logits);

  bool has_cache() const noexcept { return cache_.has_value(); }

  // Mutable views in parameter_names() order.
  std::vector<BasicTensor<T>*> parameters();
  std::vector<const BasicTensor<T>*> parameters() const;
  std::size_t parameter_count() const noexcept;

  template <typename U>
  BasicModel<U> cast() const {
    std::vector<BasicConvLayer<U>> convs;
    for (const auto& c : convs_) convs.push_back({c.weight.template cast<U>(), c.bias.template cast<U>()});
    return BasicModel<U>(config_, std::move(convs),
                         {head_.weight.template cast<U>(), head_.bias.template cast<U>()});
  }

 private:
  struct BlockCache {
    BasicTensor<T> input;
    BasicTensor<T> pre_activation;
    Shape pool_input_shape;
    std::vector<std::size_t> argmax;
  };
  struct Cache {
    std::vector<BlockCache> blocks;
    Shape feature_shape;
    BasicTensor<T> features;
  };

  BasicTensor<T> run(const BasicTensor<T>& batch, Cache* cache) const;

  ModelConfig config_;
  std::vector<BasicConvLayer<T>> convs_;
  BasicFcLayer<T> head_;
  std::optional<Cache> cache_;
};

using Model = BasicModel<float>;
using Model64 = BasicModel<double>;

extern template class BasicModel<float>;
extern template class BasicModel<double>;

}  // namespace edm
