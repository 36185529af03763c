#include "edm/model.hpp"

#include <cmath>

#include "edm/error.hpp"

namespace edm {

std::size_t default_pool_count(std::size_t input_size, std::size_t depth) noexcept {
  std::size_t p = 0;
  std::size_t side = input_size;
  while (p < depth && side % 2 == 0 && side / 2 >= 8) {
    side /= 2;
    ++p;
  }
  return p;
}

ModelConfig ModelConfig::for_depth(Task task, std::size_t input_size, std::size_t depth) {
  if (depth < 1 || depth > kMaxDepth)
    throw_error(ErrorKind::shape, "depth " + std::to_string(depth) + " outside 1.." +
                                      std::to_string(kMaxDepth));
  ModelConfig c;
  c.task = task;
  c.input_size = input_size;
  c.depth = depth;
  c.channels.assign(kChannelSchedule, kChannelSchedule + depth);
  const std::size_t pools = default_pool_count(input_size, depth);
  c.pool_after.assign(depth, false);
  for (std::size_t i = 0; i < pools; ++i) c.pool_after[i] = true;
  c.class_names = LabelMap::for_task(task).classes;
  c.validate();
  return c;
}

void ModelConfig::validate() const {
  auto fail = [](const std::string& msg) { throw_error(ErrorKind::shape, "model config: " + msg); };
  if (depth < 1 || depth > kMaxDepth) fail("depth " + std::to_string(depth) + " outside 1..10");
  if (channels.size() != depth || pool_after.size() != depth)
    fail("channels/pool_after length must equal depth " + std::to_string(depth));
  for (auto ch : channels)
    if (ch == 0) fail("zero channel count");
  if (input_size < 8) fail("input_size " + std::to_string(input_size) + " below 8");
  if (class_names.size() != class_count(task))
    fail(std::string(task_name(task)) + " task needs " + std::to_string(class_count(task)) +
         " class names");
  std::size_t side = input_size;
  for (std::size_t i = 0; i < depth; ++i) {
    if (!pool_after[i]) continue;
    if (side % 2 != 0) fail("pooling layer " + std::to_string(i + 1) + " sees odd side " + std::to_string(side));
    side /= 2;
  }
  if (side < 4) fail("pooled side " + std::to_string(side) + " below 4");
}

std::size_t ModelConfig::pooled_layers() const noexcept {
  std::size_t p = 0;
  for (bool b : pool_after) p += b ? 1 : 0;
  return p;
}

std::size_t ModelConfig::final_side() const noexcept { return input_size >> pooled_layers(); }

std::size_t ModelConfig::head_inputs() const noexcept {
  const std::size_t side = final_side();
  return channels.empty() ? 0 : channels.back() * side * side;
}

std::size_t ModelConfig::parameter_count() const noexcept {
  std::size_t n = 0;
  std::size_t cin = 3;
  for (auto cout : channels) {
    n += cout * cin * kKernel * kKernel + cout;
    cin = cout;
  }
  return n + num_classes() * head_inputs() + num_classes();
}

std::vector<std::string> parameter_names(std::size_t depth) {
  std::vector<std::string> names;
  names.reserve(2 * depth + 2);
  for (std::size_t i = 1; i <= depth; ++i) {
    names.push_back("conv" + std::to_string(i) + ".weight");
    names.push_back("conv" + std::to_string(i) + ".bias");
  }
  names.emplace_back("head.weight");
  names.emplace_back("head.bias");
  return names;
}

template <typename T>
BasicModel<T> BasicModel<T>::initialize(ModelConfig config, Rng& rng) {
  config.validate();
  auto fill_uniform = [&rng](BasicTensor<T>& t, std::size_t fan_in) {
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
    for (auto& v : t.values()) v = static_cast<T>(rng.uniform(-bound, bound));
  };
  std::vector<BasicConvLayer<T>> convs;
  std::size_t cin = 3;
  for (std::size_t i = 0; i < config.depth; ++i) {
    const std::size_t cout = config.channels[i];
    BasicConvLayer<T> layer{BasicTensor<T>({cout, cin, kKernel, kKernel}), BasicTensor<T>({cout})};
    fill_uniform(layer.weight, cin * kKernel * kKernel);
    convs.push_back(std::move(layer));
    cin = cout;
  }
  const std::size_t nin = config.head_inputs();
  BasicFcLayer<T> head{BasicTensor<T>({config.num_classes(), nin}), BasicTensor<T>({config.num_classes()})};
  fill_uniform(head.weight, nin);
  return BasicModel(std::move(config), std::move(convs), std::move(head));
}

template <typename T>
BasicModel<T>::BasicModel(ModelConfig config, std::vector<BasicConvLayer<T>> convs, BasicFcLayer<T> head)
    : config_(std::move(config)), convs_(std::move(convs)), head_(std::move(head)) {
  config_.validate();
  if (convs_.size() != config_.depth)
    throw_error(ErrorKind::shape, "model has " + std::to_string(convs_.size()) +
                                      " conv layers, config says " + std::to_string(config_.depth));
  std::size_t cin = 3;
  for (std::size_t i = 0; i < convs_.size(); ++i) {
    const Shape want_w{config_.channels[i], cin, kKernel, kKernel};
    if (convs_[i].weight.dims() != want_w || convs_[i].bias.dims() != Shape{config_.channels[i]})
      throw_error(ErrorKind::shape, "conv" + std::to_string(i + 1) + " has weight " +
                                        shape_string(convs_[i].weight.dims()) + ", expected " +
                                        shape_string(want_w));
    cin = config_.channels[i];
  }
  const Shape want_head{config_.num_classes(), config_.head_inputs()};
  if (head_.weight.dims() != want_head || head_.bias.dims() != Shape{config_.num_classes()})
    throw_error(ErrorKind::shape, "head weight " + shape_string(head_.weight.dims()) +
                                      ", expected " + shape_string(want_head));
}

template <typename T>
BasicTensor<T> BasicModel<T>::run(const BasicTensor<T>& batch, Cache* cache) const {
  const std::size_t s = config_.input_size;
  if (batch.rank() != 4 || batch.dim(1) != 3 || batch.dim(2) != s || batch.dim(3) != s)
    throw_error(ErrorKind::shape, "model input " + shape_string(batch.dims()) + ", expected [N,3," +
                                      std::to_string(s) + "," + std::to_string(s) + "]");
  BasicTensor<T> x = batch;
  for (std::size_t i = 0; i < convs_.size(); ++i) {
    BasicTensor<T> z = conv2d_forward(x, convs_[i]);
    BasicTensor<T> a = relu(z);
    BlockCache block;
    if (config_.pool_after[i]) {
      auto pooled = maxpool2x2_forward(a);
      block.pool_input_shape = a.dims();
      block.argmax = std::move(pooled.argmax);
      a = std::move(pooled.output);
    }
    if (cache) {
      block.input = std::move(x);
      block.pre_activation = std::move(z);
      cache->blocks.push_back(std::move(block));
    }
    x = std::move(a);
  }
  const std::size_t n = x.dim(0);
  const Shape feature_shape = x.dims();
  BasicTensor<T> features = std::move(x).reshaped({n, shape_size(feature_shape) / n});
  BasicTensor<T> logits = fc_forward(features, head_);
  if (cache) {
    cache->feature_shape = feature_shape;
    cache->features = std::move(features);
  }
  return logits;
}

template <typename T>
BasicTensor<T> BasicModel<T>::forward(const BasicTensor<T>& batch, Mode mode) {
  cache_.reset();
  if (mode == Mode::inference) return run(batch, nullptr);
  Cache cache;
  auto logits = run(batch, &cache);
  cache_ = std::move(cache);
  return logits;
}

template <typename T>
BasicTensor<T> BasicModel<T>::predict(const BasicTensor<T>& batch) const {
  return run(batch, nullptr);
}

template <typename T>
std::vector<BasicTensor<T>> BasicModel<T>::backward(const BasicTensor<T>& grad_logits) {
  if (!cache_) throw_error(ErrorKind::state, "backward called without a training-mode forward pass");
  Cache cache = std::move(*cache_);
  cache_.reset();

  const std::size_t depth = convs_.size();
  std::vector<BasicTensor<T>> grads(2 * depth + 2);
  auto head_grads = fc_backward(cache.features, head_, grad_logits);
  grads[2 * depth] = std::move(head_grads.weight);
  grads[2 * depth + 1] = std::move(head_grads.bias);

  BasicTensor<T> g = std::move(head_grads.input).reshaped(cache.feature_shape);
  for (std::size_t i = depth; i-- > 0;) {
    auto& block = cache.blocks[i];
    if (config_.pool_after[i]) g = maxpool2x2_backward(g, block.argmax, block.pool_input_shape);
    g = relu_backward(block.pre_activation, g);
    auto cg = conv2d_backward(block.input, convs_[i], g, i > 0);
    grads[2 * i] = std::move(cg.weight);
    grads[2 * i + 1] = std::move(cg.bias);
    g = std::move(cg.input);
  }
  return grads;
}

template <typename T>
std::vector<BasicTensor<T>*> BasicModel<T>::parameters() {
  std::vector<BasicTensor<T>*> out;
  for (auto& c : convs_) {
    out.push_back(&c.weight);
    out.push_back(&c.bias);
  }
  out.push_back(&head_.weight);
  out.push_back(&head_.bias);
  return out;
}

template <typename T>
std::vector<const BasicTensor<T>*> BasicModel<T>::parameters() const {
  std::vector<const BasicTensor<T>*> out;
  for (const auto& c : convs_) {
    out.push_back(&c.weight);
    out.push_back(&c.bias);
  }
  out.push_back(&head_.weight);
  out.push_back(&head_.bias);
  return out;
}

template <typename T>
std::size_t BasicModel<T>::parameter_count() const noexcept {
  std::size_t n = head_.weight.size() + head_.bias.size();
  for (const auto& c : convs_) n += c.weight.size() + c.bias.size();
  return n;
}

template class BasicModel<float>;
template class BasicModel<double>;

}  // namespace edm
