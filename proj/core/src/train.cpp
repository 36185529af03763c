#include "edm/train.hpp"

#include <cmath>
#include <numeric>
#include <string>

#include "edm/error.hpp"

namespace edm {

namespace {

constexpr std::size_t kEvalBatch = 32;

}  // namespace

void TrainConfig::validate() const {
  auto fail = [](const std::string& msg) { throw_error(ErrorKind::data, "train config: " + msg); };
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) fail("learning rate must be positive");
  if (!(momentum >= 0.0 && momentum < 1.0)) fail("momentum must lie in [0, 1)");
  if (batch_size == 0) fail("batch size must be at least 1");
  if (!std::isfinite(threshold) || threshold < 0.0) fail("threshold must be finite and non-negative");
  if (!(hflip_prob >= 0.0 && hflip_prob <= 1.0) || !(vflip_prob >= 0.0 && vflip_prob <= 1.0))
    fail("flip probabilities must lie in [0, 1]");
}

Metrics tally(std::span<const int> truth, std::span<const int> predicted, std::size_t num_classes) {
  if (truth.size() != predicted.size())
    throw_error(ErrorKind::shape, "tally: label and prediction counts differ");
  Metrics m;
  m.confusion.assign(num_classes, std::vector<std::size_t>(num_classes, 0));
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const auto t = static_cast<std::size_t>(truth[i]);
    const auto p = static_cast<std::size_t>(predicted[i]);
    if (t >= num_classes || p >= num_classes) throw_error(ErrorKind::data, "tally: class id out of range");
    ++m.confusion[t][p];
  }
  std::size_t diag = 0;
  for (std::size_t c = 0; c < num_classes; ++c) diag += m.confusion[c][c];
  m.accuracy = truth.empty() ? 0.0 : static_cast<double>(diag) / static_cast<double>(truth.size());
  return m;
}

std::size_t argmax_row(const Tensor& logits, std::size_t row) {
  const std::size_t c = logits.dim(1);
  const float* r = logits.data() + row * c;
  std::size_t best = 0;
  for (std::size_t j = 1; j < c; ++j)
    if (r[j] > r[best]) best = j;
  return best;
}

template <typename T>
void sgd_step(BasicModel<T>& model, const std::vector<BasicTensor<T>>& grads,
              std::vector<BasicTensor<T>>& velocity, double learning_rate, double momentum) {
  auto params = model.parameters();
  if (grads.size() != params.size() || velocity.size() != params.size())
    throw_error(ErrorKind::shape, "sgd_step: " + std::to_string(params.size()) + " parameters, " +
                                      std::to_string(grads.size()) + " gradients, " +
                                      std::to_string(velocity.size()) + " velocities");
  const T lr = static_cast<T>(learning_rate);
  const T mu = static_cast<T>(momentum);
  for (std::size_t i = 0; i < params.size(); ++i) {
    BasicTensor<T>& p = *params[i];
    if (grads[i].dims() != p.dims() || velocity[i].dims() != p.dims())
      throw_error(ErrorKind::shape, "sgd_step: parameter " + shape_string(p.dims()) + " vs gradient " +
                                        shape_string(grads[i].dims()) + " / velocity " +
                                        shape_string(velocity[i].dims()));
    T* v = velocity[i].data();
    const T* g = grads[i].data();
    T* w = p.data();
    for (std::size_t k = 0; k < p.size(); ++k) {
      v[k] = mu * v[k] - lr * g[k];
      w[k] += v[k];
    }
  }
}

template <typename T>
std::vector<BasicTensor<T>> zero_velocity(const BasicModel<T>& model) {
  std::vector<BasicTensor<T>> v;
  for (const auto* p : model.parameters()) v.emplace_back(p->dims());
  return v;
}

std::vector<PreparedSample> prepare_samples(std::span<const LabeledSample> samples, std::size_t input_size) {
  std::vector<PreparedSample> out;
  out.reserve(samples.size());
  for (const auto& s : samples) out.push_back({prepare(decode_image(s.path), input_size), s.class_id});
  return out;
}

Metrics evaluate(const Model& model, std::span<const PreparedSample> samples) {
  if (samples.empty()) throw_error(ErrorKind::data, "evaluate: no samples");
  const std::size_t s = model.config().input_size;
  const std::size_t classes = model.config().num_classes();
  std::vector<int> truth, predicted;
  truth.reserve(samples.size());
  predicted.reserve(samples.size());
  double loss_sum = 0.0;
  for (std::size_t start = 0; start < samples.size(); start += kEvalBatch) {
    const std::size_t n = std::min(kEvalBatch, samples.size() - start);
    Tensor batch({n, 3, s, s});
    std::vector<int> labels(n);
    for (std::size_t k = 0; k < n; ++k) {
      write_input(samples[start + k].image, batch, k);
      labels[k] = samples[start + k].class_id;
    }
    const Tensor logits = model.predict(batch);
    loss_sum += softmax_cross_entropy(logits, labels).loss * static_cast<double>(n);
    for (std::size_t k = 0; k < n; ++k) {
      truth.push_back(labels[k]);
      predicted.push_back(static_cast<int>(argmax_row(logits, k)));
    }
  }
  Metrics m = tally(truth, predicted, classes);
  m.mean_loss = loss_sum / static_cast<double>(samples.size());
  return m;
}

Metrics evaluate(const Model& model, std::span<const LabeledSample> samples) {
  if (samples.empty()) throw_error(ErrorKind::data, "evaluate: no samples");
  const auto prepared = prepare_samples(samples, model.config().input_size);
  return evaluate(model, std::span<const PreparedSample>(prepared));
}

TrainResult train(const TrainConfig& config, std::span<const PreparedSample> train_set,
                  std::span<const PreparedSample> test_set, const EpochCallback& on_epoch) {
  config.validate();
  if (train_set.empty() || test_set.empty())
    throw_error(ErrorKind::data, "train: both train and test sets must be non-empty");

  Rng init_rng(config.seed);
  Model model = Model::initialize(ModelConfig::for_depth(config.task, config.input_size, config.depth), init_rng);
  auto velocity = zero_velocity(model);
  const AugmentPolicy policy{config.input_size, config.hflip_prob, config.vflip_prob};
  const std::size_t s = config.input_size;

  std::vector<std::size_t> indices(train_set.size());
  std::iota(indices.begin(), indices.end(), std::size_t{0});

  Metrics metrics;
  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    const auto batches = make_batches(std::span<const std::size_t>(indices), config.batch_size,
                                      config.seed ^ epoch, true);
    Rng flip_rng(config.seed ^ (static_cast<std::uint64_t>(epoch) << 32));
    double loss_sum = 0.0;
    std::size_t seen = 0;
    for (std::size_t b = 0; b < batches.size(); ++b) {
      const auto& members = batches[b];
      Tensor x({members.size(), 3, s, s});
      std::vector<int> labels(members.size());
      for (std::size_t k = 0; k < members.size(); ++k) {
        const PreparedSample& sample = train_set[members[k]];
        write_input(apply_flips(sample.image, policy, flip_rng), x, k);
        labels[k] = sample.class_id;
      }
      const Tensor logits = model.forward(x, Mode::training);
      const auto loss = softmax_cross_entropy(logits, labels);
      if (!std::isfinite(loss.loss))
        throw_error(ErrorKind::numeric, "training diverged: non-finite loss at epoch " +
                                            std::to_string(epoch) + ", batch " + std::to_string(b + 1));
      const auto grads = model.backward(loss.grad_logits);
      sgd_step(model, grads, velocity, config.learning_rate, config.momentum);
      loss_sum += loss.loss * static_cast<double>(members.size());
      seen += members.size();
    }
    const Metrics test_metrics = evaluate(model, test_set);
    const EpochRecord record{epoch, loss_sum / static_cast<double>(seen), test_metrics.accuracy};
    metrics.history.push_back(record);
    if (on_epoch) on_epoch(record);
  }

  Metrics final_metrics = evaluate(model, test_set);
  final_metrics.history = std::move(metrics.history);
  return {std::move(model), std::move(final_metrics)};
}

TrainResult train(const TrainConfig& config, const Split& split, const EpochCallback& on_epoch) {
  config.validate();
  if (split.train.empty() || split.test.empty())
    throw_error(ErrorKind::data, "train: both train and test sets must be non-empty");
  const auto train_set = prepare_samples(split.train, config.input_size);
  const auto test_set = prepare_samples(split.test, config.input_size);
  return train(config, train_set, test_set, on_epoch);
}

template void sgd_step(BasicModel<float>&, const std::vector<BasicTensor<float>>&,
                       std::vector<BasicTensor<float>>&, double, double);
template void sgd_step(BasicModel<double>&, const std::vector<BasicTensor<double>>&,
                       std::vector<BasicTensor<double>>&, double, double);
template std::vector<BasicTensor<float>> zero_velocity(const BasicModel<float>&);
template std::vector<BasicTensor<double>> zero_velocity(const BasicModel<double>&);

}  // namespace edm
