#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "edm/dataset.hpp"
#include "edm/image.hpp"
#include "edm/model.hpp"
#include "edm/task.hpp"

namespace edm {

struct TrainConfig {
  double learning_rate = 0.01;
  double momentum = 0.9;
  std::size_t batch_size = 32;
  std::size_t epochs = 0;
  std::uint64_t seed = 42;
  double threshold = 0.90;
  Task task = Task::binary;
  std::size_t input_size = 256;
  std::size_t depth = 5;
  double hflip_prob = 0.5;
  double vflip_prob = 0.5;

  void validate() const;
};

struct EpochRecord {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double test_accuracy = 0.0;
};

struct Metrics {
  double accuracy = 0.0;
  // rows = true class, cols = predicted class
  std::vector<std::vector<std::size_t>> confusion;
  double mean_loss = 0.0;
  std::vector<EpochRecord> history;
};

// Builds accuracy and confusion from label/prediction pairs; mean_loss is left at 0.
Metrics tally(std::span<const int> truth, std::span<const int> predicted, std::size_t num_classes);

// Index of the largest logit in row `row`; ties go to the lowest index.
std::size_t argmax_row(const Tensor& logits, std::size_t row);

// v <- momentum * v - lr * g ; p <- p + v, elementwise per parameter tensor.
template <typename T>
void sgd_step(BasicModel<T>& model, const std::vector<BasicTensor<T>>& grads,
              std::vector<BasicTensor<T>>& velocity, double learning_rate, double momentum);

template <typename T>
std::vector<BasicTensor<T>> zero_velocity(const BasicModel<T>& model);

// A decoded, resized and center-cropped sample ready for flips and batching.
struct PreparedSample {
  Image image;
  int class_id = 0;
};

std::vector<PreparedSample> prepare_samples(std::span<const LabeledSample> samples, std::size_t input_size);

struct TrainResult {
  Model model;
  Metrics metrics;
};

using EpochCallback = std::function<void(const EpochRecord&)>;

// Model from Rng(seed); epoch e (1-based) batches with Rng(seed ^ e) and draws
// flips from Rng(seed ^ (e << 32)). Test accuracy is recorded after every epoch.
// A non-finite loss raises a numeric error naming the epoch and batch.
TrainResult train(const TrainConfig& config, const Split& split, const EpochCallback& on_epoch = {});
TrainResult train(const TrainConfig& config, std::span<const PreparedSample> train_set,
                  std::span<const PreparedSample> test_set, const EpochCallback& on_epoch = {});

// Deterministic path (no flips), argmax per sample with ties to the lowest class id.
Metrics evaluate(const Model& model, std::span<const LabeledSample> samples);
Metrics evaluate(const Model& model, std::span<const PreparedSample> samples);

extern template void sgd_step(BasicModel<float>&, const std::vector<BasicTensor<float>>&,
                              std::vector<BasicTensor<float>>&, double, double);
extern template void sgd_step(BasicModel<double>&, const std::vector<BasicTensor<double>>&,
                              std::vector<BasicTensor<double>>&, double, double);
extern template std::vector<BasicTensor<float>> zero_velocity(const BasicModel<float>&);
extern template std::vector<BasicTensor<double>> zero_velocity(const BasicModel<double>&);

}  // namespace edm
