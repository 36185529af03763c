#include <benchmark/benchmark.h>

#include "edm/image.hpp"
#include "edm/layers.hpp"
#include "edm/model.hpp"

namespace {

using namespace edm;

Tensor random_tensor(Shape dims, Rng& rng) {
  Tensor t(std::move(dims));
  for (auto& v : t.values()) v = static_cast<float>(rng.uniform(-1.0, 1.0));
  return t;
}

void BM_Matmul(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  Rng rng(1);
  const Tensor a = random_tensor({n, n}, rng), b = random_tensor({n, n}, rng);
  for (auto _ : state) benchmark::DoNotOptimize(matmul(a, b));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n * n * n));
}
BENCHMARK(BM_Matmul)->Arg(64)->Arg(128)->Arg(256);

// args: input channels, output channels, spatial side
void BM_ConvForward(benchmark::State& state) {
  const auto ci = static_cast<std::size_t>(state.range(0)), co = static_cast<std::size_t>(state.range(1)),
             s = static_cast<std::size_t>(state.range(2));
  Rng rng(2);
  const ConvLayer layer{random_tensor({co, ci, 3, 3}, rng), random_tensor({co}, rng)};
  const Tensor x = random_tensor({8, ci, s, s}, rng);
  for (auto _ : state) benchmark::DoNotOptimize(conv2d_forward(x, layer));
}
BENCHMARK(BM_ConvForward)->Args({3, 8, 64})->Args({8, 16, 32})->Args({32, 64, 16})->Args({3, 8, 256});

void BM_ConvBackward(benchmark::State& state) {
  const auto ci = static_cast<std::size_t>(state.range(0)), co = static_cast<std::size_t>(state.range(1)),
             s = static_cast<std::size_t>(state.range(2));
  Rng rng(3);
  const ConvLayer layer{random_tensor({co, ci, 3, 3}, rng), random_tensor({co}, rng)};
  const Tensor x = random_tensor({8, ci, s, s}, rng);
  const Tensor g = random_tensor({8, co, s, s}, rng);
  for (auto _ : state) benchmark::DoNotOptimize(conv2d_backward(x, layer, g));
}
BENCHMARK(BM_ConvBackward)->Args({3, 8, 64})->Args({8, 16, 32})->Args({32, 64, 16});

void BM_MaxPool(benchmark::State& state) {
  Rng rng(4);
  const Tensor x = random_tensor({8, 16, 64, 64}, rng);
  for (auto _ : state) benchmark::DoNotOptimize(maxpool2x2_forward(x));
}
BENCHMARK(BM_MaxPool);

// args: input side, depth
void BM_ModelForward(benchmark::State& state) {
  const auto s = static_cast<std::size_t>(state.range(0)), depth = static_cast<std::size_t>(state.range(1));
  Rng rng(5);
  const Model model = Model::initialize(ModelConfig::for_depth(Task::multi, s, depth), rng);
  const Tensor x = random_tensor({1, 3, s, s}, rng);
  for (auto _ : state) benchmark::DoNotOptimize(model.predict(x));
}
BENCHMARK(BM_ModelForward)->Args({64, 3})->Args({256, 5})->Args({256, 10})->Unit(benchmark::kMillisecond);

void BM_TrainStep(benchmark::State& state) {
  Rng rng(6);
  Model model = Model::initialize(ModelConfig::for_depth(Task::multi, 64, 3), rng);
  const Tensor x = random_tensor({32, 3, 64, 64}, rng);
  const std::vector<int> labels(32, 1);
  for (auto _ : state) {
    const auto loss = softmax_cross_entropy(model.forward(x, Mode::training), labels);
    benchmark::DoNotOptimize(model.backward(loss.grad_logits));
  }
}
BENCHMARK(BM_TrainStep)->Unit(benchmark::kMillisecond);

void BM_PrepareImage(benchmark::State& state) {
  Image img(640, 480);
  Rng rng(7);
  for (auto& v : img.pixels) v = static_cast<std::uint8_t>(rng.below(256));
  for (auto _ : state) benchmark::DoNotOptimize(to_eval_tensor(img, 256));
}
BENCHMARK(BM_PrepareImage)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
