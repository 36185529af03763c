#include <cmath>
#include <cstdio>
#include <vector>

#include <gtest/gtest.h>

#include "edm/error.hpp"
#include "edm/model.hpp"
#include "golden.hpp"
#include "gradcheck.hpp"

namespace edm {
namespace {

using testing::max_relative_error;
using testing::numeric_gradient;
using testing::random_tensor;

using testing::random_batch;

TEST(ModelConfig, DepthFiveHeadInputs) {
  const auto c = ModelConfig::for_depth(Task::binary, 256, 5);
  EXPECT_EQ(c.channels, (std::vector<std::size_t>{8, 16, 32, 64, 128}));
  EXPECT_EQ(c.pool_after, std::vector<bool>(5, true));
  EXPECT_EQ(c.head_inputs(), 128u * 8 * 8);
  EXPECT_EQ(c.head_inputs(), 8192u);
}

TEST(ModelConfig, SingleLayerHeadInputs) {
  const auto c = ModelConfig::for_depth(Task::multi, 64, 1);
  EXPECT_EQ(c.head_inputs(), 8u * 32 * 32);
  EXPECT_EQ(c.num_classes(), 4u);
}

TEST(ModelConfig, PoolingStopsAtSideEight) {
  const auto c = ModelConfig::for_depth(Task::binary, 256, 10);
  const std::vector<bool> want{true, true, true, true, true, false, false, false, false, false};
  EXPECT_EQ(c.pool_after, want);
  EXPECT_EQ(c.final_side(), 8u);
  EXPECT_EQ(ModelConfig::for_depth(Task::binary, 64, 10).pooled_layers(), 3u);
  EXPECT_EQ(ModelConfig::for_depth(Task::binary, 16, 2).pool_after, (std::vector<bool>{true, false}));
}

TEST(ModelConfig, NonPowerOfTwoInputsStayValid) {
  for (std::size_t size : {8u, 24u, 40u, 100u, 200u, 300u})
    for (std::size_t depth = 1; depth <= 10; ++depth) {
      const auto c = ModelConfig::for_depth(Task::binary, size, depth);
      EXPECT_GE(c.final_side(), 4u);
      EXPECT_NO_THROW(c.validate());
    }
}

TEST(ModelConfig, RejectsInconsistentConfigs) {
  auto c = ModelConfig::for_depth(Task::binary, 64, 3);
  c.channels.pop_back();
  EXPECT_THROW(c.validate(), Error);
  c = ModelConfig::for_depth(Task::binary, 64, 3);
  c.class_names.push_back("extra");
  EXPECT_THROW(c.validate(), Error);
  c = ModelConfig::for_depth(Task::binary, 16, 2);
  c.pool_after = {true, true};  // 16 -> 8 -> 4 is allowed
  EXPECT_NO_THROW(c.validate());
  c.depth = 3;
  c.channels = {8, 16, 32};
  c.pool_after = {true, true, true};  // 16 -> 2 is below the floor
  EXPECT_THROW(c.validate(), Error);
  EXPECT_THROW(ModelConfig::for_depth(Task::binary, 64, 0), Error);
  EXPECT_THROW(ModelConfig::for_depth(Task::binary, 64, 11), Error);
}

TEST(ParameterNames, FollowLayerOrder) {
  EXPECT_EQ(parameter_names(1),
            (std::vector<std::string>{"conv1.weight", "conv1.bias", "head.weight", "head.bias"}));
  EXPECT_EQ(parameter_names(7).size(), 16u);
}

TEST(Model, InitializationIsBoundedAndSeeded) {
  Rng a(5), b(5);
  const auto cfg = ModelConfig::for_depth(Task::binary, 32, 2);
  const Model m1 = Model::initialize(cfg, a);
  const Model m2 = Model::initialize(cfg, b);
  const auto p1 = m1.parameters();
  const auto p2 = m2.parameters();
  for (std::size_t i = 0; i < p1.size(); ++i) EXPECT_EQ(*p1[i], *p2[i]);
  const float bound = std::sqrt(6.0f / 27.0f);
  for (float v : m1.conv_layers()[0].weight.values()) EXPECT_LE(std::abs(v), bound);
  for (float v : m1.conv_layers()[0].bias.values()) EXPECT_EQ(v, 0.0f);
  EXPECT_EQ(m1.parameter_count(), cfg.parameter_count());
}

TEST(Model, LogitsMatchFrozenGolden) {
  const Tensor logits = testing::golden_model().predict(testing::golden_probe());
  const auto& golden = testing::kGoldenLogits;
  ASSERT_EQ(logits.dims(), (Shape{2, 4}));
  for (std::size_t i = 0; i < golden.size(); ++i) EXPECT_EQ(logits[i], golden[i]) << "logit " << i;
}

TEST(Model, ForwardIsPure) {
  Rng rng(1);
  Model model = Model::initialize(ModelConfig::for_depth(Task::binary, 32, 3), rng);
  const Tensor x = random_batch(3, 32, 2);
  const Tensor a = model.predict(x);
  const Tensor b = model.predict(x);
  const Tensor c = model.forward(x, Mode::training);
  EXPECT_EQ(a, b);
  EXPECT_EQ(a, c);
}

TEST(Model, WrongInputSizeIsShapeError) {
  Rng rng(1);
  const Model model = Model::initialize(ModelConfig::for_depth(Task::binary, 32, 1), rng);
  EXPECT_THROW(model.predict(random_batch(1, 16, 1)), Error);
  EXPECT_THROW(model.predict(Tensor({1, 1, 32, 32})), Error);
}

TEST(Model, BackwardNeedsTrainingForward) {
  Rng rng(1);
  Model model = Model::initialize(ModelConfig::for_depth(Task::binary, 16, 1), rng);
  const Tensor x = random_batch(1, 16, 3);
  try {
    model.backward(Tensor({1, 2}));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::state);
  }
  model.forward(x, Mode::inference);
  EXPECT_THROW(model.backward(Tensor({1, 2})), Error);
  model.forward(x, Mode::training);
  EXPECT_NO_THROW(model.backward(Tensor({1, 2})));
  EXPECT_THROW(model.backward(Tensor({1, 2})), Error);
}

TEST(Model, ZeroUpstreamGivesZeroGradients) {
  Rng rng(4);
  Model model = Model::initialize(ModelConfig::for_depth(Task::multi, 16, 2), rng);
  model.forward(random_batch(2, 16, 5), Mode::training);
  for (const auto& g : model.backward(Tensor({2, 4})))
    for (float v : g.values()) EXPECT_EQ(v, 0.0f);
}

TEST(Model, GradientShapesMirrorParametersAtEveryDepth) {
  for (std::size_t depth = 1; depth <= kMaxDepth; ++depth) {
    Rng rng(depth);
    Model model = Model::initialize(ModelConfig::for_depth(Task::binary, 32, depth), rng);
    model.forward(random_batch(1, 32, depth), Mode::training);
    const auto grads = model.backward(Tensor::filled({1, 2}, 0.5f));
    const auto params = model.parameters();
    ASSERT_EQ(grads.size(), params.size());
    ASSERT_EQ(grads.size(), 2 * depth + 2);
    for (std::size_t i = 0; i < grads.size(); ++i) EXPECT_EQ(grads[i].dims(), params[i]->dims()) << depth;
  }
}

TEST(Model, FullModelMatchesFiniteDifferences) {
  const auto cfg = ModelConfig::for_depth(Task::binary, 16, 2);
  std::uint64_t seed = 1;
  Model64 model = [&] {
    for (;; ++seed) {
      Rng rng(seed);
      Model64 m = Model64::initialize(cfg, rng);
      Rng xr(seed + 1000);
      if (testing::kink_margin(m, testing::random_tensor({2, 3, 16, 16}, xr, 0.0, 1.0)) > 1e-3) return m;
    }
  }();
  Rng xr(seed + 1000);
  const Tensor64 x = testing::random_tensor({2, 3, 16, 16}, xr, 0.0, 1.0);
  const std::vector<int> labels{0, 1};

  const Tensor64 logits = model.forward(x, Mode::training);
  const auto analytic = model.backward(softmax_cross_entropy(logits, labels).grad_logits);
  auto loss = [&] { return softmax_cross_entropy(model.predict(x), labels).loss; };
  const auto params = model.parameters();
  const auto names = parameter_names(cfg.depth);
  for (std::size_t i = 0; i < params.size(); ++i) {
    const Tensor64 numeric = numeric_gradient(*params[i], loss);
    EXPECT_LT(max_relative_error(analytic[i], numeric), 1e-3) << names[i];
  }
}

}  // namespace
}  // namespace edm
