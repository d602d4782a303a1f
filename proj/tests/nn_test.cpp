#include <gtest/gtest.h>

#include <random>

#include "gradcheck.hpp"
#include "oracles.hpp"
#include "posecascade/errors.hpp"
#include "posecascade/nn.hpp"

namespace posecascade::nn {
namespace {

oracle::Volume to_volume(const Shape& s, const double* data) {
  oracle::Volume v{s.height, s.width, s.channels,
                   std::vector<double>(data, data + s.size())};
  return v;
}

void fill_random(Network& net, unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> u(-1, 1);
  for (auto& p : net.mutable_params()) {
    for (Eigen::Index i = 0; i < p.weights.size(); ++i) p.weights.data()[i] = u(rng);
    for (Eigen::Index i = 0; i < p.bias.size(); ++i) p.bias.data()[i] = u(rng);
  }
}

TEST(Forward, ConvMatchesDirectLoops) {
  for (int stride : {1, 2}) {
    const Shape in{8, 7, 3};
    const std::vector<LayerSpec> layers{LayerSpec::conv(3, 4, stride)};
    const Shape out = output_shape(layers[0], in, 0);
    Network net(in, layers, out.size());
    fill_random(net, 1);
    const Matrix x = testing::random_inputs(net, 2, 9);
    const Matrix y = infer_batch(net, x);

    const auto& p = net.params()[0];
    std::vector<std::vector<double>> w(4, std::vector<double>(27));
    for (int o = 0; o < 4; ++o) {
      for (int i = 0; i < 27; ++i) w[o][i] = p.weights(o, i);
    }
    const std::vector<double> b(p.bias.data(), p.bias.data() + 4);
    for (int col = 0; col < 2; ++col) {
      const auto ref = oracle::conv(to_volume(in, x.col(col).data()), w, b, 3, stride);
      ASSERT_EQ(ref.v.size(), static_cast<std::size_t>(y.rows()));
      for (std::size_t i = 0; i < ref.v.size(); ++i) {
        EXPECT_NEAR(y(static_cast<Eigen::Index>(i), col), ref.v[i], 1e-12);
      }
    }
  }
}

TEST(Forward, MaxPoolMatchesDirectLoops) {
  const Shape in{7, 7, 2};
  const std::vector<LayerSpec> layers{LayerSpec::max_pool(3, 2)};
  Network net(in, layers, output_shape(layers[0], in, 0).size());
  const Matrix x = testing::random_inputs(net, 3, 4);
  const Matrix y = infer_batch(net, x);
  for (int col = 0; col < 3; ++col) {
    const auto ref = oracle::max_pool(to_volume(in, x.col(col).data()), 3, 2);
    for (std::size_t i = 0; i < ref.v.size(); ++i) {
      EXPECT_EQ(y(static_cast<Eigen::Index>(i), col), ref.v[i]);
    }
  }
}

TEST(Forward, LrnMatchesDirectLoops) {
  const Shape in{3, 3, 7};
  LrnParams params;
  params.alpha = 0.3;
  const std::vector<LayerSpec> layers{LayerSpec::local_response_norm(params)};
  Network net(in, layers, in.size());
  const Matrix x = testing::random_inputs(net, 2, 5);
  const Matrix y = infer_batch(net, x);
  for (int col = 0; col < 2; ++col) {
    const auto ref = oracle::lrn(to_volume(in, x.col(col).data()), 5, 2.0, 0.3, 0.75);
    for (std::size_t i = 0; i < ref.v.size(); ++i) {
      EXPECT_NEAR(y(static_cast<Eigen::Index>(i), col), ref.v[i], 1e-13);
    }
  }
}

TEST(Forward, FullyConnectedIsAffine) {
  const Shape in{2, 2, 1};
  Network net(in, {LayerSpec::fully_connected(3)}, 3);
  fill_random(net, 2);
  const Matrix x = testing::random_inputs(net, 4, 6);
  const Matrix expected =
      (net.params()[0].weights * x).colwise() + net.params()[0].bias;
  EXPECT_TRUE(infer_batch(net, x).isApprox(expected, 1e-14));
}

TEST(Forward, ReluClampsNegatives) {
  Network net({1, 1, 3}, {LayerSpec::relu()}, 3);
  Matrix x(3, 1);
  x << -1.0, 0.0, 2.5;
  Matrix y = infer_batch(net, x);
  EXPECT_EQ(y(0, 0), 0.0);
  EXPECT_EQ(y(1, 0), 0.0);
  EXPECT_EQ(y(2, 0), 2.5);
}

TEST(Forward, DropoutIsIdentityAtInference) {
  Network net({1, 1, 5}, {LayerSpec::dropout(0.3)}, 5);
  const Matrix x = testing::random_inputs(net, 2, 1);
  EXPECT_EQ(infer_batch(net, x), x);
}

TEST(Forward, DropoutScalesKeptUnits) {
  Network net({1, 1, 2000}, {LayerSpec::dropout(0.5)}, 2000);
  const Matrix x = Matrix::Ones(2000, 1);
  Rng rng(3);
  const Matrix y = forward_batch(net, x, true, rng).output;
  int kept = 0;
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    ASSERT_TRUE(y(i, 0) == 0.0 || y(i, 0) == 2.0);
    kept += y(i, 0) != 0.0;
  }
  EXPECT_NEAR(kept / 2000.0, 0.5, 0.05);
}

TEST(Backward, MaxPoolTieRoutesToFirstIndex) {
  Network net({2, 2, 1}, {LayerSpec::max_pool(2)}, 1);
  Matrix x = Matrix::Constant(4, 1, 1.0);
  Rng rng(0);
  const auto fwd = forward_batch(net, x, false, rng);
  ASSERT_EQ(fwd.cache.argmax.size(), 1u);
  EXPECT_EQ(fwd.cache.argmax[0][0], 0);
}

TEST(Backward, StaleCacheIsRejected) {
  Network net = init_network({LayerSpec::fully_connected(2)}, {1, 1, 3}, 2, 1);
  Rng rng(0);
  const auto fwd = forward_batch(net, Matrix::Ones(3, 1), false, rng);
  net.mutable_params();
  EXPECT_THROW(backward(net, fwd.cache, Matrix::Ones(2, 1)), ContractViolation);
  Network other = init_network({LayerSpec::fully_connected(2)}, {1, 1, 3}, 2, 1);
  EXPECT_THROW(backward(other, fwd.cache, Matrix::Ones(2, 1)), ContractViolation);
}

TEST(Gradient, EveryLayerKindMatchesFiniteDifferences) {
  for (auto& c : testing::gradient_check_cases(11)) {
    ASSERT_LE(c.net.parameter_count(), 1000u) << c.name;
    const Matrix x = testing::random_inputs(c.net, 2, 12);
    const auto r = testing::gradient_check(c.net, x, c.train_mode, 13);
    EXPECT_LT(r.max_rel_error, 1e-4) << c.name;
    EXPECT_EQ(r.checked, c.net.parameter_count()) << c.name;
  }
}

TEST(Network, ShapeErrorsNameTheLayer) {
  try {
    Network net({4, 4, 1}, {LayerSpec::relu(), LayerSpec::conv(5, 2)}, 2);
    FAIL() << "expected ShapeError";
  } catch (const ShapeError& e) {
    EXPECT_NE(std::string(e.what()).find("layer 1"), std::string::npos) << e.what();
  }
  EXPECT_THROW(Network({4, 4, 1}, {LayerSpec::fully_connected(3)}, 2), ShapeError);
  EXPECT_THROW(LayerSpec::dropout(0.0).validate(), ShapeError);
}

TEST(Network, DeskArchitectureShapes) {
  const Network net = init_network(desk_architecture(18), kDeskInputShape, 18, 1);
  EXPECT_EQ(net.shapes().front(), (Shape{56, 56, 8}));
  EXPECT_EQ(net.output_dim(), 18u);
  EXPECT_GT(net.parameter_count(), 300000u);
}

TEST(Network, InitIsDeterministic) {
  const Network a = init_network(desk_architecture(4), kDeskInputShape, 4, 7);
  const Network b = init_network(desk_architecture(4), kDeskInputShape, 4, 7);
  for (std::size_t l = 0; l < a.params().size(); ++l) {
    EXPECT_EQ(a.params()[l].weights, b.params()[l].weights);
  }
}

TEST(Loss, MaskedL2) {
  const std::vector<double> pred{1, 2, 3, 4};
  const std::vector<double> target{0, 0, 0, 0};
  const LossResult r = l2_loss(pred, target, {true, false});
  EXPECT_DOUBLE_EQ(r.loss, 5.0);
  EXPECT_EQ(r.grad, (std::vector<double>{2, 4, 0, 0}));
}

TEST(Optimizer, AdagradStep) {
  Network net({1, 1, 1}, {LayerSpec::fully_connected(1)}, 1);
  OptimizerState state = make_optimizer_state(net, 0.1);
  Gradients g = zero_gradients(net);
  g[0].weights(0, 0) = 2.0;
  g[0].bias(0) = -0.5;
  adagrad_step(net, g, state);
  EXPECT_NEAR(net.params()[0].weights(0, 0), -0.1 * 2.0 / (2.0 + 1e-8), 1e-15);
  EXPECT_NEAR(net.params()[0].bias(0), 0.1 * 0.5 / (0.5 + 1e-8), 1e-15);
  adagrad_step(net, g, state);
  EXPECT_NEAR(state.accumulators[0].weights(0, 0), 8.0, 1e-15);
}

}  // namespace
}  // namespace posecascade::nn
