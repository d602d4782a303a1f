#pragma once

// Finite-difference gradient check of nn::backward on small networks.

#include <algorithm>
#include <string>
#include <utility>
#include <vector>

#include "oracles.hpp"
#include "posecascade/nn.hpp"

namespace posecascade::testing {

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::size_t checked = 0;
};

// Compares backward() against central differences of
// f(theta) = sum(weights .* forward(inputs)) for every parameter. Dropout
// masks are frozen by reseeding the generator before every pass.
inline GradCheckResult gradient_check(nn::Network net, const nn::Matrix& inputs,
                                      bool train_mode, std::uint64_t seed,
                                      double step = 1e-6, double floor = 1e-4) {
  nn::Rng weight_rng(seed + 1);
  std::normal_distribution<double> normal;
  nn::Matrix out_weights(static_cast<Eigen::Index>(net.output_dim()), inputs.cols());
  for (Eigen::Index i = 0; i < out_weights.size(); ++i) {
    out_weights.data()[i] = normal(weight_rng);
  }
  auto objective = [&] {
    nn::Rng rng(seed);
    return (nn::forward_batch(net, inputs, train_mode, rng).output.array() *
            out_weights.array())
        .sum();
  };
  nn::Rng rng(seed);
  const nn::BatchForward fwd = nn::forward_batch(net, inputs, train_mode, rng);
  const nn::Gradients grads = nn::backward(net, fwd.cache, out_weights);

  GradCheckResult result;
  for (std::size_t l = 0; l < net.layers().size(); ++l) {
    auto check_block = [&](auto member, const auto& analytic) {
      const Eigen::Index n = analytic.size();
      for (Eigen::Index i = 0; i < n; ++i) {
        double& value = (net.mutable_params()[l].*member).data()[i];
        const double numeric = oracle::central_difference(objective, value, step);
        const double err =
            oracle::relative_error(analytic.data()[i], numeric, floor);
        result.max_rel_error = std::max(result.max_rel_error, err);
        ++result.checked;
      }
    };
    check_block(&nn::LayerParams::weights, grads[l].weights);
    check_block(&nn::LayerParams::bias, grads[l].bias);
  }
  return result;
}

struct GradCheckCase {
  std::string name;
  nn::Network net;
  bool train_mode = false;
};

// One small network (< 1000 parameters) per layer kind. Parameter-free
// layers sit between two parameterized ones so their backward pass feeds
// the checked gradients.
inline std::vector<GradCheckCase> gradient_check_cases(std::uint64_t seed) {
  using nn::LayerSpec;
  nn::LrnParams strong;
  strong.size = 3;
  strong.k = 1.0;
  strong.alpha = 0.5;
  strong.beta = 0.75;
  const Shape in{7, 7, 2};
  std::vector<GradCheckCase> cases;
  auto add = [&](std::string name, std::vector<LayerSpec> layers, bool train) {
    cases.push_back({std::move(name), nn::init_network(std::move(layers), in, 3, seed),
                     train});
  };
  add("conv", {LayerSpec::conv(3, 3), LayerSpec::fully_connected(3)}, false);
  add("conv_stride2", {LayerSpec::conv(3, 3, 2), LayerSpec::fully_connected(3)}, false);
  add("relu", {LayerSpec::conv(3, 3), LayerSpec::relu(), LayerSpec::fully_connected(3)},
      false);
  add("lrn", {LayerSpec::conv(3, 4), LayerSpec::local_response_norm(strong),
              LayerSpec::fully_connected(3)},
      false);
  add("lrn_default", {LayerSpec::conv(3, 4), LayerSpec::local_response_norm(),
                      LayerSpec::fully_connected(3)},
      false);
  add("max_pool", {LayerSpec::conv(2, 3), LayerSpec::max_pool(2),
                   LayerSpec::fully_connected(3)},
      false);
  add("max_pool_overlap", {LayerSpec::conv(3, 3), LayerSpec::max_pool(3, 2),
                           LayerSpec::fully_connected(3)},
      false);
  add("fully_connected", {LayerSpec::fully_connected(8), LayerSpec::relu(),
                          LayerSpec::fully_connected(3)},
      false);
  add("dropout", {LayerSpec::conv(3, 3), LayerSpec::relu(), LayerSpec::dropout(0.5),
                  LayerSpec::fully_connected(3)},
      true);
  return cases;
}

inline nn::Matrix random_inputs(const nn::Network& net, int batch, std::uint64_t seed) {
  nn::Rng rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  nn::Matrix x(static_cast<Eigen::Index>(net.input_shape().size()), batch);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = u(rng);
  return x;
}

}  // namespace posecascade::testing
