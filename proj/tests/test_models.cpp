#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "peaky/models.hpp"
#include "peaky/signals.hpp"
#include "test_helpers.hpp"

using namespace peaky;

namespace {
const InputSequence kInputN4 = single_label_input(4);
}

TEST_CASE("uniform initializations give uniform distributions") {
  const PosteriorTable bias = posteriors(uniform_bias({"B", "a"}), kInputN4);
  for (const auto& row : bias.probs) {
    CHECK(row[0] == 0.5);
    CHECK(row[1] == 0.5);
  }

  const PosteriorTable ffnn = posteriors(uniform_ffnn(2, {"B", "a"}), kInputN4);
  for (const auto& row : ffnn.probs) CHECK(row[0] == 0.5);

  const MemoryModel mem = uniform_memory(3, {"B", "a"});
  REQUIRE(mem.memory.size() == 3);
  for (const auto& row : mem.memory) CHECK(row == std::vector<double>{0.0, 0.0});

  const EmissionTable emis = emissions(GenerativeModel{});
  for (const auto& row : emis.probs)
    for (double v : row) CHECK(v == 0.5);
}

TEST_CASE("ffnn posteriors evaluate the softmax of x W") {
  FfnnModel model = uniform_ffnn(2, {"a", "B"});
  model.weights = {{3.0, 0.0}, {0.0, 3.0}};
  const PosteriorTable post = posteriors(model, kInputN4);
  const double sig3 = 1.0 / (1.0 + std::exp(-3.0));
  // Label frames (x = x_a) sit at t = n .. 3n-1.
  CHECK(post.probs[4][post.label_index("a")] == Catch::Approx(sig3).epsilon(1e-12));
  CHECK(post.probs[0][post.label_index("B")] == Catch::Approx(sig3).epsilon(1e-12));
}

TEST_CASE("two-param posteriors follow the frame symbol") {
  const TwoParamModel model{-0.8, 0.3};
  const PosteriorTable post = posteriors(model, kInputN4);
  const int a = post.label_index("a"), B = post.label_index("B");
  // theta_label < 0: blank is preferred even on label frames.
  CHECK(post.probs[4][B] > 0.5);
  CHECK(post.probs[4][a] == Catch::Approx(sigmoid(2 * -0.8)));
  CHECK(post.probs[0][B] == Catch::Approx(sigmoid(2 * 0.3)));

  InputSequence bad = kInputN4;
  bad.frame_symbol[0] = "z";
  CHECK_THROWS_AS(posteriors(model, bad), std::invalid_argument);
}

TEST_CASE("posteriors reject mismatched shapes") {
  CHECK_THROWS_AS(posteriors(uniform_ffnn(3, {"a", "B"}), kInputN4), std::invalid_argument);
  CHECK_THROWS_AS(posteriors(uniform_memory(5, {"a", "B"}), kInputN4), std::invalid_argument);
  CHECK_THROWS_AS(posteriors(GenerativeModel{}, kInputN4), std::invalid_argument);
}

TEST_CASE("emission table saturates with theta") {
  const EmissionTable mid = emissions(GenerativeModel{0.5, 0.5});
  CHECK(mid.probs[0][0] == Catch::Approx(sigmoid(1.0)));  // p(x_a | a) = sigmoid(2*0.5)
  const EmissionTable hot = emissions(GenerativeModel{40.0, 40.0});
  CHECK(hot.probs[0][0] == Catch::Approx(1.0));
  CHECK(hot.probs[1][1] == Catch::Approx(1.0));
}

TEST_CASE("posterior rows sum to one for random parameters") {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> dist(-25.0, 25.0);
  std::vector<ModelSpec> models = {uniform_bias({"a", "B"}), uniform_ffnn(2, {"a", "B"}, true),
                                   uniform_memory(kInputN4.T(), {"a", "B"}), TwoParamModel{}};
  for (auto& model : models) {
    for (int draw = 0; draw < 30; ++draw) {
      for_each_parameter(model, [&](double& v) { v = dist(rng); });
      const PosteriorTable post = posteriors(model, kInputN4);
      for (const auto& row : post.probs) {
        double sum = 0.0;
        for (double v : row) {
          sum += v;
          CHECK(v >= 0.0);
          CHECK(v <= 1.0);
        }
        CHECK(std::abs(sum - 1.0) <= 1e-9);
      }
    }
  }
}

TEST_CASE("two-param and bias-free ffnn span the same posterior family") {
  std::mt19937_64 rng(4242);
  std::uniform_real_distribution<double> dist(-3.0, 3.0);
  for (int draw = 0; draw < 50; ++draw) {
    const double ta = dist(rng), tb = dist(rng);
    const PosteriorTable two = posteriors(TwoParamModel{ta, tb}, kInputN4);

    FfnnModel ffnn = uniform_ffnn(2, {"a", "B"});
    ffnn.weights = {{ta, -ta}, {-tb, tb}};  // row 0 is the x_a direction
    const PosteriorTable net = posteriors(ffnn, kInputN4);

    for (int t = 0; t < kInputN4.T(); ++t)
      for (const auto& label : {"a", "B"})
        CHECK(std::abs(two.probs[t][two.label_index(label)] -
                       net.probs[t][net.label_index(label)]) <= 1e-12);
  }
  // And back: any bias-free weight matrix reduces to the two scalars.
  for (int draw = 0; draw < 50; ++draw) {
    FfnnModel ffnn = uniform_ffnn(2, {"a", "B"});
    for (auto& row : ffnn.weights)
      for (double& v : row) v = dist(rng);
    const double ta = (ffnn.weights[0][0] - ffnn.weights[0][1]) / 2;
    const double tb = (ffnn.weights[1][1] - ffnn.weights[1][0]) / 2;
    const PosteriorTable net = posteriors(ffnn, kInputN4);
    const PosteriorTable two = posteriors(TwoParamModel{ta, tb}, kInputN4);
    for (int t = 0; t < kInputN4.T(); ++t)
      for (const auto& label : {"a", "B"})
        CHECK(std::abs(two.probs[t][two.label_index(label)] -
                       net.probs[t][net.label_index(label)]) <= 1e-12);
  }
}

TEST_CASE("gradient steps move parameters opposite the gradient") {
  BiasModel bias = uniform_bias({"a", "B"});
  BiasModel grad = bias;
  grad.bias = {1.0, -1.0};
  const auto stepped = std::get<BiasModel>(apply_gradient_step(bias, grad, 0.1));
  CHECK(stepped.bias[0] == Catch::Approx(-0.1));
  CHECK(stepped.bias[1] == Catch::Approx(0.1));

  const auto same = std::get<BiasModel>(apply_gradient_step(bias, uniform_bias({"a", "B"}), 0.5));
  CHECK(same.bias == bias.bias);

  const TwoParamModel two{0.0, 0.0};
  const TwoParamModel tg{0.2, -0.3};
  const auto two_stepped = std::get<TwoParamModel>(apply_gradient_step(two, tg, 1.0));
  CHECK(two_stepped.theta_label == Catch::Approx(-0.2));
  CHECK(two_stepped.theta_blank == Catch::Approx(0.3));

  CHECK_THROWS_AS(apply_gradient_step(bias, tg, 0.1), std::invalid_argument);
}

TEST_CASE("checkpoint round-trip is exact") {
  std::mt19937_64 rng(5150);
  std::uniform_real_distribution<double> dist(-7.0, 7.0);
  std::vector<ModelSpec> models = {uniform_bias({"a", "B"}), uniform_ffnn(2, {"a", "B"}, true),
                                   uniform_ffnn(3, {"a", "b", "c", "B"}),
                                   uniform_memory(6, {"a", "B"}), TwoParamModel{},
                                   GenerativeModel{}};
  for (auto& model : models) {
    for_each_parameter(model, [&](double& v) { v = dist(rng); });
    const ModelSpec restored = parse_model(serialize_model(model));
    REQUIRE(restored.index() == model.index());
    CHECK(flatten_parameters(restored) == flatten_parameters(model));
  }
}
