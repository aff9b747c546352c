#include <cmath>
#include <filesystem>
#include <random>

#include "doctest.h"
#include "degradelab/checkpoint.hpp"
#include "degradelab/nets.hpp"
#include "fd_check.hpp"

using namespace degradelab;
using fdcheck::random_tensor;

namespace {

constexpr double kLayerTol = 1e-4;
constexpr double kNetTol = 1e-3;
constexpr double kMaxKinked = 0.10;

void randomize(const std::vector<Param<double>*>& params, std::mt19937_64& rng,
               double scale = 0.3) {
  std::normal_distribution<double> d(0.0, scale);
  for (auto* p : params)
    for (double& v : p->value) v = d(rng);
}

fdcheck::Result layer_fd(const LayerSpec& spec, Tensor<double> x,
                         std::uint64_t seed, double param_scale = 0.3) {
  std::mt19937_64 rng(seed);
  auto layer = make_layer<double>(spec, "l");
  std::vector<Param<double>*> params;
  layer->collect_params(params);
  randomize(params, rng, param_scale);
  return fdcheck::check_layer(*layer, x, rng);
}

// Keeps activations away from kinks so central differences stay smooth.
Tensor<double> away_from_zero(Tensor<double> t) {
  for (double& v : t.data) v += v >= 0 ? 0.05 : -0.05;
  return t;
}

}  // namespace

TEST_CASE("layer gradients match central differences") {
  std::mt19937_64 rng(11);
  const Tensor<double> x = random_tensor(2, 3, 8, 8, rng);

  SUBCASE("conv 3x3") {
    auto r = layer_fd(LayerSpec::conv(3, 3, 4), x, 1);
    CHECK(r.input_err < kLayerTol);
    CHECK(r.param_err < kLayerTol);
  }
  SUBCASE("conv 5x5") {
    auto r = layer_fd(LayerSpec::conv(5, 3, 2), x, 2);
    CHECK(r.input_err < kLayerTol);
    CHECK(r.param_err < kLayerTol);
  }
  SUBCASE("conv 4x4 stride 2") {
    auto r = layer_fd(LayerSpec::conv(4, 3, 4, 2), x, 3);
    CHECK(r.input_err < kLayerTol);
    CHECK(r.param_err < kLayerTol);
  }
  SUBCASE("conv 3x3 stride 2") {
    auto r = layer_fd(LayerSpec::conv(3, 3, 3, 2), x, 4);
    CHECK(r.input_err < kLayerTol);
    CHECK(r.param_err < kLayerTol);
  }
  SUBCASE("instance norm") {
    auto r = layer_fd(LayerSpec::instance_norm(3), x, 5, 1.0);
    CHECK(r.input_err < kLayerTol);
    CHECK(r.param_err < kLayerTol);
  }
  SUBCASE("relu") {
    CHECK(layer_fd(LayerSpec::relu(), away_from_zero(x), 6).input_err < kLayerTol);
  }
  SUBCASE("leaky relu") {
    CHECK(layer_fd(LayerSpec::leaky_relu(0.2), away_from_zero(x), 7).input_err <
          kLayerTol);
  }
  SUBCASE("sigmoid") {
    CHECK(layer_fd(LayerSpec::sigmoid(), x, 8).input_err < kLayerTol);
  }
  SUBCASE("avg pool") {
    CHECK(layer_fd(LayerSpec::avg_pool2(), x, 9).input_err < kLayerTol);
  }
  SUBCASE("pixel shuffle") {
    std::mt19937_64 r2(12);
    const Tensor<double> x12 = random_tensor(2, 12, 4, 4, r2);
    CHECK(layer_fd(LayerSpec::pixel_shuffle(2), x12, 10).input_err < kLayerTol);
  }
  SUBCASE("residual block") {
    auto spec = LayerSpec::res_block({LayerSpec::conv(3, 3, 3),
                                      LayerSpec::instance_norm(3),
                                      LayerSpec::relu(), LayerSpec::conv(3, 3, 3)});
    auto r = layer_fd(spec, x, 13);
    CHECK(r.input_err < kLayerTol);
    CHECK(r.param_err < kLayerTol);
    CHECK(r.kinked_fraction() < kMaxKinked);
  }
  SUBCASE("global residual") {
    auto spec = LayerSpec::global_residual(
        {LayerSpec::conv(3, 3, 4), LayerSpec::conv(3, 4, 3, 2)});
    auto r = layer_fd(spec, x, 14);
    CHECK(r.input_err < kLayerTol);
    CHECK(r.param_err < kLayerTol);
  }
}

TEST_CASE("full networks pass end-to-end gradient checks") {
  std::mt19937_64 rng(21);
  SUBCASE("downsampler") {
    auto net = build_downsampler<double>(4, 1);
    randomize(net.params(), rng, 0.2);
    auto r = fdcheck::check_net(net, random_tensor(1, 3, 8, 8, rng), rng);
    CHECK(r.input_err < kNetTol);
    CHECK(r.param_err < kNetTol);
    CHECK(r.kinked_fraction() < kMaxKinked);
  }
  SUBCASE("discriminator") {
    auto net = build_discriminator<double>(2);
    randomize(net.params(), rng, 0.3);
    auto r = fdcheck::check_net(net, random_tensor(1, 3, 32, 32, rng), rng);
    CHECK(r.input_err < kNetTol);
    CHECK(r.param_err < kNetTol);
    CHECK(r.kinked_fraction() < kMaxKinked);
  }
  SUBCASE("sr") {
    auto net = build_sr<double>(4, 1, 2);
    randomize(net.params(), rng, 0.2);
    auto r = fdcheck::check_net(net, random_tensor(1, 3, 8, 8, rng), rng);
    CHECK(r.input_err < kNetTol);
    CHECK(r.param_err < kNetTol);
    CHECK(r.kinked_fraction() < kMaxKinked);
  }
}

TEST_CASE("instance norm of a constant channel is zero") {
  auto layer = make_layer<double>(LayerSpec::instance_norm(3), "n");
  Tensor<double> x(1, 3, 4, 4, 0.75);
  const Tensor<double> y = layer->forward(x);
  for (double v : y.data) CHECK(v == 0.0);
}

TEST_CASE("identity 1x1 convolution passes input through") {
  auto layer = make_layer<double>(LayerSpec::conv(1, 3, 3), "c");
  std::vector<Param<double>*> params;
  layer->collect_params(params);
  for (auto* p : params) p->zero_grad(), std::fill(p->value.begin(), p->value.end(), 0.0);
  for (int c = 0; c < 3; ++c) params[0]->value[c * 3 + c] = 1.0;
  std::mt19937_64 rng(3);
  const Tensor<double> x = random_tensor(2, 3, 5, 6, rng);
  const Tensor<double> y = layer->forward(x);
  CHECK(y.same_shape(x));
  for (std::size_t i = 0; i < x.size(); ++i) CHECK(y.data[i] == x.data[i]);
}

TEST_CASE("downsampler structure") {
  SUBCASE("zero body reduces to 2x2 average pooling") {
    auto net = build_downsampler<double>(8, 1);
    for (auto* p : net.params()) std::fill(p->value.begin(), p->value.end(), 0.0);
    std::mt19937_64 rng(4);
    const Tensor<double> x = random_tensor(2, 3, 8, 12, rng);
    const Tensor<double> y = net.forward(x);
    REQUIRE(y.h == 4);
    REQUIRE(y.w == 6);
    for (int n = 0; n < 2; ++n)
      for (int c = 0; c < 3; ++c)
        for (int i = 0; i < 4; ++i)
          for (int j = 0; j < 6; ++j) {
            const double avg = 0.25 * (x.at(n, c, 2 * i, 2 * j) +
                                       x.at(n, c, 2 * i + 1, 2 * j) +
                                       x.at(n, c, 2 * i, 2 * j + 1) +
                                       x.at(n, c, 2 * i + 1, 2 * j + 1));
            CHECK(y.at(n, c, i, j) == doctest::Approx(avg).epsilon(1e-15));
          }
  }
  SUBCASE("parameter count for n=32, b=2") {
    const int n = 32, b = 2;
    const int head = 3 * n * 25 + n;
    const int conv3 = n * n * 9 + n;
    const int block = 2 * conv3 + 2 * n;  // two convs plus IN scale/shift
    const int tail = n * 3 * 9 + 3;
    const int expected = head + 2 * b * block + conv3 + tail;
    CHECK(expected == 86787);
    CHECK(build_downsampler<float>(n, b).param_count() == expected);
  }
  SUBCASE("paper-scale preset has about 0.9M parameters") {
    const auto count = build_downsampler<float>(64, 4).param_count();
    CHECK(count > 600000);
    CHECK(count < 1200000);
  }
  SUBCASE("only x2 models are built") {
    CHECK_THROWS(downsampler_spec(16, 1, 4));
  }
}

TEST_CASE("discriminator is fully convolutional") {
  auto net = build_discriminator<float>(8);
  init_params(net, 5);
  std::mt19937_64 rng(6);
  std::normal_distribution<float> d(0.f, 0.5f);
  Tensor<float> x64(2, 3, 64, 64), x128(1, 3, 128, 128);
  for (float& v : x64.data) v = d(rng);
  for (float& v : x128.data) v = d(rng);
  const Tensor<float> y64 = net.forward(x64);
  CHECK(y64.c == 1);
  CHECK(y64.h == 2);
  CHECK(y64.w == 2);
  for (float v : y64.data) {
    CHECK(v > 0.f);
    CHECK(v < 1.f);
  }
  const Tensor<float> y128 = net.forward(x128);
  CHECK(y128.h == 4);
  CHECK(y128.w == 4);

  for (auto* p : net.params()) {
    if (p->name.find("weight") != std::string::npos &&
        p->shape.size() == 4 && p->shape[0] == 1) {
      std::fill(p->value.begin(), p->value.end(), 0.f);
    }
    if (p->name.find("bias") != std::string::npos && p->size() == 1) {
      p->value[0] = 0.f;
    }
  }
  for (float v : net.forward(x64).data) CHECK(v == 0.5f);
}

TEST_CASE("sr network output scale") {
  auto net = build_sr<float>(8, 2, 2);
  init_params(net, 1);
  Tensor<float> x(1, 3, 7, 9, 0.1f);
  const Tensor<float> y = net.forward(x);
  CHECK(y.c == 3);
  CHECK(y.h == 14);
  CHECK(y.w == 18);

  SUBCASE("zero body and tail weights give a bias-only output") {
    for (auto* p : net.params()) {
      if (p->name.find("weight") != std::string::npos) {
        std::fill(p->value.begin(), p->value.end(), 0.f);
      }
    }
    auto* tail_bias = net.params().back();
    for (std::size_t i = 0; i < tail_bias->size(); ++i) tail_bias->value[i] = 0.1f * i;
    const Tensor<float> z = net.forward(x);
    for (int c = 0; c < 3; ++c)
      for (int i = 0; i < z.h; ++i)
        for (int j = 0; j < z.w; ++j) CHECK(z.at(0, c, i, j) == 0.1f * c);
  }
}

TEST_CASE("initialization") {
  auto net = build_discriminator<float>(64);
  init_params(net, 42);
  SUBCASE("conv weights have standard deviation near 0.02") {
    const Param<float>* big = nullptr;
    for (auto* p : net.params()) {
      if (p->name.find("weight") != std::string::npos && p->size() >= 10000) {
        big = p;
        break;
      }
    }
    REQUIRE(big != nullptr);
    double sum = 0.0, sq = 0.0;
    for (float v : big->value) {
      sum += v;
      sq += double(v) * v;
    }
    const double n = static_cast<double>(big->size());
    const double sd = std::sqrt(sq / n - (sum / n) * (sum / n));
    CHECK(sd >= 0.018);
    CHECK(sd <= 0.022);
  }
  SUBCASE("biases zero, norm scale one and shift zero") {
    for (auto* p : net.params()) {
      const bool bias = p->name.ends_with("bias") || p->name.ends_with("beta");
      const bool gamma = p->name.ends_with("gamma");
      for (float v : p->value) {
        if (bias) CHECK(v == 0.f);
        if (gamma) CHECK(v == 1.f);
      }
    }
  }
  SUBCASE("same seed gives identical parameters") {
    auto other = build_discriminator<float>(64);
    init_params(other, 42);
    for (std::size_t i = 0; i < net.params().size(); ++i) {
      CHECK(net.params()[i]->value == other.params()[i]->value);
    }
  }
}

TEST_CASE("forward pass is per-sample and batch-order independent") {
  auto net = build_downsampler<float>(8, 1);
  init_params(net, 9);
  std::mt19937_64 rng(10);
  std::normal_distribution<float> d(0.f, 0.5f);
  Tensor<float> x(3, 3, 16, 16);
  for (float& v : x.data) v = d(rng);
  Tensor<float> rev(3, 3, 16, 16);
  for (int n = 0; n < 3; ++n) {
    std::copy(x.sample(n), x.sample(n) + x.sample_size(), rev.sample(2 - n));
  }
  const Tensor<float> a = net.forward(x);
  const Tensor<float> b = net.forward(rev);
  for (int n = 0; n < 3; ++n) {
    for (std::size_t i = 0; i < a.sample_size(); ++i) {
      CHECK(a.sample(n)[i] == b.sample(2 - n)[i]);
    }
  }
}

TEST_CASE("checkpoint round trip is bit-identical") {
  auto net = build_downsampler<float>(8, 1);
  init_params(net, 3);
  AdamState<float> adam;
  std::mt19937_64 rng(4);
  std::normal_distribution<float> d(0.f, 0.5f);
  Tensor<float> x(1, 3, 16, 16);
  for (float& v : x.data) v = d(rng);
  const Tensor<float> y = net.forward(x);
  Tensor<float> g(y.n, y.c, y.h, y.w, 0.01f);
  net.zero_grad();
  net.backward(g);
  adam_step(net.params(), AdamConfig{}, adam);

  const auto path = std::filesystem::temp_directory_path() / "dl_ckpt_test.ckpt";
  save_checkpoint(path, net, &adam);
  Checkpoint loaded = load_checkpoint(path);
  std::filesystem::remove(path);

  CHECK(loaded.net.spec().width == 8);
  CHECK(loaded.net.spec().blocks == 1);
  REQUIRE(loaded.adam.has_value());
  CHECK(loaded.adam->t == 1);
  CHECK(loaded.adam->m == adam.m);
  CHECK(loaded.adam->v == adam.v);
  const Tensor<float> y1 = net.forward(x);
  const Tensor<float> y2 = loaded.net.forward(x);
  CHECK(y1.data == y2.data);
}

TEST_CASE("non-finite input is rejected") {
  auto net = build_downsampler<float>(4, 1);
  Tensor<float> x(1, 3, 8, 8, 0.f);
  x.data[5] = std::nanf("");
  CHECK_THROWS(net.forward(x));
}
