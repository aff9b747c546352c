#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "degradelab/layers.hpp"
#include "degradelab/tensor.hpp"

namespace degradelab {

enum class NetRole { Downsampler, Discriminator, SR };

const char* role_name(NetRole role);
NetRole parse_role(const std::string& name);

struct NetSpec {
  NetRole role = NetRole::Downsampler;
  int width = 0;
  int blocks = 0;
  int scale = 1;
  std::vector<LayerSpec> layers;
};

/// Head C5, b residual blocks (C3+IN+ReLU, C3), stride-2 C3, b more blocks,
/// tail C3 to RGB, all wrapped in a 2x2 average-pooling global residual.
NetSpec downsampler_spec(int width, int blocks, int scale = 2);
/// Five stride-2 4x4 convolutions (width, 2w, 4w, 8w, 1) with instance norm on
/// the middle three, LeakyReLU(0.2) and a sigmoid; 64x64 maps to 2x2.
NetSpec discriminator_spec(int width = 64);
/// EDSR-style: head C3, b blocks (C3+ReLU+C3), C3 to n*s^2, pixel shuffle,
/// tail C3 to RGB.
NetSpec sr_spec(int width, int blocks, int scale);

template <typename T>
class Net {
 public:
  explicit Net(NetSpec spec);
  Net(const Net& other);
  Net& operator=(const Net& other);
  Net(Net&&) noexcept = default;
  Net& operator=(Net&&) noexcept = default;

  /// Rejects non-finite inputs.
  Tensor<T> forward(const Tensor<T>& x);
  Tensor<T> backward(const Tensor<T>& grad_out, bool param_grads = true);

  const NetSpec& spec() const { return spec_; }
  const std::vector<Param<T>*>& params() { return params_; }
  std::vector<const Param<T>*> params() const;
  Param<T>* find_param(const std::string& name);
  std::size_t param_count() const;
  void zero_grad();

 private:
  NetSpec spec_;
  std::unique_ptr<Layer<T>> root_;
  std::vector<Param<T>*> params_;
};

template <typename T>
Net<T> build_downsampler(int width, int blocks, int scale = 2) {
  return Net<T>(downsampler_spec(width, blocks, scale));
}
template <typename T>
Net<T> build_discriminator(int width = 64) {
  return Net<T>(discriminator_spec(width));
}
template <typename T>
Net<T> build_sr(int width, int blocks, int scale) {
  return Net<T>(sr_spec(width, blocks, scale));
}

/// Conv weights ~ N(0, 0.02^2), biases 0, instance-norm scale 1 and shift 0.
template <typename T>
void init_params(Net<T>& net, std::uint64_t seed);

/// Copies parameter values between nets of identical architecture, possibly
/// of different precision.
template <typename From, typename To>
void copy_params(const Net<From>& from, Net<To>& to);

/// Runs a single unit-domain image through the net.
template <typename T>
Image apply_net(Net<T>& net, const Image& image);

}  // namespace degradelab
