#pragma once

#include <memory>
#include <string>
#include <vector>

#include "degradelab/tensor.hpp"

namespace degradelab {

enum class LayerKind {
  Conv,
  InstanceNorm,
  ReLU,
  LeakyReLU,
  Sigmoid,
  AvgPool2,
  PixelShuffle,
  ResBlock,        // inner layers plus identity skip
  GlobalResidual,  // inner layers plus 2x2 average pooling of the input
};

struct LayerSpec {
  LayerKind kind = LayerKind::ReLU;
  int kernel = 0;
  int in_channels = 0;
  int out_channels = 0;
  int stride = 1;
  int channels = 0;     // InstanceNorm
  double eps = 1e-5;    // InstanceNorm
  double slope = 0.2;   // LeakyReLU
  int factor = 1;       // PixelShuffle
  std::vector<LayerSpec> inner;

  static LayerSpec conv(int kernel, int in, int out, int stride = 1);
  static LayerSpec instance_norm(int channels, double eps = 1e-5);
  static LayerSpec relu();
  static LayerSpec leaky_relu(double slope = 0.2);
  static LayerSpec sigmoid();
  static LayerSpec avg_pool2();
  static LayerSpec pixel_shuffle(int factor);
  static LayerSpec res_block(std::vector<LayerSpec> inner);
  static LayerSpec global_residual(std::vector<LayerSpec> inner);
};

/// A differentiable layer. forward() caches what backward() needs; a layer
/// instance is therefore owned by one caller at a time.
template <typename T>
class Layer {
 public:
  virtual ~Layer() = default;
  virtual Tensor<T> forward(const Tensor<T>& x) = 0;
  /// Returns the input gradient. Parameter gradients are accumulated only
  /// when `param_grads` is set.
  virtual Tensor<T> backward(const Tensor<T>& grad_out, bool param_grads) = 0;
  virtual void collect_params(std::vector<Param<T>*>& /*out*/) {}
};

/// Parameter names are prefixed with `prefix` (e.g. "3.inner.0.weight").
template <typename T>
std::unique_ptr<Layer<T>> make_layer(const LayerSpec& spec,
                                     const std::string& prefix);

/// Runs layers in order.
template <typename T>
std::unique_ptr<Layer<T>> make_sequential(const std::vector<LayerSpec>& specs,
                                          const std::string& prefix);

/// Output channel count of a layer chain fed with `in_channels`; throws when
/// channel counts do not chain.
int infer_channels(const std::vector<LayerSpec>& specs, int in_channels);

}  // namespace degradelab
