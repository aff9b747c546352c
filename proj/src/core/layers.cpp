#include "degradelab/layers.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <string>

#include "degradelab/error.hpp"

namespace degradelab {

LayerSpec LayerSpec::conv(int kernel, int in, int out, int stride) {
  LayerSpec s;
  s.kind = LayerKind::Conv;
  s.kernel = kernel;
  s.in_channels = in;
  s.out_channels = out;
  s.stride = stride;
  return s;
}
LayerSpec LayerSpec::instance_norm(int channels, double eps) {
  LayerSpec s;
  s.kind = LayerKind::InstanceNorm;
  s.channels = channels;
  s.eps = eps;
  return s;
}
LayerSpec LayerSpec::relu() { return LayerSpec{}; }
LayerSpec LayerSpec::leaky_relu(double slope) {
  LayerSpec s;
  s.kind = LayerKind::LeakyReLU;
  s.slope = slope;
  return s;
}
LayerSpec LayerSpec::sigmoid() {
  LayerSpec s;
  s.kind = LayerKind::Sigmoid;
  return s;
}
LayerSpec LayerSpec::avg_pool2() {
  LayerSpec s;
  s.kind = LayerKind::AvgPool2;
  return s;
}
LayerSpec LayerSpec::pixel_shuffle(int factor) {
  LayerSpec s;
  s.kind = LayerKind::PixelShuffle;
  s.factor = factor;
  return s;
}
LayerSpec LayerSpec::res_block(std::vector<LayerSpec> inner) {
  LayerSpec s;
  s.kind = LayerKind::ResBlock;
  s.inner = std::move(inner);
  return s;
}
LayerSpec LayerSpec::global_residual(std::vector<LayerSpec> inner) {
  LayerSpec s;
  s.kind = LayerKind::GlobalResidual;
  s.inner = std::move(inner);
  return s;
}

int infer_channels(const std::vector<LayerSpec>& specs, int in_channels) {
  int ch = in_channels;
  for (const LayerSpec& s : specs) {
    switch (s.kind) {
      case LayerKind::Conv:
        if (s.in_channels != ch) {
          throw_invalid("conv expects " + std::to_string(s.in_channels) +
                        " input channels, chain provides " +
                        std::to_string(ch));
        }
        ch = s.out_channels;
        break;
      case LayerKind::InstanceNorm:
        if (s.channels != ch) {
          throw_invalid("instance norm channel mismatch");
        }
        break;
      case LayerKind::PixelShuffle:
        if (ch % (s.factor * s.factor) != 0) {
          throw_invalid("pixel shuffle needs channels divisible by r^2");
        }
        ch /= s.factor * s.factor;
        break;
      case LayerKind::ResBlock:
      case LayerKind::GlobalResidual:
        if (infer_channels(s.inner, ch) != ch) {
          throw_invalid("residual body must preserve the channel count");
        }
        break;
      default:
        break;
    }
  }
  return ch;
}

namespace {

template <typename T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MapMat = Eigen::Map<RowMat<T>>;
template <typename T>
using CMapMat = Eigen::Map<const RowMat<T>>;

void require(bool ok, const char* what) {
  if (!ok) throw_invalid(what);
}

template <typename T>
class Conv2d final : public Layer<T> {
 public:
  Conv2d(const LayerSpec& s, const std::string& prefix)
      : k_(s.kernel), in_(s.in_channels), out_(s.out_channels),
        stride_(s.stride), pad_(( s.kernel - 1) / 2) {
    require(k_ > 0 && in_ > 0 && out_ > 0 && stride_ > 0,
            "invalid convolution spec");
    weight_.name = prefix + "weight";
    weight_.shape = {out_, in_, k_, k_};
    weight_.value.assign(static_cast<std::size_t>(out_) * in_ * k_ * k_, T(0));
    weight_.grad = weight_.value;
    bias_.name = prefix + "bias";
    bias_.shape = {out_};
    bias_.value.assign(out_, T(0));
    bias_.grad = bias_.value;
  }

  Tensor<T> forward(const Tensor<T>& x) override {
    if (x.c != in_) {
      throw_invalid("conv input has " + std::to_string(x.c) +
                    " channels, expected " + std::to_string(in_));
    }
    input_ = x;
    ho_ = (x.h - 1) / stride_ + 1;
    wo_ = (x.w - 1) / stride_ + 1;
    Tensor<T> y(x.n, out_, ho_, wo_);
    const int K = in_ * k_ * k_;
    const int P = ho_ * wo_;
    AlignedVector<T> cols(static_cast<std::size_t>(K) * P);
    CMapMat<T> W(weight_.value.data(), out_, K);
    for (int n = 0; n < x.n; ++n) {
      im2col(x.sample(n), x.h, x.w, cols.data());
      MapMat<T> Y(y.sample(n), out_, P);
      Y.noalias() = W * CMapMat<T>(cols.data(), K, P);
      for (int o = 0; o < out_; ++o) Y.row(o).array() += bias_.value[o];
    }
    return y;
  }

  Tensor<T> backward(const Tensor<T>& g, bool param_grads) override {
    const Tensor<T>& x = input_;
    require(g.n == x.n && g.c == out_ && g.h == ho_ && g.w == wo_,
            "conv gradient shape mismatch");
    Tensor<T> dx(x.n, x.c, x.h, x.w);
    const int K = in_ * k_ * k_;
    const int P = ho_ * wo_;
    AlignedVector<T> cols(static_cast<std::size_t>(K) * P);
    AlignedVector<T> dcols(static_cast<std::size_t>(K) * P);
    CMapMat<T> W(weight_.value.data(), out_, K);
    MapMat<T> dW(weight_.grad.data(), out_, K);
    for (int n = 0; n < x.n; ++n) {
      CMapMat<T> G(g.sample(n), out_, P);
      if (param_grads) {
        im2col(x.sample(n), x.h, x.w, cols.data());
        dW.noalias() += G * CMapMat<T>(cols.data(), K, P).transpose();
        for (int o = 0; o < out_; ++o) bias_.grad[o] += G.row(o).sum();
      }
      MapMat<T>(dcols.data(), K, P).noalias() = W.transpose() * G;
      col2im(dcols.data(), x.h, x.w, dx.sample(n));
    }
    return dx;
  }

  void collect_params(std::vector<Param<T>*>& out) override {
    out.push_back(&weight_);
    out.push_back(&bias_);
  }

 private:
  void im2col(const T* x, int h, int w, T* cols) const {
    const int P = ho_ * wo_;
    for (int c = 0; c < in_; ++c)
      for (int ky = 0; ky < k_; ++ky)
        for (int kx = 0; kx < k_; ++kx) {
          T* row = cols + ((c * k_ + ky) * k_ + kx) * static_cast<std::size_t>(P);
          for (int oy = 0; oy < ho_; ++oy) {
            const int iy = oy * stride_ - pad_ + ky;
            T* dst = row + oy * wo_;
            if (iy < 0 || iy >= h) {
              std::fill(dst, dst + wo_, T(0));
              continue;
            }
            const T* src = x + (static_cast<std::size_t>(c) * h + iy) * w;
            for (int ox = 0; ox < wo_; ++ox) {
              const int ix = ox * stride_ - pad_ + kx;
              dst[ox] = (ix >= 0 && ix < w) ? src[ix] : T(0);
            }
          }
        }
  }

  void col2im(const T* cols, int h, int w, T* dx) const {
    const int P = ho_ * wo_;
    for (int c = 0; c < in_; ++c)
      for (int ky = 0; ky < k_; ++ky)
        for (int kx = 0; kx < k_; ++kx) {
          const T* row =
              cols + ((c * k_ + ky) * k_ + kx) * static_cast<std::size_t>(P);
          for (int oy = 0; oy < ho_; ++oy) {
            const int iy = oy * stride_ - pad_ + ky;
            if (iy < 0 || iy >= h) continue;
            T* dst = dx + (static_cast<std::size_t>(c) * h + iy) * w;
            const T* src = row + oy * wo_;
            for (int ox = 0; ox < wo_; ++ox) {
              const int ix = ox * stride_ - pad_ + kx;
              if (ix >= 0 && ix < w) dst[ix] += src[ox];
            }
          }
        }
  }

  int k_, in_, out_, stride_, pad_;
  int ho_ = 0, wo_ = 0;
  Param<T> weight_, bias_;
  Tensor<T> input_;
};

template <typename T>
class InstanceNorm2d final : public Layer<T> {
 public:
  InstanceNorm2d(const LayerSpec& s, const std::string& prefix)
      : ch_(s.channels), eps_(s.eps) {
    require(ch_ > 0, "instance norm needs a positive channel count");
    gamma_.name = prefix + "gamma";
    gamma_.shape = {ch_};
    gamma_.value.assign(ch_, T(1));
    gamma_.grad.assign(ch_, T(0));
    beta_.name = prefix + "beta";
    beta_.shape = {ch_};
    beta_.value.assign(ch_, T(0));
    beta_.grad.assign(ch_, T(0));
  }

  Tensor<T> forward(const Tensor<T>& x) override {
    require(x.c == ch_, "instance norm channel mismatch");
    const std::size_t hw = static_cast<std::size_t>(x.h) * x.w;
    xhat_ = Tensor<T>(x.n, x.c, x.h, x.w);
    inv_std_.assign(static_cast<std::size_t>(x.n) * x.c, 0.0);
    Tensor<T> y(x.n, x.c, x.h, x.w);
    for (int n = 0; n < x.n; ++n)
      for (int c = 0; c < x.c; ++c) {
        const T* src = &x.data[(static_cast<std::size_t>(n) * x.c + c) * hw];
        double mean = 0.0;
        for (std::size_t i = 0; i < hw; ++i) mean += src[i];
        mean /= static_cast<double>(hw);
        double var = 0.0;
        for (std::size_t i = 0; i < hw; ++i) {
          const double d = src[i] - mean;
          var += d * d;
        }
        var /= static_cast<double>(hw);
        const double inv = 1.0 / std::sqrt(var + eps_);
        inv_std_[n * x.c + c] = inv;
        T* xh = &xhat_.data[(static_cast<std::size_t>(n) * x.c + c) * hw];
        T* dst = &y.data[(static_cast<std::size_t>(n) * x.c + c) * hw];
        const double gm = gamma_.value[c], bt = beta_.value[c];
        for (std::size_t i = 0; i < hw; ++i) {
          const double v = (src[i] - mean) * inv;
          xh[i] = static_cast<T>(v);
          dst[i] = static_cast<T>(gm * v + bt);
        }
      }
    return y;
  }

  Tensor<T> backward(const Tensor<T>& g, bool param_grads) override {
    require(g.same_shape(xhat_), "instance norm gradient shape mismatch");
    const std::size_t hw = static_cast<std::size_t>(g.h) * g.w;
    Tensor<T> dx(g.n, g.c, g.h, g.w);
    for (int n = 0; n < g.n; ++n)
      for (int c = 0; c < g.c; ++c) {
        const std::size_t off = (static_cast<std::size_t>(n) * g.c + c) * hw;
        const T* gy = &g.data[off];
        const T* xh = &xhat_.data[off];
        double sum_g = 0.0, sum_gx = 0.0;
        for (std::size_t i = 0; i < hw; ++i) {
          sum_g += gy[i];
          sum_gx += static_cast<double>(gy[i]) * xh[i];
        }
        if (param_grads) {
          gamma_.grad[c] += static_cast<T>(sum_gx);
          beta_.grad[c] += static_cast<T>(sum_g);
        }
        const double gm = gamma_.value[c];
        const double inv = inv_std_[n * g.c + c];
        const double mg = sum_g / static_cast<double>(hw);
        const double mgx = sum_gx / static_cast<double>(hw);
        T* d = &dx.data[off];
        for (std::size_t i = 0; i < hw; ++i) {
          d[i] = static_cast<T>(gm * inv * (gy[i] - mg - xh[i] * mgx));
        }
      }
    return dx;
  }

  void collect_params(std::vector<Param<T>*>& out) override {
    out.push_back(&gamma_);
    out.push_back(&beta_);
  }

 private:
  int ch_;
  double eps_;
  Param<T> gamma_, beta_;
  Tensor<T> xhat_;
  std::vector<double> inv_std_;
};

template <typename T>
class LeakyRelu final : public Layer<T> {
 public:
  explicit LeakyRelu(double slope) : slope_(static_cast<T>(slope)) {}
  Tensor<T> forward(const Tensor<T>& x) override {
    input_ = x;
    Tensor<T> y = x;
    for (T& v : y.data)
      if (v < T(0)) v *= slope_;
    return y;
  }
  Tensor<T> backward(const Tensor<T>& g, bool) override {
    Tensor<T> dx = g;
    for (std::size_t i = 0; i < dx.data.size(); ++i)
      if (input_.data[i] < T(0)) dx.data[i] *= slope_;
    return dx;
  }

 private:
  T slope_;
  Tensor<T> input_;
};

template <typename T>
class SigmoidLayer final : public Layer<T> {
 public:
  Tensor<T> forward(const Tensor<T>& x) override {
    Tensor<T> y = x;
    for (T& v : y.data) v = T(1) / (T(1) + std::exp(-v));
    output_ = y;
    return y;
  }
  Tensor<T> backward(const Tensor<T>& g, bool) override {
    Tensor<T> dx = g;
    for (std::size_t i = 0; i < dx.data.size(); ++i) {
      const T y = output_.data[i];
      dx.data[i] *= y * (T(1) - y);
    }
    return dx;
  }

 private:
  Tensor<T> output_;
};

template <typename T>
Tensor<T> avg_pool2(const Tensor<T>& x) {
  require(x.h % 2 == 0 && x.w % 2 == 0, "avg pool needs even dimensions");
  Tensor<T> y(x.n, x.c, x.h / 2, x.w / 2);
  for (int n = 0; n < x.n; ++n)
    for (int c = 0; c < x.c; ++c)
      for (int i = 0; i < y.h; ++i)
        for (int j = 0; j < y.w; ++j)
          y.at(n, c, i, j) =
              (x.at(n, c, 2 * i, 2 * j) + x.at(n, c, 2 * i, 2 * j + 1) +
               x.at(n, c, 2 * i + 1, 2 * j) + x.at(n, c, 2 * i + 1, 2 * j + 1)) *
              T(0.25);
  return y;
}

template <typename T>
void avg_pool2_backward_add(const Tensor<T>& g, Tensor<T>& dx) {
  for (int n = 0; n < g.n; ++n)
    for (int c = 0; c < g.c; ++c)
      for (int i = 0; i < g.h; ++i)
        for (int j = 0; j < g.w; ++j) {
          const T v = g.at(n, c, i, j) * T(0.25);
          dx.at(n, c, 2 * i, 2 * j) += v;
          dx.at(n, c, 2 * i, 2 * j + 1) += v;
          dx.at(n, c, 2 * i + 1, 2 * j) += v;
          dx.at(n, c, 2 * i + 1, 2 * j + 1) += v;
        }
}

template <typename T>
class AvgPool final : public Layer<T> {
 public:
  Tensor<T> forward(const Tensor<T>& x) override {
    n_ = x.n; c_ = x.c; h_ = x.h; w_ = x.w;
    return avg_pool2(x);
  }
  Tensor<T> backward(const Tensor<T>& g, bool) override {
    Tensor<T> dx(n_, c_, h_, w_);
    avg_pool2_backward_add(g, dx);
    return dx;
  }

 private:
  int n_ = 0, c_ = 0, h_ = 0, w_ = 0;
};

template <typename T>
class PixelShuffleLayer final : public Layer<T> {
 public:
  explicit PixelShuffleLayer(int r) : r_(r) {
    require(r_ >= 1, "pixel shuffle factor must be >= 1");
  }
  // out[c][y*r + i][x*r + j] = in[c*r*r + i*r + j][y][x]
  Tensor<T> forward(const Tensor<T>& x) override {
    require(x.c % (r_ * r_) == 0, "pixel shuffle channel mismatch");
    const int oc = x.c / (r_ * r_);
    Tensor<T> y(x.n, oc, x.h * r_, x.w * r_);
    for (int n = 0; n < x.n; ++n)
      for (int c = 0; c < oc; ++c)
        for (int i = 0; i < r_; ++i)
          for (int j = 0; j < r_; ++j)
            for (int yy = 0; yy < x.h; ++yy)
              for (int xx = 0; xx < x.w; ++xx)
                y.at(n, c, yy * r_ + i, xx * r_ + j) =
                    x.at(n, c * r_ * r_ + i * r_ + j, yy, xx);
    return y;
  }
  Tensor<T> backward(const Tensor<T>& g, bool) override {
    const int ic = g.c * r_ * r_;
    Tensor<T> dx(g.n, ic, g.h / r_, g.w / r_);
    for (int n = 0; n < g.n; ++n)
      for (int c = 0; c < g.c; ++c)
        for (int i = 0; i < r_; ++i)
          for (int j = 0; j < r_; ++j)
            for (int yy = 0; yy < dx.h; ++yy)
              for (int xx = 0; xx < dx.w; ++xx)
                dx.at(n, c * r_ * r_ + i * r_ + j, yy, xx) =
                    g.at(n, c, yy * r_ + i, xx * r_ + j);
    return dx;
  }

 private:
  int r_;
};

template <typename T>
class Sequential final : public Layer<T> {
 public:
  Sequential(const std::vector<LayerSpec>& specs, const std::string& prefix) {
    for (std::size_t i = 0; i < specs.size(); ++i) {
      layers_.push_back(
          make_layer<T>(specs[i], prefix + std::to_string(i) + "."));
    }
  }
  Tensor<T> forward(const Tensor<T>& x) override {
    Tensor<T> h = x;
    for (auto& l : layers_) h = l->forward(h);
    return h;
  }
  Tensor<T> backward(const Tensor<T>& g, bool param_grads) override {
    Tensor<T> d = g;
    for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) {
      d = (*it)->backward(d, param_grads);
    }
    return d;
  }
  void collect_params(std::vector<Param<T>*>& out) override {
    for (auto& l : layers_) l->collect_params(out);
  }

 private:
  std::vector<std::unique_ptr<Layer<T>>> layers_;
};

template <typename T>
class Residual final : public Layer<T> {
 public:
  Residual(const LayerSpec& s, const std::string& prefix, bool pooled_skip)
      : body_(s.inner, prefix + "inner."), pooled_(pooled_skip) {}

  Tensor<T> forward(const Tensor<T>& x) override {
    n_ = x.n; c_ = x.c; h_ = x.h; w_ = x.w;
    Tensor<T> y = body_.forward(x);
    const Tensor<T> skip = pooled_ ? avg_pool2(x) : x;
    require(y.same_shape(skip), "residual body changes the output shape");
    for (std::size_t i = 0; i < y.data.size(); ++i) y.data[i] += skip.data[i];
    return y;
  }
  Tensor<T> backward(const Tensor<T>& g, bool param_grads) override {
    Tensor<T> dx = body_.backward(g, param_grads);
    if (pooled_) {
      avg_pool2_backward_add(g, dx);
    } else {
      for (std::size_t i = 0; i < dx.data.size(); ++i) dx.data[i] += g.data[i];
    }
    return dx;
  }
  void collect_params(std::vector<Param<T>*>& out) override {
    body_.collect_params(out);
  }

 private:
  Sequential<T> body_;
  bool pooled_;
  int n_ = 0, c_ = 0, h_ = 0, w_ = 0;
};

}  // namespace

template <typename T>
std::unique_ptr<Layer<T>> make_layer(const LayerSpec& spec,
                                     const std::string& prefix) {
  switch (spec.kind) {
    case LayerKind::Conv:
      return std::make_unique<Conv2d<T>>(spec, prefix);
    case LayerKind::InstanceNorm:
      return std::make_unique<InstanceNorm2d<T>>(spec, prefix);
    case LayerKind::ReLU:
      return std::make_unique<LeakyRelu<T>>(0.0);
    case LayerKind::LeakyReLU:
      return std::make_unique<LeakyRelu<T>>(spec.slope);
    case LayerKind::Sigmoid:
      return std::make_unique<SigmoidLayer<T>>();
    case LayerKind::AvgPool2:
      return std::make_unique<AvgPool<T>>();
    case LayerKind::PixelShuffle:
      return std::make_unique<PixelShuffleLayer<T>>(spec.factor);
    case LayerKind::ResBlock:
      return std::make_unique<Residual<T>>(spec, prefix, false);
    case LayerKind::GlobalResidual:
      return std::make_unique<Residual<T>>(spec, prefix, true);
  }
  throw_invalid("unknown layer kind");
}

template <typename T>
std::unique_ptr<Layer<T>> make_sequential(const std::vector<LayerSpec>& specs,
                                          const std::string& prefix) {
  return std::make_unique<Sequential<T>>(specs, prefix);
}

template std::unique_ptr<Layer<float>> make_layer<float>(const LayerSpec&,
                                                         const std::string&);
template std::unique_ptr<Layer<double>> make_layer<double>(const LayerSpec&,
                                                           const std::string&);
template std::unique_ptr<Layer<float>> make_sequential<float>(
    const std::vector<LayerSpec>&, const std::string&);
template std::unique_ptr<Layer<double>> make_sequential<double>(
    const std::vector<LayerSpec>&, const std::string&);

}  // namespace degradelab
