#include "degradelab/nets.hpp"

#include <random>

#include "degradelab/error.hpp"

namespace degradelab {

const char* role_name(NetRole role) {
  switch (role) {
    case NetRole::Downsampler: return "downsampler";
    case NetRole::Discriminator: return "discriminator";
    case NetRole::SR: return "sr";
  }
  return "unknown";
}

NetRole parse_role(const std::string& name) {
  if (name == "downsampler") return NetRole::Downsampler;
  if (name == "discriminator") return NetRole::Discriminator;
  if (name == "sr") return NetRole::SR;
  throw_invalid("unknown network role '" + name + "'");
}

NetSpec downsampler_spec(int width, int blocks, int scale) {
  if (scale != 2) {
    throw_invalid("the downsampler is built at x2; compose it for larger scales");
  }
  if (width <= 0 || blocks < 0) throw_invalid("invalid downsampler size");
  using L = LayerSpec;
  auto block = [&] {
    return L::res_block({L::conv(3, width, width), L::instance_norm(width),
                         L::relu(), L::conv(3, width, width)});
  };
  std::vector<L> body;
  body.push_back(L::conv(5, 3, width));
  for (int b = 0; b < blocks; ++b) body.push_back(block());
  body.push_back(L::conv(3, width, width, 2));
  for (int b = 0; b < blocks; ++b) body.push_back(block());
  body.push_back(L::conv(3, width, 3));
  NetSpec spec{NetRole::Downsampler, width, blocks, scale, {}};
  spec.layers.push_back(L::global_residual(std::move(body)));
  return spec;
}

NetSpec discriminator_spec(int width) {
  if (width <= 0) throw_invalid("invalid discriminator width");
  using L = LayerSpec;
  NetSpec spec{NetRole::Discriminator, width, 0, 1, {}};
  auto& l = spec.layers;
  l.push_back(L::conv(4, 3, width, 2));
  l.push_back(L::leaky_relu(0.2));
  int ch = width;
  for (int i = 0; i < 3; ++i) {
    l.push_back(L::conv(4, ch, ch * 2, 2));
    l.push_back(L::instance_norm(ch * 2));
    l.push_back(L::leaky_relu(0.2));
    ch *= 2;
  }
  l.push_back(L::conv(4, ch, 1, 2));
  l.push_back(L::sigmoid());
  return spec;
}

NetSpec sr_spec(int width, int blocks, int scale) {
  if (width <= 0 || blocks < 0 || scale < 1) throw_invalid("invalid SR size");
  using L = LayerSpec;
  NetSpec spec{NetRole::SR, width, blocks, scale, {}};
  auto& l = spec.layers;
  l.push_back(L::conv(3, 3, width));
  for (int b = 0; b < blocks; ++b) {
    l.push_back(L::res_block(
        {L::conv(3, width, width), L::relu(), L::conv(3, width, width)}));
  }
  l.push_back(L::conv(3, width, width * scale * scale));
  l.push_back(L::pixel_shuffle(scale));
  l.push_back(L::conv(3, width, 3));
  return spec;
}

template <typename T>
Net<T>::Net(NetSpec spec) : spec_(std::move(spec)) {
  const int out = infer_channels(spec_.layers, 3);
  const int expected = spec_.role == NetRole::Discriminator ? 1 : 3;
  if (out != expected) {
    throw_invalid(std::string(role_name(spec_.role)) + " must end with " +
                  std::to_string(expected) + " channels");
  }
  root_ = make_sequential<T>(spec_.layers, "");
  root_->collect_params(params_);
}

template <typename T>
Net<T>::Net(const Net& other) : Net(other.spec_) {
  for (std::size_t i = 0; i < params_.size(); ++i) {
    params_[i]->value = other.params_[i]->value;
    params_[i]->grad = other.params_[i]->grad;
  }
}

template <typename T>
Net<T>& Net<T>::operator=(const Net& other) {
  if (this != &other) *this = Net(other);
  return *this;
}

template <typename T>
Tensor<T> Net<T>::forward(const Tensor<T>& x) {
  if (x.c != 3) throw_invalid("networks take 3-channel input");
  if (!all_finite(x)) throw_numeric("non-finite network input");
  return root_->forward(x);
}

template <typename T>
Tensor<T> Net<T>::backward(const Tensor<T>& grad_out, bool param_grads) {
  return root_->backward(grad_out, param_grads);
}

template <typename T>
std::vector<const Param<T>*> Net<T>::params() const {
  return {params_.begin(), params_.end()};
}

template <typename T>
Param<T>* Net<T>::find_param(const std::string& name) {
  for (auto* p : params_)
    if (p->name == name) return p;
  return nullptr;
}

template <typename T>
std::size_t Net<T>::param_count() const {
  std::size_t n = 0;
  for (const auto* p : params_) n += p->size();
  return n;
}

template <typename T>
void Net<T>::zero_grad() {
  for (auto* p : params_) p->zero_grad();
}

namespace {
bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() &&
         s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}
}  // namespace

template <typename T>
void init_params(Net<T>& net, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 0.02);
  for (auto* p : net.params()) {
    if (ends_with(p->name, "weight")) {
      for (T& v : p->value) v = static_cast<T>(gauss(rng));
    } else if (ends_with(p->name, "gamma")) {
      std::fill(p->value.begin(), p->value.end(), T(1));
    } else {
      std::fill(p->value.begin(), p->value.end(), T(0));
    }
    p->zero_grad();
  }
}

template <typename From, typename To>
void copy_params(const Net<From>& from, Net<To>& to) {
  const auto src = from.params();
  const auto& dst = to.params();
  if (src.size() != dst.size()) throw_invalid("copy_params: architecture mismatch");
  for (std::size_t i = 0; i < src.size(); ++i) {
    if (src[i]->name != dst[i]->name || src[i]->size() != dst[i]->size()) {
      throw_invalid("copy_params: parameter mismatch at " + src[i]->name);
    }
    for (std::size_t k = 0; k < src[i]->size(); ++k) {
      dst[i]->value[k] = static_cast<To>(src[i]->value[k]);
    }
  }
}

template <typename T>
Image apply_net(Net<T>& net, const Image& image) {
  const Image* im = &image;
  Image unit;
  if (image.domain == ValueDomain::Byte) {
    unit = normalize(image);
    im = &unit;
  }
  const Tensor<T> out = net.forward(images_to_tensor<T>({im, 1}));
  return tensor_to_image(out, 0);
}

template class Net<float>;
template class Net<double>;
template void init_params<float>(Net<float>&, std::uint64_t);
template void init_params<double>(Net<double>&, std::uint64_t);
template void copy_params<float, float>(const Net<float>&, Net<float>&);
template void copy_params<float, double>(const Net<float>&, Net<double>&);
template void copy_params<double, float>(const Net<double>&, Net<float>&);
template void copy_params<double, double>(const Net<double>&, Net<double>&);
template Image apply_net<float>(Net<float>&, const Image&);
template Image apply_net<double>(Net<double>&, const Image&);

}  // namespace degradelab
