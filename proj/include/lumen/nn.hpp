#pragma once

#include "lumen/ops.hpp"
#include "lumen/random.hpp"

#include <string>
#include <vector>

namespace lumen {

template <typename Scalar>
struct Parameter {
  std::string name;
  Var<Scalar> var;
};

/// Ordered, named parameters of one network.
template <typename Scalar>
class ParameterSet {
 public:
  Var<Scalar> add(std::string name, const Shape& shape, RandomStream& rng, double stddev) {
    Tensor<Scalar> t(shape);
    if (stddev > 0)
      for (Index i = 0; i < t.size(); ++i) t.data()[i] = static_cast<Scalar>(stddev * rng.normal());
    Var<Scalar> v(std::move(t), true, name);
    params_.push_back({std::move(name), v});
    return v;
  }

  const std::vector<Parameter<Scalar>>& items() const { return params_; }
  std::vector<Parameter<Scalar>>& items() { return params_; }

  Index count() const {
    Index total = 0;
    for (const auto& p : params_) total += p.var.value().size();
    return total;
  }

  void zero_grad() {
    for (auto& p : params_) p.var.zero_grad();
  }

  void set_requires_grad(bool on) {
    for (auto& p : params_) p.var.set_requires_grad(on);
  }

  /// Flattened copy of every parameter value, in registration order.
  Eigen::Array<Scalar, Eigen::Dynamic, 1> flat() const {
    Eigen::Array<Scalar, Eigen::Dynamic, 1> out(count());
    Index offset = 0;
    for (const auto& p : params_) {
      out.segment(offset, p.var.value().size()) = p.var.value().array();
      offset += p.var.value().size();
    }
    return out;
  }

 private:
  std::vector<Parameter<Scalar>> params_;
};

namespace nn {

inline constexpr double kInitStd = 0.02;

template <typename Scalar>
struct Conv {
  Var<Scalar> weight;
  Var<Scalar> bias;
  Index stride = 1;
  Index pad = 0;

  Conv() = default;
  Conv(ParameterSet<Scalar>& ps, const std::string& name, Index in, Index out, Index k, Index stride_, Index pad_,
       RandomStream& rng)
      : weight(ps.add(name + ".weight", Shape{out, in, k, k}, rng, kInitStd)),
        bias(ps.add(name + ".bias", Shape{1, out, 1, 1}, rng, 0.0)),
        stride(stride_),
        pad(pad_) {}

  Var<Scalar> operator()(const Var<Scalar>& x) const { return conv2d(x, weight, bias, stride, pad); }
};

/// Stride-2 upsampling: k3, pad 1, output_pad 1 doubles the spatial size.
template <typename Scalar>
struct UpConv {
  Var<Scalar> weight;
  Var<Scalar> bias;

  UpConv() = default;
  UpConv(ParameterSet<Scalar>& ps, const std::string& name, Index in, Index out, RandomStream& rng)
      : weight(ps.add(name + ".weight", Shape{in, out, 3, 3}, rng, kInitStd)),
        bias(ps.add(name + ".bias", Shape{1, out, 1, 1}, rng, 0.0)) {}

  Var<Scalar> operator()(const Var<Scalar>& x) const { return conv_transpose2d(x, weight, bias, 2, 1, 1); }
};

/// x + IN(conv(pad(relu(IN(conv(pad(x))))))).
template <typename Scalar>
struct ResidualBlock {
  Conv<Scalar> first;
  Conv<Scalar> second;

  ResidualBlock() = default;
  ResidualBlock(ParameterSet<Scalar>& ps, const std::string& name, Index channels, RandomStream& rng)
      : first(ps, name + ".conv1", channels, channels, 3, 1, 0, rng),
        second(ps, name + ".conv2", channels, channels, 3, 1, 0, rng) {}

  Var<Scalar> operator()(const Var<Scalar>& x) const {
    auto h = relu(instance_norm(first(reflection_pad(x, Index(1)))));
    h = instance_norm(second(reflection_pad(h, Index(1))));
    return add(x, h);
  }
};

}  // namespace nn
}  // namespace lumen
