#pragma once

#include "lumen/nn.hpp"

#include <cmath>
#include <vector>

namespace lumen::train {

struct AdamOptions {
  double learning_rate = 2e-4;
  double beta1 = 0.5;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Adam over a list of parameter sets, one moment pair per parameter tensor.
template <typename Scalar>
class Adam {
 public:
  Adam() = default;
  Adam(std::vector<ParameterSet<Scalar>*> sets, AdamOptions opts) : sets_(std::move(sets)), opts_(opts) {
    for (auto* s : sets_)
      for (const auto& p : s->items()) {
        first_.emplace_back(p.var.shape());
        second_.emplace_back(p.var.shape());
      }
  }

  void zero_grad() {
    for (auto* s : sets_) s->zero_grad();
  }

  void step() {
    ++steps_;
    const double c1 = 1.0 - std::pow(opts_.beta1, static_cast<double>(steps_));
    const double c2 = 1.0 - std::pow(opts_.beta2, static_cast<double>(steps_));
    const auto b1 = static_cast<Scalar>(opts_.beta1), b2 = static_cast<Scalar>(opts_.beta2);
    const auto lr = static_cast<Scalar>(opts_.learning_rate / c1);
    const auto inv_c2 = static_cast<Scalar>(1.0 / c2);
    const auto eps = static_cast<Scalar>(opts_.eps);
    std::size_t k = 0;
    for (auto* s : sets_)
      for (auto& p : s->items()) {
        auto& m = first_[k].array();
        auto& v = second_[k].array();
        ++k;
        if (!p.var.has_grad()) continue;
        const auto& g = p.var.grad().array();
        m = b1 * m + (Scalar(1) - b1) * g;
        v = b2 * v + (Scalar(1) - b2) * g.square();
        p.var.mutable_value().array() -= lr * m / ((v * inv_c2).sqrt() + eps);
      }
  }

  long steps() const { return steps_; }
  void set_steps(long s) { steps_ = s; }
  std::vector<Tensor<Scalar>>& first_moments() { return first_; }
  std::vector<Tensor<Scalar>>& second_moments() { return second_; }
  const std::vector<ParameterSet<Scalar>*>& sets() const { return sets_; }

 private:
  std::vector<ParameterSet<Scalar>*> sets_;
  AdamOptions opts_;
  std::vector<Tensor<Scalar>> first_, second_;
  long steps_ = 0;
};

}  // namespace lumen::train
