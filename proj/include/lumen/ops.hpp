#pragma once

// Differentiable tensor operations. Every function returns a Var whose
// backward closure accumulates into the grads of its inputs.

#include "lumen/autograd.hpp"

#include <cmath>
#include <vector>

namespace lumen {

namespace detail {

inline Index conv_out(Index in, Index k, Index stride, Index pad) { return (in + 2 * pad - k) / stride + 1; }

/// Unfolds one sample (C,H,W) into a (C*k*k) x (Ho*Wo) row-major buffer.
template <typename Scalar>
void im2col(const Scalar* x, Index channels, Index height, Index width, Index k, Index stride, Index pad,
            Index out_h, Index out_w, Scalar* col) {
  const Index cols = out_h * out_w;
  for (Index c = 0; c < channels; ++c) {
    const Scalar* plane = x + c * height * width;
    for (Index ki = 0; ki < k; ++ki) {
      for (Index kj = 0; kj < k; ++kj) {
        Scalar* row = col + ((c * k + ki) * k + kj) * cols;
        for (Index oh = 0; oh < out_h; ++oh) {
          const Index ih = oh * stride - pad + ki;
          Scalar* dst = row + oh * out_w;
          if (ih < 0 || ih >= height) {
            std::fill(dst, dst + out_w, Scalar(0));
            continue;
          }
          const Scalar* src = plane + ih * width;
          if (stride == 1) {
            Index ow = 0;
            for (; ow < out_w && ow - pad + kj < 0; ++ow) dst[ow] = Scalar(0);
            Index end = out_w;
            while (end > ow && end - 1 - pad + kj >= width) --end;
            for (Index e = end; e < out_w; ++e) dst[e] = Scalar(0);
            if (end > ow) std::copy(src + ow - pad + kj, src + end - pad + kj, dst + ow);
          } else {
            for (Index ow = 0; ow < out_w; ++ow) {
              const Index iw = ow * stride - pad + kj;
              dst[ow] = (iw >= 0 && iw < width) ? src[iw] : Scalar(0);
            }
          }
        }
      }
    }
  }
}

/// Adjoint of im2col: scatters (C*k*k) x (Ho*Wo) back into (C,H,W), accumulating.
template <typename Scalar>
void col2im(const Scalar* col, Index channels, Index height, Index width, Index k, Index stride, Index pad,
            Index out_h, Index out_w, Scalar* x) {
  const Index cols = out_h * out_w;
  for (Index c = 0; c < channels; ++c) {
    Scalar* plane = x + c * height * width;
    for (Index ki = 0; ki < k; ++ki) {
      for (Index kj = 0; kj < k; ++kj) {
        const Scalar* row = col + ((c * k + ki) * k + kj) * cols;
        for (Index oh = 0; oh < out_h; ++oh) {
          const Index ih = oh * stride - pad + ki;
          if (ih < 0 || ih >= height) continue;
          Scalar* dst = plane + ih * width;
          const Scalar* src = row + oh * out_w;
          for (Index ow = 0; ow < out_w; ++ow) {
            const Index iw = ow * stride - pad + kj;
            if (iw >= 0 && iw < width) dst[iw] += src[ow];
          }
        }
      }
    }
  }
}

template <typename Scalar>
using RowMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <typename Scalar>
void require_same_shape(const Var<Scalar>& a, const Var<Scalar>& b, const char* what) {
  if (a.shape() != b.shape())
    throw ConfigError(std::string(what) + ": shape mismatch " + a.shape().str() + " vs " + b.shape().str());
}

}  // namespace detail

/// 2-D convolution with zero padding. Weight is (Cout, Cin, k, k); bias (1, Cout, 1, 1) or undefined.
template <typename Scalar>
Var<Scalar> conv2d(const Var<Scalar>& x, const Var<Scalar>& weight, const Var<Scalar>& bias, Index stride,
                   Index pad) {
  using Mat = detail::RowMatrix<Scalar>;
  const Shape in = x.shape();
  const Shape ws = weight.shape();
  if (ws.c != in.c) throw ConfigError("conv2d: input has " + std::to_string(in.c) + " channels, weight expects " +
                                      std::to_string(ws.c));
  const Index k = ws.h;
  const Index oh = detail::conv_out(in.h, k, stride, pad);
  const Index ow = detail::conv_out(in.w, k, stride, pad);
  if (oh <= 0 || ow <= 0) throw ConfigError("conv2d: input " + in.str() + " too small for kernel");
  const Index rows = in.c * k * k;
  const Shape out_shape{in.n, ws.n, oh, ow};

  Tensor<Scalar> out(out_shape);
  Mat col(rows, oh * ow);
  Eigen::Map<const Mat> wmat(weight.value().data(), ws.n, rows);
  for (Index n = 0; n < in.n; ++n) {
    detail::im2col(x.value().data() + n * in.sample(), in.c, in.h, in.w, k, stride, pad, oh, ow, col.data());
    auto o = out.sample_matrix(n);
    o.noalias() = wmat * col;
    if (bias.defined()) o.colwise() += Eigen::Map<const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>>(bias.value().data(), ws.n);
  }

  const bool has_bias = bias.defined();
  std::vector<Var<Scalar>> parents{x, weight};
  if (has_bias) parents.push_back(bias);
  return Var<Scalar>::make(std::move(out), parents, [=](Node<Scalar>& self) {
    auto& xn = *self.parents[0];
    auto& wn = *self.parents[1];
    Eigen::Map<const Mat> w(wn.value.data(), ws.n, rows);
    Mat col(rows, oh * ow);
    Mat dcol(rows, oh * ow);
    for (Index n = 0; n < in.n; ++n) {
      auto g = self.grad.sample_matrix(n);
      if (wn.requires_grad) {
        detail::im2col(xn.value.data() + n * in.sample(), in.c, in.h, in.w, k, stride, pad, oh, ow, col.data());
        Eigen::Map<Mat>(wn.grad.data(), ws.n, rows).noalias() += g * col.transpose();
      }
      if (has_bias && self.parents[2]->requires_grad)
        Eigen::Map<Eigen::Matrix<Scalar, Eigen::Dynamic, 1>>(self.parents[2]->grad.data(), ws.n) += g.rowwise().sum();
      if (xn.requires_grad) {
        dcol.noalias() = w.transpose() * g;
        detail::col2im(dcol.data(), in.c, in.h, in.w, k, stride, pad, oh, ow, xn.grad.data() + n * in.sample());
      }
    }
  });
}

/// Transposed convolution (adjoint of conv2d). Weight is (Cin, Cout, k, k).
/// Output size is (in - 1) * stride - 2 * pad + k + output_pad.
template <typename Scalar>
Var<Scalar> conv_transpose2d(const Var<Scalar>& x, const Var<Scalar>& weight, const Var<Scalar>& bias,
                             Index stride, Index pad, Index output_pad) {
  using Mat = detail::RowMatrix<Scalar>;
  const Shape in = x.shape();
  const Shape ws = weight.shape();
  if (ws.n != in.c) throw ConfigError("conv_transpose2d: channel mismatch");
  const Index k = ws.h;
  const Index cout = ws.c;
  const Index oh = (in.h - 1) * stride - 2 * pad + k + output_pad;
  const Index ow = (in.w - 1) * stride - 2 * pad + k + output_pad;
  const Index rows = cout * k * k;
  const Shape out_shape{in.n, cout, oh, ow};

  Tensor<Scalar> out(out_shape);
  Eigen::Map<const Mat> wmat(weight.value().data(), in.c, rows);
  Mat cols(rows, in.plane());
  for (Index n = 0; n < in.n; ++n) {
    cols.noalias() = wmat.transpose() * x.value().sample_matrix(n);
    detail::col2im(cols.data(), cout, oh, ow, k, stride, pad, in.h, in.w, out.data() + n * out_shape.sample());
    if (bias.defined()) {
      auto o = out.sample_matrix(n);
      o.colwise() += Eigen::Map<const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>>(bias.value().data(), cout);
    }
  }

  const bool has_bias = bias.defined();
  std::vector<Var<Scalar>> parents{x, weight};
  if (has_bias) parents.push_back(bias);
  return Var<Scalar>::make(std::move(out), parents, [=](Node<Scalar>& self) {
    auto& xn = *self.parents[0];
    auto& wn = *self.parents[1];
    Eigen::Map<const Mat> w(wn.value.data(), in.c, rows);
    Mat dcols(rows, in.plane());
    for (Index n = 0; n < in.n; ++n) {
      detail::im2col(self.grad.data() + n * out_shape.sample(), cout, oh, ow, k, stride, pad, in.h, in.w,
                     dcols.data());
      if (wn.requires_grad)
        Eigen::Map<Mat>(wn.grad.data(), in.c, rows).noalias() += xn.value.sample_matrix(n) * dcols.transpose();
      if (xn.requires_grad) xn.grad.sample_matrix(n).noalias() += w * dcols;
      if (has_bias && self.parents[2]->requires_grad)
        Eigen::Map<Eigen::Matrix<Scalar, Eigen::Dynamic, 1>>(self.parents[2]->grad.data(), cout) +=
            self.grad.sample_matrix(n).rowwise().sum();
    }
  });
}

/// Mirror padding without repeating the edge pixel.
template <typename Scalar>
Var<Scalar> reflection_pad(const Var<Scalar>& x, Index pad) {
  const Shape in = x.shape();
  if (pad >= in.h || pad >= in.w) throw ConfigError("reflection_pad: pad " + std::to_string(pad) + " too large for " + in.str());
  const Shape out_shape{in.n, in.c, in.h + 2 * pad, in.w + 2 * pad};
  auto reflect = [](Index i, Index size) { return i < 0 ? -i : (i >= size ? 2 * size - 2 - i : i); };
  std::vector<Index> map_h(out_shape.h), map_w(out_shape.w);
  for (Index i = 0; i < out_shape.h; ++i) map_h[i] = reflect(i - pad, in.h);
  for (Index j = 0; j < out_shape.w; ++j) map_w[j] = reflect(j - pad, in.w);

  Tensor<Scalar> out(out_shape);
  const Index planes = in.n * in.c;
  const Scalar* src = x.value().data();
  Scalar* dst = out.data();
  for (Index p = 0; p < planes; ++p)
    for (Index i = 0; i < out_shape.h; ++i)
      for (Index j = 0; j < out_shape.w; ++j)
        dst[(p * out_shape.h + i) * out_shape.w + j] = src[(p * in.h + map_h[i]) * in.w + map_w[j]];

  return Var<Scalar>::make(std::move(out), {x}, [=](Node<Scalar>& self) {
    Scalar* g = self.parents[0]->grad.data();
    const Scalar* go = self.grad.data();
    for (Index p = 0; p < planes; ++p)
      for (Index i = 0; i < out_shape.h; ++i)
        for (Index j = 0; j < out_shape.w; ++j)
          g[(p * in.h + map_h[i]) * in.w + map_w[j]] += go[(p * out_shape.h + i) * out_shape.w + j];
  });
}

/// Per-sample, per-channel normalization without affine parameters.
template <typename Scalar>
Var<Scalar> instance_norm(const Var<Scalar>& x, Scalar eps = Scalar(1e-5)) {
  const Shape s = x.shape();
  const Index planes = s.n * s.c;
  const Index m = s.plane();
  Tensor<Scalar> out(s);
  Eigen::Array<Scalar, Eigen::Dynamic, 1> inv_std(planes);
  for (Index p = 0; p < planes; ++p) {
    Eigen::Map<const Eigen::Array<Scalar, Eigen::Dynamic, 1>> v(x.value().data() + p * m, m);
    const Scalar mean = v.mean();
    const Scalar var = (v - mean).square().mean();
    inv_std[p] = Scalar(1) / std::sqrt(var + eps);
    Eigen::Map<Eigen::Array<Scalar, Eigen::Dynamic, 1>>(out.data() + p * m, m) = (v - mean) * inv_std[p];
  }
  Tensor<Scalar> normalized = out;
  return Var<Scalar>::make(std::move(out), {x}, [=](Node<Scalar>& self) {
    for (Index p = 0; p < planes; ++p) {
      Eigen::Map<const Eigen::Array<Scalar, Eigen::Dynamic, 1>> g(self.grad.data() + p * m, m);
      Eigen::Map<const Eigen::Array<Scalar, Eigen::Dynamic, 1>> xhat(normalized.data() + p * m, m);
      const Scalar gmean = g.mean();
      const Scalar gx = (g * xhat).mean();
      Eigen::Map<Eigen::Array<Scalar, Eigen::Dynamic, 1>>(self.parents[0]->grad.data() + p * m, m) +=
          inv_std[p] * (g - gmean - xhat * gx);
    }
  });
}

template <typename Scalar>
Var<Scalar> leaky_relu(const Var<Scalar>& x, Scalar slope) {
  Tensor<Scalar> out(x.shape(), x.value().array().unaryExpr([slope](Scalar v) { return v > 0 ? v : slope * v; }));
  return Var<Scalar>::make(std::move(out), {x}, [slope](Node<Scalar>& self) {
    auto& p = *self.parents[0];
    p.grad.array() += self.grad.array() * p.value.array().unaryExpr([slope](Scalar v) { return v > 0 ? Scalar(1) : slope; });
  });
}

template <typename Scalar>
Var<Scalar> relu(const Var<Scalar>& x) {
  return leaky_relu(x, Scalar(0));
}

template <typename Scalar>
Var<Scalar> tanh(const Var<Scalar>& x) {
  Tensor<Scalar> out(x.shape(), x.value().array().tanh());
  return Var<Scalar>::make(out, {x}, [y = out](Node<Scalar>& self) {
    self.parents[0]->grad.array() += self.grad.array() * (Scalar(1) - y.array().square());
  });
}

template <typename Scalar>
Var<Scalar> sigmoid(const Var<Scalar>& x) {
  Tensor<Scalar> out(x.shape(), x.value().array().unaryExpr([](Scalar v) {
    return v >= 0 ? Scalar(1) / (Scalar(1) + std::exp(-v)) : std::exp(v) / (Scalar(1) + std::exp(v));
  }));
  return Var<Scalar>::make(out, {x}, [y = out](Node<Scalar>& self) {
    self.parents[0]->grad.array() += self.grad.array() * y.array() * (Scalar(1) - y.array());
  });
}

template <typename Scalar>
Var<Scalar> add(const Var<Scalar>& a, const Var<Scalar>& b) {
  detail::require_same_shape(a, b, "add");
  Tensor<Scalar> out(a.shape(), a.value().array() + b.value().array());
  return Var<Scalar>::make(std::move(out), {a, b}, [](Node<Scalar>& self) {
    for (auto& p : self.parents)
      if (p->requires_grad) p->grad.array() += self.grad.array();
  });
}

/// a * s + offset, elementwise.
template <typename Scalar>
Var<Scalar> affine(const Var<Scalar>& a, Scalar s, Scalar offset = Scalar(0)) {
  Tensor<Scalar> out(a.shape(), a.value().array() * s + offset);
  return Var<Scalar>::make(std::move(out), {a}, [s](Node<Scalar>& self) {
    self.parents[0]->grad.array() += self.grad.array() * s;
  });
}

template <typename Scalar>
Var<Scalar> scale(const Var<Scalar>& a, Scalar s) {
  return affine(a, s);
}

/// Weighted sum of scalar Vars.
template <typename Scalar>
Var<Scalar> weighted_sum(const std::vector<Var<Scalar>>& terms, const std::vector<Scalar>& weights) {
  if (terms.size() != weights.size()) throw ConfigError("weighted_sum: term/weight count mismatch");
  Scalar total = 0;
  for (std::size_t i = 0; i < terms.size(); ++i) total += weights[i] * terms[i].item();
  return Var<Scalar>::make(Tensor<Scalar>::scalar(total), terms, [weights](Node<Scalar>& self) {
    const Scalar g = self.grad.data()[0];
    for (std::size_t i = 0; i < self.parents.size(); ++i)
      if (self.parents[i]->requires_grad) self.parents[i]->grad.data()[0] += weights[i] * g;
  });
}

/// Channel concatenation of two tensors with equal batch and spatial dims.
template <typename Scalar>
Var<Scalar> concat_channels(const Var<Scalar>& a, const Var<Scalar>& b) {
  const Shape sa = a.shape();
  const Shape sb = b.shape();
  if (sa.n != sb.n || sa.h != sb.h || sa.w != sb.w)
    throw ConfigError("concat_channels: spatial mismatch " + sa.str() + " vs " + sb.str());
  const Shape so{sa.n, sa.c + sb.c, sa.h, sa.w};
  Tensor<Scalar> out(so);
  for (Index n = 0; n < sa.n; ++n) {
    std::copy_n(a.value().data() + n * sa.sample(), sa.sample(), out.data() + n * so.sample());
    std::copy_n(b.value().data() + n * sb.sample(), sb.sample(), out.data() + n * so.sample() + sa.sample());
  }
  return Var<Scalar>::make(std::move(out), {a, b}, [=](Node<Scalar>& self) {
    auto& pa = *self.parents[0];
    auto& pb = *self.parents[1];
    for (Index n = 0; n < sa.n; ++n) {
      const Scalar* g = self.grad.data() + n * so.sample();
      if (pa.requires_grad)
        Eigen::Map<Eigen::Array<Scalar, Eigen::Dynamic, 1>>(pa.grad.data() + n * sa.sample(), sa.sample()) +=
            Eigen::Map<const Eigen::Array<Scalar, Eigen::Dynamic, 1>>(g, sa.sample());
      if (pb.requires_grad)
        Eigen::Map<Eigen::Array<Scalar, Eigen::Dynamic, 1>>(pb.grad.data() + n * sb.sample(), sb.sample()) +=
            Eigen::Map<const Eigen::Array<Scalar, Eigen::Dynamic, 1>>(g + sa.sample(), sb.sample());
    }
  });
}

/// Repeats a (N, C, 1, 1) tensor over an h x w grid.
template <typename Scalar>
Var<Scalar> broadcast_spatial(const Var<Scalar>& z, Index h, Index w) {
  const Shape s = z.shape();
  if (s.h != 1 || s.w != 1) throw ConfigError("broadcast_spatial: expected (N,C,1,1), got " + s.str());
  const Shape so{s.n, s.c, h, w};
  Tensor<Scalar> out(so);
  for (Index p = 0; p < s.n * s.c; ++p) std::fill_n(out.data() + p * h * w, h * w, z.value().data()[p]);
  return Var<Scalar>::make(std::move(out), {z}, [=](Node<Scalar>& self) {
    for (Index p = 0; p < s.n * s.c; ++p)
      self.parents[0]->grad.data()[p] +=
          Eigen::Map<const Eigen::Array<Scalar, Eigen::Dynamic, 1>>(self.grad.data() + p * h * w, h * w).sum();
  });
}

/// Mean absolute difference over all elements (the mean-reduced L1 norm).
template <typename Scalar>
Var<Scalar> mean_abs_diff(const Var<Scalar>& a, const Var<Scalar>& b) {
  detail::require_same_shape(a, b, "mean_abs_diff");
  const Index count = a.value().size();
  const Scalar v = (a.value().array() - b.value().array()).abs().mean();
  return Var<Scalar>::make(Tensor<Scalar>::scalar(v), {a, b}, [count](Node<Scalar>& self) {
    auto& pa = *self.parents[0];
    auto& pb = *self.parents[1];
    const Scalar g = self.grad.data()[0] / Scalar(count);
    const auto sign = (pa.value.array() - pb.value.array()).sign();
    if (pa.requires_grad) pa.grad.array() += g * sign;
    if (pb.requires_grad) pb.grad.array() -= g * sign;
  });
}

/// -mean(log(d + eps)).
template <typename Scalar>
Var<Scalar> mean_neg_log(const Var<Scalar>& d, Scalar eps) {
  const Index count = d.value().size();
  const Scalar v = -(d.value().array() + eps).log().mean();
  return Var<Scalar>::make(Tensor<Scalar>::scalar(v), {d}, [count, eps](Node<Scalar>& self) {
    auto& p = *self.parents[0];
    p.grad.array() -= (self.grad.data()[0] / Scalar(count)) / (p.value.array() + eps);
  });
}

/// -mean(log(1 - d + eps)).
template <typename Scalar>
Var<Scalar> mean_neg_log1m(const Var<Scalar>& d, Scalar eps) {
  const Index count = d.value().size();
  const Scalar v = -(Scalar(1) - d.value().array() + eps).log().mean();
  return Var<Scalar>::make(Tensor<Scalar>::scalar(v), {d}, [count, eps](Node<Scalar>& self) {
    auto& p = *self.parents[0];
    p.grad.array() += (self.grad.data()[0] / Scalar(count)) / (Scalar(1) - p.value.array() + eps);
  });
}

/// mean((d - target)^2).
template <typename Scalar>
Var<Scalar> mean_sq_to(const Var<Scalar>& d, Scalar target) {
  const Index count = d.value().size();
  const Scalar v = (d.value().array() - target).square().mean();
  return Var<Scalar>::make(Tensor<Scalar>::scalar(v), {d}, [count, target](Node<Scalar>& self) {
    auto& p = *self.parents[0];
    p.grad.array() += (Scalar(2) * self.grad.data()[0] / Scalar(count)) * (p.value.array() - target);
  });
}

/// max(0, margin - x) for a scalar x.
template <typename Scalar>
Var<Scalar> hinge_below(const Var<Scalar>& x, Scalar margin) {
  return relu(affine(x, Scalar(-1), margin));
}

}  // namespace lumen
