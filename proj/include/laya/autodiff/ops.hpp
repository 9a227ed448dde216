#pragma once

// Differentiable primitives. Each op validates shapes, computes the forward
// value with the active SIMD kernel table and records its vector-Jacobian
// product on the tape of its first argument.

#include <cstdint>
#include <span>
#include <vector>

#include "laya/autodiff/tape.hpp"

namespace laya::ops {

using ad::Var;

// a[m x k] * b[k x n]
Var matmul(Var a, Var b);

Var add(Var a, Var b);
Var mul(Var a, Var b);
Var scale(Var a, double factor);

// x[... x d] + bias[d], broadcast over all leading axes.
Var add_bias(Var x, Var bias);

// Same data, new shape.
Var reshape(Var x, Shape shape);

// Concatenate 2-D tensors along the feature axis.
Var concat_cols(const std::vector<Var>& parts);

// Reductions to a [1] scalar.
Var sum(Var x);
Var mean(Var x);

Var log(Var x);

// Exact erf-based GELU.
Var gelu(Var x);

// Normalises each row over the last axis, then gain * x_hat + offset.
Var layer_norm(Var x, Var gain, Var offset, double eps = 1e-5);

// Row-wise softmax(s / tau) over the last axis of s[n x L].
Var softmax_temperature(Var s, double tau);

// out[r] = sum_i alpha[r, i] * parts[i][r]. alpha is [n x L] or [1 x L]
// (the latter broadcast over rows); every part is [n x d].
Var mix(Var alpha, const std::vector<Var>& parts);

// Embedding lookup followed by a mean over non-padding positions.
// tokens is row-major [batch x seq_len]; returns [batch x E].
Var embedding_bag_mean(Var table, std::span<const std::int32_t> tokens,
                       std::size_t batch, std::size_t seq_len,
                       std::int32_t padding_id = 0);

// x[N x H x W x C] (*) kernel[kh x kw x C] + bias[C], stride 1, zero "same"
// padding, odd kernel extents.
Var depthwise_conv2d(Var x, Var kernel, Var bias);

// 1x1 convolution x[N x H x W x C] -> [N x H x W x C'] with weight[C x C'].
Var pointwise_conv2d(Var x, Var weight, Var bias);

// 2x2 average pooling with stride 2; H and W must be even.
Var avg_pool2x2(Var x);

// Mean over the spatial axes: [N x H x W x C] -> [N x C].
Var global_avg_pool(Var x);

// Mean softmax cross-entropy of logits[n x C] against integer labels.
Var cross_entropy(Var logits, std::span<const int> labels);

}  // namespace laya::ops
