#include "laya/autodiff/ops.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "laya/error.hpp"
#include "laya/simd/kernels.hpp"

namespace laya::ops {

using ad::Tape;

namespace {

const simd::KernelTable& K() { return simd::kernels(); }

void require_rank(const Var& v, std::size_t rank, const char* op) {
  if (v.shape().size() != rank) {
    throw DimensionError(std::string(op) + ": expected rank " + std::to_string(rank) +
                         ", got " + shape_str(v.shape()));
  }
}

void require_same_shape(const Var& a, const Var& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw DimensionError(std::string(op) + ": shape mismatch " + shape_str(a.shape()) + " vs " +
                         shape_str(b.shape()));
  }
}

void require_same_tape(const Var& a, const Var& b) {
  if (&a.tape() != &b.tape()) throw ContractError("operands live on different tapes");
}

bool wants(const Var& v) { return v.requires_grad(); }

double gelu_value(double x) { return 0.5 * x * (1.0 + std::erf(x / std::numbers::sqrt2)); }

double gelu_derivative(double x) {
  const double cdf = 0.5 * (1.0 + std::erf(x / std::numbers::sqrt2));
  const double pdf = std::exp(-0.5 * x * x) * (std::numbers::inv_sqrtpi / std::numbers::sqrt2);
  return cdf + x * pdf;
}

struct Nhwc {
  std::size_t n, h, w, c;
};

Nhwc nhwc(const Var& x, const char* op) {
  require_rank(x, 4, op);
  const Shape& s = x.shape();
  return {s[0], s[1], s[2], s[3]};
}

}  // namespace

Var matmul(Var a, Var b) {
  require_same_tape(a, b);
  require_rank(a, 2, "matmul");
  require_rank(b, 2, "matmul");
  const std::size_t m = a.shape()[0], k = a.shape()[1], n = b.shape()[1];
  if (b.shape()[0] != k) {
    throw DimensionError("matmul: inner dimensions differ, " + shape_str(a.shape()) + " x " +
                         shape_str(b.shape()));
  }
  Tensor out({m, n});
  K().gemm(false, false, m, n, k, a.value().data(), k, b.value().data(), n, out.data(), n, false);
  return a.tape().emit(std::move(out), {a, b}, [a, b, m, n, k](Tape& t, Var out) {
    const Tensor& dc = t.grad_buffer(out);
    if (wants(a)) {
      // dA += dC * B^T
      K().gemm(false, true, m, k, n, dc.data(), n, b.value().data(), n,
               t.grad_buffer(a).data(), k, true);
    }
    if (wants(b)) {
      // dB += A^T * dC
      K().gemm(true, false, k, n, m, a.value().data(), k, dc.data(), n,
               t.grad_buffer(b).data(), n, true);
    }
  });
}

Var add(Var a, Var b) {
  require_same_tape(a, b);
  require_same_shape(a, b, "add");
  Tensor out = a.value();
  K().axpy(out.size(), 1.0, b.value().data(), out.data());
  return a.tape().emit(std::move(out), {a, b}, [a, b](Tape& t, Var out) {
    const Tensor& g = t.grad_buffer(out);
    if (wants(a)) K().axpy(g.size(), 1.0, g.data(), t.grad_buffer(a).data());
    if (wants(b)) K().axpy(g.size(), 1.0, g.data(), t.grad_buffer(b).data());
  });
}

Var mul(Var a, Var b) {
  require_same_tape(a, b);
  require_same_shape(a, b, "mul");
  Tensor out(a.shape());
  K().hadamard_acc(out.size(), a.value().data(), b.value().data(), out.data());
  return a.tape().emit(std::move(out), {a, b}, [a, b](Tape& t, Var out) {
    const Tensor& g = t.grad_buffer(out);
    if (wants(a)) K().hadamard_acc(g.size(), g.data(), b.value().data(), t.grad_buffer(a).data());
    if (wants(b)) K().hadamard_acc(g.size(), g.data(), a.value().data(), t.grad_buffer(b).data());
  });
}

Var scale(Var a, double factor) {
  Tensor out(a.shape());
  K().axpy(out.size(), factor, a.value().data(), out.data());
  return a.tape().emit(std::move(out), {a}, [a, factor](Tape& t, Var out) {
    const Tensor& g = t.grad_buffer(out);
    K().axpy(g.size(), factor, g.data(), t.grad_buffer(a).data());
  });
}

Var add_bias(Var x, Var bias) {
  require_same_tape(x, bias);
  require_rank(bias, 1, "add_bias");
  if (x.shape().empty() || x.shape().back() != bias.shape()[0]) {
    throw DimensionError("add_bias: bias " + shape_str(bias.shape()) + " does not match " +
                         shape_str(x.shape()));
  }
  const std::size_t d = bias.shape()[0];
  const std::size_t rows = x.value().size() / d;
  Tensor out = x.value();
  for (std::size_t r = 0; r < rows; ++r) K().axpy(d, 1.0, bias.value().data(), out.data() + r * d);
  return x.tape().emit(std::move(out), {x, bias}, [x, bias, rows, d](Tape& t, Var out) {
    const Tensor& g = t.grad_buffer(out);
    if (wants(x)) K().axpy(g.size(), 1.0, g.data(), t.grad_buffer(x).data());
    if (wants(bias)) K().col_sums_acc(rows, d, g.data(), t.grad_buffer(bias).data());
  });
}

Var reshape(Var x, Shape shape) {
  Tensor out = x.value().reshaped(std::move(shape));
  return x.tape().emit(std::move(out), {x}, [x](Tape& t, Var out) {
    const Tensor& g = t.grad_buffer(out);
    K().axpy(g.size(), 1.0, g.data(), t.grad_buffer(x).data());
  });
}

Var concat_cols(const std::vector<Var>& parts) {
  if (parts.empty()) throw DimensionError("concat_cols: no inputs");
  const std::size_t n = parts.front().shape().at(0);
  std::vector<std::size_t> widths;
  std::size_t total = 0;
  for (const Var& p : parts) {
    require_same_tape(p, parts.front());
    require_rank(p, 2, "concat_cols");
    if (p.shape()[0] != n) {
      throw DimensionError("concat_cols: row count mismatch " + shape_str(p.shape()) + " vs " +
                           shape_str(parts.front().shape()));
    }
    widths.push_back(p.shape()[1]);
    total += p.shape()[1];
  }
  Tensor out({n, total});
  for (std::size_t r = 0; r < n; ++r) {
    std::size_t offset = 0;
    for (std::size_t i = 0; i < parts.size(); ++i) {
      const double* src = parts[i].value().data() + r * widths[i];
      std::copy(src, src + widths[i], out.data() + r * total + offset);
      offset += widths[i];
    }
  }
  return parts.front().tape().emit(std::move(out), parts, [parts, widths, n, total](Tape& t, Var out) {
    const Tensor& g = t.grad_buffer(out);
    std::size_t offset = 0;
    for (std::size_t i = 0; i < parts.size(); ++i) {
      if (wants(parts[i])) {
        Tensor& gi = t.grad_buffer(parts[i]);
        for (std::size_t r = 0; r < n; ++r) {
          K().axpy(widths[i], 1.0, g.data() + r * total + offset, gi.data() + r * widths[i]);
        }
      }
      offset += widths[i];
    }
  });
}

Var sum(Var x) {
  double s = 0.0;
  for (double v : x.value().values()) s += v;
  return x.tape().emit(Tensor::scalar(s), {x}, [x](Tape& t, Var out) {
    const double g = t.grad_buffer(out)[0];
    for (double& v : t.grad_buffer(x).values()) v += g;
  });
}

Var mean(Var x) {
  const std::size_t n = x.value().size();
  if (n == 0) throw DimensionError("mean of an empty tensor");
  return scale(sum(x), 1.0 / static_cast<double>(n));
}

Var log(Var x) {
  Tensor out(x.shape());
  const Tensor& in = x.value();
  for (std::size_t i = 0; i < in.size(); ++i) out[i] = std::log(in[i]);
  return x.tape().emit(std::move(out), {x}, [x](Tape& t, Var out) {
    const Tensor& g = t.grad_buffer(out);
    const Tensor& in = x.value();
    Tensor& gx = t.grad_buffer(x);
    for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] / in[i];
  });
}

Var gelu(Var x) {
  Tensor out(x.shape());
  const Tensor& in = x.value();
  for (std::size_t i = 0; i < in.size(); ++i) out[i] = gelu_value(in[i]);
  return x.tape().emit(std::move(out), {x}, [x](Tape& t, Var out) {
    const Tensor& g = t.grad_buffer(out);
    const Tensor& in = x.value();
    Tensor& gx = t.grad_buffer(x);
    for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * gelu_derivative(in[i]);
  });
}

Var layer_norm(Var x, Var gain, Var offset, double eps) {
  require_same_tape(x, gain);
  require_same_tape(x, offset);
  if (!(eps > 0.0)) throw ParameterError("layer_norm: eps must be positive");
  if (x.shape().empty() || x.shape().back() == 0) {
    throw DimensionError("layer_norm: feature dimension is zero in " + shape_str(x.shape()));
  }
  const std::size_t d = x.shape().back();
  if (gain.shape() != Shape{d} || offset.shape() != Shape{d}) {
    throw DimensionError("layer_norm: gain/offset " + shape_str(gain.shape()) + "/" +
                         shape_str(offset.shape()) + " do not match feature dim " +
                         std::to_string(d));
  }
  const std::size_t rows = x.value().size() / d;
  const Tensor& in = x.value();
  const Tensor& g = gain.value();
  const Tensor& o = offset.value();
  Tensor normed(x.shape());
  std::vector<double> inv_std(rows);
  Tensor out(x.shape());
  for (std::size_t r = 0; r < rows; ++r) {
    const double* row = in.data() + r * d;
    double mu = 0.0;
    for (std::size_t j = 0; j < d; ++j) mu += row[j];
    mu /= static_cast<double>(d);
    double var = 0.0;
    for (std::size_t j = 0; j < d; ++j) var += (row[j] - mu) * (row[j] - mu);
    var /= static_cast<double>(d);
    const double rstd = 1.0 / std::sqrt(var + eps);
    inv_std[r] = rstd;
    double* nrow = normed.data() + r * d;
    double* orow = out.data() + r * d;
    for (std::size_t j = 0; j < d; ++j) {
      nrow[j] = (row[j] - mu) * rstd;
      orow[j] = g[j] * nrow[j] + o[j];
    }
  }
  return x.tape().emit(
      std::move(out), {x, gain, offset},
      [x, gain, offset, d, rows, normed = std::move(normed), inv_std = std::move(inv_std)](
          Tape& t, Var out) {
        const Tensor& dy = t.grad_buffer(out);
        if (wants(gain)) {
          Tensor& dg = t.grad_buffer(gain);
          for (std::size_t r = 0; r < rows; ++r) {
            K().hadamard_acc(d, dy.data() + r * d, normed.data() + r * d, dg.data());
          }
        }
        if (wants(offset)) K().col_sums_acc(rows, d, dy.data(), t.grad_buffer(offset).data());
        if (!wants(x)) return;
        const Tensor& g = gain.value();
        Tensor& dx = t.grad_buffer(x);
        std::vector<double> dxhat(d);
        const double inv_d = 1.0 / static_cast<double>(d);
        for (std::size_t r = 0; r < rows; ++r) {
          const double* dyr = dy.data() + r * d;
          const double* nr = normed.data() + r * d;
          double mean_dxhat = 0.0;
          double mean_dxhat_xhat = 0.0;
          for (std::size_t j = 0; j < d; ++j) {
            dxhat[j] = dyr[j] * g[j];
            mean_dxhat += dxhat[j];
            mean_dxhat_xhat += dxhat[j] * nr[j];
          }
          mean_dxhat *= inv_d;
          mean_dxhat_xhat *= inv_d;
          double* dxr = dx.data() + r * d;
          for (std::size_t j = 0; j < d; ++j) {
            dxr[j] += inv_std[r] * (dxhat[j] - mean_dxhat - nr[j] * mean_dxhat_xhat);
          }
        }
      });
}

Var softmax_temperature(Var s, double tau) {
  if (!(tau > 0.0)) throw ParameterError("softmax_temperature: tau must be > 0, got " + std::to_string(tau));
  if (s.shape().empty() || s.shape().back() == 0) {
    throw DimensionError("softmax_temperature: empty last axis in " + shape_str(s.shape()));
  }
  const std::size_t L = s.shape().back();
  const std::size_t rows = s.value().size() / L;
  Tensor out(s.shape());
  const Tensor& in = s.value();
  for (std::size_t r = 0; r < rows; ++r) {
    const double* sr = in.data() + r * L;
    double* ar = out.data() + r * L;
    const double mx = *std::max_element(sr, sr + L);
    double z = 0.0;
    for (std::size_t i = 0; i < L; ++i) {
      ar[i] = std::exp((sr[i] - mx) / tau);
      z += ar[i];
    }
    for (std::size_t i = 0; i < L; ++i) ar[i] /= z;
  }
  return s.tape().emit(std::move(out), {s}, [s, tau, L, rows](Tape& t, Var out) {
    const Tensor& da = t.grad_buffer(out);
    const Tensor& a = out.value();
    Tensor& ds = t.grad_buffer(s);
    for (std::size_t r = 0; r < rows; ++r) {
      const double* ar = a.data() + r * L;
      const double* dar = da.data() + r * L;
      double inner = 0.0;
      for (std::size_t i = 0; i < L; ++i) inner += dar[i] * ar[i];
      for (std::size_t i = 0; i < L; ++i) ds[r * L + i] += ar[i] * (dar[i] - inner) / tau;
    }
  });
}

Var mix(Var alpha, const std::vector<Var>& parts) {
  require_rank(alpha, 2, "mix");
  if (parts.empty()) throw DimensionError("mix: no layers");
  const std::size_t L = parts.size();
  const std::size_t n = parts.front().shape().at(0);
  const std::size_t d = parts.front().shape().size() == 2 ? parts.front().shape()[1] : 0;
  for (const Var& p : parts) {
    require_same_tape(alpha, p);
    if (p.shape() != Shape{n, d}) {
      throw DimensionError("mix: layer shape " + shape_str(p.shape()) + " differs from " +
                           shape_str(parts.front().shape()));
    }
  }
  const std::size_t arows = alpha.shape()[0];
  if (alpha.shape()[1] != L || (arows != n && arows != 1)) {
    throw DimensionError("mix: weights " + shape_str(alpha.shape()) + " incompatible with " +
                         std::to_string(L) + " layers of " + shape_str(parts.front().shape()));
  }
  const Tensor& a = alpha.value();
  Tensor out({n, d});
  for (std::size_t r = 0; r < n; ++r) {
    const std::size_t ar = arows == 1 ? 0 : r;
    for (std::size_t i = 0; i < L; ++i) {
      K().axpy(d, a[ar * L + i], parts[i].value().data() + r * d, out.data() + r * d);
    }
  }
  std::vector<Var> inputs = parts;
  inputs.push_back(alpha);
  return alpha.tape().emit(std::move(out), inputs, [alpha, parts, n, d, L, arows](Tape& t, Var out) {
    const Tensor& g = t.grad_buffer(out);
    const Tensor& a = alpha.value();
    for (std::size_t i = 0; i < L; ++i) {
      if (!wants(parts[i])) continue;
      Tensor& gi = t.grad_buffer(parts[i]);
      for (std::size_t r = 0; r < n; ++r) {
        const std::size_t ar = arows == 1 ? 0 : r;
        K().axpy(d, a[ar * L + i], g.data() + r * d, gi.data() + r * d);
      }
    }
    if (wants(alpha)) {
      Tensor& ga = t.grad_buffer(alpha);
      for (std::size_t r = 0; r < n; ++r) {
        const std::size_t ar = arows == 1 ? 0 : r;
        for (std::size_t i = 0; i < L; ++i) {
          ga[ar * L + i] += K().dot(d, g.data() + r * d, parts[i].value().data() + r * d);
        }
      }
    }
  });
}

Var embedding_bag_mean(Var table, std::span<const std::int32_t> tokens, std::size_t batch,
                       std::size_t seq_len, std::int32_t padding_id) {
  require_rank(table, 2, "embedding_bag_mean");
  if (tokens.size() != batch * seq_len) {
    throw DimensionError("embedding_bag_mean: " + std::to_string(tokens.size()) +
                         " tokens for batch " + std::to_string(batch) + " x " +
                         std::to_string(seq_len));
  }
  const std::size_t vocab = table.shape()[0];
  const std::size_t e = table.shape()[1];
  std::vector<std::int32_t> ids(tokens.begin(), tokens.end());
  std::vector<double> inv_counts(batch);
  Tensor out({batch, e});
  const Tensor& w = table.value();
  for (std::size_t b = 0; b < batch; ++b) {
    std::size_t count = 0;
    for (std::size_t p = 0; p < seq_len; ++p) {
      const std::int32_t id = ids[b * seq_len + p];
      if (id < 0 || static_cast<std::size_t>(id) >= vocab) {
        throw DataError("token id " + std::to_string(id) + " outside vocabulary of " +
                        std::to_string(vocab));
      }
      if (id == padding_id) continue;
      K().axpy(e, 1.0, w.data() + static_cast<std::size_t>(id) * e, out.data() + b * e);
      ++count;
    }
    if (count == 0) throw DataError("sequence " + std::to_string(b) + " contains only padding");
    inv_counts[b] = 1.0 / static_cast<double>(count);
    for (std::size_t j = 0; j < e; ++j) out[b * e + j] *= inv_counts[b];
  }
  return table.tape().emit(
      std::move(out), {table},
      [table, ids = std::move(ids), inv_counts = std::move(inv_counts), batch, seq_len, e,
       padding_id](Tape& t, Var out) {
        const Tensor& g = t.grad_buffer(out);
        Tensor& gw = t.grad_buffer(table);
        for (std::size_t b = 0; b < batch; ++b) {
          for (std::size_t p = 0; p < seq_len; ++p) {
            const std::int32_t id = ids[b * seq_len + p];
            if (id == padding_id) continue;
            K().axpy(e, inv_counts[b], g.data() + b * e,
                     gw.data() + static_cast<std::size_t>(id) * e);
          }
        }
      });
}

Var depthwise_conv2d(Var x, Var kernel, Var bias) {
  require_same_tape(x, kernel);
  require_same_tape(x, bias);
  const Nhwc s = nhwc(x, "depthwise_conv2d");
  require_rank(kernel, 3, "depthwise_conv2d");
  const std::size_t kh = kernel.shape()[0], kw = kernel.shape()[1];
  if (kernel.shape()[2] != s.c || bias.shape() != Shape{s.c} || kh % 2 == 0 || kw % 2 == 0) {
    throw DimensionError("depthwise_conv2d: kernel " + shape_str(kernel.shape()) + " / bias " +
                         shape_str(bias.shape()) + " incompatible with input " +
                         shape_str(x.shape()));
  }
  const long ph = static_cast<long>(kh / 2), pw = static_cast<long>(kw / 2);
  const Tensor& in = x.value();
  const Tensor& k = kernel.value();
  Tensor out(x.shape());
  auto pixel = [&](std::size_t n, std::size_t h, std::size_t w) {
    return ((n * s.h + h) * s.w + w) * s.c;
  };
  for (std::size_t n = 0; n < s.n; ++n) {
    for (std::size_t h = 0; h < s.h; ++h) {
      for (std::size_t w = 0; w < s.w; ++w) {
        double* o = out.data() + pixel(n, h, w);
        std::copy(bias.value().data(), bias.value().data() + s.c, o);
        for (std::size_t i = 0; i < kh; ++i) {
          const long hh = static_cast<long>(h) + static_cast<long>(i) - ph;
          if (hh < 0 || hh >= static_cast<long>(s.h)) continue;
          for (std::size_t j = 0; j < kw; ++j) {
            const long ww = static_cast<long>(w) + static_cast<long>(j) - pw;
            if (ww < 0 || ww >= static_cast<long>(s.w)) continue;
            K().hadamard_acc(s.c, in.data() + pixel(n, hh, ww), k.data() + (i * kw + j) * s.c, o);
          }
        }
      }
    }
  }
  return x.tape().emit(std::move(out), {x, kernel, bias},
                       [x, kernel, bias, s, kh, kw, ph, pw](Tape& t, Var out) {
    const Tensor& g = t.grad_buffer(out);
    auto pixel = [&](std::size_t n, std::size_t h, std::size_t w) {
      return ((n * s.h + h) * s.w + w) * s.c;
    };
    if (wants(bias)) K().col_sums_acc(s.n * s.h * s.w, s.c, g.data(), t.grad_buffer(bias).data());
    const bool want_x = wants(x), want_k = wants(kernel);
    if (!want_x && !want_k) return;
    const Tensor& in = x.value();
    const Tensor& k = kernel.value();
    double* dx = want_x ? t.grad_buffer(x).data() : nullptr;
    double* dk = want_k ? t.grad_buffer(kernel).data() : nullptr;
    for (std::size_t n = 0; n < s.n; ++n) {
      for (std::size_t h = 0; h < s.h; ++h) {
        for (std::size_t w = 0; w < s.w; ++w) {
          const double* go = g.data() + pixel(n, h, w);
          for (std::size_t i = 0; i < kh; ++i) {
            const long hh = static_cast<long>(h) + static_cast<long>(i) - ph;
            if (hh < 0 || hh >= static_cast<long>(s.h)) continue;
            for (std::size_t j = 0; j < kw; ++j) {
              const long ww = static_cast<long>(w) + static_cast<long>(j) - pw;
              if (ww < 0 || ww >= static_cast<long>(s.w)) continue;
              const std::size_t src = pixel(n, hh, ww);
              const std::size_t tap = (i * kw + j) * s.c;
              if (want_x) K().hadamard_acc(s.c, go, k.data() + tap, dx + src);
              if (want_k) K().hadamard_acc(s.c, go, in.data() + src, dk + tap);
            }
          }
        }
      }
    }
  });
}

Var pointwise_conv2d(Var x, Var weight, Var bias) {
  const Nhwc s = nhwc(x, "pointwise_conv2d");
  require_rank(weight, 2, "pointwise_conv2d");
  if (weight.shape()[0] != s.c) {
    throw DimensionError("pointwise_conv2d: weight " + shape_str(weight.shape()) +
                         " incompatible with input " + shape_str(x.shape()));
  }
  const std::size_t c_out = weight.shape()[1];
  Var flat = reshape(x, {s.n * s.h * s.w, s.c});
  Var y = add_bias(matmul(flat, weight), bias);
  return reshape(y, {s.n, s.h, s.w, c_out});
}

Var avg_pool2x2(Var x) {
  const Nhwc s = nhwc(x, "avg_pool2x2");
  if (s.h % 2 != 0 || s.w % 2 != 0) {
    throw DimensionError("avg_pool2x2: spatial extents must be even, got " + shape_str(x.shape()));
  }
  const std::size_t oh = s.h / 2, ow = s.w / 2;
  const Tensor& in = x.value();
  Tensor out({s.n, oh, ow, s.c});
  for (std::size_t n = 0; n < s.n; ++n) {
    for (std::size_t h = 0; h < oh; ++h) {
      for (std::size_t w = 0; w < ow; ++w) {
        double* o = out.data() + ((n * oh + h) * ow + w) * s.c;
        for (std::size_t dh = 0; dh < 2; ++dh) {
          for (std::size_t dw = 0; dw < 2; ++dw) {
            K().axpy(s.c, 0.25, in.data() + ((n * s.h + 2 * h + dh) * s.w + 2 * w + dw) * s.c, o);
          }
        }
      }
    }
  }
  return x.tape().emit(std::move(out), {x}, [x, s, oh, ow](Tape& t, Var out) {
    const Tensor& g = t.grad_buffer(out);
    Tensor& dx = t.grad_buffer(x);
    for (std::size_t n = 0; n < s.n; ++n) {
      for (std::size_t h = 0; h < oh; ++h) {
        for (std::size_t w = 0; w < ow; ++w) {
          const double* go = g.data() + ((n * oh + h) * ow + w) * s.c;
          for (std::size_t dh = 0; dh < 2; ++dh) {
            for (std::size_t dw = 0; dw < 2; ++dw) {
              K().axpy(s.c, 0.25, go, dx.data() + ((n * s.h + 2 * h + dh) * s.w + 2 * w + dw) * s.c);
            }
          }
        }
      }
    }
  });
}

Var global_avg_pool(Var x) {
  const Nhwc s = nhwc(x, "global_avg_pool");
  const std::size_t hw = s.h * s.w;
  if (hw == 0) throw DimensionError("global_avg_pool: empty spatial extent");
  const double inv = 1.0 / static_cast<double>(hw);
  const Tensor& in = x.value();
  Tensor out({s.n, s.c});
  for (std::size_t n = 0; n < s.n; ++n) {
    K().col_sums_acc(hw, s.c, in.data() + n * hw * s.c, out.data() + n * s.c);
    for (std::size_t c = 0; c < s.c; ++c) out[n * s.c + c] *= inv;
  }
  return x.tape().emit(std::move(out), {x}, [x, s, hw, inv](Tape& t, Var out) {
    const Tensor& g = t.grad_buffer(out);
    Tensor& dx = t.grad_buffer(x);
    for (std::size_t n = 0; n < s.n; ++n) {
      for (std::size_t p = 0; p < hw; ++p) {
        K().axpy(s.c, inv, g.data() + n * s.c, dx.data() + (n * hw + p) * s.c);
      }
    }
  });
}

Var cross_entropy(Var logits, std::span<const int> labels) {
  require_rank(logits, 2, "cross_entropy");
  const std::size_t n = logits.shape()[0], c = logits.shape()[1];
  if (labels.size() != n) {
    throw DimensionError("cross_entropy: " + std::to_string(labels.size()) + " labels for " +
                         std::to_string(n) + " rows");
  }
  if (n == 0 || c == 0) throw DimensionError("cross_entropy: empty logits");
  const Tensor& z = logits.value();
  Tensor probs({n, c});
  double total = 0.0;
  std::vector<int> y(labels.begin(), labels.end());
  for (std::size_t r = 0; r < n; ++r) {
    if (y[r] < 0 || static_cast<std::size_t>(y[r]) >= c) {
      throw DataError("label " + std::to_string(y[r]) + " outside [0, " + std::to_string(c) + ")");
    }
    const double* zr = z.data() + r * c;
    const double mx = *std::max_element(zr, zr + c);
    double norm = 0.0;
    for (std::size_t j = 0; j < c; ++j) {
      probs[r * c + j] = std::exp(zr[j] - mx);
      norm += probs[r * c + j];
    }
    for (std::size_t j = 0; j < c; ++j) probs[r * c + j] /= norm;
    total += (std::log(norm) + mx) - zr[y[r]];
  }
  const double inv_n = 1.0 / static_cast<double>(n);
  return logits.tape().emit(
      Tensor::scalar(total * inv_n), {logits},
      [logits, probs = std::move(probs), y = std::move(y), n, c, inv_n](Tape& t, Var out) {
        const double g = t.grad_buffer(out)[0] * inv_n;
        Tensor& dz = t.grad_buffer(logits);
        for (std::size_t r = 0; r < n; ++r) {
          for (std::size_t j = 0; j < c; ++j) {
            const double target = static_cast<std::size_t>(y[r]) == j ? 1.0 : 0.0;
            dz[r * c + j] += g * (probs[r * c + j] - target);
          }
        }
      });
}

}  // namespace laya::ops
