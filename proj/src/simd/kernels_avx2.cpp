// AVX2 + FMA variants. This translation unit is compiled with -mavx2 -mfma and
// is only entered through the dispatch table after a CPUID check.

#include "laya/simd/kernels.hpp"

#include <immintrin.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <vector>

namespace laya::simd {
namespace {

constexpr std::size_t kMr = 6;
constexpr std::size_t kNr = 8;
constexpr std::size_t kKc = 256;
constexpr std::size_t kMc = 72;
constexpr std::size_t kNc = 1024;

struct PackBuffers {
  std::vector<double> a = std::vector<double>(kMc * kKc);
  std::vector<double> b = std::vector<double>(kNc * kKc);
};

PackBuffers& pack_buffers() {
  thread_local PackBuffers buffers;
  return buffers;
}

inline double load_a(bool trans, const double* a, std::size_t lda,
                     std::size_t i, std::size_t p) {
  return trans ? a[p * lda + i] : a[i * lda + p];
}

inline double load_b(bool trans, const double* b, std::size_t ldb,
                     std::size_t p, std::size_t j) {
  return trans ? b[j * ldb + p] : b[p * ldb + j];
}

// Packs rows [i0, i0+mc) x cols [p0, p0+kc) of op(A) into MR-row panels.
void pack_a(bool trans, const double* a, std::size_t lda, std::size_t i0,
            std::size_t mc, std::size_t p0, std::size_t kc, double* out) {
  for (std::size_t ir = 0; ir < mc; ir += kMr) {
    const std::size_t rows = std::min(kMr, mc - ir);
    for (std::size_t p = 0; p < kc; ++p) {
      std::size_t r = 0;
      for (; r < rows; ++r) out[r] = load_a(trans, a, lda, i0 + ir + r, p0 + p);
      for (; r < kMr; ++r) out[r] = 0.0;
      out += kMr;
    }
  }
}

// Packs rows [p0, p0+kc) x cols [j0, j0+nc) of op(B) into NR-column panels.
void pack_b(bool trans, const double* b, std::size_t ldb, std::size_t p0,
            std::size_t kc, std::size_t j0, std::size_t nc, double* out) {
  for (std::size_t jr = 0; jr < nc; jr += kNr) {
    const std::size_t cols = std::min(kNr, nc - jr);
    for (std::size_t p = 0; p < kc; ++p) {
      if (!trans && cols == kNr) {
        const double* src = b + (p0 + p) * ldb + j0 + jr;
        _mm256_storeu_pd(out, _mm256_loadu_pd(src));
        _mm256_storeu_pd(out + 4, _mm256_loadu_pd(src + 4));
      } else {
        std::size_t c = 0;
        for (; c < cols; ++c) out[c] = load_b(trans, b, ldb, p0 + p, j0 + jr + c);
        for (; c < kNr; ++c) out[c] = 0.0;
      }
      out += kNr;
    }
  }
}

// C[mr x nr] += Apanel * Bpanel over kc steps.
void micro_kernel(std::size_t kc, const double* ap, const double* bp, double* c,
                  std::size_t ldc, std::size_t mr, std::size_t nr) {
  __m256d c00 = _mm256_setzero_pd(), c01 = _mm256_setzero_pd();
  __m256d c10 = _mm256_setzero_pd(), c11 = _mm256_setzero_pd();
  __m256d c20 = _mm256_setzero_pd(), c21 = _mm256_setzero_pd();
  __m256d c30 = _mm256_setzero_pd(), c31 = _mm256_setzero_pd();
  __m256d c40 = _mm256_setzero_pd(), c41 = _mm256_setzero_pd();
  __m256d c50 = _mm256_setzero_pd(), c51 = _mm256_setzero_pd();

  for (std::size_t p = 0; p < kc; ++p) {
    const __m256d b0 = _mm256_loadu_pd(bp);
    const __m256d b1 = _mm256_loadu_pd(bp + 4);
    __m256d a = _mm256_broadcast_sd(ap + 0);
    c00 = _mm256_fmadd_pd(a, b0, c00);
    c01 = _mm256_fmadd_pd(a, b1, c01);
    a = _mm256_broadcast_sd(ap + 1);
    c10 = _mm256_fmadd_pd(a, b0, c10);
    c11 = _mm256_fmadd_pd(a, b1, c11);
    a = _mm256_broadcast_sd(ap + 2);
    c20 = _mm256_fmadd_pd(a, b0, c20);
    c21 = _mm256_fmadd_pd(a, b1, c21);
    a = _mm256_broadcast_sd(ap + 3);
    c30 = _mm256_fmadd_pd(a, b0, c30);
    c31 = _mm256_fmadd_pd(a, b1, c31);
    a = _mm256_broadcast_sd(ap + 4);
    c40 = _mm256_fmadd_pd(a, b0, c40);
    c41 = _mm256_fmadd_pd(a, b1, c41);
    a = _mm256_broadcast_sd(ap + 5);
    c50 = _mm256_fmadd_pd(a, b0, c50);
    c51 = _mm256_fmadd_pd(a, b1, c51);
    ap += kMr;
    bp += kNr;
  }

  alignas(32) double tile[kMr][kNr];
  _mm256_store_pd(tile[0], c00);
  _mm256_store_pd(tile[0] + 4, c01);
  _mm256_store_pd(tile[1], c10);
  _mm256_store_pd(tile[1] + 4, c11);
  _mm256_store_pd(tile[2], c20);
  _mm256_store_pd(tile[2] + 4, c21);
  _mm256_store_pd(tile[3], c30);
  _mm256_store_pd(tile[3] + 4, c31);
  _mm256_store_pd(tile[4], c40);
  _mm256_store_pd(tile[4] + 4, c41);
  _mm256_store_pd(tile[5], c50);
  _mm256_store_pd(tile[5] + 4, c51);

  if (nr == kNr) {
    for (std::size_t r = 0; r < mr; ++r) {
      double* crow = c + r * ldc;
      _mm256_storeu_pd(crow, _mm256_add_pd(_mm256_loadu_pd(crow), _mm256_load_pd(tile[r])));
      _mm256_storeu_pd(crow + 4,
                       _mm256_add_pd(_mm256_loadu_pd(crow + 4), _mm256_load_pd(tile[r] + 4)));
    }
  } else {
    for (std::size_t r = 0; r < mr; ++r) {
      for (std::size_t j = 0; j < nr; ++j) c[r * ldc + j] += tile[r][j];
    }
  }
}

void gemm_avx2(bool trans_a, bool trans_b, std::size_t m, std::size_t n,
               std::size_t k, const double* a, std::size_t lda, const double* b,
               std::size_t ldb, double* c, std::size_t ldc, bool accumulate) {
  if (!accumulate) {
    for (std::size_t i = 0; i < m; ++i) std::memset(c + i * ldc, 0, n * sizeof(double));
  }
  if (m == 0 || n == 0 || k == 0) return;

  PackBuffers& buf = pack_buffers();
  for (std::size_t jc = 0; jc < n; jc += kNc) {
    const std::size_t nc = std::min(kNc, n - jc);
    for (std::size_t pc = 0; pc < k; pc += kKc) {
      const std::size_t kc = std::min(kKc, k - pc);
      pack_b(trans_b, b, ldb, pc, kc, jc, nc, buf.b.data());
      for (std::size_t ic = 0; ic < m; ic += kMc) {
        const std::size_t mc = std::min(kMc, m - ic);
        pack_a(trans_a, a, lda, ic, mc, pc, kc, buf.a.data());
        for (std::size_t jr = 0; jr < nc; jr += kNr) {
          const std::size_t nr = std::min(kNr, nc - jr);
          const double* bp = buf.b.data() + (jr / kNr) * kc * kNr;
          for (std::size_t ir = 0; ir < mc; ir += kMr) {
            const std::size_t mr = std::min(kMr, mc - ir);
            const double* ap = buf.a.data() + (ir / kMr) * kc * kMr;
            micro_kernel(kc, ap, bp, c + (ic + ir) * ldc + jc + jr, ldc, mr, nr);
          }
        }
      }
    }
  }
}

void axpy_avx2(std::size_t n, double alpha, const double* x, double* y) {
  const __m256d va = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(y + i, _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  }
  for (; i < n; ++i) y[i] = std::fma(alpha, x[i], y[i]);
}

void hadamard_acc_avx2(std::size_t n, const double* x, const double* y,
                       double* out) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(out + i, _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i),
                                               _mm256_loadu_pd(out + i)));
  }
  for (; i < n; ++i) out[i] = std::fma(x[i], y[i], out[i]);
}

double hsum(__m256d v) {
  alignas(32) double lanes[4];
  _mm256_store_pd(lanes, v);
  return (lanes[0] + lanes[1]) + (lanes[2] + lanes[3]);
}

double dot_avx2(std::size_t n, const double* x, const double* y) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i + 4), _mm256_loadu_pd(y + i + 4), acc1);
  }
  for (; i + 4 <= n; i += 4) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), acc0);
  }
  double s = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) s = std::fma(x[i], y[i], s);
  return s;
}

void col_sums_acc_avx2(std::size_t m, std::size_t n, const double* x,
                       double* out) {
  for (std::size_t i = 0; i < m; ++i) {
    const double* row = x + i * n;
    std::size_t j = 0;
    for (; j + 4 <= n; j += 4) {
      _mm256_storeu_pd(out + j, _mm256_add_pd(_mm256_loadu_pd(out + j), _mm256_loadu_pd(row + j)));
    }
    for (; j < n; ++j) out[j] += row[j];
  }
}

void adam_update_avx2(std::size_t n, const AdamCoefficients& coef,
                      const double* grad, double* param, double* m, double* v) {
  const __m256d b1 = _mm256_set1_pd(coef.beta1);
  const __m256d b2 = _mm256_set1_pd(coef.beta2);
  const __m256d one_minus_b1 = _mm256_set1_pd(1.0 - coef.beta1);
  const __m256d one_minus_b2 = _mm256_set1_pd(1.0 - coef.beta2);
  const __m256d bc1 = _mm256_set1_pd(coef.bias_correction1);
  const __m256d bc2 = _mm256_set1_pd(coef.bias_correction2);
  const __m256d lr = _mm256_set1_pd(coef.lr);
  const __m256d eps = _mm256_set1_pd(coef.eps);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d g = _mm256_loadu_pd(grad + i);
    const __m256d mi = _mm256_add_pd(_mm256_mul_pd(b1, _mm256_loadu_pd(m + i)),
                                     _mm256_mul_pd(one_minus_b1, g));
    const __m256d vi = _mm256_add_pd(_mm256_mul_pd(b2, _mm256_loadu_pd(v + i)),
                                     _mm256_mul_pd(_mm256_mul_pd(one_minus_b2, g), g));
    _mm256_storeu_pd(m + i, mi);
    _mm256_storeu_pd(v + i, vi);
    const __m256d m_hat = _mm256_div_pd(mi, bc1);
    const __m256d v_hat = _mm256_div_pd(vi, bc2);
    const __m256d step =
        _mm256_div_pd(_mm256_mul_pd(lr, m_hat), _mm256_add_pd(_mm256_sqrt_pd(v_hat), eps));
    _mm256_storeu_pd(param + i, _mm256_sub_pd(_mm256_loadu_pd(param + i), step));
  }
  for (; i < n; ++i) {
    const double g = grad[i];
    m[i] = coef.beta1 * m[i] + (1.0 - coef.beta1) * g;
    v[i] = coef.beta2 * v[i] + (1.0 - coef.beta2) * g * g;
    const double m_hat = m[i] / coef.bias_correction1;
    const double v_hat = v[i] / coef.bias_correction2;
    param[i] -= coef.lr * m_hat / (std::sqrt(v_hat) + coef.eps);
  }
}

}  // namespace

const KernelTable& avx2_kernels() {
  static const KernelTable table{Isa::avx2,       gemm_avx2,         axpy_avx2,
                                 hadamard_acc_avx2, dot_avx2,        col_sums_acc_avx2,
                                 adam_update_avx2};
  return table;
}

}  // namespace laya::simd
