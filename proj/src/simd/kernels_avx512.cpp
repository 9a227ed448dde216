// AVX-512F GEMM. Same blocking scheme as the AVX2 variant with a 12x16
// micro-tile; the vector kernels are shared with the AVX2 table.

#include "laya/simd/kernels.hpp"

#include <immintrin.h>

#include <algorithm>
#include <cstring>
#include <vector>

namespace laya::simd {
namespace {

constexpr std::size_t kMr = 12;
constexpr std::size_t kNr = 16;
constexpr std::size_t kKc = 256;
constexpr std::size_t kMc = 96;
constexpr std::size_t kNc = 1024;

struct PackBuffers {
  std::vector<double> a = std::vector<double>(kMc * kKc);
  std::vector<double> b = std::vector<double>(kNc * kKc);
};

PackBuffers& pack_buffers() {
  thread_local PackBuffers buffers;
  return buffers;
}

void pack_a(bool trans, const double* a, std::size_t lda, std::size_t i0,
            std::size_t mc, std::size_t p0, std::size_t kc, double* out) {
  for (std::size_t ir = 0; ir < mc; ir += kMr) {
    const std::size_t rows = std::min(kMr, mc - ir);
    for (std::size_t p = 0; p < kc; ++p) {
      std::size_t r = 0;
      if (trans) {
        const double* src = a + (p0 + p) * lda + i0 + ir;
        for (; r < rows; ++r) out[r] = src[r];
      } else {
        for (; r < rows; ++r) out[r] = a[(i0 + ir + r) * lda + p0 + p];
      }
      for (; r < kMr; ++r) out[r] = 0.0;
      out += kMr;
    }
  }
}

void pack_b(bool trans, const double* b, std::size_t ldb, std::size_t p0,
            std::size_t kc, std::size_t j0, std::size_t nc, double* out) {
  for (std::size_t jr = 0; jr < nc; jr += kNr) {
    const std::size_t cols = std::min(kNr, nc - jr);
    for (std::size_t p = 0; p < kc; ++p) {
      if (!trans && cols == kNr) {
        const double* src = b + (p0 + p) * ldb + j0 + jr;
        _mm512_storeu_pd(out, _mm512_loadu_pd(src));
        _mm512_storeu_pd(out + 8, _mm512_loadu_pd(src + 8));
      } else {
        std::size_t c = 0;
        for (; c < cols; ++c) {
          out[c] = trans ? b[(j0 + jr + c) * ldb + p0 + p] : b[(p0 + p) * ldb + j0 + jr + c];
        }
        for (; c < kNr; ++c) out[c] = 0.0;
      }
      out += kNr;
    }
  }
}

void micro_kernel(std::size_t kc, const double* ap, const double* bp, double* c,
                  std::size_t ldc, std::size_t mr, std::size_t nr) {
  __m512d acc[kMr][2];
  for (auto& row : acc) row[0] = row[1] = _mm512_setzero_pd();

  for (std::size_t p = 0; p < kc; ++p) {
    const __m512d b0 = _mm512_loadu_pd(bp);
    const __m512d b1 = _mm512_loadu_pd(bp + 8);
#pragma GCC unroll 12
    for (std::size_t r = 0; r < kMr; ++r) {
      const __m512d a = _mm512_set1_pd(ap[r]);
      acc[r][0] = _mm512_fmadd_pd(a, b0, acc[r][0]);
      acc[r][1] = _mm512_fmadd_pd(a, b1, acc[r][1]);
    }
    ap += kMr;
    bp += kNr;
  }

  if (nr == kNr) {
    for (std::size_t r = 0; r < mr; ++r) {
      double* crow = c + r * ldc;
      _mm512_storeu_pd(crow, _mm512_add_pd(_mm512_loadu_pd(crow), acc[r][0]));
      _mm512_storeu_pd(crow + 8, _mm512_add_pd(_mm512_loadu_pd(crow + 8), acc[r][1]));
    }
    return;
  }
  const __mmask8 m0 = static_cast<__mmask8>(nr >= 8 ? 0xFF : (1u << nr) - 1);
  const __mmask8 m1 = static_cast<__mmask8>(nr <= 8 ? 0 : (1u << (nr - 8)) - 1);
  for (std::size_t r = 0; r < mr; ++r) {
    double* crow = c + r * ldc;
    _mm512_mask_storeu_pd(crow, m0, _mm512_add_pd(_mm512_maskz_loadu_pd(m0, crow), acc[r][0]));
    if (m1 != 0) {
      _mm512_mask_storeu_pd(crow + 8, m1,
                            _mm512_add_pd(_mm512_maskz_loadu_pd(m1, crow + 8), acc[r][1]));
    }
  }
}

void gemm_avx512(bool trans_a, bool trans_b, std::size_t m, std::size_t n,
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

}  // namespace

const KernelTable& avx512_kernels() {
  static const KernelTable table = [] {
    KernelTable t = avx2_kernels();
    t.isa = Isa::avx512;
    t.gemm = gemm_avx512;
    return t;
  }();
  return table;
}

}  // namespace laya::simd
