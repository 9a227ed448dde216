#pragma once

// Dense f64 compute kernels used by the autodiff engine.
//
// Every kernel has a portable scalar reference implementation and, on x86-64,
// an AVX2+FMA variant compiled with per-file target flags; the avx512 table
// swaps in an AVX-512F GEMM. The active table is chosen once at startup from
// CPUID and can be overridden with the LAYA_SIMD environment variable
// (scalar | avx2 | avx512 | auto) or set_isa() in tests.
//
// All matrices are row-major with explicit leading dimensions.

#include <cstddef>
#include <string_view>

namespace laya::simd {

enum class Isa { scalar, avx2, avx512 };

struct AdamCoefficients {
  double lr;
  double beta1;
  double beta2;
  double eps;
  double bias_correction1;  // 1 - beta1^t
  double bias_correction2;  // 1 - beta2^t
};

struct KernelTable {
  Isa isa;

  // C = op(A) * op(B) (+ C when accumulate). op(A) is m x k, op(B) is k x n.
  void (*gemm)(bool trans_a, bool trans_b, std::size_t m, std::size_t n,
               std::size_t k, const double* a, std::size_t lda, const double* b,
               std::size_t ldb, double* c, std::size_t ldc, bool accumulate);

  // y += alpha * x
  void (*axpy)(std::size_t n, double alpha, const double* x, double* y);

  // out += x * y (elementwise)
  void (*hadamard_acc)(std::size_t n, const double* x, const double* y,
                       double* out);

  double (*dot)(std::size_t n, const double* x, const double* y);

  // out[j] += sum_i x[i * n + j] for an m x n block
  void (*col_sums_acc)(std::size_t m, std::size_t n, const double* x,
                       double* out);

  // Bias-corrected Adam update of one parameter tensor, in place.
  void (*adam_update)(std::size_t n, const AdamCoefficients& coef,
                      const double* grad, double* param, double* m, double* v);
};

const KernelTable& scalar_kernels();
#if defined(LAYA_HAVE_AVX2)
const KernelTable& avx2_kernels();
const KernelTable& avx512_kernels();
#endif

bool isa_supported(Isa isa);

// Table for a specific ISA; throws std::invalid_argument when unsupported.
const KernelTable& kernels_for(Isa isa);

// The process-wide active table.
const KernelTable& kernels();
Isa active_isa();
void set_isa(Isa isa);

std::string_view isa_name(Isa isa);
Isa parse_isa(std::string_view name);

// Restores the previous ISA on scope exit.
class ScopedIsa {
 public:
  explicit ScopedIsa(Isa isa) : previous_(active_isa()) { set_isa(isa); }
  ~ScopedIsa() { set_isa(previous_); }
  ScopedIsa(const ScopedIsa&) = delete;
  ScopedIsa& operator=(const ScopedIsa&) = delete;

 private:
  Isa previous_;
};

}  // namespace laya::simd
