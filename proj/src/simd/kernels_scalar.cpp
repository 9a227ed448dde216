#include "laya/simd/kernels.hpp"

#include <cmath>
#include <cstring>

namespace laya::simd {
namespace {

void gemm_scalar(bool trans_a, bool trans_b, std::size_t m, std::size_t n,
                 std::size_t k, const double* a, std::size_t lda,
                 const double* b, std::size_t ldb, double* c, std::size_t ldc,
                 bool accumulate) {
  if (!accumulate) {
    for (std::size_t i = 0; i < m; ++i) std::memset(c + i * ldc, 0, n * sizeof(double));
  }
  for (std::size_t i = 0; i < m; ++i) {
    double* crow = c + i * ldc;
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = trans_a ? a[p * lda + i] : a[i * lda + p];
      if (trans_b) {
        for (std::size_t j = 0; j < n; ++j) crow[j] += aip * b[j * ldb + p];
      } else {
        const double* brow = b + p * ldb;
        for (std::size_t j = 0; j < n; ++j) crow[j] += aip * brow[j];
      }
    }
  }
}

void axpy_scalar(std::size_t n, double alpha, const double* x, double* y) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void hadamard_acc_scalar(std::size_t n, const double* x, const double* y,
                         double* out) {
  for (std::size_t i = 0; i < n; ++i) out[i] += x[i] * y[i];
}

double dot_scalar(std::size_t n, const double* x, const double* y) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += x[i] * y[i];
  return s;
}

void col_sums_acc_scalar(std::size_t m, std::size_t n, const double* x,
                         double* out) {
  for (std::size_t i = 0; i < m; ++i) {
    const double* row = x + i * n;
    for (std::size_t j = 0; j < n; ++j) out[j] += row[j];
  }
}

void adam_update_scalar(std::size_t n, const AdamCoefficients& coef,
                        const double* grad, double* param, double* m,
                        double* v) {
  for (std::size_t i = 0; i < n; ++i) {
    const double g = grad[i];
    m[i] = coef.beta1 * m[i] + (1.0 - coef.beta1) * g;
    v[i] = coef.beta2 * v[i] + (1.0 - coef.beta2) * g * g;
    const double m_hat = m[i] / coef.bias_correction1;
    const double v_hat = v[i] / coef.bias_correction2;
    param[i] -= coef.lr * m_hat / (std::sqrt(v_hat) + coef.eps);
  }
}

}  // namespace

const KernelTable& scalar_kernels() {
  static const KernelTable table{Isa::scalar,         gemm_scalar,
                                 axpy_scalar,         hadamard_acc_scalar,
                                 dot_scalar,          col_sums_acc_scalar,
                                 adam_update_scalar};
  return table;
}

}  // namespace laya::simd
