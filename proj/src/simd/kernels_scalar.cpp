#include <cmath>

#include "imagine/simd/kernels.hpp"

namespace imagine::simd {

namespace {

void gemm_scalar(const GemmArgs& g) {
  const bool ta = g.trans_a == Transpose::Yes;
  const bool tb = g.trans_b == Transpose::Yes;
  auto a_at = [&](std::size_t i, std::size_t p) { return ta ? g.a[p * g.lda + i] : g.a[i * g.lda + p]; };

  for (std::size_t i = 0; i < g.m; ++i) {
    float* c_row = g.c + i * g.ldc;
    if (!g.accumulate) {
      for (std::size_t j = 0; j < g.n; ++j) c_row[j] = 0.0F;
    }
    if (tb) {
      // B stored n x k: each output is a dot product of contiguous rows.
      for (std::size_t j = 0; j < g.n; ++j) {
        const float* b_row = g.b + j * g.ldb;
        float acc = 0.0F;
        for (std::size_t p = 0; p < g.k; ++p) acc += a_at(i, p) * b_row[p];
        c_row[j] += acc;
      }
    } else {
      for (std::size_t p = 0; p < g.k; ++p) {
        const float a = a_at(i, p);
        const float* b_row = g.b + p * g.ldb;
        for (std::size_t j = 0; j < g.n; ++j) c_row[j] += a * b_row[j];
      }
    }
  }
}

void add_row_bias_scalar(float* c, std::size_t rows, std::size_t cols, const float* bias) {
  for (std::size_t r = 0; r < rows; ++r) {
    float* row = c + r * cols;
    for (std::size_t j = 0; j < cols; ++j) row[j] += bias[j];
  }
}

void column_sums_scalar(const float* x, std::size_t rows, std::size_t cols, float* out, bool accumulate) {
  if (!accumulate) {
    for (std::size_t j = 0; j < cols; ++j) out[j] = 0.0F;
  }
  for (std::size_t r = 0; r < rows; ++r) {
    const float* row = x + r * cols;
    for (std::size_t j = 0; j < cols; ++j) out[j] += row[j];
  }
}

void relu_scalar(float* x, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) x[i] = x[i] > 0.0F ? x[i] : 0.0F;
}

void relu_backward_scalar(float* grad, const float* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) grad[i] = out[i] > 0.0F ? grad[i] : 0.0F;
}

void multiply_scalar(float* x, const float* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) x[i] *= y[i];
}

void adam_update_scalar(float* param, float* m, float* v, const float* grad, std::size_t n,
                        const AdamCoefficients& c) {
  const float one_minus_b1 = 1.0F - c.beta1;
  const float one_minus_b2 = 1.0F - c.beta2;
  for (std::size_t i = 0; i < n; ++i) {
    const float g = grad[i];
    m[i] = c.beta1 * m[i] + one_minus_b1 * g;
    v[i] = c.beta2 * v[i] + one_minus_b2 * (g * g);
    const float m_hat = m[i] / c.bias_correction1;
    const float v_hat = v[i] / c.bias_correction2;
    param[i] -= c.learning_rate * m_hat / (std::sqrt(v_hat) + c.epsilon);
  }
}

}  // namespace

const KernelTable& scalar_kernels() {
  static const KernelTable table{
      Isa::Scalar,         "scalar",        gemm_scalar,     add_row_bias_scalar, column_sums_scalar,
      relu_scalar,         relu_backward_scalar, multiply_scalar, adam_update_scalar,
  };
  return table;
}

}  // namespace imagine::simd
