// AVX2/FMA variants of the kernels in kernels_scalar.cpp. This translation unit
// is the only one compiled with -mavx2 -mfma; nothing here may run unless
// dispatch has confirmed CPU support.

#include <immintrin.h>

#include <algorithm>
#include <vector>

#include "imagine/simd/kernels.hpp"

namespace imagine::simd {

namespace {

constexpr std::size_t kMr = 6;
constexpr std::size_t kNr = 16;
constexpr std::size_t kKc = 256;
constexpr std::size_t kMc = 96;
constexpr std::size_t kNc = 2048;
// Below this many rows the packed path costs more than it saves.
constexpr std::size_t kDirectMaxRows = 4;

inline float hsum(__m256 v) {
  __m128 lo = _mm256_castps256_ps128(v);
  __m128 hi = _mm256_extractf128_ps(v, 1);
  lo = _mm_add_ps(lo, hi);
  __m128 shuf = _mm_movehdup_ps(lo);
  __m128 sums = _mm_add_ps(lo, shuf);
  shuf = _mm_movehl_ps(shuf, sums);
  sums = _mm_add_ss(sums, shuf);
  return _mm_cvtss_f32(sums);
}

inline float a_at(const GemmArgs& g, std::size_t i, std::size_t p) {
  return g.trans_a == Transpose::Yes ? g.a[p * g.lda + i] : g.a[i * g.lda + p];
}

inline float b_at(const GemmArgs& g, std::size_t p, std::size_t j) {
  return g.trans_b == Transpose::Yes ? g.b[j * g.ldb + p] : g.b[p * g.ldb + j];
}

void pack_a(const GemmArgs& g, std::size_t i0, std::size_t mc, std::size_t p0, std::size_t kc, float* dst) {
  for (std::size_t ip = 0; ip < mc; ip += kMr) {
    const std::size_t mr = std::min(kMr, mc - ip);
    if (g.trans_a == Transpose::No) {
      for (std::size_t ii = 0; ii < mr; ++ii) {
        const float* src = g.a + (i0 + ip + ii) * g.lda + p0;
        for (std::size_t p = 0; p < kc; ++p) dst[p * kMr + ii] = src[p];
      }
    } else {
      for (std::size_t p = 0; p < kc; ++p) {
        const float* src = g.a + (p0 + p) * g.lda + i0 + ip;
        for (std::size_t ii = 0; ii < mr; ++ii) dst[p * kMr + ii] = src[ii];
      }
    }
    for (std::size_t ii = mr; ii < kMr; ++ii) {
      for (std::size_t p = 0; p < kc; ++p) dst[p * kMr + ii] = 0.0F;
    }
    dst += kc * kMr;
  }
}

void pack_b(const GemmArgs& g, std::size_t p0, std::size_t kc, std::size_t j0, std::size_t nc, float* dst) {
  for (std::size_t jp = 0; jp < nc; jp += kNr) {
    const std::size_t nr = std::min(kNr, nc - jp);
    if (g.trans_b == Transpose::No) {
      for (std::size_t p = 0; p < kc; ++p) {
        const float* src = g.b + (p0 + p) * g.ldb + j0 + jp;
        float* out = dst + p * kNr;
        if (nr == kNr) {
          _mm256_storeu_ps(out, _mm256_loadu_ps(src));
          _mm256_storeu_ps(out + 8, _mm256_loadu_ps(src + 8));
        } else {
          std::size_t jj = 0;
          for (; jj < nr; ++jj) out[jj] = src[jj];
          for (; jj < kNr; ++jj) out[jj] = 0.0F;
        }
      }
    } else {
      for (std::size_t jj = 0; jj < nr; ++jj) {
        const float* src = g.b + (j0 + jp + jj) * g.ldb + p0;
        for (std::size_t p = 0; p < kc; ++p) dst[p * kNr + jj] = src[p];
      }
      for (std::size_t jj = nr; jj < kNr; ++jj) {
        for (std::size_t p = 0; p < kc; ++p) dst[p * kNr + jj] = 0.0F;
      }
    }
    dst += kc * kNr;
  }
}

// 6x16 register tile: C[0:mr, 0:nr] (+)= Ap(6 x kc) * Bp(kc x 16).
void micro_kernel(std::size_t kc, const float* ap, const float* bp, float* c, std::size_t ldc, std::size_t mr,
                  std::size_t nr, bool overwrite) {
  __m256 c00 = _mm256_setzero_ps(), c01 = _mm256_setzero_ps();
  __m256 c10 = _mm256_setzero_ps(), c11 = _mm256_setzero_ps();
  __m256 c20 = _mm256_setzero_ps(), c21 = _mm256_setzero_ps();
  __m256 c30 = _mm256_setzero_ps(), c31 = _mm256_setzero_ps();
  __m256 c40 = _mm256_setzero_ps(), c41 = _mm256_setzero_ps();
  __m256 c50 = _mm256_setzero_ps(), c51 = _mm256_setzero_ps();
  for (std::size_t p = 0; p < kc; ++p) {
    const __m256 b0 = _mm256_loadu_ps(bp);
    const __m256 b1 = _mm256_loadu_ps(bp + 8);
    __m256 a = _mm256_broadcast_ss(ap + 0);
    c00 = _mm256_fmadd_ps(a, b0, c00);
    c01 = _mm256_fmadd_ps(a, b1, c01);
    a = _mm256_broadcast_ss(ap + 1);
    c10 = _mm256_fmadd_ps(a, b0, c10);
    c11 = _mm256_fmadd_ps(a, b1, c11);
    a = _mm256_broadcast_ss(ap + 2);
    c20 = _mm256_fmadd_ps(a, b0, c20);
    c21 = _mm256_fmadd_ps(a, b1, c21);
    a = _mm256_broadcast_ss(ap + 3);
    c30 = _mm256_fmadd_ps(a, b0, c30);
    c31 = _mm256_fmadd_ps(a, b1, c31);
    a = _mm256_broadcast_ss(ap + 4);
    c40 = _mm256_fmadd_ps(a, b0, c40);
    c41 = _mm256_fmadd_ps(a, b1, c41);
    a = _mm256_broadcast_ss(ap + 5);
    c50 = _mm256_fmadd_ps(a, b0, c50);
    c51 = _mm256_fmadd_ps(a, b1, c51);
    ap += kMr;
    bp += kNr;
  }
  const __m256 acc[kMr][2] = {{c00, c01}, {c10, c11}, {c20, c21}, {c30, c31}, {c40, c41}, {c50, c51}};
  if (mr == kMr && nr == kNr) {
    for (std::size_t i = 0; i < kMr; ++i) {
      float* row = c + i * ldc;
      if (overwrite) {
        _mm256_storeu_ps(row, acc[i][0]);
        _mm256_storeu_ps(row + 8, acc[i][1]);
      } else {
        _mm256_storeu_ps(row, _mm256_add_ps(_mm256_loadu_ps(row), acc[i][0]));
        _mm256_storeu_ps(row + 8, _mm256_add_ps(_mm256_loadu_ps(row + 8), acc[i][1]));
      }
    }
    return;
  }
  alignas(32) float tile[kMr][kNr];
  for (std::size_t i = 0; i < kMr; ++i) {
    _mm256_store_ps(tile[i], acc[i][0]);
    _mm256_store_ps(tile[i] + 8, acc[i][1]);
  }
  for (std::size_t i = 0; i < mr; ++i) {
    float* row = c + i * ldc;
    for (std::size_t j = 0; j < nr; ++j) row[j] = overwrite ? tile[i][j] : row[j] + tile[i][j];
  }
}

// Few-row products (matrix-vector style): skip packing and stream B once.
void gemm_direct(const GemmArgs& g) {
  const std::size_t m = g.m, n = g.n, k = g.k;
  thread_local std::vector<float> a_rows;
  a_rows.resize(m * k);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t p = 0; p < k; ++p) a_rows[i * k + p] = a_at(g, i, p);
  }
  if (!g.accumulate) {
    for (std::size_t i = 0; i < m; ++i) std::fill_n(g.c + i * g.ldc, n, 0.0F);
  }
  if (g.trans_b == Transpose::Yes) {
    for (std::size_t j = 0; j < n; ++j) {
      const float* b_row = g.b + j * g.ldb;
      __m256 acc[kDirectMaxRows];
      for (auto& x : acc) x = _mm256_setzero_ps();
      std::size_t p = 0;
      for (; p + 8 <= k; p += 8) {
        const __m256 bv = _mm256_loadu_ps(b_row + p);
        for (std::size_t i = 0; i < m; ++i) acc[i] = _mm256_fmadd_ps(_mm256_loadu_ps(&a_rows[i * k + p]), bv, acc[i]);
      }
      for (std::size_t i = 0; i < m; ++i) {
        float s = hsum(acc[i]);
        for (std::size_t q = p; q < k; ++q) s += a_rows[i * k + q] * b_row[q];
        g.c[i * g.ldc + j] += s;
      }
    }
    return;
  }
  for (std::size_t p = 0; p < k; ++p) {
    const float* b_row = g.b + p * g.ldb;
    for (std::size_t i = 0; i < m; ++i) {
      const float a = a_rows[i * k + p];
      if (a == 0.0F) continue;
      const __m256 av = _mm256_set1_ps(a);
      float* c_row = g.c + i * g.ldc;
      std::size_t j = 0;
      for (; j + 8 <= n; j += 8) {
        _mm256_storeu_ps(c_row + j, _mm256_fmadd_ps(av, _mm256_loadu_ps(b_row + j), _mm256_loadu_ps(c_row + j)));
      }
      for (; j < n; ++j) c_row[j] += a * b_row[j];
    }
  }
}

void gemm_avx2(const GemmArgs& g) {
  if (g.m == 0 || g.n == 0) return;
  if (g.k == 0) {
    if (!g.accumulate) {
      for (std::size_t i = 0; i < g.m; ++i) std::fill_n(g.c + i * g.ldc, g.n, 0.0F);
    }
    return;
  }
  if (g.m <= kDirectMaxRows) {
    gemm_direct(g);
    return;
  }
  thread_local std::vector<float> a_pack;
  thread_local std::vector<float> b_pack;
  a_pack.resize(kMc * kKc);
  b_pack.resize(kKc * (kNc + kNr));

  for (std::size_t jc = 0; jc < g.n; jc += kNc) {
    const std::size_t nc = std::min(kNc, g.n - jc);
    for (std::size_t pc = 0; pc < g.k; pc += kKc) {
      const std::size_t kc = std::min(kKc, g.k - pc);
      const bool overwrite = !g.accumulate && pc == 0;
      pack_b(g, pc, kc, jc, nc, b_pack.data());
      for (std::size_t ic = 0; ic < g.m; ic += kMc) {
        const std::size_t mc = std::min(kMc, g.m - ic);
        pack_a(g, ic, mc, pc, kc, a_pack.data());
        for (std::size_t jr = 0; jr < nc; jr += kNr) {
          const std::size_t nr = std::min(kNr, nc - jr);
          const float* bp = b_pack.data() + (jr / kNr) * kc * kNr;
          for (std::size_t ir = 0; ir < mc; ir += kMr) {
            const std::size_t mr = std::min(kMr, mc - ir);
            const float* ap = a_pack.data() + (ir / kMr) * kc * kMr;
            micro_kernel(kc, ap, bp, g.c + (ic + ir) * g.ldc + jc + jr, g.ldc, mr, nr, overwrite);
          }
        }
      }
    }
  }
}

void add_row_bias_avx2(float* c, std::size_t rows, std::size_t cols, const float* bias) {
  for (std::size_t r = 0; r < rows; ++r) {
    float* row = c + r * cols;
    std::size_t j = 0;
    for (; j + 8 <= cols; j += 8) {
      _mm256_storeu_ps(row + j, _mm256_add_ps(_mm256_loadu_ps(row + j), _mm256_loadu_ps(bias + j)));
    }
    for (; j < cols; ++j) row[j] += bias[j];
  }
}

void column_sums_avx2(const float* x, std::size_t rows, std::size_t cols, float* out, bool accumulate) {
  if (!accumulate) std::fill_n(out, cols, 0.0F);
  for (std::size_t r = 0; r < rows; ++r) {
    const float* row = x + r * cols;
    std::size_t j = 0;
    for (; j + 8 <= cols; j += 8) {
      _mm256_storeu_ps(out + j, _mm256_add_ps(_mm256_loadu_ps(out + j), _mm256_loadu_ps(row + j)));
    }
    for (; j < cols; ++j) out[j] += row[j];
  }
}

void relu_avx2(float* x, std::size_t n) {
  const __m256 zero = _mm256_setzero_ps();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    // maxps returns the second operand for NaN, matching the scalar path (NaN -> 0).
    _mm256_storeu_ps(x + i, _mm256_max_ps(_mm256_loadu_ps(x + i), zero));
  }
  for (; i < n; ++i) x[i] = x[i] > 0.0F ? x[i] : 0.0F;
}

void relu_backward_avx2(float* grad, const float* out, std::size_t n) {
  const __m256 zero = _mm256_setzero_ps();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    const __m256 mask = _mm256_cmp_ps(_mm256_loadu_ps(out + i), zero, _CMP_GT_OQ);
    _mm256_storeu_ps(grad + i, _mm256_and_ps(_mm256_loadu_ps(grad + i), mask));
  }
  for (; i < n; ++i) grad[i] = out[i] > 0.0F ? grad[i] : 0.0F;
}

void multiply_avx2(float* x, const float* y, std::size_t n) {
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    _mm256_storeu_ps(x + i, _mm256_mul_ps(_mm256_loadu_ps(x + i), _mm256_loadu_ps(y + i)));
  }
  for (; i < n; ++i) x[i] *= y[i];
}

void adam_update_avx2(float* param, float* m, float* v, const float* grad, std::size_t n, const AdamCoefficients& c) {
  const __m256 b1 = _mm256_set1_ps(c.beta1);
  const __m256 b2 = _mm256_set1_ps(c.beta2);
  const __m256 omb1 = _mm256_set1_ps(1.0F - c.beta1);
  const __m256 omb2 = _mm256_set1_ps(1.0F - c.beta2);
  const __m256 bc1 = _mm256_set1_ps(c.bias_correction1);
  const __m256 bc2 = _mm256_set1_ps(c.bias_correction2);
  const __m256 lr = _mm256_set1_ps(c.learning_rate);
  const __m256 eps = _mm256_set1_ps(c.epsilon);
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    const __m256 g = _mm256_loadu_ps(grad + i);
    const __m256 mi = _mm256_add_ps(_mm256_mul_ps(b1, _mm256_loadu_ps(m + i)), _mm256_mul_ps(omb1, g));
    const __m256 vi =
        _mm256_add_ps(_mm256_mul_ps(b2, _mm256_loadu_ps(v + i)), _mm256_mul_ps(omb2, _mm256_mul_ps(g, g)));
    _mm256_storeu_ps(m + i, mi);
    _mm256_storeu_ps(v + i, vi);
    const __m256 m_hat = _mm256_div_ps(mi, bc1);
    const __m256 v_hat = _mm256_div_ps(vi, bc2);
    const __m256 step = _mm256_div_ps(_mm256_mul_ps(lr, m_hat), _mm256_add_ps(_mm256_sqrt_ps(v_hat), eps));
    _mm256_storeu_ps(param + i, _mm256_sub_ps(_mm256_loadu_ps(param + i), step));
  }
  if (i < n) scalar_kernels().adam_update(param + i, m + i, v + i, grad + i, n - i, c);
}

}  // namespace

const KernelTable& avx2_kernels() {
  static const KernelTable table{
      Isa::Avx2,        "avx2",        gemm_avx2,          add_row_bias_avx2, column_sums_avx2,
      relu_avx2,        relu_backward_avx2, multiply_avx2, adam_update_avx2,
  };
  return table;
}

}  // namespace imagine::simd
