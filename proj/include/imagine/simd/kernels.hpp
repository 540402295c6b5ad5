#pragma once

// Data-parallel inner loops of the dense network toolkit. Each kernel has a
// scalar reference implementation and, on x86-64, an AVX2/FMA variant; the
// active table is chosen once at runtime from CPUID (overridable through the
// IMAGINE_RL_ISA environment variable or set_active_isa()).

#include <cstddef>
#include <optional>
#include <string_view>

namespace imagine::simd {

enum class Isa { Scalar, Avx2 };

enum class Transpose : bool { No = false, Yes = true };

// Row-major C[m x n] = op(A)[m x k] * op(B)[k x n] (+ C when accumulate).
// op(A) = A stored m x k (lda >= k) or, with Transpose::Yes, A stored k x m.
struct GemmArgs {
  Transpose trans_a = Transpose::No;
  Transpose trans_b = Transpose::No;
  std::size_t m = 0, n = 0, k = 0;
  const float* a = nullptr;
  std::size_t lda = 0;
  const float* b = nullptr;
  std::size_t ldb = 0;
  float* c = nullptr;
  std::size_t ldc = 0;
  bool accumulate = false;
};

struct AdamCoefficients {
  float learning_rate;
  float beta1;
  float beta2;
  float epsilon;
  float bias_correction1;  // 1 - beta1^t
  float bias_correction2;  // 1 - beta2^t
};

struct KernelTable {
  Isa isa;
  std::string_view name;
  void (*gemm)(const GemmArgs& args);
  // c[r, :] += bias for every row r.
  void (*add_row_bias)(float* c, std::size_t rows, std::size_t cols, const float* bias);
  // out[j] (+)= sum_r x[r, j]
  void (*column_sums)(const float* x, std::size_t rows, std::size_t cols, float* out, bool accumulate);
  void (*relu)(float* x, std::size_t n);
  // grad[i] = out[i] > 0 ? grad[i] : 0
  void (*relu_backward)(float* grad, const float* out, std::size_t n);
  // x[i] *= y[i]
  void (*multiply)(float* x, const float* y, std::size_t n);
  void (*adam_update)(float* param, float* m, float* v, const float* grad, std::size_t n,
                      const AdamCoefficients& coeff);
};

const KernelTable& scalar_kernels();
#if defined(IMAGINE_RL_HAVE_AVX2)
const KernelTable& avx2_kernels();
#endif

bool isa_supported(Isa isa);
// Table for `isa`, or nullopt when it is not compiled in or not supported by this CPU.
std::optional<const KernelTable*> kernels_for(Isa isa);

const KernelTable& active_kernels();
// Throws ConfigError if `isa` is unavailable.
void set_active_isa(Isa isa);
std::string_view isa_name(Isa isa);

inline void gemm(const GemmArgs& args) { active_kernels().gemm(args); }

}  // namespace imagine::simd
