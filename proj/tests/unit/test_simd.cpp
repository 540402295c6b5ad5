#include <doctest.h>

#include <cmath>
#include <vector>

#include "imagine/core/rng.hpp"
#include "imagine/simd/kernels.hpp"

using namespace imagine;
using simd::GemmArgs;
using simd::Transpose;

namespace {

std::vector<float> random_vector(Rng& rng, std::size_t n) {
  std::vector<float> v(n);
  for (float& x : v) x = rng.uniform(-1.0F, 1.0F);
  return v;
}

// Straight triple loop in double.
std::vector<double> naive_gemm(const GemmArgs& g) {
  std::vector<double> c(g.m * g.n);
  for (std::size_t i = 0; i < g.m; ++i) {
    for (std::size_t j = 0; j < g.n; ++j) {
      double s = g.accumulate ? g.c[i * g.ldc + j] : 0.0;
      for (std::size_t p = 0; p < g.k; ++p) {
        const double a = g.trans_a == Transpose::Yes ? g.a[p * g.lda + i] : g.a[i * g.lda + p];
        const double b = g.trans_b == Transpose::Yes ? g.b[j * g.ldb + p] : g.b[p * g.ldb + j];
        s += a * b;
      }
      c[i * g.n + j] = s;
    }
  }
  return c;
}

std::vector<const simd::KernelTable*> available_tables() {
  std::vector<const simd::KernelTable*> out{&simd::scalar_kernels()};
  if (auto t = simd::kernels_for(simd::Isa::Avx2)) out.push_back(*t);
  return out;
}

}  // namespace

TEST_CASE("gemm variants agree with a naive reference on awkward shapes") {
  Rng rng(11);
  const std::size_t ms[] = {1, 2, 4, 5, 6, 7, 13, 97};
  const std::size_t ns[] = {1, 3, 8, 16, 17, 33};
  const std::size_t ks[] = {1, 7, 64, 257, 300};
  for (const auto* table : available_tables()) {
    CAPTURE(table->name);
    for (std::size_t m : ms) {
      for (std::size_t n : ns) {
        for (std::size_t k : ks) {
          for (int mode = 0; mode < 8; ++mode) {
            GemmArgs g;
            g.trans_a = (mode & 1) ? Transpose::Yes : Transpose::No;
            g.trans_b = (mode & 2) ? Transpose::Yes : Transpose::No;
            g.accumulate = (mode & 4) != 0;
            g.m = m;
            g.n = n;
            g.k = k;
            g.lda = g.trans_a == Transpose::Yes ? m + 1 : k + 2;
            g.ldb = g.trans_b == Transpose::Yes ? k + 3 : n + 1;
            g.ldc = n + 2;
            const auto a = random_vector(rng, (g.trans_a == Transpose::Yes ? k : m) * g.lda);
            const auto b = random_vector(rng, (g.trans_b == Transpose::Yes ? n : k) * g.ldb);
            auto c = random_vector(rng, m * g.ldc);
            g.a = a.data();
            g.b = b.data();
            g.c = c.data();
            const auto expected = naive_gemm(g);
            const auto padding = c;
            table->gemm(g);
            const double tol = 1e-5 * std::sqrt(static_cast<double>(k)) * 4.0;
            for (std::size_t i = 0; i < m; ++i) {
              for (std::size_t j = 0; j < n; ++j) {
                REQUIRE(std::abs(c[i * g.ldc + j] - expected[i * n + j]) <= tol);
              }
              for (std::size_t j = n; j < g.ldc; ++j) REQUIRE(c[i * g.ldc + j] == padding[i * g.ldc + j]);
            }
          }
        }
      }
    }
  }
}

TEST_CASE("elementwise kernels are equivalent across ISAs") {
  const auto tables = available_tables();
  if (tables.size() < 2) return;
  const auto& s = *tables[0];
  const auto& v = *tables[1];
  Rng rng(5);
  for (std::size_t n : {1UL, 7UL, 8UL, 9UL, 31UL, 1000UL}) {
    const auto x = random_vector(rng, n);
    auto xs = x;
    auto xv = x;
    s.relu(xs.data(), n);
    v.relu(xv.data(), n);
    CHECK(xs == xv);

    const auto g = random_vector(rng, n);
    auto gs = g;
    auto gv = g;
    s.relu_backward(gs.data(), x.data(), n);
    v.relu_backward(gv.data(), x.data(), n);
    CHECK(gs == gv);

    auto ms = x;
    auto mv = x;
    s.multiply(ms.data(), g.data(), n);
    v.multiply(mv.data(), g.data(), n);
    CHECK(ms == mv);

    const std::size_t rows = 3;
    const auto bias = random_vector(rng, n);
    auto cs = random_vector(rng, rows * n);
    auto cv = cs;
    s.add_row_bias(cs.data(), rows, n, bias.data());
    v.add_row_bias(cv.data(), rows, n, bias.data());
    CHECK(cs == cv);

    std::vector<float> sum_s(n, 1.0F);
    std::vector<float> sum_v(n, 1.0F);
    s.column_sums(cs.data(), rows, n, sum_s.data(), true);
    v.column_sums(cs.data(), rows, n, sum_v.data(), true);
    for (std::size_t i = 0; i < n; ++i) CHECK(sum_s[i] == doctest::Approx(sum_v[i]).epsilon(1e-6));

    const simd::AdamCoefficients coeff{1e-3F, 0.9F, 0.999F, 1e-8F, 0.1F, 0.001F};
    auto ps = x;
    auto pv = x;
    std::vector<float> m1(n, 0.0F), v1(n, 0.0F), m2(n, 0.0F), v2(n, 0.0F);
    s.adam_update(ps.data(), m1.data(), v1.data(), g.data(), n, coeff);
    v.adam_update(pv.data(), m2.data(), v2.data(), g.data(), n, coeff);
    for (std::size_t i = 0; i < n; ++i) {
      CHECK(ps[i] == doctest::Approx(pv[i]).epsilon(1e-6));
      CHECK(m1[i] == doctest::Approx(m2[i]).epsilon(1e-6));
      CHECK(v1[i] == doctest::Approx(v2[i]).epsilon(1e-6));
    }
  }
}

TEST_CASE("the active ISA can be forced and restored") {
  const auto original = simd::active_kernels().isa;
  simd::set_active_isa(simd::Isa::Scalar);
  CHECK(simd::active_kernels().isa == simd::Isa::Scalar);
  simd::set_active_isa(original);
  CHECK(simd::active_kernels().isa == original);
}
