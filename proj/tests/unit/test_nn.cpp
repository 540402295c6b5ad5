#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "imagine/core/errors.hpp"
#include "imagine/nn/adam.hpp"
#include "imagine/nn/checkpoint.hpp"
#include "imagine/nn/losses.hpp"
#include "imagine/nn/network.hpp"
#include "imagine/simd/kernels.hpp"
#include "support/gradient_suite.hpp"

using namespace imagine;
using nn::Activation;
using nn::Network;
using nn::NetworkSpec;
using nn::Tensor;

namespace {

Network single_layer(std::size_t in, std::size_t out, Activation act) {
  NetworkSpec spec;
  spec.input_dim = in;
  spec.heads.push_back({out, act, 0.0F, nn::Init::Zero});
  Rng rng(0);
  return Network(spec, rng);
}

}  // namespace

TEST_CASE("tensor shape bookkeeping") {
  Tensor t({2, 3}, 1.5F);
  CHECK(t.rows() == 2);
  CHECK(t.cols() == 3);
  CHECK(t.size() == 6);
  t.at(1, 2) = 4.0F;
  CHECK(t.row(1)[2] == 4.0F);
  const Tensor v({5});
  CHECK(v.rows() == 1);
  CHECK(v.cols() == 5);
  CHECK_THROWS_AS(Tensor({2, 2}, std::vector<float>(3)), ConfigError);
  CHECK(t.all_finite());
  t[0] = NAN;
  CHECK_FALSE(t.all_finite());
}

TEST_CASE("identity linear layer passes its input through") {
  Network net = single_layer(3, 3, Activation::Linear);
  for (std::size_t i = 0; i < 3; ++i) net.heads()[0].weight().at(i, i) = 1.0F;
  const auto out = net.predict(Tensor::row_vector(std::vector<float>{1, 2, 3}));
  CHECK(out[0].values()[0] == 1.0F);
  CHECK(out[0].values()[1] == 2.0F);
  CHECK(out[0].values()[2] == 3.0F);
}

TEST_CASE("activation definitions") {
  Tensor relu = Tensor::row_vector(std::vector<float>{-1, 0, 2});
  nn::apply_activation(Activation::Relu, relu);
  CHECK(relu[0] == 0.0F);
  CHECK(relu[1] == 0.0F);
  CHECK(relu[2] == 2.0F);
  Tensor soft = Tensor::row_vector(std::vector<float>{0, 0});
  nn::apply_activation(Activation::Softmax, soft);
  CHECK(soft[0] == doctest::Approx(0.5));
  CHECK(soft[1] == doctest::Approx(0.5));
}

TEST_CASE("softmax rows are positive and sum to one") {
  Rng rng(3);
  Tensor x = gradsuite::random_matrix(rng, 50, 7, -30.0F, 30.0F);
  nn::apply_activation(Activation::Softmax, x);
  for (std::size_t r = 0; r < x.rows(); ++r) {
    double s = 0.0;
    for (float v : x.row(r)) {
      CHECK(v > 0.0F);
      s += v;
    }
    CHECK(std::abs(s - 1.0) <= 1e-6);
  }
}

TEST_CASE("shape mismatches are configuration errors") {
  Network net = single_layer(3, 2, Activation::Linear);
  CHECK_THROWS_AS(net.predict(Tensor::matrix(1, 4)), ConfigError);
  CHECK_THROWS_AS(net.forward(Tensor::matrix(2, 2), false, nullptr), ConfigError);
}

TEST_CASE("backward requires a recorded forward pass") {
  Network net = single_layer(2, 1, Activation::Linear);
  const std::vector<Tensor> g{Tensor::matrix(1, 1, 1.0F)};
  CHECK_THROWS_AS(net.backward(g), UsageError);
  net.forward(Tensor::matrix(1, 2), true, nullptr);
  CHECK_NOTHROW(net.backward(g));
  CHECK_THROWS_AS(net.backward(g), UsageError);
}

TEST_CASE("scalar linear derivative") {
  Network net = single_layer(1, 1, Activation::Linear);
  net.heads()[0].weight()[0] = 3.0F;
  net.zero_grad();
  net.forward(Tensor::row_vector(std::vector<float>{2.0F}), true, nullptr);
  const std::vector<Tensor> g{Tensor::matrix(1, 1, 1.0F)};
  const Tensor dx = net.backward(g);
  CHECK(net.heads()[0].weight_grad()[0] == doctest::Approx(2.0));
  CHECK(net.heads()[0].bias_grad()[0] == doctest::Approx(1.0));
  CHECK(dx[0] == doctest::Approx(3.0));
}

TEST_CASE("a head with no loss contributes zero gradient") {
  NetworkSpec spec;
  spec.input_dim = 3;
  spec.trunk.push_back({4, Activation::Relu});
  spec.heads.push_back({2, Activation::Linear});
  spec.heads.push_back({2, Activation::Linear});
  Rng rng(1);
  Network net(spec, rng);
  net.zero_grad();
  net.forward(Tensor::matrix(2, 3, 0.5F), true, nullptr);
  const std::vector<Tensor> g{Tensor::matrix(2, 2, 1.0F), Tensor{}};
  net.backward(g, false);
  for (float v : net.heads()[1].weight_grad().values()) CHECK(v == 0.0F);
  for (float v : net.heads()[1].bias_grad().values()) CHECK(v == 0.0F);
}

TEST_CASE("dropout: identity in eval mode, inverted scaling in train mode") {
  NetworkSpec spec;
  spec.input_dim = 4;
  spec.trunk.push_back({256, Activation::Relu, 0.5F});
  spec.heads.push_back({1, Activation::Linear});
  Rng init(2);
  Network net(spec, init);
  const Tensor x = Tensor::matrix(1, 4, 0.3F);
  const auto eval1 = net.forward(x, false, nullptr);
  const auto eval2 = net.predict(x);
  CHECK(eval1[0] == eval2[0]);
  CHECK_THROWS_AS(net.forward(x, true, nullptr), UsageError);

  // Mean over many dropout masks approaches the eval output.
  Rng rng(9);
  double mean = 0.0;
  const int draws = 4000;
  for (int i = 0; i < draws; ++i) mean += net.forward(x, true, &rng)[0][0];
  mean /= draws;
  CHECK(mean == doctest::Approx(eval2[0][0]).epsilon(0.05));

  Rng a(4);
  Rng b(4);
  CHECK(net.forward(x, true, &a)[0] == net.forward(x, true, &b)[0]);
}

TEST_CASE("analytic gradients match finite differences for every loss") {
  Rng rng(2024);
  for (int trial = 0; trial < 10; ++trial) {
    CHECK(gradsuite::loss_trial(gradsuite::Loss::Mse, rng).relative_error < 1e-4);
    CHECK(gradsuite::loss_trial(gradsuite::Loss::Bce, rng).relative_error < 1e-4);
    CHECK(gradsuite::loss_trial(gradsuite::Loss::Logcosh, rng).relative_error < 1e-4);
    CHECK(gradsuite::elbo_trial(rng).relative_error < 1e-4);
    CHECK(gradsuite::mdn_trial(rng).relative_error < 1e-4);
  }
}

TEST_CASE("loss values at known points") {
  const Tensor half({1, 1}, 0.5F);
  CHECK(nn::bce_loss(half, Tensor({1, 1}, 1.0F)).value == doctest::Approx(std::log(2.0)));
  CHECK(nn::bce_loss(half, Tensor({1, 1}, 0.0F)).value == doctest::Approx(std::log(2.0)));
  const Tensor exact(std::vector<std::size_t>{1, 4}, std::vector<float>{0, 1, 1, 0});
  CHECK(nn::bce_loss(exact, exact).value < 1e-6);
  CHECK(nn::bce_loss(exact, exact).saturated == 4);
  CHECK(nn::logcosh(0.0) == 0.0);
  for (double x : {-0.1, -0.05, 0.01, 0.07, 0.1}) CHECK(std::abs(nn::logcosh(x) - x * x / 2.0) < 1e-4);
  CHECK(nn::logcosh(800.0) == doctest::Approx(800.0 - std::log(2.0)));
  const auto masked = nn::masked_mse_loss(Tensor(std::vector<std::size_t>{2, 3}, std::vector<float>{1, 2, 3, 4, 5, 6}),
                                          std::vector<int>{2, 0}, std::vector<float>{1, 4});
  CHECK(masked.value == doctest::Approx(2.0));  // ((3-1)^2 + 0) / 2
  CHECK(masked.grad[0] == 0.0F);
  CHECK(masked.grad[2] == doctest::Approx(2.0));
  CHECK(masked.grad[3] == 0.0F);
}

TEST_CASE("Adam: zero gradient leaves everything unchanged") {
  Tensor w({3}, 0.7F);
  Tensor g({3});
  nn::Adam adam({{"w", &w, &g}});
  adam.step();
  CHECK(w == Tensor({3}, 0.7F));
  CHECK(adam.state().first_moment[0] == Tensor({3}));
  CHECK(adam.state().second_moment[0] == Tensor({3}));
  CHECK(adam.state().step == 1);
}

TEST_CASE("Adam: first bias-corrected step has magnitude lr") {
  Tensor w({1}, 0.0F);
  Tensor g({1}, 1.0F);
  nn::Adam adam({{"w", &w, &g}}, nn::AdamConfig{1e-3F});
  adam.step();
  // m_hat = v_hat = 1, so the step is lr / (1 + eps).
  CHECK(w[0] == doctest::Approx(-1e-3).epsilon(1e-5));
  for (int i = 0; i < 999; ++i) adam.step();
  const float before = w[0];
  adam.step();
  CHECK(before - w[0] == doctest::Approx(1e-3).epsilon(1e-3));
  CHECK(adam.state().step == 1001);
}

TEST_CASE("Adam refuses non-finite gradients without modifying state") {
  Tensor w({2}, 1.0F);
  Tensor g({2}, 1.0F);
  nn::Adam adam({{"w", &w, &g}});
  g[1] = INFINITY;
  CHECK_THROWS_AS(adam.step(), NumericError);
  CHECK(w == Tensor({2}, 1.0F));
  CHECK(adam.state().step == 0);
}

TEST_CASE("checkpoint round trip is bit exact") {
  NetworkSpec spec;
  spec.input_dim = 5;
  spec.trunk.push_back({7, Activation::Relu});
  spec.heads.push_back({3, Activation::Softmax, 0.0F, nn::Init::Auto, "policy"});
  Rng rng(12);
  Network a(spec, rng);
  Network b(spec, rng);
  CHECK(nn::parameter_fingerprint(a) != nn::parameter_fingerprint(b));
  const auto path = std::filesystem::temp_directory_path() / "imagine_nn_roundtrip.nnck";
  nn::write_checkpoint(path, a.export_parameters("net."));
  b.import_parameters(nn::to_map(nn::read_checkpoint(path)), "net.");
  CHECK(nn::parameter_fingerprint(a) == nn::parameter_fingerprint(b));
  const auto bytes = nn::encode_checkpoint(a.export_parameters());
  CHECK(nn::encode_checkpoint(nn::decode_checkpoint(bytes)) == bytes);
  std::filesystem::remove(path);

  auto truncated = bytes;
  truncated.resize(truncated.size() - 3);
  CHECK_THROWS_AS(nn::decode_checkpoint(truncated), IoError);
  Network c(NetworkSpec{6, spec.trunk, spec.heads}, rng);
  CHECK_THROWS_AS(c.import_parameters(nn::to_map(nn::decode_checkpoint(bytes))), ConfigError);
}

TEST_CASE("network outputs agree across kernel sets") {
  if (!simd::isa_supported(simd::Isa::Avx2)) return;
  NetworkSpec spec;
  spec.input_dim = 37;
  spec.trunk.push_back({129, Activation::Relu});
  spec.trunk.push_back({64, Activation::Relu});
  spec.heads.push_back({6, Activation::Linear});
  Rng rng(8);
  Network net(spec, rng);
  const Tensor x = gradsuite::random_matrix(rng, 70, 37, -1.0F, 1.0F);
  const auto original = simd::active_kernels().isa;
  simd::set_active_isa(simd::Isa::Scalar);
  const auto s = net.predict(x);
  simd::set_active_isa(simd::Isa::Avx2);
  const auto v = net.predict(x);
  simd::set_active_isa(original);
  for (std::size_t i = 0; i < s[0].size(); ++i) CHECK(s[0][i] == doctest::Approx(v[0][i]).epsilon(1e-4));
}
