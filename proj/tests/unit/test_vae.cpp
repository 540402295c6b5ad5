#include <doctest.h>

#include <cmath>

#include "imagine/core/errors.hpp"
#include "imagine/render/dataset.hpp"
#include "imagine/vae/vae.hpp"

using namespace imagine;
using nn::Tensor;
using vae::kLatentDim;

namespace {

struct Small {
  render::Dataset data;
  vae::Vae model;
  std::vector<vae::EpochStats> curve;
};

vae::VaeConfig small_config() {
  vae::VaeConfig cfg;
  cfg.architecture.hidden = {64, 32};
  cfg.batch_size = 64;
  cfg.epochs = 12;
  return cfg;
}

Small& trained() {
  static Small s = [] {
    const render::FragmentPool pool(2);
    auto data = render::build_dataset(768, 128, pool, Rng(3));
    const auto cfg = small_config();
    Rng init(4);
    vae::Vae model(cfg.architecture, init);
    Rng rng(5);
    auto curve = vae::train_vae(model, data.train, data.test, cfg, rng);
    return Small{std::move(data), std::move(model), std::move(curve)};
  }();
  return s;
}

}  // namespace

TEST_CASE("KL divergence closed form") {
  std::vector<float> mu(kLatentDim, 0.0F);
  std::vector<float> lv(kLatentDim, 0.0F);
  CHECK(vae::kl_divergence(mu, lv) == 0.0);
  mu[0] = 1.0F;
  CHECK(vae::kl_divergence(mu, lv) == doctest::Approx(0.5));
  Rng rng(1);
  for (int i = 0; i < 1000; ++i) {
    for (std::size_t j = 0; j < kLatentDim; ++j) {
      mu[j] = rng.uniform(-3.0F, 3.0F);
      lv[j] = rng.uniform(-4.0F, 4.0F);
    }
    CHECK(vae::kl_divergence(mu, lv) > 0.0);
  }
}

TEST_CASE("ELBO terms at known points") {
  const Tensor images({1, 4}, std::vector<float>{0, 1, 1, 0});
  const Tensor mu({1, kLatentDim}, 0.0F);
  const Tensor lv({1, kLatentDim}, 0.0F);
  const auto exact = vae::elbo_loss(images, images, mu, lv, 4.0F);
  CHECK(exact.terms.bce < 1e-6);
  CHECK(exact.terms.kl == 0.0);
  CHECK(exact.terms.saturated == 4);
  CHECK(exact.d_reconstruction.all_finite());

  const auto half = vae::elbo_loss(images, Tensor({1, 4}, 0.5F), mu, lv, 4.0F);
  CHECK(half.terms.bce == doctest::Approx(4.0 * std::log(2.0)));
  CHECK(half.terms.saturated == 0);

  Tensor mu1 = mu;
  mu1[0] = 1.0F;
  const auto shifted = vae::elbo_loss(images, Tensor({1, 4}, 0.5F), mu1, lv, 4.0F);
  CHECK(shifted.terms.kl == doctest::Approx(0.5));
  CHECK(shifted.terms.loss == doctest::Approx(4.0 * std::log(2.0) + 2.0));
}

TEST_CASE("zero-initialized heads give the prior and encoding is deterministic") {
  vae::VaeArchitecture arch;
  arch.hidden = {16, 8};
  arch.zero_init_heads = true;
  Rng init(7);
  const vae::Vae model(arch, init);
  Rng rng(8);
  std::vector<float> image(render::kPixels);
  for (float& v : image) v = rng.uniform();
  const auto g = model.encode(image);
  for (std::size_t j = 0; j < kLatentDim; ++j) {
    CHECK(g.mu[j] == 0.0F);
    CHECK(g.sigma[j] == 1.0F);
  }
  const auto again = model.encode(image);
  CHECK(again.mu == g.mu);
  CHECK(again.sigma == g.sigma);
  const auto a = model.decode(g.mu);
  CHECK(a == model.decode(g.mu));
  for (float v : a.pixels) {
    CHECK(v > 0.0F);
    CHECK(v < 1.0F);
  }
}

TEST_CASE("latent dimension mismatches are construction errors") {
  Rng init(1);
  vae::VaeArchitecture arch;
  arch.hidden = {8};
  vae::Vae model(arch, init);
  nn::ParameterMap params;
  for (auto& t : model.export_parameters()) params.emplace(t.name, t.tensor);
  vae::VaeArchitecture other = arch;
  other.hidden = {9};
  vae::Vae mismatched(other, init);
  CHECK_THROWS_AS(mismatched.import_parameters(params), ConfigError);
  CHECK_THROWS(model.decode_batch(Tensor({2, 7}, 0.0F)));
}

TEST_CASE("reparameterized samples have the posterior moments") {
  vae::LatentGaussian g;
  for (std::size_t j = 0; j < kLatentDim; ++j) {
    g.mu[j] = 0.5F * static_cast<float>(j) - 1.0F;
    g.sigma[j] = 0.2F + 0.3F * static_cast<float>(j);
  }
  Rng rng(13);
  const int n = 100'000;
  std::array<double, kLatentDim> sum{};
  std::array<double, kLatentDim> sq{};
  for (int i = 0; i < n; ++i) {
    const auto z = vae::sample_latent(g, rng);
    for (std::size_t j = 0; j < kLatentDim; ++j) {
      sum[j] += z[j];
      sq[j] += static_cast<double>(z[j]) * z[j];
    }
  }
  for (std::size_t j = 0; j < kLatentDim; ++j) {
    const double mean = sum[j] / n;
    const double var = sq[j] / n - mean * mean;
    CHECK(std::abs(mean - g.mu[j]) < 3.0 * g.sigma[j] / std::sqrt(static_cast<double>(n)));
    CHECK(std::abs(var / (static_cast<double>(g.sigma[j]) * g.sigma[j]) - 1.0) < 0.05);
  }
  vae::LatentGaussian tight = g;
  tight.sigma.fill(1e-10F);
  const auto z = vae::sample_latent(tight, rng);
  for (std::size_t j = 0; j < kLatentDim; ++j) CHECK(z[j] == doctest::Approx(g.mu[j]).epsilon(1e-6));
}

TEST_CASE("training lowers the ELBO below the constant predictor") {
  auto& s = trained();
  REQUIRE(s.curve.size() == 12);
  std::size_t non_increasing = 0;
  for (std::size_t i = 1; i < s.curve.size(); ++i) non_increasing += s.curve[i].train_loss <= s.curve[i - 1].train_loss;
  CHECK(static_cast<double>(non_increasing) >= 0.9 * static_cast<double>(s.curve.size() - 1));
  const double constant_bce = static_cast<double>(render::kPixels) * std::log(2.0);
  CHECK(s.curve.back().bce < constant_bce);
  CHECK(s.curve.back().kl >= 0.0);
}

TEST_CASE("training is reproducible under equal seeds") {
  auto& s = trained();
  const auto cfg = small_config();
  Rng init(4);
  vae::Vae again(cfg.architecture, init);
  Rng rng(5);
  vae::train_vae(again, s.data.train, s.data.test, cfg, rng);
  const auto a = s.model.export_parameters();
  const auto b = again.export_parameters();
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i].tensor == b[i].tensor);
}

TEST_CASE("renders of one state encode closer together than renders of different states") {
  auto& s = trained();
  const auto& test = s.data.test;
  double same = 0.0;
  double diff = 0.0;
  std::size_t n_same = 0;
  std::size_t n_diff = 0;
  std::vector<vae::LatentGaussian> enc;
  for (std::size_t i = 0; i < test.size(); ++i) enc.push_back(s.model.encode(test.image(i)));
  const render::FragmentPool pool(2);
  Rng rng(99);
  for (std::size_t i = 0; i < test.size(); ++i) {
    const auto other = s.model.encode(render::render(test.state(i), pool, rng).pixels);
    double d = 0.0;
    for (std::size_t j = 0; j < kLatentDim; ++j) d += std::pow(other.mu[j] - enc[i].mu[j], 2.0F);
    same += std::sqrt(d);
    ++n_same;
    for (std::size_t k = i + 1; k < test.size(); ++k) {
      if (test.states[k] == test.states[i]) continue;
      double e = 0.0;
      for (std::size_t j = 0; j < kLatentDim; ++j) e += std::pow(enc[k].mu[j] - enc[i].mu[j], 2.0F);
      diff += std::sqrt(e);
      ++n_diff;
    }
  }
  CHECK(same / static_cast<double>(n_same) < diff / static_cast<double>(n_diff));
}

TEST_CASE("checkpoint round trip") {
  auto& s = trained();
  const auto path = std::filesystem::temp_directory_path() / "imagine_rl_vae_test.nnck";
  s.model.save(path);
  Rng init(100);
  vae::Vae loaded(small_config().architecture, init);
  loaded.load(path);
  const auto g1 = s.model.encode(s.data.test.image(0));
  const auto g2 = loaded.encode(s.data.test.image(0));
  CHECK(g1.mu == g2.mu);
  CHECK(g1.sigma == g2.sigma);
  std::filesystem::remove(path);
}
