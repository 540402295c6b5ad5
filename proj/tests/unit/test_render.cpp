#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <set>

#include "imagine/core/digest.hpp"
#include "imagine/core/errors.hpp"
#include "imagine/render/dataset.hpp"
#include "imagine/render/environment.hpp"
#include "imagine/render/png.hpp"
#include "imagine/render/render.hpp"

using namespace imagine;
using render::FragmentPool;
using render::Observation;

namespace {

const FragmentPool& pool() {
  static const FragmentPool p(11);
  return p;
}

}  // namespace

TEST_CASE("rendering is a pure function of pool and stream") {
  const auto s = env::parse_state("U L D|p1");
  Rng a(3);
  Rng b(3);
  CHECK(render::render(s, pool(), a) == render::render(s, pool(), b));
  const FragmentPool other(11);
  Rng c(3);
  Rng d(3);
  CHECK(render::render(s, other, c) == render::render(s, pool(), d));
}

TEST_CASE("pixels lie in the unit interval") {
  Rng rng(4);
  for (int i = 0; i < 50; ++i) {
    const auto obs = render::render(env::Macrostate::from_index(static_cast<int>(rng.index(192))), pool(), rng);
    CHECK(obs.pixels.size() == render::kPixels);
    const auto [lo, hi] = std::minmax_element(obs.pixels.begin(), obs.pixels.end());
    CHECK(*lo >= 0.0F);
    CHECK(*hi <= 1.0F);
  }
}

TEST_CASE("classifier recovers every state from every pointer variant") {
  for (int i = 0; i < env::kNumStates; ++i) {
    const auto s = env::Macrostate::from_index(i);
    for (std::size_t p = 0; p < render::kPointerVariants; p += 7) {
      const std::array<std::size_t, 3> v{p % 16, (p + 5) % 16, (p + 11) % 16};
      CHECK(render::classify_observation(render::compose(s, pool(), v, p)) == s);
    }
  }
}

TEST_CASE("classifier tolerates the largest jitter") {
  std::vector<float> strip(render::kStripPixels);
  for (int d = 0; d < env::kNumDirections; ++d) {
    for (float dx : {-render::kMaxOffset, render::kMaxOffset}) {
      for (float dy : {-render::kMaxOffset, render::kMaxOffset}) {
        for (float sc : {1.0F - render::kMaxScaleJitter, 1.0F + render::kMaxScaleJitter}) {
          Observation obs;
          for (std::size_t c = 0; c < render::kChannels; ++c) {
            const auto dir = static_cast<env::Direction>((d + static_cast<int>(c)) % 4);
            render::rasterize_arrow(dir, render::Jitter{dx, dy, sc}, strip);
            std::copy(strip.begin(), strip.end(), obs.pixels.begin() + static_cast<std::ptrdiff_t>(c * render::kStripPixels));
          }
          std::vector<float> patch(render::kHeight * render::kPointerColumns);
          render::rasterize_pointer(render::Jitter{dx, dy, sc}, patch);
          for (std::size_t r = 0; r < render::kHeight; ++r) {
            for (std::size_t c = 0; c < render::kPointerColumns; ++c) obs.at(2, r, c) = patch[r * render::kPointerColumns + c];
          }
          const auto got = render::classify_observation(obs);
          CHECK(got.pointed == 2);
          for (std::size_t c = 0; c < 3; ++c) CHECK(static_cast<int>(got.arrows[c]) == (d + static_cast<int>(c)) % 4);
        }
      }
    }
  }
}

TEST_CASE("pure noise and blank images are ambiguous") {
  Rng rng(9);
  Observation noise;
  for (float& v : noise.pixels) v = rng.uniform();
  CHECK_THROWS_AS(render::classify_observation(noise), render::AmbiguousObservation);
  Observation blank;
  std::fill(blank.pixels.begin(), blank.pixels.end(), render::kBackground);
  CHECK_FALSE(render::try_classify_observation(blank).has_value());
}

TEST_CASE("a second pointer makes the image ambiguous") {
  const render::FragmentPool pool(0);
  Rng rng(4);
  Observation obs = render::render(env::parse_state("U R D|p0"), pool, rng);
  REQUIRE(render::classify_observation(obs).pointed == 0);
  for (std::size_t r = 0; r < render::kHeight; ++r) {
    for (std::size_t c = 0; c < render::kPointerColumns; ++c) obs.at(1, r, c) = obs.at(0, r, c);
  }
  CHECK_FALSE(render::try_classify_observation(obs).has_value());
}

TEST_CASE("renders of one state vary and cover the fragment pool") {
  const auto s = env::parse_state("R D L|p0");
  Rng rng(21);
  std::set<std::size_t> pointer_seen;
  std::set<std::string> images;
  // Coupon collector over 50 pointer variants: expected ~225 draws, 2000 is ample.
  for (int i = 0; i < 2000; ++i) {
    Rng probe = rng;
    const std::size_t a0 = probe.index(16);
    const std::size_t a1 = probe.index(16);
    const std::size_t a2 = probe.index(16);
    pointer_seen.insert(probe.index(render::kPointerVariants));
    (void)a0, (void)a1, (void)a2;
    const auto obs = render::render(s, pool(), rng);
    if (i < 200) images.insert(sha256_hex(std::as_bytes(std::span(obs.pixels))));
  }
  CHECK(pointer_seen.size() == render::kPointerVariants);
  CHECK(images.size() > 190);
  CHECK(FragmentPool::combinations_per_state() == 204800);
}

TEST_CASE("dataset build is deterministic and round-trips through its container") {
  const auto d1 = render::build_dataset(64, 16, pool(), Rng(5));
  const auto d2 = render::build_dataset(64, 16, pool(), Rng(5));
  CHECK(d1.train == d2.train);
  CHECK(d1.test == d2.test);
  CHECK(d1.train.size() == 64);
  CHECK_FALSE(d1.train == render::build_dataset(64, 16, pool(), Rng(6)).train);
  for (std::size_t i = 0; i < d1.train.size(); ++i) CHECK(render::classify_observation(d1.train.observation(i)) == d1.train.state(i));

  const auto bytes = render::encode_image_set(d1.train);
  CHECK(render::decode_image_set(bytes) == d1.train);
  CHECK(sha256_hex(bytes) == sha256_hex(render::encode_image_set(d2.train)));
  auto cut = bytes;
  cut.resize(cut.size() - 3);
  CHECK_THROWS_AS(render::decode_image_set(cut), IoError);
  auto bad = bytes;
  bad[0] = std::byte{'X'};
  CHECK_THROWS_AS(render::decode_image_set(bad), IoError);
}

TEST_CASE("observed environment hides the state and follows the puzzle") {
  render::ObservedEnvironment envir(pool(), env::Variant::Easy, Rng(8));
  const auto start = env::parse_state("U L R|p1");
  const auto obs = envir.reset_to(start);
  CHECK(render::classify_observation(obs) == start);
  const auto fb = envir.step(env::ActionId(2));  // L -> U: two Up arrows
  CHECK(fb.done);
  CHECK(fb.reward == doctest::Approx(-5.0));
  CHECK(fb.terminal_kind == env::TerminalKind::Illegal);
  CHECK(envir.episode_over());
  CHECK_THROWS_AS(envir.step(env::ActionId(0)), UsageError);

  envir.reset_to(env::parse_state("U R L|p0"));
  render::ObservedEnvironment::Feedback last;
  int steps = 0;
  while (!envir.episode_over()) {
    last = envir.step(env::ActionId(steps % 2 == 0 ? 2 : 3));  // cube 1 between R and D
    ++steps;
  }
  CHECK(steps == env::kMaxEpisodeSteps);
  CHECK(last.timeout);
  CHECK_FALSE(last.done);
}

TEST_CASE("png encoding") {
  const std::vector<std::uint8_t> px{0, 64, 128, 255, 10, 20};
  const auto png = render::encode_png_gray(3, 2, px);
  REQUIRE(png.size() > 8);
  CHECK(png[0] == std::byte{0x89});
  CHECK(png[1] == std::byte{'P'});
  CHECK_THROWS_AS(render::encode_png_gray(4, 2, px), ConfigError);
  const auto path = std::filesystem::temp_directory_path() / "imagine_rl_test.png";
  Rng rng(1);
  const std::vector<Observation> frames{render::render(env::parse_state("U L R|p0"), pool(), rng)};
  render::write_observation_png(path, frames);
  CHECK(std::filesystem::file_size(path) > 100);
  std::filesystem::remove(path);
}
