#include <doctest.h>

#include <sstream>

#include "sigman/errors.hpp"
#include "sigman/inference.hpp"
#include "support.hpp"
#include "toy.hpp"

using namespace sigman;
using namespace sigman::test;

namespace {

const TrainState& trained() {
  static const TrainState state = [] {
    const auto data = tiny_images();
    auto cfg = tiny_config();
    cfg.train.points_per_signal = 36;
    Trainer tr(TrainState::init(cfg, DatasetInfo::from(data)), data);
    tr.run(300);
    tr.maybe_refresh_neighbors();
    return tr.state();
  }();
  return state;
}

}  // namespace

TEST_CASE("interpolate: examples and errors") {
  const auto a = make_tensor<float>({1, 3}, {0, 0, 0});
  const auto b = make_tensor<float>({1, 3}, {2, 2, 2});
  CHECK(interpolate(a, b, 0.0) == a);
  CHECK(interpolate(a, b, 1.0) == b);
  CHECK(interpolate(a, b, 0.5) == make_tensor<float>({1, 3}, {1, 1, 1}));
  CHECK(interpolate(b, b, 0.5) == b);
  CHECK_THROWS_AS(interpolate(a, b, 1.5), ConfigError);
  CHECK_THROWS_AS(interpolate(a, b, -0.1), ConfigError);
  CHECK_THROWS_AS(interpolate(a, Tensor<float>::Zero(1, 2), 0.5), ShapeError);
}

TEST_CASE("interpolate: t and 1 - t sum to the endpoints") {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    Rng rng(seed);
    const auto a = random_tensor<double>(rng, 1, 6);
    const auto b = random_tensor<double>(rng, 1, 6);
    const double t = std::uniform_real_distribution<double>(0, 1)(rng);
    const Tensor<float> af = a.cast<float>(), bf = b.cast<float>();
    const Tensor<float> s = interpolate(af, bf, t) + interpolate(af, bf, 1.0 - t);
    CHECK((s - (af + bf)).cwiseAbs().maxCoeff() <= 1e-6f);
  }
}

TEST_CASE("psnr convention") {
  CHECK(psnr(0.04) == doctest::Approx(20.0));
  CHECK(std::isinf(psnr(0.0)));
}

TEST_CASE("fit_latent: zero iterations return the zero initialization") {
  const auto& m = trained();
  const auto z = fit_latent(m, observe(tiny_images()[0]), {0, 1e-2, false});
  CHECK(z.isZero());
}

TEST_CASE("fit_latent: full mask is the unmasked objective, empty mask is an error") {
  const auto& m = trained();
  const auto bundle = tiny_images()[1];
  auto obs = observe(bundle);
  const auto a = fit_latent(m, obs, {20, 1e-2, true});
  obs[0].mask = Mask::full(bundle[0].cells());
  CHECK(fit_latent(m, obs, {20, 1e-2, true}) == a);
  obs[0].mask = Mask::none(bundle[0].cells());
  CHECK_THROWS_AS(fit_latent(m, obs, {20, 1e-2, false}), DataError);
  obs[0].present = false;
  CHECK_THROWS_AS(fit_latent(m, obs, {20, 1e-2, false}), DataError);
}

TEST_CASE("fit_latent: a training signal is recovered about as well as by its stored latent") {
  const auto& m = trained();
  const auto data = tiny_images();
  for (int i : {0, 3}) {
    const double stored = psnr(reconstruction_mse(m, m.latents.row(i), data[i]));
    const auto z = fit_latent(m, observe(data[i]), {});
    CHECK(psnr(reconstruction_mse(m, z, data[i])) >= stored - 1.0);
  }
}

TEST_CASE("complete: observed cells are kept and samples differ") {
  const auto& m = trained();
  const auto bundle = tiny_images()[2];
  auto obs = observe(bundle);
  for (std::size_t c = 0; c < obs[0].mask.observed.size(); c += 2) obs[0].mask.observed[c] = 0;
  const auto out = complete(m, obs, 3, 5);
  REQUIRE(out.size() == 3);
  for (const auto& c : out) {
    CHECK(c.signals[0].shape == bundle[0].shape);
    CHECK(c.signals[0].values.cwiseAbs().maxCoeff() <= 1.0f);
  }
  CHECK(out[0].latent != out[1].latent);
  CHECK_THROWS_AS(complete(m, obs, 0, 5), ConfigError);
}

TEST_CASE("generate: projections lie on their region and runs are reproducible") {
  const auto& m = trained();
  REQUIRE(m.graph.size() == m.latents.rows());
  const auto a = generate(m, 9, 50, 0.0);
  const auto b = generate(m, 9, 50, 0.0);
  REQUIRE(a.size() == 50);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(std::abs(a[i].weights.sum() - 1.0) < 1e-6);
    CHECK(a[i].weights.minCoeff() >= 0.0);
    CHECK(a[i].residual < 1e-4);
    CHECK(a[i].alpha >= 0.0);
    CHECK(a[i].alpha <= 1.0);
    CHECK(a[i].latent == b[i].latent);
    const auto& nb = m.graph.index[static_cast<std::size_t>(a[i].anchor)];
    CHECK(std::find(nb.begin(), nb.end(), a[i].neighbor) != nb.end());
  }
  std::ostringstream out;
  write_generation_manifest({a[0]}, out);
  const std::string line = out.str();
  CHECK(line.rfind("0\t", 0) == 0);
  CHECK(std::count(line.begin(), line.end(), '\t') == 4);
  CHECK(default_beta(m) > 0.0);
  CHECK_THROWS_AS(generate(m, 0, 1, -1.0), ConfigError);
}

TEST_CASE("decode_signals clamps to the normalized range") {
  const auto& m = trained();
  const Tensor<float> far = Tensor<float>::Constant(1, 8, 50.0f);
  const auto raw = decode_raw(m, far);
  const auto s = decode_signals(m, far);
  CHECK(s[0].values.cwiseAbs().maxCoeff() <= 1.0f);
  CHECK(s[0].values == raw[0].cwiseMax(-1.0f).cwiseMin(1.0f));
  CHECK_THROWS_AS(decode_raw(m, Tensor<float>::Zero(1, 3)), ShapeError);
}
