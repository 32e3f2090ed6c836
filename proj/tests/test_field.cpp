#include <doctest.h>

#include <Eigen/SVD>

#include "sigman/field.hpp"
#include "sigman/losses.hpp"
#include "support.hpp"

using namespace sigman;
using namespace sigman::test;

namespace {

FieldArch small_field(int coord_dim = 2) {
  FieldArch a;
  a.coord_dim = coord_dim;
  a.embed_dim = 4 * coord_dim;
  a.n_hidden_layers = 2;
  a.hidden_dim = 12;
  a.out_dim = 2;
  return a;
}

HyperArch small_hyper() {
  HyperArch h;
  h.latent_dim = 5;
  h.trunk_hidden = 8;
  h.trunk_layers = 2;
  h.rank = 3;
  return h;
}

}  // namespace

TEST_CASE("fourier_embed: examples") {
  FieldArch a;
  a.coord_dim = 1;
  a.embed_dim = 4;
  const auto e = fourier_embed(make_tensor<double>({1, 1}, {0.5}), a);
  CHECK(e(0, 0) == doctest::Approx(1.0));
  CHECK(e(0, 1) == doctest::Approx(0.0));
  CHECK(e(0, 2) == doctest::Approx(0.0));
  CHECK(e(0, 3) == doctest::Approx(-1.0));

  a.coord_dim = 3;
  a.embed_dim = 12;
  const auto z = fourier_embed(zeros(1, 3), a);
  for (Index c = 0; c < 12; c += 2) {
    CHECK(z(0, c) == 0.0);
    CHECK(z(0, c + 1) == 1.0);
  }
}

TEST_CASE("fourier_embed: length and range on random coordinates") {
  FieldArch a;
  a.coord_dim = 2;
  a.embed_dim = 8;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    Rng rng(seed);
    const auto e = fourier_embed(random_tensor(rng, 3, 2), a);
    CHECK(e.cols() == 8);
    CHECK(e.cwiseAbs().maxCoeff() <= 1.0);
  }
}

TEST_CASE("fourier_embed: errors") {
  FieldArch a;
  a.coord_dim = 2;
  a.embed_dim = 6;
  CHECK_THROWS_AS(fourier_embed(zeros(1, 2), a), ConfigError);
  a.embed_dim = 8;
  CHECK_THROWS_AS(fourier_embed(make_tensor<double>({1, 2}, {0.0, 1.5}), a), DataError);
  CHECK_THROWS_AS(fourier_embed(zeros(1, 3), a), ShapeError);
}

TEST_CASE("grid coordinates are cell centers in row-major order") {
  const Index shape1[] = {4};
  const auto c1 = grid_coordinates<double>(shape1);
  CHECK(c1(0, 0) == -0.75);
  CHECK(c1(3, 0) == 0.75);
  const Index shape2[] = {2, 3};
  const auto c2 = grid_coordinates<double>(shape2);
  CHECK(c2.rows() == 6);
  CHECK(c2(1, 0) == -0.5);
  CHECK(c2(1, 1) == doctest::Approx(0.0));
  CHECK(c2(5, 0) == 0.5);
  const Index single[] = {1};
  CHECK(grid_coordinates<double>(single)(0, 0) == 0.0);
}

TEST_CASE("decode_field: zero factors give half the shared weights") {
  Rng rng(1);
  const FieldArch fields[] = {small_field()};
  auto h = init_hypernet<double>(small_hyper(), fields, rng);
  h.heads[0].weight.setZero();
  h.heads[0].bias.setZero();
  const auto p = decode_field(random_tensor(rng, 1, 5), h);
  for (std::size_t l = 0; l < p.weights.size(); ++l) {
    CHECK((p.weights[l] - 0.5 * h.heads[0].gates[l]).cwiseAbs().maxCoeff() == 0.0);
    CHECK(p.biases[l].isZero());
  }
}

TEST_CASE("decode_field: zero shared weights give zero field weights") {
  Rng rng(2);
  const FieldArch fields[] = {small_field()};
  auto h = init_hypernet<double>(small_hyper(), fields, rng);
  for (auto& g : h.heads[0].gates) g.setZero();
  const auto p = decode_field(random_tensor(rng, 1, 5), h);
  for (const auto& w : p.weights) CHECK(w.isZero());
}

TEST_CASE("decode_field: logit of the gate factor has rank at most r") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(seed);
    const FieldArch fields[] = {small_field()};
    const auto h = init_hypernet<double>(small_hyper(), fields, rng);
    const auto p = decode_field(random_tensor(rng, 1, 5), h);
    const auto layout = head_layout(fields[0], small_hyper());
    for (std::size_t l = 0; l < p.weights.size(); ++l) {
      const Eigen::MatrixXd ratio = p.weights[l].cwiseQuotient(h.heads[0].gates[l]);
      const Eigen::MatrixXd logit = (ratio.array() / (1.0 - ratio.array())).log().matrix();
      Eigen::JacobiSVD<Eigen::MatrixXd> svd(logit);
      const auto& s = svd.singularValues();
      for (Index i = layout.layers[l].rank; i < s.size(); ++i) CHECK(s(i) <= 1e-8 * std::max(1.0, s(0)));
    }
  }
}

TEST_CASE("head layout clamps rank to the layer shape") {
  FieldArch f;
  f.coord_dim = 1;
  f.embed_dim = 2;
  f.n_hidden_layers = 1;
  f.hidden_dim = 16;
  f.out_dim = 1;
  HyperArch h;
  h.rank = 10;
  const auto layout = head_layout(f, h);
  REQUIRE(layout.layers.size() == 2);
  CHECK(layout.layers[0].rank == 2);
  CHECK(layout.layers[1].rank == 1);
  CHECK(layout.width == (16 * 2 + 2 * 2 + 16) + (1 * 1 + 1 * 16 + 1));
}

TEST_CASE("eval_field: zero parameters output the final bias") {
  const FieldArch a = small_field();
  FieldParams<double> p;
  for (int l = 0; l < a.num_layers(); ++l) {
    p.weights.push_back(Tensor<double>::Zero(a.layer(l).fan_out, a.layer(l).fan_in));
    p.biases.push_back(Tensor<double>::Zero(1, a.layer(l).fan_out));
  }
  p.biases.back() = make_tensor<double>({1, 2}, {0.25, -3.0});
  Rng rng(4);
  const auto y = eval_field(p, random_tensor(rng, 7, 2), a);
  for (Index r = 0; r < 7; ++r) {
    CHECK(y(r, 0) == 0.25);
    CHECK(y(r, 1) == -3.0);
  }
}

TEST_CASE("eval_field: hand-computed two-unit network") {
  FieldArch a;
  a.coord_dim = 1;
  a.embed_dim = 2;
  a.n_hidden_layers = 1;
  a.hidden_dim = 2;
  a.out_dim = 1;
  FieldParams<double> p;
  p.weights = {make_tensor<double>({2, 2}, {1, 2, 3, -4}), make_tensor<double>({1, 2}, {2, 1})};
  p.biases = {make_tensor<double>({1, 2}, {0.5, -0.5}), make_tensor<double>({1, 1}, {0.25})};
  // embed(0) = [0, 1]; hidden = relu([2.5, -4.5]) = [2.5, 0]; out = 5 + 0.25
  CHECK(eval_field(p, zeros(1, 1), a)(0, 0) == doctest::Approx(5.25));
}

TEST_CASE("eval_field: pointwise in the batch") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(seed);
    const FieldArch fields[] = {small_field()};
    const auto h = init_hypernet<float>(small_hyper(), fields, rng);
    const auto p = decode_field(random_tensor<float>(rng, 1, 5), h);
    const auto xs = random_tensor<float>(rng, 9, 2);
    const auto batched = eval_field(p, xs, fields[0]);
    std::vector<Index> perm = {3, 1, 8, 0, 2, 7, 6, 5, 4};
    Tensor<float> shuffled(9, 2);
    for (Index i = 0; i < 9; ++i) shuffled.row(i) = xs.row(perm[i]);
    const auto permuted = eval_field(p, shuffled, fields[0]);
    for (Index i = 0; i < 9; ++i) {
      const auto single = eval_field(p, Tensor<float>(xs.row(perm[i])), fields[0]);
      CHECK((single.row(0) - batched.row(perm[i])).cwiseAbs().maxCoeff() <= 1e-6f);
      CHECK((permuted.row(i) - batched.row(perm[i])).cwiseAbs().maxCoeff() <= 1e-6f);
    }
  }
}

TEST_CASE("init_hypernet: parameter names and shapes") {
  Rng rng(0);
  const FieldArch fields[] = {small_field(2), small_field(1)};
  const auto h = init_hypernet<float>(small_hyper(), fields, rng);
  std::vector<std::string> names;
  h.for_each([&](const std::string& n, const Tensor<float>&) { names.push_back(n); });
  CHECK(names.front() == "trunk.0.weight");
  CHECK(names.size() == 4 + 2 * (2 + 3));
  CHECK(h.heads[1].weight.rows() == head_layout(fields[1], small_hyper()).width);
  CHECK(h.heads[0].bias.isZero());
  CHECK_THROWS_AS(init_hypernet<float>(small_hyper(), std::span<const FieldArch>(), rng), ConfigError);
}

TEST_CASE("decode + eval gradients match finite differences") {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    Rng rng(seed);
    const FieldArch fields[] = {small_field()};
    const auto h = init_hypernet<double>(small_hyper(), fields, rng);
    const Tensor<double> emb = fourier_embed(random_tensor(rng, 6, 2), fields[0]);
    const BatchTargets<double> targets = {{random_tensor(rng, 6, 2)}};
    ScalarFn f = [&](Tape<double>& t, Var<double> z) {
      auto hv = bind(t, h, false);
      const Var<double> e[] = {t.constant(emb)};
      return reconstruction_loss(hv, z, std::span<const Var<double>>(e), targets);
    };
    CHECK(grad_check(f, random_tensor(rng, 1, 5)) < 1e-5);
  }
}
