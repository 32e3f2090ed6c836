#include "sigman/inference.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <random>

#include "sigman/errors.hpp"
#include "sigman/lle.hpp"
#include "sigman/losses.hpp"
#include "sigman/tape.hpp"

namespace sigman {

namespace {

constexpr std::uint64_t kStreamComplete = 0x10;
constexpr std::uint64_t kStreamGenerate = 0x11;

void check_latent(const TrainState& model, const Tensor<float>& z, const char* what) {
  if (z.rows() != 1 || z.cols() != model.config.hyper.latent_dim) {
    throw ShapeError(std::string(what) + ": latent " + shape_str(z) + " does not have dimension " +
                     std::to_string(model.config.hyper.latent_dim));
  }
}

}  // namespace

Observation observe(const SignalBundle& bundle) {
  Observation obs;
  for (const auto& s : bundle) obs.push_back({true, s, Mask::full(s.cells())});
  return obs;
}

Tensor<float> fit_latent(const TrainState& model, const Observation& obs, const FitOptions& opts,
                         const Tensor<float>* init) {
  const auto& mods = model.data.modalities;
  if (obs.size() != mods.size()) {
    throw DataError("fit_latent: observation has " + std::to_string(obs.size()) + " modalities, model has " +
                    std::to_string(mods.size()));
  }
  if (opts.iters < 0) throw ConfigError("fit_latent: iters must be >= 0");
  if (!(opts.lr > 0.0)) throw ConfigError("fit_latent: lr must be > 0");

  std::vector<Tensor<float>> embedded(mods.size()), targets(mods.size());
  Index observed = 0;
  for (std::size_t m = 0; m < mods.size(); ++m) {
    if (!obs[m].present) continue;
    const auto& s = obs[m].signal;
    if (s.shape != mods[m].shape || s.channels != mods[m].channels) {
      throw DataError("fit_latent: " + mods[m].modality + " input does not match the trained grid");
    }
    if (static_cast<Index>(obs[m].mask.observed.size()) != s.cells()) {
      throw DataError("fit_latent: mask for " + mods[m].modality + " does not match the signal grid");
    }
    const auto cells = obs[m].mask.observed_cells();
    if (cells.empty()) continue;
    observed += static_cast<Index>(cells.size());
    const auto coords = grid_coordinates<float>(mods[m].shape);
    embedded[m] = gather_cells(fourier_embed(coords, model.hyper.fields[m]), cells);
    targets[m] = gather_cells(s.values, cells);
  }
  if (observed == 0) throw DataError("fit_latent: mask is empty");

  Tensor<float> z = init ? *init : Tensor<float>::Zero(1, model.config.hyper.latent_dim);
  check_latent(model, z, "fit_latent");

  const LossConfig& loss_cfg = model.config.train.loss;
  const Index k = std::min<Index>(model.config.train.k, model.latents.rows());
  AdamConfig adam;
  adam.lr = opts.lr;
  auto mom = AdamMoments<float>::zeros_like(z);

  for (int it = 1; it <= opts.iters; ++it) {
    Tape<float> tape;
    auto hv = bind(tape, model.hyper, false);
    auto zv = tape.leaf(z);
    std::vector<Var<float>> emb(mods.size());
    BatchTargets<float> tgt(1, std::vector<Tensor<float>>(mods.size()));
    for (std::size_t m = 0; m < mods.size(); ++m) {
      if (embedded[m].size() == 0) continue;
      emb[m] = tape.constant(embedded[m]);
      tgt[0][m] = targets[m];
    }
    auto loss = reconstruction_loss(hv, zv, std::span<const Var<float>>(emb), tgt);
    if (opts.use_lle) {
      const auto nb = nearest_rows(model.latents, z, k);
      Tensor<float> rows(k, z.cols());
      for (Index r = 0; r < k; ++r) rows.row(r) = model.latents.row(nb[static_cast<std::size_t>(r)]);
      const Var<float> nv = tape.constant(rows);
      loss = loss + lle_loss(hv, zv, std::span<const Var<float>>(&nv, 1), std::span<const Var<float>>(emb), tgt,
                             loss_cfg);
    }
    if (!std::isfinite(loss.item())) {
      throw NumericError("fit_latent: non-finite loss at iteration " + std::to_string(it));
    }
    tape.backward(loss);
    adam_update(adam, it, "latent", z, tape.grad(zv), mom);
  }
  return z;
}

Tensor<float> interpolate(const Tensor<float>& a, const Tensor<float>& b, double t) {
  if (!(t >= 0.0 && t <= 1.0)) throw ConfigError("interpolate: t = " + std::to_string(t) + " is outside [0, 1]");
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw ShapeError("interpolate: latents " + shape_str(a) + " and " + shape_str(b) + " differ in shape");
  }
  const float tf = static_cast<float>(t);
  return ((1.0f - tf) * a.array() + tf * b.array()).matrix();
}

std::vector<Tensor<float>> decode_raw(const TrainState& model, const Tensor<float>& z) {
  check_latent(model, z, "decode");
  std::vector<Tensor<float>> out;
  for (std::size_t m = 0; m < model.data.modalities.size(); ++m) {
    const auto params = decode_field(z, model.hyper, m);
    const auto coords = grid_coordinates<float>(model.data.modalities[m].shape);
    out.push_back(eval_field(params, coords, model.hyper.fields[m]));
  }
  return out;
}

SignalBundle decode_signals(const TrainState& model, const Tensor<float>& z) {
  auto raw = decode_raw(model, z);
  SignalBundle out;
  for (std::size_t m = 0; m < raw.size(); ++m) {
    const auto& info = model.data.modalities[m];
    GridSignal s;
    s.modality = info.modality;
    s.shape = info.shape;
    s.channels = info.channels;
    s.range = info.range;
    s.values = raw[m].cwiseMax(-1.0f).cwiseMin(1.0f);
    out.push_back(std::move(s));
  }
  return out;
}

double reconstruction_mse(const TrainState& model, const Tensor<float>& z, const SignalBundle& bundle) {
  model.data.check(bundle);
  const auto raw = decode_raw(model, z);
  double total = 0.0;
  for (std::size_t m = 0; m < raw.size(); ++m) {
    total += (raw[m].cast<double>() - bundle[m].values.cast<double>()).squaredNorm() / static_cast<double>(raw[m].size());
  }
  return total;
}

double psnr(double mse) {
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(4.0 / mse);
}

std::vector<Completion> complete(const TrainState& model, const Observation& obs, int samples, std::uint64_t seed,
                                 FitOptions opts) {
  if (samples < 1) throw ConfigError("complete: samples must be >= 1");
  opts.use_lle = true;
  double mean_norm = 0.0;
  for (Index r = 0; r < model.latents.rows(); ++r) mean_norm += model.latents.row(r).cast<double>().norm();
  mean_norm /= static_cast<double>(model.latents.rows());
  const double stddev = mean_norm / std::sqrt(static_cast<double>(model.latents.cols()));

  std::vector<Completion> out;
  for (int s = 0; s < samples; ++s) {
    auto rng = step_rng(seed, s, kStreamComplete);
    std::normal_distribution<double> normal(0.0, stddev);
    Tensor<float> init(1, model.latents.cols());
    for (Index i = 0; i < init.size(); ++i) init.data()[i] = static_cast<float>(normal(rng));
    Completion c;
    c.latent = fit_latent(model, obs, opts, &init);
    c.signals = decode_signals(model, c.latent);
    out.push_back(std::move(c));
  }
  return out;
}

double default_beta(const TrainState& model) {
  const NeighborGraph graph = model.graph.empty() ? refresh_neighbors(model.latents, model.config.train.k) : model.graph;
  return 0.1 * graph.mean_distance();
}

std::vector<GenSample> generate(const TrainState& model, std::uint64_t seed, int count, double beta) {
  if (count < 0) throw ConfigError("generate: count must be >= 0");
  if (!(beta >= 0.0)) throw ConfigError("generate: beta must be >= 0");
  const NeighborGraph graph = model.graph.empty() ? refresh_neighbors(model.latents, model.config.train.k) : model.graph;
  const Index n = model.latents.cols();
  const Tensor<double> table = model.latents.cast<double>();
  auto rng = step_rng(seed, 0, kStreamGenerate);
  std::uniform_int_distribution<Index> pick_anchor(0, table.rows() - 1);
  std::uniform_int_distribution<Index> pick_neighbor(0, graph.k - 1);
  std::uniform_real_distribution<double> pick_alpha(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);

  std::vector<GenSample> out;
  for (int s = 0; s < count; ++s) {
    GenSample g;
    g.anchor = pick_anchor(rng);
    const auto& nbrs = graph.index[static_cast<std::size_t>(g.anchor)];
    g.neighbor = nbrs[static_cast<std::size_t>(pick_neighbor(rng))];
    g.alpha = pick_alpha(rng);
    g.beta = beta;
    Tensor<double> z = g.alpha * table.row(g.anchor) + (1.0 - g.alpha) * table.row(g.neighbor);
    for (Index i = 0; i < n; ++i) z(0, i) += beta * normal(rng);

    Tensor<double> region(static_cast<Index>(nbrs.size()) + 1, n);
    region.row(0) = table.row(g.anchor);
    for (std::size_t j = 0; j < nbrs.size(); ++j) region.row(static_cast<Index>(j) + 1) = table.row(nbrs[j]);

    const auto sol = solve_lle(z, region, LleOptions::tight());
    Eigen::VectorXd w = sol.weights.col(0).cwiseMax(0.0);
    const double total = w.sum();
    if (!(total > 0.0)) throw NumericError("generate: projection weights vanish after clipping");
    w /= total;
    g.weights = w;
    g.latent = (w.transpose() * region).cast<float>();
    g.residual = solve_lle(Tensor<double>(g.latent.cast<double>()), region, LleOptions::tight()).residual;
    out.push_back(std::move(g));
  }
  return out;
}

void write_generation_manifest(const std::vector<GenSample>& samples, std::ostream& out) {
  char buf[160];
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto& g = samples[i];
    std::snprintf(buf, sizeof(buf), "%zu\t%lld\t%lld\t%.9g\t%.9g\n", i, static_cast<long long>(g.anchor),
                  static_cast<long long>(g.neighbor), g.alpha, g.beta);
    out << buf;
  }
}

}  // namespace sigman
