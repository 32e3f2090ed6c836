// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fail.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/QR>

#include "op_cases.hpp"
#include "sigman/inference.hpp"
#include "sigman/losses.hpp"
#include "sigman/synth.hpp"
#include "support.hpp"

using namespace sigman;
using namespace sigman::test;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double mean_mse(const TrainState& m, const std::vector<SignalBundle>& data) {
  double s = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) s += reconstruction_mse(m, m.latents.row(static_cast<Index>(i)), data[i]);
  return s / static_cast<double>(data.size());
}

// ---------------------------------------------------------------- gradients

struct ChainToy {
  HypernetParams<double> params;
  Tensor<double> latents;
  Tensor<double> embedded;
  BatchTargets<double> targets;
  std::vector<IsoPair> pairs;
  LossConfig cfg;
};

ChainToy chain_toy(std::uint64_t seed) {
  Rng rng(seed);
  ChainToy t;
  FieldArch f;
  f.coord_dim = 2;
  f.embed_dim = 8;
  f.n_hidden_layers = 2;
  f.hidden_dim = 10;
  f.out_dim = 1;
  HyperArch h;
  h.latent_dim = 6;
  h.trunk_hidden = 12;
  h.trunk_layers = 2;
  h.rank = 3;
  const FieldArch fields[] = {f};
  t.params = init_hypernet<double>(h, fields, rng);
  t.latents = random_tensor(rng, 2, 6, -0.5, 0.5);

  const auto data = sinusoid_images(2, 8, seed);
  std::vector<Index> cells;
  for (Index c = 0; c < 64; c += 3) cells.push_back(c);
  const auto grid = grid_coordinates<double>(data[0][0].shape);
  Tensor<double> coords(static_cast<Index>(cells.size()), 2);
  for (std::size_t i = 0; i < cells.size(); ++i) coords.row(static_cast<Index>(i)) = grid.row(cells[i]);
  t.embedded = fourier_embed(coords, f);
  for (const auto& b : data) t.targets.push_back({gather_cells(b[0].values, cells).cast<double>()});
  const Index ids[] = {0, 1};
  t.pairs = select_iso_pairs(signal_distances(t.targets), ids, t.cfg.iso_quantile);
  t.cfg.iso_alpha = 2.0;
  return t;
}

// z -> decode_field -> eval_field -> rec + lle + iso, each latent's single
// neighbor being the other one.
Var<double> chain_loss(Tape<double>& tape, const HypernetVars<double>& hv, Var<double> z, const ChainToy& t) {
  const Var<double> e[] = {tape.constant(t.embedded)};
  const Var<double> n[] = {gather_rows(z, {1}), gather_rows(z, {0})};
  auto rec = reconstruction_loss(hv, z, std::span<const Var<double>>(e), t.targets);
  auto lle = lle_loss(hv, z, std::span<const Var<double>>(n), std::span<const Var<double>>(e), t.targets, t.cfg);
  auto iso = iso_loss(z, std::span<const IsoPair>(t.pairs), t.cfg.iso_alpha);
  return total_loss(rec, lle, iso, t.cfg);
}

double chain_value(const HypernetParams<double>& p, const Tensor<double>& z, const ChainToy& t) {
  Tape<double> tape;
  return chain_loss(tape, bind(tape, p, false), tape.constant(z), t).item();
}

// Reverse-mode vs central differences on every latent entry and on 40
// random hypernetwork entries.
double chain_error(std::uint64_t seed) {
  ChainToy t = chain_toy(seed);
  Tape<double> tape;
  auto hv = bind(tape, t.params, true);
  auto z = tape.leaf(t.latents);
  tape.backward(chain_loss(tape, hv, z, t));

  std::vector<Tensor<double>*> ptrs;
  t.params.for_each([&](const std::string&, Tensor<double>& p) { ptrs.push_back(&p); });
  std::vector<Tensor<double>> pgrads;
  hv.for_each([&](const Var<double>& v) { pgrads.push_back(tape.grad(v)); });

  std::vector<double> analytic, numeric;
  const double h = 1e-6;
  const Tensor<double> gz = tape.grad(z);
  for (Index i = 0; i < t.latents.size(); ++i) {
    Tensor<double> zp = t.latents, zm = t.latents;
    zp.data()[i] += h;
    zm.data()[i] -= h;
    analytic.push_back(gz.data()[i]);
    numeric.push_back((chain_value(t.params, zp, t) - chain_value(t.params, zm, t)) / (2 * h));
  }
  Rng rng(seed ^ 0x5eedULL);
  for (int k = 0; k < 40; ++k) {
    const auto which = static_cast<std::size_t>(random_int(rng, 0, static_cast<Index>(ptrs.size()) - 1));
    Tensor<double>& p = *ptrs[which];
    const Index i = random_int(rng, 0, p.size() - 1);
    const double orig = p.data()[i];
    p.data()[i] = orig + h;
    const double fp = chain_value(t.params, t.latents, t);
    p.data()[i] = orig - h;
    const double fm = chain_value(t.params, t.latents, t);
    p.data()[i] = orig;
    analytic.push_back(pgrads[which].data()[i]);
    numeric.push_back((fp - fm) / (2 * h));
  }
  const Eigen::Map<const Eigen::VectorXd> a(analytic.data(), static_cast<Index>(analytic.size()));
  const Eigen::Map<const Eigen::VectorXd> b(numeric.data(), static_cast<Index>(numeric.size()));
  return (a - b).norm() / std::max({a.norm(), b.norm(), 1e-8});
}

Outcome gradient_correctness() {
  const auto t0 = Clock::now();
  double worst_op = 0.0;
  std::string worst_name;
  for (const auto& c : op_cases()) {
    const double e = op_case_error(c, 100);
    if (e > worst_op) {
      worst_op = e;
      worst_name = c.name;
    }
  }
  double worst_chain = 0.0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) worst_chain = std::max(worst_chain, chain_error(seed));
  const double secs = seconds_since(t0);
  return {worst_op < 1e-3 && worst_chain < 1e-3 && secs < 60.0,
          fmt("ops %zu, worst op rel err %.2e (%s), worst chain rel err %.2e, %.1fs", op_cases().size(), worst_op,
              worst_name.c_str(), worst_chain, secs)};
}

// ---------------------------------------------------------------- LLE oracle

// Constrained least squares through the KKT system, solved with a
// rank-revealing decomposition so that degenerate neighbor sets still work.
double kkt_residual(const Tensor<double>& z, const Tensor<double>& n) {
  const Index j = n.rows();
  Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(j + 1, j + 1);
  kkt.topLeftCorner(j, j) = 2.0 * n * n.transpose();
  kkt.topRightCorner(j, 1).setOnes();
  kkt.bottomLeftCorner(1, j).setOnes();
  Eigen::VectorXd rhs(j + 1);
  rhs.head(j) = 2.0 * n * z.row(0).transpose();
  rhs(j) = 1.0;
  const Eigen::VectorXd sol = kkt.completeOrthogonalDecomposition().solve(rhs);
  return (z.row(0).transpose() - n.transpose() * sol.head(j)).norm();
}

Outcome lle_oracle() {
  double worst_sum = 0.0, worst_res = 0.0, worst_default = 0.0;
  for (std::uint64_t seed = 0; seed < 500; ++seed) {
    Rng rng(1000 + seed);
    const Index dim = random_int(rng, 2, 16);
    const Index j = random_int(rng, 2, 10);
    const auto n = random_tensor(rng, j, dim, -2.0, 2.0);
    const auto z = random_tensor(rng, 1, dim, -2.0, 2.0);
    const double oracle = kkt_residual(z, n);
    const auto s = solve_lle(z, n, LleOptions::tight());
    worst_sum = std::max(worst_sum, std::abs(s.weights.sum() - 1.0));
    worst_res = std::max(worst_res, std::abs(s.residual - oracle));
    worst_default = std::max(worst_default, std::abs(solve_lle(z, n).residual - oracle));
  }
  return {worst_sum < 1e-6 && worst_res < 1e-4,
          fmt("500 instances, worst |sum-1| %.2e, worst residual gap %.2e (training ridge 1e-3: %.2e)", worst_sum,
              worst_res, worst_default)};
}

// ---------------------------------------------------------------- toy overfit

RunConfig toy_config() {
  RunConfig c;
  c.hyper.latent_dim = 64;
  c.hyper.trunk_hidden = 128;
  c.hyper.trunk_layers = 2;
  c.embed_dim = 64;
  c.hidden_dim = 128;
  c.n_hidden_layers = 2;
  c.train.batch_size = 16;
  c.train.points_per_signal = 256;
  c.train.k = 4;
  c.train.lr = 2e-3;
  c.train.steps = 3000;
  // Sampled-signal distances here are ~10, so alpha = 100 would pin every
  // latent within ~0.1 of the others.
  c.train.loss.iso_alpha = 10.0;
  return c;
}

struct ToyRun {
  std::vector<SignalBundle> data;
  TrainState state;
  double seconds = 0.0;
};

ToyRun train_toy() {
  ToyRun r;
  r.data = sinusoid_images(16, 16, 7);
  const auto cfg = toy_config();
  const auto t0 = Clock::now();
  Trainer tr(TrainState::init(cfg, DatasetInfo::from(r.data)), r.data);
  tr.run(cfg.train.steps);
  tr.maybe_refresh_neighbors();
  r.seconds = seconds_since(t0);
  r.state = tr.state();
  return r;
}

Outcome toy_overfit(const ToyRun& r) {
  const double p = psnr(mean_mse(r.state, r.data));
  return {p >= 35.0 && r.seconds <= 600.0, fmt("PSNR %.2f dB after 3000 steps, %.0fs", p, r.seconds)};
}

// ---------------------------------------------------------------- ablation

double held_out_mse(const RunConfig& cfg, const std::vector<SignalBundle>& train, const std::vector<SignalBundle>& held) {
  Trainer tr(TrainState::init(cfg, DatasetInfo::from(train)), train);
  tr.run(cfg.train.steps);
  double s = 0.0;
  for (const auto& b : held) {
    const auto z = fit_latent(tr.state(), observe(b), {});
    s += reconstruction_mse(tr.state(), z, b);
  }
  return s / static_cast<double>(held.size());
}

Outcome ablation() {
  const auto all = sinusoid_images(64, 16, 3);
  const std::vector<SignalBundle> train(all.begin(), all.begin() + 48), held(all.begin() + 48, all.end());
  double full = 0.0, rec = 0.0;
  std::string per_seed;
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    auto cfg = toy_config();
    cfg.train.steps = 1500;
    cfg.train.seed = seed;
    const double f = held_out_mse(cfg, train, held);
    cfg.train.loss.use_lle = cfg.train.loss.use_iso = false;
    const double r = held_out_mse(cfg, train, held);
    full += f / 3.0;
    rec += r / 3.0;
    per_seed += fmt(" [seed %llu: %.5f vs %.5f]", static_cast<unsigned long long>(seed), f, r);
  }
  return {full < 0.95 * rec, fmt("held-out MSE full %.5f, rec only %.5f%s", full, rec, per_seed.c_str())};
}

// ---------------------------------------------------------------- generation

Outcome generation_validity(const ToyRun& r) {
  const auto samples = generate(r.state, 21, 100, 0.0);
  double worst_sum = 0.0, worst_res = 0.0, lo = 0.0, hi = 0.0;
  bool finite = true, clamped = true;
  for (const auto& g : samples) {
    worst_sum = std::max(worst_sum, std::abs(g.weights.sum() - 1.0));
    worst_res = std::max(worst_res, g.residual);
    for (const auto& v : decode_raw(r.state, g.latent)) {
      finite = finite && v.allFinite();
      lo = std::min(lo, static_cast<double>(v.minCoeff()));
      hi = std::max(hi, static_cast<double>(v.maxCoeff()));
    }
    for (const auto& s : decode_signals(r.state, g.latent)) clamped = clamped && s.values.cwiseAbs().maxCoeff() <= 1.0f;
  }
  const bool pass = samples.size() == 100 && worst_sum < 1e-6 && worst_res < 1e-4 && finite && clamped && lo >= -1.5 &&
                    hi <= 1.5;
  return {pass, fmt("%zu samples, worst |sum-1| %.2e, worst residual %.2e, raw range [%.3f, %.3f]", samples.size(),
                    worst_sum, worst_res, lo, hi)};
}

// ---------------------------------------------------------------- completion

Outcome completion_consistency(const ToyRun& r) {
  const auto& bundle = r.data[0];
  auto obs = observe(bundle);
  const Index cells = bundle[0].cells();
  std::vector<Index> order(static_cast<std::size_t>(cells));
  for (Index i = 0; i < cells; ++i) order[static_cast<std::size_t>(i)] = i;
  Rng rng(4);
  std::shuffle(order.begin(), order.end(), rng);
  for (Index i = 0; i < cells / 2; ++i) obs[0].mask.observed[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])] = 0;
  const auto seen = obs[0].mask.observed_cells();
  const auto hidden = obs[0].mask.hidden_cells();

  const auto out = complete(r.state, obs, 3, 5);
  double worst_frac = 1.0;
  for (const auto& c : out) {
    Index close = 0;
    for (Index cell : seen) {
      const double d = (c.signals[0].values.row(cell) - bundle[0].values.row(cell)).cwiseAbs().maxCoeff();
      if (d <= 0.1) ++close;
    }
    worst_frac = std::min(worst_frac, static_cast<double>(close) / static_cast<double>(seen.size()));
  }
  int differing = 0;
  double min_pair = INFINITY;
  for (int a = 0; a < 3; ++a) {
    for (int b = a + 1; b < 3; ++b) {
      double mse = 0.0;
      for (Index cell : hidden) {
        mse += (out[a].signals[0].values.row(cell) - out[b].signals[0].values.row(cell)).squaredNorm();
      }
      mse /= static_cast<double>(hidden.size() * static_cast<std::size_t>(bundle[0].channels));
      min_pair = std::min(min_pair, mse);
      if (mse > 1e-4) ++differing;
    }
  }
  return {worst_frac >= 0.95 && differing >= 2,
          fmt("observed cells within 0.1: worst sample %.1f%%; %d/3 pairs differ on hidden cells (min MSE %.2e)",
              100.0 * worst_frac, differing, min_pair)};
}

// ---------------------------------------------------------------- multimodal

Outcome multimodal() {
  const auto data = sinusoid_pairs(16, 5);
  auto cfg = toy_config();
  cfg.train.points_per_signal = 64;
  cfg.train.steps = 2000;
  const auto t0 = Clock::now();
  Trainer tr(TrainState::init(cfg, DatasetInfo::from(data)), data);
  double initial = 0.0, final_loss = 0.0;
  bool finite = true;
  for (int s = 0; s < cfg.train.steps; ++s) {
    const auto l = tr.step();
    finite = finite && std::isfinite(l.total);
    if (s == 0) initial = l.total;
    if (s >= cfg.train.steps - 50) final_loss += l.total / 50.0;
  }
  tr.maybe_refresh_neighbors();

  // Cross-modal: the waveform is absent and must come from the image alone.
  auto obs = observe(data[0]);
  obs[1].present = false;
  const auto out = complete(tr.state(), obs, 2, 9);
  bool shaped = out.size() == 2;
  double audio_mse = 0.0;
  for (const auto& c : out) {
    shaped = shaped && c.signals.size() == 2 && c.signals[1].shape == data[0][1].shape && c.signals[1].values.allFinite();
    audio_mse += (c.signals[1].values - data[0][1].values).squaredNorm() / static_cast<double>(data[0][1].values.size()) / 2.0;
  }
  const double zero_mse = data[0][1].values.squaredNorm() / static_cast<double>(data[0][1].values.size());
  const bool pass = finite && shaped && final_loss <= 0.25 * initial;
  return {pass, fmt("loss %.4f -> %.4f (%.1f%%), %.0fs; waveform from image: MSE %.4f (silence %.4f)", initial,
                    final_loss, 100.0 * final_loss / initial, seconds_since(t0), audio_mse, zero_mse)};
}

// ---------------------------------------------------------------- reproducibility

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

Outcome reproducibility() {
  const auto dir = scratch_dir("acceptance_repro");
  const auto data = sinusoid_pairs(8, 2);
  auto cfg = toy_config();
  cfg.hyper.latent_dim = 16;
  cfg.hyper.trunk_hidden = 32;
  cfg.hidden_dim = 32;
  cfg.embed_dim = 16;
  cfg.train.batch_size = 4;
  cfg.train.points_per_signal = 32;
  cfg.train.k = 3;
  cfg.train.neighbor_refresh_interval = 10;
  cfg.train.checkpoint_interval = 50;
  cfg.train.seed = 42;
  std::vector<std::string> logs;
  std::vector<std::vector<std::string>> ckpts(2);
  for (int run = 0; run < 2; ++run) {
    Trainer tr(TrainState::init(cfg, DatasetInfo::from(data)), data);
    std::ostringstream metrics;
    tr.run(150, &metrics, [&](const TrainState& s) {
      const auto p = dir / fmt("run%d_%lld.gemf", run, static_cast<long long>(s.step));
      save_checkpoint(s, p);
      ckpts[static_cast<std::size_t>(run)].push_back(slurp(p));
    });
    logs.push_back(metrics.str());
  }
  const bool pass = logs[0] == logs[1] && ckpts[0].size() == 3 && ckpts[0] == ckpts[1];
  return {pass, fmt("2 runs x 150 steps, %zu checkpoints each (%zu bytes), logs %s", ckpts[0].size(),
                    ckpts[0].empty() ? std::size_t{0} : ckpts[0].back().size(),
                    logs[0] == logs[1] ? "identical" : "differ")};
}

}  // namespace

// Optional arguments restrict the run to the named criteria.
int main(int argc, char** argv) {
  const std::vector<std::string> only(argv + 1, argv + argc);
  int failures = 0;
  std::ofstream log("acceptance_results.txt");
  auto report = [&](const char* name, const std::function<Outcome()>& f) {
    if (!only.empty() && std::find(only.begin(), only.end(), name) == only.end()) return;
    Outcome o;
    try {
      o = f();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) ++failures;
    const std::string line = fmt("%s  %-24s %s", o.pass ? "PASS" : "FAIL", name, o.detail.c_str());
    std::printf("%s\n", line.c_str());
    std::fflush(stdout);
    log << line << std::endl;
  };

  // The toy model is shared by the overfit, generation and completion checks.
  std::optional<ToyRun> toy;
  auto with_toy = [&](Outcome (*f)(const ToyRun&)) {
    return [&, f] {
      if (!toy) toy = train_toy();
      return f(*toy);
    };
  };

  report("gradient-correctness", gradient_correctness);
  report("lle-oracle", lle_oracle);
  report("toy-overfit", with_toy(toy_overfit));
  report("ablation-direction", ablation);
  report("generation-validity", with_toy(generation_validity));
  report("completion-consistency", with_toy(completion_consistency));
  report("multimodal", multimodal);
  report("reproducibility", reproducibility);
  return failures == 0 ? 0 : 1;
}
