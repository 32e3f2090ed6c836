#include "sigman/trainer.hpp"

#include <algorithm>
#include <cstdio>
#include <ostream>
#include <set>

#include "sigman/errors.hpp"
#include "sigman/losses.hpp"
#include "sigman/tape.hpp"

namespace fs = std::filesystem;

namespace sigman {

namespace {

constexpr std::uint64_t kStreamInit = 0x1;
constexpr std::uint64_t kStreamBatch = 0x2;

std::vector<Index> draw_without_replacement(std::mt19937_64& rng, Index population, Index count) {
  std::vector<Index> pool(static_cast<std::size_t>(population));
  for (Index i = 0; i < population; ++i) pool[static_cast<std::size_t>(i)] = i;
  for (Index i = 0; i < count; ++i) {
    std::uniform_int_distribution<Index> pick(i, population - 1);
    std::swap(pool[static_cast<std::size_t>(i)], pool[static_cast<std::size_t>(pick(rng))]);
  }
  pool.resize(static_cast<std::size_t>(count));
  return pool;
}

std::string shape_key(const std::vector<Index>& shape) {
  std::string s;
  for (std::size_t i = 0; i < shape.size(); ++i) s += (i ? "x" : "") + std::to_string(shape[i]);
  return s;
}

std::vector<FieldArch> field_archs(const RunConfig& cfg, const DatasetInfo& data) {
  std::vector<FieldArch> out;
  for (const auto& m : data.modalities) {
    out.push_back(cfg.field_arch(m.modality, static_cast<int>(m.shape.size()), m.channels));
  }
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// DatasetInfo / state
// ---------------------------------------------------------------------------

DatasetInfo DatasetInfo::from(const std::vector<SignalBundle>& data) {
  if (data.empty()) throw DataError("dataset: no entries");
  DatasetInfo info;
  info.size = static_cast<Index>(data.size());
  for (const auto& s : data[0]) info.modalities.push_back({s.modality, s.shape, s.channels, s.range});
  for (const auto& bundle : data) {
    info.check(bundle);
    for (std::size_t m = 0; m < bundle.size(); ++m) {
      auto& r = info.modalities[m].range;
      r.lo = std::min(r.lo, bundle[m].range.lo);
      r.hi = std::max(r.hi, bundle[m].range.hi);
    }
  }
  return info;
}

void DatasetInfo::check(const SignalBundle& bundle) const {
  if (bundle.size() != modalities.size()) {
    throw DataError("dataset: bundle has " + std::to_string(bundle.size()) + " modalities, expected " +
                    std::to_string(modalities.size()));
  }
  for (std::size_t m = 0; m < bundle.size(); ++m) {
    const auto& s = bundle[m];
    s.validate();
    const auto& want = modalities[m];
    if (s.modality != want.modality || s.shape != want.shape || s.channels != want.channels) {
      throw DataError("dataset: " + s.modality + " " + shape_key(s.shape) + "x" + std::to_string(s.channels) +
                      " does not match " + want.modality + " " + shape_key(want.shape) + "x" +
                      std::to_string(want.channels));
    }
  }
}

std::mt19937_64 step_rng(std::uint64_t seed, std::int64_t step, std::uint64_t stream) {
  const auto s = static_cast<std::uint64_t>(step);
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(s), static_cast<std::uint32_t>(s >> 32),
                    static_cast<std::uint32_t>(stream)};
  return std::mt19937_64(seq);
}

TrainState TrainState::init(const RunConfig& config, const DatasetInfo& data) {
  config.validate();
  TrainState s;
  s.config = config;
  s.data = data;
  auto rng = step_rng(config.train.seed, -1, kStreamInit);
  const auto archs = field_archs(config, data);
  s.hyper = init_hypernet<float>(config.hyper, archs, rng);
  std::normal_distribution<double> normal(0.0, config.train.latent_init_std);
  s.latents.resize(data.size, config.hyper.latent_dim);
  for (Index i = 0; i < s.latents.size(); ++i) s.latents.data()[i] = static_cast<float>(normal(rng));
  s.adam.config.lr = config.train.lr;
  s.hyper.for_each([&](const std::string&, const Tensor<float>& p) {
    s.adam.moments.push_back(AdamMoments<float>::zeros_like(p));
  });
  s.adam.moments.push_back(AdamMoments<float>::zeros_like(s.latents));
  return s;
}

// ---------------------------------------------------------------------------
// Checkpoints
// ---------------------------------------------------------------------------

ArrayTable to_table(const TrainState& s) {
  ArrayTable t;
  t.put_string("meta/config", s.config.to_text());
  t.put_u64("meta/config_hash", s.config.hash());
  t.put_i64("meta/step", s.step);
  t.put_i64("meta/graph_step", s.graph_step);
  t.put_i64("meta/adam_t", s.adam.t);
  t.put_i64("data/size", s.data.size);
  for (std::size_t m = 0; m < s.data.modalities.size(); ++m) {
    const auto& info = s.data.modalities[m];
    const std::string p = "data/" + std::to_string(m) + "/";
    t.put_string(p + "modality", info.modality);
    Tensor<float> shape(1, static_cast<Index>(info.shape.size()));
    for (std::size_t a = 0; a < info.shape.size(); ++a) shape(0, static_cast<Index>(a)) = static_cast<float>(info.shape[a]);
    t.put(p + "shape", shape);
    t.put_i64(p + "channels", info.channels);
    t.put(p + "range", make_tensor<float>({1, 2}, {static_cast<float>(info.range.lo), static_cast<float>(info.range.hi)}));
  }
  std::size_t i = 0;
  s.hyper.for_each([&](const std::string& name, const Tensor<float>& p) {
    t.put("param/" + name, p);
    t.put("adam/m/" + name, s.adam.moments.at(i).m);
    t.put("adam/v/" + name, s.adam.moments.at(i).v);
    ++i;
  });
  t.put("latents", s.latents);
  t.put("adam/m/latents", s.adam.moments.at(i).m);
  t.put("adam/v/latents", s.adam.moments.at(i).v);
  if (!s.graph.empty()) {
    Tensor<float> idx(s.graph.size(), s.graph.k), dist(s.graph.size(), s.graph.k);
    for (Index r = 0; r < s.graph.size(); ++r) {
      for (Index c = 0; c < s.graph.k; ++c) {
        idx(r, c) = static_cast<float>(s.graph.index[r][c]);
        dist(r, c) = s.graph.distance[r][c];
      }
    }
    t.put("graph/index", idx);
    t.put("graph/distance", dist);
  }
  return t;
}

TrainState from_table(const ArrayTable& t, const RunConfig* expected) {
  TrainState s;
  s.config = RunConfig::parse(t.string("meta/config"));
  const std::uint64_t stored = t.u64("meta/config_hash");
  if (s.config.hash() != stored) throw DataError("checkpoint: stored config does not match its hash");
  if (expected && expected->hash() != stored) {
    throw ConfigError("checkpoint: config hash mismatch (checkpoint was written with a different configuration)");
  }
  s.step = t.i64("meta/step");
  s.graph_step = t.i64("meta/graph_step");
  s.adam.t = t.i64("meta/adam_t");
  s.adam.config.lr = s.config.train.lr;
  s.data.size = t.i64("data/size");
  for (std::size_t m = 0;; ++m) {
    const std::string p = "data/" + std::to_string(m) + "/";
    if (!t.has(p + "modality")) break;
    ModalityInfo info;
    info.modality = t.string(p + "modality");
    const auto shape = t.tensor(p + "shape");
    for (Index a = 0; a < shape.cols(); ++a) info.shape.push_back(static_cast<Index>(shape(0, a)));
    info.channels = static_cast<int>(t.i64(p + "channels"));
    const auto range = t.tensor(p + "range");
    info.range = {range(0, 0), range(0, 1)};
    s.data.modalities.push_back(std::move(info));
  }
  // Build a correctly shaped skeleton, then overwrite every tensor.
  s.hyper.arch = s.config.hyper;
  s.hyper.fields = field_archs(s.config, s.data);
  {
    std::mt19937_64 unused(0);
    s.hyper = init_hypernet<float>(s.config.hyper, s.hyper.fields, unused);
  }
  s.hyper.for_each([&](const std::string& name, Tensor<float>& p) {
    Tensor<float> loaded = t.tensor("param/" + name);
    if (loaded.rows() != p.rows() || loaded.cols() != p.cols()) {
      throw DataError("checkpoint: parameter '" + name + "' has shape " + shape_str(loaded) + ", expected " + shape_str(p));
    }
    p = std::move(loaded);
    s.adam.moments.push_back({t.tensor("adam/m/" + name), t.tensor("adam/v/" + name)});
  });
  s.latents = t.tensor("latents");
  if (s.latents.rows() != s.data.size || s.latents.cols() != s.config.hyper.latent_dim) {
    throw DataError("checkpoint: latent table " + shape_str(s.latents) + " does not match the configuration");
  }
  s.adam.moments.push_back({t.tensor("adam/m/latents"), t.tensor("adam/v/latents")});
  if (t.has("graph/index")) {
    const auto idx = t.tensor("graph/index");
    const auto dist = t.tensor("graph/distance");
    s.graph.k = idx.cols();
    for (Index r = 0; r < idx.rows(); ++r) {
      std::vector<Index> row;
      std::vector<float> drow;
      for (Index c = 0; c < idx.cols(); ++c) {
        row.push_back(static_cast<Index>(idx(r, c)));
        drow.push_back(dist(r, c));
      }
      s.graph.index.push_back(std::move(row));
      s.graph.distance.push_back(std::move(drow));
    }
  }
  return s;
}

void save_checkpoint(const TrainState& s, const fs::path& path) { to_table(s).write(path); }

TrainState restore_checkpoint(const fs::path& path, const RunConfig* expected) {
  return from_table(ArrayTable::read(path), expected);
}

// ---------------------------------------------------------------------------
// Sampling
// ---------------------------------------------------------------------------

Batch sample_batch(std::mt19937_64& rng, const DatasetInfo& data, const TrainConfig& cfg) {
  if (data.size < 1) throw DataError("sample_batch: empty dataset");
  if (cfg.batch_size > data.size) {
    throw ConfigError("config: batch_size " + std::to_string(cfg.batch_size) + " exceeds dataset size " +
                      std::to_string(data.size));
  }
  Batch b;
  b.indices = draw_without_replacement(rng, data.size, cfg.batch_size);
  for (const auto& m : data.modalities) {
    if (cfg.points_per_signal > m.cells()) {
      throw ConfigError("config: points_per_signal " + std::to_string(cfg.points_per_signal) + " exceeds the " +
                        std::to_string(m.cells()) + " cells of modality " + m.modality);
    }
    b.cells.push_back(draw_without_replacement(rng, m.cells(), cfg.points_per_signal));
  }
  return b;
}

Tensor<float> gather_cells(const Tensor<float>& values, std::span<const Index> cells) {
  Tensor<float> out(static_cast<Index>(cells.size()), values.cols());
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (cells[i] < 0 || cells[i] >= values.rows()) {
      throw DataError("cell " + std::to_string(cells[i]) + " is outside the grid of " + std::to_string(values.rows()) +
                      " cells");
    }
    out.row(static_cast<Index>(i)) = values.row(cells[i]);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Trainer
// ---------------------------------------------------------------------------

Trainer::Trainer(TrainState state, std::vector<SignalBundle> dataset) : state_(std::move(state)), data_(std::move(dataset)) {
  if (static_cast<Index>(data_.size()) != state_.data.size) {
    throw DataError("trainer: dataset has " + std::to_string(data_.size()) + " entries, state expects " +
                    std::to_string(state_.data.size));
  }
  for (const auto& b : data_) state_.data.check(b);
  for (std::size_t m = 0; m < state_.data.modalities.size(); ++m) {
    const auto coords = grid_coordinates<float>(state_.data.modalities[m].shape);
    embeddings_.push_back(fourier_embed(coords, state_.hyper.fields[m]));
  }
}

Batch Trainer::next_batch() const {
  auto rng = step_rng(state_.config.train.seed, state_.step, kStreamBatch);
  return sample_batch(rng, state_.data, state_.config.train);
}

void Trainer::maybe_refresh_neighbors() {
  const auto& cfg = state_.config.train;
  if (!cfg.loss.use_lle) return;
  if (state_.graph.empty() || state_.graph_step < 0 || state_.step - state_.graph_step >= cfg.neighbor_refresh_interval) {
    state_.graph = refresh_neighbors(state_.latents, cfg.k);
    state_.graph_step = state_.step;
  }
}

StepLosses Trainer::train_step(const Batch& batch) {
  const auto& cfg = state_.config.train;
  const std::size_t n_mod = state_.data.modalities.size();

  Tape<float> tape;
  auto hv = bind(tape, state_.hyper, true);
  auto table = tape.leaf(state_.latents);
  auto zb = gather_rows(table, std::span<const Index>(batch.indices));

  std::vector<Var<float>> embedded;
  for (std::size_t m = 0; m < n_mod; ++m) {
    embedded.push_back(tape.constant(gather_cells(embeddings_[m], batch.cells[m])));
  }
  BatchTargets<float> targets;
  for (Index idx : batch.indices) {
    std::vector<Tensor<float>> per;
    for (std::size_t m = 0; m < n_mod; ++m) per.push_back(gather_cells(data_[idx][m].values, batch.cells[m]));
    targets.push_back(std::move(per));
  }

  std::set<Index> touched(batch.indices.begin(), batch.indices.end());
  auto rec = reconstruction_loss(hv, zb, std::span<const Var<float>>(embedded), targets);
  Var<float> lle, iso;
  if (cfg.loss.use_lle) {
    if (state_.graph.empty()) throw NumericError("train_step: LLE enabled but no neighbor graph");
    std::vector<Var<float>> neighbors;
    for (Index idx : batch.indices) {
      const auto& nb = state_.graph.index.at(static_cast<std::size_t>(idx));
      touched.insert(nb.begin(), nb.end());
      neighbors.push_back(gather_rows(table, std::span<const Index>(nb)));
    }
    lle = lle_loss(hv, zb, std::span<const Var<float>>(neighbors), std::span<const Var<float>>(embedded), targets,
                   cfg.loss);
  }
  if (cfg.loss.use_iso) {
    const auto dist = signal_distances(targets);
    const auto pairs = select_iso_pairs(dist, batch.indices, cfg.loss.iso_quantile);
    iso = iso_loss(zb, std::span<const IsoPair>(pairs), cfg.loss.iso_alpha);
  }
  Var<float> total = rec;
  if (lle.valid()) total = total + lle;
  if (iso.valid()) total = total + iso;

  StepLosses out;
  out.rec = rec.item();
  out.lle = lle.valid() ? lle.item() : 0.0;
  out.iso = iso.valid() ? iso.item() : 0.0;
  out.total = total.item();
  if (!std::isfinite(out.total) || !std::isfinite(out.rec) || !std::isfinite(out.lle) || !std::isfinite(out.iso)) {
    char buf[256];
    std::snprintf(buf, sizeof(buf), "train_step: non-finite loss at step %lld (rec=%g lle=%g iso=%g)",
                  static_cast<long long>(state_.step), out.rec, out.lle, out.iso);
    throw NumericError(buf);
  }

  tape.backward(total);

  auto& adam = state_.adam;
  ++adam.t;
  std::size_t i = 0;
  std::vector<Var<float>> vars;
  hv.for_each([&](Var<float> v) { vars.push_back(v); });
  state_.hyper.for_each([&](const std::string& name, Tensor<float>& p) {
    adam_update(adam.config, adam.t, name, p, tape.grad(vars[i]), adam.moments[i]);
    ++i;
  });
  touched_.assign(touched.begin(), touched.end());
  adam_update_rows(adam.config, adam.t, "latents", state_.latents, tape.grad(table), adam.moments[i],
                   std::span<const Index>(touched_));
  ++state_.step;
  return out;
}

StepLosses Trainer::step() {
  maybe_refresh_neighbors();
  return train_step(next_batch());
}

void Trainer::run(std::int64_t until, std::ostream* metrics, const std::function<void(const TrainState&)>& on_checkpoint) {
  const auto interval = state_.config.train.checkpoint_interval;
  while (state_.step < until) {
    const StepLosses l = step();
    if (metrics) *metrics << metrics_line(state_.step, l) << '\n';
    if (on_checkpoint && interval > 0 && state_.step % interval == 0) on_checkpoint(state_);
  }
  if (metrics) metrics->flush();
}

std::string metrics_line(std::int64_t step, const StepLosses& l) {
  char buf[192];
  std::snprintf(buf, sizeof(buf), "%lld\t%.9g\t%.9g\t%.9g\t%.9g", static_cast<long long>(step), l.rec, l.lle, l.iso,
                l.total);
  return buf;
}

}  // namespace sigman
