#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <random>
#include <string>
#include <vector>

#include "sigman/adam.hpp"
#include "sigman/checkpoint.hpp"
#include "sigman/config.hpp"
#include "sigman/field.hpp"
#include "sigman/neighbors.hpp"
#include "sigman/signal.hpp"

namespace sigman {

struct ModalityInfo {
  std::string modality;
  std::vector<Index> shape;
  int channels = 1;
  ValueRange range;

  Index cells() const {
    Index n = 1;
    for (Index d : shape) n *= d;
    return n;
  }
};

/// Shape summary of a dataset; enough to rebuild the model and export
/// decoded signals without the data itself.
struct DatasetInfo {
  std::vector<ModalityInfo> modalities;
  Index size = 0;

  static DatasetInfo from(const std::vector<SignalBundle>& data);
  /// Throws DataError when `bundle` does not match this layout.
  void check(const SignalBundle& bundle) const;
};

/// Complete auto-decoder training state.
struct TrainState {
  RunConfig config;
  DatasetInfo data;
  HypernetParams<float> hyper;
  Tensor<float> latents;  // N x latent_dim
  /// Moments in HypernetParams::for_each order followed by the latent table.
  AdamState<float> adam;
  std::int64_t step = 0;
  NeighborGraph graph;
  std::int64_t graph_step = -1;  // step at which `graph` was computed, -1 if never

  static TrainState init(const RunConfig& config, const DatasetInfo& data);
};

ArrayTable to_table(const TrainState& s);
/// Rebuilds a state. When `expected` is given its hash must match the stored one.
TrainState from_table(const ArrayTable& t, const RunConfig* expected = nullptr);

void save_checkpoint(const TrainState& s, const std::filesystem::path& path);
TrainState restore_checkpoint(const std::filesystem::path& path, const RunConfig* expected = nullptr);

/// Signal rows plus the shared sampled cells per modality.
struct Batch {
  std::vector<Index> indices;
  std::vector<std::vector<Index>> cells;
};

struct StepLosses {
  double rec = 0.0;
  double lle = 0.0;
  double iso = 0.0;
  double total = 0.0;
};

/// Deterministic generator for (seed, step, stream).
std::mt19937_64 step_rng(std::uint64_t seed, std::int64_t step, std::uint64_t stream);

/// Draws batch indices without replacement, then, per modality, cells
/// without replacement; the cells are shared by every signal of the batch.
Batch sample_batch(std::mt19937_64& rng, const DatasetInfo& data, const TrainConfig& cfg);

/// Rows of `values` (cells x channels) at `cells`. Throws DataError on an
/// out-of-grid cell.
Tensor<float> gather_cells(const Tensor<float>& values, std::span<const Index> cells);

class Trainer {
 public:
  Trainer(TrainState state, std::vector<SignalBundle> dataset);

  const TrainState& state() const { return state_; }
  TrainState& state() { return state_; }
  const std::vector<SignalBundle>& dataset() const { return data_; }

  /// Batch for the current step.
  Batch next_batch() const;

  /// Recomputes the neighbor graph when LLE is enabled and the graph is
  /// missing or older than the refresh interval.
  void maybe_refresh_neighbors();

  /// One optimization step on `batch`; advances the step counter.
  StepLosses train_step(const Batch& batch);

  /// maybe_refresh_neighbors + next_batch + train_step.
  StepLosses step();

  /// Trains until `state().step == until`, appending one metrics line per
  /// step and calling `on_checkpoint` every checkpoint_interval steps.
  void run(std::int64_t until, std::ostream* metrics = nullptr,
           const std::function<void(const TrainState&)>& on_checkpoint = {});

  /// Latent rows updated by the last train_step (batch plus LLE neighbors).
  const std::vector<Index>& last_touched_rows() const { return touched_; }

 private:
  TrainState state_;
  std::vector<SignalBundle> data_;
  std::vector<Tensor<float>> embeddings_;  // full grid, per modality
  std::vector<Index> touched_;
};

/// "step\tl_rec\tl_lle\tl_iso\ttotal"
std::string metrics_line(std::int64_t step, const StepLosses& l);

}  // namespace sigman
