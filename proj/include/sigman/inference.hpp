#pragma once

#include <cstdint>
#include <ostream>
#include <vector>

#include "sigman/signal.hpp"
#include "sigman/trainer.hpp"

namespace sigman {

/// What is known about one modality of a signal to be fitted. An absent
/// modality contributes nothing to the objective.
struct Observed {
  bool present = false;
  GridSignal signal;
  Mask mask;
};

using Observation = std::vector<Observed>;

/// Every modality present, every cell observed.
Observation observe(const SignalBundle& bundle);

struct FitOptions {
  int iters = 500;
  double lr = 1e-2;
  bool use_lle = false;
};

/// Adam on a single latent against the frozen model, from `init` (zeros when
/// null). Only observed cells enter the loss. Throws DataError when nothing
/// is observed or the observation does not match the model's layout.
Tensor<float> fit_latent(const TrainState& model, const Observation& obs, const FitOptions& opts,
                         const Tensor<float>* init = nullptr);

/// (1 - t) * a + t * b. Throws ConfigError unless t is in [0, 1].
Tensor<float> interpolate(const Tensor<float>& a, const Tensor<float>& b, double t);

/// Full-grid decode of one latent, one cells x channels tensor per modality,
/// unclamped.
std::vector<Tensor<float>> decode_raw(const TrainState& model, const Tensor<float>& z);

/// decode_raw clamped to [-1, 1] and wrapped as signals of the model layout.
SignalBundle decode_signals(const TrainState& model, const Tensor<float>& z);

/// Per-modality-summed MSE between the decode of `z` and `bundle`.
double reconstruction_mse(const TrainState& model, const Tensor<float>& z, const SignalBundle& bundle);

/// 10 log10(4 / mse); +inf when mse == 0.
double psnr(double mse);

/// Masked completion: `samples` fits with the LLE term from random
/// initializations drawn from `seed`, each decoded on the full grid.
struct Completion {
  Tensor<float> latent;
  SignalBundle signals;
};
std::vector<Completion> complete(const TrainState& model, const Observation& obs, int samples, std::uint64_t seed,
                                 FitOptions opts = {});

struct GenSample {
  Index anchor = 0;
  Index neighbor = 0;
  double alpha = 0.0;
  double beta = 0.0;
  Tensor<float> latent;     // projected latent
  Eigen::VectorXd weights;  // over {anchor} followed by its neighbors
  double residual = 0.0;    // distance of `latent` to the region's affine hull
};

/// 0.1 x mean stored neighbor distance.
double default_beta(const TrainState& model);

/// Samples around training latents: anchor and neighbor uniform, alpha
/// uniform in [0, 1], isotropic noise of scale `beta`, then projection onto
/// the anchor's region with negative weights clipped.
std::vector<GenSample> generate(const TrainState& model, std::uint64_t seed, int count, double beta);

/// "sample_id\tanchor\tneighbor\talpha\tbeta" lines.
void write_generation_manifest(const std::vector<GenSample>& samples, std::ostream& out);

}  // namespace sigman
