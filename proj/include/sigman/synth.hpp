#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <vector>

#include "sigman/signal.hpp"

namespace sigman {

/// Two superposed plane waves. Amplitudes sum to at most 0.9.
struct SinusoidParams {
  double fx[2] = {1.0, 0.0};
  double fy[2] = {0.0, 1.0};
  double phase[2] = {0.0, 0.0};
  double amp[2] = {0.45, 0.45};
};

SinusoidParams random_sinusoid(std::mt19937_64& rng);

/// Image on an h x w grid over [-1, 1]^2.
GridSignal sinusoid_image(const SinusoidParams& p, Index h, Index w);

/// Waveform of `length` samples driven by the same parameters (the x
/// frequencies, at twice the rate).
GridSignal sinusoid_wave(const SinusoidParams& p, Index length);

/// `count` single-image bundles of side x side.
std::vector<SignalBundle> sinusoid_images(Index count, Index side, std::uint64_t seed);

/// `count` bundles of an 8x8 image and a 64-sample waveform sharing parameters.
std::vector<SignalBundle> sinusoid_pairs(Index count, std::uint64_t seed);

/// Writes bundle i as "s%04d.<ext>" per modality into `dir`.
void write_dataset(const std::vector<SignalBundle>& data, const std::filesystem::path& dir);

}  // namespace sigman
