#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "sigman/tensor.hpp"

namespace sigman {

namespace modality {
inline constexpr const char* kImage = "image";
inline constexpr const char* kAudio = "audio";
inline constexpr const char* kVoxels = "voxels";
inline constexpr const char* kGrid = "grid";
}  // namespace modality

/// Stored values in [lo, hi] map affinely onto [-1, 1].
struct ValueRange {
  double lo = -1.0;
  double hi = 1.0;

  float normalize(double v) const { return static_cast<float>((v - lo) / (hi - lo) * 2.0 - 1.0); }
  double denormalize(float x) const { return (static_cast<double>(x) + 1.0) * 0.5 * (hi - lo) + lo; }
  bool operator==(const ValueRange&) const = default;
};

/// A signal sampled on a regular grid. `values` holds one row per cell in
/// row-major cell order and one column per channel, normalized to [-1, 1].
struct GridSignal {
  std::string modality;
  std::vector<Index> shape;
  int channels = 1;
  Tensor<float> values;
  ValueRange range;

  Index cells() const {
    Index n = 1;
    for (Index d : shape) n *= d;
    return n;
  }
  int rank() const { return static_cast<int>(shape.size()); }

  /// Throws DataError unless the invariants hold.
  void validate() const;
};

/// One dataset entry: a signal per modality, all sharing one latent.
using SignalBundle = std::vector<GridSignal>;

/// Observed-cell mask congruent to a signal's grid.
struct Mask {
  std::vector<std::uint8_t> observed;

  static Mask full(Index cells) { return {std::vector<std::uint8_t>(static_cast<std::size_t>(cells), 1)}; }
  static Mask none(Index cells) { return {std::vector<std::uint8_t>(static_cast<std::size_t>(cells), 0)}; }
  Index count() const;
  std::vector<Index> observed_cells() const;
  std::vector<Index> hidden_cells() const;
};

// Codecs. All multi-byte fields are little-endian.
GridSignal load_image(const std::filesystem::path& path);       // P5 / P6, maxval 255
GridSignal load_audio(const std::filesystem::path& path);       // WAV PCM16 mono
GridSignal load_voxels(const std::filesystem::path& path);      // "GEMV" bit-packed occupancy
GridSignal load_float_grid(const std::filesystem::path& path);  // "GEMG" f32 grid

void export_image(const GridSignal& s, const std::filesystem::path& path);
void export_audio(const GridSignal& s, const std::filesystem::path& path, std::uint32_t sample_rate = 16000);
void export_voxels(const GridSignal& s, const std::filesystem::path& path);
void export_float_grid(const GridSignal& s, const std::filesystem::path& path);

/// Dispatch on file extension (.pgm/.ppm, .wav, .gemv, .gemg).
GridSignal load_signal(const std::filesystem::path& path);
/// Dispatch on the signal's modality tag.
void export_signal(const GridSignal& s, const std::filesystem::path& path);
/// File extension used by export_signal for a signal.
std::string extension_for(const GridSignal& s);
/// Modality tag a file extension loads as; empty when unknown.
std::string modality_for_extension(const std::string& ext);

/// Loads a mask file with any signal codec: a cell is observed when its
/// normalized value (first channel) is > 0. Grid shape must match `shape`.
Mask load_mask(const std::filesystem::path& path, std::span<const Index> shape);

// ---------------------------------------------------------------------------
// Manifest
// ---------------------------------------------------------------------------

struct ManifestEntry {
  Index id = 0;
  std::string stem;
  std::vector<std::string> paths;  // one per modality, relative to root
};

struct Manifest {
  std::filesystem::path root;
  std::vector<std::string> modalities;
  std::vector<ValueRange> ranges;  // per modality, union over entries
  std::vector<ManifestEntry> entries;
};

/// Scans `root` (non-recursively), pairs files of the requested modalities by
/// stem and orders entries lexicographically by stem. Enforces identical
/// shape and channel count within each modality.
Manifest build_manifest(const std::filesystem::path& root, std::span<const std::string> modalities);

void write_manifest(const Manifest& m, const std::filesystem::path& path);
Manifest read_manifest(const std::filesystem::path& path);

/// Loads every entry, in manifest order.
std::vector<SignalBundle> load_dataset(const Manifest& m);

}  // namespace sigman
