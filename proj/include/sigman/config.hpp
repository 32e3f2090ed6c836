#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>

#include "sigman/field.hpp"
#include "sigman/losses.hpp"

namespace sigman {

struct TrainConfig {
  Index batch_size = 128;
  Index points_per_signal = 1024;
  double lr = 1e-4;
  std::int64_t steps = 1000;
  Index k = 10;  // LLE neighbors
  std::uint64_t seed = 0;
  std::int64_t neighbor_refresh_interval = 100;
  std::int64_t checkpoint_interval = 0;  // 0: only at the end
  double latent_init_std = 0.01;
  LossConfig loss;
};

/// Everything a run needs, parsed from flat `key = value` text.
struct RunConfig {
  std::string manifest;
  std::string checkpoint_dir = "checkpoints";
  std::string out_dir = "out";

  HyperArch hyper;
  int embed_dim = 512;
  int hidden_dim = 512;
  int n_hidden_layers = 3;
  std::map<std::string, int> embed_dim_overrides;  // key "embed_dim.<modality>"

  TrainConfig train;

  /// Parses `key = value` lines; '#' starts a comment. Unknown keys and
  /// malformed values throw ConfigError.
  static RunConfig parse(std::string_view text);
  static RunConfig load(const std::string& path);

  /// Sets one key from its textual value.
  void set(const std::string& key, const std::string& value);

  /// Canonical, fully resolved `key = value` text (sorted keys).
  std::string to_text() const;

  /// FNV-1a hash of the canonical text, excluding keys that may legitimately
  /// change across a resume (steps, checkpoint interval, paths).
  std::uint64_t hash() const;

  /// Field architecture for a modality of the given grid rank and channels.
  FieldArch field_arch(const std::string& modality, int coord_dim, int out_dim) const;

  void validate() const;
};

std::uint64_t fnv1a64(std::string_view bytes);

}  // namespace sigman
