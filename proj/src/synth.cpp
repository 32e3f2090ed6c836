#include "sigman/synth.hpp"

#include <cmath>
#include <cstdio>
#include <numbers>

#include "sigman/errors.hpp"
#include "sigman/field.hpp"

namespace sigman {

SinusoidParams random_sinusoid(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> freq(0.25, 1.5);
  std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
  std::uniform_real_distribution<double> share(0.3, 0.7);
  SinusoidParams p;
  for (int c = 0; c < 2; ++c) {
    p.fx[c] = freq(rng);
    p.fy[c] = freq(rng);
    p.phase[c] = phase(rng);
  }
  const double s = share(rng);
  p.amp[0] = 0.9 * s;
  p.amp[1] = 0.9 * (1.0 - s);
  return p;
}

GridSignal sinusoid_image(const SinusoidParams& p, Index h, Index w) {
  GridSignal s;
  s.modality = modality::kImage;
  s.shape = {h, w};
  s.range = {0.0, 255.0};
  s.values.resize(h * w, 1);
  for (Index r = 0; r < h; ++r) {
    const double y = axis_coordinate(r, h);
    for (Index c = 0; c < w; ++c) {
      const double x = axis_coordinate(c, w);
      double v = 0.0;
      for (int k = 0; k < 2; ++k) v += p.amp[k] * std::sin(std::numbers::pi * (p.fx[k] * x + p.fy[k] * y) + p.phase[k]);
      s.values(r * w + c, 0) = static_cast<float>(v);
    }
  }
  return s;
}

GridSignal sinusoid_wave(const SinusoidParams& p, Index length) {
  GridSignal s;
  s.modality = modality::kAudio;
  s.shape = {length};
  s.range = {-32768.0, 32768.0};
  s.values.resize(length, 1);
  for (Index i = 0; i < length; ++i) {
    const double t = axis_coordinate(i, length);
    double v = 0.0;
    for (int k = 0; k < 2; ++k) v += p.amp[k] * std::sin(std::numbers::pi * 2.0 * p.fx[k] * t + p.phase[k]);
    s.values(i, 0) = static_cast<float>(v);
  }
  return s;
}

std::vector<SignalBundle> sinusoid_images(Index count, Index side, std::uint64_t seed) {
  if (count < 1 || side < 1) throw ConfigError("synth: count and side must be >= 1");
  std::mt19937_64 rng(seed);
  std::vector<SignalBundle> out;
  for (Index i = 0; i < count; ++i) out.push_back({sinusoid_image(random_sinusoid(rng), side, side)});
  return out;
}

std::vector<SignalBundle> sinusoid_pairs(Index count, std::uint64_t seed) {
  if (count < 1) throw ConfigError("synth: count must be >= 1");
  std::mt19937_64 rng(seed);
  std::vector<SignalBundle> out;
  for (Index i = 0; i < count; ++i) {
    const auto p = random_sinusoid(rng);
    out.push_back({sinusoid_image(p, 8, 8), sinusoid_wave(p, 64)});
  }
  return out;
}

void write_dataset(const std::vector<SignalBundle>& data, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  for (std::size_t i = 0; i < data.size(); ++i) {
    char stem[32];
    std::snprintf(stem, sizeof(stem), "s%04zu", i);
    for (const auto& s : data[i]) export_signal(s, dir / (std::string(stem) + extension_for(s)));
  }
}

}  // namespace sigman
