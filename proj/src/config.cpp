#include "sigman/config.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>
#include <vector>

#include "sigman/errors.hpp"

namespace sigman {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

template <typename T>
T parse_int(const std::string& key, const std::string& v) {
  T out{};
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) throw ConfigError("config: '" + key + "' expects an integer, got '" + v + "'");
  return out;
}

double parse_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw ConfigError("config: '" + key + "' expects a number, got '" + v + "'");
  }
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "on" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "off" || v == "no") return false;
  throw ConfigError("config: '" + key + "' expects a boolean, got '" + v + "'");
}

struct Key {
  const char* name;
  bool hashed;
  std::function<std::string(const RunConfig&)> get;
  std::function<void(RunConfig&, const std::string&)> set;
};

#define SIGMAN_INT_KEY(NAME, FIELD, HASHED)                                                         \
  Key {                                                                                              \
    NAME, HASHED, [](const RunConfig& c) { return std::to_string(c.FIELD); },                       \
        [](RunConfig& c, const std::string& v) { c.FIELD = parse_int<decltype(c.FIELD)>(NAME, v); } \
  }
#define SIGMAN_DOUBLE_KEY(NAME, FIELD, HASHED)                                                                 \
  Key {                                                                                                         \
    NAME, HASHED, [](const RunConfig& c) { return fmt_double(c.FIELD); },                                      \
        [](RunConfig& c, const std::string& v) { c.FIELD = parse_double(NAME, v); }                            \
  }
#define SIGMAN_BOOL_KEY(NAME, FIELD, HASHED)                                                                   \
  Key {                                                                                                         \
    NAME, HASHED, [](const RunConfig& c) { return std::string(c.FIELD ? "true" : "false"); },                  \
        [](RunConfig& c, const std::string& v) { c.FIELD = parse_bool(NAME, v); }                              \
  }
#define SIGMAN_STRING_KEY(NAME, FIELD, HASHED)                                                                 \
  Key {                                                                                                         \
    NAME, HASHED, [](const RunConfig& c) { return c.FIELD; }, [](RunConfig& c, const std::string& v) { c.FIELD = v; } \
  }

const std::vector<Key>& keys() {
  static const std::vector<Key> table = {
      SIGMAN_STRING_KEY("manifest", manifest, false),
      SIGMAN_STRING_KEY("checkpoint_dir", checkpoint_dir, false),
      SIGMAN_STRING_KEY("out_dir", out_dir, false),
      SIGMAN_INT_KEY("latent_dim", hyper.latent_dim, true),
      SIGMAN_INT_KEY("hyper_hidden", hyper.trunk_hidden, true),
      SIGMAN_INT_KEY("hyper_layers", hyper.trunk_layers, true),
      SIGMAN_INT_KEY("rank", hyper.rank, true),
      SIGMAN_INT_KEY("embed_dim", embed_dim, true),
      SIGMAN_INT_KEY("hidden_dim", hidden_dim, true),
      SIGMAN_INT_KEY("n_hidden_layers", n_hidden_layers, true),
      SIGMAN_INT_KEY("batch_size", train.batch_size, true),
      SIGMAN_INT_KEY("points_per_signal", train.points_per_signal, true),
      SIGMAN_DOUBLE_KEY("lr", train.lr, true),
      SIGMAN_INT_KEY("steps", train.steps, false),
      SIGMAN_INT_KEY("k", train.k, true),
      SIGMAN_INT_KEY("seed", train.seed, true),
      SIGMAN_INT_KEY("neighbor_refresh_interval", train.neighbor_refresh_interval, true),
      SIGMAN_INT_KEY("checkpoint_interval", train.checkpoint_interval, false),
      SIGMAN_DOUBLE_KEY("latent_init_std", train.latent_init_std, true),
      SIGMAN_BOOL_KEY("use_lle", train.loss.use_lle, true),
      SIGMAN_BOOL_KEY("use_iso", train.loss.use_iso, true),
      SIGMAN_DOUBLE_KEY("lle_reg", train.loss.lle.reg, true),
      SIGMAN_INT_KEY("lle_refine_steps", train.loss.lle.refine_steps, true),
      SIGMAN_DOUBLE_KEY("lle_penalty", train.loss.negative_weight_penalty, true),
      SIGMAN_DOUBLE_KEY("alpha", train.loss.iso_alpha, true),
      SIGMAN_DOUBLE_KEY("iso_quantile", train.loss.iso_quantile, true),
  };
  return table;
}

constexpr std::string_view kEmbedPrefix = "embed_dim.";

}  // namespace

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

void RunConfig::set(const std::string& key, const std::string& value) {
  if (key.rfind(kEmbedPrefix, 0) == 0 && key.size() > kEmbedPrefix.size()) {
    embed_dim_overrides[key.substr(kEmbedPrefix.size())] = parse_int<int>(key, value);
    return;
  }
  for (const auto& k : keys()) {
    if (key == k.name) {
      k.set(*this, value);
      return;
    }
  }
  throw ConfigError("config: unknown key '" + key + "'");
}

RunConfig RunConfig::parse(std::string_view text) {
  RunConfig cfg;
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    const std::string body = trim(hash == std::string::npos ? line : line.substr(0, hash));
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) throw ConfigError("config: line " + std::to_string(lineno) + ": expected key = value");
    cfg.set(trim(body.substr(0, eq)), trim(body.substr(eq + 1)));
  }
  return cfg;
}

RunConfig RunConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

std::string RunConfig::to_text() const {
  std::vector<std::pair<std::string, std::string>> kv;
  for (const auto& k : keys()) kv.emplace_back(k.name, k.get(*this));
  for (const auto& [m, d] : embed_dim_overrides) kv.emplace_back(std::string(kEmbedPrefix) + m, std::to_string(d));
  std::sort(kv.begin(), kv.end());
  std::string out;
  for (const auto& [k, v] : kv) out += k + " = " + v + "\n";
  return out;
}

std::uint64_t RunConfig::hash() const {
  std::string canon;
  for (const auto& k : keys()) {
    if (k.hashed) canon += std::string(k.name) + "=" + k.get(*this) + "\n";
  }
  for (const auto& [m, d] : embed_dim_overrides) canon += std::string(kEmbedPrefix) + m + "=" + std::to_string(d) + "\n";
  return fnv1a64(canon);
}

FieldArch RunConfig::field_arch(const std::string& modality, int coord_dim, int out_dim) const {
  FieldArch a;
  a.coord_dim = coord_dim;
  const auto it = embed_dim_overrides.find(modality);
  a.embed_dim = it == embed_dim_overrides.end() ? embed_dim : it->second;
  a.n_hidden_layers = n_hidden_layers;
  a.hidden_dim = hidden_dim;
  a.out_dim = out_dim;
  a.validate();
  return a;
}

void RunConfig::validate() const {
  hyper.validate();
  const auto& t = train;
  if (t.batch_size < 1) throw ConfigError("config: batch_size must be >= 1");
  if (t.points_per_signal < 1) throw ConfigError("config: points_per_signal must be >= 1");
  if (!(t.lr > 0.0)) throw ConfigError("config: lr must be > 0");
  if (t.steps < 0) throw ConfigError("config: steps must be >= 0");
  if (t.k < 1) throw ConfigError("config: k must be >= 1");
  if (t.neighbor_refresh_interval < 1) throw ConfigError("config: neighbor_refresh_interval must be >= 1");
  if (t.checkpoint_interval < 0) throw ConfigError("config: checkpoint_interval must be >= 0");
  if (!(t.latent_init_std >= 0.0)) throw ConfigError("config: latent_init_std must be >= 0");
  if (!(t.loss.lle.reg > 0.0)) throw ConfigError("config: lle_reg must be > 0");
  if (t.loss.lle.refine_steps < 0) throw ConfigError("config: lle_refine_steps must be >= 0");
  if (!(t.loss.iso_quantile > 0.0 && t.loss.iso_quantile <= 1.0)) throw ConfigError("config: iso_quantile must be in (0, 1]");
}

}  // namespace sigman
