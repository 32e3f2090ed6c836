#include "sigman/signal.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

#include "sigman/errors.hpp"

namespace fs = std::filesystem;

namespace sigman {

static_assert(std::endian::native == std::endian::little, "codecs assume a little-endian host");

namespace {

std::vector<std::uint8_t> read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const fs::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw DataError("short write to " + path.string());
}

/// Bounds-checked little-endian reader that reports byte offsets.
class ByteReader {
 public:
  ByteReader(std::span<const std::uint8_t> bytes, std::string what) : bytes_(bytes), what_(std::move(what)) {}

  void need(std::size_t n) const {
    if (pos_ + n > bytes_.size()) {
      throw DataError(what_ + ": truncated, needed " + std::to_string(n) + " more bytes",
                      static_cast<std::int64_t>(pos_));
    }
  }
  template <typename T>
  T read() {
    need(sizeof(T));
    T v;
    std::memcpy(&v, bytes_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }
  std::string read_tag(std::size_t n) {
    need(n);
    std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), n);
    pos_ += n;
    return s;
  }
  std::span<const std::uint8_t> take(std::size_t n) {
    need(n);
    auto s = bytes_.subspan(pos_, n);
    pos_ += n;
    return s;
  }
  void skip(std::size_t n) { take(n); }
  std::size_t pos() const { return pos_; }
  std::size_t remaining() const { return bytes_.size() - pos_; }
  [[noreturn]] void fail(const std::string& msg, std::size_t at) const {
    throw DataError(what_ + ": " + msg, static_cast<std::int64_t>(at));
  }

 private:
  std::span<const std::uint8_t> bytes_;
  std::string what_;
  std::size_t pos_ = 0;
};

class ByteWriter {
 public:
  template <typename T>
  void put(T v) {
    const auto* p = reinterpret_cast<const std::uint8_t*>(&v);
    bytes.insert(bytes.end(), p, p + sizeof(T));
  }
  void put_tag(std::string_view s) { bytes.insert(bytes.end(), s.begin(), s.end()); }
  std::vector<std::uint8_t> bytes;
};

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

/// Float whose normalization reproduces `x` exactly, when one exists near
/// the direct inverse. Makes load -> export -> load exact for float grids.
float denormalize_exact(const ValueRange& r, float x) {
  const float guess = static_cast<float>(r.denormalize(x));
  float cand = guess;
  for (int k = 0; k < 4; ++k) {
    if (r.normalize(cand) == x) return cand;
    cand = std::nextafter(cand, std::numeric_limits<float>::infinity());
  }
  cand = guess;
  for (int k = 0; k < 4; ++k) {
    cand = std::nextafter(cand, -std::numeric_limits<float>::infinity());
    if (r.normalize(cand) == x) return cand;
  }
  return guess;
}

// PNM header token reader: skips whitespace and '#' comments.
std::string pnm_token(ByteReader& rd) {
  std::string tok;
  while (true) {
    if (rd.remaining() == 0) rd.fail("truncated header", rd.pos());
    const char c = static_cast<char>(rd.read<std::uint8_t>());
    if (c == '#') {
      while (rd.remaining() > 0 && rd.read<std::uint8_t>() != '\n') {
      }
      continue;
    }
    if (std::isspace(static_cast<unsigned char>(c))) {
      if (!tok.empty()) return tok;
      continue;
    }
    tok.push_back(c);
  }
}

Index pnm_number(ByteReader& rd) {
  const std::size_t at = rd.pos();
  const std::string tok = pnm_token(rd);
  if (tok.empty() || !std::all_of(tok.begin(), tok.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); })) {
    rd.fail("expected a number in header, got '" + tok + "'", at);
  }
  return std::stoll(tok);
}

void require_modality(const GridSignal& s, const char* tag, const char* fn) {
  if (s.modality != tag) throw DataError(std::string(fn) + ": signal modality is '" + s.modality + "', expected '" + tag + "'");
  s.validate();
}

}  // namespace

void GridSignal::validate() const {
  if (shape.empty()) throw DataError("signal: empty grid shape");
  for (Index d : shape) {
    if (d < 1) throw DataError("signal: non-positive grid extent");
  }
  if (channels < 1) throw DataError("signal: channel count must be >= 1");
  if (values.rows() != cells() || values.cols() != channels) {
    throw DataError("signal: values " + shape_str(values) + " do not match " + std::to_string(cells()) + " cells x " +
                    std::to_string(channels) + " channels");
  }
  if (!values.allFinite()) throw DataError("signal: non-finite value");
  if (values.size() > 0 && (values.maxCoeff() > 1.0f || values.minCoeff() < -1.0f)) {
    throw DataError("signal: value outside [-1, 1]");
  }
  if (!(range.hi > range.lo)) throw DataError("signal: empty value range");
}

Index Mask::count() const {
  return static_cast<Index>(std::count_if(observed.begin(), observed.end(), [](std::uint8_t v) { return v != 0; }));
}

std::vector<Index> Mask::observed_cells() const {
  std::vector<Index> out;
  for (std::size_t i = 0; i < observed.size(); ++i) {
    if (observed[i]) out.push_back(static_cast<Index>(i));
  }
  return out;
}

std::vector<Index> Mask::hidden_cells() const {
  std::vector<Index> out;
  for (std::size_t i = 0; i < observed.size(); ++i) {
    if (!observed[i]) out.push_back(static_cast<Index>(i));
  }
  return out;
}

// ---------------------------------------------------------------------------
// PNM
// ---------------------------------------------------------------------------

GridSignal load_image(const fs::path& path) {
  const auto bytes = read_file(path);
  ByteReader rd(bytes, path.string());
  const std::string magic = rd.read_tag(2);
  int channels = 0;
  if (magic == "P5") channels = 1;
  else if (magic == "P6") channels = 3;
  else rd.fail("not a binary PGM/PPM (magic '" + magic + "')", 0);
  const Index width = pnm_number(rd);
  const Index height = pnm_number(rd);
  const std::size_t maxval_at = rd.pos();
  const Index maxval = pnm_number(rd);
  if (maxval != 255) rd.fail("only 8-bit images (maxval 255) are supported", maxval_at);
  if (width < 1 || height < 1) rd.fail("empty image", 2);
  const auto n = static_cast<std::size_t>(width * height * channels);
  auto payload = rd.take(n);

  GridSignal s;
  s.modality = modality::kImage;
  s.shape = {height, width};
  s.channels = channels;
  s.range = {0.0, 255.0};
  s.values.resize(width * height, channels);
  for (std::size_t i = 0; i < n; ++i) s.values.data()[i] = s.range.normalize(payload[i]);
  return s;
}

void export_image(const GridSignal& s, const fs::path& path) {
  require_modality(s, modality::kImage, "export_image");
  if (s.rank() != 2 || (s.channels != 1 && s.channels != 3)) {
    throw DataError("export_image: need a 2-D grid with 1 or 3 channels");
  }
  std::ostringstream header;
  header << (s.channels == 1 ? "P5" : "P6") << '\n' << s.shape[1] << ' ' << s.shape[0] << "\n255\n";
  const std::string h = header.str();
  std::vector<std::uint8_t> bytes(h.begin(), h.end());
  for (Index i = 0; i < s.values.size(); ++i) {
    const double v = std::round(s.range.denormalize(s.values.data()[i]));
    bytes.push_back(static_cast<std::uint8_t>(std::clamp(v, 0.0, 255.0)));
  }
  write_file(path, bytes);
}

// ---------------------------------------------------------------------------
// WAV
// ---------------------------------------------------------------------------

GridSignal load_audio(const fs::path& path) {
  const auto bytes = read_file(path);
  ByteReader rd(bytes, path.string());
  if (rd.read_tag(4) != "RIFF") rd.fail("missing RIFF tag", 0);
  rd.read<std::uint32_t>();
  if (rd.read_tag(4) != "WAVE") rd.fail("missing WAVE tag", 8);
  bool have_fmt = false;
  std::span<const std::uint8_t> data;
  bool have_data = false;
  while (rd.remaining() > 0 && !have_data) {
    const std::size_t chunk_at = rd.pos();
    const std::string id = rd.read_tag(4);
    const auto size = rd.read<std::uint32_t>();
    if (id == "fmt ") {
      if (size < 16) rd.fail("fmt chunk too small", chunk_at);
      const std::size_t fmt_at = rd.pos();
      const auto format = rd.read<std::uint16_t>();
      const auto channels = rd.read<std::uint16_t>();
      rd.read<std::uint32_t>();  // sample rate
      rd.read<std::uint32_t>();  // byte rate
      rd.read<std::uint16_t>();  // block align
      const auto bits = rd.read<std::uint16_t>();
      if (format != 1) rd.fail("only PCM WAV is supported", fmt_at);
      if (channels != 1) rd.fail("only mono WAV is supported", fmt_at + 2);
      if (bits != 16) rd.fail("only 16-bit WAV is supported", fmt_at + 14);
      rd.skip(size - 16 + (size & 1));
      have_fmt = true;
    } else if (id == "data") {
      if (!have_fmt) rd.fail("data chunk before fmt chunk", chunk_at);
      if (size % 2 != 0) rd.fail("odd data chunk size", chunk_at + 4);
      data = rd.take(size);
      have_data = true;
    } else {
      rd.skip(size + (size & 1));
    }
  }
  if (!have_data) rd.fail("no data chunk", rd.pos());
  const Index n = static_cast<Index>(data.size() / 2);
  if (n < 1) rd.fail("empty data chunk", rd.pos());

  GridSignal s;
  s.modality = modality::kAudio;
  s.shape = {n};
  s.channels = 1;
  s.range = {-32768.0, 32768.0};
  s.values.resize(n, 1);
  for (Index i = 0; i < n; ++i) {
    std::int16_t v;
    std::memcpy(&v, data.data() + 2 * i, 2);
    s.values(i, 0) = static_cast<float>(v) / 32768.0f;
  }
  return s;
}

void export_audio(const GridSignal& s, const fs::path& path, std::uint32_t sample_rate) {
  require_modality(s, modality::kAudio, "export_audio");
  if (s.rank() != 1 || s.channels != 1) throw DataError("export_audio: need a 1-D single-channel grid");
  const auto n = static_cast<std::uint32_t>(s.cells());
  ByteWriter w;
  w.put_tag("RIFF");
  w.put<std::uint32_t>(36 + 2 * n);
  w.put_tag("WAVE");
  w.put_tag("fmt ");
  w.put<std::uint32_t>(16);
  w.put<std::uint16_t>(1);
  w.put<std::uint16_t>(1);
  w.put<std::uint32_t>(sample_rate);
  w.put<std::uint32_t>(sample_rate * 2);
  w.put<std::uint16_t>(2);
  w.put<std::uint16_t>(16);
  w.put_tag("data");
  w.put<std::uint32_t>(2 * n);
  for (Index i = 0; i < s.cells(); ++i) {
    const double v = std::round(s.range.denormalize(s.values(i, 0)));
    w.put<std::int16_t>(static_cast<std::int16_t>(std::clamp(v, -32768.0, 32767.0)));
  }
  write_file(path, w.bytes);
}

// ---------------------------------------------------------------------------
// Voxels
// ---------------------------------------------------------------------------

GridSignal load_voxels(const fs::path& path) {
  const auto bytes = read_file(path);
  ByteReader rd(bytes, path.string());
  if (rd.read_tag(4) != "GEMV") rd.fail("missing GEMV magic", 0);
  GridSignal s;
  s.modality = modality::kVoxels;
  for (int a = 0; a < 3; ++a) {
    const std::size_t at = rd.pos();
    const auto d = rd.read<std::uint32_t>();
    if (d == 0) rd.fail("zero extent", at);
    s.shape.push_back(static_cast<Index>(d));
  }
  s.channels = 1;
  s.range = {0.0, 1.0};
  const Index cells = s.cells();
  auto packed = rd.take(static_cast<std::size_t>((cells + 7) / 8));
  s.values.resize(cells, 1);
  for (Index i = 0; i < cells; ++i) {
    const bool on = (packed[static_cast<std::size_t>(i / 8)] >> (i % 8)) & 1u;
    s.values(i, 0) = on ? 1.0f : -1.0f;
  }
  return s;
}

void export_voxels(const GridSignal& s, const fs::path& path) {
  require_modality(s, modality::kVoxels, "export_voxels");
  if (s.rank() != 3 || s.channels != 1) throw DataError("export_voxels: need a 3-D single-channel grid");
  ByteWriter w;
  w.put_tag("GEMV");
  for (Index d : s.shape) w.put<std::uint32_t>(static_cast<std::uint32_t>(d));
  std::vector<std::uint8_t> packed(static_cast<std::size_t>((s.cells() + 7) / 8), 0);
  for (Index i = 0; i < s.cells(); ++i) {
    if (s.values(i, 0) > 0.0f) packed[static_cast<std::size_t>(i / 8)] |= static_cast<std::uint8_t>(1u << (i % 8));
  }
  w.bytes.insert(w.bytes.end(), packed.begin(), packed.end());
  write_file(path, w.bytes);
}

// ---------------------------------------------------------------------------
// Float grids
// ---------------------------------------------------------------------------

GridSignal load_float_grid(const fs::path& path) {
  const auto bytes = read_file(path);
  ByteReader rd(bytes, path.string());
  if (rd.read_tag(4) != "GEMG") rd.fail("missing GEMG magic", 0);
  const std::size_t rank_at = rd.pos();
  const auto rank = rd.read<std::uint32_t>();
  if (rank < 1 || rank > 8) rd.fail("unsupported rank " + std::to_string(rank), rank_at);
  GridSignal s;
  s.modality = modality::kGrid;
  for (std::uint32_t a = 0; a < rank; ++a) {
    const std::size_t at = rd.pos();
    const auto d = rd.read<std::uint32_t>();
    if (d == 0) rd.fail("zero extent", at);
    s.shape.push_back(static_cast<Index>(d));
  }
  const std::size_t ch_at = rd.pos();
  const auto channels = rd.read<std::uint32_t>();
  if (channels < 1) rd.fail("zero channels", ch_at);
  s.channels = static_cast<int>(channels);
  const Index count = s.cells() * s.channels;
  const std::size_t payload_at = rd.pos();
  auto payload = rd.take(static_cast<std::size_t>(count) * 4);
  const std::size_t range_at = rd.pos();
  const auto lo = rd.read<float>();
  const auto hi = rd.read<float>();
  if (!(hi > lo) || !std::isfinite(lo) || !std::isfinite(hi)) rd.fail("declared range is empty or non-finite", range_at);
  s.range = {lo, hi};
  s.values.resize(s.cells(), s.channels);
  for (Index i = 0; i < count; ++i) {
    float v;
    std::memcpy(&v, payload.data() + 4 * i, 4);
    if (!(v >= lo && v <= hi)) {
      rd.fail("value outside declared range", payload_at + static_cast<std::size_t>(4 * i));
    }
    s.values.data()[i] = std::clamp(s.range.normalize(v), -1.0f, 1.0f);
  }
  return s;
}

void export_float_grid(const GridSignal& s, const fs::path& path) {
  if (s.modality != modality::kGrid) throw DataError("export_float_grid: signal modality is '" + s.modality + "'");
  s.validate();
  ByteWriter w;
  w.put_tag("GEMG");
  w.put<std::uint32_t>(static_cast<std::uint32_t>(s.shape.size()));
  for (Index d : s.shape) w.put<std::uint32_t>(static_cast<std::uint32_t>(d));
  w.put<std::uint32_t>(static_cast<std::uint32_t>(s.channels));
  const float lo = static_cast<float>(s.range.lo);
  const float hi = static_cast<float>(s.range.hi);
  for (Index i = 0; i < s.values.size(); ++i) {
    w.put<float>(std::clamp(denormalize_exact(s.range, s.values.data()[i]), lo, hi));
  }
  w.put<float>(lo);
  w.put<float>(hi);
  write_file(path, w.bytes);
}

// ---------------------------------------------------------------------------
// Dispatch
// ---------------------------------------------------------------------------

std::string modality_for_extension(const std::string& ext) {
  const std::string e = lower(ext);
  if (e == ".pgm" || e == ".ppm") return modality::kImage;
  if (e == ".wav") return modality::kAudio;
  if (e == ".gemv") return modality::kVoxels;
  if (e == ".gemg") return modality::kGrid;
  return {};
}

std::string extension_for(const GridSignal& s) {
  if (s.modality == modality::kImage) return s.channels == 3 ? ".ppm" : ".pgm";
  if (s.modality == modality::kAudio) return ".wav";
  if (s.modality == modality::kVoxels) return ".gemv";
  if (s.modality == modality::kGrid) return ".gemg";
  throw DataError("unknown modality '" + s.modality + "'");
}

GridSignal load_signal(const fs::path& path) {
  const std::string m = modality_for_extension(path.extension().string());
  if (m == modality::kImage) return load_image(path);
  if (m == modality::kAudio) return load_audio(path);
  if (m == modality::kVoxels) return load_voxels(path);
  if (m == modality::kGrid) return load_float_grid(path);
  throw DataError("unrecognized signal file extension: " + path.string());
}

void export_signal(const GridSignal& s, const fs::path& path) {
  if (s.modality == modality::kImage) return export_image(s, path);
  if (s.modality == modality::kAudio) return export_audio(s, path);
  if (s.modality == modality::kVoxels) return export_voxels(s, path);
  if (s.modality == modality::kGrid) return export_float_grid(s, path);
  throw DataError("unknown modality '" + s.modality + "'");
}

Mask load_mask(const fs::path& path, std::span<const Index> shape) {
  const GridSignal s = load_signal(path);
  if (!std::equal(s.shape.begin(), s.shape.end(), shape.begin(), shape.end())) {
    throw DataError("mask " + path.string() + " does not match the signal grid");
  }
  Mask m;
  m.observed.resize(static_cast<std::size_t>(s.cells()));
  for (Index i = 0; i < s.cells(); ++i) m.observed[static_cast<std::size_t>(i)] = s.values(i, 0) > 0.0f ? 1 : 0;
  return m;
}

// ---------------------------------------------------------------------------
// Manifest
// ---------------------------------------------------------------------------

Manifest build_manifest(const fs::path& root, std::span<const std::string> modalities) {
  if (modalities.empty()) throw ConfigError("manifest: no modalities requested");
  if (!fs::is_directory(root)) throw DataError("manifest: not a directory: " + root.string());
  // stem -> modality index -> filename
  std::map<std::string, std::map<std::size_t, std::string>> by_stem;
  std::vector<std::string> names;
  for (const auto& e : fs::directory_iterator(root)) {
    if (e.is_regular_file()) names.push_back(e.path().filename().string());
  }
  std::sort(names.begin(), names.end());
  for (const auto& name : names) {
    const fs::path p(name);
    const std::string m = modality_for_extension(p.extension().string());
    for (std::size_t k = 0; k < modalities.size(); ++k) {
      if (m == modalities[k]) {
        auto& slot = by_stem[p.stem().string()];
        if (slot.count(k)) throw DataError("manifest: stem '" + p.stem().string() + "' has two " + m + " files");
        slot[k] = name;
      }
    }
  }
  if (by_stem.empty()) throw DataError("no entries");

  Manifest out;
  out.root = fs::absolute(root);
  out.modalities.assign(modalities.begin(), modalities.end());
  std::vector<std::string> missing;
  for (const auto& [stem, files] : by_stem) {
    if (files.size() != modalities.size()) {
      for (std::size_t k = 0; k < modalities.size(); ++k) {
        if (!files.count(k)) missing.push_back(stem + " (" + modalities[k] + ")");
      }
      continue;
    }
    ManifestEntry entry;
    entry.id = static_cast<Index>(out.entries.size());
    entry.stem = stem;
    for (std::size_t k = 0; k < modalities.size(); ++k) entry.paths.push_back(files.at(k));
    out.entries.push_back(std::move(entry));
  }
  if (!missing.empty()) {
    std::string msg = "manifest: incomplete bundle for stem";
    for (const auto& s : missing) msg += " " + s;
    throw DataError(msg);
  }

  // Shape consistency and value ranges.
  out.ranges.assign(modalities.size(), ValueRange{0.0, 0.0});
  for (std::size_t k = 0; k < modalities.size(); ++k) {
    std::map<std::string, std::vector<std::string>> shapes;
    bool first = true;
    for (const auto& entry : out.entries) {
      const GridSignal s = load_signal(out.root / entry.paths[k]);
      std::string key;
      for (Index d : s.shape) key += std::to_string(d) + "x";
      key += std::to_string(s.channels) + "ch";
      shapes[key].push_back(entry.paths[k]);
      if (first) {
        out.ranges[k] = s.range;
        first = false;
      } else {
        out.ranges[k].lo = std::min(out.ranges[k].lo, s.range.lo);
        out.ranges[k].hi = std::max(out.ranges[k].hi, s.range.hi);
      }
    }
    if (shapes.size() > 1) {
      std::string msg = "manifest: mixed shapes for modality " + modalities[k] + ":";
      for (const auto& [key, files] : shapes) {
        msg += " " + key + " {";
        for (std::size_t i = 0; i < files.size(); ++i) msg += (i ? "," : "") + files[i];
        msg += "}";
      }
      throw DataError(msg);
    }
  }
  return out;
}

void write_manifest(const Manifest& m, const fs::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out.precision(17);
  out << "# sigman manifest v1\n";
  out << "# root\t" << m.root.string() << '\n';
  for (std::size_t k = 0; k < m.modalities.size(); ++k) {
    out << "# range\t" << m.modalities[k] << '\t' << m.ranges[k].lo << '\t' << m.ranges[k].hi << '\n';
  }
  for (const auto& e : m.entries) {
    for (std::size_t k = 0; k < m.modalities.size(); ++k) {
      out << e.id << '\t' << m.modalities[k] << '\t' << e.paths[k] << '\n';
    }
  }
}

namespace {

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto tab = line.find('\t', start);
    out.push_back(line.substr(start, tab == std::string::npos ? std::string::npos : tab - start));
    if (tab == std::string::npos) break;
    start = tab + 1;
  }
  return out;
}

}  // namespace

Manifest read_manifest(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open manifest " + path.string());
  Manifest m;
  std::string line;
  std::int64_t offset = 0;
  bool have_root = false;
  while (std::getline(in, line)) {
    const std::int64_t at = offset;
    offset += static_cast<std::int64_t>(line.size()) + 1;
    if (line.empty()) continue;
    const auto f = split_tabs(line);
    if (line[0] == '#') {
      if (f[0] == "# root" && f.size() == 2) {
        m.root = f[1];
        have_root = true;
      } else if (f[0] == "# range" && f.size() == 4) {
        m.modalities.push_back(f[1]);
        m.ranges.push_back({std::stod(f[2]), std::stod(f[3])});
      }
      continue;
    }
    if (f.size() != 3) throw DataError("manifest: expected id<TAB>modality<TAB>path", at);
    Index id = 0;
    try {
      id = std::stoll(f[0]);
    } catch (const std::exception&) {
      throw DataError("manifest: bad id '" + f[0] + "'", at);
    }
    const auto mod = std::find(m.modalities.begin(), m.modalities.end(), f[1]);
    if (mod == m.modalities.end()) throw DataError("manifest: modality '" + f[1] + "' has no range header", at);
    const auto k = static_cast<std::size_t>(mod - m.modalities.begin());
    if (id == static_cast<Index>(m.entries.size())) {
      ManifestEntry e;
      e.id = id;
      e.paths.resize(m.modalities.size());
      m.entries.push_back(std::move(e));
    } else if (id != static_cast<Index>(m.entries.size()) - 1) {
      throw DataError("manifest: ids must be dense and ascending", at);
    }
    m.entries.back().paths[k] = f[2];
    m.entries.back().stem = fs::path(f[2]).stem().string();
  }
  if (!have_root) throw DataError("manifest: missing root header");
  if (m.entries.empty()) throw DataError("no entries");
  for (const auto& e : m.entries) {
    for (std::size_t k = 0; k < m.modalities.size(); ++k) {
      if (e.paths[k].empty()) throw DataError("manifest: entry " + std::to_string(e.id) + " lacks " + m.modalities[k]);
    }
  }
  return m;
}

std::vector<SignalBundle> load_dataset(const Manifest& m) {
  std::vector<SignalBundle> out;
  out.reserve(m.entries.size());
  for (const auto& e : m.entries) {
    SignalBundle b;
    for (std::size_t k = 0; k < m.modalities.size(); ++k) {
      b.push_back(load_signal(m.root / e.paths[k]));
      if (b.back().modality != m.modalities[k]) throw DataError("dataset: modality mismatch for " + e.paths[k]);
    }
    if (!out.empty()) {
      for (std::size_t k = 0; k < b.size(); ++k) {
        if (b[k].shape != out[0][k].shape || b[k].channels != out[0][k].channels) {
          throw DataError("dataset: " + e.paths[k] + " has a different shape from the first entry");
        }
      }
    }
    out.push_back(std::move(b));
  }
  return out;
}

}  // namespace sigman
