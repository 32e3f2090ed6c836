#include "sigman/checkpoint.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>

#include "sigman/errors.hpp"

namespace fs = std::filesystem;

namespace sigman {

namespace {

constexpr char kMagic[4] = {'G', 'E', 'M', 'F'};

template <typename T>
void put_le(std::vector<std::uint8_t>& out, T v) {
  const auto* p = reinterpret_cast<const std::uint8_t*>(&v);
  out.insert(out.end(), p, p + sizeof(T));
}

class Reader {
 public:
  explicit Reader(const std::vector<std::uint8_t>& b) : b_(b) {}
  template <typename T>
  T get() {
    need(sizeof(T));
    T v;
    std::memcpy(&v, b_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }
  void need(std::size_t n) const {
    if (pos_ + n > b_.size()) {
      throw DataError("checkpoint: truncated, needed " + std::to_string(n) + " more bytes",
                      static_cast<std::int64_t>(pos_));
    }
  }
  const std::uint8_t* take(std::size_t n) {
    need(n);
    const auto* p = b_.data() + pos_;
    pos_ += n;
    return p;
  }
  std::size_t pos() const { return pos_; }
  bool done() const { return pos_ == b_.size(); }

 private:
  const std::vector<std::uint8_t>& b_;
  std::size_t pos_ = 0;
};

}  // namespace

void ArrayTable::put(std::string name, const Tensor<float>& t) {
  NamedArray a;
  a.name = std::move(name);
  a.extents = {static_cast<std::uint32_t>(t.rows()), static_cast<std::uint32_t>(t.cols())};
  a.data.assign(t.data(), t.data() + t.size());
  put_raw(std::move(a));
}

void ArrayTable::put_u64(std::string name, std::uint64_t v) {
  NamedArray a;
  a.name = std::move(name);
  a.extents = {4};
  for (int k = 0; k < 4; ++k) a.data.push_back(static_cast<float>((v >> (16 * k)) & 0xffffu));
  put_raw(std::move(a));
}

void ArrayTable::put_string(std::string name, std::string_view s) {
  NamedArray a;
  a.name = std::move(name);
  a.extents = {static_cast<std::uint32_t>(s.size())};
  for (unsigned char c : s) a.data.push_back(static_cast<float>(c));
  put_raw(std::move(a));
}

void ArrayTable::put_raw(NamedArray a) {
  if (has(a.name)) throw DataError("checkpoint: duplicate array '" + a.name + "'");
  arrays_.push_back(std::move(a));
}

bool ArrayTable::has(std::string_view name) const {
  return std::any_of(arrays_.begin(), arrays_.end(), [&](const NamedArray& a) { return a.name == name; });
}

const NamedArray& ArrayTable::at(std::string_view name) const {
  for (const auto& a : arrays_) {
    if (a.name == name) return a;
  }
  throw DataError("checkpoint: missing array '" + std::string(name) + "'");
}

Tensor<float> ArrayTable::tensor(std::string_view name) const {
  const auto& a = at(name);
  if (a.extents.size() != 2) throw DataError("checkpoint: array '" + a.name + "' is not rank 2");
  Tensor<float> t(a.extents[0], a.extents[1]);
  std::copy(a.data.begin(), a.data.end(), t.data());
  return t;
}

std::uint64_t ArrayTable::u64(std::string_view name) const {
  const auto& a = at(name);
  if (a.data.size() != 4) throw DataError("checkpoint: array '" + a.name + "' is not an integer");
  std::uint64_t v = 0;
  for (int k = 0; k < 4; ++k) v |= static_cast<std::uint64_t>(a.data[k]) << (16 * k);
  return v;
}

std::string ArrayTable::string(std::string_view name) const {
  const auto& a = at(name);
  std::string s;
  for (float f : a.data) s.push_back(static_cast<char>(static_cast<unsigned char>(f)));
  return s;
}

std::vector<std::uint8_t> ArrayTable::serialize() const {
  std::vector<std::uint8_t> out(kMagic, kMagic + 4);
  put_le<std::uint32_t>(out, kVersion);
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(arrays_.size()));
  for (const auto& a : arrays_) {
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(a.name.size()));
    out.insert(out.end(), a.name.begin(), a.name.end());
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(a.extents.size()));
    for (auto e : a.extents) put_le<std::uint32_t>(out, e);
    for (float f : a.data) put_le<float>(out, f);
  }
  return out;
}

ArrayTable ArrayTable::deserialize(const std::vector<std::uint8_t>& bytes) {
  Reader rd(bytes);
  const auto* magic = rd.take(4);
  if (std::memcmp(magic, kMagic, 4) != 0) throw DataError("checkpoint: bad magic", 0);
  const auto version = rd.get<std::uint32_t>();
  if (version != kVersion) throw DataError("checkpoint: unsupported version " + std::to_string(version), 4);
  const auto count = rd.get<std::uint32_t>();
  ArrayTable t;
  for (std::uint32_t i = 0; i < count; ++i) {
    NamedArray a;
    const auto name_len = rd.get<std::uint32_t>();
    const auto* name = rd.take(name_len);
    a.name.assign(reinterpret_cast<const char*>(name), name_len);
    const std::size_t rank_at = rd.pos();
    const auto rank = rd.get<std::uint32_t>();
    if (rank > 8) throw DataError("checkpoint: implausible rank " + std::to_string(rank), static_cast<std::int64_t>(rank_at));
    std::uint64_t n = 1;
    for (std::uint32_t r = 0; r < rank; ++r) {
      a.extents.push_back(rd.get<std::uint32_t>());
      n *= a.extents.back();
    }
    rd.need(n * 4);
    a.data.resize(n);
    std::memcpy(a.data.data(), rd.take(n * 4), n * 4);
    t.put_raw(std::move(a));
  }
  if (!rd.done()) throw DataError("checkpoint: trailing bytes", static_cast<std::int64_t>(rd.pos()));
  return t;
}

void ArrayTable::write(const fs::path& path) const {
  const auto bytes = serialize();
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("checkpoint: cannot write " + tmp.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw DataError("checkpoint: short write to " + tmp.string());
  }
  fs::rename(tmp, path);
}

ArrayTable ArrayTable::read(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("checkpoint: cannot open " + path.string());
  std::vector<std::uint8_t> bytes{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  return deserialize(bytes);
}

}  // namespace sigman
