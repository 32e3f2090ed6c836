#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "sigman/tensor.hpp"

namespace sigman {

/// One named f32 array of the checkpoint container.
struct NamedArray {
  std::string name;
  std::vector<std::uint32_t> extents;
  std::vector<float> data;
};

/// Ordered table of named arrays, serialized as
///   "GEMF" | u32 version | u32 count |
///   count x (u32 name_len | name | u32 rank | rank x u32 extent | f32 payload)
/// All fields little-endian. Integers and strings that are not naturally
/// float data are stored as exact small-integer floats (16-bit chunks and
/// bytes respectively).
class ArrayTable {
 public:
  static constexpr std::uint32_t kVersion = 1;

  void put(std::string name, const Tensor<float>& t);
  void put_u64(std::string name, std::uint64_t v);
  void put_i64(std::string name, std::int64_t v) { put_u64(std::move(name), static_cast<std::uint64_t>(v)); }
  void put_string(std::string name, std::string_view s);
  void put_raw(NamedArray a);

  bool has(std::string_view name) const;
  const NamedArray& at(std::string_view name) const;
  Tensor<float> tensor(std::string_view name) const;
  std::uint64_t u64(std::string_view name) const;
  std::int64_t i64(std::string_view name) const { return static_cast<std::int64_t>(u64(name)); }
  std::string string(std::string_view name) const;

  const std::vector<NamedArray>& arrays() const { return arrays_; }

  std::vector<std::uint8_t> serialize() const;
  static ArrayTable deserialize(const std::vector<std::uint8_t>& bytes);

  void write(const std::filesystem::path& path) const;
  static ArrayTable read(const std::filesystem::path& path);

 private:
  std::vector<NamedArray> arrays_;
};

}  // namespace sigman
