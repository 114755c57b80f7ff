#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "palmline/tensor.hpp"

namespace palmline {

/// Reserved prefix for metadata tensors such as "meta.mean_rgb".
inline constexpr std::string_view kMetaPrefix = "meta.";

/// Insertion-ordered, uniquely named collection of tensors.
class WeightStore {
 public:
  struct Entry {
    std::string name;
    Tensor tensor;
  };

  /// Throws DuplicateName, or InvalidArgument for an empty or over-long name.
  void insert(std::string name, Tensor tensor);

  const Tensor* find(std::string_view name) const;
  /// Throws MissingParameter.
  const Tensor& at(std::string_view name) const;
  bool contains(std::string_view name) const { return find(name) != nullptr; }

  std::size_t size() const noexcept { return entries_.size(); }
  bool empty() const noexcept { return entries_.empty(); }
  auto begin() const noexcept { return entries_.begin(); }
  auto end() const noexcept { return entries_.end(); }

  friend bool operator==(const WeightStore& a, const WeightStore& b) noexcept;

 private:
  std::vector<Entry> entries_;
  std::unordered_map<std::string, std::size_t> index_;
};

// PTWT layout, little-endian:
//   "PTWT" | u16 version=1 | u16 flags=0 | u32 count
//   per tensor: u16 name_len | name | u8 dtype=0 | u8 rank | rank x u32 dims | f32 payload
inline constexpr std::uint16_t kContainerVersion = 1;
inline constexpr std::size_t kContainerHeaderSize = 12;

std::size_t serialized_size(const WeightStore& store);
std::vector<std::uint8_t> write_container(const WeightStore& store);
WeightStore read_container(std::span<const std::uint8_t> bytes);

/// Writes through a temporary file renamed into place.
void save_container(const WeightStore& store, const std::filesystem::path& path);
WeightStore load_container(const std::filesystem::path& path);

}  // namespace palmline
