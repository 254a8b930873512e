#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace dsd {

/// Dense row-major float32 array of rank 1..5.
///
/// Every extent is positive and the payload length equals the product of
/// the extents. The on-disk container is
///
///   "DMT1" | u8 ndim | ndim x u32 LE extents | f32 LE payload
///
/// so a file holds exactly 5 + 4*ndim + 4*numel bytes.
class TensorMap {
 public:
  static constexpr std::size_t kMaxRank = 5;

  TensorMap() = default;
  TensorMap(std::vector<std::uint32_t> dims, std::vector<float> data);

  static TensorMap zeros(std::vector<std::uint32_t> dims);

  const std::vector<std::uint32_t>& dims() const { return dims_; }
  std::size_t ndim() const { return dims_.size(); }
  std::size_t numel() const { return data_.size(); }
  std::uint32_t dim(std::size_t i) const { return dims_.at(i); }

  std::span<const float> data() const { return data_; }
  std::span<float> data() { return data_; }

  float at(std::size_t i, std::size_t j) const { return data_[i * dims_[1] + j]; }
  float& at(std::size_t i, std::size_t j) { return data_[i * dims_[1] + j]; }
  float at(std::size_t i, std::size_t j, std::size_t k) const {
    return data_[(i * dims_[1] + j) * dims_[2] + k];
  }
  float& at(std::size_t i, std::size_t j, std::size_t k) {
    return data_[(i * dims_[1] + j) * dims_[2] + k];
  }

  bool has_nan() const;

  friend bool operator==(const TensorMap&, const TensorMap&) = default;

 private:
  std::vector<std::uint32_t> dims_;
  std::vector<float> data_;
};

std::size_t product(std::span<const std::uint32_t> dims);

/// Exact byte size of the container for the given extents.
std::size_t container_size(std::span<const std::uint32_t> dims);

std::vector<std::uint8_t> encode_tensor(const TensorMap& t);
TensorMap decode_tensor(std::span<const std::uint8_t> bytes);

/// Throws FormatError on NaN before touching the file system; the file is
/// written to a temporary sibling and renamed into place.
void write_tensor(const TensorMap& t, const std::filesystem::path& path);
TensorMap read_tensor(const std::filesystem::path& path);

/// Writes bytes to a temporary sibling of `path`, then renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);
void write_text_atomic(const std::filesystem::path& path, const std::string& text);
std::vector<std::uint8_t> read_file(const std::filesystem::path& path);

}  // namespace dsd
