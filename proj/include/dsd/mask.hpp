#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <vector>

namespace dsd {

/// Row-major binary image; 1 = dynamic.
struct BinaryMap {
  int height = 0;
  int width = 0;
  std::vector<std::uint8_t> bits;

  BinaryMap() = default;
  BinaryMap(int h, int w) : height(h), width(w), bits(static_cast<std::size_t>(h) * w, 0) {}

  bool at(int row, int col) const { return bits[static_cast<std::size_t>(row) * width + col] != 0; }
  void set(int row, int col, bool v = true) {
    bits[static_cast<std::size_t>(row) * width + col] = v ? 1 : 0;
  }
  std::size_t count() const;

  friend bool operator==(const BinaryMap&, const BinaryMap&) = default;
};

using MaskStack = std::vector<BinaryMap>;

MaskStack empty_masks(int frames, int height, int width);

/// 3x3 dilation followed by 3x3 erosion; out-of-image neighbors are ignored
/// by both passes, so the result always contains the input.
BinaryMap close3x3(const BinaryMap& m);

/// Binary 8-bit PGM (P5), 0 / 255.
void write_pgm(const BinaryMap& m, const std::filesystem::path& path);
/// Any nonzero sample reads as set.
BinaryMap read_pgm(const std::filesystem::path& path);

}  // namespace dsd
