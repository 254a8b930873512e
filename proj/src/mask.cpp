#include "dsd/mask.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>
#include <string>

#include "dsd/errors.hpp"
#include "dsd/tensor.hpp"

namespace dsd {

std::size_t BinaryMap::count() const {
  return static_cast<std::size_t>(std::count_if(bits.begin(), bits.end(), [](auto b) { return b != 0; }));
}

MaskStack empty_masks(int frames, int height, int width) {
  return MaskStack(static_cast<std::size_t>(frames), BinaryMap(height, width));
}

namespace {

BinaryMap morph(const BinaryMap& m, bool dilate) {
  BinaryMap out(m.height, m.width);
  for (int r = 0; r < m.height; ++r) {
    for (int c = 0; c < m.width; ++c) {
      bool v = !dilate;
      for (int dr = -1; dr <= 1; ++dr) {
        for (int dc = -1; dc <= 1; ++dc) {
          const int rr = r + dr;
          const int cc = c + dc;
          if (rr < 0 || cc < 0 || rr >= m.height || cc >= m.width) continue;
          if (dilate) {
            v = v || m.at(rr, cc);
          } else {
            v = v && m.at(rr, cc);
          }
        }
      }
      out.set(r, c, v);
    }
  }
  return out;
}

}  // namespace

BinaryMap close3x3(const BinaryMap& m) { return morph(morph(m, true), false); }

void write_pgm(const BinaryMap& m, const std::filesystem::path& path) {
  std::string header = "P5\n" + std::to_string(m.width) + " " + std::to_string(m.height) + "\n255\n";
  std::vector<std::uint8_t> bytes(header.begin(), header.end());
  bytes.reserve(bytes.size() + m.bits.size());
  for (auto b : m.bits) bytes.push_back(b ? 255 : 0);
  write_file_atomic(path, bytes);
}

BinaryMap read_pgm(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  std::size_t pos = 0;
  auto next_token = [&]() {
    while (pos < bytes.size()) {
      if (bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else if (std::isspace(bytes[pos])) {
        ++pos;
      } else {
        break;
      }
    }
    std::string tok;
    while (pos < bytes.size() && !std::isspace(bytes[pos])) tok.push_back(static_cast<char>(bytes[pos++]));
    return tok;
  };
  if (next_token() != "P5") throw FormatError(path.string() + ": not a binary PGM");
  int w = 0, h = 0, maxval = 0;
  try {
    w = std::stoi(next_token());
    h = std::stoi(next_token());
    maxval = std::stoi(next_token());
  } catch (const std::exception&) {
    throw FormatError(path.string() + ": malformed PGM header");
  }
  if (w <= 0 || h <= 0 || maxval <= 0 || maxval > 255) throw FormatError(path.string() + ": unsupported PGM");
  ++pos;  // single whitespace after maxval
  if (bytes.size() < pos + static_cast<std::size_t>(w) * h) throw FormatError(path.string() + ": truncated PGM");
  BinaryMap m(h, w);
  for (std::size_t i = 0; i < m.bits.size(); ++i) m.bits[i] = bytes[pos + i] != 0 ? 1 : 0;
  return m;
}

}  // namespace dsd
