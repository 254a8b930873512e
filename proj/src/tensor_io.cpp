#include "dsd/tensor.hpp"

#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <string>

#include "dsd/errors.hpp"

namespace dsd {
namespace {

constexpr std::array<char, 4> kMagic = {'D', 'M', 'T', '1'};

void check_dims(std::span<const std::uint32_t> dims) {
  if (dims.empty() || dims.size() > TensorMap::kMaxRank) {
    throw ShapeError("tensor rank must be in [1, 5], got " + std::to_string(dims.size()));
  }
  for (auto d : dims) {
    if (d == 0) throw ShapeError("tensor extent must be positive");
  }
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint32_t get_u32(const std::uint8_t* p) {
  return std::uint32_t{p[0]} | (std::uint32_t{p[1]} << 8) | (std::uint32_t{p[2]} << 16) |
         (std::uint32_t{p[3]} << 24);
}

}  // namespace

TensorMap::TensorMap(std::vector<std::uint32_t> dims, std::vector<float> data)
    : dims_(std::move(dims)), data_(std::move(data)) {
  check_dims(dims_);
  if (product(dims_) != data_.size()) {
    throw ShapeError("tensor payload length " + std::to_string(data_.size()) +
                     " does not match extents product " + std::to_string(product(dims_)));
  }
}

TensorMap TensorMap::zeros(std::vector<std::uint32_t> dims) {
  check_dims(dims);
  const auto n = product(dims);
  return TensorMap(std::move(dims), std::vector<float>(n, 0.0f));
}

bool TensorMap::has_nan() const {
  for (float v : data_) {
    if (std::isnan(v)) return true;
  }
  return false;
}

std::size_t product(std::span<const std::uint32_t> dims) {
  std::size_t n = 1;
  for (auto d : dims) n *= d;
  return n;
}

std::size_t container_size(std::span<const std::uint32_t> dims) {
  return 5 + 4 * dims.size() + 4 * product(dims);
}

std::vector<std::uint8_t> encode_tensor(const TensorMap& t) {
  check_dims(t.dims());
  if (t.has_nan()) throw FormatError("refusing to encode tensor with NaN payload");
  std::vector<std::uint8_t> out;
  out.reserve(container_size(t.dims()));
  out.insert(out.end(), kMagic.begin(), kMagic.end());
  out.push_back(static_cast<std::uint8_t>(t.ndim()));
  for (auto d : t.dims()) put_u32(out, d);
  for (float v : t.data()) put_u32(out, std::bit_cast<std::uint32_t>(v));
  return out;
}

TensorMap decode_tensor(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 5 || std::memcmp(bytes.data(), kMagic.data(), 4) != 0) {
    throw FormatError("bad tensor magic");
  }
  const std::size_t ndim = bytes[4];
  if (ndim == 0 || ndim > TensorMap::kMaxRank) {
    throw FormatError("tensor rank " + std::to_string(ndim) + " out of range");
  }
  if (bytes.size() < 5 + 4 * ndim) throw FormatError("truncated tensor header");
  std::vector<std::uint32_t> dims(ndim);
  for (std::size_t i = 0; i < ndim; ++i) {
    dims[i] = get_u32(bytes.data() + 5 + 4 * i);
    if (dims[i] == 0) throw FormatError("tensor extent 0");
  }
  const std::size_t expected = container_size(dims);
  if (bytes.size() < expected) {
    throw FormatError("truncated tensor payload: expected " + std::to_string(expected) +
                      " bytes, found " + std::to_string(bytes.size()));
  }
  if (bytes.size() > expected) throw FormatError("trailing bytes after tensor payload");
  std::vector<float> data(product(dims));
  const std::uint8_t* p = bytes.data() + 5 + 4 * ndim;
  for (std::size_t i = 0; i < data.size(); ++i) {
    data[i] = std::bit_cast<float>(get_u32(p + 4 * i));
    if (std::isnan(data[i])) throw FormatError("NaN in tensor payload");
  }
  return TensorMap(std::move(dims), std::move(data));
}

void write_file_atomic(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("write failed for " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot rename " + tmp.string() + ": " + ec.message());
}

void write_text_atomic(const std::filesystem::path& path, const std::string& text) {
  write_file_atomic(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  in.seekg(0, std::ios::end);
  const auto size = static_cast<std::size_t>(in.tellg());
  in.seekg(0);
  std::vector<std::uint8_t> bytes(size);
  in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(size));
  if (!in) throw IoError("read failed for " + path.string());
  return bytes;
}

void write_tensor(const TensorMap& t, const std::filesystem::path& path) {
  const auto bytes = encode_tensor(t);
  write_file_atomic(path, bytes);
}

TensorMap read_tensor(const std::filesystem::path& path) { return decode_tensor(read_file(path)); }

}  // namespace dsd
