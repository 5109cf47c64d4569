#pragma once

#include <cstddef>
#include <cstdint>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "mlr/error.hpp"

namespace mlr {

// Unsigned-byte IDX tensor: magic 0x00000800 | rank, big-endian u32 dims,
// then the raw bytes.
struct IdxTensor {
  std::vector<std::uint32_t> dims;
  std::vector<std::uint8_t> data;

  std::size_t count() const { return dims.empty() ? 0 : dims[0]; }
  // Bytes per leading-index item (28*28 for MNIST images, 1 for labels).
  std::size_t item_size() const {
    std::size_t s = 1;
    for (std::size_t i = 1; i < dims.size(); ++i) s *= dims[i];
    return s;
  }
};

namespace detail {

inline bool read_be32(std::istream& is, std::uint32_t& v) {
  unsigned char b[4];
  if (!is.read(reinterpret_cast<char*>(b), 4)) return false;
  v = (std::uint32_t{b[0]} << 24) | (std::uint32_t{b[1]} << 16) | (std::uint32_t{b[2]} << 8) | b[3];
  return true;
}

inline void write_be32(std::ostream& os, std::uint32_t v) {
  const char b[4] = {static_cast<char>(v >> 24), static_cast<char>(v >> 16), static_cast<char>(v >> 8),
                     static_cast<char>(v)};
  os.write(b, 4);
}

}  // namespace detail

// Accepts 0x801 (1-D labels) and 0x803 (3-D images).
inline IdxTensor read_idx(std::istream& is) {
  std::uint32_t magic;
  if (!detail::read_be32(is, magic)) throw FormatError("idx: file shorter than its magic number", 0);
  if (magic != 0x00000801u && magic != 0x00000803u)
    throw FormatError("idx: unsupported magic number " + std::to_string(magic), 0);
  IdxTensor t;
  t.dims.resize(magic & 0xffu);
  std::size_t total = 1;
  for (std::size_t i = 0; i < t.dims.size(); ++i) {
    if (!detail::read_be32(is, t.dims[i])) throw FormatError("idx: truncated dimension header", 4 + 4 * i);
    total *= t.dims[i];
  }
  const std::size_t header = 4 + 4 * t.dims.size();
  t.data.resize(total);
  is.read(reinterpret_cast<char*>(t.data.data()), static_cast<std::streamsize>(total));
  if (static_cast<std::size_t>(is.gcount()) != total)
    throw FormatError("idx: truncated data, expected " + std::to_string(total) + " bytes",
                      header + static_cast<std::size_t>(is.gcount()));
  return t;
}

inline IdxTensor read_idx(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw InvalidArgument("cannot open " + path);
  return read_idx(is);
}

inline void write_idx(const IdxTensor& t, std::ostream& os) {
  if (t.dims.size() != 1 && t.dims.size() != 3) throw InvalidArgument("idx: only 1-D and 3-D tensors are written");
  std::size_t total = 1;
  for (auto d : t.dims) total *= d;
  if (total != t.data.size()) throw InvalidArgument("idx: data size does not match dims");
  detail::write_be32(os, 0x00000800u | static_cast<std::uint32_t>(t.dims.size()));
  for (auto d : t.dims) detail::write_be32(os, d);
  os.write(reinterpret_cast<const char*>(t.data.data()), static_cast<std::streamsize>(t.data.size()));
}

inline void write_idx(const IdxTensor& t, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw InvalidArgument("cannot open " + path + " for writing");
  write_idx(t, os);
  if (!os) throw InvalidArgument("failed writing " + path);
}

}  // namespace mlr
