// Copyright (c) 2026 The dstc Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "dstc/serialize.hpp"

#include <array>
#include <bit>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "dstc/error.hpp"

namespace dstc {

namespace {

constexpr std::array<char, 4> kTwoLevelMagic{'D', 'S', 'T', 'C'};
constexpr std::array<char, 4> kDenseMagic{'D', 'M', 'A', 'T'};
constexpr std::uint64_t kMaxGridCells = std::uint64_t{1} << 28;
constexpr std::uint64_t kMaxElements = std::uint64_t{1} << 32;

void put_u32(std::ostream& out, std::uint32_t v) {
  const std::array<char, 4> b{static_cast<char>(v & 0xffu), static_cast<char>((v >> 8) & 0xffu),
                              static_cast<char>((v >> 16) & 0xffu), static_cast<char>((v >> 24) & 0xffu)};
  out.write(b.data(), 4);
}

void put_f32(std::ostream& out, float v) { put_u32(out, std::bit_cast<std::uint32_t>(v)); }

std::uint32_t get_u32(std::istream& in) {
  std::array<unsigned char, 4> b{};
  in.read(reinterpret_cast<char*>(b.data()), 4);
  if (!in) throw IoError("unexpected end of file");
  return std::uint32_t{b[0]} | (std::uint32_t{b[1]} << 8) | (std::uint32_t{b[2]} << 16) |
         (std::uint32_t{b[3]} << 24);
}

float get_f32(std::istream& in) { return std::bit_cast<float>(get_u32(in)); }

std::uint32_t checked_u32(std::size_t v, const char* what) {
  if (v > 0xffffffffu) throw IoError(std::string(what) + " does not fit in 32 bits");
  return static_cast<std::uint32_t>(v);
}

void expect_magic(std::istream& in, const std::array<char, 4>& magic) {
  std::array<char, 4> got{};
  in.read(got.data(), 4);
  if (!in || got != magic) {
    throw IoError("bad magic, expected '" + std::string(magic.begin(), magic.end()) + "'");
  }
}

void write_bits(std::ostream& out, const BitGrid& bits) {
  std::vector<char> bytes((bits.rows() * bits.cols() + 7) / 8, 0);
  std::size_t i = 0;
  for (std::size_t r = 0; r < bits.rows(); ++r) {
    for (std::size_t c = 0; c < bits.cols(); ++c, ++i) {
      if (bits.test(r, c)) bytes[i / 8] = static_cast<char>(bytes[i / 8] | (1u << (i % 8)));
    }
  }
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

BitGrid read_bits(std::istream& in, std::size_t rows, std::size_t cols) {
  std::vector<unsigned char> bytes((rows * cols + 7) / 8, 0);
  in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!in) throw IoError("unexpected end of file in bitmap");
  BitGrid bits(rows, cols);
  std::size_t i = 0;
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c, ++i) {
      if ((bytes[i / 8] >> (i % 8)) & 1u) bits.set(r, c);
    }
  }
  for (; i < bytes.size() * 8; ++i) {
    if ((bytes[i / 8] >> (i % 8)) & 1u) throw CorruptEncodingError("nonzero padding bits after bitmap");
  }
  return bits;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  return out;
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return in;
}

void finish_write(std::ofstream& out, const std::filesystem::path& path) {
  out.flush();
  if (!out) throw IoError("write to " + path.string() + " failed");
}

}  // namespace

void write_two_level(std::ostream& out, const TwoLevelBitmapMatrix& matrix) {
  const TwoLevelBitmapMatrix rows = with_value_order(matrix, ValueOrder::kRowMajor);
  out.write(kTwoLevelMagic.data(), 4);
  put_u32(out, kFormatVersion);
  put_u32(out, checked_u32(rows.rows(), "rows"));
  put_u32(out, checked_u32(rows.cols(), "cols"));
  put_u32(out, checked_u32(rows.tile_rows(), "tile_rows"));
  put_u32(out, checked_u32(rows.tile_cols(), "tile_cols"));
  write_bits(out, rows.warp_bitmap());
  // Tiles are stored in grid row-major order, which is the order the warp bits are read.
  for (std::size_t gr = 0; gr < rows.grid_rows(); ++gr) {
    for (std::size_t gc = 0; gc < rows.grid_cols(); ++gc) {
      const BitmapTile* t = rows.tile(gr, gc);
      if (t == nullptr) continue;
      write_bits(out, t->bits);
      for (float v : t->values) put_f32(out, v);
    }
  }
  if (!out) throw IoError("write failed");
}

TwoLevelBitmapMatrix read_two_level(std::istream& in, ValueOrder order) {
  expect_magic(in, kTwoLevelMagic);
  const std::uint32_t version = get_u32(in);
  if (version != kFormatVersion) throw IoError("unsupported format version " + std::to_string(version));
  const std::size_t rows = get_u32(in);
  const std::size_t cols = get_u32(in);
  const std::size_t tile_rows = get_u32(in);
  const std::size_t tile_cols = get_u32(in);
  if (rows == 0 || cols == 0) throw EmptyInputError("file declares a zero dimension");
  if (tile_rows == 0 || tile_cols == 0) throw CorruptEncodingError("zero tile dimension");
  const std::size_t grid_rows = (rows + tile_rows - 1) / tile_rows;
  const std::size_t grid_cols = (cols + tile_cols - 1) / tile_cols;
  if (std::uint64_t{grid_rows} * grid_cols > kMaxGridCells ||
      std::uint64_t{tile_rows} * tile_cols > kMaxElements) {
    throw IoError("declared dimensions are too large");
  }
  BitGrid warp = read_bits(in, grid_rows, grid_cols);
  std::vector<BitmapTile> tiles;
  tiles.reserve(warp.popcount());
  for (std::size_t gr = 0; gr < grid_rows; ++gr) {
    for (std::size_t gc = 0; gc < grid_cols; ++gc) {
      if (!warp.test(gr, gc)) continue;
      BitmapTile t{gr, gc, read_bits(in, tile_rows, tile_cols), {}};
      const std::size_t n = t.bits.popcount();
      t.values.reserve(n);
      for (std::size_t i = 0; i < n; ++i) t.values.push_back(get_f32(in));
      tiles.push_back(std::move(t));
    }
  }
  if (in.peek() != std::char_traits<char>::eof()) throw CorruptEncodingError("trailing bytes after last tile");
  TwoLevelBitmapMatrix m(rows, cols, tile_rows, tile_cols, ValueOrder::kRowMajor, std::move(warp), std::move(tiles));
  return with_value_order(m, order);
}

void save_two_level(const std::filesystem::path& path, const TwoLevelBitmapMatrix& matrix) {
  std::ofstream out = open_out(path);
  write_two_level(out, matrix);
  finish_write(out, path);
}

TwoLevelBitmapMatrix load_two_level(const std::filesystem::path& path, ValueOrder order) {
  std::ifstream in = open_in(path);
  return read_two_level(in, order);
}

void write_feature_map(std::ostream& out, const FeatureMap& map) {
  out.write(kDenseMagic.data(), 4);
  put_u32(out, checked_u32(map.height(), "rows"));
  put_u32(out, checked_u32(map.width(), "cols"));
  put_u32(out, checked_u32(map.channels(), "channels"));
  for (float v : map.data()) put_f32(out, v);
  if (!out) throw IoError("write failed");
}

void write_dense(std::ostream& out, const DenseMatrix& matrix) {
  out.write(kDenseMagic.data(), 4);
  put_u32(out, checked_u32(matrix.rows(), "rows"));
  put_u32(out, checked_u32(matrix.cols(), "cols"));
  put_u32(out, 1);
  for (float v : matrix.data()) put_f32(out, v);
  if (!out) throw IoError("write failed");
}

FeatureMap read_feature_map(std::istream& in) {
  expect_magic(in, kDenseMagic);
  const std::size_t rows = get_u32(in);
  const std::size_t cols = get_u32(in);
  const std::size_t channels = get_u32(in);
  const std::uint64_t n = std::uint64_t{rows} * cols * channels;
  if (n > kMaxElements) throw IoError("declared dimensions are too large");
  std::vector<float> data;
  data.reserve(static_cast<std::size_t>(n));
  for (std::uint64_t i = 0; i < n; ++i) data.push_back(get_f32(in));
  if (in.peek() != std::char_traits<char>::eof()) throw IoError("trailing bytes after dense data");
  return FeatureMap(rows, cols, channels, std::move(data));
}

DenseMatrix read_dense(std::istream& in) {
  const FeatureMap map = read_feature_map(in);
  if (map.channels() != 1) throw ShapeError("expected a one-channel matrix, got " + std::to_string(map.channels()));
  return DenseMatrix(map.height(), map.width(), std::vector<float>(map.data().begin(), map.data().end()));
}

void save_dense(const std::filesystem::path& path, const DenseMatrix& matrix) {
  std::ofstream out = open_out(path);
  write_dense(out, matrix);
  finish_write(out, path);
}

void save_feature_map(const std::filesystem::path& path, const FeatureMap& map) {
  std::ofstream out = open_out(path);
  write_feature_map(out, map);
  finish_write(out, path);
}

DenseMatrix load_dense(const std::filesystem::path& path) {
  std::ifstream in = open_in(path);
  return read_dense(in);
}

FeatureMap load_feature_map(const std::filesystem::path& path) {
  std::ifstream in = open_in(path);
  return read_feature_map(in);
}

}  // namespace dstc
