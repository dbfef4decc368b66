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

#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>

#include "dstc/dense.hpp"
#include "dstc/two_level.hpp"

namespace dstc {

inline constexpr std::uint32_t kFormatVersion = 1;

// Two-level file: "DSTC", version, rows, cols, tile_rows, tile_cols (u32 LE), the warp
// bitmap, then per set tile its element bitmap and f32 LE values. Bitmaps are row-major
// bit streams packed LSB-first and padded to a whole byte. Values inside a tile are
// written in row-major order; `order` selects the packing of the matrix that is read back.
void write_two_level(std::ostream& out, const TwoLevelBitmapMatrix& matrix);
TwoLevelBitmapMatrix read_two_level(std::istream& in, ValueOrder order = ValueOrder::kRowMajor);

void save_two_level(const std::filesystem::path& path, const TwoLevelBitmapMatrix& matrix);
TwoLevelBitmapMatrix load_two_level(const std::filesystem::path& path, ValueOrder order = ValueOrder::kRowMajor);

// Dense file: "DMAT", rows, cols, channels (u32 LE) followed by f32 LE data in row-major,
// channel-minor order. A plain matrix has one channel.
void write_dense(std::ostream& out, const DenseMatrix& matrix);
void write_feature_map(std::ostream& out, const FeatureMap& map);
// Reads a one-channel file.
DenseMatrix read_dense(std::istream& in);
// Reads any file; rows map to height and cols to width.
FeatureMap read_feature_map(std::istream& in);

void save_dense(const std::filesystem::path& path, const DenseMatrix& matrix);
void save_feature_map(const std::filesystem::path& path, const FeatureMap& map);
DenseMatrix load_dense(const std::filesystem::path& path);
FeatureMap load_feature_map(const std::filesystem::path& path);

}  // namespace dstc
