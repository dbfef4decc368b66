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

#include <doctest.h>

#include <algorithm>

#include "dstc/error.hpp"
#include "dstc/generate.hpp"
#include "dstc/im2col.hpp"
#include "oracles.hpp"

using namespace dstc;

namespace {

std::vector<BitmapMatrix> channels_of(const FeatureMap& x) {
  std::vector<BitmapMatrix> out;
  for (std::size_t c = 0; c < x.channels(); ++c) out.push_back(encode_single(x.channel(c)));
  return out;
}

// The 3x6 map drawn in the lowering figure, one channel.
FeatureMap figure_map() {
  return FeatureMap(3, 6, 1, {1, 0, 2, 3, 0, 4, 0, 5, 0, 0, 6, 0, 7, 0, 8, 0, 0, 9});
}

}  // namespace

TEST_CASE("lowered dims") {
  CHECK(lowered_dims({3, 6, 1, 3, 3, 1, 1}) == LoweredDims{4, 9});
  CHECK(lowered_dims({1, 1, 1, 1, 1, 1, 1}) == LoweredDims{1, 1});
  CHECK(lowered_dims({8, 8, 2, 3, 3, 1, 1}) == LoweredDims{36, 18});
  CHECK_THROWS_AS(lowered_dims({2, 2, 1, 3, 3, 1, 1}), ShapeError);
}

TEST_CASE("values per lowered column") {
  CHECK(values_per_column({6, 6, 1, 3, 3, 1, 1}) == 4);
  CHECK(values_per_column({5, 5, 1, 5, 5, 3, 1}) == 1);
  CHECK(values_per_column({7, 7, 1, 3, 3, 2, 1}) == 3);
  std::size_t windows = 0;
  for (std::size_t x = 0; x + 3 <= 7; x += 2) ++windows;
  CHECK(windows == 3);
  CHECK_THROWS_AS(values_per_column({8, 8, 1, 3, 3, 2, 1}), ShapeError);
}

TEST_CASE("dense outer-product-friendly lowering") {
  FeatureMap constant(4, 4, 2);
  for (std::size_t y = 0; y < 4; ++y)
    for (std::size_t x = 0; x < 4; ++x)
      for (std::size_t c = 0; c < 2; ++c) constant(y, x, c) = 2.5f;
  const LoweredMatrix lc = dense_im2col_outer(constant, {4, 4, 2, 3, 3, 1, 1});
  for (float v : lc.matrix.data()) CHECK(v == 2.5f);

  const FeatureMap x = generate_feature_map(5, 5, 1, 0.7, 3);
  const ConvShape s{5, 5, 1, 3, 3, 1, 1};
  const LoweredMatrix l = dense_im2col_outer(x, s);
  CHECK(l.matrix == oracle::im2col(x, s));
  std::vector<std::size_t> sorted = l.emission_order;
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t i = 0; i < sorted.size(); ++i) CHECK(sorted[i] == i);
}

TEST_CASE("sparse lowering of an all-zero map") {
  const FeatureMap x(6, 6, 2);
  const ConvShape s{6, 6, 2, 3, 3, 1, 1};
  const auto ch = channels_of(x);
  for (const LoweredLane& l : sparse_im2col_bitmap(ch, s)) {
    CHECK(l.lane.bitmap == 0);
    CHECK(l.lane.count == 0);
  }
}

TEST_CASE("sparse lowering walks the figure map by shifting one bitmap row") {
  const FeatureMap x = figure_map();
  const ConvShape s{3, 6, 1, 3, 3, 1, 1};
  const auto ch = channels_of(x);
  const std::vector<LoweredLane> lanes = sparse_im2col_bitmap(ch, s);
  REQUIRE(lanes.size() == 9);
  // Kernel row 0: the first three emitted columns come from map row 0, window width 4.
  const std::uint32_t row0 = 0b101101u;  // columns 0, 2, 3, 5
  for (std::size_t kw = 0; kw < 3; ++kw) {
    const LoweredLane& l = lanes[kw];
    CHECK(l.column == kw);
    CHECK(l.lane.bitmap == ((row0 >> kw) & 0xfu));
    REQUIRE(l.segments.size() == 1);
    CHECK(l.segments[0].shift == kw);
    CHECK(l.segments[0].offset == std::vector<std::uint32_t>{0, 1, 1}[kw]);
  }
  CHECK(oracle::segments_consistent(x, s, lanes));
  CHECK(oracle::expand_lanes(lanes, 4, 9) == oracle::im2col(x, s));
}

TEST_CASE("sparse lowering matches dense im2col column by column") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const FeatureMap x = generate_feature_map(6, 6, 3, 0.25, seed);
    const ConvShape s{6, 6, 3, 3, 3, 1, 1};
    const auto ch = channels_of(x);
    const std::vector<LoweredLane> lanes = sparse_im2col_bitmap(ch, s);
    CHECK(oracle::expand_lanes(lanes, s.lowered_rows(), s.lowered_cols()) == oracle::im2col(x, s));
    CHECK(oracle::segments_consistent(x, s, lanes));
  }
}

TEST_CASE("sparse lowering with stride and multiple tile rows") {
  const FeatureMap x = generate_feature_map(21, 23, 2, 0.4, 7);
  const ConvShape s{21, 23, 2, 5, 3, 2, 1};
  const auto ch = channels_of(x);
  const std::vector<LoweredLane> lanes = sparse_im2col_bitmap(ch, s);
  CHECK(oracle::expand_lanes(lanes, s.lowered_rows(), s.lowered_cols()) == oracle::im2col(x, s));
  CHECK(oracle::segments_consistent(x, s, lanes));

  // Random access by (tile row, column) agrees with the stream.
  const SparseIm2col lowering(ch, s);
  for (const LoweredLane& l : lanes) {
    const LoweredLane r = lowering.lane(l.tile_row, l.column);
    CHECK(r.lane.bitmap == l.lane.bitmap);
    CHECK(std::equal(r.lane.values.begin(), r.lane.values.end(), l.lane.values.begin()));
  }
  LoweringStats stats;
  lowering.for_each_lane([](const LoweredLane&) {}, false, &stats);
  CHECK(stats.lanes == lanes.size());
  CHECK(stats.peak_buffered_values <= 32 * s.kernel_w);
}

TEST_CASE("sparse lowering argument checks") {
  const FeatureMap x = generate_feature_map(6, 6, 2, 0.5, 1);
  const auto ch = channels_of(x);
  CHECK_THROWS_AS(sparse_im2col_bitmap(ch, {6, 6, 3, 3, 3, 1, 1}), ShapeError);
  CHECK_THROWS_AS(sparse_im2col_bitmap(ch, {6, 7, 2, 3, 3, 1, 1}), ShapeError);
  CHECK_THROWS_AS(SparseIm2col(ch, {6, 6, 2, 3, 3, 1, 1}).lane(5, 0), BoundsError);
}

TEST_CASE("flattened filters") {
  const std::vector<FeatureMap> one{FeatureMap(1, 1, 1, {4.0f})};
  const BitmapMatrix w1 = flatten_weights(one);
  CHECK(w1.rows() == 1);
  CHECK(w1.cols() == 1);
  CHECK(w1.values()[0] == 4.0f);

  std::vector<FeatureMap> with_zero{FeatureMap(1, 2, 1, {1.0f, 2.0f}), FeatureMap(1, 2, 1),
                                    FeatureMap(1, 2, 1, {0.0f, 3.0f})};
  const BitmapMatrix w = flatten_weights(with_zero);
  CHECK(w.row_values(1).empty());
  CHECK(w.row_offsets()[1] == 2);
  CHECK(w.row_offsets()[2] == 2);

  const std::vector<FeatureMap> filters = generate_filters(4, 3, 3, 2, 0.6, 5);
  const DenseMatrix flat = decode_single(flatten_weights(filters));
  for (std::size_t n = 0; n < 4; ++n)
    for (std::size_t kh = 0; kh < 3; ++kh)
      for (std::size_t kw = 0; kw < 3; ++kw)
        for (std::size_t c = 0; c < 2; ++c) CHECK(flat(n, (kh * 3 + kw) * 2 + c) == filters[n](kh, kw, c));
  CHECK_THROWS_AS(flatten_weights(std::vector<FeatureMap>{}), EmptyInputError);
}
