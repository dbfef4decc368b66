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

#include <sstream>
#include <string>

#include "dstc/bitmap.hpp"
#include "dstc/condense.hpp"
#include "dstc/error.hpp"
#include "dstc/generate.hpp"
#include "dstc/serialize.hpp"
#include "dstc/two_level.hpp"
#include "oracles.hpp"

using namespace dstc;

TEST_CASE("identity 4x4 with 2x2 tiles sets the diagonal warp bits") {
  DenseMatrix eye(4, 4);
  for (std::size_t i = 0; i < 4; ++i) eye(i, i) = 1.0f;
  const TwoLevelBitmapMatrix enc = encode(eye, {2, 2});
  CHECK(enc.warp_bit(0, 0));
  CHECK_FALSE(enc.warp_bit(0, 1));
  CHECK_FALSE(enc.warp_bit(1, 0));
  CHECK(enc.warp_bit(1, 1));
  REQUIRE(enc.tiles().size() == 2);
  for (const BitmapTile& t : enc.tiles()) CHECK(t.values.size() == 2);
}

TEST_CASE("all-zero matrix stores nothing") {
  const TwoLevelBitmapMatrix enc = encode(DenseMatrix(32, 32));
  CHECK_FALSE(enc.warp_bit(0, 0));
  CHECK(enc.nnz() == 0);
  CHECK(decode(enc) == DenseMatrix(32, 32));
}

TEST_CASE("two-level roundtrip at 50% density") {
  const DenseMatrix x = generate_matrix(64, 64, 0.5, 3);
  const TwoLevelBitmapMatrix enc = encode(x);
  CHECK(decode(enc) == x);
  CHECK(enc.nnz() == oracle::nonzeros(x));
}

TEST_CASE("roundtrip on ragged shapes, odd tiles and both value orders") {
  const DenseMatrix x = generate_matrix(37, 53, 0.3, 9);
  for (TileShape t : {TileShape{32, 32}, TileShape{7, 5}, TileShape{1, 1}, TileShape{64, 3}}) {
    for (ValueOrder o : {ValueOrder::kRowMajor, ValueOrder::kColumnMajor}) {
      const TwoLevelBitmapMatrix enc = encode(x, t, o);
      CHECK(decode(enc) == x);
      CHECK(decode(with_value_order(enc, ValueOrder::kRowMajor)) == x);
    }
  }
}

TEST_CASE("hand-built 2x2 tile decodes to the diagonal") {
  BitGrid warp(1, 1);
  warp.set(0, 0);
  BitGrid bits(2, 2);
  bits.set(0, 0);
  bits.set(1, 1);
  std::vector<BitmapTile> tiles{{0, 0, bits, {2.5f, -4.0f}}};
  const TwoLevelBitmapMatrix m(2, 2, 2, 2, ValueOrder::kRowMajor, warp, tiles);
  const DenseMatrix d = decode(m);
  CHECK(d(0, 0) == 2.5f);
  CHECK(d(0, 1) == 0.0f);
  CHECK(d(1, 0) == 0.0f);
  CHECK(d(1, 1) == -4.0f);
}

TEST_CASE("structural checks reject corrupt encodings") {
  BitGrid warp(1, 1);
  warp.set(0, 0);
  BitGrid bits(2, 2);
  bits.set(0, 0);
  std::vector<BitmapTile> tiles{{0, 0, bits, {1.0f, 2.0f}}};
  CHECK_THROWS_AS(TwoLevelBitmapMatrix(2, 2, 2, 2, ValueOrder::kRowMajor, warp, tiles), CorruptEncodingError);
  CHECK_THROWS_AS(TwoLevelBitmapMatrix(2, 2, 2, 2, ValueOrder::kRowMajor, warp, {}), CorruptEncodingError);
  CHECK_THROWS_AS(encode(DenseMatrix(0, 4)), EmptyInputError);
  CHECK_THROWS_AS(encode_single(DenseMatrix(3, 0)), EmptyInputError);
}

TEST_CASE("single-level row [0, x, 0, y]") {
  const BitmapMatrix m = encode_single(DenseMatrix(1, 4, {0.0f, 3.0f, 0.0f, 7.0f}));
  CHECK_FALSE(m.bitmap().test(0, 0));
  CHECK(m.bitmap().test(0, 1));
  CHECK_FALSE(m.bitmap().test(0, 2));
  CHECK(m.bitmap().test(0, 3));
  CHECK(m.bitmap().row_words(0)[0] == 0b1010u);
  REQUIRE(m.values().size() == 2);
  CHECK(m.values()[0] == 3.0f);
  CHECK(m.values()[1] == 7.0f);
  CHECK(m.row_offsets()[0] == 0);
}

TEST_CASE("single-level popcount matches a direct scan") {
  const DenseMatrix fig(3, 6, {1, 0, 2, 0, 0, 3, 0, 4, 0, 5, 0, 0, 6, 0, 0, 7, 8, 0});
  CHECK(encode_single(fig).bitmap().popcount() == oracle::nonzeros(fig));
  const DenseMatrix x = generate_matrix(16, 16, 0.25, 21);
  const BitmapMatrix m = encode_single(x);
  CHECK(m.nnz() == oracle::nonzeros(x));
  CHECK(decode_single(m) == x);
}

TEST_CASE("fp16 rounding option") {
  CHECK(round_to_fp16(1.0f) == 1.0f);
  CHECK(round_to_fp16(1.0f + 1e-4f) == 1.0f);
  const BitmapMatrix m = encode_single(DenseMatrix(1, 2, {1.0001f, 0.5f}), {true});
  CHECK(m.values()[0] == 1.0f);
}

TEST_CASE("lane condensing quantizes per side") {
  std::vector<float> lane(32, 0.0f);
  for (std::size_t i = 0; i < 20; ++i) lane[(i * 7) % 32] = static_cast<float>(i + 1);
  const CondensedLane a = condense_lane(lane, QuantumLevels::a_side());
  CHECK(a.count == 20);
  CHECK(a.padded == 24);
  for (std::size_t i = 20; i < 24; ++i) CHECK(a.values[i] == 0.0f);
  const auto expanded = a.expand();
  CHECK(std::vector<float>(expanded.begin(), expanded.end()) == lane);

  std::vector<float> lane_b(32, 0.0f);
  for (std::size_t i = 0; i < 11; ++i) lane_b[i * 2] = 1.0f;
  CHECK(condense_lane(lane_b, QuantumLevels::b_side()).padded == 16);

  const std::vector<float> full(32, 1.0f);
  CHECK(condense_lane(full, QuantumLevels::a_side()).padded == 32);
  CHECK(condense_lane(std::vector<float>(32, 0.0f), QuantumLevels::a_side()).padded == 0);
}

TEST_CASE("quantum level sets must end at 32") {
  CHECK_THROWS_AS(QuantumLevels({8, 16}), ConfigError);
  CHECK_THROWS_AS(QuantumLevels({16, 8, 32}), ConfigError);
  CHECK_NOTHROW(QuantumLevels({4, 32}));
  for (std::size_t n = 0; n <= 32; ++n) {
    CHECK(QuantumLevels::a_side().quantize(n) == oracle::pad_to(n, {8, 16, 24, 32}));
    CHECK(QuantumLevels::b_side().quantize(n) == oracle::pad_to(n, {16, 32}));
  }
}

TEST_CASE("DSTC file roundtrip") {
  const DenseMatrix x = generate_matrix(45, 70, 0.2, 4);
  const TwoLevelBitmapMatrix enc = encode(x, {16, 32});
  std::stringstream buf;
  write_two_level(buf, enc);
  const TwoLevelBitmapMatrix back = read_two_level(buf);
  CHECK(back == enc);
  std::stringstream buf2;
  write_two_level(buf2, enc);
  CHECK(decode(read_two_level(buf2, ValueOrder::kColumnMajor)) == x);
}

TEST_CASE("DSTC reader rejects damaged files") {
  const TwoLevelBitmapMatrix enc = encode(generate_matrix(8, 8, 0.5, 1), {4, 4});
  std::stringstream buf;
  write_two_level(buf, enc);
  const std::string good = buf.str();

  std::stringstream bad_magic(std::string("XSTC") + good.substr(4));
  CHECK_THROWS_AS(read_two_level(bad_magic), IoError);
  std::stringstream truncated(good.substr(0, good.size() - 3));
  CHECK_THROWS_AS(read_two_level(truncated), IoError);
  std::stringstream trailing(good + "x");
  CHECK_THROWS_AS(read_two_level(trailing), CorruptEncodingError);
}

TEST_CASE("DMAT roundtrip") {
  const FeatureMap fm = generate_feature_map(5, 6, 3, 0.5, 8);
  std::stringstream buf;
  write_feature_map(buf, fm);
  CHECK(read_feature_map(buf) == fm);
  std::stringstream one;
  write_feature_map(one, fm);
  CHECK_THROWS_AS(read_dense(one), ShapeError);
}
