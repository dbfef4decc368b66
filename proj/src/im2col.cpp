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

#include "dstc/im2col.hpp"

#include <algorithm>
#include <bit>
#include <string>

#include "dstc/error.hpp"

namespace dstc {

void ConvShape::validate() const {
  if (height == 0 || width == 0 || channels == 0 || kernel_h == 0 || kernel_w == 0 || stride == 0 ||
      filters == 0) {
    throw ShapeError("convolution dims must all be >= 1");
  }
  if (kernel_h > height || kernel_w > width) {
    throw ShapeError("kernel " + std::to_string(kernel_h) + "x" + std::to_string(kernel_w) +
                     " is larger than the " + std::to_string(height) + "x" + std::to_string(width) + " map");
  }
  if ((width - kernel_w + stride) % stride != 0) {
    throw ShapeError("(R - K + S) / S is not integral for R=" + std::to_string(width) +
                     " K=" + std::to_string(kernel_w) + " S=" + std::to_string(stride));
  }
}

LoweredDims lowered_dims(const ConvShape& shape) {
  shape.validate();
  return {shape.lowered_rows(), shape.lowered_cols()};
}

std::size_t values_per_column(const ConvShape& shape) {
  shape.validate();
  return (shape.width - shape.kernel_w + shape.stride) / shape.stride;
}

std::vector<std::size_t> zigzag_column_order(const ConvShape& shape) {
  std::vector<std::size_t> order;
  order.reserve(shape.lowered_cols());
  for (std::size_t kh = 0; kh < shape.kernel_h; ++kh)
    for (std::size_t c = 0; c < shape.channels; ++c)
      for (std::size_t kw = 0; kw < shape.kernel_w; ++kw) order.push_back(shape.column(kh, kw, c));
  return order;
}

LoweredMatrix dense_im2col_outer(const FeatureMap& map, const ConvShape& shape) {
  shape.validate();
  if (map.height() != shape.height || map.width() != shape.width || map.channels() != shape.channels) {
    throw ShapeError("feature map does not match the convolution shape");
  }
  const std::size_t ho = shape.out_h();
  const std::size_t wo = shape.out_w();
  LoweredMatrix out{DenseMatrix(ho * wo, shape.lowered_cols()), zigzag_column_order(shape)};
  for (std::size_t col : out.emission_order) {
    const std::size_t c = col % shape.channels;
    const std::size_t kw = (col / shape.channels) % shape.kernel_w;
    const std::size_t kh = col / (shape.channels * shape.kernel_w);
    // A 1xB window slides along feature row oy*S+kh, starting at column kw.
    for (std::size_t oy = 0; oy < ho; ++oy) {
      const std::size_t y = oy * shape.stride + kh;
      for (std::size_t ox = 0; ox < wo; ++ox) out.matrix(oy * wo + ox, col) = map(y, kw + ox * shape.stride, c);
    }
  }
  return out;
}

namespace {

// Working copy of one bitmap row. shift_out() drops the leading (column 0) bit and adds
// it to the running offset, so offset() is always the number of set bits passed over.
class RowRegister {
 public:
  RowRegister(std::span<const std::uint64_t> words) : words_(words.begin(), words.end()) {}

  void shift_out() {
    offset_ += words_[0] & 1u;
    for (std::size_t i = 0; i < words_.size(); ++i) {
      const std::uint64_t carry = (i + 1 < words_.size()) ? (words_[i + 1] << 63) : 0;
      words_[i] = (words_[i] >> 1) | carry;
    }
    ++shifted_;
  }

  void shift_out(std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) shift_out();
  }

  bool test(std::size_t pos) const { return (words_[pos / 64] >> (pos % 64)) & 1u; }

  std::size_t popcount_below(std::size_t pos) const {
    std::size_t n = 0;
    for (std::size_t w = 0; w < pos / 64; ++w) n += static_cast<std::size_t>(std::popcount(words_[w]));
    if (pos % 64 != 0) {
      n += static_cast<std::size_t>(std::popcount(words_[pos / 64] & ((std::uint64_t{1} << (pos % 64)) - 1u)));
    }
    return n;
  }

  std::size_t shifted() const { return shifted_; }
  std::size_t offset() const { return offset_; }

 private:
  std::vector<std::uint64_t> words_;
  std::size_t shifted_ = 0;
  std::size_t offset_ = 0;
};

struct Segment {
  std::size_t oy = 0;
  std::size_t ox = 0;
  std::size_t lane_begin = 0;
  std::size_t length = 0;
};

std::vector<Segment> segments_for_tile(const ConvShape& shape, std::size_t tile_row) {
  const std::size_t wo = shape.out_w();
  const std::size_t end = std::min((tile_row + 1) * kLaneWidth, shape.lowered_rows());
  std::vector<Segment> segs;
  for (std::size_t p = tile_row * kLaneWidth; p < end;) {
    const std::size_t ox = p % wo;
    const std::size_t n = std::min(wo - ox, end - p);
    segs.push_back({p / wo, ox, p - tile_row * kLaneWidth, n});
    p += n;
  }
  return segs;
}

// Mask the strided window at the head of the register, popcount it, and copy the matching
// nonzeros out of the row's value run.
void emit_window(const RowRegister& reg, const Segment& seg, std::size_t stride, std::span<const float> row_values,
                 std::uint32_t channel, std::uint32_t map_row, LoweredLane& out, bool keep_segments) {
  std::uint32_t count = 0;
  for (std::size_t j = 0; j < seg.length; ++j) {
    const std::size_t pos = j * stride;
    if (!reg.test(pos)) continue;
    const std::size_t index = reg.offset() + reg.popcount_below(pos);
    if (index >= row_values.size()) throw CorruptEncodingError("bitmap row points past its value run");
    CondensedLane& lane = out.lane;
    lane.bitmap |= std::uint32_t{1} << (seg.lane_begin + j);
    lane.values[lane.count++] = row_values[index];
    ++count;
  }
  out.lane.padded = out.lane.count;
  if (keep_segments) {
    out.segments.push_back({channel, map_row, static_cast<std::uint32_t>(seg.lane_begin),
                            static_cast<std::uint32_t>(seg.length), static_cast<std::uint32_t>(reg.shifted()),
                            static_cast<std::uint32_t>(reg.offset()), count});
  }
}

}  // namespace

SparseIm2col::SparseIm2col(std::span<const BitmapMatrix> channels, const ConvShape& shape)
    : shape_(shape), channels_(channels) {
  shape_.validate();
  if (channels_.size() != shape_.channels) {
    throw ShapeError("expected " + std::to_string(shape_.channels) + " channels, got " +
                     std::to_string(channels_.size()));
  }
  for (const BitmapMatrix& ch : channels_) {
    if (ch.rows() != shape_.height || ch.cols() != shape_.width) throw ShapeError("channel dims differ from shape");
  }
}

LoweredLane SparseIm2col::lane(std::size_t tile_row, std::size_t column, bool keep_segments) const {
  if (tile_row >= tile_rows() || column >= shape_.lowered_cols()) throw BoundsError("lowered lane index");
  const std::size_t c = column % shape_.channels;
  const std::size_t kw = (column / shape_.channels) % shape_.kernel_w;
  const std::size_t kh = column / (shape_.channels * shape_.kernel_w);
  const BitmapMatrix& ch = channels_[c];

  LoweredLane out;
  out.tile_row = tile_row;
  out.column = column;
  out.valid = std::min(kLaneWidth, shape_.lowered_rows() - tile_row * kLaneWidth);
  for (const Segment& seg : segments_for_tile(shape_, tile_row)) {
    const std::size_t y = seg.oy * shape_.stride + kh;
    RowRegister reg(ch.bitmap().row_words(y));
    reg.shift_out(seg.ox * shape_.stride + kw);
    emit_window(reg, seg, shape_.stride, ch.row_values(y), static_cast<std::uint32_t>(c),
                static_cast<std::uint32_t>(y), out, keep_segments);
  }
  return out;
}

void SparseIm2col::for_each_lane(const std::function<void(const LoweredLane&)>& emit, bool keep_segments,
                                 LoweringStats* stats) const {
  const std::size_t kw_count = shape_.kernel_w;
  std::vector<LoweredLane> pending(kw_count);
  for (std::size_t t = 0; t < tile_rows(); ++t) {
    const std::vector<Segment> segs = segments_for_tile(shape_, t);
    const std::size_t valid = std::min(kLaneWidth, shape_.lowered_rows() - t * kLaneWidth);
    for (std::size_t kh = 0; kh < shape_.kernel_h; ++kh) {
      for (std::size_t c = 0; c < shape_.channels; ++c) {
        const BitmapMatrix& ch = channels_[c];
        for (std::size_t kw = 0; kw < kw_count; ++kw) {
          pending[kw] = LoweredLane{t, shape_.column(kh, kw, c), valid, {}, {}};
        }
        for (const Segment& seg : segs) {
          const std::size_t y = seg.oy * shape_.stride + kh;
          RowRegister reg(ch.bitmap().row_words(y));
          reg.shift_out(seg.ox * shape_.stride);
          for (std::size_t kw = 0; kw < kw_count; ++kw) {
            if (kw > 0) reg.shift_out();
            emit_window(reg, seg, shape_.stride, ch.row_values(y), static_cast<std::uint32_t>(c),
                        static_cast<std::uint32_t>(y), pending[kw], keep_segments);
          }
          if (stats != nullptr) {
            stats->bitmap_words_read += ch.bitmap().words_per_row();
            stats->shifts += reg.shifted();
          }
        }
        std::size_t buffered = 0;
        for (const LoweredLane& lane : pending) buffered += lane.lane.count;
        if (stats != nullptr) {
          stats->peak_buffered_values = std::max(stats->peak_buffered_values, buffered);
          stats->lanes += kw_count;
          stats->values += buffered;
          stats->values_read += buffered;
          stats->popcounts += buffered;
        }
        for (const LoweredLane& lane : pending) emit(lane);
      }
    }
  }
}

std::vector<LoweredLane> sparse_im2col_bitmap(std::span<const BitmapMatrix> channels, const ConvShape& shape,
                                              bool keep_segments) {
  SparseIm2col lowering(channels, shape);
  std::vector<LoweredLane> lanes;
  lowering.for_each_lane([&](const LoweredLane& lane) { lanes.push_back(lane); }, keep_segments);
  return lanes;
}

BitmapMatrix flatten_weights(std::span<const FeatureMap> filters) {
  if (filters.empty()) throw EmptyInputError("no filters");
  const std::size_t k = filters.front().data().size();
  DenseMatrix flat(filters.size(), k);
  for (std::size_t n = 0; n < filters.size(); ++n) {
    const FeatureMap& f = filters[n];
    if (f.height() != filters.front().height() || f.width() != filters.front().width() ||
        f.channels() != filters.front().channels()) {
      throw ShapeError("filters have differing shapes");
    }
    std::copy(f.data().begin(), f.data().end(), flat.data().begin() + static_cast<std::ptrdiff_t>(n * k));
  }
  return encode_single(flat);
}

}  // namespace dstc
