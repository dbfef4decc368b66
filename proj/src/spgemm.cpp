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

#include "dstc/spgemm.hpp"

#include <algorithm>
#include <bit>
#include <ostream>
#include <string>

#include "dstc/error.hpp"
#include "dstc/parallel.hpp"

namespace dstc {

ProductBitmap multiply_bitmap(std::uint32_t a_bits, std::uint32_t b_bits) {
  ProductBitmap out{};
  for (std::size_t r = 0; r < kLaneWidth; ++r) out[r] = ((a_bits >> r) & 1u) ? b_bits : 0u;
  return out;
}

std::size_t popcount(const ProductBitmap& bitmap) {
  std::size_t n = 0;
  for (std::uint32_t row : bitmap) n += static_cast<std::size_t>(std::popcount(row));
  return n;
}

ValueBlock multiply_value(std::span<const float> a_lane, std::span<const float> b_lane) {
  if (a_lane.size() > kLaneWidth || b_lane.size() > kLaneWidth) throw ShapeError("lane longer than 32");
  ValueBlock block;
  block.k_a = a_lane.size();
  block.k_b = b_lane.size();
  for (std::size_t i = 0; i < block.k_a; ++i)
    for (std::size_t j = 0; j < block.k_b; ++j) block.values[i * block.k_b + j] = a_lane[i] * b_lane[j];
  return block;
}

namespace {

void outer_product_into(const CondensedLane& a, const CondensedLane& b, PartialProduct& out) {
  out.bitmap = multiply_bitmap(a.bitmap, b.bitmap);
  out.block.k_a = a.padded;
  out.block.k_b = b.padded;
  const std::size_t kb = b.padded;
  for (std::size_t i = 0; i < a.padded; ++i) {
    const float av = a.values[i];
    float* row = out.block.values.data() + i * kb;
    for (std::size_t j = 0; j < kb; ++j) row[j] = av * b.values[j];
  }
}

}  // namespace

PartialProduct outer_product(const CondensedLane& a, const CondensedLane& b) {
  PartialProduct p;
  outer_product_into(a, b, p);
  return p;
}

void merge(const PartialProduct& partial, Accumulator& acc) {
  const ValueBlock& block = partial.block;
  if (block.k_a > kLaneWidth || block.k_b > kLaneWidth) throw CorruptPartialError("value block exceeds 32x32");
  std::uint32_t pattern = 0;
  std::size_t rows = 0;
  for (std::uint32_t row : partial.bitmap) {
    if (row == 0) continue;
    if (rows == 0) {
      pattern = row;
    } else if (row != pattern) {
      throw CorruptPartialError("product bitmap is not an outer product of two lane bitmaps");
    }
    ++rows;
  }
  if (rows > block.k_a || static_cast<std::size_t>(std::popcount(pattern)) > block.k_b) {
    throw CorruptPartialError("product bitmap holds " + std::to_string(rows) + "x" +
                              std::to_string(std::popcount(pattern)) + " set bits for a " +
                              std::to_string(block.k_a) + "x" + std::to_string(block.k_b) + " value block");
  }

  std::size_t i = 0;
  for (std::size_t r = 0; r < kLaneWidth; ++r) {
    std::uint32_t bits = partial.bitmap[r];
    if (bits == 0) continue;
    const float* values = block.values.data() + i * block.k_b;
    std::size_t j = 0;
    while (bits != 0) {
      const auto c = static_cast<std::size_t>(std::countr_zero(bits));
      acc(r, c) += values[j++];
      bits &= bits - 1;
    }
    ++i;
  }
}

std::size_t baseline_substeps(std::size_t valid_rows, std::size_t valid_cols) {
  return ((valid_rows + kOhmmaRows - 1) / kOhmmaRows) * ((valid_cols + kOhmmaCols - 1) / kOhmmaCols);
}

std::size_t executed_substeps(std::size_t k_a, std::size_t k_b, std::size_t valid_rows, std::size_t valid_cols) {
  const std::size_t chunks_a =
      std::min((k_a + kOhmmaRows - 1) / kOhmmaRows, (valid_rows + kOhmmaRows - 1) / kOhmmaRows);
  const std::size_t chunks_b =
      std::min((k_b + kOhmmaCols - 1) / kOhmmaCols, (valid_cols + kOhmmaCols - 1) / kOhmmaCols);
  return chunks_a * chunks_b;
}

const char* to_string(ExecMode mode) {
  switch (mode) {
    case ExecMode::kDense:
      return "dense";
    case ExecMode::kSingleSparse:
      return "single";
    case ExecMode::kDualSparse:
      return "dual";
  }
  return "?";
}

ExecMode parse_exec_mode(std::string_view text) {
  if (text == "dense") return ExecMode::kDense;
  if (text == "single") return ExecMode::kSingleSparse;
  if (text == "dual") return ExecMode::kDualSparse;
  throw ConfigError("unknown mode '" + std::string(text) + "' (expected dense|single|dual)");
}

void StepTrace::add_set(const StepRecord& record, std::size_t outputs, std::size_t valid_outputs) {
  if (keep_records_) records_.push_back(record);
  ++sets_;
  baseline_ += record.baseline;
  baseline_writes_ += valid_outputs;
  if (record.warp_skipped) {
    ++warp_skipped_sets_;
    return;
  }
  live_baseline_ += record.baseline;
  executed_ += record.executed;
  writes_ += outputs;
  if (mode_ != ExecMode::kDense) ++bohmma_;
}

void StepTrace::append(const StepTrace& other) {
  if (keep_records_) records_.insert(records_.end(), other.records_.begin(), other.records_.end());
  sets_ += other.sets_;
  warp_skipped_sets_ += other.warp_skipped_sets_;
  executed_ += other.executed_;
  baseline_ += other.baseline_;
  live_baseline_ += other.live_baseline_;
  bohmma_ += other.bohmma_;
  writes_ += other.writes_;
  baseline_writes_ += other.baseline_writes_;
}

double StepTrace::speedup() const {
  if (executed_ == 0) return baseline_ == 0 ? 1.0 : static_cast<double>(baseline_);
  return static_cast<double>(baseline_) / static_cast<double>(executed_);
}

void StepTrace::write_csv(std::ostream& out) const {
  out << "tile_row,tile_col,k_index,executed_substeps,baseline_substeps,skipped_by_warp_bit\r\n";
  for (const StepRecord& r : records_) {
    out << r.tile_row << ',' << r.tile_col << ',' << r.k_index << ',' << unsigned{r.executed} << ','
        << unsigned{r.baseline} << ',' << (r.warp_skipped ? 1 : 0) << "\r\n";
  }
}

void warp_spgemm(std::span<const CondensedLane> a_lanes, std::span<const CondensedLane> b_lanes,
                 Accumulator& acc, StepTrace& trace, const WarpContext& context) {
  if (a_lanes.size() != b_lanes.size()) {
    throw ShapeError("warp tile has " + std::to_string(a_lanes.size()) + " left lanes and " +
                     std::to_string(b_lanes.size()) + " right lanes");
  }
  const auto baseline = static_cast<std::uint8_t>(baseline_substeps(context.valid_rows, context.valid_cols));
  const std::size_t valid_outputs = context.valid_rows * context.valid_cols;
  PartialProduct partial;
  for (std::size_t k = 0; k < a_lanes.size(); ++k) {
    const CondensedLane& a = a_lanes[k];
    const CondensedLane& b = b_lanes[k];
    const std::size_t executed = executed_substeps(a.padded, b.padded, context.valid_rows, context.valid_cols);
    std::size_t outputs = 0;
    if (executed > 0) {
      outer_product_into(a, b, partial);
      merge(partial, acc);
      outputs = std::size_t{a.count} * b.count;
      if (context.observer != nullptr) context.observer->on_partial(partial);
    }
    trace.add_set({context.tile_row, context.tile_col, static_cast<std::uint32_t>(context.k_offset + k),
                   static_cast<std::uint8_t>(executed), baseline, false},
                  outputs, valid_outputs);
  }
}

StepTrace warp_spgemm(std::span<const CondensedLane> a_lanes, std::span<const CondensedLane> b_lanes,
                      Accumulator& acc, const WarpContext& context) {
  StepTrace trace(context.mode);
  warp_spgemm(a_lanes, b_lanes, acc, trace, context);
  return trace;
}

CondensedTile prepare_lanes(const TwoLevelBitmapMatrix& m, std::size_t gr, std::size_t gc, Side side,
                           bool condensed, const QuantumLevels& levels) {
  if (condensed) return condense_tile(m, gr, gc, side, levels);
  const DenseMatrix block = m.tile_dense(gr, gc);
  CondensedTile tile{side, {}};
  std::array<float, kLaneWidth> lane{};
  if (side == Side::kA) {
    const std::size_t valid = m.valid_rows(gr);
    for (std::size_t c = 0; c < block.cols(); ++c) {
      for (std::size_t r = 0; r < valid; ++r) lane[r] = block(r, c);
      tile.lanes.push_back(dense_lane({lane.data(), valid}, kOhmmaRows));
    }
  } else {
    const std::size_t valid = m.valid_cols(gc);
    for (std::size_t r = 0; r < block.rows(); ++r) {
      tile.lanes.push_back(dense_lane(block.row(r).subspan(0, valid), kOhmmaCols));
    }
  }
  return tile;
}

SpgemmResult device_spgemm(const TwoLevelBitmapMatrix& a, const TwoLevelBitmapMatrix& b,
                           const std::optional<DenseMatrix>& bias, const SpgemmOptions& options) {
  if (a.cols() != b.rows()) {
    throw ShapeError("inner dimensions differ: A is " + std::to_string(a.rows()) + "x" +
                     std::to_string(a.cols()) + ", B is " + std::to_string(b.rows()) + "x" +
                     std::to_string(b.cols()));
  }
  if (a.tile_cols() != b.tile_rows()) throw ShapeError("A tile columns must equal B tile rows");
  if (a.tile_rows() > kLaneWidth || b.tile_cols() > kLaneWidth || a.tile_cols() > kLaneWidth) {
    throw ShapeError("tiles larger than 32 are not supported by the warp kernel");
  }
  if (bias && (bias->rows() != a.rows() || bias->cols() != b.cols())) throw ShapeError("bias shape mismatch");
  if (options.k_depth == 0) throw ConfigError("k_depth must be >= 1");

  const std::size_t m_tiles = a.grid_rows();
  const std::size_t n_tiles = b.grid_cols();
  const std::size_t k_tiles = a.grid_cols();
  const std::size_t tile_k = a.tile_cols();
  const bool condense_a = options.mode == ExecMode::kDualSparse;
  const bool condense_b = options.mode != ExecMode::kDense;

  std::vector<CondensedTile> b_tiles(k_tiles * n_tiles);
  for (std::size_t kt = 0; kt < k_tiles; ++kt) {
    for (std::size_t tj = 0; tj < n_tiles; ++tj) {
      if (condense_b && !b.warp_bit(kt, tj)) continue;
      b_tiles[kt * n_tiles + tj] = prepare_lanes(b, kt, tj, Side::kB, condense_b, options.b_levels);
    }
  }

  DenseMatrix out(a.rows(), b.cols());
  std::vector<StepTrace> traces(m_tiles * n_tiles, StepTrace(options.mode, options.keep_records));

  parallel_for(m_tiles, options.threads, [&](std::size_t ti) {
    std::vector<CondensedTile> a_tiles(k_tiles);
    for (std::size_t kt = 0; kt < k_tiles; ++kt) {
      if (condense_a && !a.warp_bit(ti, kt)) continue;
      a_tiles[kt] = prepare_lanes(a, ti, kt, Side::kA, condense_a, options.a_levels);
    }
    const std::size_t valid_rows = a.valid_rows(ti);
    for (std::size_t tj = 0; tj < n_tiles; ++tj) {
      const std::size_t valid_cols = b.valid_cols(tj);
      std::unique_ptr<PartialObserver> observer = options.observer ? options.observer(ti, tj) : nullptr;
      StepTrace& trace = traces[ti * n_tiles + tj];
      Accumulator acc;
      if (bias) {
        for (std::size_t r = 0; r < valid_rows; ++r)
          for (std::size_t c = 0; c < valid_cols; ++c)
            acc(r, c) = (*bias)(ti * a.tile_rows() + r, tj * b.tile_cols() + c);
      }
      WarpContext ctx{options.mode, static_cast<std::uint32_t>(ti), static_cast<std::uint32_t>(tj), 0,
                      valid_rows, valid_cols, observer.get()};
      const auto baseline = static_cast<std::uint8_t>(baseline_substeps(valid_rows, valid_cols));
      for (std::size_t kt = 0; kt < k_tiles; ++kt) {
        const std::size_t valid_k = a.valid_cols(kt);
        bool skip = false;
        if (options.mode == ExecMode::kSingleSparse) skip = !b.warp_bit(kt, tj);
        if (options.mode == ExecMode::kDualSparse) skip = !a.warp_bit(ti, kt) || !b.warp_bit(kt, tj);
        if (skip) {
          for (std::size_t k = 0; k < valid_k; ++k) {
            trace.add_set({static_cast<std::uint32_t>(ti), static_cast<std::uint32_t>(tj),
                           static_cast<std::uint32_t>(kt * tile_k + k), 0, baseline, true},
                          0, valid_rows * valid_cols);
          }
          continue;
        }
        const std::span<const CondensedLane> a_lanes(a_tiles[kt].lanes);
        const std::span<const CondensedLane> b_lanes(b_tiles[kt * n_tiles + tj].lanes);
        for (std::size_t k0 = 0; k0 < valid_k; k0 += options.k_depth) {
          const std::size_t depth = std::min(options.k_depth, valid_k - k0);
          ctx.k_offset = static_cast<std::uint32_t>(kt * tile_k + k0);
          warp_spgemm(a_lanes.subspan(k0, depth), b_lanes.subspan(k0, depth), acc, trace, ctx);
        }
      }
      for (std::size_t r = 0; r < valid_rows; ++r)
        for (std::size_t c = 0; c < valid_cols; ++c) out(ti * a.tile_rows() + r, tj * b.tile_cols() + c) = acc(r, c);
    }
  });

  StepTrace total(options.mode, options.keep_records);
  for (const StepTrace& t : traces) total.append(t);
  return {std::move(out), std::move(total)};
}

}  // namespace dstc
