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

#include "dstc/spconv.hpp"

#include <algorithm>
#include <string>

#include "dstc/error.hpp"
#include "dstc/parallel.hpp"

namespace dstc {

namespace {

// Left-operand lanes of one 32x32 lowered block, built from the bitmap rows on demand.
struct ABlock {
  std::vector<CondensedLane> lanes;
  bool any = false;
  std::size_t buffered = 0;
};

ABlock lower_block(const SparseIm2col& lowering, std::size_t tile_row, std::size_t k_begin, std::size_t k_count,
                   ExecMode mode, const QuantumLevels& levels) {
  ABlock block;
  block.lanes.reserve(k_count);
  for (std::size_t k = 0; k < k_count; ++k) {
    LoweredLane lowered = lowering.lane(tile_row, k_begin + k);
    block.any = block.any || lowered.lane.count > 0;
    block.buffered += lowered.lane.count;
    if (mode == ExecMode::kDualSparse) {
      lowered.lane.padded = static_cast<std::uint32_t>(levels.quantize(lowered.lane.count));
      block.lanes.push_back(lowered.lane);
    } else {
      const std::array<float, kLaneWidth> dense = lowered.lane.expand();
      block.lanes.push_back(dense_lane({dense.data(), lowered.valid}, kOhmmaRows));
    }
  }
  return block;
}

}  // namespace

ConvResult spconv(const ConvProblem& problem, const ConvOptions& options) {
  const ConvShape& shape = problem.shape;
  const SparseIm2col lowering(problem.input, shape);
  const std::size_t k_total = shape.lowered_cols();
  if (problem.weights.rows() != shape.filters || problem.weights.cols() != k_total) {
    throw ShapeError("weights are " + std::to_string(problem.weights.rows()) + "x" +
                     std::to_string(problem.weights.cols()) + ", expected " + std::to_string(shape.filters) + "x" +
                     std::to_string(k_total));
  }

  const ExecMode mode = problem.mode;
  const bool condense_b = mode != ExecMode::kDense;
  const TwoLevelBitmapMatrix b =
      encode(decode_single(problem.weights).transposed(), TileShape{kLaneWidth, kLaneWidth}, ValueOrder::kRowMajor);
  const std::size_t m_rows = shape.lowered_rows();
  const std::size_t m_tiles = lowering.tile_rows();
  const std::size_t k_tiles = b.grid_rows();
  const std::size_t n_tiles = b.grid_cols();

  std::vector<CondensedTile> b_tiles(k_tiles * n_tiles);
  for (std::size_t kt = 0; kt < k_tiles; ++kt) {
    for (std::size_t tj = 0; tj < n_tiles; ++tj) {
      if (condense_b && !b.warp_bit(kt, tj)) continue;
      b_tiles[kt * n_tiles + tj] = prepare_lanes(b, kt, tj, Side::kB, condense_b, options.b_levels);
    }
  }

  DenseMatrix out(m_rows, shape.filters);
  std::vector<StepTrace> traces(m_tiles * n_tiles, StepTrace(mode, options.keep_records));
  std::vector<LoweringStats> stats(m_tiles);

  parallel_for(m_tiles, options.threads, [&](std::size_t ti) {
    const std::size_t valid_rows = std::min(kLaneWidth, m_rows - ti * kLaneWidth);
    std::vector<Accumulator> accs(n_tiles);
    std::vector<std::unique_ptr<PartialObserver>> observers(n_tiles);
    if (options.observer) {
      for (std::size_t tj = 0; tj < n_tiles; ++tj) observers[tj] = options.observer(ti, tj);
    }

    for (std::size_t kt = 0; kt < k_tiles; ++kt) {
      const std::size_t valid_k = b.valid_rows(kt);
      const ABlock a = lower_block(lowering, ti, kt * kLaneWidth, valid_k, mode, options.a_levels);
      LoweringStats& st = stats[ti];
      st.lanes += valid_k;
      st.values += a.buffered;
      st.peak_buffered_values = std::max(st.peak_buffered_values, a.buffered);

      for (std::size_t tj = 0; tj < n_tiles; ++tj) {
        const std::size_t valid_cols = b.valid_cols(tj);
        StepTrace& trace = traces[ti * n_tiles + tj];
        bool skip = false;
        if (mode == ExecMode::kSingleSparse) skip = !b.warp_bit(kt, tj);
        if (mode == ExecMode::kDualSparse) skip = !a.any || !b.warp_bit(kt, tj);
        if (skip) {
          const auto baseline = static_cast<std::uint8_t>(baseline_substeps(valid_rows, valid_cols));
          for (std::size_t k = 0; k < valid_k; ++k) {
            trace.add_set({static_cast<std::uint32_t>(ti), static_cast<std::uint32_t>(tj),
                           static_cast<std::uint32_t>(kt * kLaneWidth + k), 0, baseline, true},
                          0, valid_rows * valid_cols);
          }
          continue;
        }
        const WarpContext ctx{mode,      static_cast<std::uint32_t>(ti), static_cast<std::uint32_t>(tj),
                              static_cast<std::uint32_t>(kt * kLaneWidth), valid_rows, valid_cols,
                              observers[tj].get()};
        const std::span<const CondensedLane> b_lanes(b_tiles[kt * n_tiles + tj].lanes);
        warp_spgemm(a.lanes, b_lanes.subspan(0, valid_k), accs[tj], trace, ctx);
      }
    }

    for (std::size_t tj = 0; tj < n_tiles; ++tj) {
      const std::size_t valid_cols = b.valid_cols(tj);
      for (std::size_t r = 0; r < valid_rows; ++r)
        for (std::size_t c = 0; c < valid_cols; ++c) out(ti * kLaneWidth + r, tj * kLaneWidth + c) = accs[tj](r, c);
    }
  });

  ConvResult result{std::move(out), StepTrace(mode, options.keep_records), {}};
  for (const StepTrace& t : traces) result.trace.append(t);
  for (const LoweringStats& st : stats) {
    result.lowering.lanes += st.lanes;
    result.lowering.values += st.values;
    result.lowering.peak_buffered_values = std::max(result.lowering.peak_buffered_values, st.peak_buffered_values);
  }
  return result;
}

}  // namespace dstc
