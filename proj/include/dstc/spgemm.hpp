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

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "dstc/condense.hpp"
#include "dstc/dense.hpp"
#include "dstc/two_level.hpp"

namespace dstc {

// One OHMMA instruction multiplies an 8-entry slice of a left lane with a 16-entry slice
// of a right lane. A full 32x32x1 outer product is therefore 4 x 2 = 8 sub-steps.
inline constexpr std::size_t kOhmmaRows = 8;
inline constexpr std::size_t kOhmmaCols = 16;
inline constexpr std::size_t kOhmmaOutputs = kOhmmaRows * kOhmmaCols;
inline constexpr std::size_t kDenseSubsteps = (kLaneWidth / kOhmmaRows) * (kLaneWidth / kOhmmaCols);

// Row r holds the right-lane bits that pair with left position r.
using ProductBitmap = std::array<std::uint32_t, kLaneWidth>;

ProductBitmap multiply_bitmap(std::uint32_t a_bits, std::uint32_t b_bits);
std::size_t popcount(const ProductBitmap& bitmap);

// k_a x k_b cross product of two condensed lanes, padding included.
struct ValueBlock {
  std::size_t k_a = 0;
  std::size_t k_b = 0;
  std::array<float, kLaneWidth * kLaneWidth> values{};

  float operator()(std::size_t i, std::size_t j) const { return values[i * k_b + j]; }
};

ValueBlock multiply_value(std::span<const float> a_lane, std::span<const float> b_lane);

struct PartialProduct {
  ProductBitmap bitmap{};
  ValueBlock block;
};

// multiply_bitmap + multiply_value on a pair of condensed lanes.
PartialProduct outer_product(const CondensedLane& a, const CondensedLane& b);

// The resident 32x32 output block.
struct Accumulator {
  std::array<float, kLaneWidth * kLaneWidth> tile{};

  float operator()(std::size_t r, std::size_t c) const { return tile[r * kLaneWidth + c]; }
  float& operator()(std::size_t r, std::size_t c) { return tile[r * kLaneWidth + c]; }
};

// Gather-accumulate-scatter: the i-th set row and j-th set column of the product bitmap
// receive block(i, j). Rows are visited top to bottom, columns left to right.
// Throws CorruptPartialError when the bitmap is not a rank-1 pattern that fits the block.
void merge(const PartialProduct& partial, Accumulator& acc);

// Number of OHMMA sub-steps needed for padded lane lengths k_a, k_b inside an output
// tile with the given valid extent.
std::size_t executed_substeps(std::size_t k_a, std::size_t k_b, std::size_t valid_rows = kLaneWidth,
                              std::size_t valid_cols = kLaneWidth);
std::size_t baseline_substeps(std::size_t valid_rows = kLaneWidth, std::size_t valid_cols = kLaneWidth);

enum class ExecMode : std::uint8_t {
  kDense,         // nothing condensed, every sub-step runs
  kSingleSparse,  // only the right (weight) operand is condensed
  kDualSparse,    // both operands condensed
};

const char* to_string(ExecMode mode);
ExecMode parse_exec_mode(std::string_view text);

struct StepRecord {
  std::uint32_t tile_row = 0;
  std::uint32_t tile_col = 0;
  std::uint32_t k_index = 0;
  std::uint8_t executed = 0;
  std::uint8_t baseline = 0;
  bool warp_skipped = false;

  friend bool operator==(const StepRecord&, const StepRecord&) = default;
};

// Sub-step accounting for one warp, one output tile, or a whole multiplication.
// Aggregate counters are always kept; per-set records only when requested.
class StepTrace {
 public:
  explicit StepTrace(ExecMode mode = ExecMode::kDualSparse, bool keep_records = true)
      : mode_(mode), keep_records_(keep_records) {}

  ExecMode mode() const { return mode_; }
  bool keeps_records() const { return keep_records_; }

  // One 32x32x1 set. `outputs` is the number of accumulator cells written.
  void add_set(const StepRecord& record, std::size_t outputs, std::size_t valid_outputs);

  void append(const StepTrace& other);

  std::span<const StepRecord> records() const { return records_; }
  std::uint64_t sets() const { return sets_; }
  std::uint64_t warp_skipped_sets() const { return warp_skipped_sets_; }
  std::uint64_t executed_substeps() const { return executed_; }
  // Sub-steps of every set, as if nothing were skipped.
  std::uint64_t baseline_substeps() const { return baseline_; }
  // Sub-steps of the sets that survived warp-bit skipping.
  std::uint64_t live_baseline_substeps() const { return live_baseline_; }
  // One bitmap outer product per live set in the sparse modes.
  std::uint64_t bohmma() const { return bohmma_; }
  std::uint64_t accumulator_writes() const { return writes_; }
  // Accumulator cells a dense run would write.
  std::uint64_t baseline_writes() const { return baseline_writes_; }

  double speedup() const;

  // tile_row,tile_col,k_index,executed_substeps,baseline_substeps,skipped_by_warp_bit
  void write_csv(std::ostream& out) const;

 private:
  ExecMode mode_;
  bool keep_records_;
  std::vector<StepRecord> records_;
  std::uint64_t sets_ = 0;
  std::uint64_t warp_skipped_sets_ = 0;
  std::uint64_t executed_ = 0;
  std::uint64_t baseline_ = 0;
  std::uint64_t live_baseline_ = 0;
  std::uint64_t bohmma_ = 0;
  std::uint64_t writes_ = 0;
  std::uint64_t baseline_writes_ = 0;
};

// Receives the partial products of one output tile in execution order.
class PartialObserver {
 public:
  virtual ~PartialObserver() = default;
  virtual void on_partial(const PartialProduct& partial) = 0;
};

using ObserverFactory =
    std::function<std::unique_ptr<PartialObserver>(std::size_t tile_row, std::size_t tile_col)>;

struct WarpContext {
  ExecMode mode = ExecMode::kDualSparse;
  std::uint32_t tile_row = 0;
  std::uint32_t tile_col = 0;
  std::uint32_t k_offset = 0;
  std::size_t valid_rows = kLaneWidth;
  std::size_t valid_cols = kLaneWidth;
  PartialObserver* observer = nullptr;
};

// Outer-product warp tile: for each k, multiply the k-th left and right lanes and merge
// the partial into `acc` in ascending k. Appends one record per k to `trace`.
void warp_spgemm(std::span<const CondensedLane> a_lanes, std::span<const CondensedLane> b_lanes,
                 Accumulator& acc, StepTrace& trace, const WarpContext& context = {});

// Convenience form that returns a fresh trace.
StepTrace warp_spgemm(std::span<const CondensedLane> a_lanes, std::span<const CondensedLane> b_lanes,
                      Accumulator& acc, const WarpContext& context = {});

// Lanes of one encoded tile as the warp kernel consumes them: condensed and quantized, or
// taken verbatim over the tile's valid extent for dense execution.
CondensedTile prepare_lanes(const TwoLevelBitmapMatrix& matrix, std::size_t grid_row, std::size_t grid_col,
                            Side side, bool condensed, const QuantumLevels& levels);

struct SpgemmOptions {
  ExecMode mode = ExecMode::kDualSparse;
  std::size_t k_depth = 16;  // K columns per thread-block iteration
  std::size_t threads = 1;
  bool keep_records = true;
  ObserverFactory observer;
  QuantumLevels a_levels = QuantumLevels::a_side();
  QuantumLevels b_levels = QuantumLevels::b_side();
};

struct SpgemmResult {
  DenseMatrix output;
  StepTrace trace;
};

// D = A x B + C over two-level encoded operands. Output tiles are independent; within a
// tile the K loop runs in ascending order and skips tile pairs with a zero warp bit.
SpgemmResult device_spgemm(const TwoLevelBitmapMatrix& a, const TwoLevelBitmapMatrix& b,
                           const std::optional<DenseMatrix>& bias = std::nullopt,
                           const SpgemmOptions& options = {});

}  // namespace dstc
