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

#include <cstddef>
#include <cstdint>
#include <deque>
#include <iosfwd>
#include <memory>
#include <mutex>
#include <span>
#include <string_view>
#include <vector>

#include "dstc/spgemm.hpp"

namespace dstc {

struct CostConfig {
  std::size_t ohmma_issue_per_cycle = 1;
  std::size_t pipeline_depth = 4;
  std::size_t acc_ports = 16;
  std::size_t acc_banks = 16;
  std::size_t acc_capacity = kLaneWidth * kLaneWidth * 4;  // bytes
  std::size_t oc_window = 32;
  std::size_t bohmma_cost = 1;
  // Issue cycles charged per predicated-off OHMMA.
  std::size_t skipped_issue_cost = 0;
  // BOHMMA runs on the bitmap unit alongside the value datapath; when false its cycles add
  // to the OHMMA issue stream instead of overlapping it.
  bool overlap_bitmap_issue = true;
  bool use_operand_collector = true;

  // Throws ConfigError on zero counts, a collector window narrower than the port count,
  // or a buffer too small for one 32x32 fp32 tile.
  void validate() const;

  // Ports and banks wide enough that accumulation never bounds a 32x32 warp tile.
  static CostConfig port_matched();
};

enum class AccumulationMode : std::uint8_t { kDense, kSparse };

// One write-accumulate into the 32x32 buffer, tagged with the partial product it came from.
struct Access {
  std::uint32_t row = 0;
  std::uint32_t col = 0;
  std::uint32_t instruction = 0;
};

// Set-bit positions of a partial product in (row, col) order.
std::vector<Access> partial_accesses(const PartialProduct& partial, std::uint32_t instruction);
std::vector<Access> partial_accesses(std::span<const PartialProduct> partials);

std::size_t bank_of(const Access& access, const CostConfig& cfg);

// max over banks of the accesses mapped to it.
std::uint64_t bank_lower_bound(std::span<const Access> accesses, const CostConfig& cfg);

// Cycle-level accumulation buffer. Accesses are pushed in arrival order; cycles are
// simulated as soon as enough of the stream is known to decide them.
class AccumulationScheduler {
 public:
  AccumulationScheduler(AccumulationMode mode, const CostConfig& cfg, bool use_collector);

  void push(const Access& access);
  void push(const PartialProduct& partial);
  // Drains the pending accesses and returns the total cycle count.
  std::uint64_t finish();

  std::uint64_t accesses() const { return accesses_; }

 private:
  void step();
  std::size_t lookahead() const;

  AccumulationMode mode_;
  CostConfig cfg_;
  bool use_collector_;
  std::uint32_t next_instruction_ = 0;
  std::uint64_t accesses_ = 0;
  std::uint64_t cycles_ = 0;
  std::deque<Access> pending_;
  std::vector<std::uint64_t> bank_busy_;  // cycle stamp + 1 of the last use
  std::vector<char> taken_;
};

std::uint64_t simulate_accumulation(std::span<const Access> accesses, AccumulationMode mode, const CostConfig& cfg,
                                    bool use_collector);
std::uint64_t simulate_accumulation(std::span<const PartialProduct> partials, AccumulationMode mode,
                                    const CostConfig& cfg, bool use_collector);

AccumulationMode accumulation_mode(ExecMode mode);

// Collects accumulation cycles for every output tile of a device_spgemm or spconv run.
// Each tile owns one buffer; the run's accumulation time is the sum over tiles. Dense
// accumulation is port bound, so its writes are pooled before dividing by the port count.
class AccumulationTracker {
 public:
  AccumulationTracker(ExecMode mode, const CostConfig& cfg);

  ObserverFactory factory();
  std::uint64_t cycles() const;

 private:
  class TileObserver;

  ExecMode mode_;
  CostConfig cfg_;
  mutable std::mutex mutex_;
  std::uint64_t sparse_cycles_ = 0;
  std::uint64_t dense_writes_ = 0;
};

struct InstructionCounts {
  std::uint64_t ohmma_issued = 0;
  std::uint64_t ohmma_skipped = 0;       // predicated off inside live sets
  std::uint64_t ohmma_warp_skipped = 0;  // never issued because a warp bit was 0
  std::uint64_t bohmma_issued = 0;

  std::uint64_t baseline() const { return ohmma_issued + ohmma_skipped + ohmma_warp_skipped; }
};

InstructionCounts count_instructions(const StepTrace& trace);

struct CostReport {
  std::uint64_t ohmma_issued = 0;
  std::uint64_t ohmma_skipped = 0;
  std::uint64_t ohmma_warp_skipped = 0;
  std::uint64_t bohmma_issued = 0;
  std::uint64_t issue_cycles = 0;
  std::uint64_t accumulation_cycles = 0;
  std::uint64_t total_cycles = 0;
  std::uint64_t baseline_cycles = 0;
  double speedup = 1.0;
};

std::uint64_t issue_cycles(const InstructionCounts& counts, const CostConfig& cfg);

// Combines the issue model with a precomputed accumulation time.
CostReport total_cost(const StepTrace& trace, std::uint64_t accumulation_cycles, const CostConfig& cfg);
// Single output tile: the partial stream is simulated here.
CostReport total_cost(const StepTrace& trace, std::span<const PartialProduct> partials, const CostConfig& cfg);

// scenario,ohmma_issued,ohmma_skipped,bohmma_issued,issue_cycles,accumulation_cycles,
// total_cycles,baseline_cycles,speedup
void write_cost_csv_header(std::ostream& out);
void write_cost_csv_row(std::ostream& out, std::string_view scenario, const CostReport& report);

}  // namespace dstc
