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

#include "dstc/cost_model.hpp"

#include <algorithm>
#include <bit>
#include <cstdio>
#include <ostream>
#include <string>

#include "dstc/error.hpp"

namespace dstc {

namespace {

std::uint64_t ceil_div(std::uint64_t a, std::uint64_t b) { return (a + b - 1) / b; }

std::string csv_field(std::string_view text) {
  if (text.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(text);
  std::string out = "\"";
  for (char ch : text) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + "\"";
}

}  // namespace

void CostConfig::validate() const {
  if (ohmma_issue_per_cycle == 0 || pipeline_depth == 0 || acc_ports == 0 || acc_banks == 0 || oc_window == 0 ||
      bohmma_cost == 0) {
    throw ConfigError("cost model counts must all be >= 1");
  }
  if (oc_window < acc_ports) {
    throw ConfigError("operand collector window (" + std::to_string(oc_window) + ") is narrower than the " +
                      std::to_string(acc_ports) + " accumulation ports");
  }
  if (acc_capacity < kLaneWidth * kLaneWidth * 4) {
    throw ConfigError("accumulation buffer of " + std::to_string(acc_capacity) +
                      " bytes cannot hold a 32x32 fp32 tile");
  }
}

CostConfig CostConfig::port_matched() {
  CostConfig cfg;
  cfg.acc_ports = 128;
  cfg.acc_banks = kLaneWidth * kLaneWidth;
  cfg.oc_window = 256;
  return cfg;
}

std::vector<Access> partial_accesses(const PartialProduct& partial, std::uint32_t instruction) {
  std::vector<Access> out;
  out.reserve(popcount(partial.bitmap));
  for (std::uint32_t r = 0; r < kLaneWidth; ++r) {
    std::uint32_t bits = partial.bitmap[r];
    while (bits != 0) {
      out.push_back({r, static_cast<std::uint32_t>(std::countr_zero(bits)), instruction});
      bits &= bits - 1;
    }
  }
  return out;
}

std::vector<Access> partial_accesses(std::span<const PartialProduct> partials) {
  std::vector<Access> out;
  for (std::size_t i = 0; i < partials.size(); ++i) {
    const std::vector<Access> one = partial_accesses(partials[i], static_cast<std::uint32_t>(i));
    out.insert(out.end(), one.begin(), one.end());
  }
  return out;
}

std::size_t bank_of(const Access& access, const CostConfig& cfg) {
  if (access.row >= kLaneWidth || access.col >= kLaneWidth) {
    throw BoundsError("access (" + std::to_string(access.row) + ", " + std::to_string(access.col) +
                      ") lies outside the 32x32 accumulation tile");
  }
  return (access.row * kLaneWidth + access.col) % cfg.acc_banks;
}

std::uint64_t bank_lower_bound(std::span<const Access> accesses, const CostConfig& cfg) {
  std::vector<std::uint64_t> load(cfg.acc_banks, 0);
  for (const Access& a : accesses) ++load[bank_of(a, cfg)];
  return load.empty() ? 0 : *std::max_element(load.begin(), load.end());
}

AccumulationScheduler::AccumulationScheduler(AccumulationMode mode, const CostConfig& cfg, bool use_collector)
    : mode_(mode), cfg_(cfg), use_collector_(use_collector) {
  cfg_.validate();
  bank_busy_.assign(cfg_.acc_banks, 0);
  taken_.assign(cfg_.oc_window, 0);
}

std::size_t AccumulationScheduler::lookahead() const { return use_collector_ ? cfg_.oc_window : cfg_.acc_ports; }

void AccumulationScheduler::push(const Access& access) {
  bank_of(access, cfg_);
  ++accesses_;
  if (mode_ == AccumulationMode::kDense) return;
  pending_.push_back(access);
  // The next cycle only looks at the head of the queue, so it can run once that is full.
  while (pending_.size() >= lookahead()) step();
}

void AccumulationScheduler::push(const PartialProduct& partial) {
  const std::uint32_t instruction = next_instruction_++;
  for (std::uint32_t r = 0; r < kLaneWidth; ++r) {
    std::uint32_t bits = partial.bitmap[r];
    while (bits != 0) {
      push(Access{r, static_cast<std::uint32_t>(std::countr_zero(bits)), instruction});
      bits &= bits - 1;
    }
  }
}

void AccumulationScheduler::step() {
  const std::uint64_t stamp = ++cycles_;
  std::size_t issued = 0;
  if (!use_collector_) {
    const std::uint32_t instruction = pending_.front().instruction;
    while (issued < pending_.size() && issued < cfg_.acc_ports && pending_[issued].instruction == instruction) {
      const std::size_t bank = bank_of(pending_[issued], cfg_);
      if (bank_busy_[bank] == stamp) break;
      bank_busy_[bank] = stamp;
      ++issued;
    }
    pending_.erase(pending_.begin(), pending_.begin() + static_cast<std::ptrdiff_t>(issued));
    return;
  }

  const std::size_t window = std::min(cfg_.oc_window, pending_.size());
  for (std::size_t i = 0; i < window; ++i) {
    taken_[i] = 0;
    if (issued == cfg_.acc_ports) continue;
    const std::size_t bank = bank_of(pending_[i], cfg_);
    if (bank_busy_[bank] == stamp) continue;
    bank_busy_[bank] = stamp;
    taken_[i] = 1;
    ++issued;
  }
  std::size_t keep = 0;
  for (std::size_t i = 0; i < window; ++i)
    if (!taken_[i]) pending_[keep++] = pending_[i];
  pending_.erase(pending_.begin() + static_cast<std::ptrdiff_t>(keep),
                 pending_.begin() + static_cast<std::ptrdiff_t>(window));
}

std::uint64_t AccumulationScheduler::finish() {
  if (mode_ == AccumulationMode::kDense) return ceil_div(accesses_, cfg_.acc_ports);
  while (!pending_.empty()) step();
  return cycles_;
}

std::uint64_t simulate_accumulation(std::span<const Access> accesses, AccumulationMode mode, const CostConfig& cfg,
                                    bool use_collector) {
  AccumulationScheduler sched(mode, cfg, use_collector);
  for (const Access& a : accesses) sched.push(a);
  return sched.finish();
}

std::uint64_t simulate_accumulation(std::span<const PartialProduct> partials, AccumulationMode mode,
                                    const CostConfig& cfg, bool use_collector) {
  AccumulationScheduler sched(mode, cfg, use_collector);
  for (const PartialProduct& p : partials) sched.push(p);
  return sched.finish();
}

AccumulationMode accumulation_mode(ExecMode mode) {
  return mode == ExecMode::kDense ? AccumulationMode::kDense : AccumulationMode::kSparse;
}

class AccumulationTracker::TileObserver : public PartialObserver {
 public:
  explicit TileObserver(AccumulationTracker& owner)
      : owner_(owner), sched_(accumulation_mode(owner.mode_), owner.cfg_, owner.cfg_.use_operand_collector) {}

  ~TileObserver() override {
    const bool dense = owner_.mode_ == ExecMode::kDense;
    const std::uint64_t writes = sched_.accesses();
    const std::uint64_t cycles = dense ? 0 : sched_.finish();
    std::lock_guard<std::mutex> lock(owner_.mutex_);
    if (dense) {
      owner_.dense_writes_ += writes;
    } else {
      owner_.sparse_cycles_ += cycles;
    }
  }

  void on_partial(const PartialProduct& partial) override { sched_.push(partial); }

 private:
  AccumulationTracker& owner_;
  AccumulationScheduler sched_;
};

AccumulationTracker::AccumulationTracker(ExecMode mode, const CostConfig& cfg) : mode_(mode), cfg_(cfg) {
  cfg_.validate();
}

ObserverFactory AccumulationTracker::factory() {
  return [this](std::size_t, std::size_t) -> std::unique_ptr<PartialObserver> {
    return std::make_unique<TileObserver>(*this);
  };
}

std::uint64_t AccumulationTracker::cycles() const {
  std::lock_guard<std::mutex> lock(mutex_);
  return sparse_cycles_ + ceil_div(dense_writes_, cfg_.acc_ports);
}

InstructionCounts count_instructions(const StepTrace& trace) {
  InstructionCounts c;
  c.ohmma_issued = trace.executed_substeps();
  c.ohmma_skipped = trace.live_baseline_substeps() - trace.executed_substeps();
  c.ohmma_warp_skipped = trace.baseline_substeps() - trace.live_baseline_substeps();
  c.bohmma_issued = trace.bohmma();
  return c;
}

std::uint64_t issue_cycles(const InstructionCounts& counts, const CostConfig& cfg) {
  const std::uint64_t values = counts.ohmma_issued + counts.ohmma_skipped * cfg.skipped_issue_cost;
  const std::uint64_t bitmaps = counts.bohmma_issued * cfg.bohmma_cost;
  const std::uint64_t raw = cfg.overlap_bitmap_issue ? std::max(values, bitmaps) : values + bitmaps;
  return ceil_div(raw, cfg.ohmma_issue_per_cycle);
}

CostReport total_cost(const StepTrace& trace, std::uint64_t accumulation_cycles, const CostConfig& cfg) {
  cfg.validate();
  const InstructionCounts counts = count_instructions(trace);
  CostReport r;
  r.ohmma_issued = counts.ohmma_issued;
  r.ohmma_skipped = counts.ohmma_skipped;
  r.ohmma_warp_skipped = counts.ohmma_warp_skipped;
  r.bohmma_issued = counts.bohmma_issued;
  r.issue_cycles = issue_cycles(counts, cfg);
  r.accumulation_cycles = accumulation_cycles;
  r.total_cycles = std::max(r.issue_cycles, r.accumulation_cycles) + cfg.pipeline_depth;
  r.baseline_cycles = std::max(ceil_div(counts.baseline(), cfg.ohmma_issue_per_cycle),
                               ceil_div(trace.baseline_writes(), cfg.acc_ports)) +
                      cfg.pipeline_depth;
  r.speedup = static_cast<double>(r.baseline_cycles) / static_cast<double>(r.total_cycles);
  return r;
}

CostReport total_cost(const StepTrace& trace, std::span<const PartialProduct> partials, const CostConfig& cfg) {
  const std::uint64_t acc =
      simulate_accumulation(partials, accumulation_mode(trace.mode()), cfg, cfg.use_operand_collector);
  return total_cost(trace, acc, cfg);
}

void write_cost_csv_header(std::ostream& out) {
  out << "scenario,ohmma_issued,ohmma_skipped,bohmma_issued,issue_cycles,accumulation_cycles,total_cycles,"
         "baseline_cycles,speedup\r\n";
}

void write_cost_csv_row(std::ostream& out, std::string_view scenario, const CostReport& r) {
  char speedup[32];
  std::snprintf(speedup, sizeof(speedup), "%.6f", r.speedup);
  out << csv_field(scenario) << ',' << r.ohmma_issued << ',' << r.ohmma_skipped << ',' << r.bohmma_issued << ','
      << r.issue_cycles << ',' << r.accumulation_cycles << ',' << r.total_cycles << ',' << r.baseline_cycles << ','
      << speedup << "\r\n";
}

}  // namespace dstc
