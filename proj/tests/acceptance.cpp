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

// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <random>
#include <string>
#include <vector>

#include "dstc/cost_model.hpp"
#include "dstc/generate.hpp"
#include "dstc/im2col.hpp"
#include "dstc/spconv.hpp"
#include "dstc/spgemm.hpp"
#include "oracles.hpp"

using namespace dstc;

namespace {

constexpr double kErrorTolerance = 1e-5;
constexpr double kGemmSeconds = 60.0;
constexpr double kConvSeconds = 120.0;
constexpr double kTargetRatio = 8.0 / 3.0;
constexpr double kRatioTolerance = 0.02;
constexpr double kWarpSkipFloor = 0.80;
constexpr std::uint64_t kSeed = 20240229;

constexpr ExecMode kModes[] = {ExecMode::kDense, ExecMode::kSingleSparse, ExecMode::kDualSparse};

int g_failed = 0;

void report(int id, const char* name, bool pass, const std::string& detail) {
  std::printf("[%s] %d %-28s %s\n", pass ? "PASS" : "FAIL", id, name, detail.c_str());
  std::fflush(stdout);
  if (!pass) ++g_failed;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

template <typename... Args>
std::string fmt(const char* f, Args... args) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), f, args...);
  return buf;
}

struct Capture : PartialObserver {
  std::vector<PartialProduct> partials;
  void on_partial(const PartialProduct& p) override { partials.push_back(p); }
};

CondensedLane lane_with(std::size_t count, const QuantumLevels& levels, std::mt19937_64& rng) {
  std::vector<std::size_t> pos(32);
  for (std::size_t i = 0; i < 32; ++i) pos[i] = i;
  std::shuffle(pos.begin(), pos.end(), rng);
  std::vector<float> lane(32, 0.0f);
  std::uniform_real_distribution<float> u(0.25f, 1.0f);
  for (std::size_t i = 0; i < count; ++i) lane[pos[i]] = u(rng);
  return condense_lane(lane, levels);
}

CostReport gemm_cost(const DenseMatrix& a, const DenseMatrix& b, ExecMode mode, const CostConfig& cfg,
                     StepTrace* trace_out = nullptr) {
  AccumulationTracker tracker(mode, cfg);
  SpgemmOptions opt;
  opt.mode = mode;
  opt.keep_records = false;
  opt.observer = tracker.factory();
  const SpgemmResult r = device_spgemm(encode(a, {}, ValueOrder::kColumnMajor), encode(b), std::nullopt, opt);
  if (trace_out != nullptr) *trace_out = r.trace;
  return total_cost(r.trace, tracker.cycles(), cfg);
}

void spgemm_oracle() {
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(kSeed);
  const std::size_t dims[] = {32, 64, 96, 128};
  const double dens[] = {1.0, 0.75, 0.5, 0.25, 0.1, 0.01};
  double worst = 0.0;
  int bad = 0;
  for (int i = 0; i < 200; ++i) {
    const std::size_t m = dims[rng() % 4], n = dims[rng() % 4], k = dims[rng() % 4];
    const DenseMatrix a = generate_matrix(m, k, dens[rng() % 6], rng());
    const DenseMatrix b = generate_matrix(k, n, dens[rng() % 6], rng());
    SpgemmOptions opt;
    opt.mode = kModes[i % 3];
    const SpgemmResult r = device_spgemm(encode(a, {}, ValueOrder::kColumnMajor), encode(b), std::nullopt, opt);
    const double err = oracle::rel_frobenius(r.output, oracle::gemm(a, b));
    worst = std::max(worst, err);
    bad += err > kErrorTolerance;
  }
  const double secs = seconds_since(t0);
  report(1, "spgemm-oracle", bad == 0 && secs <= kGemmSeconds,
         fmt("200 cases, %d over tol, max rel err %.2e (tol %.0e), %.1f s (limit %.0f s)", bad, worst,
             kErrorTolerance, secs, kGemmSeconds));
}

void spconv_oracle() {
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(kSeed + 1);
  const std::size_t kernels[] = {1, 3, 5};
  double worst = 0.0;
  int bad = 0;
  int layers = 0;
  while (layers < 50) {
    ConvShape s;
    s.kernel_h = s.kernel_w = kernels[rng() % 3];
    s.stride = 1 + rng() % 2;
    s.height = 1 + rng() % 32;
    s.width = 1 + rng() % 32;
    s.channels = 1 + rng() % 16;
    s.filters = 1 + rng() % 16;
    if (s.height < s.kernel_h || s.width < s.kernel_w) continue;
    if ((s.width - s.kernel_w + s.stride) % s.stride != 0) continue;
    ++layers;
    const double act = std::uniform_real_distribution<double>(0.05, 1.0)(rng);
    const double wgt = std::uniform_real_distribution<double>(0.05, 1.0)(rng);
    const FeatureMap x = generate_feature_map(s.height, s.width, s.channels, act, rng());
    const DenseMatrix w = generate_matrix(s.filters, s.lowered_cols(), wgt, rng());
    const DenseMatrix want = oracle::conv(x, w, s);
    for (ExecMode mode : kModes) {
      ConvProblem p;
      p.shape = s;
      for (std::size_t c = 0; c < s.channels; ++c) p.input.push_back(encode_single(x.channel(c)));
      p.weights = encode_single(w);
      p.mode = mode;
      const double err = oracle::rel_frobenius(spconv(p).output, want);
      worst = std::max(worst, err);
      bad += err > kErrorTolerance;
    }
  }
  const double secs = seconds_since(t0);
  report(2, "spconv-oracle", bad == 0 && secs <= kConvSeconds,
         fmt("50 layers x 3 modes, %d over tol, max rel err %.2e (tol %.0e), %.1f s (limit %.0f s)", bad, worst,
             kErrorTolerance, secs, kConvSeconds));
}

void worked_example() {
  std::mt19937_64 rng(kSeed + 2);
  const CondensedLane a = lane_with(20, QuantumLevels::a_side(), rng);
  const CondensedLane b = lane_with(11, QuantumLevels::b_side(), rng);
  Accumulator acc;
  const std::vector<CondensedLane> al{a}, bl{b};
  const StepTrace one = warp_spgemm(al, bl, acc);
  bool ok = a.padded == 24 && b.padded == 16 && one.executed_substeps() == 3 && one.baseline_substeps() == 8;
  std::string detail = fmt("padded %u/%u, %llu of %llu sub-steps;", a.padded, b.padded,
                           static_cast<unsigned long long>(one.executed_substeps()),
                           static_cast<unsigned long long>(one.baseline_substeps()));
  const CostConfig cfg = CostConfig::port_matched();
  for (std::size_t k : {64, 128, 256, 1024}) {
    const std::vector<CondensedLane> ak(k, a), bk(k, b);
    Capture cap;
    WarpContext ctx;
    ctx.observer = &cap;
    Accumulator acck;
    const StepTrace t = warp_spgemm(ak, bk, acck, ctx);
    const double s = total_cost(t, cap.partials, cfg).speedup;
    const bool within = std::abs(s - kTargetRatio) / kTargetRatio <= kRatioTolerance;
    ok = ok && within;
    detail += fmt(" K=%zu %.4f", k, s);
  }
  report(3, "worked-example-8/3", ok, detail + fmt(" (target %.4f +-%.0f%%)", kTargetRatio, kRatioTolerance * 100));
}

void dense_baseline() {
  const CostConfig cfg;
  bool ok = true;
  std::string detail;
  {
    StepTrace t;
    gemm_cost(generate_matrix(16, 16, 1.0, 1), generate_matrix(16, 16, 1.0, 2), ExecMode::kDense, cfg, &t);
    const std::uint64_t cycles = issue_cycles(count_instructions(t), cfg);
    ok = ok && cycles == 32;
    detail += fmt("16x16x16 issue %llu cycles;", static_cast<unsigned long long>(cycles));
  }
  const std::size_t shapes[][3] = {{64, 128, 96}, {128, 64, 32}, {96, 96, 96}, {48, 80, 40}, {256, 256, 64}};
  for (const auto& s : shapes) {
    const CostReport r = gemm_cost(generate_matrix(s[0], s[2], 1.0, 3), generate_matrix(s[2], s[1], 1.0, 4),
                                   ExecMode::kDense, cfg);
    const std::uint64_t want = (s[0] / 8) * (s[1] / 16) * s[2];
    ok = ok && r.ohmma_issued == want && r.speedup == 1.0;
    detail += fmt(" %zux%zux%zu %llu/%llu speedup %.3f;", s[0], s[1], s[2],
                  static_cast<unsigned long long>(r.ohmma_issued), static_cast<unsigned long long>(want), r.speedup);
  }
  report(4, "dense-baseline", ok, detail);
}

void im2col_correctness() {
  std::mt19937_64 rng(kSeed + 4);
  int bad_values = 0, bad_offsets = 0;
  for (int i = 0; i < 100; ++i) {
    ConvShape s;
    s.kernel_h = 1 + rng() % 5;
    s.kernel_w = 1 + rng() % 5;
    s.stride = 1 + rng() % 3;
    s.height = s.kernel_h + rng() % 24;
    s.width = s.kernel_w + s.stride * (rng() % 12);
    s.channels = 1 + rng() % 6;
    const double density = std::uniform_real_distribution<double>(0.02, 0.9)(rng);
    const FeatureMap x = generate_feature_map(s.height, s.width, s.channels, density, rng());
    std::vector<BitmapMatrix> ch;
    for (std::size_t c = 0; c < s.channels; ++c) ch.push_back(encode_single(x.channel(c)));
    const std::vector<LoweredLane> lanes = sparse_im2col_bitmap(ch, s, true);
    bad_values += !(oracle::expand_lanes(lanes, s.lowered_rows(), s.lowered_cols()) == oracle::im2col(x, s));
    bad_offsets += !oracle::segments_consistent(x, s, lanes);
  }
  report(5, "sparse-im2col", bad_values == 0 && bad_offsets == 0,
         fmt("100 maps, %d lowering mismatches, %d offset/popcount mismatches", bad_values, bad_offsets));
}

void warp_skipping() {
  // Zero tiles scattered through both operands.
  std::mt19937_64 rng(kSeed + 5);
  DenseMatrix a = generate_matrix(128, 128, 0.3, rng());
  DenseMatrix b = generate_matrix(128, 128, 0.3, rng());
  for (DenseMatrix* m : {&a, &b})
    for (std::size_t ti = 0; ti < 4; ++ti)
      for (std::size_t tj = 0; tj < 4; ++tj)
        if (rng() % 3 == 0)
          for (std::size_t r = 0; r < 32; ++r)
            for (std::size_t c = 0; c < 32; ++c) (*m)(ti * 32 + r, tj * 32 + c) = 0.0f;
  const TwoLevelBitmapMatrix ea = encode(a, {}, ValueOrder::kColumnMajor), eb = encode(b);
  const SpgemmResult r = device_spgemm(ea, eb);
  std::uint64_t dead_sets = 0, dead_ohmma = 0, live_sets = 0;
  for (const StepRecord& s : r.trace.records()) {
    const std::size_t kt = s.k_index / 32;
    const bool dead = !ea.warp_bit(s.tile_row, kt) || !eb.warp_bit(kt, s.tile_col);
    if (dead) {
      ++dead_sets;
      dead_ohmma += s.executed;
    } else {
      ++live_sets;
    }
  }
  const bool zero_ok = dead_sets > 0 && dead_ohmma == 0 && r.trace.bohmma() == live_sets &&
                       oracle::rel_frobenius(r.output, oracle::gemm(a, b)) <= kErrorTolerance;

  // Clustered 99.9%-sparse 1024x1024: 5% of tiles live, 2% of their elements nonzero.
  const DenseMatrix big = generate_clustered(1024, 1024, 32, 0.05, 0.02, kSeed + 6);
  const double sparsity = 1.0 - static_cast<double>(oracle::nonzeros(big)) / (1024.0 * 1024.0);
  const TwoLevelBitmapMatrix eg = encode(big, {}, ValueOrder::kColumnMajor);
  const double empty_tiles = 1.0 - static_cast<double>(eg.warp_bitmap().popcount()) / (32.0 * 32.0);
  const DenseMatrix rhs = generate_matrix(1024, 1024, 0.01, kSeed + 7);
  SpgemmOptions opt;
  opt.keep_records = false;
  const SpgemmResult g = device_spgemm(eg, encode(rhs), std::nullopt, opt);
  const double skipped = static_cast<double>(g.trace.warp_skipped_sets()) / static_cast<double>(g.trace.sets());
  const bool big_ok = sparsity >= 0.999 - 1e-4 && empty_tiles >= kWarpSkipFloor && skipped >= kWarpSkipFloor;
  report(6, "warp-bit-skipping", zero_ok && big_ok,
         fmt("zero tile pairs: %llu sets, %llu OHMMA, BOHMMA %llu == live %llu; 1024^2 at %.4f%% sparse: %.1f%% "
             "empty tiles, %.1f%% warp sets skipped (floor %.0f%%)",
             static_cast<unsigned long long>(dead_sets), static_cast<unsigned long long>(dead_ohmma),
             static_cast<unsigned long long>(r.trace.bohmma()), static_cast<unsigned long long>(live_sets),
             sparsity * 100, empty_tiles * 100, skipped * 100, kWarpSkipFloor * 100));
}

void accumulation_scheduler() {
  std::mt19937_64 rng(kSeed + 8);
  const CostConfig cfg;
  int dominance = 0, bound = 0, dense = 0;
  for (int i = 0; i < 1000; ++i) {
    std::vector<Access> trace;
    const std::uint32_t instructions = 1 + rng() % 12;
    for (std::uint32_t ins = 0; ins < instructions; ++ins) {
      if (i % 2 == 0) {
        // Rank-1 partials, as the warp kernel emits them.
        PartialProduct p;
        const auto ra = static_cast<std::uint32_t>(rng()) & static_cast<std::uint32_t>(rng());
        const auto rb = static_cast<std::uint32_t>(rng()) & static_cast<std::uint32_t>(rng());
        p.bitmap = multiply_bitmap(ra, rb);
        const std::vector<Access> one = partial_accesses(p, ins);
        trace.insert(trace.end(), one.begin(), one.end());
      } else {
        const std::size_t n = 1 + rng() % 64;
        for (std::size_t j = 0; j < n; ++j)
          trace.push_back({static_cast<std::uint32_t>(rng() % 32), static_cast<std::uint32_t>(rng() % 32), ins});
      }
    }
    const std::uint64_t with = simulate_accumulation(trace, AccumulationMode::kSparse, cfg, true);
    const std::uint64_t without = simulate_accumulation(trace, AccumulationMode::kSparse, cfg, false);
    const std::uint64_t lower = oracle::busiest_bank(trace, cfg.acc_banks);
    dominance += with > without;
    bound += with < lower || without < lower;
    const std::uint64_t d = simulate_accumulation(trace, AccumulationMode::kDense, cfg, true);
    dense += d != (trace.size() + 15) / 16;
  }
  report(7, "accumulation-scheduler", dominance == 0 && bound == 0 && dense == 0,
         fmt("1000 traces: %d collector > no-collector, %d below bank bound, %d dense != ceil(n/16)", dominance,
             bound, dense));
}

void monotonicity() {
  std::mt19937_64 rng(kSeed + 9);
  const CostConfig cfg;
  int violations = 0;
  int steps = 0;
  std::string first;
  for (int chain = 0; chain < 50; ++chain) {
    const std::size_t m = 32 * (1 + rng() % 3), n = 32 * (1 + rng() % 3), k = 32 * (1 + rng() % 3);
    DenseMatrix a = generate_matrix(m, k, std::uniform_real_distribution<double>(0.2, 1.0)(rng), rng());
    DenseMatrix b = generate_matrix(k, n, std::uniform_real_distribution<double>(0.2, 1.0)(rng), rng());
    const ExecMode mode = kModes[chain % 3];
    std::uint64_t prev = gemm_cost(a, b, mode, cfg).total_cycles;
    for (int step = 0; step < 12; ++step) {
      DenseMatrix& target = (step % 2 == 0) ? a : b;
      std::vector<std::size_t> live;
      for (std::size_t i = 0; i < target.size(); ++i)
        if (target.data()[i] != 0.0f) live.push_back(i);
      if (live.empty()) break;
      std::shuffle(live.begin(), live.end(), rng);
      const std::size_t zap = std::max<std::size_t>(1, live.size() / 5);
      for (std::size_t i = 0; i < zap; ++i) target.data()[live[i]] = 0.0f;
      const std::uint64_t now = gemm_cost(a, b, mode, cfg).total_cycles;
      ++steps;
      if (now > prev) {
        if (violations == 0) first = fmt(" first: chain %d step %d %llu -> %llu", chain, step,
                                          static_cast<unsigned long long>(prev), static_cast<unsigned long long>(now));
        ++violations;
      }
      prev = now;
    }
  }
  report(8, "monotone-total-cycles", violations == 0,
         fmt("50 chains, %d zeroing steps, %d increases", steps, violations) + first);
}

void uneven_distribution() {
  // One global row of 128 with 37.5% zeros, split over four 32-wide warp lanes.
  const DenseMatrix a = generate_matrix(32, 1, 1.0, kSeed + 10);
  DenseMatrix even(1, 128), clustered(1, 128);
  for (std::size_t c = 0; c < 128; ++c) {
    even(0, c) = (c % 32) < 20 ? 1.0f : 0.0f;                     // 12 zeros per lane
    clustered(0, c) = (c / 32) % 2 == 1 && (c % 32) >= 8 ? 0.0f : 1.0f;  // 24 zeros in lanes 1 and 3
  }
  const std::size_t zeros_even = 128 - oracle::nonzeros(even);
  const std::size_t zeros_clustered = 128 - oracle::nonzeros(clustered);
  const std::uint64_t se = device_spgemm(encode(a), encode(even)).trace.executed_substeps();
  const std::uint64_t sc = device_spgemm(encode(a), encode(clustered)).trace.executed_substeps();
  report(9, "uneven-distribution", zeros_even == 48 && zeros_clustered == 48 && sc < se,
         fmt("row sparsity %.1f%%: even spread %llu sub-steps, concentrated %llu", 100.0 * zeros_even / 128,
             static_cast<unsigned long long>(se), static_cast<unsigned long long>(sc)));
}

}  // namespace

int main() {
  spgemm_oracle();
  spconv_oracle();
  worked_example();
  dense_baseline();
  im2col_correctness();
  warp_skipping();
  accumulation_scheduler();
  monotonicity();
  uneven_distribution();
  std::printf("%d of 9 criteria failed\n", g_failed);
  return g_failed == 0 ? 0 : 1;
}
