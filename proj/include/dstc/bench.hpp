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
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "dstc/cost_model.hpp"
#include "dstc/im2col.hpp"
#include "dstc/spgemm.hpp"

namespace dstc {

inline constexpr double kOracleTolerance = 1e-5;

enum class ScenarioKind : std::uint8_t { kGemm, kConv, kIm2colBench };

const char* to_string(ScenarioKind kind);

struct GemmParams {
  std::size_t m = 32;
  std::size_t n = 32;
  std::size_t k = 32;
  double a_density = 1.0;
  double b_density = 1.0;
};

// One convolution layer as read from a layer document.
struct LayerParams {
  ConvShape shape;
  double act_density = 1.0;
  double wgt_density = 1.0;
};

struct Scenario {
  std::string name;
  ScenarioKind kind = ScenarioKind::kGemm;
  ExecMode mode = ExecMode::kDualSparse;
  GemmParams gemm;
  LayerParams layer;
  std::uint64_t seed = 0;
  std::size_t repetitions = 1;
  std::size_t tile = 32;

  // Throws ConfigError for dims < 1, densities outside [0, 1], a tile outside [1, 32], or
  // convolution shapes that do not lower.
  void validate() const;
};

// Layer document: {"name", "H", "W", "C", "N", "Kh", "Kw", "S", "act_density",
// "wgt_density", "mode"}.
Scenario parse_layer(std::string_view json_text, std::uint64_t default_seed);
Scenario load_layer(const std::filesystem::path& path, std::uint64_t default_seed);

// Scenario file: {"scenarios": [...]} or a bare array. Each entry carries "kind"
// (gemm | conv | im2col-bench) plus the gemm fields {M, N, K, a_density, b_density} or
// the layer fields, and optionally "mode", "seed", "repetitions". Density and mode
// fields may be arrays; an entry then expands to every combination, in field order.
std::vector<Scenario> parse_scenarios(std::string_view json_text, std::uint64_t default_seed,
                                      std::size_t tile = 32);
std::vector<Scenario> load_scenarios(const std::filesystem::path& path, std::uint64_t default_seed,
                                     std::size_t tile = 32);

struct RunRow {
  std::string scenario;
  ScenarioKind kind = ScenarioKind::kGemm;
  ExecMode mode = ExecMode::kDualSparse;
  std::size_t repetition = 0;
  std::uint64_t seed = 0;
  std::size_t m = 0;
  std::size_t n = 0;
  std::size_t k = 0;
  double a_density = 0.0;  // requested
  double b_density = 0.0;
  std::size_t a_nnz = 0;   // realized
  std::size_t b_nnz = 0;
  bool oracle_pass = false;
  double max_rel_error = 0.0;  // relative Frobenius error against the oracle
  CostReport cost;
};

// Operation counts of one lowering path.
struct Im2colOps {
  std::string path;  // dense | csr | bitmap
  std::uint64_t value_reads = 0;
  std::uint64_t index_reads = 0;  // CSR row pointers and column indices, or bitmap words
  std::uint64_t offset_computations = 0;
  std::uint64_t data_dependent_reads = 0;
  std::uint64_t lowered_values = 0;
};

struct Im2colRow {
  std::string scenario;
  std::size_t repetition = 0;
  std::uint64_t seed = 0;
  bool oracle_pass = false;
  std::vector<Im2colOps> paths;
};

// Seed used for repetition r of a scenario.
std::uint64_t repetition_seed(const Scenario& scenario, std::size_t repetition);

RunRow run_gemm(const Scenario& scenario, std::size_t repetition, const CostConfig& cfg, std::size_t threads = 1);
RunRow run_conv(const Scenario& scenario, std::size_t repetition, const CostConfig& cfg, std::size_t threads = 1);
Im2colRow run_im2col_bench(const Scenario& scenario, std::size_t repetition);

// Operation counts of a CSR lowering that finds each window by scanning the row's
// column indices from the row start.
Im2colOps csr_im2col_ops(const FeatureMap& map, const ConvShape& shape);
Im2colOps dense_im2col_ops(const ConvShape& shape);
Im2colOps bitmap_im2col_ops(const LoweringStats& stats);

struct SweepResult {
  std::vector<RunRow> runs;
  std::vector<Im2colRow> im2col;

  bool all_passed() const;
};

// Runs every scenario x repetition on a worker pool. Rows come back in scenario order.
SweepResult run_sweep(const std::vector<Scenario>& scenarios, const CostConfig& cfg, std::size_t threads = 1);

// CSV writers. The first line is a comment naming the generator algorithm.
void write_run_csv(std::ostream& out, const std::vector<RunRow>& rows);
void write_im2col_csv(std::ostream& out, const std::vector<Im2colRow>& rows);
// Long-format plot data: scenario,x,series,y.
void write_run_plot_data(std::ostream& out, const std::vector<RunRow>& rows);
void write_im2col_plot_data(std::ostream& out, const std::vector<Im2colRow>& rows);

}  // namespace dstc
