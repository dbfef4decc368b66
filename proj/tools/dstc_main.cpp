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

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "dstc/bench.hpp"
#include "dstc/bitmap.hpp"
#include "dstc/error.hpp"
#include "dstc/generate.hpp"
#include "dstc/reference.hpp"
#include "dstc/serialize.hpp"
#include "dstc/spconv.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitOracleFailure = 1;
constexpr int kExitError = 2;

struct GlobalOptions {
  std::uint64_t seed = 42;
  std::string out = "dstc-out";
  std::size_t tile = 32;
  std::size_t threads = 1;
  bool plot_data = false;
  // cost model
  std::size_t acc_ports = 16;
  std::size_t acc_banks = 16;
  std::size_t oc_window = 32;
  std::size_t pipeline_depth = 4;
  std::size_t skipped_issue_cost = 0;
  bool no_collector = false;
  bool serial_bitmap_issue = false;
  bool port_matched = false;
};

struct LayerFlags {
  std::string layer_file;
  std::size_t h = 0, w = 0, c = 0, n = 0, kh = 0, kw = 0, s = 1;
  double act_density = 1.0;
  double wgt_density = 1.0;
  std::string mode;
};

void init_logging() {
  auto logger = spdlog::stderr_color_mt("dstc");
  spdlog::set_default_logger(logger);
  spdlog::set_pattern("[%l] %v");
  spdlog::set_level(spdlog::level::warn);
  if (const char* env = std::getenv("DSTC_LOG")) {
    const spdlog::level::level_enum level = spdlog::level::from_str(env);
    if (level == spdlog::level::off && std::string(env) != "off") {
      spdlog::warn("DSTC_LOG='{}' is not a level name, keeping 'warn'", env);
    } else {
      spdlog::set_level(level);
    }
  }
}

dstc::CostConfig cost_config(const GlobalOptions& g) {
  dstc::CostConfig cfg;
  if (g.port_matched) {
    cfg = dstc::CostConfig::port_matched();
  } else {
    cfg.acc_ports = g.acc_ports;
    cfg.acc_banks = g.acc_banks;
    cfg.oc_window = g.oc_window;
  }
  cfg.pipeline_depth = g.pipeline_depth;
  cfg.skipped_issue_cost = g.skipped_issue_cost;
  cfg.use_operand_collector = !g.no_collector;
  cfg.overlap_bitmap_issue = !g.serial_bitmap_issue;
  cfg.validate();
  return cfg;
}

fs::path out_dir(const GlobalOptions& g) {
  fs::path dir(g.out);
  fs::create_directories(dir);
  return dir;
}

std::ofstream open_text(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw dstc::IoError("cannot open " + path.string() + " for writing");
  return out;
}

std::vector<dstc::ExecMode> modes_from(const std::string& text) {
  if (text.empty() || text == "all") {
    return {dstc::ExecMode::kDense, dstc::ExecMode::kSingleSparse, dstc::ExecMode::kDualSparse};
  }
  return {dstc::parse_exec_mode(text)};
}

void add_layer_flags(CLI::App* cmd, LayerFlags& f) {
  cmd->add_option("--layer", f.layer_file, "Layer JSON document")->check(CLI::ExistingFile);
  cmd->add_option("--H", f.h, "Feature map height");
  cmd->add_option("--W", f.w, "Feature map width");
  cmd->add_option("--C", f.c, "Input channels");
  cmd->add_option("--N", f.n, "Filters");
  cmd->add_option("--Kh", f.kh, "Kernel height");
  cmd->add_option("--Kw", f.kw, "Kernel width");
  cmd->add_option("--S", f.s, "Stride");
  cmd->add_option("--act-density", f.act_density, "Activation density");
  cmd->add_option("--wgt-density", f.wgt_density, "Weight density");
  cmd->add_option("--mode", f.mode, "dense|single|dual|all");
}

// Layers given inline or as a document; an explicit --mode overrides the document's.
std::vector<dstc::Scenario> layer_scenarios(const LayerFlags& f, const GlobalOptions& g, dstc::ScenarioKind kind) {
  dstc::Scenario base;
  if (!f.layer_file.empty()) {
    base = dstc::load_layer(f.layer_file, g.seed);
  } else {
    // The lowering benchmark has no filters, so --N may be left out there.
    const std::size_t n = (f.n == 0 && kind == dstc::ScenarioKind::kIm2colBench) ? 1 : f.n;
    if (f.h == 0 || f.w == 0 || f.c == 0 || n == 0 || f.kh == 0 || f.kw == 0) {
      throw dstc::ConfigError("give --layer or all of --H --W --C --N --Kh --Kw");
    }
    base.name = "layer";
    base.layer.shape = {f.h, f.w, f.c, f.kh, f.kw, f.s, n};
    base.layer.act_density = f.act_density;
    base.layer.wgt_density = f.wgt_density;
    base.seed = g.seed;
  }
  base.kind = kind;
  base.tile = g.tile;
  std::vector<dstc::Scenario> out;
  const std::vector<dstc::ExecMode> modes =
      (f.mode.empty() && !f.layer_file.empty()) ? std::vector<dstc::ExecMode>{base.mode} : modes_from(f.mode);
  if (kind == dstc::ScenarioKind::kIm2colBench) {
    base.validate();
    return {base};
  }
  for (dstc::ExecMode m : modes) {
    dstc::Scenario s = base;
    s.mode = m;
    if (modes.size() > 1) s.name += std::string("/") + dstc::to_string(m);
    s.validate();
    out.push_back(s);
  }
  return out;
}

void print_runs(const std::vector<dstc::RunRow>& rows) {
  std::printf("%-32s %-6s %12s %10s %12s %12s %9s\n", "scenario", "oracle", "rel_error", "ohmma", "total_cyc",
              "base_cyc", "speedup");
  for (const dstc::RunRow& r : rows) {
    std::printf("%-32s %-6s %12.3e %10llu %12llu %12llu %9.4f\n", r.scenario.c_str(), r.oracle_pass ? "pass" : "FAIL",
                r.max_rel_error, static_cast<unsigned long long>(r.cost.ohmma_issued),
                static_cast<unsigned long long>(r.cost.total_cycles),
                static_cast<unsigned long long>(r.cost.baseline_cycles), r.cost.speedup);
  }
}

void print_im2col(const std::vector<dstc::Im2colRow>& rows) {
  std::printf("%-24s %-7s %14s %14s %14s %14s\n", "scenario", "path", "value_reads", "index_reads", "offset_ops",
              "data_dep_reads");
  for (const dstc::Im2colRow& r : rows) {
    for (const dstc::Im2colOps& p : r.paths) {
      std::printf("%-24s %-7s %14llu %14llu %14llu %14llu\n", r.scenario.c_str(), p.path.c_str(),
                  static_cast<unsigned long long>(p.value_reads), static_cast<unsigned long long>(p.index_reads),
                  static_cast<unsigned long long>(p.offset_computations),
                  static_cast<unsigned long long>(p.data_dependent_reads));
    }
    std::printf("%-24s oracle %s\n", r.scenario.c_str(), r.oracle_pass ? "pass" : "FAIL");
  }
}

// Writes every report of a finished sweep and returns the exit code.
int report(const dstc::SweepResult& result, const GlobalOptions& g, const std::string& stem) {
  const fs::path dir = out_dir(g);
  if (!result.runs.empty()) {
    std::ofstream csv = open_text(dir / (stem + ".csv"));
    dstc::write_run_csv(csv, result.runs);
    std::ofstream cost = open_text(dir / (stem + "_cost.csv"));
    dstc::write_cost_csv_header(cost);
    for (const dstc::RunRow& r : result.runs) {
      dstc::write_cost_csv_row(cost, r.scenario + "#" + std::to_string(r.repetition), r.cost);
    }
    if (g.plot_data) {
      std::ofstream plot = open_text(dir / (stem + "_plot.csv"));
      dstc::write_run_plot_data(plot, result.runs);
    }
    print_runs(result.runs);
  }
  if (!result.im2col.empty()) {
    const std::string name = stem == "im2col" ? stem : stem + "_im2col";
    std::ofstream csv = open_text(dir / (name + ".csv"));
    dstc::write_im2col_csv(csv, result.im2col);
    if (g.plot_data) {
      std::ofstream plot = open_text(dir / (name + "_plot.csv"));
      dstc::write_im2col_plot_data(plot, result.im2col);
    }
    print_im2col(result.im2col);
  }
  spdlog::info("reports written to {}", dir.string());
  const bool ok = result.all_passed();
  if (!ok) std::fprintf(stderr, "oracle check failed for at least one scenario\n");
  return ok ? 0 : kExitOracleFailure;
}

void write_step_trace(const dstc::Scenario& s, const fs::path& dir) {
  const std::uint64_t seed = dstc::repetition_seed(s, 0);
  const dstc::DenseMatrix a = dstc::generate_matrix(s.gemm.m, s.gemm.k, s.gemm.a_density, dstc::derive_seed(seed, 0));
  const dstc::DenseMatrix b = dstc::generate_matrix(s.gemm.k, s.gemm.n, s.gemm.b_density, dstc::derive_seed(seed, 1));
  const dstc::TileShape tile{s.tile, s.tile};
  dstc::SpgemmOptions options;
  options.mode = s.mode;
  const dstc::SpgemmResult r = dstc::device_spgemm(dstc::encode(a, tile, dstc::ValueOrder::kColumnMajor),
                                                   dstc::encode(b, tile, dstc::ValueOrder::kRowMajor),
                                                   std::nullopt, options);
  std::ofstream out = open_text(dir / (std::string("steps_") + dstc::to_string(s.mode) + ".csv"));
  r.trace.write_csv(out);
}

json read_manifest(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw dstc::IoError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw dstc::ConfigError(std::string("bad manifest: ") + e.what());
  }
}

bool check(const std::string& what, double error) {
  const bool ok = error <= dstc::kOracleTolerance;
  std::printf("%-40s %-4s rel_error=%.3e\n", what.c_str(), ok ? "PASS" : "FAIL", error);
  return ok;
}

int verify_two_level_file(const fs::path& path) {
  const dstc::TwoLevelBitmapMatrix m = dstc::load_two_level(path);
  const dstc::DenseMatrix dense = dstc::decode(m);
  const dstc::TwoLevelBitmapMatrix again =
      dstc::encode(dense, dstc::TileShape{m.tile_rows(), m.tile_cols()}, dstc::ValueOrder::kRowMajor);
  std::ostringstream a;
  std::ostringstream b;
  std::ifstream raw(path, std::ios::binary);
  a << raw.rdbuf();
  dstc::write_two_level(b, again);
  const bool ok = again == m && a.str() == b.str();
  std::printf("%s: %zux%zu, tiles %zux%zu, %zu of %zu warp bits set, %zu values: %s\n", path.string().c_str(),
              m.rows(), m.cols(), m.tile_rows(), m.tile_cols(), m.tiles().size(), m.grid_rows() * m.grid_cols(),
              m.nnz(), ok ? "roundtrip PASS" : "roundtrip FAIL");
  return ok ? 0 : kExitOracleFailure;
}

int verify_fixture(const fs::path& target, const GlobalOptions& g) {
  if (fs::is_regular_file(target) && target.extension() == ".dstc") return verify_two_level_file(target);
  const fs::path manifest_path = fs::is_directory(target) ? target / "manifest.json" : target;
  const fs::path dir = manifest_path.parent_path();
  const json manifest = read_manifest(manifest_path);
  const std::string kind = manifest.value("kind", std::string());
  bool ok = true;

  if (kind == "gemm") {
    const dstc::TwoLevelBitmapMatrix a =
        dstc::load_two_level(dir / manifest.at("a").get<std::string>(), dstc::ValueOrder::kColumnMajor);
    const dstc::TwoLevelBitmapMatrix b = dstc::load_two_level(dir / manifest.at("b").get<std::string>());
    const dstc::DenseMatrix expected = dstc::load_dense(dir / manifest.at("expected").get<std::string>());
    const dstc::DenseMatrix oracle = dstc::reference_gemm(dstc::decode(a), dstc::decode(b));
    ok &= check("expected vs triple-loop oracle", dstc::relative_frobenius_error(expected.data(), oracle.data()));
    for (dstc::ExecMode mode : modes_from("all")) {
      dstc::SpgemmOptions options;
      options.mode = mode;
      options.threads = g.threads;
      options.keep_records = false;
      const dstc::SpgemmResult r = dstc::device_spgemm(a, b, std::nullopt, options);
      ok &= check(std::string("device_spgemm ") + dstc::to_string(mode),
                  dstc::relative_frobenius_error(r.output.data(), expected.data()));
    }
  } else if (kind == "conv") {
    const json& sj = manifest.at("shape");
    dstc::ConvShape shape{sj.at("H").get<std::size_t>(),  sj.at("W").get<std::size_t>(),
                          sj.at("C").get<std::size_t>(),  sj.at("Kh").get<std::size_t>(),
                          sj.at("Kw").get<std::size_t>(), sj.at("S").get<std::size_t>(),
                          sj.at("N").get<std::size_t>()};
    const dstc::FeatureMap input = dstc::load_feature_map(dir / manifest.at("input").get<std::string>());
    const dstc::DenseMatrix weights =
        dstc::decode(dstc::load_two_level(dir / manifest.at("weights").get<std::string>()));
    const dstc::DenseMatrix expected = dstc::load_dense(dir / manifest.at("expected").get<std::string>());
    const dstc::DenseMatrix oracle = dstc::reference_conv(input, weights, shape);
    ok &= check("expected vs direct convolution", dstc::relative_frobenius_error(expected.data(), oracle.data()));
    dstc::ConvProblem problem;
    problem.shape = shape;
    for (std::size_t c = 0; c < shape.channels; ++c) problem.input.push_back(dstc::encode_single(input.channel(c)));
    problem.weights = dstc::encode_single(weights);
    for (dstc::ExecMode mode : modes_from("all")) {
      problem.mode = mode;
      dstc::ConvOptions options;
      options.threads = g.threads;
      options.keep_records = false;
      const dstc::ConvResult r = dstc::spconv(problem, options);
      ok &= check(std::string("spconv ") + dstc::to_string(mode),
                  dstc::relative_frobenius_error(r.output.data(), expected.data()));
    }
  } else {
    throw dstc::ConfigError("manifest kind must be gemm or conv, got '" + kind + "'");
  }
  return ok ? 0 : kExitOracleFailure;
}

int generate_fixture(const std::string& kind, const dstc::GemmParams& gp, const LayerFlags& lf,
                     const GlobalOptions& g) {
  const fs::path dir = out_dir(g);
  json manifest{{"kind", kind}, {"seed", g.seed}, {"generator", dstc::kRngAlgorithm}, {"tile", g.tile}};
  const dstc::TileShape tile{g.tile, g.tile};
  if (kind == "gemm") {
    dstc::Scenario s;
    s.gemm = gp;
    s.tile = g.tile;
    s.validate();
    const dstc::DenseMatrix a = dstc::generate_matrix(gp.m, gp.k, gp.a_density, dstc::derive_seed(g.seed, 0));
    const dstc::DenseMatrix b = dstc::generate_matrix(gp.k, gp.n, gp.b_density, dstc::derive_seed(g.seed, 1));
    dstc::save_two_level(dir / "a.dstc", dstc::encode(a, tile, dstc::ValueOrder::kColumnMajor));
    dstc::save_two_level(dir / "b.dstc", dstc::encode(b, tile));
    dstc::save_dense(dir / "expected.dmat", dstc::reference_gemm(a, b));
    manifest.update({{"a", "a.dstc"},
                     {"b", "b.dstc"},
                     {"expected", "expected.dmat"},
                     {"M", gp.m},
                     {"N", gp.n},
                     {"K", gp.k},
                     {"a_density", gp.a_density},
                     {"b_density", gp.b_density}});
  } else if (kind == "conv") {
    const dstc::Scenario s = layer_scenarios(lf, g, dstc::ScenarioKind::kConv).front();
    const dstc::ConvShape& shape = s.layer.shape;
    const dstc::FeatureMap input = dstc::generate_feature_map(shape.height, shape.width, shape.channels,
                                                              s.layer.act_density, dstc::derive_seed(g.seed, 0));
    const std::vector<dstc::FeatureMap> filters =
        dstc::generate_filters(shape.filters, shape.kernel_h, shape.kernel_w, shape.channels, s.layer.wgt_density,
                               dstc::derive_seed(g.seed, 1));
    const dstc::DenseMatrix weights = dstc::decode_single(dstc::flatten_weights(filters));
    dstc::save_feature_map(dir / "input.dmat", input);
    dstc::save_two_level(dir / "weights.dstc", dstc::encode(weights, tile));
    dstc::save_dense(dir / "expected.dmat", dstc::reference_conv(input, weights, shape));
    manifest.update({{"input", "input.dmat"},
                     {"weights", "weights.dstc"},
                     {"expected", "expected.dmat"},
                     {"shape",
                      {{"H", shape.height},
                       {"W", shape.width},
                       {"C", shape.channels},
                       {"N", shape.filters},
                       {"Kh", shape.kernel_h},
                       {"Kw", shape.kernel_w},
                       {"S", shape.stride}}},
                     {"act_density", s.layer.act_density},
                     {"wgt_density", s.layer.wgt_density}});
  } else {
    throw dstc::ConfigError("--kind must be gemm or conv");
  }
  std::ofstream out = open_text(dir / "manifest.json");
  out << manifest.dump(2) << "\n";
  std::printf("fixture written to %s\n", dir.string().c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  init_logging();
  CLI::App app{"Dual-side sparse GEMM / convolution kernels and tensor-core cost model"};
  app.require_subcommand(1);
  app.fallthrough();

  GlobalOptions g;
  app.add_option("--seed", g.seed, "RNG seed")->capture_default_str();
  app.add_option("--out", g.out, "Output directory")->capture_default_str();
  app.add_option("--tile", g.tile, "Tile edge for two-level encoding")->capture_default_str()->check(
      CLI::Range(1, 32));
  app.add_option("--threads", g.threads, "Worker threads")->capture_default_str()->check(CLI::Range(1, 1024));
  app.add_flag("--plot-data", g.plot_data, "Also write long-format plot data");
  app.add_option("--acc-ports", g.acc_ports, "Accumulation buffer ports")->capture_default_str();
  app.add_option("--acc-banks", g.acc_banks, "Accumulation buffer banks")->capture_default_str();
  app.add_option("--oc-window", g.oc_window, "Operand collector window")->capture_default_str();
  app.add_option("--pipeline-depth", g.pipeline_depth, "Pipeline depth in cycles")->capture_default_str();
  app.add_option("--skipped-issue-cost", g.skipped_issue_cost, "Issue cycles per skipped OHMMA")
      ->capture_default_str();
  app.add_flag("--port-matched", g.port_matched,
               "Accumulation ports, banks and window wide enough never to bound a tile (overrides the three)");
  app.add_flag("--no-collector", g.no_collector, "Disable the operand collector");
  app.add_flag("--serial-bitmap-issue", g.serial_bitmap_issue, "Add BOHMMA cycles to the OHMMA issue stream");

  // gen
  auto* gen = app.add_subcommand("gen", "Write a fixture directory (operands, expected result, manifest)");
  std::string gen_kind = "gemm";
  dstc::GemmParams gen_gemm;
  LayerFlags gen_layer;
  gen->add_option("--kind", gen_kind, "gemm|conv")->capture_default_str();
  gen->add_option("--m", gen_gemm.m, "Rows of A")->capture_default_str();
  gen->add_option("--n", gen_gemm.n, "Columns of B")->capture_default_str();
  gen->add_option("--k", gen_gemm.k, "Inner dimension")->capture_default_str();
  gen->add_option("--a-density", gen_gemm.a_density, "Density of A")->capture_default_str();
  gen->add_option("--b-density", gen_gemm.b_density, "Density of B")->capture_default_str();
  add_layer_flags(gen, gen_layer);

  // gemm
  auto* gemm = app.add_subcommand("gemm", "Run device SpGEMM on generated operands against the dense oracle");
  dstc::GemmParams gp;
  std::string gemm_mode = "all";
  std::size_t gemm_reps = 1;
  bool gemm_trace = false;
  gemm->add_option("--m", gp.m, "Rows of A")->capture_default_str();
  gemm->add_option("--n", gp.n, "Columns of B")->capture_default_str();
  gemm->add_option("--k", gp.k, "Inner dimension")->capture_default_str();
  gemm->add_option("--a-density", gp.a_density, "Density of A")->capture_default_str();
  gemm->add_option("--b-density", gp.b_density, "Density of B")->capture_default_str();
  gemm->add_option("--mode", gemm_mode, "dense|single|dual|all")->capture_default_str();
  gemm->add_option("--repetitions", gemm_reps, "Repetitions")->capture_default_str()->check(CLI::PositiveNumber);
  gemm->add_flag("--trace", gemm_trace, "Write the per-set step trace of repetition 0");

  // conv
  auto* conv = app.add_subcommand("conv", "Run sparse convolution on a generated layer against direct convolution");
  LayerFlags conv_layer;
  add_layer_flags(conv, conv_layer);

  // im2col-bench
  auto* im2col = app.add_subcommand("im2col-bench", "Count lowering operations of the dense, CSR and bitmap paths");
  LayerFlags im2col_layer;
  add_layer_flags(im2col, im2col_layer);

  // sweep
  auto* sweep = app.add_subcommand("sweep", "Run every scenario of a scenario file");
  std::string scenario_file;
  sweep->add_option("scenarios", scenario_file, "Scenario JSON file")->required()->check(CLI::ExistingFile);

  // verify
  auto* verify = app.add_subcommand("verify", "Check a fixture directory, manifest or .dstc file");
  std::string fixture;
  verify->add_option("fixture", fixture, "Fixture path")->required()->check(CLI::ExistingPath);

  CLI11_PARSE(app, argc, argv);

  try {
    const dstc::CostConfig cfg = cost_config(g);
    if (*gen) return generate_fixture(gen_kind, gen_gemm, gen_layer, g);
    if (*gemm) {
      std::vector<dstc::Scenario> scenarios;
      for (dstc::ExecMode mode : modes_from(gemm_mode)) {
        dstc::Scenario s;
        s.name = std::string("gemm/") + dstc::to_string(mode);
        s.kind = dstc::ScenarioKind::kGemm;
        s.mode = mode;
        s.gemm = gp;
        s.seed = g.seed;
        s.repetitions = gemm_reps;
        s.tile = g.tile;
        s.validate();
        scenarios.push_back(s);
      }
      if (gemm_trace) {
        for (const dstc::Scenario& s : scenarios) write_step_trace(s, out_dir(g));
      }
      return report(dstc::run_sweep(scenarios, cfg, g.threads), g, "gemm");
    }
    if (*conv) {
      return report(dstc::run_sweep(layer_scenarios(conv_layer, g, dstc::ScenarioKind::kConv), cfg, g.threads), g,
                    "conv");
    }
    if (*im2col) {
      return report(
          dstc::run_sweep(layer_scenarios(im2col_layer, g, dstc::ScenarioKind::kIm2colBench), cfg, g.threads), g,
          "im2col");
    }
    if (*sweep) {
      return report(dstc::run_sweep(dstc::load_scenarios(scenario_file, g.seed, g.tile), cfg, g.threads), g,
                    "sweep");
    }
    if (*verify) return verify_fixture(fixture, g);
  } catch (const dstc::Error& e) {
    spdlog::error("{}", e.what());
    return kExitError;
  } catch (const std::exception& e) {
    spdlog::error("unexpected failure: {}", e.what());
    return kExitError;
  }
  return kExitError;
}
