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

#include "dstc/bench.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>

#include <json.hpp>
#include <spdlog/spdlog.h>

#include "dstc/bitmap.hpp"
#include "dstc/error.hpp"
#include "dstc/generate.hpp"
#include "dstc/parallel.hpp"
#include "dstc/reference.hpp"
#include "dstc/spconv.hpp"

namespace dstc {

namespace {

using nlohmann::json;

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json parse_json(std::string_view text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("malformed JSON: ") + e.what());
  }
}

std::size_t get_dim(const json& j, const char* key, std::size_t fallback) {
  if (!j.contains(key)) return fallback;
  const json& v = j.at(key);
  if (!v.is_number_integer() || v.get<std::int64_t>() < 1) {
    throw ConfigError(std::string("\"") + key + "\" must be an integer >= 1");
  }
  return v.get<std::size_t>();
}

std::size_t require_dim(const json& j, const char* key) {
  if (!j.contains(key)) throw ConfigError(std::string("missing field \"") + key + "\"");
  return get_dim(j, key, 1);
}

// A density field may hold one number or a list of numbers.
std::vector<double> get_densities(const json& j, const char* key) {
  if (!j.contains(key)) return {1.0};
  const json& v = j.at(key);
  std::vector<double> out;
  auto one = [&](const json& x) {
    if (!x.is_number()) throw ConfigError(std::string("\"") + key + "\" must be a number");
    const double d = x.get<double>();
    check_density(d);
    out.push_back(d);
  };
  if (v.is_array()) {
    for (const json& x : v) one(x);
    if (out.empty()) throw ConfigError(std::string("\"") + key + "\" is an empty list");
  } else {
    one(v);
  }
  return out;
}

std::vector<ExecMode> get_modes(const json& j) {
  if (!j.contains("mode")) return {ExecMode::kDualSparse};
  const json& v = j.at("mode");
  std::vector<ExecMode> out;
  auto one = [&](const json& x) {
    if (!x.is_string()) throw ConfigError("\"mode\" must be a string");
    out.push_back(parse_exec_mode(x.get<std::string>()));
  };
  if (v.is_array()) {
    for (const json& x : v) one(x);
    if (out.empty()) throw ConfigError("\"mode\" is an empty list");
  } else {
    one(v);
  }
  return out;
}

ScenarioKind parse_kind(const std::string& text) {
  if (text == "gemm") return ScenarioKind::kGemm;
  if (text == "conv") return ScenarioKind::kConv;
  if (text == "im2col-bench") return ScenarioKind::kIm2colBench;
  throw ConfigError("unknown scenario kind '" + text + "' (expected gemm|conv|im2col-bench)");
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

std::string csv_field(std::string_view text) {
  if (text.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(text);
  std::string out = "\"";
  for (char ch : text) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + "\"";
}

// Expands one scenario entry into every density/mode combination.
void expand_entry(const json& j, std::uint64_t default_seed, std::size_t tile, std::size_t index,
                  std::vector<Scenario>& out) {
  if (!j.is_object()) throw ConfigError("scenario " + std::to_string(index) + " is not an object");
  Scenario base;
  base.kind = parse_kind(j.value("kind", std::string("gemm")));
  base.name = j.value("name", std::string(to_string(base.kind)) + "-" + std::to_string(index));
  base.tile = tile;
  if (j.contains("seed")) {
    if (!j.at("seed").is_number_unsigned()) throw ConfigError("\"seed\" must be a non-negative integer");
    base.seed = j.at("seed").get<std::uint64_t>();
  } else {
    base.seed = default_seed;
  }
  base.repetitions = get_dim(j, "repetitions", 1);

  std::vector<double> first;
  std::vector<double> second;
  if (base.kind == ScenarioKind::kGemm) {
    base.gemm.m = require_dim(j, "M");
    base.gemm.n = require_dim(j, "N");
    base.gemm.k = require_dim(j, "K");
    first = get_densities(j, "a_density");
    second = get_densities(j, "b_density");
  } else {
    ConvShape& s = base.layer.shape;
    s.height = require_dim(j, "H");
    s.width = require_dim(j, "W");
    s.channels = require_dim(j, "C");
    s.filters = require_dim(j, "N");
    s.kernel_h = require_dim(j, "Kh");
    s.kernel_w = require_dim(j, "Kw");
    s.stride = get_dim(j, "S", 1);
    first = get_densities(j, "act_density");
    second = get_densities(j, "wgt_density");
  }
  const std::vector<ExecMode> modes = get_modes(j);
  const bool expanded = first.size() * second.size() * modes.size() > 1;

  for (double d1 : first) {
    for (double d2 : second) {
      for (ExecMode mode : modes) {
        Scenario s = base;
        s.mode = mode;
        if (s.kind == ScenarioKind::kGemm) {
          s.gemm.a_density = d1;
          s.gemm.b_density = d2;
        } else {
          s.layer.act_density = d1;
          s.layer.wgt_density = d2;
        }
        if (expanded) {
          s.name = base.name + "/" + format_double(d1) + "x" + format_double(d2) + "/" + to_string(mode);
        }
        s.validate();
        out.push_back(std::move(s));
      }
    }
  }
}

}  // namespace

const char* to_string(ScenarioKind kind) {
  switch (kind) {
    case ScenarioKind::kGemm:
      return "gemm";
    case ScenarioKind::kConv:
      return "conv";
    case ScenarioKind::kIm2colBench:
      return "im2col-bench";
  }
  return "?";
}

void Scenario::validate() const {
  if (repetitions == 0) throw ConfigError("repetitions must be >= 1");
  if (tile == 0 || tile > kLaneWidth) throw ConfigError("tile must be in [1, 32]");
  if (kind == ScenarioKind::kGemm) {
    if (gemm.m == 0 || gemm.n == 0 || gemm.k == 0) throw ConfigError("GEMM dims must be >= 1");
    check_density(gemm.a_density);
    check_density(gemm.b_density);
    return;
  }
  if (kind == ScenarioKind::kConv && tile != kLaneWidth) throw ConfigError("convolution runs on 32x32 tiles only");
  check_density(layer.act_density);
  check_density(layer.wgt_density);
  try {
    layer.shape.validate();
  } catch (const ShapeError& e) {
    throw ConfigError(std::string("layer '") + name + "': " + e.what());
  }
}

Scenario parse_layer(std::string_view json_text, std::uint64_t default_seed) {
  json j = parse_json(json_text);
  if (!j.is_object()) throw ConfigError("layer document must be an object");
  if (!j.contains("kind")) j["kind"] = "conv";
  std::vector<Scenario> out;
  expand_entry(j, default_seed, kLaneWidth, 0, out);
  if (out.size() != 1) throw ConfigError("a layer document describes exactly one layer");
  return out.front();
}

Scenario load_layer(const std::filesystem::path& path, std::uint64_t default_seed) {
  return parse_layer(read_text(path), default_seed);
}

std::vector<Scenario> parse_scenarios(std::string_view json_text, std::uint64_t default_seed, std::size_t tile) {
  const json doc = parse_json(json_text);
  const json* list = &doc;
  if (doc.is_object()) {
    if (!doc.contains("scenarios")) throw ConfigError("scenario file has no \"scenarios\" list");
    list = &doc.at("scenarios");
  }
  if (!list->is_array()) throw ConfigError("scenarios must be a list");
  std::vector<Scenario> out;
  for (std::size_t i = 0; i < list->size(); ++i) expand_entry((*list)[i], default_seed, tile, i, out);
  return out;
}

std::vector<Scenario> load_scenarios(const std::filesystem::path& path, std::uint64_t default_seed,
                                     std::size_t tile) {
  return parse_scenarios(read_text(path), default_seed, tile);
}

std::uint64_t repetition_seed(const Scenario& scenario, std::size_t repetition) {
  return repetition == 0 ? scenario.seed : derive_seed(scenario.seed, 1000 + repetition);
}

RunRow run_gemm(const Scenario& s, std::size_t repetition, const CostConfig& cfg, std::size_t threads) {
  const std::uint64_t seed = repetition_seed(s, repetition);
  const DenseMatrix a = generate_matrix(s.gemm.m, s.gemm.k, s.gemm.a_density, derive_seed(seed, 0));
  const DenseMatrix b = generate_matrix(s.gemm.k, s.gemm.n, s.gemm.b_density, derive_seed(seed, 1));
  const TileShape tile{s.tile, s.tile};
  const TwoLevelBitmapMatrix ea = encode(a, tile, ValueOrder::kColumnMajor);
  const TwoLevelBitmapMatrix eb = encode(b, tile, ValueOrder::kRowMajor);

  AccumulationTracker tracker(s.mode, cfg);
  SpgemmOptions options;
  options.mode = s.mode;
  options.threads = threads;
  options.keep_records = false;
  options.observer = tracker.factory();
  const SpgemmResult result = device_spgemm(ea, eb, std::nullopt, options);
  const DenseMatrix want = reference_gemm(a, b);

  RunRow row;
  row.scenario = s.name;
  row.kind = ScenarioKind::kGemm;
  row.mode = s.mode;
  row.repetition = repetition;
  row.seed = seed;
  row.m = s.gemm.m;
  row.n = s.gemm.n;
  row.k = s.gemm.k;
  row.a_density = s.gemm.a_density;
  row.b_density = s.gemm.b_density;
  row.a_nnz = a.count_nonzeros();
  row.b_nnz = b.count_nonzeros();
  row.max_rel_error = relative_frobenius_error(result.output.data(), want.data());
  row.oracle_pass = row.max_rel_error <= kOracleTolerance;
  row.cost = total_cost(result.trace, tracker.cycles(), cfg);
  spdlog::debug("{} rep {}: error {:.3g}, speedup {:.4f}", s.name, repetition, row.max_rel_error, row.cost.speedup);
  return row;
}

RunRow run_conv(const Scenario& s, std::size_t repetition, const CostConfig& cfg, std::size_t threads) {
  const ConvShape& shape = s.layer.shape;
  const std::uint64_t seed = repetition_seed(s, repetition);
  const FeatureMap input =
      generate_feature_map(shape.height, shape.width, shape.channels, s.layer.act_density, derive_seed(seed, 0));
  const std::vector<FeatureMap> filters = generate_filters(shape.filters, shape.kernel_h, shape.kernel_w,
                                                           shape.channels, s.layer.wgt_density, derive_seed(seed, 1));
  ConvProblem problem;
  problem.shape = shape;
  for (std::size_t c = 0; c < shape.channels; ++c) problem.input.push_back(encode_single(input.channel(c)));
  problem.weights = flatten_weights(filters);
  problem.mode = s.mode;

  AccumulationTracker tracker(s.mode, cfg);
  ConvOptions options;
  options.threads = threads;
  options.keep_records = false;
  options.observer = tracker.factory();
  const ConvResult result = spconv(problem, options);
  const DenseMatrix weights = decode_single(problem.weights);
  const DenseMatrix want = reference_conv(input, weights, shape);

  RunRow row;
  row.scenario = s.name;
  row.kind = ScenarioKind::kConv;
  row.mode = s.mode;
  row.repetition = repetition;
  row.seed = seed;
  row.m = shape.lowered_rows();
  row.n = shape.filters;
  row.k = shape.lowered_cols();
  row.a_density = s.layer.act_density;
  row.b_density = s.layer.wgt_density;
  for (float v : input.data()) row.a_nnz += (v != 0.0f);
  row.b_nnz = weights.count_nonzeros();
  row.max_rel_error = relative_frobenius_error(result.output.data(), want.data());
  row.oracle_pass = row.max_rel_error <= kOracleTolerance;
  row.cost = total_cost(result.trace, tracker.cycles(), cfg);
  spdlog::debug("{} rep {}: error {:.3g}, speedup {:.4f}, peak lowered buffer {}", s.name, repetition,
                row.max_rel_error, row.cost.speedup, result.lowering.peak_buffered_values);
  return row;
}

Im2colOps dense_im2col_ops(const ConvShape& shape) {
  Im2colOps ops;
  ops.path = "dense";
  ops.lowered_values = std::uint64_t{shape.lowered_rows()} * shape.lowered_cols();
  ops.value_reads = ops.lowered_values;
  return ops;
}

Im2colOps csr_im2col_ops(const FeatureMap& map, const ConvShape& shape) {
  shape.validate();
  Im2colOps ops;
  ops.path = "csr";
  // Column indices of each (channel, row), as a CSR encoding of the channel would hold them.
  std::vector<std::vector<std::size_t>> cols(shape.channels * shape.height);
  for (std::size_t c = 0; c < shape.channels; ++c)
    for (std::size_t y = 0; y < shape.height; ++y)
      for (std::size_t x = 0; x < shape.width; ++x)
        if (map(y, x, c) != 0.0f) cols[c * shape.height + y].push_back(x);

  const std::size_t wo = shape.out_w();
  for (std::size_t oy = 0; oy < shape.out_h(); ++oy) {
    for (std::size_t kh = 0; kh < shape.kernel_h; ++kh) {
      const std::size_t y = oy * shape.stride + kh;
      for (std::size_t c = 0; c < shape.channels; ++c) {
        const std::vector<std::size_t>& row = cols[c * shape.height + y];
        for (std::size_t kw = 0; kw < shape.kernel_w; ++kw) {
          // One lowered column slice: the window positions kw, kw+S, ... of this row.
          const std::size_t last = kw + (wo - 1) * shape.stride;
          ops.index_reads += 2;  // row pointer pair
          for (std::size_t x : row) {
            ++ops.index_reads;
            if (x > last) break;
            if (x >= kw && (x - kw) % shape.stride == 0) {
              ++ops.value_reads;
              ++ops.lowered_values;
            }
            ++ops.offset_computations;
          }
        }
      }
    }
  }
  ops.data_dependent_reads = ops.index_reads + ops.value_reads;
  return ops;
}

Im2colOps bitmap_im2col_ops(const LoweringStats& stats) {
  Im2colOps ops;
  ops.path = "bitmap";
  ops.value_reads = stats.values_read;
  ops.index_reads = stats.bitmap_words_read;
  ops.offset_computations = stats.shifts + stats.popcounts;
  ops.data_dependent_reads = ops.index_reads + ops.value_reads;
  ops.lowered_values = stats.values;
  return ops;
}

Im2colRow run_im2col_bench(const Scenario& s, std::size_t repetition) {
  const ConvShape& shape = s.layer.shape;
  const std::uint64_t seed = repetition_seed(s, repetition);
  const FeatureMap input =
      generate_feature_map(shape.height, shape.width, shape.channels, s.layer.act_density, derive_seed(seed, 0));
  std::vector<BitmapMatrix> channels;
  for (std::size_t c = 0; c < shape.channels; ++c) channels.push_back(encode_single(input.channel(c)));

  const LoweredMatrix dense = dense_im2col_outer(input, shape);
  const SparseIm2col lowering(channels, shape);
  LoweringStats stats;
  bool exact = true;
  lowering.for_each_lane(
      [&](const LoweredLane& lane) {
        const std::array<float, kLaneWidth> values = lane.lane.expand();
        for (std::size_t i = 0; i < lane.valid; ++i) {
          if (values[i] != dense.matrix(lane.tile_row * kLaneWidth + i, lane.column)) exact = false;
        }
      },
      false, &stats);

  Im2colRow row;
  row.scenario = s.name;
  row.repetition = repetition;
  row.seed = seed;
  row.paths = {dense_im2col_ops(shape), csr_im2col_ops(input, shape), bitmap_im2col_ops(stats)};
  row.oracle_pass = exact && row.paths[2].data_dependent_reads < row.paths[1].data_dependent_reads;
  return row;
}

bool SweepResult::all_passed() const {
  return std::all_of(runs.begin(), runs.end(), [](const RunRow& r) { return r.oracle_pass; }) &&
         std::all_of(im2col.begin(), im2col.end(), [](const Im2colRow& r) { return r.oracle_pass; });
}

SweepResult run_sweep(const std::vector<Scenario>& scenarios, const CostConfig& cfg, std::size_t threads) {
  struct Job {
    std::size_t scenario;
    std::size_t repetition;
  };
  std::vector<Job> jobs;
  for (std::size_t i = 0; i < scenarios.size(); ++i)
    for (std::size_t r = 0; r < scenarios[i].repetitions; ++r) jobs.push_back({i, r});

  std::vector<RunRow> runs(jobs.size());
  std::vector<Im2colRow> im2col(jobs.size());
  parallel_for(jobs.size(), threads, [&](std::size_t j) {
    const Scenario& s = scenarios[jobs[j].scenario];
    spdlog::info("scenario {} ({}), repetition {}", s.name, to_string(s.kind), jobs[j].repetition);
    switch (s.kind) {
      case ScenarioKind::kGemm:
        runs[j] = run_gemm(s, jobs[j].repetition, cfg);
        break;
      case ScenarioKind::kConv:
        runs[j] = run_conv(s, jobs[j].repetition, cfg);
        break;
      case ScenarioKind::kIm2colBench:
        im2col[j] = run_im2col_bench(s, jobs[j].repetition);
        break;
    }
  });

  SweepResult result;
  for (std::size_t j = 0; j < jobs.size(); ++j) {
    if (scenarios[jobs[j].scenario].kind == ScenarioKind::kIm2colBench) {
      result.im2col.push_back(std::move(im2col[j]));
    } else {
      result.runs.push_back(std::move(runs[j]));
    }
  }
  return result;
}

void write_run_csv(std::ostream& out, const std::vector<RunRow>& rows) {
  out << "# generator: " << kRngAlgorithm << "\r\n";
  out << "scenario,kind,mode,repetition,seed,m,n,k,a_density,b_density,a_nnz,b_nnz,oracle_pass,max_rel_error,"
         "ohmma_issued,ohmma_skipped,bohmma_issued,issue_cycles,accumulation_cycles,total_cycles,"
         "baseline_cycles,speedup\r\n";
  char err[32];
  char speedup[32];
  for (const RunRow& r : rows) {
    std::snprintf(err, sizeof(err), "%.3e", r.max_rel_error);
    std::snprintf(speedup, sizeof(speedup), "%.6f", r.cost.speedup);
    out << csv_field(r.scenario) << ',' << to_string(r.kind) << ',' << to_string(r.mode) << ',' << r.repetition
        << ',' << r.seed << ',' << r.m << ',' << r.n << ',' << r.k << ',' << format_double(r.a_density) << ','
        << format_double(r.b_density) << ',' << r.a_nnz << ',' << r.b_nnz << ',' << (r.oracle_pass ? "pass" : "fail") << ',' << err << ','
        << r.cost.ohmma_issued << ',' << r.cost.ohmma_skipped << ',' << r.cost.bohmma_issued << ','
        << r.cost.issue_cycles << ',' << r.cost.accumulation_cycles << ',' << r.cost.total_cycles << ','
        << r.cost.baseline_cycles << ',' << speedup << "\r\n";
  }
}

void write_im2col_csv(std::ostream& out, const std::vector<Im2colRow>& rows) {
  out << "# generator: " << kRngAlgorithm << "\r\n";
  out << "scenario,repetition,seed,path,value_reads,index_reads,offset_computations,data_dependent_reads,"
         "lowered_values,oracle_pass\r\n";
  for (const Im2colRow& r : rows) {
    for (const Im2colOps& p : r.paths) {
      out << csv_field(r.scenario) << ',' << r.repetition << ',' << r.seed << ',' << p.path << ',' << p.value_reads
          << ',' << p.index_reads << ',' << p.offset_computations << ',' << p.data_dependent_reads << ','
          << p.lowered_values << ',' << (r.oracle_pass ? "pass" : "fail") << "\r\n";
    }
  }
}

void write_run_plot_data(std::ostream& out, const std::vector<RunRow>& rows) {
  out << "scenario,x,series,y\r\n";
  for (const RunRow& r : rows) {
    const std::string series = std::string(to_string(r.mode)) + " b=" + format_double(r.b_density);
    out << csv_field(r.scenario) << ',' << format_double(r.a_density) << ',' << csv_field(series) << ','
        << format_double(r.cost.speedup) << "\r\n";
  }
}

void write_im2col_plot_data(std::ostream& out, const std::vector<Im2colRow>& rows) {
  out << "scenario,x,series,y\r\n";
  for (const Im2colRow& r : rows) {
    for (const Im2colOps& p : r.paths) {
      out << csv_field(r.scenario) << ',' << p.path << ",data_dependent_reads," << p.data_dependent_reads << "\r\n";
      out << csv_field(r.scenario) << ',' << p.path << ",offset_computations," << p.offset_computations << "\r\n";
    }
  }
}

}  // namespace dstc
