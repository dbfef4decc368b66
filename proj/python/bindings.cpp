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

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>
#include <string>
#include <vector>

#include "dstc/bitmap.hpp"
#include "dstc/cost_model.hpp"
#include "dstc/error.hpp"
#include "dstc/generate.hpp"
#include "dstc/im2col.hpp"
#include "dstc/serialize.hpp"
#include "dstc/spconv.hpp"
#include "dstc/spgemm.hpp"
#include "dstc/two_level.hpp"

namespace py = pybind11;

namespace {

using FloatArray = py::array_t<float, py::array::c_style | py::array::forcecast>;

dstc::DenseMatrix to_dense(const FloatArray& array) {
  if (array.ndim() != 2) throw dstc::ShapeError("expected a 2-D array");
  const auto rows = static_cast<std::size_t>(array.shape(0));
  const auto cols = static_cast<std::size_t>(array.shape(1));
  return dstc::DenseMatrix(rows, cols, std::vector<float>(array.data(), array.data() + rows * cols));
}

py::array_t<float> to_numpy(const dstc::DenseMatrix& m) {
  py::array_t<float> out({m.rows(), m.cols()});
  std::copy(m.data().begin(), m.data().end(), out.mutable_data());
  return out;
}

dstc::FeatureMap to_feature_map(const FloatArray& array) {
  if (array.ndim() != 3) throw dstc::ShapeError("expected an H x W x C array");
  const auto h = static_cast<std::size_t>(array.shape(0));
  const auto w = static_cast<std::size_t>(array.shape(1));
  const auto c = static_cast<std::size_t>(array.shape(2));
  return dstc::FeatureMap(h, w, c, std::vector<float>(array.data(), array.data() + h * w * c));
}

dstc::ValueOrder parse_order(const std::string& order) {
  if (order == "row") return dstc::ValueOrder::kRowMajor;
  if (order == "column") return dstc::ValueOrder::kColumnMajor;
  throw dstc::ConfigError("order must be 'row' or 'column'");
}

dstc::CostConfig parse_cost_config(const std::optional<py::dict>& d) {
  dstc::CostConfig cfg;
  if (!d) return cfg;
  for (auto item : *d) {
    const std::string key = py::str(item.first);
    py::handle v = item.second;
    if (key == "ohmma_issue_per_cycle") cfg.ohmma_issue_per_cycle = v.cast<std::size_t>();
    else if (key == "pipeline_depth") cfg.pipeline_depth = v.cast<std::size_t>();
    else if (key == "acc_ports") cfg.acc_ports = v.cast<std::size_t>();
    else if (key == "acc_banks") cfg.acc_banks = v.cast<std::size_t>();
    else if (key == "acc_capacity") cfg.acc_capacity = v.cast<std::size_t>();
    else if (key == "oc_window") cfg.oc_window = v.cast<std::size_t>();
    else if (key == "bohmma_cost") cfg.bohmma_cost = v.cast<std::size_t>();
    else if (key == "skipped_issue_cost") cfg.skipped_issue_cost = v.cast<std::size_t>();
    else if (key == "overlap_bitmap_issue") cfg.overlap_bitmap_issue = v.cast<bool>();
    else if (key == "use_operand_collector") cfg.use_operand_collector = v.cast<bool>();
    else throw dstc::ConfigError("unknown cost config key '" + key + "'");
  }
  cfg.validate();
  return cfg;
}

py::dict trace_dict(const dstc::StepTrace& t) {
  py::dict d;
  d["mode"] = dstc::to_string(t.mode());
  d["sets"] = t.sets();
  d["warp_skipped_sets"] = t.warp_skipped_sets();
  d["executed_substeps"] = t.executed_substeps();
  d["baseline_substeps"] = t.baseline_substeps();
  d["bohmma"] = t.bohmma();
  d["accumulator_writes"] = t.accumulator_writes();
  d["speedup"] = t.speedup();
  return d;
}

py::dict cost_dict(const dstc::CostReport& r) {
  py::dict d;
  d["ohmma_issued"] = r.ohmma_issued;
  d["ohmma_skipped"] = r.ohmma_skipped;
  d["ohmma_warp_skipped"] = r.ohmma_warp_skipped;
  d["bohmma_issued"] = r.bohmma_issued;
  d["issue_cycles"] = r.issue_cycles;
  d["accumulation_cycles"] = r.accumulation_cycles;
  d["total_cycles"] = r.total_cycles;
  d["baseline_cycles"] = r.baseline_cycles;
  d["speedup"] = r.speedup;
  return d;
}

py::dict spgemm(const FloatArray& a, const FloatArray& b, const std::optional<FloatArray>& bias,
                const std::string& mode, std::size_t tile, std::size_t threads,
                const std::optional<py::dict>& cost_config) {
  const dstc::CostConfig cfg = parse_cost_config(cost_config);
  const dstc::DenseMatrix da = to_dense(a);
  const dstc::DenseMatrix db = to_dense(b);
  std::optional<dstc::DenseMatrix> dc;
  if (bias) dc = to_dense(*bias);
  dstc::SpgemmOptions options;
  options.mode = dstc::parse_exec_mode(mode);
  options.threads = threads;
  options.keep_records = false;
  dstc::AccumulationTracker tracker(options.mode, cfg);
  options.observer = tracker.factory();
  dstc::SpgemmResult r;
  {
    py::gil_scoped_release release;
    const dstc::TileShape t{tile, tile};
    r = dstc::device_spgemm(dstc::encode(da, t, dstc::ValueOrder::kColumnMajor), dstc::encode(db, t), dc, options);
  }
  py::dict out;
  out["output"] = to_numpy(r.output);
  out["trace"] = trace_dict(r.trace);
  out["cost"] = cost_dict(dstc::total_cost(r.trace, tracker.cycles(), cfg));
  return out;
}

py::dict spconv(const FloatArray& input, const FloatArray& weights, std::size_t kernel_h, std::size_t kernel_w,
                std::size_t stride, const std::string& mode, std::size_t threads,
                const std::optional<py::dict>& cost_config) {
  const dstc::CostConfig cfg = parse_cost_config(cost_config);
  const dstc::FeatureMap map = to_feature_map(input);
  const dstc::DenseMatrix w = to_dense(weights);
  dstc::ConvProblem problem;
  problem.shape = {map.height(), map.width(), map.channels(), kernel_h, kernel_w, stride, w.rows()};
  problem.shape.validate();
  for (std::size_t c = 0; c < map.channels(); ++c) problem.input.push_back(dstc::encode_single(map.channel(c)));
  problem.weights = dstc::encode_single(w);
  problem.mode = dstc::parse_exec_mode(mode);
  dstc::ConvOptions options;
  options.threads = threads;
  options.keep_records = false;
  dstc::AccumulationTracker tracker(problem.mode, cfg);
  options.observer = tracker.factory();
  dstc::ConvResult r;
  {
    py::gil_scoped_release release;
    r = dstc::spconv(problem, options);
  }
  py::dict out;
  out["output"] = to_numpy(r.output);
  out["trace"] = trace_dict(r.trace);
  out["cost"] = cost_dict(dstc::total_cost(r.trace, tracker.cycles(), cfg));
  out["peak_lowered_values"] = r.lowering.peak_buffered_values;
  return out;
}

py::array_t<float> sparse_im2col(const FloatArray& input, std::size_t kernel_h, std::size_t kernel_w,
                                 std::size_t stride) {
  const dstc::FeatureMap map = to_feature_map(input);
  const dstc::ConvShape shape{map.height(), map.width(), map.channels(), kernel_h, kernel_w, stride, 1};
  std::vector<dstc::BitmapMatrix> channels;
  for (std::size_t c = 0; c < map.channels(); ++c) channels.push_back(dstc::encode_single(map.channel(c)));
  dstc::DenseMatrix lowered(shape.lowered_rows(), shape.lowered_cols());
  for (const dstc::LoweredLane& lane : dstc::sparse_im2col_bitmap(channels, shape, false)) {
    const auto values = lane.lane.expand();
    for (std::size_t i = 0; i < lane.valid; ++i) lowered(lane.tile_row * dstc::kLaneWidth + i, lane.column) = values[i];
  }
  return to_numpy(lowered);
}

std::uint64_t simulate(const py::array_t<std::uint32_t, py::array::c_style | py::array::forcecast>& accesses,
                       const std::string& mode, bool use_collector, const std::optional<py::dict>& cost_config) {
  if (accesses.ndim() != 2 || accesses.shape(1) != 3) throw dstc::ShapeError("accesses must be an n x 3 array");
  std::vector<dstc::Access> list;
  const std::uint32_t* p = accesses.data();
  for (py::ssize_t i = 0; i < accesses.shape(0); ++i) list.push_back({p[3 * i], p[3 * i + 1], p[3 * i + 2]});
  dstc::AccumulationMode m;
  if (mode == "dense") m = dstc::AccumulationMode::kDense;
  else if (mode == "sparse") m = dstc::AccumulationMode::kSparse;
  else throw dstc::ConfigError("mode must be 'dense' or 'sparse'");
  return dstc::simulate_accumulation(list, m, parse_cost_config(cost_config), use_collector);
}

}  // namespace

PYBIND11_MODULE(_dstc, m) {
  m.doc() = "Dual-side sparse GEMM and convolution on bitmap encodings";

  py::register_exception<dstc::Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<dstc::ShapeError>(m, "ShapeError", PyExc_ValueError);
  py::register_exception<dstc::ConfigError>(m, "ConfigError", PyExc_ValueError);

  py::class_<dstc::TwoLevelBitmapMatrix>(m, "TwoLevelBitmapMatrix")
      .def_property_readonly("shape", [](const dstc::TwoLevelBitmapMatrix& t) {
        return py::make_tuple(t.rows(), t.cols());
      })
      .def_property_readonly("tile_shape", [](const dstc::TwoLevelBitmapMatrix& t) {
        return py::make_tuple(t.tile_rows(), t.tile_cols());
      })
      .def_property_readonly("nnz", &dstc::TwoLevelBitmapMatrix::nnz)
      .def_property_readonly("warp_bitmap", [](const dstc::TwoLevelBitmapMatrix& t) {
        py::array_t<bool> bits({t.grid_rows(), t.grid_cols()});
        auto view = bits.mutable_unchecked<2>();
        for (std::size_t r = 0; r < t.grid_rows(); ++r)
          for (std::size_t c = 0; c < t.grid_cols(); ++c) view(r, c) = t.warp_bit(r, c);
        return bits;
      })
      .def("decode", [](const dstc::TwoLevelBitmapMatrix& t) { return to_numpy(dstc::decode(t)); })
      .def("save", [](const dstc::TwoLevelBitmapMatrix& t, const std::string& path) { dstc::save_two_level(path, t); },
           py::arg("path"));

  m.def(
      "encode",
      [](const FloatArray& a, std::size_t tile_rows, std::size_t tile_cols, const std::string& order) {
        return dstc::encode(to_dense(a), {tile_rows, tile_cols}, parse_order(order));
      },
      py::arg("array"), py::arg("tile_rows") = 32, py::arg("tile_cols") = 32, py::arg("order") = "row");
  m.def(
      "load", [](const std::string& path) { return dstc::load_two_level(path); }, py::arg("path"));

  m.def("spgemm", &spgemm, py::arg("a"), py::arg("b"), py::arg("bias") = py::none(), py::arg("mode") = "dual",
        py::arg("tile") = 32, py::arg("threads") = 1, py::arg("cost_config") = py::none(),
        "D = A x B (+ bias) through the two-level bitmap kernel. Returns output, trace and cost.");
  m.def("spconv", &spconv, py::arg("input"), py::arg("weights"), py::arg("kernel_h"), py::arg("kernel_w"),
        py::arg("stride") = 1, py::arg("mode") = "dual", py::arg("threads") = 1, py::arg("cost_config") = py::none(),
        "input is H x W x C; weights is N x (Kh*Kw*C) in (kh, kw, c) order. Output is (Ho*Wo) x N.");
  m.def("sparse_im2col", &sparse_im2col, py::arg("input"), py::arg("kernel_h"), py::arg("kernel_w"),
        py::arg("stride") = 1, "Lowered matrix produced by the bitmap im2col, expanded to dense.");
  m.def("simulate_accumulation", &simulate, py::arg("accesses"), py::arg("mode") = "sparse",
        py::arg("use_collector") = true, py::arg("cost_config") = py::none(),
        "accesses: n x 3 array of (row, col, instruction).");
  m.def("executed_substeps", [](std::size_t k_a, std::size_t k_b) { return dstc::executed_substeps(k_a, k_b); },
        py::arg("k_a"), py::arg("k_b"));
  m.def(
      "quantize",
      [](std::size_t count, const std::string& side) {
        if (side != "a" && side != "b") throw dstc::ConfigError("side must be 'a' or 'b'");
        return dstc::QuantumLevels::for_side(side == "a" ? dstc::Side::kA : dstc::Side::kB).quantize(count);
      },
      py::arg("count"), py::arg("side"));
  m.def(
      "generate_matrix",
      [](std::size_t rows, std::size_t cols, double density, std::uint64_t seed) {
        return to_numpy(dstc::generate_matrix(rows, cols, density, seed));
      },
      py::arg("rows"), py::arg("cols"), py::arg("density"), py::arg("seed"));
  m.attr("RNG_ALGORITHM") = dstc::kRngAlgorithm;
}
