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

#include <doctest.h>

#include <sstream>
#include <string>

#include "dstc/bench.hpp"
#include "dstc/error.hpp"
#include "dstc/generate.hpp"

using namespace dstc;

TEST_CASE("generator is reproducible and nests masks across densities") {
  CHECK(generate_matrix(20, 30, 0.3, 9) == generate_matrix(20, 30, 0.3, 9));
  CHECK_FALSE(generate_matrix(20, 30, 0.3, 9) == generate_matrix(20, 30, 0.3, 10));
  const DenseMatrix lo = generate_matrix(40, 40, 0.2, 4);
  const DenseMatrix hi = generate_matrix(40, 40, 0.6, 4);
  for (std::size_t i = 0; i < 40; ++i)
    for (std::size_t j = 0; j < 40; ++j)
      if (lo(i, j) != 0.0f) CHECK(hi(i, j) == lo(i, j));
  const DenseMatrix full = generate_matrix(16, 16, 1.0, 1);
  CHECK(full.count_nonzeros() == 256);
  for (float v : full.data()) CHECK((v >= -1.0f && v <= 1.0f));
  CHECK(generate_matrix(16, 16, 0.0, 1).count_nonzeros() == 0);
  CHECK_THROWS_AS(generate_matrix(4, 4, 1.5, 1), ConfigError);
  CHECK_THROWS_AS(generate_matrix(4, 4, -0.1, 1), ConfigError);
  CHECK(derive_seed(1, 0) != derive_seed(1, 1));
  CHECK(std::string(kRngAlgorithm) == "mt19937_64");
}

TEST_CASE("clustered generator confines nonzeros to live tiles") {
  const DenseMatrix m = generate_clustered(128, 128, 32, 0.25, 0.5, 3);
  for (std::size_t ti = 0; ti < 4; ++ti)
    for (std::size_t tj = 0; tj < 4; ++tj) {
      std::size_t nnz = 0;
      for (std::size_t r = 0; r < 32; ++r)
        for (std::size_t c = 0; c < 32; ++c) nnz += m(ti * 32 + r, tj * 32 + c) != 0.0f;
      CHECK((nnz == 0 || nnz > 200));
    }
}

TEST_CASE("scenario files expand density and mode lists") {
  const std::string text = R"({"scenarios": [
    {"name": "g", "kind": "gemm", "M": 64, "N": 32, "K": 96, "a_density": [1.0, 0.5],
     "b_density": 0.25, "mode": ["dense", "dual"], "repetitions": 2},
    {"kind": "conv", "H": 8, "W": 8, "C": 2, "N": 4, "Kh": 3, "Kw": 3, "seed": 7}
  ]})";
  const std::vector<Scenario> s = parse_scenarios(text, 42);
  REQUIRE(s.size() == 5);
  CHECK(s[0].name == "g/1x0.25/dense");
  CHECK(s[1].name == "g/1x0.25/dual");
  CHECK(s[2].name == "g/0.5x0.25/dense");
  CHECK(s[0].repetitions == 2);
  CHECK(s[0].seed == 42);
  CHECK(s[4].kind == ScenarioKind::kConv);
  CHECK(s[4].seed == 7);
  CHECK(s[4].layer.shape.stride == 1);
  CHECK(s[4].mode == ExecMode::kDualSparse);

  CHECK(parse_scenarios(R"([{"kind": "gemm", "M": 1, "N": 1, "K": 1}])", 1).size() == 1);
  CHECK_THROWS_AS(parse_scenarios(R"([{"kind": "gemm", "M": 1, "N": 1}])", 1), ConfigError);
  CHECK_THROWS_AS(parse_scenarios(R"([{"kind": "gemm", "M": 1, "N": 1, "K": 1, "a_density": 2}])", 1),
                  ConfigError);
  CHECK_THROWS_AS(parse_scenarios(R"([{"kind": "fft"}])", 1), ConfigError);
  CHECK_THROWS_AS(parse_scenarios("{", 1), ConfigError);
}

TEST_CASE("layer documents") {
  const Scenario s = parse_layer(
      R"({"name": "res", "H": 14, "W": 14, "C": 8, "N": 8, "Kh": 3, "Kw": 3, "S": 1,
          "act_density": 0.5, "wgt_density": 0.25, "mode": "single"})",
      3);
  CHECK(s.name == "res");
  CHECK(s.kind == ScenarioKind::kConv);
  CHECK(s.mode == ExecMode::kSingleSparse);
  CHECK(s.layer.act_density == 0.5);
  CHECK_THROWS_AS(parse_layer(R"({"H": 8, "W": 8, "C": 1, "N": 1, "Kh": 3, "Kw": 3, "S": 2})", 3), ConfigError);
}

TEST_CASE("gemm and conv runs pass their oracles") {
  Scenario g;
  g.name = "g";
  g.gemm = {96, 64, 64, 0.5, 0.25};
  g.seed = 5;
  const RunRow r = run_gemm(g, 0, CostConfig{});
  CHECK(r.oracle_pass);
  CHECK(r.max_rel_error <= kOracleTolerance);
  CHECK(r.a_nnz == generate_matrix(96, 64, 0.5, derive_seed(5, 0)).count_nonzeros());
  CHECK(r.cost.total_cycles > 0);

  Scenario c;
  c.name = "c";
  c.kind = ScenarioKind::kConv;
  c.layer = {{12, 12, 4, 3, 3, 1, 6}, 0.4, 0.5};
  c.seed = 6;
  const RunRow rc = run_conv(c, 1, CostConfig{});
  CHECK(rc.oracle_pass);
  CHECK(rc.seed == repetition_seed(c, 1));
  CHECK(rc.m == 100);
  CHECK(rc.n == 6);
  CHECK(rc.k == 36);
}

TEST_CASE("im2col bench compares data-dependent reads") {
  Scenario s;
  s.name = "im";
  s.kind = ScenarioKind::kIm2colBench;
  s.layer = {{16, 16, 4, 3, 3, 1, 1}, 0.3, 1.0};
  const Im2colRow row = run_im2col_bench(s, 0);
  REQUIRE(row.paths.size() == 3);
  CHECK(row.paths[0].path == "dense");
  CHECK(row.paths[1].path == "csr");
  CHECK(row.paths[2].path == "bitmap");
  CHECK(row.oracle_pass);
  CHECK(row.paths[2].data_dependent_reads < row.paths[1].data_dependent_reads);
}

TEST_CASE("sweep keeps scenario order under threads and writes CSV") {
  const std::vector<Scenario> scenarios = parse_scenarios(
      R"([{"name": "a", "kind": "gemm", "M": 64, "N": 64, "K": 64, "a_density": [0.9, 0.1], "repetitions": 2},
          {"name": "b", "kind": "im2col-bench", "H": 8, "W": 8, "C": 2, "N": 1, "Kh": 3, "Kw": 3}])",
      11);
  const SweepResult serial = run_sweep(scenarios, CostConfig{}, 1);
  const SweepResult threaded = run_sweep(scenarios, CostConfig{}, 4);
  CHECK(serial.all_passed());
  REQUIRE(serial.runs.size() == 4);
  REQUIRE(threaded.runs.size() == 4);
  CHECK(serial.im2col.size() == 1);
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(serial.runs[i].scenario == threaded.runs[i].scenario);
    CHECK(serial.runs[i].repetition == threaded.runs[i].repetition);
    CHECK(serial.runs[i].cost.total_cycles == threaded.runs[i].cost.total_cycles);
  }
  CHECK(serial.runs[0].repetition == 0);
  CHECK(serial.runs[1].repetition == 1);

  std::ostringstream csv;
  write_run_csv(csv, serial.runs);
  const std::string text = csv.str();
  CHECK(text.rfind("# generator: mt19937_64\r\n", 0) == 0);
  std::size_t lines = 0;
  for (char ch : text) lines += ch == '\n';
  CHECK(lines == 2 + 4);

  std::ostringstream plot;
  write_run_plot_data(plot, serial.runs);
  CHECK(plot.str().rfind("scenario,x,series,y\r\n", 0) == 0);
}
