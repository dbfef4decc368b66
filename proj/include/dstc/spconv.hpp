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
#include <vector>

#include "dstc/bitmap.hpp"
#include "dstc/im2col.hpp"
#include "dstc/spgemm.hpp"

namespace dstc {

// Activations (one bitmap matrix per channel) convolved with flattened filters.
// Lowered activations are the left operand (Ho*Wo x Kh*Kw*C); the transposed filters
// are the right operand (Kh*Kw*C x N).
struct ConvProblem {
  ConvShape shape;
  std::vector<BitmapMatrix> input;
  BitmapMatrix weights;  // N x (Kh*Kw*C), rows flattened in (kh, kw, c) order
  ExecMode mode = ExecMode::kDualSparse;
};

struct ConvOptions {
  std::size_t threads = 1;
  bool keep_records = true;
  ObserverFactory observer;
  QuantumLevels a_levels = QuantumLevels::a_side();
  QuantumLevels b_levels = QuantumLevels::b_side();
};

struct ConvResult {
  DenseMatrix output;  // (Ho*Wo) x N
  StepTrace trace;
  LoweringStats lowering;
};

// Implicit im2col fused into the warp kernel. Lowered lanes are built on demand one
// 32x32 block at a time and discarded after use.
ConvResult spconv(const ConvProblem& problem, const ConvOptions& options = {});

}  // namespace dstc
