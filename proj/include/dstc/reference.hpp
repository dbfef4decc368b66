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

#include <optional>
#include <span>

#include "dstc/dense.hpp"
#include "dstc/im2col.hpp"

namespace dstc {

// Triple-loop GEMM with double accumulation: D = A x B (+ C).
DenseMatrix reference_gemm(const DenseMatrix& a, const DenseMatrix& b,
                           const std::optional<DenseMatrix>& bias = std::nullopt);

// Direct sliding-window convolution. `weights` is N x (Kh*Kw*C) in (kh, kw, c) order;
// the result is (Ho*Wo) x N.
DenseMatrix reference_conv(const FeatureMap& input, const DenseMatrix& weights, const ConvShape& shape);

}  // namespace dstc
