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

#include "dstc/reference.hpp"

#include <string>
#include <vector>

#include "dstc/error.hpp"

namespace dstc {

DenseMatrix reference_gemm(const DenseMatrix& a, const DenseMatrix& b, const std::optional<DenseMatrix>& bias) {
  if (a.cols() != b.rows()) throw ShapeError("inner dimensions differ");
  if (bias && (bias->rows() != a.rows() || bias->cols() != b.cols())) throw ShapeError("bias shape mismatch");
  DenseMatrix d(a.rows(), b.cols());
  std::vector<double> row(b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < b.cols(); ++j) row[j] = bias ? (*bias)(i, j) : 0.0;
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double av = a(i, k);
      if (av == 0.0) continue;
      for (std::size_t j = 0; j < b.cols(); ++j) row[j] += av * b(k, j);
    }
    for (std::size_t j = 0; j < b.cols(); ++j) d(i, j) = static_cast<float>(row[j]);
  }
  return d;
}

DenseMatrix reference_conv(const FeatureMap& input, const DenseMatrix& weights, const ConvShape& shape) {
  shape.validate();
  if (input.height() != shape.height || input.width() != shape.width || input.channels() != shape.channels) {
    throw ShapeError("input does not match the convolution shape");
  }
  if (weights.rows() != shape.filters || weights.cols() != shape.lowered_cols()) {
    throw ShapeError("weights do not match the convolution shape");
  }
  const std::size_t ho = shape.out_h();
  const std::size_t wo = shape.out_w();
  DenseMatrix out(ho * wo, shape.filters);
  for (std::size_t oy = 0; oy < ho; ++oy) {
    for (std::size_t ox = 0; ox < wo; ++ox) {
      for (std::size_t n = 0; n < shape.filters; ++n) {
        double acc = 0.0;
        for (std::size_t kh = 0; kh < shape.kernel_h; ++kh)
          for (std::size_t kw = 0; kw < shape.kernel_w; ++kw)
            for (std::size_t c = 0; c < shape.channels; ++c)
              acc += static_cast<double>(input(oy * shape.stride + kh, ox * shape.stride + kw, c)) *
                     weights(n, shape.column(kh, kw, c));
        out(oy * wo + ox, n) = static_cast<float>(acc);
      }
    }
  }
  return out;
}

}  // namespace dstc
