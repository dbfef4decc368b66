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

#include "dstc/dense.hpp"

#include <cmath>
#include <string>

#include "dstc/error.hpp"

namespace dstc {

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols)
    : rows_(rows), cols_(cols), data_(rows * cols, 0.0f) {}

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols, std::vector<float> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows_ * cols_) {
    throw ShapeError("dense data length " + std::to_string(data_.size()) + " != " +
                     std::to_string(rows_) + "x" + std::to_string(cols_));
  }
}

std::size_t DenseMatrix::count_nonzeros() const {
  std::size_t n = 0;
  for (float v : data_) n += (v != 0.0f);
  return n;
}

DenseMatrix DenseMatrix::transposed() const {
  DenseMatrix t(cols_, rows_);
  for (std::size_t r = 0; r < rows_; ++r)
    for (std::size_t c = 0; c < cols_; ++c) t(c, r) = (*this)(r, c);
  return t;
}

FeatureMap::FeatureMap(std::size_t height, std::size_t width, std::size_t channels)
    : height_(height), width_(width), channels_(channels), data_(height * width * channels, 0.0f) {}

FeatureMap::FeatureMap(std::size_t height, std::size_t width, std::size_t channels,
                       std::vector<float> data)
    : height_(height), width_(width), channels_(channels), data_(std::move(data)) {
  if (data_.size() != height_ * width_ * channels_) {
    throw ShapeError("feature map data length mismatch");
  }
}

DenseMatrix FeatureMap::channel(std::size_t c) const {
  DenseMatrix m(height_, width_);
  for (std::size_t y = 0; y < height_; ++y)
    for (std::size_t x = 0; x < width_; ++x) m(y, x) = (*this)(y, x, c);
  return m;
}

double relative_frobenius_error(std::span<const float> got, std::span<const float> want) {
  if (got.size() != want.size()) throw ShapeError("error norm over mismatched lengths");
  double diff = 0.0;
  double ref = 0.0;
  for (std::size_t i = 0; i < got.size(); ++i) {
    const double d = static_cast<double>(got[i]) - static_cast<double>(want[i]);
    diff += d * d;
    ref += static_cast<double>(want[i]) * static_cast<double>(want[i]);
  }
  if (ref == 0.0) return std::sqrt(diff);
  return std::sqrt(diff / ref);
}

}  // namespace dstc
