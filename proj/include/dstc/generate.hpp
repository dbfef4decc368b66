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
#include <random>
#include <vector>

#include "dstc/dense.hpp"

namespace dstc {

// Identifier written next to every generated artifact so fixtures can be reproduced.
inline constexpr const char* kRngAlgorithm = "mt19937_64";

// Element stream shared by all generators. Each element consumes one occupancy draw and
// one value draw, whatever the density, so raising the density of a fixed seed only adds
// nonzeros and never moves existing ones.
class ElementStream {
 public:
  ElementStream(std::uint64_t seed, double density);

  float next();

 private:
  double uniform();

  std::mt19937_64 engine_;
  double density_;
};

void check_density(double density);

// Values uniform in [-1, 1] excluding zero, each element nonzero with probability `density`.
DenseMatrix generate_matrix(std::size_t rows, std::size_t cols, double density, std::uint64_t seed);
FeatureMap generate_feature_map(std::size_t height, std::size_t width, std::size_t channels, double density,
                                std::uint64_t seed);
std::vector<FeatureMap> generate_filters(std::size_t count, std::size_t kernel_h, std::size_t kernel_w,
                                         std::size_t channels, double density, std::uint64_t seed);

// Nonzeros confined to randomly chosen tiles: each tile is live with probability
// `tile_density` and each element of a live tile is nonzero with `element_density`.
DenseMatrix generate_clustered(std::size_t rows, std::size_t cols, std::size_t tile, double tile_density,
                               double element_density, std::uint64_t seed);

// Per-seed derivation used when one scenario needs several independent streams.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace dstc
