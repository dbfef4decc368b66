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

#include "dstc/generate.hpp"

#include <algorithm>
#include <string>

#include "dstc/error.hpp"

namespace dstc {

void check_density(double density) {
  if (!(density >= 0.0 && density <= 1.0)) {
    throw ConfigError("density " + std::to_string(density) + " is outside [0, 1]");
  }
}

ElementStream::ElementStream(std::uint64_t seed, double density) : engine_(seed), density_(density) {
  check_density(density);
}

double ElementStream::uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

float ElementStream::next() {
  const bool live = uniform() < density_;
  float v = 0.0f;
  do {
    v = static_cast<float>(2.0 * uniform() - 1.0);
  } while (v == 0.0f);
  return live ? v : 0.0f;
}

DenseMatrix generate_matrix(std::size_t rows, std::size_t cols, double density, std::uint64_t seed) {
  ElementStream stream(seed, density);
  DenseMatrix m(rows, cols);
  for (float& v : m.data()) v = stream.next();
  return m;
}

FeatureMap generate_feature_map(std::size_t height, std::size_t width, std::size_t channels, double density,
                                std::uint64_t seed) {
  ElementStream stream(seed, density);
  std::vector<float> data(height * width * channels);
  for (float& v : data) v = stream.next();
  return FeatureMap(height, width, channels, std::move(data));
}

std::vector<FeatureMap> generate_filters(std::size_t count, std::size_t kernel_h, std::size_t kernel_w,
                                         std::size_t channels, double density, std::uint64_t seed) {
  ElementStream stream(seed, density);
  std::vector<FeatureMap> filters;
  filters.reserve(count);
  for (std::size_t n = 0; n < count; ++n) {
    std::vector<float> data(kernel_h * kernel_w * channels);
    for (float& v : data) v = stream.next();
    filters.emplace_back(kernel_h, kernel_w, channels, std::move(data));
  }
  return filters;
}

DenseMatrix generate_clustered(std::size_t rows, std::size_t cols, std::size_t tile, double tile_density,
                               double element_density, std::uint64_t seed) {
  if (tile == 0) throw ConfigError("tile must be >= 1");
  check_density(tile_density);
  const std::size_t grid_rows = (rows + tile - 1) / tile;
  const std::size_t grid_cols = (cols + tile - 1) / tile;
  ElementStream tiles(derive_seed(seed, 0), tile_density);
  ElementStream elements(derive_seed(seed, 1), element_density);
  DenseMatrix m(rows, cols);
  for (std::size_t gr = 0; gr < grid_rows; ++gr) {
    for (std::size_t gc = 0; gc < grid_cols; ++gc) {
      if (tiles.next() == 0.0f) continue;
      for (std::size_t r = gr * tile; r < std::min(rows, (gr + 1) * tile); ++r)
        for (std::size_t c = gc * tile; c < std::min(cols, (gc + 1) * tile); ++c) m(r, c) = elements.next();
    }
  }
  return m;
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  // splitmix64 finalizer over the pair
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ull * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

}  // namespace dstc
