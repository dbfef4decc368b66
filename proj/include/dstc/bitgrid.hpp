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

#include <bit>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace dstc {

// 2-D bit array. Each row occupies whole 64-bit words; bit k of a row is column k,
// packed least-significant-bit first.
class BitGrid {
 public:
  BitGrid() = default;
  BitGrid(std::size_t rows, std::size_t cols)
      : rows_(rows), cols_(cols), words_per_row_((cols + 63) / 64), words_(rows * words_per_row_, 0) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t words_per_row() const { return words_per_row_; }

  bool test(std::size_t r, std::size_t c) const {
    return (words_[r * words_per_row_ + c / 64] >> (c % 64)) & 1u;
  }
  void set(std::size_t r, std::size_t c) { words_[r * words_per_row_ + c / 64] |= (std::uint64_t{1} << (c % 64)); }
  void reset(std::size_t r, std::size_t c) {
    words_[r * words_per_row_ + c / 64] &= ~(std::uint64_t{1} << (c % 64));
  }

  std::span<const std::uint64_t> row_words(std::size_t r) const {
    return {words_.data() + r * words_per_row_, words_per_row_};
  }

  std::size_t row_popcount(std::size_t r) const {
    std::size_t n = 0;
    for (std::uint64_t w : row_words(r)) n += static_cast<std::size_t>(std::popcount(w));
    return n;
  }

  std::size_t popcount() const {
    std::size_t n = 0;
    for (std::uint64_t w : words_) n += static_cast<std::size_t>(std::popcount(w));
    return n;
  }

  bool any() const {
    for (std::uint64_t w : words_)
      if (w != 0) return true;
    return false;
  }

  friend bool operator==(const BitGrid&, const BitGrid&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::size_t words_per_row_ = 0;
  std::vector<std::uint64_t> words_;
};

}  // namespace dstc
