# Copyright (c) 2026 The dstc Authors. All Rights Reserved.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Dual-side sparse GEMM and convolution on bitmap encodings."""

from ._dstc import (
    RNG_ALGORITHM,
    ConfigError,
    Error,
    ShapeError,
    TwoLevelBitmapMatrix,
    encode,
    executed_substeps,
    generate_matrix,
    load,
    quantize,
    simulate_accumulation,
    sparse_im2col,
    spconv,
    spgemm,
)

__all__ = [
    "RNG_ALGORITHM",
    "ConfigError",
    "Error",
    "ShapeError",
    "TwoLevelBitmapMatrix",
    "encode",
    "executed_substeps",
    "generate_matrix",
    "load",
    "quantize",
    "simulate_accumulation",
    "sparse_im2col",
    "spconv",
    "spgemm",
]

__version__ = "0.1.0"
