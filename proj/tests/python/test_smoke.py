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

import numpy as np
import pytest

import dstc


def test_encode_roundtrip(tmp_path):
    a = dstc.generate_matrix(70, 45, 0.3, 7)
    enc = dstc.encode(a, 32, 32)
    assert enc.shape == (70, 45)
    assert enc.nnz == np.count_nonzero(a)
    assert enc.warp_bitmap.shape == (3, 2)
    np.testing.assert_array_equal(enc.decode(), a)
    path = tmp_path / "a.dstc"
    enc.save(str(path))
    np.testing.assert_array_equal(dstc.load(str(path)).decode(), a)


@pytest.mark.parametrize("mode", ["dense", "single", "dual"])
def test_spgemm_matches_numpy(mode):
    a = dstc.generate_matrix(96, 64, 0.4, 1)
    b = dstc.generate_matrix(64, 80, 0.3, 2)
    c = dstc.generate_matrix(96, 80, 1.0, 3)
    res = dstc.spgemm(a, b, bias=c, mode=mode)
    want = a.astype(np.float64) @ b.astype(np.float64) + c
    np.testing.assert_allclose(res["output"], want, rtol=1e-5, atol=1e-5)
    assert res["trace"]["mode"] == mode
    assert res["cost"]["total_cycles"] > 0


def test_sparse_modes_skip_work():
    a = dstc.generate_matrix(128, 128, 0.2, 11)
    b = dstc.generate_matrix(128, 128, 0.2, 12)
    dense = dstc.spgemm(a, b, mode="dense")["trace"]
    dual = dstc.spgemm(a, b, mode="dual")["trace"]
    assert dual["executed_substeps"] < dense["executed_substeps"]
    assert dense["speedup"] == pytest.approx(1.0)


def test_spconv_and_im2col():
    rng = np.random.default_rng(5)
    x = rng.standard_normal((10, 10, 3)).astype(np.float32)
    x[rng.random(x.shape) < 0.5] = 0
    w = rng.standard_normal((4, 27)).astype(np.float32)
    lowered = dstc.sparse_im2col(x, 3, 3)
    assert lowered.shape == (64, 27)
    ref = np.empty((64, 27), dtype=np.float32)
    for oy in range(8):
        for ox in range(8):
            ref[oy * 8 + ox] = x[oy:oy + 3, ox:ox + 3, :].reshape(-1)
    np.testing.assert_array_equal(lowered, ref)
    res = dstc.spconv(x, w, 3, 3, mode="dual")
    np.testing.assert_allclose(res["output"], ref @ w.T, rtol=1e-5, atol=1e-5)


def test_cost_helpers():
    assert dstc.quantize(20, "a") == 24
    assert dstc.quantize(11, "b") == 16
    assert dstc.executed_substeps(24, 16) == 3
    acc = np.array([[0, c, 0] for c in range(32)], dtype=np.uint32)
    assert dstc.simulate_accumulation(acc, mode="dense") == 2
    with pytest.raises(ValueError):
        dstc.spgemm(np.ones((2, 3), np.float32), np.ones((4, 2), np.float32))
    with pytest.raises(ValueError):
        dstc.spgemm(np.ones((2, 2), np.float32), np.ones((2, 2), np.float32), cost_config={"acc_ports": 0})
