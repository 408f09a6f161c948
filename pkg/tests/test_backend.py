import math
import os
import subprocess
import sys

import numpy as np
import pytest

from isingdroplet import _backend, _fallback
from isingdroplet.geometry import disk_shape
from isingdroplet.lattice import init_from_shape, square_shape


def _run_both(fn_name, config, *args):
    out = []
    for mod in (_backend, _fallback):
        spins = config.spins.copy()
        out.append(getattr(mod, fn_name)(spins, config.frozen, *args))
    return out


@pytest.mark.skipif(not _backend.COMPILED, reason="extension not built")
@pytest.mark.parametrize("h", [0.0, 0.7, math.inf])
def test_kmc_backends_bitwise_identical(h):
    c = init_from_shape(disk_shape(0.8), 8)
    p = 1.0 if math.isinf(h) else 1 / (1 + math.exp(-2 * h))
    q = 1.0 - p
    st = np.array([1.0, 5.0, 20.0])
    a, b = _run_both("kmc_run", c, p, q, 50.0, st, 99, 2, -1)
    assert a["events"] == b["events"] and a["extinction"] == b["extinction"]
    for x, y in zip(a["snapshots"], b["snapshots"]):
        assert np.array_equal(x, y)


@pytest.mark.skipif(not _backend.COMPILED, reason="extension not built")
@pytest.mark.parametrize("h,beta", [(0.0, math.inf), (0.7, math.inf), (math.inf, math.inf), (0.3, 1.5)])
def test_graphical_backends_bitwise_identical(h, beta):
    c = init_from_shape(square_shape(0.75), 8)
    st = np.array([0.5, 3.0, 10.0])
    a, b = _run_both("graphical_run", c, -c.offset, -c.offset, h, beta, 10.0, st, 4, 2)
    assert a["events"] == b["events"] and a["rings"] == b["rings"]
    for x, y in zip(a["snapshots"], b["snapshots"]):
        assert np.array_equal(x, y)


def test_uniform_backends_agree():
    for args in [(1, 2, 3, 4, 0), (2**63, -5, 7, 1, 1)]:
        assert _backend.uniform(*args) == _fallback.uniform(*args)


def test_pure_python_selected_by_environment():
    code = ("from isingdroplet import _backend, _fallback; "
            "assert not _backend.COMPILED and _backend.kmc_run is _fallback.kmc_run")
    subprocess.run([sys.executable, "-c", code], check=True,
                   env={**os.environ, "ISINGDROPLET_PURE": "1"})


def test_pure_python_engine_end_to_end():
    c = init_from_shape(disk_shape(0.6), 6)
    a = _fallback.kmc_run(c.spins.copy(), c.frozen, 1.0, 0.0, math.inf, np.zeros(0), 3, 2, -1)
    assert a["extinction"] > 0 and a["to_minus"] == 0
    assert a["events"] == c.minus_count()
