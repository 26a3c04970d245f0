"""Smoke test for the qnlab_py bindings.

Install with `pip install --no-build-isolation -e crates/python`, then run
`python python/smoke_test.py`.
"""

import json
import math
import tempfile

import qnlab_py as q

N = 32


def grid_fn(f):
    h = 1.0 / N
    return [f(-0.5 + i * h, -0.5 + j * h) for i in range(N) for j in range(N)]


def max_err(a, b):
    return max(abs(x - y) for x, y in zip(a, b))


def check_spectral():
    k = 2 * math.pi * 3
    rhs = grid_fn(lambda x, y: math.cos(k * x))
    phi = q.poisson_neg(rhs, N, 0.5)
    assert max_err(phi, [v / (0.5 * k * k) for v in rhs]) < 1e-12

    omega = grid_fn(lambda x, y: math.cos(k * y))
    u1, u2 = q.biot_savart(omega, N)
    assert max_err(u1, grid_fn(lambda x, y: -math.sin(k * y) / k)) < 1e-12
    assert max(abs(v) for v in u2) < 1e-12
    assert abs(q.h_minus1_norm(rhs, N) - math.sqrt(0.5) / k) < 1e-12


def check_errors():
    try:
        q.poisson_neg([0.0] * 10, N, 1.0)
    except ValueError:
        pass
    else:
        raise AssertionError("length mismatch accepted")
    try:
        q.fit_rate([0.1, 0.05], [1.0, 0.5])
    except RuntimeError:
        pass
    else:
        raise AssertionError("two-point fit accepted")
    assert abs(q.fit_rate([0.1, 0.05, 0.025], [0.2, 0.1, 0.05]) - 1.0) < 1e-12


def check_run():
    cfg = "n = 16\nppc = 4\neps = 0.1\nt_end = 0.05\n"
    with tempfile.TemporaryDirectory() as d:
        summary = json.loads(q.run(cfg, d))
        assert summary["initial_energy"] > 0
        with open(f"{d}/steps.csv") as f:
            assert f.readline().startswith("t,")
        rep = json.loads(q.sweep(cfg, [0.05, 0.1], d + "/sweep"))
        assert rep["complete"] and [r["eps"] for r in rep["rows"]] == [0.1, 0.05]


if __name__ == "__main__":
    check_spectral()
    check_errors()
    check_run()
    print("qnlab_py smoke test passed")
