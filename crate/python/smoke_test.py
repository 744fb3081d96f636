"""Smoke test for the petzstab Python module.

Build and install the extension first:

    pip install --no-build-isolation ./crates/python
    python python/smoke_test.py
"""

import math

import numpy as np

import petzstab

RHO = [[0.5, 0.25], [0.25, 0.5]]
SIGMA = np.eye(2) / 2
DIAGONAL = {"kind": "diagonal", "dim": 2}


def close(a, b, tol):
    assert abs(a - b) <= tol, f"{a} vs {b}"


def qubit_example():
    s_rho = -(0.75 * math.log(0.75) + 0.25 * math.log(0.25))
    gap = petzstab.dpi_gap(RHO, SIGMA, DIAGONAL)
    close(gap, math.log(2) - s_rho, 1e-12)

    report = petzstab.check(RHO, SIGMA, DIAGONAL)
    close(report["bounds"]["gap"], gap, 0.0)
    close(report["bounds"]["inputs"]["delta_norm"], 2.0, 1e-12)
    close(report["equality"]["residuals"]["petz_trace_residual"], 0.5, 1e-10)
    rem5b = next(b for b in report["bounds"]["bounds"] if b["id"] == "rem5b")
    close(rem5b["value"], (math.pi / 8) ** 4 / 64, 1e-15)
    assert not report["violation"]

    s = petzstab.structure(RHO, DIAGONAL)
    assert s["fixed_point_dim"] == 1
    t = petzstab.takesaki(RHO, '{"kind": "diagonal", "dim": 2}')
    assert t["flags_agree"] and not t["is_real"]["flag"]


def relative_entropy_matches_numpy():
    rho = np.array(petzstab.random_density(3, seed=1))
    sigma = np.array(petzstab.random_density(3, seed=2))

    def logm(m):
        w, v = np.linalg.eigh(m)
        return v @ np.diag(np.log(w)) @ v.conj().T

    expected = np.trace(rho @ (logm(rho) - logm(sigma))).real
    close(petzstab.relative_entropy(rho, sigma), expected, 1e-10)


def sweeps():
    csv, summary = petzstab.sweep(4, "tensor_factor", 50, seed=3)
    assert csv.startswith("# petzstab-sweep v1\n")
    assert summary["violations"] == 0 and summary["instances"] == 50
    again, _ = petzstab.sweep(4, "tensor_factor", 50, seed=3, threads=1)
    assert again == csv

    _, summary = petzstab.sweep(3, {"kind": "full", "dim": 3}, 10, rank=2)
    assert summary["violations"] == 0

    _, summary = petzstab.ssa([2, 2, 2], 50)
    assert summary["violations"] == 0
    _, summary = petzstab.oracle(8, 50)
    assert summary["max_discrepancy"] < 1e-9


def errors():
    try:
        petzstab.check([[1.0, 0.0], [0.0, 0.0]], SIGMA, DIAGONAL)
    except ValueError as e:
        assert str(e).startswith("[non_faithful]")
    else:
        raise AssertionError("pure state accepted")
    try:
        petzstab.dpi_gap(RHO, SIGMA, {"kind": "diagonal", "dim": 3})
    except ValueError as e:
        assert str(e).startswith("[dimension_mismatch]")
    else:
        raise AssertionError("dimension mismatch accepted")
    try:
        petzstab.check(RHO, SIGMA, DIAGONAL, tolerances={"nope": 1})
    except ValueError as e:
        assert str(e).startswith("[parse]")
    else:
        raise AssertionError("unknown tolerance accepted")


if __name__ == "__main__":
    for test in (qubit_example, relative_entropy_matches_numpy, sweeps, errors):
        test()
        print(f"ok  {test.__name__}")
