"""Smoke test of the krein_flow Python extension."""

import json
import math

import numpy as np

import krein_flow as kf


def check_presets():
    assert set(kf.presets()) == {"hilbert-diagonal", "hyperbolic-2x2", "crossing", "cluster-gap"}


def check_space():
    space = kf.KreinSpace([1, -1])
    assert space.dim == 2
    assert space.inner_product([1, 0], [1, 0]) == 1
    assert space.inner_product([0, 1], [0, 1]) == -1


def check_hyperbolic():
    inst = kf.Instance.preset("hyperbolic-2x2")
    a = np.array(inst.a)
    c = np.array(inst.c)
    want = np.sort(np.linalg.eigvals(a + c).real)
    got = np.sort(inst.eigenvalues(1.0))
    disc = math.sqrt(10.285)
    assert np.allclose(got, want, atol=1e-12)
    assert abs(got[1] - (1.1 + disc) / 2) < 1e-10
    assert inst.regularity_ranks() == (1, 1)

    report = kf.run(inst, (1.0, 3.0), p=1.0, steps=201)
    assert report.passed and report.exit_status == 0
    assert abs(report.lp_sum - 0.15351) < 1e-4
    assert abs(report.bound_rhs - 0.2125) < 1e-12
    assert 0 < report.delta <= 8 / 17 + 1e-10
    d = report.to_dict()
    assert d["lp_sum"] == report.lp_sum
    rows = report.trajectory()
    assert len(rows[0]) == 5


def check_round_trip():
    inst = kf.Instance.random(7, 6, plus=3)
    again = kf.Instance.from_json(inst.to_json())
    assert np.array_equal(np.array(inst.a), np.array(again.a))
    kinds = inst.spectral_types(0.5)
    assert all((v > 0) == (k == "positive") for v, k in kinds)


def check_errors():
    try:
        kf.Instance([1, -1], [[2, 0], [0, -1]], [[1, 1], [-1, -1]])
    except kf.InvalidInputError as e:
        assert "rank C = 1" in str(e)
    else:
        raise AssertionError("nilpotent perturbation accepted")
    try:
        kf.run(kf.Instance.preset("crossing"), (-1.0, 1.0))
    except kf.KreinFlowError:
        pass
    else:
        raise AssertionError("interval containing 0 accepted")


def check_batch():
    batch = kf.verify(5, seed=3, n=6, p=2.0, steps=51)
    assert batch["count"] == 5 and batch["passed"] == 5
    assert batch["min_margin"] > 0
    json.dumps(batch)


if __name__ == "__main__":
    for check in (check_presets, check_space, check_hyperbolic, check_round_trip, check_errors, check_batch):
        check()
        print(f"ok {check.__name__}")
    print("smoke test passed")
