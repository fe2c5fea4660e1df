import math

import numpy as np
import pytest

from phicheeger.experiments import (
    SweepTable,
    matched_distance,
    sweep_p,
    sweep_phi,
    trend_violations,
    verify_certificates,
)
from phicheeger.graph import Labeling, chamber_stats
from phicheeger.instances import random_graph, square_grid
from phicheeger.partition import SolveReport, solve_H, solve_Lp
from phicheeger.phi import PhiSpec

P_LIST = [2.0, 1.8, 1.6, 1.4, 1.2, 1.1, 1.05]


def test_sweep_p_path_n1(path):
    t = sweep_p(path, 1, PhiSpec.pnorm(1, 1), P_LIST)
    assert t.reference_value == pytest.approx(2 / 3)
    # p = 2: smallest eigenvalue of the tridiagonal matrix [[2,-1,0],[-1,2,-1],[0,-1,2]]
    assert t.rows[0].value == pytest.approx(2 - math.sqrt(2), rel=1e-8)
    gaps = np.abs(t.column("gap_to_reference"))
    assert trend_violations(gaps, tolerated=0)[0]
    assert gaps[-1] <= 0.15 * t.reference_value
    assert all(r.ok for r in t.rows)


def test_sweep_p_deterministic(path):
    phi = PhiSpec.pnorm(math.inf, 2)
    runs = [sweep_p(path, 2, phi, [2.0]) for _ in range(3)]
    csvs = {r.to_csv(timing=False) for r in runs}
    assert len(csvs) == 1
    assert [r.rows[0].value for r in runs] == [runs[0].rows[0].value] * 3
    assert csvs.pop().splitlines()[0] == "key,value,gap,distance,runtime_ms"


def test_sweep_p_validation(path):
    phi = PhiSpec.pnorm(2, 1)
    with pytest.raises(ValueError):
        sweep_p(path, 1, phi, [1.5, 2.0])
    with pytest.raises(ValueError):
        sweep_p(path, 1, phi, [2.0, 1.0])
    with pytest.raises(ValueError):
        sweep_p(path, 1, phi, [])


def test_sweep_phi_path(path):
    t = sweep_phi(path, 2, [1, 2, 8, 64, math.inf])
    assert not t.violations
    H = t.reference_value
    assert H == 2
    last = t.rows[-1]
    assert last.gap_to_reference == 0 and last.minimizer_distance == 0
    q64 = t.rows[3]
    assert 0 <= q64.gap_to_reference <= (2 ** (1 / 64) - 1) * H
    assert trend_violations(t.column("value"), tolerated=0)[0]


def test_sweep_phi_validation(path):
    with pytest.raises(ValueError):
        sweep_phi(path, 2, [1, 2])
    with pytest.raises(ValueError):
        sweep_phi(path, 2, [2, 1, math.inf])
    with pytest.raises(ValueError):
        sweep_phi(path, 2, [0.5, math.inf])


def test_matched_distance(path):
    A = Labeling(np.array([1, 0, 2]), 2)
    B = Labeling(np.array([2, 0, 1]), 2)
    assert matched_distance(path, A, B) == 0
    C = Labeling(np.array([1, 2, 2]), 2)
    assert matched_distance(path, A, C) == 1.0


def test_trend_violations():
    assert trend_violations([3, 2, 2.5, 1]) == (True, 1)
    assert trend_violations([3, 4, 5, 1]) == (False, 2)
    assert trend_violations([3, 3.05, 1], tolerated=0, slack=0.1) == (True, 0)


def test_verify_grid_n1_passes():
    G = square_grid(8)
    r = solve_H(G, 1, PhiSpec.pnorm(1, 1), restarts=2)
    out = verify_certificates(r, G)
    assert out["verdict"] == "pass" and out["hard_failures"] == 0
    names = {c["name"] for c in out["certificates"]}
    assert {"value_consistency", "lower_bound_H", "chamber_volume", "function_sup_norm"} <= names


def test_verify_forged_value_fails():
    G = square_grid(8)
    a = np.zeros(G.n, dtype=np.int64)
    a[0], a[-1] = 1, 2
    L = Labeling(a, 2)
    phi = PhiSpec.pnorm(math.inf, 2)
    forged = SolveReport("H", phi, 1.0, L, chamber_stats(G, L))
    out = verify_certificates(forged, G)
    assert out["verdict"] == "fail"
    failed = {c["name"] for c in out["certificates"] if c["holds"] is False}
    assert {"value_consistency", "chamber_volume"} <= failed


def test_verify_size_mismatch(path):
    r = solve_H(square_grid(2), 1, PhiSpec.pnorm(1, 1))
    assert verify_certificates(r, path)["verdict"] == "fail"


def test_verify_lp_report_at_p2():
    G = square_grid(6)
    r = solve_Lp(G, 1, 2.0, PhiSpec.pnorm(2, 1), restarts=2)
    out = verify_certificates(r, G)
    assert out["verdict"] == "pass"
    sup = [c for c in out["certificates"] if c["name"] == "eigen_sup_norm"]
    assert sup and "sup_norm" in sup[0] and "C_i" in sup[0]
    # no boundedness constant at p >= d
    assert sup[0]["C_i"] is None


def test_verify_lp_missing_eigenpairs():
    G = random_graph(np.random.default_rng(3), 6)
    r = solve_Lp(G, 1, 1.5, PhiSpec.pnorm(2, 1), restarts=2)
    r.eigenpairs = None
    assert verify_certificates(r, G)["verdict"] == "fail"


def test_csv_timing_column():
    t = SweepTable([], 1.0, Labeling(np.array([1]), 1), "brute_force")
    assert t.to_csv() == "key,value,gap,distance,runtime_ms\n"
