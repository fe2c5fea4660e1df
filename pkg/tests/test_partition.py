import itertools
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from phicheeger.cheeger import SizeCapError, cheeger_dinkelbach
from phicheeger.graph import (
    InvalidClusterError,
    InvalidDomainError,
    Labeling,
    chamber_stats,
    cluster_to_function,
    evaluate_cluster,
    per_vol,
)
from phicheeger.instances import dumbbell, random_graph
from phicheeger.partition import (
    SeedingError,
    SolveReport,
    brute_force,
    chamber_score_table,
    extract_levelsets,
    is_one_adjusted,
    one_adjust_sweep,
    shrink_to_cheeger_subsets,
    solve_H,
    solve_Lp,
)
from phicheeger.phi import PhiSpec, eval_phi

INF2 = PhiSpec.pnorm(math.inf, 2)


def labels(*a):
    return Labeling(np.array(a), max(a))


def chamber_set(L):
    return frozenset(tuple(np.flatnonzero(c)) for c in L.chambers())


def in_minimizers(report, L):
    """Membership up to relabeling (symmetric phi scans one labeling per cluster)."""
    return any(chamber_set(M) == chamber_set(L) for M in report.minimizers)


def test_brute_force_n1_is_cheeger():
    rng = np.random.default_rng(8)
    for _ in range(5):
        G = random_graph(rng, int(rng.integers(2, 9)))
        r = brute_force(G, 1, PhiSpec.pnorm(1, 1))
        assert r.value == pytest.approx(cheeger_dinkelbach(G).h, rel=1e-12)


def test_brute_force_path(path):
    r = brute_force(path, 2, INF2, "H")
    assert r.value == 2
    assert in_minimizers(r, labels(1, 0, 2))
    # the reported one is the tie with the smallest labeling index
    assert r.labeling == labels(1, 2, 0)
    for M in r.minimizers:
        assert evaluate_cluster(path, M, INF2) == pytest.approx(2)
    r11 = brute_force(path, 2, INF2, "L11")
    assert r11.value == pytest.approx(r.value)


def test_brute_force_errors(path):
    G = random_graph(np.random.default_rng(0), 15)
    with pytest.raises(SizeCapError):
        brute_force(G, 2, INF2)
    with pytest.raises(ValueError):
        brute_force(path, 2, PhiSpec.pnorm(1, 3))
    with pytest.raises(ValueError):
        brute_force(path, 2, INF2, "Lp")
    with pytest.raises(InvalidClusterError):
        brute_force(random_graph(np.random.default_rng(1), 2), 3, PhiSpec.pnorm(1, 3))


def test_asymmetric_phi_not_quotiented():
    rng = np.random.default_rng(21)
    phi = PhiSpec.wsum([1.0, 5.0])
    for _ in range(5):
        G = random_graph(rng, 5)
        r = brute_force(G, 2, phi)
        table = chamber_score_table(G, "H")
        best = math.inf
        for a in itertools.product(range(3), repeat=G.n):
            a = np.array(a)
            if not ((a == 1).any() and (a == 2).any()):
                continue
            masks = [int(sum(1 << k for k in np.flatnonzero(a == i))) for i in (1, 2)]
            best = min(best, eval_phi(phi, table[masks]))
        assert r.value == pytest.approx(best, rel=1e-12)


def test_one_adjust_examples(path):
    L = labels(1, 2, 0)
    L2, changed = one_adjust_sweep(path, L, INF2, 2)
    assert changed
    assert L2 == labels(1, 2, 2)
    per, vol = per_vol(path, L2.chamber(2))
    assert per / vol == 1
    flag, dev = is_one_adjusted(path, L)
    assert not flag and dev == pytest.approx(1.0)
    with pytest.raises(ValueError):
        one_adjust_sweep(path, L, PhiSpec.demo(), 1)


def test_one_adjust_fixed_point():
    rng = np.random.default_rng(2)
    G = random_graph(rng, 9)
    r = solve_H(G, 2, INF2, restarts=4)
    assert r.one_adjusted
    for i in (1, 2):
        assert one_adjust_sweep(G, r.labeling, INF2, i) == (r.labeling, False)


def test_full_domain_cheeger_set_is_one_adjusted(path):
    L = Labeling(cheeger_dinkelbach(path).cheeger_set.astype(np.int64), 1)
    assert is_one_adjusted(path, L)[0]


def test_solve_H_examples(path):
    r = solve_H(path, 1, PhiSpec.pnorm(1, 1))
    assert r.value == pytest.approx(2 / 3)
    r = solve_H(path, 2, INF2)
    assert r.value == pytest.approx(2)
    assert r.one_adjusted
    assert in_minimizers(brute_force(path, 2, INF2), r.labeling)


def test_solve_H_errors(path):
    with pytest.raises(SeedingError):
        solve_H(path, 4, PhiSpec.pnorm(1, 4))
    with pytest.raises(ValueError):
        solve_H(path, 2, PhiSpec.demo())
    with pytest.raises(ValueError):
        solve_H(path, 2, INF2, seeding="nearest")


def test_solve_H_n1_is_h_for_every_seeding():
    rng = np.random.default_rng(9)
    G = random_graph(rng, 12)
    h = cheeger_dinkelbach(G).h
    for seeding in ("farthest", "random", "mixed"):
        assert solve_H(G, 1, PhiSpec.pnorm(2, 1), restarts=2, seeding=seeding).value == pytest.approx(h)


def test_solve_H_dumbbell():
    G = dumbbell()
    r = solve_H(G, 2, INF2)
    coarse = brute_force(dumbbell(scale=1), 2, INF2)
    assert r.value == pytest.approx(coarse.value, rel=1e-9)
    cols = G.cells[:, 1]
    left, right = cols < 12, cols >= 16
    sides = []
    for ch in r.labeling.chambers():
        in_left, in_right = (ch & left).sum(), (ch & right).sum()
        assert min(in_left, in_right) == 0
        sides.append(in_left > 0)
        lobe = left if in_left else right
        assert (ch & lobe).sum() >= 0.9 * lobe.sum()
    assert sorted(sides) == [False, True]
    assert all(c["holds"] for c in r.certificates)


def test_solve_H_deterministic_and_parallel(monkeypatch):
    G = random_graph(np.random.default_rng(4), 10)
    a = solve_H(G, 2, INF2, restarts=4, seed=3)
    monkeypatch.setenv("CHEEGER_THREADS", "2")
    b = solve_H(G, 2, INF2, restarts=4, seed=3)
    assert a.labeling == b.labeling and a.value == b.value and a.traces == b.traces


def test_solve_H_traces_nonincreasing():
    rng = np.random.default_rng(100)
    phi = PhiSpec.pnorm(1, 2)
    for _ in range(100):
        G = random_graph(rng, int(rng.integers(3, 10)))
        r = solve_H(G, 2, phi, restarts=2)
        for t in r.traces:
            assert np.all(np.diff(t) <= 1e-12 * np.abs(t[:-1]))


def test_solve_Lp_n1(path):
    from phicheeger.eigen import lambda_1p

    r = solve_Lp(path, 1, 1.5, PhiSpec.pnorm(2, 1))
    assert r.value == pytest.approx(lambda_1p(path, 1.5).lam, rel=1e-9)
    assert r.labeling.chamber(1).all()


def test_solve_Lp_path(path):
    r = solve_Lp(path, 2, 2.0, INF2)
    assert r.value == pytest.approx(2.0, rel=1e-8)
    oracle = brute_force(path, 2, INF2, "Lp", p=2.0)
    assert oracle.value == pytest.approx(2.0, rel=1e-8)
    assert in_minimizers(oracle, r.labeling)
    assert in_minimizers(oracle, labels(1, 0, 2))


def test_solve_Lp_matches_oracle():
    rng = np.random.default_rng(7)
    for _ in range(3):
        G = random_graph(rng, 7)
        oracle = brute_force(G, 2, INF2, "Lp", p=1.5)
        r = solve_Lp(G, 2, 1.5, INF2)
        assert r.value >= oracle.value * (1 - 1e-6)
        assert r.value <= oracle.value + 1e-4


def test_solve_Lp_errors(path):
    with pytest.raises(ValueError):
        solve_Lp(path, 2, 1.0, INF2)
    with pytest.raises(ValueError):
        solve_Lp(path, 2, 2.0, PhiSpec.demo())
    with pytest.raises(SeedingError):
        solve_Lp(path, 4, 2.0, PhiSpec.pnorm(1, 4))


def test_report_round_trip(path):
    r = solve_Lp(path, 2, 1.5, INF2)
    back = SolveReport.from_dict(r.to_dict(path))
    assert back.labeling == r.labeling
    assert back.value == r.value
    assert back.phi == r.phi
    assert [e.lam for e in back.eigenpairs] == [e.lam for e in r.eigenpairs]


def test_extract_levelsets_examples():
    rng = np.random.default_rng(6)
    G = random_graph(rng, 9)
    L = labels(1, 1, 0, 2, 2, 3, 0, 3, 1)
    funcs = cluster_to_function(G, L)
    vols = [s.vol for s in chamber_stats(G, L)]
    ts = [0.5 / v for v in vols]
    assert extract_levelsets(funcs, ts) == L
    # indicator family: every threshold in (0, max) gives the same chambers
    for frac in (0.01, 0.5, 0.99):
        assert extract_levelsets(funcs, [frac / v for v in vols]) == L
    with pytest.raises(InvalidClusterError):
        extract_levelsets(funcs, [1.0 / vols[0], 0, 0])
    with pytest.raises(ValueError):
        extract_levelsets([np.ones(3), np.ones(3)], [0, 0])


def test_shrink_examples():
    rng = np.random.default_rng(12)
    for _ in range(100):
        G = random_graph(rng, int(rng.integers(3, 10)))
        a = rng.integers(0, 3, G.n)
        a[:2] = [1, 2]
        L = Labeling(a, 2)
        S = shrink_to_cheeger_subsets(G, L)
        for old, new in zip(L.chambers(), S.chambers()):
            assert np.all(new <= old)
            h_old = cheeger_dinkelbach(G.restrict(old)).h
            h_new = cheeger_dinkelbach(G.restrict(new)).h
            per, vol = per_vol(G, new)
            assert h_new == pytest.approx(h_old, rel=1e-9)
            assert per / vol == pytest.approx(h_new, rel=1e-9)
        assert shrink_to_cheeger_subsets(G, S) == S


def test_equivalence_chain_small():
    rng = np.random.default_rng(33)
    for _ in range(4):
        G = random_graph(rng, int(rng.integers(4, 8)))
        for q in (1, 2, math.inf):
            phi = PhiSpec.pnorm(q, 2)
            H = brute_force(G, 2, phi, "H")
            L11 = brute_force(G, 2, phi, "L11")
            assert H.value == pytest.approx(L11.value, rel=1e-9)
            S = shrink_to_cheeger_subsets(G, L11.labeling)
            assert evaluate_cluster(G, S, phi) == pytest.approx(H.value, rel=1e-9)


@given(st.integers(0, 2**32 - 1), st.sampled_from([1.0, 2.0, 5.0, math.inf]))
def test_phi_h_below_phi_ratio(seed, q):
    rng = np.random.default_rng(seed)
    G = random_graph(rng, int(rng.integers(3, 10)))
    N = int(rng.integers(1, 4))
    if N > G.n:
        return
    a = rng.integers(0, N + 1, G.n)
    a[rng.choice(G.n, N, replace=False)] = np.arange(1, N + 1)
    L = Labeling(a, N)
    phi = PhiSpec.pnorm(q, N)
    hs = [cheeger_dinkelbach(G.restrict(c)).h for c in L.chambers()]
    assert eval_phi(phi, hs) <= evaluate_cluster(G, L, phi) * (1 + 1e-12)


def test_invalid_labeling_rejected(path):
    with pytest.raises(InvalidClusterError):
        is_one_adjusted(path, Labeling(np.array([2, 2, 0]), 2))
    with pytest.raises(InvalidDomainError):
        path.restrict(np.zeros(3, bool))
    with pytest.raises(IndexError):
        one_adjust_sweep(path, Labeling(np.array([1, 2, 0]), 2), INF2, 3)
