"""Acceptance criteria 1-10; each test records a pass/fail line shown in the terminal summary."""

import math
import time

import numpy as np
import pytest
import scipy.linalg

from conftest import ACCEPTANCE
from phicheeger.cheeger import cheeger_dinkelbach, cheeger_enumerate, threshold_ratio
from phicheeger.eigen import cheeger_bound_gap, el_residual, lambda_1p
from phicheeger.experiments import sweep_p, sweep_phi, trend_violations, verify_certificates
from phicheeger.graph import GridSpec, Labeling, build_grid, chamber_stats
from phicheeger.instances import dumbbell, path3, random_graph, random_suite, square_grid
from phicheeger.partition import SolveReport, brute_force, chamber_score_table, is_one_adjusted, solve_H
from phicheeger.phi import PhiSpec, certify_phi, eval_phi

pytestmark = pytest.mark.acceptance

ORACLE_TIME: list[float] = []
PHIS = {"pnorm:1": PhiSpec.pnorm(1, 2), "pnorm:2": PhiSpec.pnorm(2, 2), "pnorm:inf": PhiSpec.pnorm(math.inf, 2)}


def record(k, ok, detail):
    ACCEPTANCE[k] = (bool(ok), detail)
    assert ok, detail


def dense_lambda2(G):
    K = np.zeros((G.n, G.n))
    for u, v, w in zip(G.eu, G.ev, G.w):
        K[[u, v], [u, v]] += w
        K[u, v] -= w
        K[v, u] -= w
    K[np.diag_indices(G.n)] += G.b
    return scipy.linalg.eigh(K, np.diag(G.m), eigvals_only=True)[0]


@pytest.fixture(scope="module")
def cluster_suite():
    return random_suite(50, 4, 10, seed=2024)


@pytest.fixture(scope="module")
def oracle_values(cluster_suite):
    """brute_force(H) and brute_force(L11) for every graph and phi, sharing score tables."""
    t0 = time.perf_counter()
    out = []
    for G in cluster_suite:
        tH = chamber_score_table(G, "H")
        tL = chamber_score_table(G, "L11")
        row = {}
        for name, phi in PHIS.items():
            row[name] = (brute_force(G, 2, phi, "H", table=tH), brute_force(G, 2, phi, "L11", table=tL))
        out.append(row)
    ORACLE_TIME.append(time.perf_counter() - t0)
    return out


def test_criterion_1_single_set_oracle():
    t0 = time.perf_counter()
    rng = np.random.default_rng(1)
    worst = 0.0
    for _ in range(200):
        G = random_graph(rng, int(rng.integers(1, 15)))
        a, b = cheeger_dinkelbach(G).h, cheeger_enumerate(G).h
        worst = max(worst, abs(a - b) / b)
    dt = time.perf_counter() - t0
    record(1, worst <= 1e-9 and dt < 10, f"200 graphs, worst rel diff {worst:.2e}, {dt:.1f}s (limit 10s)")


def test_criterion_2_threshold_never_beats_h():
    t0 = time.perf_counter()
    rng = np.random.default_rng(2)
    below, exact_miss = 0, 0
    for g in range(20):
        G = random_graph(rng, int(rng.integers(2, 15)))
        res = cheeger_dinkelbach(G)
        _, r = threshold_ratio(G, res.cheeger_set.astype(float))
        exact_miss += abs(r - res.h) > 1e-12 * res.h
        for _ in range(50):
            u = rng.random(G.n) * (rng.random(G.n) < 0.7)
            if not u.any():
                u[rng.integers(G.n)] = rng.random() + 0.1
            _, r = threshold_ratio(G, u)
            below += r < res.h - 1e-9
    dt = time.perf_counter() - t0
    ok = below == 0 and exact_miss == 0 and dt < 5
    record(2, ok, f"1000 functions, {below} below h, {exact_miss} indicator misses, {dt:.1f}s (limit 5s)")


def test_criterion_3_equivalence_chain(cluster_suite, oracle_values):
    t0 = time.perf_counter()
    mismatch, not_adjusted, checked = 0, 0, 0
    for G, row in zip(cluster_suite, oracle_values):
        for name, (H, L11) in row.items():
            mismatch += abs(H.value - L11.value) > 1e-9 * max(1.0, H.value)
            if name in ("pnorm:1", "pnorm:2"):
                for M in H.minimizers:
                    checked += 1
                    not_adjusted += not is_one_adjusted(G, M, 1e-9)[0]
    dt = time.perf_counter() - t0 + sum(ORACLE_TIME)
    ok = mismatch == 0 and not_adjusted == 0 and dt < 120
    record(
        3,
        ok,
        f"150 (graph, phi) pairs, {mismatch} H != L11, {not_adjusted}/{checked} minimizers not 1-adjusted, "
        f"{dt:.1f}s (limit 120s)",
    )


def test_criterion_4_one_adjustment_solver(cluster_suite, oracle_values):
    matched, below, rising, total = 0, 0, 0, 0
    for G, row in zip(cluster_suite, oracle_values):
        for name, phi in PHIS.items():
            ref = row[name][0].value
            r = solve_H(G, 2, phi, restarts=16)
            total += 1
            tol = 1e-9 * max(1.0, ref)
            matched += abs(r.value - ref) <= tol
            below += r.value < ref - tol
            for t in r.traces:
                rising += int(np.any(np.diff(t) > 1e-12 * np.abs(np.asarray(t[:-1]))))
    frac = matched / total
    ok = frac >= 0.9 and below == 0 and rising == 0
    record(4, ok, f"matched {matched}/{total} ({frac:.0%}), {below} below oracle, {rising} rising traces")


def grid_reports():
    """Every grid solve of the certificate sweep: (name, graph, report)."""
    out = []
    D = dumbbell()
    for name, phi in PHIS.items():
        out.append((f"dumbbell32 {name}", D, solve_H(D, 2, phi)))
    coarse = dumbbell(scale=1)
    out.append(("dumbbell8 oracle", coarse, brute_force(coarse, 2, PHIS["pnorm:inf"])))
    S = square_grid(64)
    out.append(("square64 N=1", S, solve_H(S, 1, PhiSpec.pnorm(1, 1), restarts=1)))
    out.append(("square64 N=2", S, solve_H(S, 2, PHIS["pnorm:inf"], restarts=2)))
    rng = np.random.default_rng(5)
    for k in range(6):
        mask = rng.random((16, 16)) < 0.75
        G = build_grid(GridSpec(16, 16, 1 / 16, mask))
        N = 2 + k % 2
        out.append((f"random16 #{k} N={N}", G, solve_H(G, N, PhiSpec.pnorm(2, N), restarts=4, seed=k)))
    return out


def test_criterion_5_grid_certificates():
    violations, count, failed_verify = [], 0, []
    for name, G, rep in grid_reports():
        assert rep.certificates, name
        for c in rep.certificates:
            count += 1
            if c["holds"] is not True:
                violations.append(f"{name}: {c['name']}")
        if verify_certificates(rep, G)["verdict"] != "pass":
            failed_verify.append(name)
    ok = not violations and not failed_verify
    record(5, ok, f"{count} hard certificates, {len(violations)} violations, {len(failed_verify)} verify failures")


def test_criterion_6_eigen_correctness():
    t0 = time.perf_counter()
    rng = np.random.default_rng(6)
    worst_dense = 0.0
    for _ in range(30):
        G = random_graph(rng, int(rng.integers(2, 31)))
        lam = lambda_1p(G, 2.0).lam
        ref = dense_lambda2(G)
        worst_dense = max(worst_dense, abs(lam - ref) / ref)
    rng = np.random.default_rng(11)
    suite = [random_graph(rng, 8) for _ in range(20)]
    worst_res = 0.0
    for G in suite:
        for p in (1.2, 1.5, 2.0):
            e = lambda_1p(G, p, tol=1e-8)
            worst_res = max(worst_res, el_residual(G, e))
    sq = lambda_1p(square_grid(64), 2.0).lam
    rel_sq = abs(sq - 2 * math.pi**2) / (2 * math.pi**2)
    dt = time.perf_counter() - t0
    ok = worst_dense <= 1e-8 and worst_res <= 1e-5 and rel_sq <= 0.05 and dt < 60
    record(
        6,
        ok,
        f"dense rel {worst_dense:.1e}, residual {worst_res:.1e}, square64 {sq:.4f} ({rel_sq:.1%} off 2pi^2), {dt:.1f}s",
    )


def test_criterion_7_cheeger_inequality(tmp_path):
    lines = ["domain,p,lambda,h,gap,gap_over_lambda"]
    worst = math.inf
    for name, G in (("square64", square_grid(64)), ("dumbbell32", dumbbell())):
        h = cheeger_dinkelbach(G).h
        for p in (1.1, 1.5, 2.0):
            lam = lambda_1p(G, p).lam
            gap = cheeger_bound_gap(h, p, lam)
            worst = min(worst, gap / lam)
            lines.append(f"{name},{p!r},{lam!r},{h!r},{gap!r},{gap / lam!r}")
    out = tmp_path / "cheeger_gap.csv"
    out.write_text("\n".join(lines) + "\n")
    print(out.read_text())
    record(7, worst >= -0.02, f"min gap/lambda {worst:.3f} over 6 runs (floor -0.02)")


def test_criterion_8_p_to_1_limit():
    t0 = time.perf_counter()
    table = sweep_p(dumbbell(), 2, PHIS["pnorm:inf"], [2, 1.5, 1.2, 1.1, 1.05])
    print(table.to_csv())
    gaps = np.abs(table.column("gap_to_reference"))
    dist = table.column("minimizer_distance")
    trend_ok, ups = trend_violations(gaps, tolerated=1)
    final = gaps[-1] <= 0.15 * table.reference_value
    dist_ok = bool(np.all(np.diff(dist) <= 1e-12))
    dt = time.perf_counter() - t0
    ok = trend_ok and final and dist_ok and all(r.ok for r in table.rows) and dt < 300
    record(
        8,
        ok,
        f"|gap| {ups} upward step(s), final {gaps[-1]:.3f} vs 0.15H={0.15 * table.reference_value:.3f}, "
        f"distance nonincreasing={dist_ok}, {dt:.0f}s (limit 300s)",
    )


def test_criterion_9_phi_stability():
    t0 = time.perf_counter()
    instances = [path3(), dumbbell(scale=1), random_graph(np.random.default_rng(5), 10)]
    qs = [1, 2, 4, 8, 64, math.inf]
    violations, coincide = [], 0
    for G in instances:
        t = sweep_phi(G, 2, qs)
        assert t.reference_method == "brute_force"
        violations += t.violations
        coincide += t.rows[qs.index(64)].minimizer_distance == 0
    dt = time.perf_counter() - t0
    ok = not violations and coincide >= 1 and dt < 60
    record(9, ok, f"{len(violations)} sandwich violations, q=64 coincides on {coincide}/3, {dt:.1f}s (limit 60s)")


def test_criterion_10_negative_controls():
    c = certify_phi(PhiSpec.demo(), 10_000, 0)
    ex = c.counterexamples["increasing"][0] if c.counterexamples["increasing"] else None
    demo = PhiSpec.demo()
    witness = (
        ex is not None
        and np.all(np.array(ex["v"]) <= np.array(ex["w"]))
        and eval_phi(demo, ex["v"]) > eval_phi(demo, ex["w"])
    )
    G = square_grid(16)
    rep = solve_H(G, 2, PHIS["pnorm:inf"], restarts=2)
    good = verify_certificates(rep, G)["verdict"] == "pass"
    bad = SolveReport.from_dict(rep.to_dict(G))
    bad.value *= 0.5
    a = bad.labeling.assignment.copy()
    a[a == 2] = 0
    a[np.flatnonzero(a == 0)[0]] = 2
    shrunk = SolveReport("H", rep.phi, rep.value, Labeling(a, 2), chamber_stats(G, Labeling(a, 2)))
    rejected = [verify_certificates(r, G)["verdict"] == "fail" for r in (bad, shrunk)]
    ok = (not c.increasing_witnessed) and witness and good and all(rejected)
    record(
        10,
        ok,
        f"demo phi flagged={not c.increasing_witnessed} with witness={bool(witness)}, "
        f"corrupted reports rejected {sum(rejected)}/2",
    )
