"""Experiment drivers: p -> 1 sweep, q-norm stability sweep, certificate checks, CSV output."""

from __future__ import annotations

import csv
import io
import itertools
import math
import time
from dataclasses import dataclass, field

import numpy as np

from .cheeger import cheeger_dinkelbach
from .eigen import EigenPair, boundedness_constant, cheeger_bound_gap, p_energy, p_norm
from .graph import DirichletGraph, Labeling, chamber_stats
from .partition import BRUTE_FORCE_CAP, SolveReport, bound_certificates, brute_force, solve_H, solve_Lp
from .phi import PhiSpec, eval_phi

CSV_HEADER = ("key", "value", "gap", "distance", "runtime_ms")


@dataclass
class SweepRow:
    key: float
    value: float
    gap_to_reference: float
    minimizer_distance: float
    runtime_ms: int
    labeling: Labeling | None = None
    error: str | None = None

    @property
    def ok(self) -> bool:
        return self.error is None


@dataclass
class SweepTable:
    rows: list[SweepRow]
    reference_value: float
    reference: Labeling
    reference_method: str
    violations: list[str] = field(default_factory=list)

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.rows], dtype=float)

    def to_csv(self, timing: bool = True) -> str:
        """CSV text; ``timing=False`` writes ``runtime_ms`` as 0 for byte-stable output."""
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for r in self.rows:
            ms = r.runtime_ms if timing else 0
            w.writerow([_num(r.key), _num(r.value), _num(r.gap_to_reference), _num(r.minimizer_distance), ms])
        return buf.getvalue()


def _num(x: float) -> str:
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    if math.isnan(x):
        return "nan"
    return repr(float(x))


def matched_distance(G: DirichletGraph, A: Labeling, B: Labeling) -> float:
    """Smallest total symmetric-difference volume over chamber relabelings of ``B``."""
    if A.N != B.N:
        raise ValueError("labelings have different N")
    if A.N > 6:
        raise ValueError("exhaustive matching is limited to N <= 6")
    ca, cb = A.chambers(), B.chambers()
    best = math.inf
    for perm in itertools.permutations(range(A.N)):
        d = sum(float(G.m[ca[i] ^ cb[j]].sum()) for i, j in enumerate(perm))
        best = min(best, d)
    return best


def trend_violations(values, tolerated: int = 1, slack: float = 0.0) -> tuple[bool, int]:
    """Whether ``values`` is nonincreasing up to ``tolerated`` upward steps.

    Returns ``(ok, number_of_upward_steps)``; a step counts when it rises by
    more than ``slack``.
    """
    v = np.asarray(values, dtype=float)
    ups = int(np.sum(np.diff(v) > slack))
    return ups <= tolerated, ups


def _reference_H(G: DirichletGraph, N: int, phi: PhiSpec, opts: dict) -> tuple[SolveReport, str]:
    if (N + 1) ** G.n <= opts.get("cap", BRUTE_FORCE_CAP):
        return brute_force(G, N, phi, "H", cap=opts.get("cap", BRUTE_FORCE_CAP)), "brute_force"
    rep = solve_H(
        G,
        N,
        phi,
        restarts=opts.get("h_restarts", 16),
        seed=opts.get("seed", 0),
        tol=opts.get("h_tol", 1e-9),
    )
    return rep, "solve_H"


def sweep_p(G: DirichletGraph, N: int, phi: PhiSpec, p_list, solver_opts: dict | None = None) -> SweepTable:
    """Spectral value along a decreasing p-list against the Cheeger reference H.

    Each row runs :func:`solve_Lp` warm-started from the previous row's
    labeling and eigenfunctions. ``gap = value - H``; ``distance`` is the
    symmetric-difference volume between the eigenfunction supports and the
    reference H minimizer after the best chamber matching.
    """
    opts = dict(solver_opts or {})
    p_list = [float(p) for p in p_list]
    if not p_list or any(p <= 1 for p in p_list):
        raise ValueError("every p must exceed 1")
    if any(b >= a for a, b in zip(p_list, p_list[1:])):
        raise ValueError("p_list must be strictly decreasing")
    if not phi.continuous:
        raise ValueError("sweep_p needs a continuous phi")
    ref, how = _reference_H(G, N, phi, opts)
    rows = []
    warm_L, warm_F = None, None
    for p in p_list:
        t0 = time.perf_counter()
        try:
            rep = solve_Lp(
                G,
                N,
                p,
                phi,
                restarts=opts.get("restarts", 8),
                max_iters=opts.get("max_iters", 50),
                tol=opts.get("tol", 1e-8),
                seed=opts.get("seed", 0),
                warm_start=warm_L,
                warm_funcs=warm_F,
            )
        except (ValueError, RuntimeError, FloatingPointError) as exc:
            ms = int(round(1000 * (time.perf_counter() - t0)))
            rows.append(SweepRow(p, math.nan, math.nan, math.nan, ms, error=str(exc)))
            continue
        ms = int(round(1000 * (time.perf_counter() - t0)))
        warm_L, warm_F = rep.labeling, rep.functions
        support = np.zeros(G.n, dtype=np.int64)
        for i, u in enumerate(rep.functions, start=1):
            support[u > 0] = i
        S = Labeling(support, N)
        rows.append(
            SweepRow(p, rep.value, rep.value - ref.value, matched_distance(G, S, ref.labeling), ms, labeling=S)
        )
    return SweepTable(rows, ref.value, ref.labeling, how)


def sweep_phi(G: DirichletGraph, N: int, q_list, solver_opts: dict | None = None) -> SweepTable:
    """Cheeger values for the q-norm family against the max-norm reference.

    Rows use :func:`brute_force` under the enumeration cap, :func:`solve_H`
    otherwise. The sandwich ``H_inf <= H_q <= N^(1/q) H_inf`` is checked with
    no tolerance and every breach is listed in ``violations``. The distance is
    measured to the nearest of the reference's tied minimizers.
    """
    opts = dict(solver_opts or {})
    q_list = [float(q) for q in q_list]
    if not q_list or not math.isinf(q_list[-1]):
        raise ValueError("q_list must end at inf")
    if any(q < 1 for q in q_list):
        raise ValueError("every q must be at least 1")
    if any(b <= a for a, b in zip(q_list, q_list[1:])):
        raise ValueError("q_list must be strictly increasing")
    ref, how = _reference_H(G, N, PhiSpec.pnorm(math.inf, N), opts)
    H_inf = ref.value
    ref_set = ref.minimizers or [ref.labeling]
    rows = []
    violations = []
    for q in q_list:
        t0 = time.perf_counter()
        if math.isinf(q):
            rep = ref
        else:
            rep, _ = _reference_H(G, N, PhiSpec.pnorm(q, N), opts)
        ms = int(round(1000 * (time.perf_counter() - t0)))
        dist = min(matched_distance(G, rep.labeling, R) for R in ref_set)
        rows.append(SweepRow(q, rep.value, rep.value - H_inf, dist, ms, labeling=rep.labeling))
        upper = N ** (1.0 / q) * H_inf
        if not rep.value >= H_inf:
            violations.append(f"q={_num(q)}: H_q={rep.value!r} < H_inf={H_inf!r}")
        if not rep.value <= upper:
            violations.append(f"q={_num(q)}: H_q={rep.value!r} > N^(1/q) H_inf={upper!r}")
    return SweepTable(rows, H_inf, ref.labeling, how, violations)


# ---------------------------------------------------------------- certificates


def _recompute_lambda(G: DirichletGraph, chamber: np.ndarray, pair: EigenPair) -> float:
    sub = G.restrict(chamber)
    u = np.asarray(pair.u, dtype=float)
    if u.shape != (sub.n,):
        raise ValueError("eigenfunction does not match its chamber")
    nrm = p_norm(sub, u, pair.p)
    return p_energy(sub, u / nrm, pair.p)


def verify_certificates(report: SolveReport, G: DirichletGraph, rtol: float = 1e-9) -> dict:
    """Recompute every certificate of ``report`` from the labeling and raw data.

    Hard entries (value consistency; on grids the lower bound on the value,
    the chamber-volume bound and the indicator sup-norm bound) decide the
    verdict. Spectral entries (Cheeger-type gap, eigenfunction sup-norm
    against the boundedness constant) are recorded with ``holds = None``.
    """
    L = report.labeling
    certs: list[dict] = []
    if L.assignment.size != G.n:
        bad = {"name": "labeling_size", "kind": "hard", "lhs": int(L.assignment.size), "rhs": G.n, "holds": False}
        return {"verdict": "fail", "hard_failures": 1, "certificates": [bad]}
    stats = chamber_stats(G, L)
    empty = [i for i, s in enumerate(stats, start=1) if s.vol == 0]
    certs.append({"name": "nonempty_chambers", "kind": "hard", "empty": empty, "holds": not empty})
    if not empty:
        kind = report.objective_kind
        if kind == "H":
            scores = [s.ratio for s in stats]
        elif kind == "L11":
            scores = [cheeger_dinkelbach(G.restrict(c)).h for c in L.chambers()]
        else:
            pairs = report.eigenpairs or []
            if len(pairs) != L.N:
                scores = None
            else:
                scores = [_recompute_lambda(G, c, e) for c, e in zip(L.chambers(), pairs)]
        if scores is None:
            certs.append({"name": "value_consistency", "kind": "hard", "holds": False, "reason": "missing eigenpairs"})
        else:
            val = eval_phi(report.phi, scores)
            ok = abs(val - report.value) <= rtol * max(1.0, abs(val))
            certs.append({"name": "value_consistency", "kind": "hard", "lhs": report.value, "rhs": val, "holds": bool(ok)})
        if kind in ("H", "L11"):
            certs.extend(bound_certificates(G, report.value, L.N, report.phi, [s.vol for s in stats]))
        elif report.eigenpairs:
            p = report.p
            for i, (c, e) in enumerate(zip(L.chambers(), report.eigenpairs), start=1):
                h = cheeger_dinkelbach(G.restrict(c)).h
                lam = scores[i - 1] if scores is not None else e.lam
                u = np.asarray(e.u, dtype=float)
                certs.append(
                    {
                        "name": "cheeger_p_gap",
                        "chamber": i,
                        "kind": "report",
                        "lambda": lam,
                        "h": h,
                        "gap": cheeger_bound_gap(h, p, lam),
                        "holds": None,
                    }
                )
                certs.append(
                    {
                        "name": "eigen_sup_norm",
                        "chamber": i,
                        "kind": "report",
                        "sup_norm": float(u.max() / p_norm(G.restrict(c), u, p)),
                        "C_i": boundedness_constant(lam, p, d=2),
                        "holds": None,
                    }
                )
    failures = sum(1 for c in certs if c["kind"] == "hard" and c["holds"] is False)
    return {"verdict": "pass" if failures == 0 else "fail", "hard_failures": failures, "certificates": certs}

