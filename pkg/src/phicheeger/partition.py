"""N-chamber partition solvers.

* ``brute_force`` enumerates every labeling (the oracle);
* ``solve_H`` alternates exact Cheeger replacements of each chamber inside the
  domain left by the others until the cluster is 1-adjusted;
* ``solve_Lp`` alternates per-chamber p-eigenfunctions with argmax reassignment.
"""

from __future__ import annotations

import math
import os
from collections import deque
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .cheeger import SizeCapError, cheeger_dinkelbach, subset_tables
from .eigen import EigenPair, boundedness_constant, cheeger_bound_gap, lambda_1p
from .graph import (
    ChamberStats,
    DirichletGraph,
    InvalidClusterError,
    InvalidDomainError,
    Labeling,
    chamber_stats,
    per_vol,
    require_cluster,
)
from .phi import PhiSpec, delta_of, eval_phi, eval_phi_batch

BRUTE_FORCE_CAP = 10**7
OBJECTIVES = ("H", "L11", "Lp")


class SeedingError(ValueError):
    pass


@dataclass
class SolveReport:
    objective_kind: str
    phi: PhiSpec
    value: float
    labeling: Labeling
    chamber_stats: list[ChamberStats]
    one_adjusted: bool | None = None
    max_deviation: float | None = None
    certificates: list[dict] = field(default_factory=list)
    sweeps: int = 0
    restarts_used: int = 0
    rng_seed: int | None = None
    p: float | None = None
    converged: bool = True
    eigenpairs: list[EigenPair] | None = None
    traces: list[list[float]] = field(default_factory=list)
    minimizers: list[Labeling] = field(default_factory=list)
    functions: list[np.ndarray] | None = None

    def to_dict(self, G: DirichletGraph | None = None) -> dict:
        labels = self.labeling.assignment.tolist()
        out = {
            "objective": self.objective_kind,
            "phi": self.phi.to_string(),
            "N": self.labeling.N,
            "p": self.p,
            "value": self.value,
            "labels": labels,
            "chamber_stats": [s.to_dict() for s in self.chamber_stats],
            "one_adjusted": self.one_adjusted,
            "max_deviation": self.max_deviation,
            "certificates": self.certificates,
            "sweeps": self.sweeps,
            "restarts_used": self.restarts_used,
            "rng_seed": self.rng_seed,
            "converged": self.converged,
        }
        if G is not None:
            out["vertex_ids"] = list(G.ids)
            out["chambers"] = [
                [G.ids[k] for k in np.flatnonzero(ch)] for ch in self.labeling.chambers()
            ]
        if self.minimizers:
            out["minimizers"] = [L.assignment.tolist() for L in self.minimizers]
        if self.eigenpairs is not None:
            out["eigenpairs"] = [e.to_dict(include_u=True) for e in self.eigenpairs]
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "SolveReport":
        """Rebuild a report from :meth:`to_dict` output (telemetry not restored)."""
        from .phi import parse_phi

        N = int(data["N"])
        eig = None
        if data.get("eigenpairs") is not None:
            eig = [
                EigenPair(
                    p=float(e["p"]),
                    u=np.asarray(e.get("u", []), dtype=float),
                    lam=float(e["lambda"]),
                    residual_inf=float(e["residual"]),
                    iterations=int(e["iterations"]),
                    converged=bool(e["converged"]),
                )
                for e in data["eigenpairs"]
            ]
        stats = [ChamberStats(**c) for c in data.get("chamber_stats", [])]
        return cls(
            objective_kind=data["objective"],
            phi=parse_phi(data["phi"], N),
            value=float(data["value"]),
            labeling=Labeling(np.asarray(data["labels"], dtype=np.int64), N),
            chamber_stats=stats,
            one_adjusted=data.get("one_adjusted"),
            max_deviation=data.get("max_deviation"),
            certificates=list(data.get("certificates", [])),
            sweeps=int(data.get("sweeps", 0)),
            restarts_used=int(data.get("restarts_used", 0)),
            rng_seed=data.get("rng_seed"),
            p=data.get("p"),
            converged=bool(data.get("converged", True)),
            eigenpairs=eig,
        )


# ---------------------------------------------------------------- helpers


def _workers() -> int:
    raw = os.environ.get("CHEEGER_THREADS", "1").strip() or "1"
    try:
        k = int(raw)
    except ValueError:
        return 1
    if k == 0:
        return os.cpu_count() or 1
    return max(k, 1)


def _pmap(fn, items):
    items = list(items)
    k = min(_workers(), len(items))
    if k <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=k) as ex:
        return list(ex.map(fn, items))


def _complement(G: DirichletGraph, L: Labeling, i: int) -> tuple[DirichletGraph, np.ndarray]:
    a = L.assignment
    keep = (a == 0) | (a == i)
    if not keep.any():
        raise InvalidDomainError(f"complement of chamber {i} is empty")
    return G.restrict(keep), np.flatnonzero(keep)


def _lift(n: int, idx: np.ndarray, sub_mask: np.ndarray) -> np.ndarray:
    out = np.zeros(n, dtype=bool)
    out[idx[sub_mask]] = True
    return out


def _hop_distances(adj: list[list[int]], src: int) -> np.ndarray:
    dist = np.full(len(adj), np.inf)
    dist[src] = 0
    q = deque([src])
    while q:
        x = q.popleft()
        for y in adj[x]:
            if dist[y] == np.inf:
                dist[y] = dist[x] + 1
                q.append(y)
    return dist


def pick_seeds(G: DirichletGraph, N: int, strategy: str, rng: np.random.Generator) -> list[int]:
    """``farthest``: random first vertex, then farthest-first in hop distance."""
    if N > G.n:
        raise SeedingError(f"cannot place {N} disjoint seeds on {G.n} vertices")
    if strategy == "random":
        return [int(x) for x in rng.choice(G.n, size=N, replace=False)]
    if strategy != "farthest":
        raise ValueError(f"unknown seeding strategy {strategy!r}")
    adj = G.neighbors()
    seeds = [int(rng.integers(G.n))]
    dmin = _hop_distances(adj, seeds[0])
    for _ in range(1, N):
        d = np.where(np.isin(np.arange(G.n), seeds), -1.0, dmin)
        nxt = int(np.argmax(d))  # inf (other component) first, ties -> lowest index
        seeds.append(nxt)
        dmin = np.minimum(dmin, _hop_distances(adj, nxt))
    return seeds


def ball_labeling(G: DirichletGraph, seeds: list[int], radius: int | None = None) -> Labeling:
    """Grow hop-distance balls around the seeds simultaneously.

    ``radius=None`` grows until the reachable domain is exhausted (graph
    Voronoi cells); ``radius=0`` gives singletons. Contested vertices go to
    the lower chamber index.
    """
    adj = G.neighbors()
    a = np.zeros(G.n, dtype=np.int64)
    dist = np.full(G.n, -1)
    q = deque()
    for i, s in enumerate(seeds, start=1):
        a[s] = i
        dist[s] = 0
        q.append(s)
    while q:
        x = q.popleft()
        if radius is not None and dist[x] >= radius:
            continue
        for y in adj[x]:
            if dist[y] < 0:
                dist[y] = dist[x] + 1
                a[y] = a[x]
                q.append(y)
    return Labeling(a, len(seeds))


def cluster_value(G: DirichletGraph, L: Labeling, phi: PhiSpec) -> float:
    stats = chamber_stats(G, L)
    if any(s.vol == 0 for s in stats):
        raise InvalidClusterError("empty chamber")
    return eval_phi(phi, [s.ratio for s in stats])


# ---------------------------------------------------------------- certificates


def bound_certificates(G: DirichletGraph, value: float, N: int, phi: PhiSpec, vols) -> list[dict]:
    """Perimeter-derived bounds for grid domains (d = 2, |B_1| = pi).

    Both follow from coercivity plus the planar isoperimetric inequality,
    which the pixel perimeter satisfies because it dominates the Euclidean one.
    """
    delta = delta_of(phi)
    if G.mesh is None or delta is None:
        return []
    slack = 1e-12
    vol_all = float(G.m.sum())
    lower = N * delta * 2.0 * math.sqrt(math.pi / vol_all)
    certs = [
        {
            "name": "lower_bound_H",
            "kind": "hard",
            "lhs": value,
            "rhs": lower,
            "holds": bool(value >= lower * (1 - slack)),
        }
    ]
    min_vol = math.pi * (2.0 * delta / value) ** 2 if value > 0 else math.inf
    for i, v in enumerate(vols, start=1):
        certs.append(
            {
                "name": "chamber_volume",
                "chamber": i,
                "kind": "hard",
                "lhs": float(v),
                "rhs": min_vol,
                "holds": bool(v >= min_vol * (1 - slack)),
            }
        )
    sup_bound = (value / (2.0 * delta)) ** 2 / math.pi
    for i, v in enumerate(vols, start=1):
        certs.append(
            {
                "name": "function_sup_norm",
                "chamber": i,
                "kind": "hard",
                "lhs": 1.0 / float(v),
                "rhs": sup_bound,
                "holds": bool(1.0 / float(v) <= sup_bound * (1 + slack)),
            }
        )
    return certs


def eigen_certificates(p: float, pairs: list[EigenPair], hs: list[float]) -> list[dict]:
    """Report-only entries: Cheeger-type gap and sup-norm against the boundedness constant."""
    certs = []
    for i, (pair, h) in enumerate(zip(pairs, hs), start=1):
        certs.append(
            {
                "name": "cheeger_p_gap",
                "chamber": i,
                "kind": "report",
                "lambda": pair.lam,
                "h": h,
                "gap": cheeger_bound_gap(h, p, pair.lam),
                "holds": None,
            }
        )
        certs.append(
            {
                "name": "eigen_sup_norm",
                "chamber": i,
                "kind": "report",
                "sup_norm": pair.sup_norm,
                "C_i": boundedness_constant(pair.lam, p, d=2),
                "holds": None,
            }
        )
    return certs


# ---------------------------------------------------------------- oracle


def _labelings(n: int, N: int, chunk: int):
    base = N + 1
    total = base**n
    pw = base ** np.arange(n, dtype=np.int64)
    for start in range(0, total, chunk):
        idx = np.arange(start, min(start + chunk, total), dtype=np.int64)
        digits = (idx[:, None] // pw) % base
        yield idx, digits


def _decode(index: int, n: int, N: int) -> np.ndarray:
    out = np.zeros(n, dtype=np.int64)
    for k in range(n):
        index, out[k] = divmod(index, N + 1)
    return out


def chamber_score_table(G: DirichletGraph, kind: str, p: float | None = None, eigen_tol: float = 1e-10) -> np.ndarray:
    """Score of every vertex subset (bitmask index); ``inf`` for the empty set.

    ``H`` uses per/vol, ``L11`` the exact Cheeger constant of the subset as a
    standalone Dirichlet domain, ``Lp`` its first p-eigenvalue.
    """
    n = G.n
    masks = np.arange(1 << n, dtype=np.int64)
    if kind == "H":
        per, vol = subset_tables(G, masks)
        with np.errstate(invalid="ignore", divide="ignore"):
            table = per / vol
        table[0] = np.inf
        return table
    table = np.full(1 << n, np.inf)
    bits = ((masks[:, None] >> np.arange(n)) & 1).astype(bool)
    for k in range(1, 1 << n):
        sub = G.restrict(bits[k])
        if kind == "L11":
            table[k] = cheeger_dinkelbach(sub).h
        elif kind == "Lp":
            table[k] = lambda_1p(sub, p, tol=eigen_tol).lam
        else:
            raise ValueError(f"unknown objective {kind!r}")
    return table


def brute_force(
    G: DirichletGraph,
    N: int,
    phi: PhiSpec,
    objective_kind: str = "H",
    p: float | None = None,
    cap: int = BRUTE_FORCE_CAP,
    chunk: int = 1 << 18,
    table: np.ndarray | None = None,
    tie_rtol: float = 1e-12,
    max_minimizers: int = 256,
) -> SolveReport:
    """Global minimum of ``phi(scores)`` over all labelings with nonempty chambers.

    For symmetric ``phi`` only canonical labelings (chambers ordered by their
    smallest vertex index) are scanned. Ties within ``tie_rtol`` are resolved
    toward the smallest labeling index ``sum_v label_v (N+1)^v``; all tied
    labelings are returned in ``minimizers``.
    """
    if objective_kind not in OBJECTIVES:
        raise ValueError(f"unknown objective {objective_kind!r}")
    if phi.N != N:
        raise ValueError("phi dimension does not match N")
    n = G.n
    if (N + 1) ** n > cap:
        raise SizeCapError(f"(N+1)^|V| = {N + 1}^{n} exceeds the enumeration cap {cap}")
    if objective_kind == "Lp" and p is None:
        raise ValueError("objective Lp needs p")
    if table is None:
        table = chamber_score_table(G, objective_kind, p)
    best = math.inf
    ties: list[int] = []
    bitw = np.int64(1) << np.arange(n, dtype=np.int64)
    for idx, digits in _labelings(n, N, chunk):
        masks = np.stack([((digits == i) * bitw).sum(axis=1) for i in range(1, N + 1)], axis=1)
        ok = np.all(masks > 0, axis=1)
        if phi.symmetric and N > 1:
            low = masks & -masks
            ok &= np.all(low[:, 1:] > low[:, :-1], axis=1)
        if not ok.any():
            continue
        idx, masks = idx[ok], masks[ok]
        vals = eval_phi_batch(phi, table[masks])
        lo = float(vals.min())
        if lo <= best * (1 + tie_rtol):
            best = min(best, lo)
            near = np.flatnonzero(vals <= best * (1 + tie_rtol))
            ties.extend((int(idx[k]), float(vals[k])) for k in near[:max_minimizers])
            ties = [t for t in ties if t[1] <= best * (1 + tie_rtol)][:max_minimizers]
    if not ties:
        raise InvalidClusterError("no labeling with N nonempty chambers")
    ties.sort()
    minimizers = [Labeling(_decode(k, n, N), N) for k, _ in ties]
    L = minimizers[0]
    value = float(eval_phi_batch(phi, np.array([table[_mask_int(c)] for c in L.chambers()])))
    stats = chamber_stats(G, L)
    if objective_kind == "H":
        stats = [
            ChamberStats(s.per, s.vol, s.ratio, h_exact=cheeger_dinkelbach(G.restrict(c)).h)
            for s, c in zip(stats, L.chambers())
        ]
    elif objective_kind == "L11":
        stats = [
            ChamberStats(s.per, s.vol, s.ratio, h_exact=float(table[_mask_int(c)]))
            for s, c in zip(stats, L.chambers())
        ]
    else:
        stats = [
            ChamberStats(s.per, s.vol, s.ratio, lambda_p=float(table[_mask_int(c)]))
            for s, c in zip(stats, L.chambers())
        ]
    report = SolveReport(
        objective_kind=objective_kind,
        phi=phi,
        value=value,
        labeling=L,
        chamber_stats=stats,
        p=p,
        minimizers=minimizers,
    )
    if objective_kind == "H":
        report.one_adjusted, report.max_deviation = is_one_adjusted(G, L)
        report.certificates = bound_certificates(G, value, N, phi, [s.vol for s in stats])
    return report


def _mask_int(mask: np.ndarray) -> int:
    return int(sum(1 << int(k) for k in np.flatnonzero(mask)))


# ---------------------------------------------------------------- 1-adjustment


def adjustment_deviations(G: DirichletGraph, L: Labeling) -> list[float]:
    require_cluster(L)
    devs = []
    for i in range(1, L.N + 1):
        per, vol = per_vol(G, L.chamber(i))
        D, _ = _complement(G, L, i)
        devs.append(abs(per / vol - cheeger_dinkelbach(D).h))
    return devs


def is_one_adjusted(G: DirichletGraph, L: Labeling, tol: float = 1e-9) -> tuple[bool, float]:
    """Whether each chamber's ratio equals the Cheeger constant of its complement domain."""
    dev = max(adjustment_deviations(G, L))
    return dev <= tol, dev


def one_adjust_sweep(G: DirichletGraph, L: Labeling, phi: PhiSpec, i: int, tol: float = 1e-9) -> tuple[Labeling, bool]:
    """Replace chamber ``i`` by the largest Cheeger set of the domain the others leave.

    A chamber whose ratio already equals that Cheeger constant (within
    ``tol``) is left as is.
    """
    if not phi.increasing:
        raise ValueError("1-adjustment only decreases the objective for increasing phi")
    D, idx = _complement(G, L, i)
    res = cheeger_dinkelbach(D)
    cur = L.chamber(i)
    if cur.any():
        per, vol = per_vol(G, cur)
        if abs(per / vol - res.h) <= tol:
            return L, False
    new = _lift(G.n, idx, res.cheeger_set)
    if np.array_equal(new, cur):
        return L, False
    return L.replace(i, new), True


def _one_restart(args):
    G, N, phi, strategy, radius, max_sweeps, tol, seed, r, randomize = args
    rng = np.random.default_rng([seed, r])
    seeds = pick_seeds(G, N, strategy, rng)
    L = ball_labeling(G, seeds, radius)
    trace = [cluster_value(G, L, phi)]
    sweeps = 0
    for sweeps in range(1, max_sweeps + 1):
        order = list(range(1, N + 1))
        if randomize:
            rng.shuffle(order)
        changed = False
        for i in order:
            L, ch = one_adjust_sweep(G, L, phi, i, tol)
            changed |= ch
        trace.append(cluster_value(G, L, phi))
        if not changed:
            break
    return L, trace, sweeps


def solve_H(
    G: DirichletGraph,
    N: int,
    phi: PhiSpec,
    restarts: int = 16,
    seeding: str = "mixed",
    max_sweeps: int = 100,
    tol: float = 1e-9,
    seed: int = 0,
    ball_radius: int | None = None,
    randomize_order: bool = False,
) -> SolveReport:
    """Multi-start 1-adjustment descent for the Cheeger N-cluster problem.

    Each restart seeds N hop-distance balls, then sweeps chambers ``1..N``
    with :func:`one_adjust_sweep` until nothing changes. The best restart is
    returned (earliest on ties). ``seeding="mixed"`` alternates random seeds
    grown to Voronoi cells with random seeds grown to radius-1 balls (an
    explicit ``ball_radius`` overrides both).
    """
    if N < 1:
        raise ValueError("N must be positive")
    if phi.N != N:
        raise ValueError("phi dimension does not match N")
    if not phi.increasing:
        raise ValueError("solve_H needs an increasing phi")
    if N > G.n:
        raise SeedingError(f"cannot place {N} disjoint seeds on {G.n} vertices")
    if seeding == "mixed":
        plan = [("random", None if r % 2 == 0 else 1) for r in range(restarts)]
        if ball_radius is not None:
            plan = [(s, ball_radius) for s, _ in plan]
    elif seeding in ("farthest", "random"):
        plan = [(seeding, ball_radius)] * restarts
    else:
        raise ValueError(f"unknown seeding strategy {seeding!r}")
    jobs = [
        (G, N, phi, plan[r][0], plan[r][1], max_sweeps, tol, seed, r, randomize_order)
        for r in range(restarts)
    ]
    results = _pmap(_one_restart, jobs)
    best = None
    traces = []
    total_sweeps = 0
    for L, trace, sweeps in results:
        traces.append(trace)
        total_sweeps += sweeps
        if not L.is_valid:
            continue
        if best is None or trace[-1] < best[1][-1]:
            best = (L, trace)
    if best is None:
        raise InvalidClusterError("no restart produced a valid cluster")
    L = best[0]
    stats = chamber_stats(G, L)
    value = eval_phi(phi, [s.ratio for s in stats])
    flag, dev = is_one_adjusted(G, L, tol)
    stats = [
        ChamberStats(s.per, s.vol, s.ratio, h_exact=cheeger_dinkelbach(G.restrict(c)).h)
        for s, c in zip(stats, L.chambers())
    ]
    return SolveReport(
        objective_kind="H",
        phi=phi,
        value=value,
        labeling=L,
        chamber_stats=stats,
        one_adjusted=flag,
        max_deviation=dev,
        certificates=bound_certificates(G, value, N, phi, [s.vol for s in stats]),
        sweeps=total_sweeps,
        restarts_used=restarts,
        rng_seed=seed,
        traces=traces,
    )


def shrink_to_cheeger_subsets(G: DirichletGraph, L: Labeling) -> Labeling:
    """Replace each chamber by its own (largest) Cheeger set."""
    a = np.zeros(G.n, dtype=np.int64)
    for i, ch in enumerate(L.chambers(), start=1):
        if not ch.any():
            continue
        idx = np.flatnonzero(ch)
        res = cheeger_dinkelbach(G.restrict(ch))
        a[idx[res.cheeger_set]] = i
    return Labeling(a, L.N)


def extract_levelsets(u_list, t_list) -> Labeling:
    """Labeling with chamber ``i = {u_i > t_i}``."""
    u = [np.asarray(x, dtype=float) for x in u_list]
    if len(u) != len(t_list):
        raise ValueError("need one threshold per function")
    if any(np.any(x < 0) for x in u):
        raise ValueError("functions must be nonnegative")
    n = u[0].size
    a = np.zeros(n, dtype=np.int64)
    for i, (x, t) in enumerate(zip(u, t_list), start=1):
        if t < 0:
            raise ValueError("thresholds must be nonnegative")
        s = x > t
        if np.any(a[s] != 0):
            raise ValueError("functions do not have disjoint supports")
        if not s.any():
            raise InvalidClusterError(f"chamber {i} is empty at threshold {t}")
        a[s] = i
    return Labeling(a, len(u))


# ---------------------------------------------------------------- spectral support


class _EigenCache:
    """Memo of chamber eigenpairs keyed by the chamber's vertex mask.

    Within one solve the same chamber (or dilated chamber) recurs across
    iterations and restarts; the first solve's warm start decides the cached
    pair, which keeps results deterministic.
    """

    def __init__(self, G: DirichletGraph, p: float, tol: float):
        self.G, self.p, self.tol = G, p, tol
        self.store: dict[bytes, tuple[EigenPair, np.ndarray]] = {}

    def get(self, mask: np.ndarray, u0=None) -> tuple[EigenPair, np.ndarray]:
        key = np.packbits(mask).tobytes()
        hit = self.store.get(key)
        if hit is None:
            hit = _eigen_on(self.G, mask, self.p, self.tol, u0)
            self.store[key] = hit
        return hit


def _eigen_on(G: DirichletGraph, mask: np.ndarray, p: float, tol: float, u0=None) -> tuple[EigenPair, np.ndarray]:
    idx = np.flatnonzero(mask)
    sub = G.restrict(mask)
    start = None if u0 is None else np.asarray(u0)[idx]
    if start is not None and not np.any(start > 0):
        start = None
    pair = lambda_1p(sub, p, tol=tol, u0=start)
    full = np.zeros(G.n)
    full[idx] = pair.u
    return pair, full


def _chamber_eigen(cache: _EigenCache, L: Labeling, warm=None):
    pairs, funcs = [], []
    for i, ch in enumerate(L.chambers()):
        pair, full = cache.get(ch, None if warm is None else warm[i])
        pairs.append(pair)
        funcs.append(full)
    return pairs, funcs


def spectral_support_step(cache: _EigenCache, L: Labeling, adj, warm=None) -> Labeling:
    """One reassignment: eigenfunctions on one-ring dilations, then argmax."""
    N = L.N
    a = L.assignment
    n = a.size
    vals = np.zeros((N, n))
    for i in range(1, N + 1):
        ch = a == i
        dil = ch.copy()
        for x in np.flatnonzero(ch):
            dil[adj[x]] = True
        _, full = cache.get(dil, None if warm is None else warm[i - 1])
        vals[i - 1] = full
    top = vals.max(axis=0)
    new = a.copy()
    for v in np.flatnonzero(top > 0):
        cur = a[v]
        if cur > 0 and vals[cur - 1, v] >= top[v]:
            continue
        new[v] = int(np.argmax(vals[:, v])) + 1
    return Labeling(new, N)


def _moves(n: int, N: int, size: int):
    """Relabel moves touching exactly ``size`` vertices (1 or 2)."""
    if size == 1:
        for v in range(n):
            for lab in range(N + 1):
                yield (v,), (lab,)
        return
    for v in range(n):
        for w in range(v + 1, n):
            for lv in range(N + 1):
                for lw in range(N + 1):
                    yield (v, w), (lv, lw)


def polish_labels(
    cache: _EigenCache,
    L: Labeling,
    phi: PhiSpec,
    rtol: float = 1e-9,
    max_passes: int = 50,
    pair_moves: bool = False,
):
    """First-improvement search over single-vertex relabelings (including to 0).

    A move is accepted when it lowers ``phi``, or keeps it (within ``rtol``)
    while lowering the eigenvalue sum. With ``pair_moves`` a pass that finds
    no single improvement also tries relabeling two vertices at once.

    Returns ``(L, pairs, value, passes)``. Only chambers touched by a move are
    re-solved.
    """
    N = L.N
    pairs, _ = _chamber_eigen(cache, L)
    lams = [e.lam for e in pairs]
    value = eval_phi(phi, lams)
    a = L.assignment.copy()
    passes = 0
    for passes in range(1, max_passes + 1):
        improved = False
        for size in (1, 2) if pair_moves else (1,):
            for vs, labs in _moves(a.size, N, size):
                olds = a[list(vs)].copy()
                if np.any(olds == np.array(labs)):
                    continue
                a[list(vs)] = labs
                touched = {int(c) for c in (*olds, *labs) if c > 0}
                if any(not np.any(a == c) for c in touched):
                    a[list(vs)] = olds
                    continue
                trial_pairs = list(pairs)
                for c in touched:
                    trial_pairs[c - 1] = cache.get(a == c)[0]
                trial_lams = [e.lam for e in trial_pairs]
                trial = eval_phi(phi, trial_lams)
                # on plateaus of phi (e.g. the max) a smaller eigenvalue sum still counts as progress
                if trial < value * (1 - rtol) or (
                    trial <= value * (1 + rtol) and sum(trial_lams) < sum(lams) * (1 - rtol)
                ):
                    value, pairs, lams, improved = trial, trial_pairs, trial_lams, True
                    break
                a[list(vs)] = olds
            if improved:
                break
        if not improved:
            break
    return Labeling(a, N), pairs, value, passes


def _lp_restart(cache: _EigenCache, N, phi, max_iters, rng, r, warm_labels, warm_funcs):
    G = cache.G
    adj = G.neighbors()
    if warm_labels is not None and r == 0:
        L = warm_labels
    else:
        strategy, radius = [("farthest", None), ("random", None), ("random", 1)][r % 3]
        L = ball_labeling(G, pick_seeds(G, N, strategy, rng), radius)
    start = L
    funcs = warm_funcs if r == 0 else None
    pairs, funcs = _chamber_eigen(cache, L, funcs)
    value = eval_phi(phi, [e.lam for e in pairs])
    best = (value, L, pairs, funcs)
    trace = [value]
    seen = {L.assignment.tobytes()}
    stable = False
    it = 0
    for it in range(1, max_iters + 1):
        L_new = spectral_support_step(cache, L, adj, funcs)
        if not L_new.is_valid:
            return None, trace, it, start
        key = L_new.assignment.tobytes()
        if L_new == L:
            stable = True
            break
        if key in seen:
            # the argmax map has entered a cycle; keep the best labeling met
            break
        seen.add(key)
        L = L_new
        pairs, funcs = _chamber_eigen(cache, L, funcs)
        value = eval_phi(phi, [e.lam for e in pairs])
        trace.append(value)
        if value < best[0]:
            best = (value, L, pairs, funcs)
    return (best, stable), trace, it, start


def solve_Lp(
    G: DirichletGraph,
    N: int,
    p: float,
    phi: PhiSpec,
    restarts: int = 8,
    max_iters: int = 50,
    tol: float = 1e-8,
    seed: int = 0,
    warm_start: Labeling | None = None,
    warm_funcs: list[np.ndarray] | None = None,
    max_reseeds: int = 8,
    polish_max_vertices: int = 64,
    pair_polish_max_vertices: int = 12,
) -> SolveReport:
    """Spectral-support alternating scheme for the p-geometric eigenvalue problem.

    Per iteration every chamber gets its first p-eigenfunction on the chamber
    grown by one ring of neighbours; each vertex then joins the chamber whose
    eigenfunction is largest there (ties keep the current label). Stops when
    labels repeat. A restart whose chamber empties is re-seeded (counted in
    ``restarts_used``). On graphs with at most ``polish_max_vertices``
    vertices every restart's result is then refined by :func:`polish_labels`
    (with pair moves up to ``pair_polish_max_vertices``), and so is every
    seed labeling on its own.
    The reported value is ``phi`` of the undilated chambers' eigenvalues.
    """
    if not 1 < p <= 4:
        raise ValueError("p must lie in (1, 4]")
    if phi.N != N:
        raise ValueError("phi dimension does not match N")
    if not phi.increasing:
        raise ValueError("solve_Lp needs an increasing phi")
    if N > G.n:
        raise SeedingError(f"cannot place {N} disjoint seeds on {G.n} vertices")
    cache = _EigenCache(G, p, tol)
    starts = []
    outcomes = []
    used = 0
    traces = []
    iters = 0
    r = 0
    while len(outcomes) < restarts and used < restarts + max_reseeds:
        rng = np.random.default_rng([seed, r])
        res, trace, it, start = _lp_restart(cache, N, phi, max_iters, rng, r, warm_start, warm_funcs)
        starts.append(start)
        used += 1
        r += 1
        traces.append(trace)
        iters += it
        if res is not None:
            outcomes.append(res)
    if not outcomes:
        raise InvalidClusterError("every restart emptied a chamber")
    if G.n <= polish_max_vertices:
        # polish every restart result and, as extra candidates, every seed labeling
        pair_moves = G.n <= pair_polish_max_vertices
        polished = []
        for (value, L, pairs, funcs), stable in outcomes:
            L2, pairs2, value2, passes = polish_labels(cache, L, phi, pair_moves=pair_moves)
            iters += passes
            if value2 < value:
                traces.append([value, value2])
                value, L, pairs = value2, L2, pairs2
                funcs = _chamber_eigen(cache, L)[1]
            polished.append(((value, L, pairs, funcs), stable))
        for L0 in starts:
            if not L0.is_valid:
                continue
            L2, pairs2, value2, passes = polish_labels(cache, L0, phi, pair_moves=pair_moves)
            iters += passes
            polished.append(((value2, L2, pairs2, _chamber_eigen(cache, L2)[1]), True))
        outcomes = polished
    (value, L, pairs, funcs), stable = min(outcomes, key=lambda o: o[0][0])
    stats = []
    hs = []
    for s, ch, pair in zip(chamber_stats(G, L), L.chambers(), pairs):
        h = cheeger_dinkelbach(G.restrict(ch)).h
        hs.append(h)
        stats.append(ChamberStats(s.per, s.vol, s.ratio, h_exact=h, lambda_p=pair.lam))
    report = SolveReport(
        objective_kind="Lp",
        phi=phi,
        value=value,
        labeling=L,
        chamber_stats=stats,
        certificates=eigen_certificates(p, pairs, hs),
        sweeps=iters,
        restarts_used=used,
        rng_seed=seed,
        p=p,
        converged=stable and all(e.converged for e in pairs),
        eigenpairs=pairs,
        traces=traces,
        functions=funcs,
    )
    return report
