"""Single-set Cheeger constant: enumeration oracle, Dinkelbach/min-cut solver, thresholding."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .flow import FlowNetwork, min_cut
from .graph import DirichletGraph, per_vol, total_variation

ENUM_CAP = 22


class SizeCapError(ValueError):
    """Instance exceeds an exhaustive-enumeration cap."""


class NonConvergenceError(RuntimeError):
    def __init__(self, message: str, trace: list[float]):
        super().__init__(message)
        self.trace = trace


@dataclass
class CheegerResult:
    h: float
    cheeger_set: np.ndarray  # boolean mask
    iterations: int = 0
    breakpoints: list[float] = field(default_factory=list)

    def vertex_ids(self, G: DirichletGraph) -> list:
        return [G.ids[k] for k in np.flatnonzero(self.cheeger_set)]


def subset_tables(G: DirichletGraph, masks: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Perimeter and volume of every subset encoded as an integer bitmask."""
    masks = np.asarray(masks, dtype=np.int64)
    bits = ((masks[:, None] >> np.arange(G.n)) & 1).astype(np.uint8)
    vol = bits @ G.m
    per = bits @ G.b
    if G.w.size:
        per = per + (bits[:, G.eu] ^ bits[:, G.ev]) @ G.w
    return per, vol


def cheeger_enumerate(G: DirichletGraph, max_vertices: int = ENUM_CAP, chunk: int = 1 << 16) -> CheegerResult:
    """Global minimum of per/vol over all nonempty subsets.

    Ties (relative 1e-12) go to the larger volume, then to the
    lexicographically smallest sorted index list.
    """
    n = G.n
    if n > max_vertices:
        raise SizeCapError(f"{n} vertices exceeds the enumeration cap of {max_vertices}")
    total = 1 << n
    best = np.inf
    cands: list[tuple[float, float, int]] = []
    for start in range(1, total, chunk):
        masks = np.arange(start, min(start + chunk, total), dtype=np.int64)
        per, vol = subset_tables(G, masks)
        ratio = per / vol
        lo = ratio.min()
        if lo < best * (1 + 1e-12):
            best = min(best, lo)
        near = np.flatnonzero(ratio <= best * (1 + 1e-12) + 1e-300)
        cands.extend((ratio[k], vol[k], int(masks[k])) for k in near)
        cands = [c for c in cands if c[0] <= best * (1 + 1e-12) + 1e-300]

    def key(c):
        members = [k for k in range(n) if c[2] >> k & 1]
        return (-c[1], members)

    _, _, mask = min(cands, key=key)
    s = np.array([(mask >> k) & 1 for k in range(n)], dtype=bool)
    per, vol = per_vol(G, s)
    return CheegerResult(per / vol, s, iterations=total - 1)


def _parametric_network(G: DirichletGraph, mu: float) -> FlowNetwork:
    n = G.n
    s, t = n, n + 1
    net = FlowNetwork(n + 2, s, t)
    for v in range(n):
        net.add_arc(s, v, mu * G.m[v])
        if G.b[v] > 0:
            net.add_arc(v, t, G.b[v])
    for u, v, w in zip(G.eu.tolist(), G.ev.tolist(), G.w.tolist()):
        net.add_arc(u, v, w, w)
    return net


def cheeger_dinkelbach(G: DirichletGraph, tol: float = 1e-10, max_iter: int = 200) -> CheegerResult:
    """Exact Cheeger constant by Dinkelbach iteration on parametric min cuts.

    Each step minimizes ``per(S) - mu * vol(S)`` through a min cut on
    source->v (``mu * m_v``), v->sink (``b_v``) and one antiparallel pair per
    edge; the cut's maximal source side gives the largest minimizer.
    """
    vol_all = float(G.m.sum())
    S = np.ones(G.n, dtype=bool)
    per, vol = per_vol(G, S)
    mu = per / vol
    trace = [mu]
    for it in range(1, max_iter + 1):
        value, side = min_cut(_parametric_network(G, mu))
        cand = np.zeros(G.n, dtype=bool)
        cand[[k for k in side if k < G.n]] = True
        gap = value - mu * vol_all  # = min_S per(S) - mu vol(S)
        if gap >= -tol * vol_all or not cand.any():
            if cand.any():
                p2, v2 = per_vol(G, cand)
                # the maximal minimizer at the optimal level is the largest Cheeger set
                if p2 / v2 <= mu * (1 + 1e-12):
                    S, per, vol = cand, p2, v2
            return CheegerResult(per / vol, S, iterations=it, breakpoints=trace)
        per, vol = per_vol(G, cand)
        new_mu = per / vol
        if not new_mu < mu:
            # numerical stall: the cut claims progress the ratio does not show
            return CheegerResult(mu, S, iterations=it, breakpoints=trace)
        S, mu = cand, new_mu
        trace.append(mu)
    raise NonConvergenceError(f"Dinkelbach did not converge in {max_iter} iterations", trace)


def cheeger_constant(G: DirichletGraph, exact_enum: bool = False, tol: float = 1e-10) -> CheegerResult:
    return cheeger_enumerate(G) if exact_enum else cheeger_dinkelbach(G, tol=tol)


def threshold_ratio(G: DirichletGraph, u) -> tuple[float, float]:
    """Best superlevel set ``{u > t}`` over the distinct values of ``u``.

    Returns ``(t, per/vol)``; by the coarea formula the ratio is at most
    ``TV(u) / ||u||_1``.
    """
    u = np.asarray(u, dtype=float)
    if u.shape != (G.n,):
        raise ValueError("function has the wrong length")
    if np.any(u < 0):
        raise ValueError("function must be nonnegative")
    if not np.any(u > 0):
        raise ValueError("function is identically zero")
    levels = np.unique(u)
    best_t, best_r = None, np.inf
    # thresholds below each positive value: 0 and the distinct values except the max
    for t in np.concatenate([[0.0], levels[levels > 0][:-1]]):
        s = u > t
        if not s.any():
            continue
        per, vol = per_vol(G, s)
        r = per / vol
        if r < best_r:
            best_t, best_r = float(t), r
    return best_t, best_r


def rayleigh_tv(G: DirichletGraph, u) -> float:
    u = np.asarray(u, dtype=float)
    return total_variation(G, u) / float(np.sum(G.m * np.abs(u)))
