"""Discrete domains with Dirichlet boundary weights.

A domain is a finite weighted graph. Every vertex carries a volume ``m`` and a
boundary weight ``b`` (its coupling to the outside of the domain); every
undirected edge carries a weight ``w``. For a vertex set ``S``::

    per(S) = sum of w over edges with exactly one endpoint in S + sum of b over S
    vol(S) = sum of m over S

Grid domains are built from a boolean mask with 4-neighbour connectivity, which
makes ``per`` the (anisotropic) pixel perimeter of the union of active cells.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np


class InvalidDomainError(ValueError):
    """Raised when a domain would be empty or structurally malformed."""


class InvalidClusterError(ValueError):
    """Raised when a labeling has an empty chamber where a cluster is required."""


def _frozen(a, dtype) -> np.ndarray:
    arr = np.array(a, dtype=dtype)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class DirichletGraph:
    """Finite weighted domain.

    ``mesh`` is set for grid-derived domains (and their subdomains); it fixes the
    conductance scaling used by the p-energy and enables the d=2 certificates.
    ``cells`` holds the (row, col) of each vertex for grid domains and
    ``grid_shape`` the (height, width) of the canvas.
    """

    ids: tuple
    m: np.ndarray
    b: np.ndarray
    eu: np.ndarray
    ev: np.ndarray
    w: np.ndarray
    mesh: float | None = None
    cells: np.ndarray | None = None
    grid_shape: tuple[int, int] | None = None
    _index: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        n = len(self.ids)
        if n == 0:
            raise InvalidDomainError("domain has no vertices")
        if len(set(self.ids)) != n:
            raise InvalidDomainError("duplicate vertex ids")
        if self.m.shape != (n,) or self.b.shape != (n,):
            raise InvalidDomainError("volume/boundary arrays do not match vertex count")
        if np.any(~np.isfinite(self.m)) or np.any(self.m <= 0):
            raise InvalidDomainError("vertex volumes must be positive and finite")
        if np.any(~np.isfinite(self.b)) or np.any(self.b < 0):
            raise InvalidDomainError("boundary weights must be nonnegative and finite")
        if not (self.eu.shape == self.ev.shape == self.w.shape):
            raise InvalidDomainError("edge arrays have mismatched lengths")
        if self.w.size:
            if np.any(~np.isfinite(self.w)) or np.any(self.w <= 0):
                raise InvalidDomainError("edge weights must be positive and finite")
            if self.eu.min() < 0 or self.ev.min() < 0 or max(self.eu.max(), self.ev.max()) >= n:
                raise InvalidDomainError("edge references a missing vertex")
            if np.any(self.eu == self.ev):
                raise InvalidDomainError("self-loops are not allowed")
            lo = np.minimum(self.eu, self.ev)
            hi = np.maximum(self.eu, self.ev)
            if np.unique(lo * n + hi).size != lo.size:
                raise InvalidDomainError("duplicate edges")
        self._index.update({vid: k for k, vid in enumerate(self.ids)})

    @classmethod
    def from_data(
        cls,
        vertices: Sequence[tuple],
        edges: Iterable[tuple],
        mesh: float | None = None,
    ) -> "DirichletGraph":
        """Build from ``[(id, m, b), ...]`` and ``[(u_id, v_id, w), ...]``."""
        vertices = list(vertices)
        if not vertices:
            raise InvalidDomainError("domain has no vertices")
        ids = tuple(v[0] for v in vertices)
        index = {vid: k for k, vid in enumerate(ids)}
        eu, ev, ww = [], [], []
        for u, v, w in edges:
            if u not in index or v not in index:
                raise InvalidDomainError(f"edge ({u!r}, {v!r}) references a missing vertex")
            eu.append(index[u])
            ev.append(index[v])
            ww.append(w)
        return cls(
            ids=ids,
            m=_frozen([v[1] for v in vertices], float),
            b=_frozen([v[2] for v in vertices], float),
            eu=_frozen(eu, np.int64),
            ev=_frozen(ev, np.int64),
            w=_frozen(ww, float),
            mesh=mesh,
        )

    @property
    def n(self) -> int:
        return len(self.ids)

    @property
    def is_grid(self) -> bool:
        return self.mesh is not None

    def index_of(self, vid) -> int:
        return self._index[vid]

    def mask(self, S) -> np.ndarray:
        """Boolean membership mask for a vertex-index collection or mask."""
        return as_mask(S, self.n)

    def neighbors(self) -> list[list[int]]:
        adj: list[list[int]] = [[] for _ in range(self.n)]
        for u, v in zip(self.eu.tolist(), self.ev.tolist()):
            adj[u].append(v)
            adj[v].append(u)
        return adj

    def restrict(self, keep) -> "DirichletGraph":
        """The subdomain on ``keep`` with removed neighbours turned into boundary.

        Edges from a retained vertex into a removed vertex are added to the
        retained vertex's boundary weight, so per/vol of any subset of ``keep``
        is the same in the subdomain as in ``self``.
        """
        keep = self.mask(keep)
        if not keep.any():
            raise InvalidDomainError("restriction leaves an empty domain")
        new_index = np.full(self.n, -1, dtype=np.int64)
        new_index[keep] = np.arange(int(keep.sum()))
        b = self.b.copy()
        ku, kv = keep[self.eu], keep[self.ev]
        cross_u = ku & ~kv
        cross_v = kv & ~ku
        np.add.at(b, self.eu[cross_u], self.w[cross_u])
        np.add.at(b, self.ev[cross_v], self.w[cross_v])
        inner = ku & kv
        sel = np.flatnonzero(keep)
        return DirichletGraph(
            ids=tuple(self.ids[k] for k in sel),
            m=_frozen(self.m[keep], float),
            b=_frozen(b[keep], float),
            eu=_frozen(new_index[self.eu[inner]], np.int64),
            ev=_frozen(new_index[self.ev[inner]], np.int64),
            w=_frozen(self.w[inner], float),
            mesh=self.mesh,
            cells=None if self.cells is None else _frozen(self.cells[keep], np.int64),
            grid_shape=self.grid_shape,
        )

    def permuted(self, perm: Sequence[int]) -> "DirichletGraph":
        """Same domain with vertex ``perm[k]`` placed at position ``k``."""
        perm = np.asarray(perm, dtype=np.int64)
        inv = np.empty_like(perm)
        inv[perm] = np.arange(perm.size)
        return DirichletGraph(
            ids=tuple(self.ids[k] for k in perm),
            m=_frozen(self.m[perm], float),
            b=_frozen(self.b[perm], float),
            eu=_frozen(inv[self.eu], np.int64),
            ev=_frozen(inv[self.ev], np.int64),
            w=_frozen(self.w, float),
            mesh=self.mesh,
            cells=None if self.cells is None else _frozen(self.cells[perm], np.int64),
            grid_shape=self.grid_shape,
        )


def as_mask(S, n: int) -> np.ndarray:
    """Normalize a vertex collection (mask, index array, or iterable) to a mask."""
    if isinstance(S, np.ndarray) and S.dtype == bool:
        if S.shape != (n,):
            raise ValueError(f"mask has shape {S.shape}, expected ({n},)")
        return S
    out = np.zeros(n, dtype=bool)
    idx = np.fromiter(S, dtype=np.int64) if not isinstance(S, np.ndarray) else S.astype(np.int64)
    if idx.size:
        if idx.min() < 0 or idx.max() >= n:
            raise ValueError("vertex index out of range")
        out[idx] = True
    return out


@dataclass(frozen=True)
class GridSpec:
    """Rectangular canvas of square cells; ``mask[r, c]`` marks active cells."""

    width: int
    height: int
    mesh: float
    mask: np.ndarray

    def __post_init__(self):
        if self.width <= 0 or self.height <= 0:
            raise InvalidDomainError("grid dimensions must be positive")
        if not self.mesh > 0:
            raise InvalidDomainError("mesh must be positive")
        mask = np.asarray(self.mask, dtype=bool)
        if mask.shape != (self.height, self.width):
            raise InvalidDomainError(
                f"mask shape {mask.shape} does not match height x width = {(self.height, self.width)}"
            )
        object.__setattr__(self, "mask", mask)


def build_grid(spec: GridSpec) -> DirichletGraph:
    """Discretize a masked canvas into a Dirichlet graph.

    Cells have volume ``mesh**2``; neighbouring active cells are joined by an
    edge of weight ``mesh``; each side facing an inactive cell or the canvas
    edge contributes ``mesh`` to the cell's boundary weight. Vertex ids are
    ``row * width + col``.
    """
    mask = spec.mask
    if not mask.any():
        raise InvalidDomainError("grid mask has no active cells")
    h = float(spec.mesh)
    H, W = mask.shape
    padded = np.pad(mask, 1, constant_values=False)
    exposed = np.zeros_like(mask, dtype=np.int64)
    for dr, dc in ((-1, 0), (1, 0), (0, -1), (0, 1)):
        nb = padded[1 + dr : 1 + dr + H, 1 + dc : 1 + dc + W]
        exposed += ~nb
    rows, cols = np.nonzero(mask)
    index = np.full(mask.shape, -1, dtype=np.int64)
    index[rows, cols] = np.arange(rows.size)

    right = mask[:, :-1] & mask[:, 1:]
    down = mask[:-1, :] & mask[1:, :]
    r1, c1 = np.nonzero(right)
    r2, c2 = np.nonzero(down)
    eu = np.concatenate([index[r1, c1], index[r2, c2]])
    ev = np.concatenate([index[r1, c1 + 1], index[r2 + 1, c2]])

    return DirichletGraph(
        ids=tuple((rows * W + cols).tolist()),
        m=_frozen(np.full(rows.size, h * h), float),
        b=_frozen(h * exposed[rows, cols], float),
        eu=_frozen(eu, np.int64),
        ev=_frozen(ev, np.int64),
        w=_frozen(np.full(eu.size, h), float),
        mesh=h,
        cells=_frozen(np.stack([rows, cols], axis=1), np.int64),
        grid_shape=(H, W),
    )


def per_vol(G: DirichletGraph, S) -> tuple[float, float]:
    """Perimeter and volume of the vertex set ``S``."""
    s = G.mask(S)
    cut = s[G.eu] != s[G.ev]
    per = float(G.w[cut].sum() + G.b[s].sum())
    return per, float(G.m[s].sum())


def total_variation(G: DirichletGraph, u) -> float:
    """Discrete total variation with zero extension outside the domain."""
    u = np.asarray(u, dtype=float)
    return float(np.sum(G.w * np.abs(u[G.eu] - u[G.ev])) + np.sum(G.b * np.abs(u)))


@dataclass(frozen=True, eq=False)
class Labeling:
    """Assignment of each vertex to chamber ``1..N`` or to ``0`` (unassigned)."""

    assignment: np.ndarray
    N: int

    def __post_init__(self):
        a = np.array(self.assignment, dtype=np.int64)
        if self.N < 1:
            raise ValueError("N must be positive")
        if a.ndim != 1 or (a.size and (a.min() < 0 or a.max() > self.N)):
            raise ValueError("labels must lie in 0..N")
        a.setflags(write=False)
        object.__setattr__(self, "assignment", a)

    @classmethod
    def from_chambers(cls, n: int, chambers: Sequence) -> "Labeling":
        a = np.zeros(n, dtype=np.int64)
        for i, ch in enumerate(chambers, start=1):
            m = as_mask(ch, n)
            if np.any(a[m] != 0):
                raise ValueError("chambers overlap")
            a[m] = i
        return cls(a, len(chambers))

    def chamber(self, i: int) -> np.ndarray:
        if not 1 <= i <= self.N:
            raise IndexError(f"chamber index {i} outside 1..{self.N}")
        return self.assignment == i

    def chambers(self) -> list[np.ndarray]:
        return [self.chamber(i) for i in range(1, self.N + 1)]

    @property
    def is_valid(self) -> bool:
        return all(c.any() for c in self.chambers())

    def replace(self, i: int, new_chamber) -> "Labeling":
        a = self.assignment.copy()
        a[a == i] = 0
        m = as_mask(new_chamber, a.size)
        if np.any((a[m] != 0)):
            raise ValueError("new chamber overlaps another chamber")
        a[m] = i
        return Labeling(a, self.N)

    def __eq__(self, other):
        return (
            isinstance(other, Labeling)
            and self.N == other.N
            and np.array_equal(self.assignment, other.assignment)
        )

    def __hash__(self):
        return hash((self.N, self.assignment.tobytes()))


@dataclass(frozen=True)
class ChamberStats:
    per: float
    vol: float
    ratio: float
    h_exact: float | None = None
    lambda_p: float | None = None

    def to_dict(self) -> dict:
        return {
            "per": self.per,
            "vol": self.vol,
            "ratio": self.ratio,
            "h_exact": self.h_exact,
            "lambda_p": self.lambda_p,
        }


def chamber_stats(G: DirichletGraph, L: Labeling) -> list[ChamberStats]:
    out = []
    for ch in L.chambers():
        per, vol = per_vol(G, ch)
        out.append(ChamberStats(per, vol, per / vol if vol > 0 else float("inf")))
    return out


def require_cluster(L: Labeling) -> None:
    for i, ch in enumerate(L.chambers(), start=1):
        if not ch.any():
            raise InvalidClusterError(f"chamber {i} is empty")


def complement_domain(G: DirichletGraph, L: Labeling, i: int) -> DirichletGraph:
    """The domain with every chamber other than ``i`` removed."""
    if not 1 <= i <= L.N:
        raise IndexError(f"chamber index {i} outside 1..{L.N}")
    a = L.assignment
    keep = (a == 0) | (a == i)
    if keep.all():
        return G
    return G.restrict(keep)


def chamber_ratios(G: DirichletGraph, L: Labeling) -> np.ndarray:
    require_cluster(L)
    return np.array([s.ratio for s in chamber_stats(G, L)])


def evaluate_cluster(G: DirichletGraph, L: Labeling, phi) -> float:
    """``phi`` applied to the vector of chamber perimeter/volume ratios."""
    from .phi import eval_phi

    return eval_phi(phi, chamber_ratios(G, L))


def cluster_to_function(G: DirichletGraph, L: Labeling) -> list[np.ndarray]:
    """Normalized chamber indicators ``1_{E_i} / vol(E_i)``."""
    require_cluster(L)
    out = []
    for ch in L.chambers():
        vol = float(G.m[ch].sum())
        out.append(ch / vol)
    return out
