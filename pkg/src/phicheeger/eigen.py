"""First Dirichlet p-Laplacian eigenpair on a discrete domain.

The discrete p-energy is

    E_p(u) = sum_e w_e^(p) |u(x) - u(y)|^p + sum_v b_v^(p) |u(v)|^p

with ``w^(p) = w * mesh**(1 - p)`` (and likewise for ``b``) on grid domains,
so that for cells of side ``mesh`` the quotient ``E_p(u) / sum m |u|^p``
approximates the continuum Rayleigh quotient. Plain graphs use their declared
weights for every ``p``; at ``p = 1`` both reduce to the total variation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components
import scipy.sparse.linalg as spla
from scipy.optimize import linprog, minimize
from scipy.special import gamma

from .graph import DirichletGraph

P_MAX = 4.0
ROUNDING_ULPS = 64


@dataclass
class EigenPair:
    p: float
    u: np.ndarray
    lam: float
    residual_inf: float
    iterations: int
    converged: bool = True
    trace: list | None = None

    @property
    def sup_norm(self) -> float:
        return float(self.u.max())

    def to_dict(self, include_u: bool = False) -> dict:
        out = {
            "p": self.p,
            "lambda": self.lam,
            "residual": self.residual_inf,
            "iterations": self.iterations,
            "converged": self.converged,
            "sup_norm": self.sup_norm,
        }
        if include_u:
            out["u"] = self.u.tolist()
        return out


def conductances(G: DirichletGraph, p: float) -> tuple[np.ndarray, np.ndarray]:
    if G.mesh is None or p == 1:
        return G.w, G.b
    s = G.mesh ** (1.0 - p)
    return G.w * s, G.b * s


def _incidence(G: DirichletGraph) -> sp.csr_matrix:
    k = G.eu.size
    rows = np.concatenate([np.arange(k), np.arange(k)])
    cols = np.concatenate([G.eu, G.ev])
    vals = np.concatenate([np.ones(k), -np.ones(k)])
    return sp.csr_matrix((vals, (rows, cols)), shape=(k, G.n))


def p_energy(G: DirichletGraph, u, p: float) -> float:
    if p < 1:
        raise ValueError("p must be at least 1")
    u = np.asarray(u, dtype=float)
    wp, bp = conductances(G, p)
    du = np.abs(u[G.eu] - u[G.ev])
    return float(np.sum(wp * du**p) + np.sum(bp * np.abs(u) ** p))


def p_norm(G: DirichletGraph, u, p: float) -> float:
    return float(np.sum(G.m * np.abs(u) ** p) ** (1.0 / p))


DENSE_MAX = 256


class _Energy:
    """Cached pieces for repeated energy/gradient evaluations on one domain.

    Small domains use dense linear algebra; sparse bookkeeping costs more
    than it saves below a few hundred vertices.
    """

    def __init__(self, G: DirichletGraph, p: float):
        self.G = G
        self.p = p
        self.n = G.n
        self.wp, self.bp = conductances(G, p)
        self.eu, self.ev = G.eu, G.ev
        self.dense = G.n <= DENSE_MAX
        if self.dense:
            self.D = _incidence(G).toarray()
        else:
            # COO pattern of D^T diag(c) D: (u,u), (v,v), (u,v), (v,u) per edge, then the diagonal
            n = G.n
            self._rows = np.concatenate([G.eu, G.ev, G.eu, G.ev, np.arange(n)])
            self._cols = np.concatenate([G.eu, G.ev, G.ev, G.eu, np.arange(n)])

    def diff(self, v):
        return v[self.eu] - v[self.ev]

    def value(self, v):
        p = self.p
        dv = self.diff(v)
        return float(np.sum(self.wp * np.abs(dv) ** p) + np.sum(self.bp * np.abs(v) ** p))

    def half_grad(self, v):
        """Gradient of E_p / p."""
        p = self.p
        dv = self.diff(v)
        flux = self.wp * np.abs(dv) ** (p - 1) * np.sign(dv)
        g = np.bincount(self.eu, flux, self.n) - np.bincount(self.ev, flux, self.n)
        return g + self.bp * np.abs(v) ** (p - 1) * np.sign(v)

    def hessian(self, v, floor):
        """Hessian of E_p / p with |.|^(p-2) evaluated at ``max(|.|, floor)``."""
        p = self.p
        dv = np.maximum(np.abs(self.diff(v)), floor)
        ce = (p - 1) * self.wp * dv ** (p - 2)
        cv = (p - 1) * self.bp * np.maximum(np.abs(v), floor) ** (p - 2)
        if self.dense:
            H = (self.D.T * ce) @ self.D
            H[np.diag_indices_from(H)] += cv
            return H
        vals = np.concatenate([ce, ce, -ce, -ce, cv])
        return sp.csc_matrix((vals, (self._rows, self._cols)), shape=(self.n, self.n))

    def solve(self, H, g):
        if self.dense:
            return np.linalg.solve(H, g)
        return spla.spsolve(H, g)


def _newton_inner(en: _Energy, rhs: np.ndarray, v: np.ndarray, gtol: float, max_iter: int):
    """Damped Newton with Armijo backtracking for ``E_p(v)/p - rhs . v``.

    Iterates are clamped at zero, which never increases the objective because
    ``rhs >= 0``. For ``p < 2`` the gradient is only Hoelder continuous where
    neighbouring values coincide, so a rounding error ``e`` in a difference
    leaves a gradient floor of order ``e**(p-1)``; the solve therefore also
    stops once neither the objective nor the gradient has made progress for
    three steps.
    Returns ``(v, grad_inf, ok)``.
    """
    p = en.p

    def f(x):
        return en.value(x) / p - rhs @ x

    fv = f(v)
    g = en.half_grad(v) - rhs
    stalled = 0
    for _ in range(max_iter):
        gi = float(np.max(np.abs(g)))
        if gi <= gtol:
            return v, gi, True
        floor = 1e-15 * max(float(np.max(np.abs(v))), 1e-300)
        try:
            step = -en.solve(en.hessian(v, floor), g)
        except (RuntimeError, ValueError, np.linalg.LinAlgError):
            return v, gi, False
        if not np.all(np.isfinite(step)):
            return v, gi, False
        slope = float(g @ step)
        if slope >= 0:
            step, slope = -g, -float(g @ g)
        # objective differences near the optimum drop below rounding; inside
        # that band a step is judged by whether it shrinks the gradient
        fslack = 1e-14 * (abs(fv) + abs(float(rhs @ v)))
        t = 1.0
        while True:
            x = np.maximum(v + t * step, 0.0)
            fx = f(x)
            if fx <= fv + 1e-4 * t * slope:
                g_new = en.half_grad(x) - rhs
                break
            if fx <= fv + fslack:
                g_new = en.half_grad(x) - rhs
                if np.max(np.abs(g_new)) < gi:
                    break
            t *= 0.5
            if t < 1e-10:
                return v, gi, False
        gn = float(np.max(np.abs(g_new)))
        stalled = stalled + 1 if fv - fx <= 1e-15 * abs(fv) and gn > 0.5 * gi else 0
        v, fv, g = x, fx, g_new
        if stalled >= 3:
            return v, gn, True
    return v, float(np.max(np.abs(g))), False


def _normalize(G: DirichletGraph, u: np.ndarray, p: float) -> np.ndarray:
    u = np.maximum(u, 0.0)
    nrm = p_norm(G, u, p)
    if not nrm > 0:
        raise FloatingPointError("iterate collapsed to zero")
    return u / nrm


def lambda_1p(
    G: DirichletGraph,
    p: float,
    tol: float = 1e-8,
    max_outer: int = 500,
    u0=None,
    max_inner: int = 200,
    residual_tol: float = 1e-7,
) -> EigenPair:
    """Inverse power iteration for the first p-eigenpair.

    Each outer step solves the strictly convex problem
    ``min_v E_p(v)/p - lam_k * sum m u_k^(p-1) v`` (the ``lam_k`` factor only
    fixes the scale so the minimizer stays near ``u_k``), clamps negatives,
    and renormalizes. The returned ``lam`` is the energy of a normalized
    function, hence an upper bound on the true eigenvalue.

    The eigenvalue settles quadratically faster than the eigenfunction, so
    once its relative change drops below ``tol`` the iteration continues until
    the Euler-Lagrange residual (see :func:`el_residual`) is below
    ``residual_tol`` or has stopped improving for ten steps.
    """
    if not 1 < p <= P_MAX:
        raise ValueError(f"p must lie in (1, {P_MAX}]")
    en = _Energy(G, p)
    m = G.m
    u = np.ones(G.n) if u0 is None else np.asarray(u0, dtype=float).copy()
    if not np.any(u > 0):
        u = np.ones(G.n)
    u = _normalize(G, u, p)
    lam = en.value(u)
    best_u, best_lam = u, lam
    trace = [lam]
    inner_tol = tol / 10.0
    converged = False
    stall, res_best = 0, math.inf
    it = 0
    for it in range(1, max_outer + 1):
        rhs = lam * m * u ** (p - 1)

        gtol = inner_tol * float(rhs.max())
        x, gi, ok = _newton_inner(en, rhs, u, gtol, max_inner)
        if not ok:
            res = minimize(
                lambda v, rhs=rhs: (en.value(v) / p - rhs @ v, en.half_grad(v) - rhs),
                x,
                jac=True,
                method="L-BFGS-B",
                bounds=[(0.0, None)] * G.n,
                options={"maxiter": max_inner, "maxfun": 4 * max_inner, "gtol": gtol, "ftol": 1e-16},
            )
            x = res.x
        try:
            u_new = _normalize(G, x, p)
        except FloatingPointError:
            break
        lam_new = en.value(u_new)
        trace.append(lam_new)
        if lam_new < best_lam:
            best_u, best_lam = u_new, lam_new
        settled = abs(lam_new - lam) <= tol * lam
        u, lam = u_new, lam_new
        if settled:
            # once lambda has settled, keep iterating while the residual still improves
            res = _residual(en, m, u, lam)
            if res <= residual_tol or stall >= 10:
                converged = True
                if lam <= best_lam * (1 + tol):
                    best_u, best_lam = u, lam
                break
            stall = stall + 1 if res > 0.99 * res_best else 0
            res_best = min(res_best, res)
    res = _residual(en, m, best_u, best_lam)
    if p < 2 and res > residual_tol:
        best_u, best_lam, res = _snap_ties(G, en, best_u, best_lam, res, tol)
    return EigenPair(p, best_u, best_lam, res, it, converged, trace)


def _snap_ties(G: DirichletGraph, en: _Energy, u: np.ndarray, lam: float, res: float, tol: float):
    """Merge near-equal neighbours into exact ties when that lowers the residual.

    For ``p < 2`` a true eigenfunction can have neighbouring values that
    differ by less than one ulp, where the flux ``|du|^(p-1)`` is far from
    its limit; Newton steps overshoot such edges and stall a few hundred ulps
    away. Components of edges with ``|du| <= thr * max|u|`` are set to their
    mass-weighted mean. A snap is kept when the residual drops and the
    eigenvalue does not rise by more than ``tol`` relative.
    """
    p = en.p
    top = float(np.max(u))
    for thr in (1e-13, 1e-12, 1e-11, 1e-10):
        tied = np.abs(en.diff(u)) <= thr * top
        if not tied.any():
            continue
        A = sp.coo_matrix((np.ones(int(tied.sum())), (en.eu[tied], en.ev[tied])), shape=(G.n, G.n))
        _, comp = connected_components(A, directed=False)
        mass = np.bincount(comp, G.m)
        mean = np.bincount(comp, G.m * u) / np.where(mass > 0, mass, 1.0)
        try:
            v = _normalize(G, mean[comp], p)
        except FloatingPointError:
            continue
        lam_v = en.value(v)
        res_v = _residual(en, G.m, v, lam_v)
        if res_v < res and lam_v <= lam * (1 + tol):
            u, lam, res = v, lam_v, res_v
    return u, lam, res


def _residual(en: _Energy, m: np.ndarray, u: np.ndarray, lam: float, rounding_aware: bool = True) -> float:
    p = en.p
    r = en.half_grad(u) - lam * m * u ** (p - 1)
    supp = u > 0
    if not supp.any() or lam == 0:
        return 0.0
    if rounding_aware and p < 2:
        r = _tied_flux_correction(en, u, r, supp)
    return float(np.max(np.abs(r[supp])) / lam)


def _flux(wp: np.ndarray, d: np.ndarray, p: float) -> np.ndarray:
    return wp * np.abs(d) ** (p - 1) * np.sign(d)


def _tied_flux_correction(en: _Energy, u: np.ndarray, r: np.ndarray, supp: np.ndarray) -> np.ndarray:
    """Best residual over edge fluxes consistent with ``u`` up to rounding.

    For ``p < 2`` the edge flux ``w |du|^(p-1)`` has infinite slope at
    ``du = 0``, so when the two endpoint values agree to a few dozen ulps the
    flux of the stored difference is meaningless: moving either endpoint by
    ``ROUNDING_ULPS`` ulps sweeps it over an interval. Each such edge is
    allowed any flux in its interval (edges are relaxed independently) and
    the sup-norm defect is minimized by a small LP.
    """
    p = en.p
    du = en.diff(u)
    scale = np.maximum(np.abs(u[en.eu]), np.abs(u[en.ev]))
    delta = 2 * ROUNDING_ULPS * np.finfo(float).eps * scale
    cur = _flux(en.wp, du, p)
    lo = _flux(en.wp, du - delta, p) - cur
    hi = _flux(en.wp, du + delta, p) - cur
    rmax = float(np.max(np.abs(r[supp])))
    loose = np.flatnonzero((hi - lo > 1e-6 * rmax) & (scale > 0))
    if loose.size == 0:
        return r
    a, b = en.eu[loose], en.ev[loose]
    verts = np.unique(np.concatenate([a, b]))
    verts = verts[supp[verts]]
    if verts.size == 0:
        return r
    k = loose.size
    pos = {int(v): i for i, v in enumerate(verts)}
    A = np.zeros((verts.size, k))
    for j, (x, y) in enumerate(zip(a.tolist(), b.tolist())):
        if x in pos:
            A[pos[x], j] += 1.0
        if y in pos:
            A[pos[y], j] -= 1.0
    rv = r[verts]
    ones = np.ones((verts.size, 1))
    # variables: flux change per loose edge, then the bound t
    A_ub = np.vstack([np.hstack([A, -ones]), np.hstack([-A, -ones])])
    b_ub = np.concatenate([-rv, rv])
    lo, hi = lo[loose], hi[loose]
    bounds = list(zip(lo, hi)) + [(0, None)]
    c = np.zeros(k + 1)
    c[-1] = 1.0
    res = linprog(c, A_ub=A_ub, b_ub=b_ub, bounds=bounds, method="highs")
    if res.status != 0:
        return r
    g = np.clip(res.x[:k], lo, hi)
    out = r.copy()
    np.add.at(out, a, g)
    np.subtract.at(out, b, g)
    if np.max(np.abs(out[supp])) >= rmax:
        return r
    return out


def el_residual(G: DirichletGraph, pair: EigenPair, rounding_aware: bool = True) -> float:
    """Sup over support vertices of the discrete Euler-Lagrange defect, divided by lambda.

    With ``rounding_aware`` (the default) edges whose endpoint values agree to
    rounding level take the flux that best balances the equation, as
    explained in :func:`_tied_flux_correction`; for ``p >= 2`` the flux is
    Lipschitz and the correction is skipped.
    """
    return _residual(_Energy(G, pair.p), G.m, np.asarray(pair.u, dtype=float), pair.lam, rounding_aware)


def cheeger_bound_gap(h: float, p: float, lam: float) -> float:
    """``lam - (h/p)**p``; nonnegative when the Cheeger-type lower bound holds."""
    if h < 0:
        raise ValueError("h must be nonnegative")
    if not p > 1:
        raise ValueError("p must exceed 1")
    return lam - (h / p) ** p


def sobolev_constant(d: int, p: float) -> float:
    """Sharp constant ``c`` in ``c ||u||_{p*} <= ||grad u||_p`` on R^d for ``1 <= p < d``.

    At ``p = 1`` this is the isoperimetric constant ``d |B_1|^(1/d)``.
    """
    if not 1 <= p < d:
        raise ValueError("requires 1 <= p < d")
    if p == 1:
        ball = math.pi ** (d / 2) / gamma(1 + d / 2)
        return d * ball ** (1.0 / d)
    S = (
        math.pi**-0.5
        * d ** (-1.0 / p)
        * ((p - 1) / (d - p)) ** (1 - 1.0 / p)
        * (gamma(1 + d / 2) * gamma(d) / (gamma(d / p) * gamma(1 + d - d / p))) ** (1.0 / d)
    )
    return 1.0 / S


def boundedness_constant(lam: float, p: float, d: int = 2) -> float | None:
    """Sup-norm constant for a p-eigen chamber function; ``None`` when ``p >= d``."""
    if not 1 <= p < d:
        return None
    c = sobolev_constant(d, p)
    a = (d / (d - p)) ** ((d * (d - p) / p**2) * ((p - 1) / p))
    return float(a * (lam / c**p) ** (d / p**2))
