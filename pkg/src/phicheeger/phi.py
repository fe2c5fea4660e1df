"""Reference functions that score a vector of chamber ratios or eigenvalues."""

from __future__ import annotations

import math
from dataclasses import dataclass

import mpmath
import numpy as np

PNORM = "pnorm"
WSUM = "wsum"
MAX = "max"
DEMO = "demo-nonmonotone"


class PhiParseError(ValueError):
    pass


@dataclass(frozen=True)
class PhiSpec:
    kind: str
    N: int
    q: float | None = None
    weights: tuple[float, ...] | None = None

    def __post_init__(self):
        if self.N < 1:
            raise ValueError("N must be positive")
        if self.kind == PNORM:
            if self.q is None or not self.q >= 1:
                raise ValueError("p-norm exponent must lie in [1, inf]")
        elif self.kind == WSUM:
            if self.weights is None or len(self.weights) != self.N:
                raise ValueError("weighted sum needs exactly N weights")
            if any(not (w > 0 and math.isfinite(w)) for w in self.weights):
                raise ValueError("weights must be positive and finite")
        elif self.kind == DEMO:
            if self.N != 2:
                raise ValueError("the non-monotone demo map is defined only for N=2")
        elif self.kind != MAX:
            raise ValueError(f"unknown phi kind {self.kind!r}")

    @classmethod
    def pnorm(cls, q: float, N: int) -> "PhiSpec":
        return cls(PNORM, N, q=float(q))

    @classmethod
    def wsum(cls, weights) -> "PhiSpec":
        weights = tuple(float(w) for w in weights)
        return cls(WSUM, len(weights), weights=weights)

    @classmethod
    def max_only(cls, N: int) -> "PhiSpec":
        return cls(MAX, N)

    @classmethod
    def demo(cls) -> "PhiSpec":
        return cls(DEMO, 2)

    @property
    def symmetric(self) -> bool:
        """Invariant under permutation of the chamber order (decided by kind)."""
        if self.kind == WSUM:
            return len(set(self.weights)) == 1
        return self.kind != DEMO

    @property
    def increasing(self) -> bool:
        return self.kind != DEMO

    @property
    def strictly_increasing(self) -> bool:
        if self.kind == PNORM:
            return math.isfinite(self.q)
        return self.kind == WSUM

    @property
    def continuous(self) -> bool:
        # every shipped kind is continuous by construction
        return True

    def to_string(self) -> str:
        if self.kind == PNORM:
            return "pnorm:inf" if math.isinf(self.q) else f"pnorm:{_fmt(self.q)}"
        if self.kind == WSUM:
            return "wsum:" + ",".join(_fmt(w) for w in self.weights)
        if self.kind == MAX:
            return "max"
        return DEMO

    def __str__(self) -> str:
        return self.to_string()


def _fmt(x: float) -> str:
    return str(int(x)) if float(x).is_integer() else repr(float(x))


def parse_phi(text: str, N: int) -> PhiSpec:
    """Parse ``pnorm:2``, ``pnorm:inf``, ``wsum:1,2.5``, ``max`` or ``demo-nonmonotone``."""
    text = text.strip().lower()
    try:
        if text.startswith("pnorm:"):
            arg = text.split(":", 1)[1]
            q = math.inf if arg in ("inf", "infinity") else float(arg)
            return PhiSpec.pnorm(q, N)
        if text.startswith("wsum:"):
            weights = [float(x) for x in text.split(":", 1)[1].split(",")]
            if len(weights) != N:
                raise PhiParseError(f"wsum needs {N} weights, got {len(weights)}")
            return PhiSpec.wsum(weights)
        if text == "max":
            return PhiSpec.max_only(N)
        if text in (DEMO, "demo"):
            return PhiSpec.demo() if N == 2 else PhiSpec(DEMO, N)
    except PhiParseError:
        raise
    except ValueError as exc:
        raise PhiParseError(f"invalid phi {text!r}: {exc}") from exc
    raise PhiParseError(f"unknown phi {text!r}")


def eval_phi_batch(phi: PhiSpec, V: np.ndarray) -> np.ndarray:
    """Evaluate on the rows of ``V`` (shape ``(..., N)``); no input checks.

    Infinite components propagate to an infinite value.
    """
    V = np.asarray(V, dtype=float)
    if phi.kind == PNORM:
        q = phi.q
        if math.isinf(q):
            return V.max(axis=-1)
        if q == 1:
            return V.sum(axis=-1)
        # scale by the max to avoid overflow for large q
        top = V.max(axis=-1)
        with np.errstate(invalid="ignore", divide="ignore"):
            safe = np.where(top > 0, top, 1.0)
            r = (V / safe[..., None]) ** q
            out = safe * r.sum(axis=-1) ** (1.0 / q)
        out = np.where(top > 0, out, 0.0)
        return np.where(np.isinf(top), np.inf, out)
    if phi.kind == WSUM:
        return V @ np.asarray(phi.weights)
    if phi.kind == MAX:
        return V.max(axis=-1)
    v1, v2 = V[..., 0], V[..., 1]
    return np.sqrt(4.0 * (v1 - v2) ** 2 + v2**2)


def eval_phi(phi: PhiSpec, v) -> float:
    v = np.asarray(v, dtype=float)
    if v.shape != (phi.N,):
        raise ValueError(f"expected a vector of length {phi.N}, got shape {v.shape}")
    if np.any(v < 0) or np.any(np.isnan(v)):
        raise ValueError("phi is only defined on nonnegative vectors")
    return float(eval_phi_batch(phi, v))


def _increase_sign(phi: PhiSpec, v, w) -> int:
    """Exact-enough sign of ``phi(w) - phi(v)`` for ``v <= w``.

    Finite p-norms compare ``sum(w**q) - sum(v**q)`` termwise, which keeps the
    difference resolvable even when the norms agree to double precision.
    """
    with mpmath.workdps(60):
        a = [mpmath.mpf(float(x)) for x in v]
        c = [mpmath.mpf(float(x)) for x in w]
        if phi.kind == PNORM and math.isfinite(phi.q):
            q = mpmath.mpf(phi.q)
            d = mpmath.fsum(y**q - x**q for x, y in zip(a, c))
        elif phi.kind in (PNORM, MAX):
            d = max(c) - max(a)
        elif phi.kind == WSUM:
            d = mpmath.fsum(mpmath.mpf(k) * (y - x) for k, x, y in zip(phi.weights, a, c))
        else:
            d = mpmath.sqrt(4 * (c[0] - c[1]) ** 2 + c[1] ** 2) - mpmath.sqrt(4 * (a[0] - a[1]) ** 2 + a[1] ** 2)
    return int(mpmath.sign(d))


def delta_of(phi: PhiSpec) -> float | None:
    """Coercivity constant: ``phi(v) >= delta * ||v||_1`` on the positive cone."""
    if phi.kind == PNORM:
        inv = 0.0 if math.isinf(phi.q) else 1.0 / phi.q
        return float(phi.N ** (inv - 1.0))
    if phi.kind == WSUM:
        return float(min(phi.weights))
    if phi.kind == MAX:
        return 1.0 / phi.N
    return None


@dataclass
class PhiCertificate:
    phi: str
    samples: int
    continuous_by_family: bool
    coercive_witnessed: bool | None
    increasing_witnessed: bool
    strictly_increasing_witnessed: bool
    counterexamples: dict

    def to_dict(self) -> dict:
        return {
            "phi": self.phi,
            "samples": self.samples,
            "continuous_by_family": self.continuous_by_family,
            "coercive_witnessed": self.coercive_witnessed,
            "increasing_witnessed": self.increasing_witnessed,
            "strictly_increasing_witnessed": self.strictly_increasing_witnessed,
            "counterexamples": self.counterexamples,
        }


def certify_phi(phi: PhiSpec, sample_count: int = 10_000, rng_seed: int = 0, keep: int = 5) -> PhiCertificate:
    """Sample ordered pairs ``v <= w`` in ``[0, 10]^N`` and look for violations.

    Sampling can only refute the coercivity and monotonicity properties, so a
    ``True`` flag means "no counterexample found". Float ties in the strict
    check are re-examined at 60 significant digits before being recorded.
    """
    if sample_count < 1:
        raise ValueError("sample_count must be at least 1")
    rng = np.random.default_rng(rng_seed)
    N = phi.N
    w = rng.uniform(0.0, 10.0, size=(sample_count, N))
    step = rng.uniform(1e-3, 10.0, size=(sample_count, N))
    step *= rng.random((sample_count, N)) < 0.5
    # at least one strictly smaller coordinate per pair
    forced = rng.integers(0, N, size=sample_count)
    rows = np.arange(sample_count)
    step[rows, forced] = np.maximum(step[rows, forced], 1e-3)
    v = np.maximum(w - step, 0.0)

    fv = eval_phi_batch(phi, v)
    fw = eval_phi_batch(phi, w)
    scale = np.maximum(np.abs(fv), np.abs(fw))
    slack = 1e-12 * np.maximum(scale, 1.0)

    cex: dict[str, list] = {"coercive": [], "increasing": [], "strictly_increasing": []}
    delta = delta_of(phi)
    if delta is not None:
        bad = np.flatnonzero(fv < delta * v.sum(axis=1) - slack)
        cex["coercive"] = [{"v": v[k].tolist(), "phi_v": float(fv[k])} for k in bad[:keep]]

    bad_inc = np.flatnonzero(fv > fw + slack)
    cex["increasing"] = [
        {"v": v[k].tolist(), "w": w[k].tolist(), "phi_v": float(fv[k]), "phi_w": float(fw[k])}
        for k in bad_inc[:keep]
    ]
    strict_found = []
    for k in np.flatnonzero(fv >= fw - slack):
        if fv[k] > fw[k] + slack[k] or _increase_sign(phi, v[k], w[k]) <= 0:
            strict_found.append(k)
            if len(strict_found) >= keep:
                break
    cex["strictly_increasing"] = [
        {"v": v[k].tolist(), "w": w[k].tolist(), "phi_v": float(fv[k]), "phi_w": float(fw[k])}
        for k in strict_found
    ]
    return PhiCertificate(
        phi=phi.to_string(),
        samples=sample_count,
        continuous_by_family=phi.continuous,
        coercive_witnessed=None if delta is None else not cex["coercive"],
        increasing_witnessed=not cex["increasing"],
        strictly_increasing_witnessed=not cex["strictly_increasing"],
        counterexamples=cex,
    )
