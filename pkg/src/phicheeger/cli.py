"""Command-line entry point: ``phicheeger <command> <instance> [options]``.

Every JSON document written carries a ``meta`` block with the package
version, the canonical configuration string, the RNG seed and the wall time.
Exit codes: 0 success, 1 certificate failure, 2 usage or input error,
3 solver non-convergence.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import time
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

from . import __version__
from .cheeger import NonConvergenceError, SizeCapError, cheeger_constant
from .eigen import P_MAX, boundedness_constant, cheeger_bound_gap, lambda_1p
from .experiments import sweep_p, sweep_phi, verify_certificates
from .graph import InvalidClusterError, InvalidDomainError
from .io import InstanceFormatError, chamber_map, load_instance, write_pgm
from .partition import SeedingError, SolveReport, brute_force, solve_H, solve_Lp
from .phi import PhiParseError, PhiSpec, eval_phi, parse_phi

EXIT_OK, EXIT_CERT, EXIT_USAGE, EXIT_NONCONV = 0, 1, 2, 3
COMMANDS = ("solve-h", "solve-cluster", "oracle", "eigen", "sweep-p", "sweep-phi", "verify")
OBJECTIVES = ("h", "l11", "lp")


class UsageError(ValueError):
    pass


@dataclass
class RunConfig:
    command: str
    instance: str
    n: int = 1
    phi: str = "pnorm:inf"
    objective: str = "h"
    p: float | None = None
    p_list: tuple[float, ...] | None = None
    q_list: tuple[float, ...] | None = None
    restarts: int = 16
    seed: int = 0
    tol: float = 1e-9
    out: str | None = None
    format: str = "json"
    report: str | None = None
    mesh: float | None = None
    chamber_file: str | None = None
    chamber: int | None = None
    include_u: bool = False
    exact_enum: bool = False
    timing: bool = True

    def validate(self) -> None:
        if self.command not in COMMANDS:
            raise UsageError(f"unknown command {self.command!r}")
        if self.n < 1:
            raise UsageError("--n must be at least 1")
        if not self.tol > 0:
            raise UsageError("--tol must be positive")
        if self.restarts < 1:
            raise UsageError("--restarts must be at least 1")
        if self.objective not in OBJECTIVES:
            raise UsageError(f"--objective must be one of {', '.join(OBJECTIVES)}")
        if self.format not in ("json", "csv", "pgm"):
            raise UsageError("--format must be json, csv or pgm")
        spectral = self.command == "eigen" or (self.command in ("solve-cluster", "oracle") and self.objective == "lp")
        if spectral:
            if self.p is None:
                raise UsageError("this command needs --p")
            if not 1 < self.p <= P_MAX:
                raise UsageError(f"--p must lie in (1, {P_MAX:g}]")
        if self.command == "sweep-p":
            if not self.p_list:
                raise UsageError("sweep-p needs --p-list")
            if any(not 1 < p <= P_MAX for p in self.p_list):
                raise UsageError(f"every p must lie in (1, {P_MAX:g}]")
        if self.command == "sweep-phi" and not self.q_list:
            raise UsageError("sweep-phi needs --q-list")
        if (self.chamber_file is None) != (self.chamber is None):
            raise UsageError("--chamber-file and --chamber go together")
        if self.format == "pgm" and not self.out:
            raise UsageError("--format pgm needs --out")
        parse_phi(self.phi, self.n)

    def to_string(self) -> str:
        """Canonical ``key=value`` form; ``-`` marks an unset option."""
        parts = []
        for f in fields(self):
            parts.append(f"{f.name}={_enc(getattr(self, f.name))}")
        return " ".join(parts)

    @classmethod
    def from_string(cls, text: str) -> "RunConfig":
        raw = dict(tok.split("=", 1) for tok in text.split())
        kw = {}
        for f in fields(cls):
            if f.name not in raw:
                raise UsageError(f"config string lacks {f.name}")
            kw[f.name] = _dec(f.name, raw[f.name])
        return cls(**kw)


_FLOAT_LISTS = ("p_list", "q_list")


def _num(x: float) -> str:
    if math.isinf(x):
        return "inf"
    return repr(float(x))


def _enc(v) -> str:
    if v is None:
        return "-"
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, tuple):
        return ",".join(_num(x) for x in v)
    if isinstance(v, float):
        return _num(v)
    s = str(v)
    if not s or any(c.isspace() for c in s) or s == "-":
        raise UsageError(f"value {s!r} cannot be encoded in a config string")
    return s


def _dec(name: str, s: str):
    if s == "-":
        return None
    if name in _FLOAT_LISTS:
        return tuple(float(x) for x in s.split(","))
    if name in ("n", "restarts", "seed", "chamber"):
        return int(s)
    if name in ("p", "tol", "mesh"):
        return float(s)
    if name in ("timing", "exact_enum", "include_u"):
        return s == "true"
    return s


def _float_list(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(x) for x in text.split(","))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"not a comma-separated number list: {text!r}") from exc


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="phicheeger", description="Cheeger N-clusters and p-Laplacian eigenvalues.")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(sp, instance=True):
        if instance:
            sp.add_argument("instance", help="instance file (.json graph/grid or .pgm mask)")
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--tol", type=float, default=1e-9)
        sp.add_argument("--out", default=None, help="write the primary artifact here instead of stdout")
        sp.add_argument("--mesh", type=float, default=None, help="cell side for PGM masks (default 1)")
        sp.add_argument("--no-timing", dest="timing", action="store_false", help="write zero wall times for byte-stable output")

    def cluster(sp):
        sp.add_argument("--n", type=int, default=2)
        sp.add_argument("--phi", default="pnorm:inf")
        sp.add_argument("--objective", default="h", type=str.lower)
        sp.add_argument("--p", type=float, default=None)
        sp.add_argument("--format", default="json")

    sp = sub.add_parser("solve-h", help="exact Cheeger constant and largest Cheeger set")
    common(sp)
    sp.add_argument("--exact-enum", action="store_true", help="use subset enumeration instead of min cuts")

    sp = sub.add_parser("solve-cluster", help="heuristic N-cluster solver")
    common(sp)
    cluster(sp)
    sp.add_argument("--restarts", type=int, default=16)

    sp = sub.add_parser("oracle", help="exhaustive N-cluster minimizer")
    common(sp)
    cluster(sp)

    sp = sub.add_parser("eigen", help="first Dirichlet p-eigenpair of the whole domain")
    common(sp)
    sp.add_argument("--p", type=float, required=True)
    sp.add_argument("--chamber-file", default=None, help="labels JSON (plain list or a saved report)")
    sp.add_argument("--chamber", type=int, default=None, help="restrict to this chamber of --chamber-file")
    sp.add_argument("--include-u", action="store_true", help="emit the eigenfunction values")

    sp = sub.add_parser("sweep-p", help="spectral value along a decreasing p-list")
    common(sp)
    sp.add_argument("--n", type=int, default=2)
    sp.add_argument("--phi", default="pnorm:inf")
    sp.add_argument("--p-list", type=_float_list, required=True)
    sp.add_argument("--restarts", type=int, default=8)
    sp.add_argument("--format", default="csv")

    sp = sub.add_parser("sweep-phi", help="q-norm stability sweep")
    common(sp)
    sp.add_argument("--n", type=int, default=2)
    sp.add_argument("--q-list", type=_float_list, required=True)
    sp.add_argument("--restarts", type=int, default=16)
    sp.add_argument("--format", default="csv")

    sp = sub.add_parser("verify", help="recompute the certificates of a saved report")
    sp.add_argument("report", help="report JSON written by solve-cluster or oracle")
    sp.add_argument("instance")
    sp.add_argument("--out", default=None)
    sp.add_argument("--mesh", type=float, default=None)
    sp.add_argument("--no-timing", dest="timing", action="store_false")
    return ap


def config_from_args(ns: argparse.Namespace) -> RunConfig:
    kw = {f.name: getattr(ns, f.name) for f in fields(RunConfig) if hasattr(ns, f.name)}
    return RunConfig(**kw)


# ---------------------------------------------------------------- commands


def _meta(cfg: RunConfig, t0: float) -> dict:
    return {
        "version": __version__,
        "config": cfg.to_string(),
        "rng_seed": cfg.seed,
        "wall_time_s": round(time.perf_counter() - t0, 6) if cfg.timing else 0.0,
    }


def _ids(G, mask) -> list:
    return [_plain(G.ids[k]) for k in np.flatnonzero(mask)]


def _plain(x):
    return x.item() if isinstance(x, np.generic) else x


def _cmd_solve_h(cfg, G):
    res = cheeger_constant(G, exact_enum=cfg.exact_enum, tol=cfg.tol)
    return {"h": res.h, "cheeger_set": _ids(G, res.cheeger_set), "iterations": res.iterations}, EXIT_OK, None


def _solve_cluster(cfg, G, oracle: bool) -> SolveReport:
    phi = parse_phi(cfg.phi, cfg.n)
    if oracle:
        kind = {"h": "H", "l11": "L11", "lp": "Lp"}[cfg.objective]
        return brute_force(G, cfg.n, phi, kind, p=cfg.p)
    if cfg.objective == "lp":
        return solve_Lp(G, cfg.n, cfg.p, phi, restarts=cfg.restarts, seed=cfg.seed)
    rep = solve_H(G, cfg.n, phi, restarts=cfg.restarts, seed=cfg.seed, tol=cfg.tol)
    if cfg.objective == "l11":
        # at a 1-adjusted minimizer the chamber Cheeger constants reproduce H
        rep.objective_kind = "L11"
        rep.value = eval_phi(phi, [s.h_exact for s in rep.chamber_stats])
    return rep


def _cmd_cluster(cfg, G, oracle: bool):
    rep = _solve_cluster(cfg, G, oracle)
    out = rep.to_dict(G)
    hard_fail = any(c.get("kind") == "hard" and c.get("holds") is False for c in rep.certificates)
    code = EXIT_CERT if hard_fail else (EXIT_OK if rep.converged else EXIT_NONCONV)
    pgm = chamber_map(G, rep.labeling) if cfg.format == "pgm" else None
    return out, code, pgm


def _chamber_mask(cfg, G) -> np.ndarray:
    data = json.loads(Path(cfg.chamber_file).read_text())
    if isinstance(data, dict):
        data = data.get("result", data).get("labels")
    labels = np.asarray(data, dtype=np.int64) if data is not None else None
    if labels is None or labels.shape != (G.n,):
        raise UsageError(f"chamber file must hold {G.n} labels")
    mask = labels == cfg.chamber
    if not mask.any():
        raise UsageError(f"chamber {cfg.chamber} is empty")
    return mask


def _cmd_eigen(cfg, G):
    if cfg.chamber_file is not None:
        mask = _chamber_mask(cfg, G)
        D = G.restrict(mask)
    else:
        mask, D = np.ones(G.n, dtype=bool), G
    pair = lambda_1p(D, cfg.p, tol=max(cfg.tol, 1e-12))
    h = cheeger_constant(D).h
    out = pair.to_dict()
    out.update(
        {
            "h": h,
            "cheeger_p_gap": cheeger_bound_gap(h, cfg.p, pair.lam),
            "C_i": boundedness_constant(pair.lam, cfg.p, d=2) if G.is_grid else None,
            "vertex_ids": _ids(G, mask),
        }
    )
    if cfg.include_u:
        out["u"] = pair.u.tolist()
    return out, EXIT_OK if pair.converged else EXIT_NONCONV, None


def _finite(x):
    return float(x) if math.isfinite(x) else None


def _table_out(table, cfg):
    rows = [
        {
            "key": _num(r.key),
            "value": _finite(r.value),
            "gap": _finite(r.gap_to_reference),
            "distance": _finite(r.minimizer_distance),
            "runtime_ms": r.runtime_ms if cfg.timing else 0,
            "error": r.error,
        }
        for r in table.rows
    ]
    return {
        "reference_value": table.reference_value,
        "reference_method": table.reference_method,
        "violations": table.violations,
        "rows": rows,
    }


def _cmd_sweep_p(cfg, G):
    phi = parse_phi(cfg.phi, cfg.n)
    opts = {"restarts": cfg.restarts, "seed": cfg.seed}
    table = sweep_p(G, cfg.n, phi, cfg.p_list, opts)
    code = EXIT_OK if all(r.ok for r in table.rows) else EXIT_NONCONV
    return _table_out(table, cfg), code, table.to_csv(timing=cfg.timing)


def _cmd_sweep_phi(cfg, G):
    opts = {"h_restarts": cfg.restarts, "seed": cfg.seed}
    table = sweep_phi(G, cfg.n, cfg.q_list, opts)
    code = EXIT_CERT if table.violations else EXIT_OK
    return _table_out(table, cfg), code, table.to_csv(timing=cfg.timing)


def _cmd_verify(cfg, G):
    data = json.loads(Path(cfg.report).read_text())
    rep = SolveReport.from_dict(data.get("result", data))
    summary = verify_certificates(rep, G)
    return summary, EXIT_OK if summary["verdict"] == "pass" else EXIT_CERT, None


def run(cfg: RunConfig) -> tuple[int, dict]:
    """Execute ``cfg``; returns ``(exit_code, json_document)`` and writes artifacts."""
    t0 = time.perf_counter()
    cfg.validate()
    G = load_instance(cfg.instance, cfg.mesh)
    if cfg.command == "solve-h":
        result, code, extra = _cmd_solve_h(cfg, G)
    elif cfg.command in ("solve-cluster", "oracle"):
        result, code, extra = _cmd_cluster(cfg, G, cfg.command == "oracle")
    elif cfg.command == "eigen":
        result, code, extra = _cmd_eigen(cfg, G)
    elif cfg.command == "sweep-p":
        result, code, extra = _cmd_sweep_p(cfg, G)
    elif cfg.command == "sweep-phi":
        result, code, extra = _cmd_sweep_phi(cfg, G)
    else:
        result, code, extra = _cmd_verify(cfg, G)
    doc = {"meta": _meta(cfg, t0), "command": cfg.command, "result": result}
    text = json.dumps(doc, indent=2, sort_keys=True, allow_nan=False, default=_plain) + "\n"
    if cfg.command in ("sweep-p", "sweep-phi") and cfg.format == "csv" and cfg.out:
        Path(cfg.out).write_text(extra)
        sys.stdout.write(text)
    elif cfg.format == "pgm" and extra is not None:
        write_pgm(cfg.out, extra)
        sys.stdout.write(text)
    elif cfg.out:
        Path(cfg.out).write_text(text)
    else:
        sys.stdout.write(text)
    return code, doc


def main(argv=None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_USAGE
    try:
        cfg = config_from_args(ns)
        code, _ = run(cfg)
        return code
    except FileNotFoundError as exc:
        print(f"error: file not found: {exc.filename}", file=sys.stderr)
        return EXIT_USAGE
    except (
        UsageError,
        PhiParseError,
        InstanceFormatError,
        InvalidDomainError,
        InvalidClusterError,
        SeedingError,
        SizeCapError,
        json.JSONDecodeError,
    ) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NonConvergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NONCONV


if __name__ == "__main__":
    sys.exit(main())
