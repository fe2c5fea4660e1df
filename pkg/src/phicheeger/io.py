"""Instance files (JSON graphs and grids, PGM masks) and PGM chamber maps."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .graph import DirichletGraph, GridSpec, InvalidDomainError, Labeling, build_grid


class InstanceFormatError(ValueError):
    """The instance file exists but does not describe a valid domain."""


def graph_from_json(data: dict, mesh: float | None = None) -> DirichletGraph:
    """Build a domain from ``{"vertices": [...], "edges": [...]}`` or ``{"grid": {...}}``."""
    if not isinstance(data, dict):
        raise InstanceFormatError("instance must be a JSON object")
    try:
        if "grid" in data:
            g = data["grid"]
            w, h = int(g["w"]), int(g["h"])
            bits = "".join(str(g["mask"]).split())
            if len(bits) != w * h or set(bits) - {"0", "1"}:
                raise InstanceFormatError(f"mask must be {w * h} characters of 0/1, got {len(bits)}")
            mask = np.array([c == "1" for c in bits], dtype=bool).reshape(h, w)
            return build_grid(GridSpec(w, h, float(g.get("mesh", mesh or 1.0)), mask))
        vertices = [(v["id"], float(v["m"]), float(v.get("b", 0.0))) for v in data["vertices"]]
        edges = [(e["u"], e["v"], float(e["w"])) for e in data.get("edges", [])]
    except (KeyError, TypeError) as exc:
        raise InstanceFormatError(f"malformed instance: missing or invalid field {exc}") from exc
    return DirichletGraph.from_data(vertices, edges, mesh=data.get("mesh"))


def graph_to_json(G: DirichletGraph) -> dict:
    if G.is_grid and G.cells is not None and G.grid_shape is not None:
        H, W = G.grid_shape
        mask = np.zeros((H, W), dtype=bool)
        mask[G.cells[:, 0], G.cells[:, 1]] = True
        full = build_grid(GridSpec(W, H, G.mesh, mask))
        if full.n == G.n and np.allclose(full.b, G.b):
            bits = "".join("1" if x else "0" for x in mask.ravel())
            return {"grid": {"w": W, "h": H, "mesh": G.mesh, "mask": bits}}
    out = {
        "vertices": [{"id": _jsonable(i), "m": float(m), "b": float(b)} for i, m, b in zip(G.ids, G.m, G.b)],
        "edges": [
            {"u": _jsonable(G.ids[u]), "v": _jsonable(G.ids[v]), "w": float(w)}
            for u, v, w in zip(G.eu.tolist(), G.ev.tolist(), G.w.tolist())
        ],
    }
    if G.mesh is not None:
        out["mesh"] = G.mesh
    return out


def _jsonable(x):
    return x.item() if isinstance(x, np.generic) else x


def _pgm_tokens(raw: bytes):
    """Header tokens of a PGM file (comments stripped) and the offset after the header."""
    tokens = []
    pos = 0
    while len(tokens) < 4:
        while pos < len(raw) and raw[pos : pos + 1].isspace():
            pos += 1
        if pos >= len(raw):
            raise InstanceFormatError("truncated PGM header")
        if raw[pos : pos + 1] == b"#":
            while pos < len(raw) and raw[pos : pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < len(raw) and not raw[pos : pos + 1].isspace():
            pos += 1
        tokens.append(raw[start:pos].decode("ascii"))
    return tokens, pos + 1


def read_pgm(path) -> np.ndarray:
    """Gray levels of a P2 (plain) or P5 (binary) PGM file as an int array (rows x cols)."""
    raw = Path(path).read_bytes()
    (magic, w, h, maxval), offset = _pgm_tokens(raw)
    try:
        w, h, maxval = int(w), int(h), int(maxval)
    except ValueError as exc:
        raise InstanceFormatError("non-numeric PGM header") from exc
    if w <= 0 or h <= 0 or not 0 < maxval < 65536:
        raise InstanceFormatError("bad PGM dimensions or maxval")
    if magic == "P2":
        vals = np.array(raw[offset:].split(), dtype=np.int64)
    elif magic == "P5":
        dtype = np.dtype(">u2") if maxval > 255 else np.dtype("u1")
        if len(raw) - offset < w * h * dtype.itemsize:
            raise InstanceFormatError("truncated PGM raster")
        vals = np.frombuffer(raw, dtype=dtype, count=w * h, offset=offset).astype(np.int64)
    else:
        raise InstanceFormatError(f"unsupported PGM magic {magic!r}")
    if vals.size != w * h:
        raise InstanceFormatError(f"PGM has {vals.size} samples, expected {w * h}")
    return vals.reshape(h, w)


def write_pgm(path, levels: np.ndarray, maxval: int = 255) -> None:
    """Write a binary (P5) 8-bit PGM."""
    levels = np.asarray(levels)
    h, w = levels.shape
    header = f"P5\n{w} {h}\n{maxval}\n".encode("ascii")
    Path(path).write_bytes(header + levels.astype(np.uint8).tobytes())


def chamber_map(G: DirichletGraph, L: Labeling) -> np.ndarray:
    """Canvas of gray levels ``round(i * 255 / N)`` for chamber ``i``; 0 elsewhere."""
    if G.cells is None or G.grid_shape is None:
        raise InvalidDomainError("chamber maps need a grid domain")
    img = np.zeros(G.grid_shape, dtype=np.int64)
    levels = np.rint(L.assignment * 255.0 / L.N).astype(np.int64)
    img[G.cells[:, 0], G.cells[:, 1]] = levels
    return img


def load_instance(path, mesh: float | None = None) -> DirichletGraph:
    """Load ``.json`` (graph or grid) or ``.pgm`` (mask, nonzero = active) instances.

    PGM masks carry no length scale; ``mesh`` defaults to 1.
    """
    path = Path(path)
    if path.suffix.lower() == ".pgm":
        mask = read_pgm(path) != 0
        h, w = mask.shape
        return build_grid(GridSpec(w, h, 1.0 if mesh is None else float(mesh), mask))
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise InstanceFormatError(f"{path}: invalid JSON ({exc})") from exc
    return graph_from_json(data, mesh)


def schema_path(name: str) -> Path:
    """Location of a shipped JSON schema (``output`` or ``instance``)."""
    return Path(__file__).with_name("schemas") / f"{name}.schema.json"
