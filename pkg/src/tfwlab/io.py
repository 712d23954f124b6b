"""Field dumps, CSV tables and run configuration files."""
from __future__ import annotations

import csv
import json
from dataclasses import fields
from pathlib import Path

import numpy as np
import yaml

from .energy import NuclearConfig
from .grid import Grid, build_grid
from .solver import SolverOptions

MAGIC = "TFWFIELD"
VERSION = "v1"


def write_field(path, grid: Grid, f: np.ndarray) -> None:
    """Header line ``TFWFIELD v1 <N> <L>`` then ``N^3`` little-endian float64, x3 fastest."""
    f = grid.check(f)
    with open(path, "wb") as fh:
        fh.write(f"{MAGIC} {VERSION} {grid.N} {grid.L!r}\n".encode("ascii"))
        fh.write(np.ascontiguousarray(f, dtype="<f8").tobytes(order="C"))


def read_field(path) -> tuple[Grid, np.ndarray]:
    with open(path, "rb") as fh:
        header = fh.readline().decode("ascii").split()
        if len(header) != 4 or header[0] != MAGIC or header[1] != VERSION:
            raise ValueError(f"{path}: not a {MAGIC} {VERSION} file")
        N, L = int(header[2]), float(header[3])
        data = np.frombuffer(fh.read(), dtype="<f8")
    if data.size != N**3:
        raise ValueError(f"{path}: expected {N**3} values, found {data.size}")
    grid = build_grid(L, N)
    return grid, data.reshape(grid.shape).astype(float)


def write_csv(path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([repr(float(x)) if isinstance(x, (float, np.floating)) else x for x in row])


class ProgressLog:
    """Per-step solver log ``iter, energy, r_u, r_phi``."""

    header = ("iter", "energy", "r_u", "r_phi")

    def __init__(self, path):
        self._fh = open(path, "w", newline="")
        self._w = csv.writer(self._fh)
        self._w.writerow(self.header)

    def __call__(self, it, energy, r_u, r_phi):
        self._w.writerow((it, repr(energy), repr(r_u), repr(r_phi)))

    def close(self):
        self._fh.close()


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return obj.item()
    return obj


def write_report(path, report: dict) -> None:
    Path(path).write_text(json.dumps(_jsonable(report), indent=2, allow_nan=True))


# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------

def load_config(path) -> dict:
    with open(path) as fh:
        cfg = yaml.safe_load(fh) or {}
    if not isinstance(cfg, dict):
        raise ValueError(f"{path}: configuration must be a mapping")
    return cfg


def grid_from_config(cfg: dict) -> Grid:
    g = cfg.get("grid")
    if not g:
        raise ValueError("configuration needs a 'grid' section with L and N")
    return build_grid(g["L"], g["N"])


def nuclei_from_config(cfg: dict, grid: Grid) -> NuclearConfig:
    """Either explicit ``sites`` or a ``lattice: {per_axis}``; optional ``displace: {site, delta}``."""
    from .experiments import simple_cubic

    n = cfg.get("nuclei") or {}
    R0 = float(n.get("R0", 0.9))
    if "sites" in n:
        nuc = NuclearConfig(np.asarray(n["sites"], dtype=float).reshape(-1, 3), R0, n.get("weights"))
    elif "lattice" in n:
        nuc = simple_cubic(grid.L, int(n["lattice"]["per_axis"]), R0)
    else:
        nuc = NuclearConfig(np.zeros((0, 3)), R0)
    d = n.get("displace")
    if d:
        nuc = nuc.displaced(int(d["site"]), d["delta"])
    return nuc


def density_from_config(cfg: dict, grid: Grid, nuc: NuclearConfig) -> np.ndarray:
    """Nuclear density: ``uniform_density: mbar`` overrides the nuclei section."""
    from .energy import assemble_density

    if "uniform_density" in cfg:
        return grid.constant(float(cfg["uniform_density"]))
    return assemble_density(nuc, grid)


def solver_options_from_config(cfg: dict) -> SolverOptions:
    s = dict(cfg.get("solver") or {})
    known = {f.name for f in fields(SolverOptions)} - {"warm_start"}
    unknown = set(s) - known
    if unknown:
        raise ValueError(f"unknown solver options: {sorted(unknown)}")
    return SolverOptions(**s)
