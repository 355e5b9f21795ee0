"""Run configuration: JSON file -> validated problem objects.

Validation reports exact error paths ("supremand.family") so harness-written
configs fail loudly before any computation starts.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .grid import BoundaryData, EllipticMatrix, Grid, build_grid
from .lp_energy import LpEnergyConfig
from .minimizer import ContinuationSchedule
from .supremand import (SupremandSpec, make_additive, make_multiplicative,
                        make_pure_xi, wrap_phi)

__all__ = ["ConfigError", "RunConfig", "load_config", "build_supremand"]


class ConfigError(ValueError):
    """Invalid run configuration; message names the offending field path."""


def _require(block: dict, key: str, path: str):
    if key not in block:
        raise ConfigError(f"missing field: {path}.{key}")
    return block[key]


def build_supremand(block: dict) -> SupremandSpec:
    """Supremand families by name.

    pure_xi:          F = xi
    additive:         F = (a0 + a1*eta) + (xi + cubic*xi^3)
    multiplicative:   F = (a0 + a1*eta) * (xi + cubic*xi^3), a0 - |a1|*R > 0
    Optional "phi": {"kind": "odd_cubic", "k": k} wraps reporting with
    Phi(t) = t + k*t^3 (same minimizers, wrapped report values).
    """
    family = _require(block, "family", "supremand")
    params = block.get("params", {})

    def scalar(name, default=0.0):
        v = params.get(name, default)
        if not isinstance(v, (int, float)):
            raise ConfigError(f"supremand.params.{name} must be a number")
        return float(v)

    if family == "pure_xi":
        spec = make_pure_xi()
    elif family in ("additive", "multiplicative"):
        a0, a1 = scalar("a0", 1.0 if family == "multiplicative" else 0.0), scalar("a1")
        cub = scalar("cubic")
        if cub < 0:
            raise ConfigError("supremand.params.cubic must be nonnegative")
        A_func = lambda xi: xi + cub * xi**3
        A_prime = lambda xi: 1.0 + 3.0 * cub * xi**2
        A_second = lambda xi: 6.0 * cub * xi
        a = lambda x, eta: a0 + a1 * np.asarray(eta, dtype=float)
        a_eta = lambda x, eta: np.full(len(np.atleast_1d(eta)), a1)
        a_ee = lambda x, eta: np.zeros(len(np.atleast_1d(eta)))
        if family == "additive":
            spec = make_additive(a, a_eta, a_ee, A_func, A_prime, A_second,
                                 c=1.0, name="additive", params=dict(params))
        else:
            R = scalar("eta_range", 10.0)
            cpos = a0 - abs(a1) * R
            if cpos <= 0:
                raise ConfigError("supremand.params: a0 - |a1|*eta_range must be positive")
            etas = np.linspace(-R, R, 9)
            spec = make_multiplicative(a, a_eta, a_ee, A_func, A_prime, A_second,
                                       c=min(cpos, 1.0), name="multiplicative",
                                       params=dict(params),
                                       sample_box=(np.zeros((9, 1)), etas))
    else:
        raise ConfigError(f"unknown value for supremand.family: {family!r}")

    phi = block.get("phi")
    if phi is not None:
        if phi.get("kind") != "odd_cubic":
            raise ConfigError("supremand.phi.kind must be 'odd_cubic'")
        k = float(phi.get("k", 1.0))
        if k < 0:
            raise ConfigError("supremand.phi.k must be nonnegative")
        spec = wrap_phi(spec, lambda t: t + k * t**3, name=spec.name + "+odd_cubic")
    return spec


def _build_boundary(block: dict, dim: int) -> BoundaryData:
    preset = block.get("preset")
    if preset is not None:
        if preset == "zero":
            return BoundaryData.zero(dim)
        if preset == "quadratic_x2":
            return BoundaryData.from_function(
                lambda pts: pts[:, 0] ** 2,
                lambda pts: np.column_stack([2 * pts[:, 0]] + [np.zeros(len(pts))] * (dim - 1)))
        raise ConfigError(f"unknown value for boundary.preset: {preset!r}")
    if dim != 1:
        raise ConfigError("boundary: explicit scalars are 1D only; use a preset in 2D")
    vals = [_require(block, k, "boundary") for k in ("ua", "sa", "ub", "sb")]
    a, b = block["_interval"]
    return BoundaryData.from_scalars_1d(*[float(v) for v in vals], a, b)


@dataclass
class RunConfig:
    """Everything a solve needs, cross-validated."""

    grid: Grid
    A: EllipticMatrix
    spec: SupremandSpec
    data: BoundaryData
    schedule: ContinuationSchedule
    out_dir: Path
    emit_fields: bool = False
    emit_figures: bool = False
    seed: int = 0
    raw: dict = field(default_factory=dict, repr=False)

    def energy_config(self, p: float | None = None) -> LpEnergyConfig:
        p0 = self.schedule.p_ladder[0] if p is None else p
        return LpEnergyConfig(p=p0, spec=self.spec, A=self.A, data=self.data,
                              grid=self.grid)


def load_config(path, out_override=None, seed_override=None,
                ladder_override=None) -> RunConfig:
    try:
        raw = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError("config root must be an object")

    dom = _require(raw, "domain", "config")
    dim = int(_require(dom, "dim", "domain"))
    corners = _require(dom, "corners", "domain")
    nodes = _require(dom, "nodes", "domain")
    try:
        grid = build_grid(dim, corners, nodes if isinstance(nodes, list) else [nodes] * dim)
    except Exception as exc:
        raise ConfigError(f"domain: {exc}") from exc

    A_raw = _require(raw, "A", "config")
    try:
        A = EllipticMatrix(np.array(A_raw, dtype=float))
    except Exception as exc:
        raise ConfigError(f"A: {exc}") from exc
    if A.dim != dim:
        raise ConfigError(f"A: matrix is {A.dim}x{A.dim} but domain.dim = {dim}")

    spec = build_supremand(_require(raw, "supremand", "config"))

    bblock = dict(_require(raw, "boundary", "config"))
    bblock["_interval"] = (grid.lower[0], grid.upper[0])
    data = _build_boundary(bblock, dim)

    sblock = raw.get("schedule", {})
    ladder = ladder_override or sblock.get("p_ladder")
    kwargs = {}
    if ladder is not None:
        kwargs["p_ladder"] = tuple(float(p) for p in ladder)
    for key in ("tol", "max_inner", "eps_policy", "eps", "early_stop_rel"):
        if key in sblock:
            kwargs[key] = sblock[key]
    try:
        schedule = ContinuationSchedule(**kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"schedule: {exc}") from exc

    oblock = raw.get("output", {})
    out_dir = Path(out_override or oblock.get("directory", "."))
    return RunConfig(grid=grid, A=A, spec=spec, data=data, schedule=schedule,
                     out_dir=out_dir,
                     emit_fields=bool(oblock.get("emit_fields", False)),
                     emit_figures=bool(oblock.get("emit_figures", False)),
                     seed=int(seed_override if seed_override is not None
                              else raw.get("seed", 0)),
                     raw=raw)
