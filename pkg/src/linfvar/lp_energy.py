"""Discrete penalized L^p functional, its exact gradient, and dual extraction.

The functional is the normalized (averaged) p-norm of F over the grid plus a
quadratic penalty anchored at a reference field. The 1/p root is retained so
magnitudes stay O(sup|F|) along the continuation; the gradient absorbs the
e^(1-p) factor accordingly, and duals are computed in the log domain.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .grid import BoundaryData, ClampedOperators, EllipticMatrix, Grid, ScalarField
from .supremand import SupremandSpec

__all__ = ["LpEnergyConfig", "DualFields", "energy", "gradient", "extract_duals",
           "energy_interior", "gradient_interior", "DegenerateMinimumError",
           "DualOverflowError"]

DEGENERATE_TOL = 1e-12


class DegenerateMinimumError(RuntimeError):
    """sup|F| minimum is zero: the root of the p-norm is not differentiable."""


class DualOverflowError(RuntimeError):
    def __init__(self, node: int, exponent: float):
        super().__init__(f"dual field overflow at node {node} (log magnitude {exponent:g})")
        self.node = node


@dataclass
class LpEnergyConfig:
    p: float
    spec: SupremandSpec
    A: EllipticMatrix
    data: BoundaryData
    grid: Grid
    eps: float = 0.0
    ubar: Optional[ScalarField] = None
    ops: ClampedOperators = field(default=None, repr=False)

    def __post_init__(self):
        if not np.isfinite(self.p) or self.p < 2:
            raise ValueError(f"p must be finite and >= 2, got {self.p}")
        if self.eps < 0:
            raise ValueError("eps must be nonnegative")
        if self.ops is None:
            self.ops = ClampedOperators(self.grid, self.data, self.A)
        if self.eps > 0 and self.ubar is None:
            raise ValueError("penalty requires an anchor field ubar")
        if self.ubar is not None and self.ubar.grid is not self.grid:
            if self.ubar.grid.shape != self.grid.shape:
                raise ValueError("anchor field lives on a different grid")

    def with_p(self, p: float, eps: float | None = None,
               ubar: ScalarField | None = None) -> "LpEnergyConfig":
        return LpEnergyConfig(p=p, spec=self.spec, A=self.A, data=self.data,
                              grid=self.grid,
                              eps=self.eps if eps is None else eps,
                              ubar=self.ubar if ubar is None else ubar,
                              ops=self.ops)


@dataclass
class DualFields:
    e_p: float
    f_p: Optional[ScalarField]
    K_p: Optional[ScalarField]
    L_p: Optional[np.ndarray]   # (n_nodes, dim)


def _F_values(v: np.ndarray, cfg: LpEnergyConfig) -> np.ndarray:
    jet = cfg.ops.jet(v)
    F = cfg.spec.eval(jet.points, jet.eta, jet.p, jet.xi)
    if not np.all(np.isfinite(F)):
        raise FloatingPointError("supremand produced non-finite values")
    return F


def _lp_norm(F: np.ndarray, w: np.ndarray, p: float) -> float:
    """Stabilized (sum w |F|^p)^(1/p); weights sum to 1."""
    fmax = np.abs(F).max()
    if fmax < DEGENERATE_TOL:
        return 0.0
    r = np.abs(F) / fmax
    s = float(np.dot(w, r ** p))
    return fmax * s ** (1.0 / p)


def _penalty(v: np.ndarray, cfg: LpEnergyConfig) -> float:
    if cfg.eps == 0.0:
        return 0.0
    u = cfg.ops.full_values(v)
    d = u - cfg.ubar.values
    return 0.5 * cfg.eps * float(np.dot(cfg.grid.quad_weights, d * d))


def energy_interior(v: np.ndarray, cfg: LpEnergyConfig) -> float:
    return _lp_norm(_F_values(v, cfg), cfg.grid.quad_weights, cfg.p) + _penalty(v, cfg)


def energy(u: ScalarField, cfg: LpEnergyConfig) -> float:
    return energy_interior(cfg.ops.interior_of(u), cfg)


def _dual_weights(F: np.ndarray, w: np.ndarray, p: float, e_p: float) -> np.ndarray:
    """sgn(F) * (|F|/e_p)^(p-1), computed in the log domain.

    This is exactly e^(1-p) |F|^(p-1) sgn(F); bounded by w_min^((1-p)/p)
    because e_p >= |F|_max * w_min^(1/p).
    """
    out = np.zeros_like(F)
    nz = np.abs(F) > 0
    logt = (p - 1) * (np.log(np.abs(F[nz])) - np.log(e_p))
    if np.any(logt > 700.0):
        node = int(np.flatnonzero(nz)[np.argmax(logt)])
        raise DualOverflowError(node, float(logt.max()))
    out[nz] = np.sign(F[nz]) * np.exp(logt)
    return out


def gradient_interior(v: np.ndarray, cfg: LpEnergyConfig) -> np.ndarray:
    """Exact discrete gradient of energy_interior with respect to v."""
    ops = cfg.ops
    w = cfg.grid.quad_weights
    jet = ops.jet(v)
    F = cfg.spec.eval(jet.points, jet.eta, jet.p, jet.xi)
    e_p = _lp_norm(F, w, cfg.p)
    if e_p == 0.0:
        if cfg.eps == 0.0:
            raise DegenerateMinimumError("e_p = 0 with eps = 0: degenerate minimum reached")
        g = np.zeros(cfg.grid.n_interior)
    else:
        t = _dual_weights(F, w, cfg.p, e_p)
        wt = w * t
        g = ops.adjoint_value(wt * cfg.spec.d_eta(jet.points, jet.eta, jet.p, jet.xi))
        if cfg.spec.n_p:
            dP = cfg.spec.d_p(jet.points, jet.eta, jet.p, jet.xi)
            g += ops.adjoint_gradient(wt[:, None] * dP)
        g += ops.adjoint_xi(wt * cfg.spec.d_xi(jet.points, jet.eta, jet.p, jet.xi))
    if cfg.eps > 0.0:
        d = ops.full_values(v) - cfg.ubar.values
        g += cfg.eps * ops.adjoint_value(w * d)
    return g


def gradient(u: ScalarField, cfg: LpEnergyConfig) -> np.ndarray:
    return gradient_interior(cfg.ops.interior_of(u), cfg)


def extract_duals(u_p: ScalarField, cfg: LpEnergyConfig) -> DualFields:
    """e_p, the dual field f_p, and the reduced coefficient fields K_p, L_p."""
    ops = cfg.ops
    v = ops.interior_of(u_p)
    jet = ops.jet(v)
    F = cfg.spec.eval(jet.points, jet.eta, jet.p, jet.xi)
    w = cfg.grid.quad_weights
    e_p = _lp_norm(F, w, cfg.p)
    if e_p < DEGENERATE_TOL:
        return DualFields(e_p=e_p, f_p=None, K_p=None, L_p=None)
    dxi = cfg.spec.d_xi(jet.points, jet.eta, jet.p, jet.xi)
    t = _dual_weights(F, w, cfg.p, e_p)
    f = t * dxi
    K = cfg.spec.d_eta(jet.points, jet.eta, jet.p, jet.xi) / dxi
    if cfg.spec.n_p:
        L = cfg.spec.d_p(jet.points, jet.eta, jet.p, jet.xi) / dxi[:, None]
    else:
        L = np.zeros((cfg.grid.n_nodes, cfg.grid.dim))
    grid = cfg.grid
    return DualFields(e_p=e_p, f_p=ScalarField(grid, f), K_p=ScalarField(grid, K), L_p=L)
