"""p-continuation solver: minimize the penalized L^p energy over clamped
fields for an ascending ladder of p, warm-starting each stage.

The inner solver is bound-free L-BFGS with backtracking line search (scipy's
L-BFGS-B); the p-norm Hessian is ill-conditioned at large p and curvature
re-estimation with warm starts is robust without exact Hessians. Each stage
ends with a coercivity guard that detects diverging iterates.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.linalg
import scipy.optimize
import scipy.sparse.linalg as spla

from .grid import ScalarField
from .lp_energy import (DegenerateMinimumError, DualFields, LpEnergyConfig,
                        energy_interior, extract_duals, gradient_interior)

__all__ = ["ContinuationSchedule", "StageStats", "ContinuationReport",
           "solve_stage", "continuation_solve", "coercivity_guard",
           "initial_field", "SolverError", "discrete_sup"]

DEFAULT_LADDER = (2.0, 4.0, 8.0, 16.0, 32.0, 64.0, 128.0, 256.0)


class SolverError(RuntimeError):
    pass


@dataclass
class ContinuationSchedule:
    p_ladder: tuple = DEFAULT_LADDER
    tol: float = 1e-8              # gradient norm threshold factor: tol * (1 + e_p)
    max_inner: int = 500
    eps_policy: str = "fixed"      # "fixed" | "anchored"
    eps: float = 0.0
    early_stop_rel: float = 1e-4

    def __post_init__(self):
        ladder = tuple(float(p) for p in self.p_ladder)
        if len(ladder) == 0 or ladder[0] < 2 or np.any(np.diff(ladder) <= 0):
            raise ValueError("p ladder must be strictly increasing with first entry >= 2")
        if self.eps_policy not in ("fixed", "anchored"):
            raise ValueError(f"unknown eps policy {self.eps_policy!r}")
        self.p_ladder = ladder


@dataclass
class StageStats:
    p: float
    e_p: float
    iterations: int
    grad_norm: float
    sup_F: float
    energy_trace: list = field(default_factory=list)
    converged: bool = True
    guard_passed: bool = True
    message: str = ""
    anchor_dist: Optional[float] = None   # sup distance to the penalty anchor


@dataclass
class ContinuationReport:
    stages: list                       # list[StageStats]
    u_final: ScalarField
    duals: Optional[DualFields]
    wall_clock: float
    early_stopped: bool = False

    @property
    def e_trace(self) -> np.ndarray:
        return np.array([s.e_p for s in self.stages])

    @property
    def all_guards_passed(self) -> bool:
        return all(s.guard_passed for s in self.stages)


def discrete_sup(u: ScalarField, cfg: LpEnergyConfig) -> float:
    """Discrete max of |F(J^2 u)| over all nodes (the ess-sup surrogate)."""
    jet = cfg.ops.jet_of_field(u)
    return float(np.abs(cfg.spec.eval(jet.points, jet.eta, jet.p, jet.xi)).max())


def _sobolev1_norm(u: ScalarField, cfg: LpEnergyConfig, q: float) -> float:
    """Weighted W^{1,q} norm (normalized measure), stabilized for large q."""
    jet = cfg.ops.jet_of_field(u)
    vals = np.concatenate([np.abs(jet.eta), np.abs(jet.p).ravel()])
    w = np.concatenate([cfg.grid.quad_weights] * (1 + cfg.grid.dim))
    m = vals.max()
    if m == 0.0:
        return 0.0
    return m * float(np.dot(w, (vals / m) ** q)) ** (1.0 / q)


def coercivity_guard(u: ScalarField, cfg: LpEnergyConfig, fbar_inf: float,
                     delta: float = 1.0) -> tuple[bool, dict]:
    """Discrete a priori bound: the L^q norm of A:D^2 u of any near-minimizer
    is controlled sublinearly by the iterate itself; failure signals blow-up."""
    q = cfg.p
    jet = cfg.ops.jet_of_field(u)
    xi_mag = np.abs(jet.xi)
    m = xi_mag.max()
    lhs = 0.0 if m == 0.0 else m * float(
        np.dot(cfg.grid.quad_weights, (xi_mag / m) ** q)) ** (1.0 / q)
    rhs = (1.0 + delta + fbar_inf + _sobolev1_norm(u, cfg, q) ** cfg.spec.alpha) / cfg.spec.c
    return lhs <= rhs, {"lhs": lhs, "rhs": rhs, "q": q}


def initial_field(cfg: LpEnergyConfig) -> ScalarField:
    """Feasible start: solve A:D^2 u = mean(xi_bar) on interior rows with the
    clamped data eliminated into the right-hand side."""
    ops = cfg.ops
    grid = cfg.grid
    interior = np.flatnonzero(grid.interior_mask)
    pts = grid.points[interior]
    eta0 = np.zeros(len(interior))
    p0 = np.zeros((len(interior), cfg.spec.n_p))
    target = float(np.mean(cfg.spec.zero_level(pts, eta0, p0)))
    X = ops.X[interior]
    x0 = ops.x0[interior]
    rhs = np.full(len(interior), target) - x0
    v = spla.spsolve(X.tocsc(), rhs)
    return ops.field_from_interior(v)


def _jet_cholesky(cfg: LpEnergyConfig) -> np.ndarray:
    """Upper Cholesky factor of X^T W X, the normal matrix of the map from
    interior values to the elliptic-jet channel. Optimizing in z = R v turns
    the p=2 stage into a near-identity problem; without this the raw problem
    conditions like a discrete biharmonic (~N^4) and quasi-Newton stalls.
    Cached on the shared operator bundle."""
    ops = cfg.ops
    R = getattr(ops, "_jet_chol", None)
    if R is None:
        W = cfg.grid.quad_weights
        X = ops.X.toarray()
        M = X.T @ (W[:, None] * X)
        M[np.diag_indices_from(M)] += 1e-12 * np.trace(M) / len(M)
        R = scipy.linalg.cholesky(M, lower=False)
        ops._jet_chol = R
    return R


def solve_stage(u_init: ScalarField, cfg: LpEnergyConfig,
                sched: ContinuationSchedule) -> tuple[ScalarField, Optional[DualFields], StageStats]:
    ops = cfg.ops
    v0 = ops.interior_of(u_init)
    trace: list[float] = []

    try:
        e0 = energy_interior(v0, cfg)
    except DegenerateMinimumError:
        e0 = 0.0

    def fun(v):
        return energy_interior(v, cfg)

    def jac(v):
        return gradient_interior(v, cfg)

    # degenerate zero-minimum short-circuit
    duals0 = extract_duals(u_init, cfg)
    if duals0.e_p < 1e-12 and cfg.eps == 0.0:
        stats = StageStats(p=cfg.p, e_p=duals0.e_p, iterations=0, grad_norm=0.0,
                           sup_F=discrete_sup(u_init, cfg), energy_trace=[e0],
                           message="degenerate minimum: sup|F| = 0, duals skipped")
        return u_init, duals0, stats

    trace.append(e0)

    R = _jet_cholesky(cfg)

    def to_v(z):
        return scipy.linalg.solve_triangular(R, z, lower=False)

    def fun_z(z):
        return fun(to_v(z))

    def jac_z(z):
        return scipy.linalg.solve_triangular(R.T, jac(to_v(z)), lower=True)

    def cb(z):
        trace.append(fun_z(z))

    gtol = sched.tol * (1.0 + e0)
    res = scipy.optimize.minimize(
        fun_z, R @ v0, jac=jac_z, method="L-BFGS-B", callback=cb,
        options={"maxiter": sched.max_inner, "gtol": gtol, "ftol": 1e-16, "maxcor": 30},
    )
    v = to_v(res.x)
    gnorm = float(np.abs(jac(v)).max())
    u = ops.field_from_interior(v)
    duals = extract_duals(u, cfg)
    converged = gnorm <= sched.tol * (1.0 + duals.e_p) * 10 or res.success
    guard_ok, guard_info = coercivity_guard(
        u, cfg, fbar_inf=discrete_sup(u_init, cfg))
    anchor_dist = (float(np.abs(u.values - cfg.ubar.values).max())
                   if cfg.ubar is not None else None)
    stats = StageStats(
        p=cfg.p, e_p=duals.e_p, iterations=int(res.nit), grad_norm=gnorm,
        sup_F=discrete_sup(u, cfg), energy_trace=trace, converged=bool(converged),
        guard_passed=bool(guard_ok), anchor_dist=anchor_dist,
        message=str(res.message) + f" | guard {guard_info['lhs']:.3g} <= {guard_info['rhs']:.3g}",
    )
    if not guard_ok:
        raise SolverError(
            f"coercivity guard failed at p={cfg.p:g}: "
            f"{guard_info['lhs']:.3g} > {guard_info['rhs']:.3g}")
    return u, duals, stats


def continuation_solve(base_cfg: LpEnergyConfig, sched: ContinuationSchedule,
                       u_init: Optional[ScalarField] = None) -> ContinuationReport:
    """Run the p ladder with warm starts; the final stage's field is the
    sup-norm minimizer candidate and its duals are extracted there."""
    t_start = time.perf_counter()
    u = u_init if u_init is not None else initial_field(base_cfg)
    stages: list[StageStats] = []
    duals: Optional[DualFields] = None
    early = False
    prev_e = None
    prev_osc = None
    for p in sched.p_ladder:
        if sched.eps_policy == "anchored":
            cfg = base_cfg.with_p(p, eps=max(sched.eps, 1.0) if sched.eps else 1.0, ubar=u)
        else:
            cfg = base_cfg.with_p(p, eps=sched.eps,
                                  ubar=base_cfg.ubar if sched.eps > 0 else None)
        u, duals, stats = solve_stage(u, cfg, sched)
        stages.append(stats)
        if duals is not None and duals.e_p < 1e-12:
            early = True
            break
        # stop early only once e_p plateaus AND the constancy-defect proxy
        # (sup|F| - e_p) has stopped improving; avoids overflow-dominated stages
        osc = stats.sup_F - stats.e_p
        if (prev_e is not None and prev_osc is not None and osc > 1e-10
                and abs(stats.e_p - prev_e) <= sched.early_stop_rel * prev_e
                and osc >= prev_osc - 1e-6):
            early = True
            break
        prev_e = stats.e_p
        prev_osc = osc
    return ContinuationReport(stages=stages, u_final=u, duals=duals,
                              wall_clock=time.perf_counter() - t_start,
                              early_stopped=early)
