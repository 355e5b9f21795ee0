"""Direct solver for the linear divergence-form dual equation
div(A Df - L f) + K f = 0, independent of the p-extraction path.

Two modes mirror the Fredholm dichotomy: a boundary-value solve with f = 1
on the boundary (cheap, generically well posed), and a null-vector solve of
the interior operator closed by one-sided extrapolation rows. Drift terms
use centered flux differencing; desk-scale spacing keeps cell Peclet numbers
small so upwinding is not needed.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .grid import (BoundaryData, ClampedOperators, EllipticMatrix, Grid,
                   ScalarField)
from .supremand import SupremandSpec

__all__ = ["DualProblem", "assemble", "solve_dual", "dual_problem_from_state",
           "normalize_dual"]


@dataclass
class DualProblem:
    grid: Grid
    A: EllipticMatrix
    K: ScalarField              # reaction coefficient at every node
    L: np.ndarray               # drift, (n_nodes, dim)
    boundary_mode: str = "unit-boundary"   # or "null-vector"
    reference_sign: Optional[np.ndarray] = None  # disambiguates degenerate null spaces

    def __post_init__(self):
        if not np.all(np.isfinite(self.K.values)) or not np.all(np.isfinite(self.L)):
            raise ValueError("dual coefficients must be finite")
        if self.boundary_mode not in ("unit-boundary", "null-vector"):
            raise ValueError(f"unknown boundary mode {self.boundary_mode!r}")


def dual_problem_from_state(u: ScalarField, spec: SupremandSpec, A: EllipticMatrix,
                            data: BoundaryData, mode: str = "unit-boundary") -> DualProblem:
    """Coefficients K = dF_eta/dF_xi and L = dF_p/dF_xi at the jet of u."""
    ops = ClampedOperators(u.grid, data, A)
    jet = ops.jet_of_field(u)
    dxi = spec.d_xi(jet.points, jet.eta, jet.p, jet.xi)
    K = spec.d_eta(jet.points, jet.eta, jet.p, jet.xi) / dxi
    L = (spec.d_p(jet.points, jet.eta, jet.p, jet.xi) / dxi[:, None]
         if spec.n_p else np.zeros((u.grid.n_nodes, u.grid.dim)))
    F = spec.eval(jet.points, jet.eta, jet.p, jet.xi)
    return DualProblem(grid=u.grid, A=A, K=ScalarField(u.grid, K), L=L,
                       boundary_mode=mode, reference_sign=np.sign(F))


def assemble(problem: DualProblem) -> sp.csr_matrix:
    """Rows for interior nodes over all node columns: A-part by symmetric
    second differences, drift by centered differencing of the product L f,
    reaction on the diagonal."""
    g = problem.grid
    n = g.n_nodes
    A = problem.A.A
    K = problem.K.values
    L = problem.L
    rows, cols, vals = [], [], []

    def add(r, c, v):
        rows.append(r)
        cols.append(c)
        vals.append(v)

    if g.dim == 1:
        h = g.h[0]
        N = g.shape[0]
        out_rows = list(range(1, N - 1))
        for r, i in enumerate(out_rows):
            add(r, i - 1, A[0, 0] / h**2)
            add(r, i, -2 * A[0, 0] / h**2 + K[i])
            add(r, i + 1, A[0, 0] / h**2)
            add(r, i + 1, -L[i + 1, 0] / (2 * h))
            add(r, i - 1, L[i - 1, 0] / (2 * h))
    else:
        n1, n2 = g.shape
        h1, h2 = g.h
        out_rows = []
        r = 0
        for i in range(1, n1 - 1):
            for j in range(1, n2 - 1):
                node = i * n2 + j
                out_rows.append(node)
                add(r, node - n2, A[0, 0] / h1**2)
                add(r, node + n2, A[0, 0] / h1**2)
                add(r, node - 1, A[1, 1] / h2**2)
                add(r, node + 1, A[1, 1] / h2**2)
                add(r, node, -2 * A[0, 0] / h1**2 - 2 * A[1, 1] / h2**2 + K[node])
                if A[0, 1] != 0.0:
                    c = 2 * A[0, 1] / (4 * h1 * h2)
                    add(r, node + n2 + 1, c)
                    add(r, node - n2 - 1, c)
                    add(r, node + n2 - 1, -c)
                    add(r, node - n2 + 1, -c)
                # drift: -d/dx(L1 f) - d/dy(L2 f), centered
                add(r, node + n2, -L[node + n2, 0] / (2 * h1))
                add(r, node - n2, L[node - n2, 0] / (2 * h1))
                add(r, node + 1, -L[node + 1, 1] / (2 * h2))
                add(r, node - 1, L[node - 1, 1] / (2 * h2))
                r += 1
    op = sp.csr_matrix((vals, (rows, cols)), shape=(len(out_rows), n))
    op.interior_rows = np.asarray(out_rows)
    return op


def _closure_rows(grid: Grid) -> sp.csr_matrix:
    """One-sided second-difference extrapolation rows for boundary nodes."""
    g = grid
    rows, cols, vals = [], [], []
    bnodes = np.flatnonzero(g.boundary_mask)
    if g.dim == 1:
        N = g.shape[0]
        h2 = g.h[0] ** 2
        stencil = {0: (0, 1, 2), N - 1: (N - 1, N - 2, N - 3)}
        for r, b in enumerate(bnodes):
            i0, i1, i2 = stencil[b]
            rows += [r, r, r]
            cols += [i0, i1, i2]
            vals += [1.0 / h2, -2.0 / h2, 1.0 / h2]
    else:
        n1, n2 = g.shape
        for r, b in enumerate(bnodes):
            i, j = divmod(b, n2)
            # extrapolate along the inward axis of the nearest face
            if i == 0:
                seq = [b, b + n2, b + 2 * n2]
                h2 = g.h[0] ** 2
            elif i == n1 - 1:
                seq = [b, b - n2, b - 2 * n2]
                h2 = g.h[0] ** 2
            elif j == 0:
                seq = [b, b + 1, b + 2]
                h2 = g.h[1] ** 2
            else:
                seq = [b, b - 1, b - 2]
                h2 = g.h[1] ** 2
            rows += [r, r, r]
            cols += [seq[0], seq[1], seq[2]]
            vals += [1.0 / h2, -2.0 / h2, 1.0 / h2]
    return sp.csr_matrix((vals, (rows, cols)), shape=(len(bnodes), g.n_nodes))


def normalize_dual(grid: Grid, f: np.ndarray) -> np.ndarray:
    """Weighted-L1 norm one; sign fixed so the node of maximum |f| is positive."""
    n1 = float(np.dot(grid.quad_weights, np.abs(f)))
    if n1 == 0.0:
        raise ValueError("cannot normalize the zero field")
    f = f / n1
    if f[np.argmax(np.abs(f))] < 0:
        f = -f
    return f


def _null_vector(op_full: sp.csr_matrix, grid: Grid,
                 reference_sign: Optional[np.ndarray]) -> tuple[np.ndarray, int]:
    """Smallest-singular-value vector(s) of the closed square operator.

    If the numerical null space has dimension > 1 the equation alone does not
    pin the representative; the sign relation does. Among null combinations
    we pick the one whose sign field agrees with the reference sign (that of
    F at the jet of u) on the largest weighted measure.
    """
    M = op_full.toarray()
    scale = np.abs(M).max()
    _, s, Vt = np.linalg.svd(M / scale)
    tol = max(1e-10, s[0] * 1e-10)
    null_dim = int(np.count_nonzero(s <= tol))
    if null_dim <= 1:
        return Vt[-1], max(null_dim, 1)
    basis = Vt[-null_dim:]                      # rows orthonormal
    if reference_sign is None:
        return basis[-1], null_dim
    w = grid.quad_weights
    ref = np.sign(reference_sign.astype(float))

    def agreement(vec):
        return float(np.dot(w, np.sign(vec) == ref))

    if null_dim == 2:
        thetas = np.linspace(0.0, np.pi, 721, endpoint=False)
        cand = np.cos(thetas)[:, None] * basis[0] + np.sin(thetas)[:, None] * basis[1]
        scores = [max(agreement(v), agreement(-v)) for v in cand]
        vec = cand[int(np.argmax(scores))]
    else:
        # projection fallback for larger clusters
        coef = (basis * w) @ ref
        vec = coef @ basis
        if np.abs(vec).max() < 1e-12:
            vec = basis[-1]
    if agreement(-vec) > agreement(vec):
        vec = -vec
    return vec, null_dim


def solve_dual(problem: DualProblem) -> tuple[ScalarField, dict]:
    """Nontrivial dual field, weighted-L1 normalized; returns (f, info)."""
    g = problem.grid
    op = assemble(problem)
    info: dict = {"mode": problem.boundary_mode}
    if problem.boundary_mode == "unit-boundary":
        interior = np.flatnonzero(g.interior_mask)
        boundary = np.flatnonzero(g.boundary_mask)
        Aii = op[:, interior].tocsc()
        rhs = -op[:, boundary] @ np.ones(len(boundary))
        try:
            sol = spla.spsolve(Aii, rhs)
            if not np.all(np.isfinite(sol)):
                raise RuntimeError("singular system")
            f = np.ones(g.n_nodes)
            f[interior] = sol
            info["fallback"] = False
            return ScalarField(g, normalize_dual(g, f)), info
        except Exception:
            info["fallback"] = True
            info["mode"] = "null-vector"
    op_full = sp.vstack([op, _closure_rows(g)]).tocsr()
    vec, null_dim = _null_vector(op_full, g, problem.reference_sign)
    info["null_dim"] = null_dim
    return ScalarField(g, normalize_dual(g, vec)), info
