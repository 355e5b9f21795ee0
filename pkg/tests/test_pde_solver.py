"""Direct dual-equation solver: assembly, closure, kernels, normalization."""

import numpy as np
import pytest
import scipy.sparse as sp

from linfvar import (BoundaryData, EllipticMatrix, ScalarField, build_grid,
                     make_pure_xi)
from linfvar.pde_solver import (DualProblem, assemble, dual_problem_from_state,
                                normalize_dual, solve_dual)


def _problem_1d(n, K=None, L=None, a=0.0, b=1.0, diff=1.0):
    g = build_grid(1, (a, b), [n])
    Kf = ScalarField(g, np.zeros(g.n_nodes) if K is None else K(g.points[:, 0]))
    Lf = np.zeros((g.n_nodes, 1))
    if L is not None:
        Lf[:, 0] = L(g.points[:, 0])
    return g, DualProblem(grid=g, A=EllipticMatrix(np.array([[diff]])),
                          K=Kf, L=Lf)


def test_validation():
    g, prob = _problem_1d(11)
    with pytest.raises(ValueError):
        DualProblem(grid=g, A=prob.A, K=prob.K, L=prob.L,
                    boundary_mode="periodic")
    bad_L = np.full((g.n_nodes, 1), np.inf)
    with pytest.raises(ValueError):
        DualProblem(grid=g, A=prob.A, K=prob.K, L=bad_L)


def test_assembly_is_tridiagonal_laplacian():
    """With K = L = 0 the interior rows are the plain second difference."""
    g, prob = _problem_1d(11, diff=2.0)
    op = assemble(prob).toarray()
    h2 = g.h[0] ** 2
    assert op.shape == (9, 11)
    for r in range(9):
        row = op[r]
        assert row[r] == pytest.approx(2.0 / h2)
        assert row[r + 1] == pytest.approx(-4.0 / h2)
        assert row[r + 2] == pytest.approx(2.0 / h2)
        assert np.count_nonzero(row) == 3


def test_operator_annihilates_affine():
    """Affine fields are killed by the A-part and the closure rows alike."""
    from linfvar.pde_solver import _closure_rows
    g, prob = _problem_1d(31)
    op = assemble(prob)
    f = 3.0 - 2.0 * g.points[:, 0]
    assert np.abs(op @ f).max() < 1e-10
    assert np.abs(_closure_rows(g) @ f).max() < 1e-10


def test_constant_drift_unit_boundary_is_constant():
    """For f'' - (l f)' = 0 with f = 1 on both ends the flux constant adjusts
    so that f is identically 1."""
    g, prob = _problem_1d(101, L=lambda x: np.full_like(x, 1.5))
    f, info = solve_dual(prob)
    assert info["mode"] == "unit-boundary"
    assert not info["fallback"]
    assert np.abs(f.values - f.values[0]).max() < 1e-10


def test_exponential_kernel_convergence():
    """The kernel of f'' - (l f)' = 0 is span{1, exp(l x)}; the null-vector
    solve lands in that span."""
    ell = 1.5
    err = {}
    for n in (51, 101, 201):
        g, prob = _problem_1d(n, L=lambda x: np.full_like(x, ell))
        prob = DualProblem(grid=g, A=prob.A, K=prob.K, L=prob.L,
                           boundary_mode="null-vector",
                           reference_sign=np.ones(g.n_nodes))
        f, info = solve_dual(prob)
        assert info["mode"] == "null-vector"
        assert info["null_dim"] in (1, 2)
        span = np.column_stack([np.ones(g.n_nodes),
                                np.exp(ell * g.points[:, 0])])
        resid = f.values - span @ np.linalg.lstsq(span, f.values, rcond=None)[0]
        err[n] = np.abs(resid).max()
    assert max(err.values()) < 1e-8


def test_reaction_free_constant_solution():
    """K = L = 0 admits f = const; the unit-boundary solve returns it."""
    g, prob = _problem_1d(41)
    f, info = solve_dual(prob)
    assert np.abs(f.values - f.values[0]).max() < 1e-10
    assert float(np.dot(g.quad_weights, np.abs(f.values))) == pytest.approx(1.0)


def test_normalize_dual():
    g = build_grid(1, (0.0, 1.0), [21])
    f = normalize_dual(g, -np.ones(21))
    assert np.all(f > 0)          # max-|f| node flipped positive
    assert float(np.dot(g.quad_weights, np.abs(f))) == pytest.approx(1.0)
    with pytest.raises(ValueError):
        normalize_dual(g, np.zeros(21))


def test_dual_problem_from_state_pure_family():
    g = build_grid(1, (0.0, 1.0), [41])
    data = BoundaryData.from_scalars_1d(0.0, 0.0, 1.0, 2.0, 0.0, 1.0)
    A = EllipticMatrix(np.array([[1.0]]))
    u = ScalarField(g, g.points[:, 0] ** 2)
    prob = dual_problem_from_state(u, make_pure_xi(), A, data)
    assert np.abs(prob.K.values).max() == 0.0
    assert np.abs(prob.L).max() == 0.0
    assert np.all(prob.reference_sign == 1.0)


def test_null_vector_mode_matches_extracted_sign(oracle_pq):
    """At the converged flagship state the interior operator has a small
    null cluster; the sign-anchored representative changes sign exactly once,
    at the oracle breakpoint."""
    from conftest import flagship_config
    cfg = flagship_config(201)
    u = ScalarField(cfg.grid, oracle_pq(cfg.grid.points[:, 0]))
    prob = dual_problem_from_state(u, cfg.spec, cfg.A, cfg.data,
                                   mode="null-vector")
    f, info = solve_dual(prob)
    assert info["mode"] == "null-vector"
    assert info["null_dim"] >= 1
    s = np.sign(f.values)
    flips = np.count_nonzero(np.diff(s[s != 0]) != 0)
    assert flips == 1
    crossing = cfg.grid.points[np.argmin(np.abs(f.values)), 0]
    assert abs(crossing - oracle_pq.xbar) < 3 * cfg.grid.h[0]


def test_unit_boundary_solution_solves_rows():
    ell = 0.7
    g, prob = _problem_1d(101, L=lambda x: np.sin(np.pi * x) * ell)
    f, _ = solve_dual(prob)
    resid = assemble(prob) @ f.values
    assert np.abs(resid).max() < 1e-8 * np.abs(assemble(prob).data).max()
