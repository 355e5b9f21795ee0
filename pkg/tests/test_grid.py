"""Grid construction, quadrature, and the clamped jet operators."""

import numpy as np
import pytest

from linfvar.grid import (BoundaryData, ClampedOperators, EllipticMatrix, Grid,
                          GridError, ScalarField, apply_elliptic,
                          apply_gradient, build_grid)


def test_build_grid_1d_basics():
    g = build_grid(1, (0.0, 2.0), [21])
    assert g.dim == 1
    assert g.shape == (21,)
    assert g.h[0] == pytest.approx(0.1)
    assert abs(g.quad_weights.sum() - 1.0) < 1e-12
    assert g.boundary_mask.sum() == 2
    assert g.n_interior == 19


def test_build_grid_2d_basics():
    g = build_grid(2, ((0.0, -1.0), (1.0, 1.0)), [11, 21])
    assert g.shape == (11, 21)
    assert abs(g.quad_weights.sum() - 1.0) < 1e-12
    assert g.boundary_mask.sum() == 2 * 11 + 2 * 21 - 4
    # row-major layout: node (i, j) at flat index i*n2 + j
    assert np.allclose(g.points[g.flat_index((3, 5))], [0.3, -0.5])


def test_build_grid_rejects_bad_input():
    with pytest.raises(GridError):
        build_grid(1, (1.0, 0.0), [11])       # degenerate interval
    with pytest.raises(GridError):
        build_grid(1, (0.0, 1.0), [4])        # too few nodes
    with pytest.raises(GridError):
        build_grid(3, ((0,) * 3, (1,) * 3), [9, 9, 9])


def test_quadrature_integrates_linears_exactly():
    g = build_grid(1, (0.0, 1.0), [17])
    vals = 3.0 * g.points[:, 0] + 1.0
    # normalized weights average the integrand
    assert np.dot(g.quad_weights, vals) == pytest.approx(2.5, abs=1e-13)


def test_elliptic_matrix_validation():
    with pytest.raises(ValueError):
        EllipticMatrix(np.array([[1.0, 0.5], [0.4, 1.0]]))   # not symmetric
    with pytest.raises(ValueError):
        EllipticMatrix(np.array([[1.0, 2.0], [2.0, 1.0]]))   # indefinite
    A = EllipticMatrix(np.array([[2.0, 0.3], [0.3, 1.0]]))
    assert A.dim == 2


def test_scalar_field_validation():
    g = build_grid(1, (0.0, 1.0), [9])
    with pytest.raises(ValueError):
        ScalarField(g, np.zeros(8))
    with pytest.raises(ValueError):
        ScalarField(g, np.full(9, np.nan))


def test_interior_stencils_on_polynomials():
    g = build_grid(1, (0.0, 1.0), [41])
    x = g.points[:, 0]
    fld = ScalarField(g, x ** 2)
    grad = apply_gradient(fld)          # interior nodes only
    xi_int = x[g.interior_mask]
    assert np.allclose(grad[:, 0], 2 * xi_int, atol=1e-10)
    ell = apply_elliptic(fld, EllipticMatrix(np.array([[1.0]])))
    assert np.allclose(ell, 2.0, atol=1e-9)


def test_clamped_jet_reproduces_quadratic_1d():
    """A quadratic with matching boundary data has exact jets at all nodes,
    including the boundary (ghost closure enforces the slope)."""
    g = build_grid(1, (0.0, 1.0), [31])
    x = g.points[:, 0]
    data = BoundaryData.from_scalars_1d(0.0, 0.0, 1.0, 2.0, 0.0, 1.0)
    ops = ClampedOperators(g, data, EllipticMatrix(np.array([[1.0]])))
    jet = ops.jet_of_field(ScalarField(g, x ** 2))
    assert np.allclose(jet.eta, x ** 2, atol=1e-12)
    assert np.allclose(jet.p[:, 0], 2 * x, atol=1e-10)
    assert np.allclose(jet.xi, 2.0, atol=1e-8)


def test_clamped_jet_reproduces_quadratic_2d():
    g = build_grid(2, ((0.0, 0.0), (1.0, 1.0)), [15, 15])
    A = EllipticMatrix(np.array([[1.0, 0.5], [0.5, 2.0]]))
    xy = g.points
    u = xy[:, 0] ** 2 + xy[:, 0] * xy[:, 1]
    data = BoundaryData.from_function(
        lambda p: p[:, 0] ** 2 + p[:, 0] * p[:, 1],
        lambda p: np.column_stack([2 * p[:, 0] + p[:, 1], p[:, 0]]))
    ops = ClampedOperators(g, data, A)
    jet = ops.jet_of_field(ScalarField(g, u))
    # A:D^2 u = 2*A11 + 2*0.5*A12 (Hessian [[2,1],[1,0]])
    expected = 2 * 1.0 + 2 * 0.5 * 1.0
    assert np.allclose(jet.xi, expected, atol=1e-7)
    assert np.allclose(jet.p, np.column_stack(
        [2 * xy[:, 0] + xy[:, 1], xy[:, 0]]), atol=1e-8)


def test_adjoint_consistency():
    """<M v, w> == <v, M^T w> for the value/gradient/elliptic channels."""
    g = build_grid(1, (0.0, 1.0), [21])
    data = BoundaryData.from_scalars_1d(0.1, -0.3, 0.2, 0.7, 0.0, 1.0)
    ops = ClampedOperators(g, data, EllipticMatrix(np.array([[1.0]])))
    rng = np.random.default_rng(0)
    v = rng.standard_normal(g.n_interior)
    w = rng.standard_normal(g.n_nodes)
    lhs = np.dot(ops.X @ v, w)
    rhs = np.dot(v, ops.adjoint_xi(w))
    assert lhs == pytest.approx(rhs, rel=1e-12)


def test_boundary_data_evaluation():
    data = BoundaryData.from_scalars_1d(1.0, 2.0, 3.0, 4.0, 0.0, 1.0)
    pts = np.array([[0.0], [1.0]])
    assert np.allclose(data.value(pts), [1.0, 3.0])
    assert np.allclose(data.gradient(pts)[:, 0], [2.0, 4.0])
