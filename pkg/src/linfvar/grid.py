"""Tensor-grid discretization of an interval or axis-aligned rectangle.

Provides the grid container, the constant elliptic matrix, scalar fields,
central-difference operators, and the clamped-boundary machinery: boundary
values plus boundary slopes are imposed through a single ghost layer, which
is eliminated at assembly so that the only unknowns are interior node values.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
import scipy.sparse as sp

__all__ = [
    "Grid",
    "EllipticMatrix",
    "ScalarField",
    "Jet2Field",
    "BoundaryData",
    "ClampedOperators",
    "build_grid",
    "apply_gradient",
    "apply_elliptic",
    "clamp_boundary",
]

MIN_NODES = 5


class GridError(ValueError):
    pass


@dataclass(frozen=True)
class Grid:
    """Uniform tensor grid on [lower, upper] in dimension 1 or 2.

    Nodes are stored row-major: in 2D, node (i, j) has flat index i*n2 + j,
    with i indexing the first axis. Quadrature weights are the normalized
    (averaged) trapezoid rule and sum to one.
    """

    dim: int
    lower: np.ndarray
    upper: np.ndarray
    shape: tuple[int, ...]
    h: np.ndarray
    axes: tuple[np.ndarray, ...] = field(repr=False)
    points: np.ndarray = field(repr=False)        # (n_nodes, dim)
    boundary_mask: np.ndarray = field(repr=False)  # (n_nodes,) bool
    quad_weights: np.ndarray = field(repr=False)   # (n_nodes,), sums to 1

    @property
    def n_nodes(self) -> int:
        return int(np.prod(self.shape))

    @property
    def interior_mask(self) -> np.ndarray:
        return ~self.boundary_mask

    @property
    def n_interior(self) -> int:
        return int(np.count_nonzero(self.interior_mask))

    def flat_index(self, multi: tuple[int, ...]) -> int:
        return int(np.ravel_multi_index(multi, self.shape))


def _trapezoid_weights(n: int) -> np.ndarray:
    w = np.ones(n)
    w[0] = w[-1] = 0.5
    return w / w.sum()


def build_grid(dim: int, corners: Sequence, nodes_per_axis: Sequence[int]) -> Grid:
    """Build a grid on the box [corners[0], corners[1]] with the given node counts."""
    if dim not in (1, 2):
        raise GridError(f"dim must be 1 or 2, got {dim}")
    lower = np.atleast_1d(np.asarray(corners[0], dtype=float))
    upper = np.atleast_1d(np.asarray(corners[1], dtype=float))
    if lower.shape != (dim,) or upper.shape != (dim,):
        raise GridError(f"corners must each have length {dim}")
    if np.any(upper <= lower):
        raise GridError(f"degenerate domain: upper {upper} must exceed lower {lower}")
    shape = tuple(int(n) for n in nodes_per_axis)
    if len(shape) != dim:
        raise GridError(f"nodes_per_axis must have length {dim}")
    if any(n < MIN_NODES for n in shape):
        raise GridError(f"need at least {MIN_NODES} nodes per axis, got {shape}")
    h = (upper - lower) / (np.array(shape) - 1)
    axes = tuple(np.linspace(lower[k], upper[k], shape[k]) for k in range(dim))
    if dim == 1:
        points = axes[0][:, None]
        weights = _trapezoid_weights(shape[0])
        boundary = np.zeros(shape[0], dtype=bool)
        boundary[0] = boundary[-1] = True
    else:
        X, Y = np.meshgrid(axes[0], axes[1], indexing="ij")
        points = np.column_stack([X.ravel(), Y.ravel()])
        weights = np.outer(_trapezoid_weights(shape[0]), _trapezoid_weights(shape[1])).ravel()
        B = np.zeros(shape, dtype=bool)
        B[0, :] = B[-1, :] = True
        B[:, 0] = B[:, -1] = True
        boundary = B.ravel()
    return Grid(
        dim=dim,
        lower=lower,
        upper=upper,
        shape=shape,
        h=h,
        axes=axes,
        points=points,
        boundary_mask=boundary,
        quad_weights=weights,
    )


@dataclass(frozen=True)
class EllipticMatrix:
    """Constant symmetric positive matrix contracting the Hessian."""

    A: np.ndarray

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.A, dtype=float))
        object.__setattr__(self, "A", A)
        if A.shape[0] != A.shape[1]:
            raise GridError("A must be square")
        if not np.allclose(A, A.T, atol=1e-12):
            raise GridError("A must be symmetric within 1e-12")
        lam = np.linalg.eigvalsh(A)
        if lam.min() <= 0:
            raise GridError(f"A must be positive definite, smallest eigenvalue {lam.min():g}")

    @property
    def dim(self) -> int:
        return self.A.shape[0]


@dataclass
class ScalarField:
    """One real value per grid node (flat, row-major)."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float).ravel()
        if v.size != self.grid.n_nodes:
            raise GridError(
                f"value count {v.size} does not match node count {self.grid.n_nodes}"
            )
        if not np.all(np.isfinite(v)):
            raise GridError("field contains non-finite values")
        self.values = v

    def reshape(self) -> np.ndarray:
        return self.values.reshape(self.grid.shape)


@dataclass
class Jet2Field:
    """Per-node reduced jet of a clamped field: value, gradient, elliptic trace."""

    grid: Grid
    points: np.ndarray   # (n, dim)
    eta: np.ndarray      # (n,)
    p: np.ndarray        # (n, dim)
    xi: np.ndarray       # (n,)


@dataclass(frozen=True)
class BoundaryData:
    """Clamped data: values and the gradient of the extension on the boundary.

    `value(points)` and `gradient(points)` take an (m, dim) array of boundary
    coordinates; gradient returns (m, dim). Ghost reflection only consumes the
    normal component.
    """

    value: Callable[[np.ndarray], np.ndarray]
    gradient: Callable[[np.ndarray], np.ndarray]

    @staticmethod
    def from_scalars_1d(ua: float, sa: float, ub: float, sb: float,
                        a: float, b: float) -> "BoundaryData":
        def value(pts):
            x = pts[:, 0]
            return np.where(np.isclose(x, a), ua, ub)

        def gradient(pts):
            x = pts[:, 0]
            return np.where(np.isclose(x, a), sa, sb)[:, None]

        return BoundaryData(value=value, gradient=gradient)

    @staticmethod
    def zero(dim: int) -> "BoundaryData":
        return BoundaryData(
            value=lambda pts: np.zeros(len(pts)),
            gradient=lambda pts: np.zeros((len(pts), pts.shape[1])),
        )

    @staticmethod
    def from_function(u0: Callable, grad_u0: Callable) -> "BoundaryData":
        """From a smooth u0 given with its analytic gradient (both vectorized)."""
        return BoundaryData(value=lambda pts: np.asarray(u0(pts), dtype=float),
                            gradient=lambda pts: np.asarray(grad_u0(pts), dtype=float))


def apply_gradient(fld: ScalarField) -> np.ndarray:
    """Central-difference gradient at interior nodes; returns (n_interior, dim)."""
    g = fld.grid
    U = fld.reshape()
    if g.dim == 1:
        d = (U[2:] - U[:-2]) / (2 * g.h[0])
        return d[:, None]
    dx = (U[2:, 1:-1] - U[:-2, 1:-1]) / (2 * g.h[0])
    dy = (U[1:-1, 2:] - U[1:-1, :-2]) / (2 * g.h[1])
    return np.column_stack([dx.ravel(), dy.ravel()])


def apply_elliptic(fld: ScalarField, A: EllipticMatrix) -> np.ndarray:
    """Second-order A:D^2 at interior nodes (flat, row-major over interior)."""
    g = fld.grid
    if A.dim != g.dim:
        raise GridError("matrix dimension does not match grid dimension")
    U = fld.reshape()
    if g.dim == 1:
        return A.A[0, 0] * (U[2:] - 2 * U[1:-1] + U[:-2]) / g.h[0] ** 2
    h1, h2 = g.h
    val = A.A[0, 0] * (U[2:, 1:-1] - 2 * U[1:-1, 1:-1] + U[:-2, 1:-1]) / h1 ** 2
    val += A.A[1, 1] * (U[1:-1, 2:] - 2 * U[1:-1, 1:-1] + U[1:-1, :-2]) / h2 ** 2
    if A.A[0, 1] != 0.0:
        cross = (U[2:, 2:] - U[2:, :-2] - U[:-2, 2:] + U[:-2, :-2]) / (4 * h1 * h2)
        val += 2 * A.A[0, 1] * cross
    return val.ravel()


class _AffineRows:
    """Sparse affine map v -> M v + b accumulated row by row."""

    def __init__(self, n_rows: int, n_cols: int):
        self.M = sp.lil_matrix((n_rows, n_cols))
        self.b = np.zeros(n_rows)

    def csr(self):
        return self.M.tocsr(), self.b


class ClampedOperators:
    """Affine maps from interior unknowns to jets, honoring clamped data.

    The field is extended by one ghost layer per face: the ghost value is the
    second-order reflection that makes the central difference at the boundary
    node reproduce the prescribed slope. All per-node quantities (value,
    gradient, A:D^2) are then affine in the interior unknown vector, evaluated
    at every grid node including boundary nodes.
    """

    def __init__(self, grid: Grid, data: BoundaryData, A: EllipticMatrix):
        if A.dim != grid.dim:
            raise GridError("matrix dimension does not match grid dimension")
        self.grid = grid
        self.data = data
        self.A = A
        self._build()

    # -- construction -----------------------------------------------------

    def _build(self):
        g = self.grid
        n_int = g.n_interior
        self.interior_index = np.flatnonzero(g.interior_mask)
        dof_of_node = -np.ones(g.n_nodes, dtype=int)
        dof_of_node[self.interior_index] = np.arange(n_int)
        self.dof_of_node = dof_of_node

        ext_shape = tuple(n + 2 for n in g.shape)
        n_ext = int(np.prod(ext_shape))
        T = _AffineRows(n_ext, n_int)

        bvals = self.data.value(g.points[g.boundary_mask])
        bgrad = self.data.gradient(g.points[g.boundary_mask])
        bval_of_node = np.zeros(g.n_nodes)
        bval_of_node[g.boundary_mask] = bvals

        if g.dim == 1:
            self._build_1d(T, ext_shape, bval_of_node, bvals, bgrad)
        else:
            self._build_2d(T, ext_shape, bval_of_node)
        self.ext_shape = ext_shape
        self.T, self.t0 = T.csr()
        self._build_stencils()

    def _ghost_row(self, T, ext_idx, inner_node, slope_term):
        dof = self.dof_of_node[inner_node]
        if dof >= 0:
            T.M[ext_idx, dof] = 1.0
            T.b[ext_idx] = -slope_term
        else:
            T.b[ext_idx] = self._bval[inner_node] - slope_term

    def _build_1d(self, T, ext_shape, bval_of_node, bvals, bgrad):
        g = self.grid
        self._bval = bval_of_node
        n = g.shape[0]
        h = g.h[0]
        # real nodes
        for i in range(n):
            e = i + 1
            dof = self.dof_of_node[i]
            if dof >= 0:
                T.M[e, dof] = 1.0
            else:
                T.b[e] = bval_of_node[i]
        ga = float(self.data.gradient(np.array([[g.lower[0]]]))[0, 0])
        gb = float(self.data.gradient(np.array([[g.upper[0]]]))[0, 0])
        # ghost(-1) = u(x1) - 2h u'(a);  ghost(n) = u(x_{n-2}) + 2h u'(b)
        self._ghost_row(T, 0, 1, 2 * h * ga)
        self._ghost_row(T, ext_shape[0] - 1, n - 2, -2 * h * gb)

    def _build_2d(self, T, ext_shape, bval_of_node):
        g = self.grid
        self._bval = bval_of_node
        n1, n2 = g.shape
        h1, h2 = g.h
        E1, E2 = ext_shape

        def eidx(ii, jj):
            return (ii + 1) * E2 + (jj + 1)

        for i in range(n1):
            for j in range(n2):
                e = eidx(i, j)
                node = i * n2 + j
                dof = self.dof_of_node[node]
                if dof >= 0:
                    T.M[e, dof] = 1.0
                else:
                    T.b[e] = bval_of_node[node]

        def slope(pt, axis):
            return float(self.data.gradient(np.asarray([pt]))[0, axis])

        # face ghosts (x faces, then y faces)
        for j in range(n2):
            y = g.axes[1][j]
            gl = slope((g.lower[0], y), 0)
            gr = slope((g.upper[0], y), 0)
            self._ghost_row(T, eidx(-1, j), 1 * n2 + j, 2 * h1 * gl)
            self._ghost_row(T, eidx(n1, j), (n1 - 2) * n2 + j, -2 * h1 * gr)
        for i in range(n1):
            x = g.axes[0][i]
            gb_ = slope((x, g.lower[1]), 1)
            gt = slope((x, g.upper[1]), 1)
            self._ghost_row(T, eidx(i, -1), i * n2 + 1, 2 * h2 * gb_)
            self._ghost_row(T, eidx(i, n2), i * n2 + (n2 - 2), -2 * h2 * gt)
        # corner ghosts: reflect the adjacent x-face ghost row across the y
        # face. The ghost column sits one step outside the x range, so the
        # y-slope there is linearly extrapolated from the boundary data along
        # the face (exact for quadratic fields).
        for ii, xc, x_in in ((-1, g.lower[0], g.axes[0][1]),
                             (n1, g.upper[0], g.axes[0][n1 - 2])):
            for jj, yc, sgn in ((-1, g.lower[1], +1), (n2, g.upper[1], -1)):
                src = eidx(ii, 1 if jj == -1 else n2 - 2)
                dst = eidx(ii, jj)
                gy = 2.0 * slope((xc, yc), 1) - slope((x_in, yc), 1)
                T.M[dst] = T.M[src]
                T.b[dst] = T.b[src] - sgn * 2 * h2 * gy

    def _build_stencils(self):
        g = self.grid
        n = g.n_nodes
        ext_shape = self.ext_shape

        def shift_matrix(offsets_and_coeffs):
            """Sparse (n_nodes x n_ext) stencil over the extended index space."""
            S = sp.lil_matrix((n, int(np.prod(ext_shape))))
            if g.dim == 1:
                for i in range(n):
                    for off, c in offsets_and_coeffs:
                        S[i, i + 1 + off[0]] += c
            else:
                n1, n2 = g.shape
                E2 = ext_shape[1]
                for i in range(n1):
                    for j in range(n2):
                        row = i * n2 + j
                        for off, c in offsets_and_coeffs:
                            S[row, (i + 1 + off[0]) * E2 + (j + 1 + off[1])] += c
            return S.tocsr()

        A = self.A.A
        if g.dim == 1:
            h = g.h[0]
            grads = [shift_matrix([((1,), 1 / (2 * h)), ((-1,), -1 / (2 * h))])]
            xi = shift_matrix(
                [((1,), A[0, 0] / h**2), ((0,), -2 * A[0, 0] / h**2), ((-1,), A[0, 0] / h**2)]
            )
            val = shift_matrix([((0,), 1.0)])
        else:
            h1, h2 = g.h
            grads = [
                shift_matrix([((1, 0), 1 / (2 * h1)), ((-1, 0), -1 / (2 * h1))]),
                shift_matrix([((0, 1), 1 / (2 * h2)), ((0, -1), -1 / (2 * h2))]),
            ]
            terms = [
                ((1, 0), A[0, 0] / h1**2), ((0, 0), -2 * A[0, 0] / h1**2 - 2 * A[1, 1] / h2**2),
                ((-1, 0), A[0, 0] / h1**2),
                ((0, 1), A[1, 1] / h2**2), ((0, -1), A[1, 1] / h2**2),
            ]
            if A[0, 1] != 0.0:
                c = 2 * A[0, 1] / (4 * h1 * h2)
                terms += [((1, 1), c), ((-1, -1), c), ((1, -1), -c), ((-1, 1), -c)]
            xi = shift_matrix(terms)
            val = shift_matrix([((0, 0), 1.0)])

        T, t0 = self.T, self.t0
        self.V = (val @ T).tocsr()
        self.v0 = val @ t0
        self.G = [(mat @ T).tocsr() for mat in grads]
        self.g0 = [mat @ t0 for mat in grads]
        self.X = (xi @ T).tocsr()
        self.x0 = xi @ t0

    # -- evaluation -------------------------------------------------------

    def full_values(self, v: np.ndarray) -> np.ndarray:
        return self.V @ v + self.v0

    def jet(self, v: np.ndarray) -> Jet2Field:
        """Reduced jet at every grid node from the interior unknown vector."""
        eta = self.full_values(v)
        p = np.column_stack([Gk @ v + gk0 for Gk, gk0 in zip(self.G, self.g0)])
        xi = self.X @ v + self.x0
        return Jet2Field(grid=self.grid, points=self.grid.points, eta=eta, p=p, xi=xi)

    def jet_of_field(self, fld: ScalarField) -> Jet2Field:
        return self.jet(self.interior_of(fld))

    def interior_of(self, fld: ScalarField) -> np.ndarray:
        return fld.values[self.interior_index]

    def field_from_interior(self, v: np.ndarray) -> ScalarField:
        vals = np.empty(self.grid.n_nodes)
        vals[self.interior_index] = v
        vals[self.grid.boundary_mask] = self._bval[self.grid.boundary_mask]
        return ScalarField(self.grid, vals)

    def adjoint_value(self, w: np.ndarray) -> np.ndarray:
        return self.V.T @ w

    def adjoint_gradient(self, ws: np.ndarray) -> np.ndarray:
        out = np.zeros(self.grid.n_interior)
        for k, (Gk, _) in enumerate(zip(self.G, self.g0)):
            out += Gk.T @ ws[:, k]
        return out

    def adjoint_xi(self, w: np.ndarray) -> np.ndarray:
        return self.X.T @ w


def clamp_boundary(fld: ScalarField, data: BoundaryData, A: EllipticMatrix | None = None):
    """Ghost-extended view of a field under clamped data.

    Returns (operators, extended_values): the extended array has one ghost
    layer per face, with ghosts chosen by second-order reflection so the
    central difference at each boundary node matches the prescribed slope.
    """
    if A is None:
        A = EllipticMatrix(np.eye(fld.grid.dim))
    ops = ClampedOperators(fld.grid, data, A)
    v = ops.interior_of(fld)
    ext = (ops.T @ v + ops.t0).reshape(ops.ext_shape)
    return ops, ext
