"""Certification of a candidate pair (u, f) against the optimality system:
the constancy/sign law, the weak divergence-form residual, constancy of the
supremand magnitude along the candidate, nodal-set extraction, the
positivity probe functional, and directional minimality probes.

The discrete max over grid nodes stands in for the essential supremum
throughout; verdicts are three-valued because residual floors are
h-dependent.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .grid import BoundaryData, ClampedOperators, EllipticMatrix, Grid, ScalarField
from .lp_energy import LpEnergyConfig
from .supremand import SupremandSpec

__all__ = [
    "CertificationReport", "BumpField", "bump_family", "random_probe_family",
    "sign_law_residual", "dual_weak_residual", "constancy_defect", "theta_probe",
    "minimality_probe", "nodal_set", "certify", "NODAL_BAND_CELLS",
]

NODAL_BAND_CELLS = 2.0   # half-width of the excluded band, in units of h


class CharacterizationError(ValueError):
    pass


# ---------------------------------------------------------------------------
# smooth compactly supported test fields with analytic derivatives

@dataclass
class BumpField:
    """Sextic bump (1 - r^2)^3 on the ball |x - center| < radius.

    The cubic power makes the profile C^2 across the bump edge, so the
    discrete elliptic stencil applied to samples matches the analytic
    second-derivative data to O(h^2) uniformly (a squared profile has a
    curvature jump at the edge that would leave an O(h) residue)."""

    center: np.ndarray
    radius: float
    amplitude: float = 1.0

    def value(self, pts: np.ndarray) -> np.ndarray:
        d = (pts - self.center) / self.radius
        r2 = np.sum(d * d, axis=1)
        inside = r2 < 1.0
        out = np.zeros(len(pts))
        out[inside] = self.amplitude * (1.0 - r2[inside]) ** 3
        return out

    def grad(self, pts: np.ndarray) -> np.ndarray:
        d = pts - self.center
        r2 = np.sum((d / self.radius) ** 2, axis=1)
        inside = r2 < 1.0
        out = np.zeros_like(pts)
        coef = -6.0 * self.amplitude * (1.0 - r2[inside]) ** 2 / self.radius ** 2
        out[inside] = coef[:, None] * d[inside]
        return out

    def elliptic(self, pts: np.ndarray, A: EllipticMatrix) -> np.ndarray:
        """A : D^2 of the bump, analytic."""
        d = pts - self.center
        r2 = np.sum((d / self.radius) ** 2, axis=1)
        inside = r2 < 1.0
        out = np.zeros(len(pts))
        trA = np.trace(A.A)
        dAd = np.einsum("mi,ij,mj->m", d[inside], A.A, d[inside])
        q = 1.0 - r2[inside]
        out[inside] = self.amplitude * (
            -6.0 * q ** 2 * trA / self.radius ** 2
            + 24.0 * q * dAd / self.radius ** 4
        )
        return out

    def c2_norm(self, pts: np.ndarray, A: EllipticMatrix) -> float:
        return float(np.abs(self.value(pts)).max()
                     + np.abs(self.grad(pts)).max()
                     + np.abs(self.elliptic(pts, A)).max())


def bump_family(grid: Grid, radius_frac: float = 0.15, stride_frac: float = 0.05) -> list[BumpField]:
    """Bumps on a coarsened interior lattice.

    Radii are a fixed fraction of the shortest box side (not a fixed number
    of cells) so that weak residuals tested against the family shrink as
    O(h^2) under refinement instead of stalling at the stencil error."""
    span = grid.upper - grid.lower
    radius = radius_frac * float(span.min())
    radius = max(radius, 3.0 * float(grid.h.max()))
    lo = grid.lower + radius
    hi = grid.upper - radius
    if np.any(hi <= lo):
        radius = 0.25 * float(span.min())
        lo = grid.lower + radius
        hi = grid.upper - radius
    stride = np.maximum(stride_frac * span, grid.h)
    counts = np.maximum(((hi - lo) / stride).astype(int) + 1, 1)
    axes = [np.linspace(lo[k], hi[k], counts[k]) for k in range(grid.dim)]
    if grid.dim == 1:
        centers = axes[0][:, None]
    else:
        X, Y = np.meshgrid(*axes, indexing="ij")
        centers = np.column_stack([X.ravel(), Y.ravel()])
    return [BumpField(center=c, radius=radius) for c in centers]


def random_probe_family(grid: Grid, count: int, rng: np.random.Generator,
                        n_bumps: int = 3) -> list[list[BumpField]]:
    """Random clamped variations: small sums of bumps (bounded third
    differences by construction). Each probe is a list of bumps."""
    span = grid.upper - grid.lower
    probes = []
    for _ in range(count):
        bumps = []
        for _ in range(n_bumps):
            radius = float(rng.uniform(0.1, 0.3) * span.min())
            center = rng.uniform(grid.lower + radius, grid.upper - radius)
            bumps.append(BumpField(center=np.atleast_1d(center), radius=radius,
                                   amplitude=float(rng.normal())))
        probes.append(bumps)
    return probes


def _probe_jet(bumps: list[BumpField], pts: np.ndarray, A: EllipticMatrix):
    val = sum(b.value(pts) for b in bumps)
    grd = sum(b.grad(pts) for b in bumps)
    ell = sum(b.elliptic(pts, A) for b in bumps)
    return val, grd, ell


# ---------------------------------------------------------------------------
# nodal set

def nodal_set(f: ScalarField) -> tuple[list, float]:
    """Sign-change locations of f and a Lebesgue-measure proxy of the band.

    1D: linear-interpolation zero crossings. 2D: marching-squares cell
    crossings with edge-interpolated points. The proxy is (crossing cell
    count) * h^dim.
    """
    g = f.grid
    vals = f.reshape()
    crossings: list = []
    if g.dim == 1:
        x = g.axes[0]
        s = np.sign(vals)
        for i in range(len(x) - 1):
            if s[i] == 0:
                crossings.append(float(x[i]))
            elif s[i] * s[i + 1] < 0:
                t = vals[i] / (vals[i] - vals[i + 1])
                crossings.append(float(x[i] + t * (x[i + 1] - x[i])))
        if s[-1] == 0:
            crossings.append(float(x[-1]))
        return crossings, len(crossings) * float(g.h[0])
    # 2D marching squares: record a point per crossed cell edge
    n1, n2 = g.shape
    cells = 0
    for i in range(n1 - 1):
        for j in range(n2 - 1):
            corners = vals[i:i + 2, j:j + 2]
            if corners.min() < 0.0 <= corners.max():
                cells += 1
                x0, x1 = g.axes[0][i], g.axes[0][i + 1]
                y0, y1 = g.axes[1][j], g.axes[1][j + 1]
                edges = [
                    ((x0, y0), (x1, y0), corners[0, 0], corners[1, 0]),
                    ((x0, y1), (x1, y1), corners[0, 1], corners[1, 1]),
                    ((x0, y0), (x0, y1), corners[0, 0], corners[0, 1]),
                    ((x1, y0), (x1, y1), corners[1, 0], corners[1, 1]),
                ]
                for p0, p1, v0, v1 in edges:
                    if v0 * v1 < 0:
                        t = v0 / (v0 - v1)
                        crossings.append((p0[0] + t * (p1[0] - p0[0]),
                                          p0[1] + t * (p1[1] - p0[1])))
    return crossings, cells * float(np.prod(g.h))


def _nodal_band_mask(grid: Grid, f_vals: np.ndarray, band_cells: float) -> np.ndarray:
    """True on nodes within band_cells*h of a sign change of f."""
    crossings, _ = nodal_set(ScalarField(grid, f_vals))
    mask = np.zeros(grid.n_nodes, dtype=bool)
    if not crossings:
        return mask
    pts = grid.points
    band = band_cells * grid.h
    for c in crossings:
        c = np.atleast_1d(np.asarray(c, dtype=float))
        mask |= np.all(np.abs(pts - c) <= band + 1e-14, axis=1)
    return mask


# ---------------------------------------------------------------------------
# the individual checks

def _jet_and_F(u: ScalarField, spec: SupremandSpec, A: EllipticMatrix,
               data: BoundaryData, ops: Optional[ClampedOperators] = None):
    if ops is None:
        ops = ClampedOperators(u.grid, data, A)
    jet = ops.jet_of_field(u)
    F = spec.eval(jet.points, jet.eta, jet.p, jet.xi)
    return ops, jet, F


def sign_law_residual(u: ScalarField, f: ScalarField, spec: SupremandSpec, A: EllipticMatrix,
                 data: BoundaryData, band_cells: float = NODAL_BAND_CELLS,
                 ops: Optional[ClampedOperators] = None):
    """Constancy/sign law: F(J^2 u) = sup|F| * sgn(f) off the nodal band.

    Returns (F_inf, residual, sign_violations, worst_node).
    """
    if np.all(f.values == 0.0):
        raise CharacterizationError("f is identically zero; the system degenerates")
    _, jet, F = _jet_and_F(u, spec, A, data, ops)
    F_inf = float(np.abs(F).max())
    band = _nodal_band_mask(u.grid, f.values, band_cells)
    keep = ~band
    target = F_inf * np.sign(f.values[keep])
    resid_nodes = np.abs(F[keep] - target)
    residual = float(resid_nodes.max()) if keep.any() else 0.0
    worst = int(np.flatnonzero(keep)[np.argmax(resid_nodes)]) if keep.any() else -1
    sign_viol = int(np.count_nonzero(np.sign(F[keep]) != np.sign(f.values[keep])))
    return F_inf, residual, sign_viol, worst


def dual_weak_residual(u: ScalarField, f: ScalarField, spec: SupremandSpec,
                      A: EllipticMatrix, data: BoundaryData,
                      test_family: Optional[list[BumpField]] = None,
                      ops: Optional[ClampedOperators] = None) -> float:
    """Max normalized weak residual of the divergence equation over the family."""
    if test_family is None:
        test_family = bump_family(u.grid)
    if not test_family:
        raise CharacterizationError("empty test family")
    _, jet, F = _jet_and_F(u, spec, A, data, ops)
    dxi = spec.d_xi(jet.points, jet.eta, jet.p, jet.xi)
    K = spec.d_eta(jet.points, jet.eta, jet.p, jet.xi) / dxi
    L = (spec.d_p(jet.points, jet.eta, jet.p, jet.xi) / dxi[:, None]
         if spec.n_p else np.zeros((u.grid.n_nodes, u.grid.dim)))
    w = u.grid.quad_weights
    fn1 = float(np.dot(w, np.abs(f.values)))
    pts = u.grid.points
    worst = 0.0
    for psi in test_family:
        val = psi.value(pts)
        grd = psi.grad(pts)
        ell = psi.elliptic(pts, A)
        integrand = f.values * (ell + np.einsum("mi,mi->m", L, grd) + K * val)
        r = abs(float(np.dot(w, integrand))) / (fn1 * psi.c2_norm(pts, A))
        worst = max(worst, r)
    return worst


def constancy_defect(u: ScalarField, spec: SupremandSpec, A: EllipticMatrix,
                       data: BoundaryData, exclude_band: bool = True,
                       ops: Optional[ClampedOperators] = None):
    """Oscillation of |F(J^2 u)| and the discrete max of its gradient.

    Both vanish for minimizers up to O(h); the defect concentrates where F
    changes sign, so that band (from the sign structure of F itself) is
    excluded when requested.
    """
    _, jet, F = _jet_and_F(u, spec, A, data, ops)
    absF = np.abs(F)
    keep = np.ones(u.grid.n_nodes, dtype=bool)
    if exclude_band:
        keep = ~_nodal_band_mask(u.grid, F, NODAL_BAND_CELLS)
        if not keep.any():
            keep[:] = True
    osc = float(absF[keep].max() - absF[keep].min())
    # discrete gradient of the composed field |F|, interior nodes off the band
    fld = ScalarField(u.grid, absF)
    from .grid import apply_gradient
    gF = apply_gradient(fld)
    interior_keep = keep[u.grid.interior_mask]
    gnorm = float(np.abs(gF[interior_keep]).max()) if interior_keep.any() else 0.0
    return osc, gnorm


def theta_probe(u: ScalarField, f: ScalarField, spec: SupremandSpec, A: EllipticMatrix,
                data: BoundaryData, variations: list,
                ops: Optional[ClampedOperators] = None) -> tuple[float, list]:
    """Minimum over the family of the positivity probe functional.

    Each variation is a list of BumpFields (clamped-zero by construction).
    The probe is the discrete max over nodes of
    sgn(f) * (dF_eta psi + dF_p . Dpsi + dF_xi A:D^2 psi).
    """
    _, jet, F = _jet_and_F(u, spec, A, data, ops)
    d_eta = spec.d_eta(jet.points, jet.eta, jet.p, jet.xi)
    d_xi = spec.d_xi(jet.points, jet.eta, jet.p, jet.xi)
    d_p = (spec.d_p(jet.points, jet.eta, jet.p, jet.xi)
           if spec.n_p else np.zeros((u.grid.n_nodes, u.grid.dim)))
    sgn = np.sign(f.values)
    pts = u.grid.points
    values = []
    for bumps in variations:
        if isinstance(bumps, BumpField):
            bumps = [bumps]
        val, grd, ell = _probe_jet(bumps, pts, A)
        if np.abs(val).max() == 0.0 and np.abs(ell).max() == 0.0:
            raise CharacterizationError("probe variation is identically zero")
        theta = float(np.max(sgn * (d_eta * val + np.einsum("mi,mi->m", d_p, grd)
                                    + d_xi * ell)))
        values.append(theta)
    return min(values), values


def minimality_probe(u: ScalarField, spec: SupremandSpec, A: EllipticMatrix,
                     data: BoundaryData, family: list, t_grid=None,
                     slack: float = 1e-9,
                     ops: Optional[ClampedOperators] = None) -> list:
    """Falsification probe: record every direction/step with a strict decrease
    of the discrete sup beyond slack. Empty list = consistent with minimality
    at probe resolution."""
    if ops is None:
        ops = ClampedOperators(u.grid, data, A)
    jet = ops.jet_of_field(u)
    F0 = float(np.abs(spec.eval(jet.points, jet.eta, jet.p, jet.xi)).max())
    if t_grid is None:
        base = F0 if F0 > 0 else 1.0
        t_grid = [s * base for s in (-1e-1, -1e-2, -1e-3, 1e-3, 1e-2, 1e-1)]
    pts = u.grid.points
    v0 = ops.interior_of(u)
    violations = []
    for idx, bumps in enumerate(family):
        if isinstance(bumps, BumpField):
            bumps = [bumps]
        val, grd, ell = _probe_jet(bumps, pts, A)
        # normalize to unit sup of the elliptic trace
        scale = np.abs(ell).max()
        if scale == 0.0:
            continue
        val, grd, ell = val / scale, grd / scale, ell / scale
        for t in t_grid:
            # jets are affine in the interior values; the probe's own jet is
            # analytic, so compose directly
            eta = jet.eta + t * val
            pgrad = jet.p + t * grd
            xi = jet.xi + t * ell
            Ft = float(np.abs(spec.eval(pts, eta, pgrad, xi)).max())
            if Ft < F0 - slack:
                violations.append({"probe": idx, "t": float(t), "F_inf": Ft})
    return violations


# ---------------------------------------------------------------------------
# combined certification

@dataclass
class CertificationReport:
    F_inf: float
    sign_residual: float
    sign_violations: int
    weak_residual: float
    constancy_osc: float
    constancy_grad: float
    nodal_points: list
    nodal_measure: float
    theta_min: Optional[float]
    probe_violations: list
    band_cells: float
    verdict: str = "inconclusive"   # pass | fail | inconclusive
    details: dict = field(default_factory=dict)


def certify(u: ScalarField, f: ScalarField, spec: SupremandSpec, A: EllipticMatrix,
            data: BoundaryData, seed: int = 0, n_probes: int = 50,
            sign_rtol: float = 0.05, weak_tol: float = 1e-3,
            band_cells: float = NODAL_BAND_CELLS) -> CertificationReport:
    """Run every check; verdict is three-valued (residuals between the
    tolerance and 10x the tolerance are inconclusive)."""
    ops = ClampedOperators(u.grid, data, A)
    rng = np.random.default_rng(seed)
    F_inf, sres, sign_viol, worst = sign_law_residual(u, f, spec, A, data, band_cells, ops=ops)
    wres = dual_weak_residual(u, f, spec, A, data, ops=ops)
    osc, gnorm = constancy_defect(u, spec, A, data, ops=ops)
    nodal_pts, measure = nodal_set(f)
    probes = random_probe_family(u.grid, n_probes, rng)
    theta_min, _ = theta_probe(u, f, spec, A, data, probes, ops=ops)
    violations = minimality_probe(u, spec, A, data, probes, ops=ops)

    scale = max(F_inf, 1e-30)
    sign_rel = sres / scale
    hard_fail = (sign_rel > 10 * sign_rtol or wres > 10 * weak_tol
                 or violations or sign_viol > 0)
    clean = sign_rel <= sign_rtol and wres <= weak_tol and not violations and sign_viol == 0
    verdict = "fail" if hard_fail else ("pass" if clean else "inconclusive")
    return CertificationReport(
        F_inf=F_inf, sign_residual=sres, sign_violations=sign_viol,
        weak_residual=wres, constancy_osc=osc, constancy_grad=gnorm,
        nodal_points=nodal_pts, nodal_measure=measure, theta_min=theta_min,
        probe_violations=violations, band_cells=band_cells, verdict=verdict,
        details={"worst_sign_node": worst},
    )
