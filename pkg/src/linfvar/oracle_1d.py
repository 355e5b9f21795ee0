"""Exact ground truth for the one-dimensional flagship problem: minimize
the sup norm of u'' over [a, b] with prescribed endpoint values and slopes.

The minimizer is piecewise quadratic with a single curvature flip: u'' equals
+s then -s (or the reverse) with one breakpoint, unless the four boundary
conditions are interpolable by a single quadratic, in which case that
quadratic wins with s = |constant curvature|.

The solver here is deliberately independent of the variational machinery:
for each sign pattern it dense-scans the breakpoint, solving a linear
equation for the magnitude at each candidate, and polishes the best bracket
by bisection. It serves as the oracle the main solver is tested against.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["PiecewiseQuadratic", "solve_exact", "optimality_witness"]

_SCAN_POINTS = 10_000
_BISECT_TOL = 1e-12


@dataclass(frozen=True)
class PiecewiseQuadratic:
    """u'' = sigma1*s on (a, xbar), u'' = -sigma1*s on (xbar, b), with u and
    u' continuous at the breakpoint and all four boundary conditions met."""

    a: float
    b: float
    ua: float
    sa: float
    xbar: float
    s: float
    sigma1: int          # sign of the curvature on the left piece
    smooth: bool = False  # data admitted a single quadratic

    @property
    def sign_pattern(self) -> str:
        return "+-" if self.sigma1 > 0 else "-+"

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        c1 = self.sigma1 * self.s
        left = self.ua + self.sa * (x - self.a) + 0.5 * c1 * (x - self.a) ** 2
        # state at the breakpoint, then continue with flipped curvature
        ub_ = self.ua + self.sa * (self.xbar - self.a) + 0.5 * c1 * (self.xbar - self.a) ** 2
        sb_ = self.sa + c1 * (self.xbar - self.a)
        right = ub_ + sb_ * (x - self.xbar) - 0.5 * c1 * (x - self.xbar) ** 2
        if self.smooth:
            return left
        return np.where(x <= self.xbar, left, right)

    def derivative(self, x):
        x = np.asarray(x, dtype=float)
        c1 = self.sigma1 * self.s
        left = self.sa + c1 * (x - self.a)
        sb_ = self.sa + c1 * (self.xbar - self.a)
        right = sb_ - c1 * (x - self.xbar)
        if self.smooth:
            return left
        return np.where(x <= self.xbar, left, right)

    def second_derivative(self, x):
        x = np.asarray(x, dtype=float)
        c1 = self.sigma1 * self.s
        if self.smooth:
            return np.full_like(x, c1)
        return np.where(x <= self.xbar, c1, -c1)


def _endpoint_state(a, ua, sa, sigma1, s, xbar, b):
    """Value and slope at b for the one-breakpoint ansatz."""
    c1 = sigma1 * s
    ub_ = ua + sa * (xbar - a) + 0.5 * c1 * (xbar - a) ** 2
    sb_ = sa + c1 * (xbar - a)
    val = ub_ + sb_ * (b - xbar) - 0.5 * c1 * (b - xbar) ** 2
    slope = sb_ - c1 * (b - xbar)
    return val, slope


def _magnitude_for(a, b, ua, sa, ub, sb, sigma1, xbar):
    """s matching the endpoint slope for a fixed breakpoint, and the
    remaining value mismatch at b (the scan's root function)."""
    # slope at b: sa + sigma1*s*(2(xbar - a) - (b - a))  =>  linear in s
    coeff = sigma1 * (2.0 * (xbar - a) - (b - a))
    if coeff == 0.0:
        return None, None
    s = (sb - sa) / coeff
    if s < 0.0:
        return None, None
    val, _ = _endpoint_state(a, ua, sa, sigma1, s, xbar, b)
    return s, val - ub


def _hermite_cubic_coeff(a, b, ua, sa, ub, sb):
    """Leading (cubic) coefficient of the Hermite interpolant on [a, b]."""
    h = b - a
    # standard Hermite basis expansion in t = (x - a)/h
    return (2.0 * (ua - ub) + h * (sa + sb)) / h**3


def solve_exact(a: float, b: float, ua: float, sa: float,
                ub: float, sb: float) -> PiecewiseQuadratic:
    """Minimal-magnitude piecewise-quadratic interpolant of the clamped data.

    Dense scan of the breakpoint (1e4 points per sign pattern) with a linear
    solve for the magnitude at each candidate, then bisection on the value
    mismatch to 1e-12. Quadratic-interpolable data is detected exactly by the
    vanishing cubic coefficient of the Hermite interpolant.
    """
    if not a < b:
        raise ValueError("need a < b")
    if abs(_hermite_cubic_coeff(a, b, ua, sa, ub, sb)) <= 1e-12:
        # quadratic interpolant exists; curvature is constant
        curv = (sb - sa) / (b - a)
        return PiecewiseQuadratic(a, b, ua, sa, xbar=0.5 * (a + b),
                                  s=abs(curv), sigma1=int(np.sign(curv)) or 1,
                                  smooth=True)

    best = None
    xs = np.linspace(a, b, _SCAN_POINTS)[1:-1]
    for sigma1 in (1, -1):
        mism = np.full(len(xs), np.nan)
        svals = np.full(len(xs), np.nan)
        for k, xb in enumerate(xs):
            s, m = _magnitude_for(a, b, ua, sa, ub, sb, sigma1, xb)
            if s is not None:
                svals[k], mism[k] = s, m
        ok = np.isfinite(mism)
        idx = np.flatnonzero(ok[:-1] & ok[1:] & (np.sign(mism[:-1]) != np.sign(mism[1:])))
        for k in idx:
            lo, hi = xs[k], xs[k + 1]
            flo = mism[k]
            while hi - lo > _BISECT_TOL:
                mid = 0.5 * (lo + hi)
                _, fm = _magnitude_for(a, b, ua, sa, ub, sb, sigma1, mid)
                if fm is None:
                    break
                if np.sign(fm) == np.sign(flo):
                    lo, flo = mid, fm
                else:
                    hi = mid
            xb = 0.5 * (lo + hi)
            s, _ = _magnitude_for(a, b, ua, sa, ub, sb, sigma1, xb)
            if s is not None and (best is None or s < best.s):
                best = PiecewiseQuadratic(a, b, ua, sa, xbar=xb, s=s, sigma1=sigma1)
        # exact-root candidates (mismatch ~ 0 without a sign change)
        for k in np.flatnonzero(ok & (np.abs(mism) < 1e-11)):
            s = svals[k]
            if best is None or s < best.s:
                best = PiecewiseQuadratic(a, b, ua, sa, xbar=xs[k], s=s, sigma1=sigma1)
    if best is None:
        # degenerate data (e.g. everything zero): the zero function works
        return PiecewiseQuadratic(a, b, ua, sa, xbar=0.5 * (a + b), s=0.0,
                                  sigma1=1, smooth=True)
    return best


def optimality_witness(pq: PiecewiseQuadratic, trials, x: np.ndarray,
                       tol: float | None = None) -> bool:
    """Brute-force optimality evidence: every feasible trial's discrete
    max |w''| must be at least pq.s - tol.

    trials: iterable of arrays of values sampled on the uniform grid x.
    """
    x = np.asarray(x, dtype=float)
    h = x[1] - x[0]
    if tol is None:
        tol = 1e-6 + 10.0 * h
    for w in trials:
        w = np.asarray(w, dtype=float)
        if w.shape != x.shape:
            raise ValueError("trial shape mismatch")
        # feasibility: endpoint values and one-sided slopes
        if (abs(w[0] - pq(x[0])) > 1e-8 or abs(w[-1] - pq(x[-1])) > 1e-8
                or abs((w[1] - w[0]) / h - pq.derivative(x[0])) > 10 * h
                or abs((w[-1] - w[-2]) / h - pq.derivative(x[-1])) > 10 * h):
            raise ValueError("trial violates the clamped data")
        d2 = np.abs(w[:-2] - 2 * w[1:-1] + w[2:]) / h**2
        if d2.max() < pq.s - tol:
            return False
    return True
