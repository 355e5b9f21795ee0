"""The supremand F(x, eta, p, xi): evaluation, derivatives, zero level,
assumption checks, and convexity certificates for |F|^pbar.

Built-in families: pure_xi, additive a(x,eta)+A(xi), multiplicative
a(x,eta)*A(xi), and monotone-odd wrapping Phi(F). Derivatives are analytic;
`validate_spec` cross-checks them against central finite differences.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

__all__ = [
    "SupremandSpec",
    "ConvexityCertificate",
    "AssumptionReport",
    "make_pure_xi",
    "make_additive",
    "make_multiplicative",
    "wrap_phi",
    "certify_convexity",
    "check_eigenframe_condition",
    "check_assumptions",
    "validate_spec",
    "reduced_hessian_of_power",
]


class SupremandError(ValueError):
    pass


@dataclass(frozen=True)
class SupremandSpec:
    """F with analytic partials, zero-level map, and growth data.

    All callables are vectorized: x is (m, dim) (dim 1 or 2), eta/xi are (m,),
    p is (m, n_p). The reduced Hessian is laid out over (eta, p, xi), i.e. a
    (m, 2 + n_p, 2 + n_p) array.
    """

    name: str
    eval: Callable
    d_eta: Callable
    d_p: Callable          # (m, n_p)
    d_xi: Callable
    hess: Callable         # (m, 2 + n_p, 2 + n_p)
    zero_level: Callable   # (x, eta, p) -> (m,)
    c: float
    alpha: float = 0.5
    growth_C: Callable[[np.ndarray], np.ndarray] = lambda t: 1.0 + t
    n_p: int = 0           # explicit gradient slots (0 = no p-dependence)
    wrapper: Optional[Callable] = None  # odd monotone Phi applied for reporting
    params: dict = field(default_factory=dict)

    @property
    def has_gradient_dependence(self) -> bool:
        return self.n_p > 0

    def reduced_gradient(self, x, eta, p, xi) -> np.ndarray:
        """Partial gradient over (eta, p, xi): (m, 2 + n_p)."""
        m = len(np.atleast_1d(eta))
        g = np.zeros((m, 2 + self.n_p))
        g[:, 0] = self.d_eta(x, eta, p, xi)
        if self.n_p:
            g[:, 1:1 + self.n_p] = self.d_p(x, eta, p, xi)
        g[:, -1] = self.d_xi(x, eta, p, xi)
        return g

    def report_value(self, t: np.ndarray) -> np.ndarray:
        """Apply the recorded odd monotone wrapper (if any) to supremand values."""
        return self.wrapper(t) if self.wrapper is not None else t


def _bisect_newton(func, dfunc, lo, hi, tol=1e-12, max_iter=200):
    """Root of a strictly increasing scalar function on [lo, hi]."""
    flo, fhi = func(lo), func(hi)
    k = 0
    while flo > 0 or fhi < 0:
        width = hi - lo
        if flo > 0:
            lo, hi = lo - max(width, 1.0), lo
        else:
            lo, hi = hi, hi + max(width, 1.0)
        flo, fhi = func(lo), func(hi)
        k += 1
        if k > 200:
            raise SupremandError("zero-level bracketing failed: function not invertible on range")
    x = 0.5 * (lo + hi)
    for _ in range(max_iter):
        fx = func(x)
        if fx > 0:
            hi = x
        else:
            lo = x
        d = dfunc(x)
        step = fx / d if d > 0 else np.inf
        xn = x - step
        if not (lo < xn < hi):
            xn = 0.5 * (lo + hi)
        if abs(func(xn)) <= tol or hi - lo <= tol:
            return xn
        x = xn
    return x


def _invert_monotone(A_func, A_prime, targets: np.ndarray) -> np.ndarray:
    out = np.empty(len(targets))
    for i, t in enumerate(targets):
        out[i] = _bisect_newton(lambda s: A_func(s) - t, A_prime, -1.0, 1.0)
    return out


def make_pure_xi() -> SupremandSpec:
    """F = xi."""
    zeros = lambda eta: np.zeros(len(np.atleast_1d(eta)))
    return SupremandSpec(
        name="pure_xi",
        eval=lambda x, eta, p, xi: np.asarray(xi, dtype=float) + 0.0,
        d_eta=lambda x, eta, p, xi: zeros(eta),
        d_p=lambda x, eta, p, xi: np.zeros((len(np.atleast_1d(eta)), 0)),
        d_xi=lambda x, eta, p, xi: np.ones(len(np.atleast_1d(eta))),
        hess=lambda x, eta, p, xi: np.zeros((len(np.atleast_1d(eta)), 2, 2)),
        zero_level=lambda x, eta, p: zeros(eta),
        c=1.0,
    )


def make_additive(a, a_eta, a_etaeta, A_func, A_prime, A_second, c: float,
                  name: str = "additive", params: dict | None = None) -> SupremandSpec:
    """F(x, eta, xi) = a(x, eta) + A(xi) with A strictly increasing, A' >= c.

    `a*` take (x, eta) vectorized; `A*` take xi vectorized. The zero level
    xi_bar = A^{-1}(-a(x, eta)) is found by safeguarded bisection plus Newton.
    """

    def evalF(x, eta, p, xi):
        return a(x, eta) + A_func(np.asarray(xi, dtype=float))

    def hess(x, eta, p, xi):
        m = len(np.atleast_1d(eta))
        H = np.zeros((m, 2, 2))
        H[:, 0, 0] = a_etaeta(x, eta)
        H[:, 1, 1] = A_second(np.asarray(xi, dtype=float))
        return H

    def zero_level(x, eta, p):
        return _invert_monotone(lambda s: A_func(np.asarray([s]))[0],
                                lambda s: A_prime(np.asarray([s]))[0],
                                -np.asarray(a(x, eta), dtype=float))

    return SupremandSpec(
        name=name,
        eval=evalF,
        d_eta=lambda x, eta, p, xi: a_eta(x, eta) + np.zeros(len(np.atleast_1d(eta))),
        d_p=lambda x, eta, p, xi: np.zeros((len(np.atleast_1d(eta)), 0)),
        d_xi=lambda x, eta, p, xi: A_prime(np.asarray(xi, dtype=float))
        + np.zeros(len(np.atleast_1d(eta))),
        hess=hess,
        zero_level=zero_level,
        c=c,
        params=params or {},
    )


def make_multiplicative(a, a_eta, a_etaeta, A_func, A_prime, A_second, c: float,
                        name: str = "multiplicative", params: dict | None = None,
                        sample_box=None) -> SupremandSpec:
    """F(x, eta, xi) = a(x, eta) * A(xi), a >= c > 0, A' >= c, A(0) = 0.

    The zero level is the constant root of A (independent of x and eta).
    """
    if sample_box is not None:
        xs, etas = sample_box
        av = a(xs, etas)
        if np.min(av) < c:
            raise SupremandError(f"a not uniformly positive: min {np.min(av):g} < c={c:g}")

    xi0 = _bisect_newton(lambda s: A_func(np.asarray([s]))[0],
                         lambda s: A_prime(np.asarray([s]))[0], -1.0, 1.0)

    def evalF(x, eta, p, xi):
        return a(x, eta) * A_func(np.asarray(xi, dtype=float))

    def hess(x, eta, p, xi):
        m = len(np.atleast_1d(eta))
        xi = np.asarray(xi, dtype=float)
        H = np.zeros((m, 2, 2))
        H[:, 0, 0] = a_etaeta(x, eta) * A_func(xi)
        H[:, 0, 1] = H[:, 1, 0] = a_eta(x, eta) * A_prime(xi)
        H[:, 1, 1] = a(x, eta) * A_second(xi)
        return H

    return SupremandSpec(
        name=name,
        eval=evalF,
        d_eta=lambda x, eta, p, xi: a_eta(x, eta) * A_func(np.asarray(xi, dtype=float)),
        d_p=lambda x, eta, p, xi: np.zeros((len(np.atleast_1d(eta)), 0)),
        d_xi=lambda x, eta, p, xi: a(x, eta) * A_prime(np.asarray(xi, dtype=float)),
        hess=hess,
        zero_level=lambda x, eta, p: np.full(len(np.atleast_1d(eta)), xi0),
        c=c,
        params=params or {},
    )


def wrap_phi(spec: SupremandSpec, phi: Callable, name: str = "phi_wrapped",
             samples: np.ndarray | None = None) -> SupremandSpec:
    """Record an odd strictly increasing wrapper Phi on top of a spec.

    Minimizer sets of sup|F| and sup|Phi(F)| coincide, so the solver keeps
    optimizing F and only reports wrapped values. Oddness and monotonicity
    are verified on samples.
    """
    t = samples if samples is not None else np.linspace(-3.0, 3.0, 41)
    vals = phi(t)
    if not np.allclose(vals, -phi(-t), atol=1e-10):
        raise SupremandError("wrapper is not odd on samples")
    tt = np.sort(t)
    if np.any(np.diff(phi(tt)) <= 0):
        raise SupremandError("wrapper is not strictly increasing on samples")
    base = spec.wrapper
    new = phi if base is None else (lambda s: phi(base(s)))
    return SupremandSpec(
        name=name, eval=spec.eval, d_eta=spec.d_eta, d_p=spec.d_p, d_xi=spec.d_xi,
        hess=spec.hess, zero_level=spec.zero_level, c=spec.c, alpha=spec.alpha,
        growth_C=spec.growth_C, n_p=spec.n_p, wrapper=new, params=dict(spec.params),
    )


# ---------------------------------------------------------------------------
# sampling helpers

def _sample_box(box, density, dim, n_p):
    """Lattice over Omega x L x M x R. box = (x_box, L, M, R)."""
    x_box, L, M, R = box
    x_lo = np.atleast_1d(np.asarray(x_box[0], dtype=float))
    x_hi = np.atleast_1d(np.asarray(x_box[1], dtype=float))
    axes = [np.linspace(x_lo[k], x_hi[k], density) for k in range(dim)]
    axes.append(np.linspace(L[0], L[1], density))
    if n_p:
        for k in range(n_p):
            axes.append(np.linspace(M[0][k], M[1][k], density))
    axes.append(np.linspace(R[0], R[1], density))
    mesh = np.meshgrid(*axes, indexing="ij")
    cols = [m.ravel() for m in mesh]
    x = np.column_stack(cols[:dim])
    eta = cols[dim]
    p = np.column_stack(cols[dim + 1: dim + 1 + n_p]) if n_p else np.zeros((len(eta), 0))
    xi = cols[-1]
    return x, eta, p, xi


def _semiconvexity_matrices(spec, x, eta, p, xi):
    F = spec.eval(x, eta, p, xi)
    g = spec.reduced_gradient(x, eta, p, xi)
    H = spec.hess(x, eta, p, xi)
    return F, g, H


@dataclass
class ConvexityCertificate:
    box: tuple
    pbar: Optional[float]
    worst_eigenvalue: float
    sample_count: int

    @property
    def certified(self) -> bool:
        return self.pbar is not None


def certify_convexity(spec: SupremandSpec, box, pbar_candidates: Sequence[float],
                      sample_density: int = 9, tol: float = -1e-9) -> ConvexityCertificate:
    """Smallest candidate pbar making F*H + (pbar-1) g (x) g PSD on the sampled box."""
    cands = list(pbar_candidates)
    if any(np.diff(cands) <= 0):
        raise SupremandError("pbar candidates must be strictly ascending")
    if any(c < 2 for c in cands):
        raise SupremandError("pbar candidates must be >= 2")
    x, eta, p, xi = _sample_box(box, sample_density, x_dim_of_box(box), spec.n_p)
    F, g, H = _semiconvexity_matrices(spec, x, eta, p, xi)
    worst = -np.inf
    result = None
    for pbar in cands:
        Mmat = F[:, None, None] * H + (pbar - 1) * g[:, :, None] * g[:, None, :]
        w = float(np.linalg.eigvalsh(Mmat)[:, 0].min())
        worst = w   # min eigenvalue is nondecreasing in pbar, so last = best
        if w >= tol:
            result = pbar
            break
    return ConvexityCertificate(box=box, pbar=result, worst_eigenvalue=float(worst),
                                sample_count=len(eta))


def x_dim_of_box(box) -> int:
    return len(np.atleast_1d(np.asarray(box[0][0], dtype=float)))


def check_eigenframe_condition(spec: SupremandSpec, box, sample_density: int = 9,
                               coupling_tol: float = 1e-8):
    """Check that (grad F, rotated grad F) diagonalize the Hessian of |F|^2.

    Only valid for specs without explicit gradient dependence; the two frame
    vectors live in the (eta, xi) plane. Returns (passed, sigma1_inf,
    sigma2_min, worst_coupling).
    """
    if spec.has_gradient_dependence:
        raise SupremandError("eigenframe condition requires no explicit gradient dependence")
    x, eta, p, xi = _sample_box(box, sample_density, x_dim_of_box(box), 0)
    F, g, H = _semiconvexity_matrices(spec, x, eta, p, xi)
    M = 2.0 * (F[:, None, None] * H + g[:, :, None] * g[:, None, :])  # d^2 |F|^2
    star_g = np.column_stack([-g[:, 1], g[:, 0]])
    gn2 = np.einsum("mi,mi->m", g, g)
    Mg = np.einsum("mij,mj->mi", M, g)
    Msg = np.einsum("mij,mj->mi", M, star_g)
    coupling = np.einsum("mi,mi->m", g, Msg) / np.maximum(gn2, 1e-300)
    scale = np.abs(M).max(axis=(1, 2)) + 1.0
    worst_coupling = float(np.abs(coupling / scale).max())
    sigma1 = np.einsum("mi,mi->m", g, Mg) / np.maximum(gn2, 1e-300)
    sigma2 = np.einsum("mi,mi->m", star_g, Msg) / np.maximum(gn2, 1e-300)
    passed = worst_coupling <= coupling_tol and sigma2.min() >= -1e-9
    return passed, float(sigma1.min()), float(sigma2.min()), worst_coupling


@dataclass
class AssumptionReport:
    """Sampling-based (heuristic) check of the monotonicity and growth assumptions."""

    monotonicity_ok: bool          # d_xi F >= c
    monotonicity_worst: float
    semiconvexity_ok: bool         # d2_xixi F >= -1/c
    semiconvexity_worst: float
    zero_level_growth_ok: bool     # |xi_bar| <= C(|eta| + |p|)
    zero_level_growth_worst: float
    zero_level_alpha_ok: bool      # |xi_bar| <= ((|eta|+|p|)^alpha + 1)/c
    zero_level_alpha_worst: float
    bounded_dxi_ok: bool           # (1.17-style) |d_xi F| <= C(|eta|+|p|)
    heuristic: bool = True

    @property
    def all_ok(self) -> bool:
        return (self.monotonicity_ok and self.semiconvexity_ok
                and self.zero_level_growth_ok and self.zero_level_alpha_ok)


def check_assumptions(spec: SupremandSpec, box, sample_density: int = 9) -> AssumptionReport:
    x, eta, p, xi = _sample_box(box, sample_density, x_dim_of_box(box), spec.n_p)
    dxi = spec.d_xi(x, eta, p, xi)
    H = spec.hess(x, eta, p, xi)
    hxx = H[:, -1, -1]
    xibar = spec.zero_level(x, eta, p)
    mag = np.abs(eta) + np.abs(p).sum(axis=1)
    env = spec.growth_C(mag)
    alpha_env = (mag ** spec.alpha + 1.0) / spec.c
    mono_worst = float(dxi.min())
    semi_worst = float(hxx.min())
    zg = np.abs(xibar) - env
    za = np.abs(xibar) - alpha_env
    return AssumptionReport(
        monotonicity_ok=mono_worst >= spec.c - 1e-12,
        monotonicity_worst=mono_worst,
        semiconvexity_ok=semi_worst >= -1.0 / spec.c - 1e-12,
        semiconvexity_worst=semi_worst,
        zero_level_growth_ok=bool(np.all(zg <= 1e-10)),
        zero_level_growth_worst=float(zg.max()),
        zero_level_alpha_ok=bool(np.all(za <= 1e-10)),
        zero_level_alpha_worst=float(za.max()),
        bounded_dxi_ok=bool(np.all(np.abs(dxi) <= env + 1e-10)),
    )


def validate_spec(spec: SupremandSpec, box, n_samples: int = 50, seed: int = 0,
                  rtol: float = 1e-6) -> None:
    """Check supplied partials against central finite differences, and the
    zero-level consistency F(xi_bar) = 0; raises on failure."""
    rng = np.random.default_rng(seed)
    x_lo = np.atleast_1d(np.asarray(box[0][0], dtype=float))
    x_hi = np.atleast_1d(np.asarray(box[0][1], dtype=float))
    dim = len(x_lo)
    x = rng.uniform(x_lo, x_hi, size=(n_samples, dim))
    eta = rng.uniform(box[1][0], box[1][1], size=n_samples)
    p = (rng.uniform(np.asarray(box[2][0]), np.asarray(box[2][1]), size=(n_samples, spec.n_p))
         if spec.n_p else np.zeros((n_samples, 0)))
    xi = rng.uniform(box[3][0], box[3][1], size=n_samples)
    h = 1e-6

    def fd(pert_eta=0.0, pert_xi=0.0):
        return spec.eval(x, eta + pert_eta, p, xi + pert_xi)

    scale = np.abs(spec.eval(x, eta, p, xi)).max() + 1.0
    d_eta_fd = (fd(pert_eta=h) - fd(pert_eta=-h)) / (2 * h)
    d_xi_fd = (fd(pert_xi=h) - fd(pert_xi=-h)) / (2 * h)
    if not np.allclose(spec.d_eta(x, eta, p, xi), d_eta_fd, rtol=rtol, atol=rtol * scale):
        raise SupremandError("d_eta does not match finite differences")
    if not np.allclose(spec.d_xi(x, eta, p, xi), d_xi_fd, rtol=rtol, atol=rtol * scale):
        raise SupremandError("d_xi does not match finite differences")
    xibar = spec.zero_level(x, eta, p)
    resid = np.abs(spec.eval(x, eta, p, xibar))
    if resid.max() > 1e-10:
        raise SupremandError(f"zero level inconsistent: max |F(xi_bar)| = {resid.max():g}")
    lower = spec.c * np.abs(xi - xibar) - np.abs(spec.eval(x, eta, p, xi))
    if lower.max() > 1e-8 * scale:
        raise SupremandError("monotonicity lower bound |F| >= c|xi - xi_bar| violated")


def reduced_hessian_of_power(spec: SupremandSpec, x, eta, p, xi, power: float) -> np.ndarray:
    """Analytic reduced Hessian of |F|^power where F != 0."""
    F, g, H = _semiconvexity_matrices(spec, x, eta, p, xi)
    M = F[:, None, None] * H + (power - 1) * g[:, :, None] * g[:, None, :]
    return power * np.abs(F)[:, None, None] ** (power - 2) * M
