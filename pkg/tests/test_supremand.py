"""Supremand families: partials, zero levels, wrappers, certificates."""

import numpy as np
import pytest

from linfvar.supremand import (SupremandError, certify_convexity,
                               check_assumptions, check_eigenframe_condition,
                               make_additive, make_multiplicative,
                               make_pure_xi, reduced_hessian_of_power,
                               validate_spec, wrap_phi)

BOX = (((0.0,), (1.0,)), (-1.0, 1.0), ((-1.0,), (1.0,)), (-1.5, 1.5))

_Z = lambda x, eta: np.zeros(len(np.atleast_1d(eta)))


def _cubic_additive(k=0.1, slope=0.5):
    return make_additive(
        a=lambda x, eta: slope * np.asarray(eta, dtype=float),
        a_eta=lambda x, eta: np.full(len(np.atleast_1d(eta)), slope),
        a_etaeta=_Z,
        A_func=lambda xi: xi + k * xi ** 3,
        A_prime=lambda xi: 1 + 3 * k * xi ** 2,
        A_second=lambda xi: 6 * k * xi, c=1.0)


def test_pure_xi_evaluation():
    spec = make_pure_xi()
    x = np.zeros((5, 1))
    xi = np.linspace(-2, 2, 5)
    assert np.allclose(spec.eval(x, np.zeros(5), np.zeros((5, 0)), xi), xi)
    assert np.allclose(spec.zero_level(x, np.zeros(5), np.zeros((5, 0))), 0.0)
    assert spec.n_p == 0


def test_additive_zero_level_is_a_root():
    spec = _cubic_additive()
    x = np.zeros((7, 1))
    eta = np.linspace(-2, 2, 7)
    p = np.zeros((7, 0))
    xibar = spec.zero_level(x, eta, p)
    assert np.abs(spec.eval(x, eta, p, xibar)).max() < 1e-10


def test_multiplicative_requires_positive_weight():
    bad = dict(
        a=lambda x, eta: np.asarray(eta, dtype=float),   # vanishes at eta=0
        a_eta=lambda x, eta: np.ones(len(np.atleast_1d(eta))),
        a_etaeta=_Z,
        A_func=lambda xi: np.asarray(xi, dtype=float),
        A_prime=lambda xi: np.ones(len(np.atleast_1d(xi))),
        A_second=lambda xi: np.zeros(len(np.atleast_1d(xi))))
    etas = np.linspace(-1, 1, 9)
    with pytest.raises(SupremandError):
        make_multiplicative(**bad, c=0.5,
                            sample_box=(np.zeros((9, 1)), etas))


def test_partials_against_finite_differences():
    spec = _cubic_additive()
    box = BOX
    # validate_spec raises on mismatch; returning without error is the pass
    validate_spec(spec, box)


def test_wrap_phi_checks_oddness_and_monotonicity():
    spec = make_pure_xi()
    wrapped = wrap_phi(spec, lambda t: t + t ** 3)
    t = np.linspace(-2, 2, 9)
    assert np.allclose(wrapped.report_value(t), t + t ** 3)
    with pytest.raises(SupremandError):
        wrap_phi(spec, lambda t: t ** 2)          # even
    with pytest.raises(SupremandError):
        wrap_phi(spec, lambda t: -t)              # decreasing


def test_wrap_phi_composition():
    spec = wrap_phi(wrap_phi(make_pure_xi(), lambda t: 2 * t), lambda t: t ** 3)
    assert spec.report_value(np.array([1.0]))[0] == pytest.approx(8.0)


def test_hessian_of_power_identity_random():
    spec = _cubic_additive()
    rng = np.random.default_rng(1)
    x = rng.uniform(0, 1, (20, 1))
    eta = rng.normal(0, 1, 20)
    p = np.zeros((20, 0))
    xi = rng.normal(0, 1, 20)
    H4 = reduced_hessian_of_power(spec, x, eta, p, xi, 4.0)
    # identity: d^2|F|^q = q|F|^{q-2} (F H + (q-1) g g^T)
    F = spec.eval(x, eta, p, xi)
    g = spec.reduced_gradient(x, eta, p, xi)
    H = spec.hess(x, eta, p, xi)
    expected = 4 * np.abs(F)[:, None, None] ** 2 * (
        F[:, None, None] * H + 3 * g[:, :, None] * g[:, None, :])
    assert np.allclose(H4, expected, rtol=1e-12)


def test_certify_convexity_orders_candidates():
    spec = make_pure_xi()
    with pytest.raises(SupremandError):
        certify_convexity(spec, BOX, [4.0, 2.0])
    with pytest.raises(SupremandError):
        certify_convexity(spec, BOX, [1.5])
    cert = certify_convexity(spec, BOX, [2.0])
    assert cert.certified and cert.pbar == 2.0
    assert cert.sample_count > 0


def test_convexity_monotone_in_pbar():
    spec = _cubic_additive(k=0.3)
    worsts = [certify_convexity(spec, BOX, [pb]).worst_eigenvalue
              for pb in (2.0, 4.0, 8.0)]
    assert np.all(np.diff(worsts) >= -1e-12)


def test_eigenframe_condition_pure_xi():
    passed, s1, s2, coupling = check_eigenframe_condition(make_pure_xi(), BOX)
    assert passed
    assert s1 == pytest.approx(2.0)
    assert coupling <= 1e-12


def test_check_assumptions_flags_weak_monotonicity():
    # A' = 0.1 < c = 1 violates the slope bound
    weak = make_additive(
        a=_Z, a_eta=_Z, a_etaeta=_Z,
        A_func=lambda xi: 0.1 * np.asarray(xi, dtype=float),
        A_prime=lambda xi: np.full(len(np.atleast_1d(xi)), 0.1),
        A_second=lambda xi: np.zeros(len(np.atleast_1d(xi))), c=1.0)
    rep = check_assumptions(weak, BOX)
    assert not rep.all_ok
    ok = check_assumptions(make_pure_xi(), BOX)
    assert ok.all_ok
