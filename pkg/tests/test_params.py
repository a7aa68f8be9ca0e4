"""Parameter plumbing: kappa algebra, variable change, moduli conversion."""

import numpy as np
import pytest
from hypothesis import given, strategies as st

from porefem.params import (
    MaterialParams,
    kappa_from,
    kappa_limit,
    lame_from_young,
    to_xi_eta,
    from_xi_eta,
)

positive = st.floats(min_value=1e-3, max_value=1e3, allow_nan=False)
nonneg = st.floats(min_value=0.0, max_value=1e3, allow_nan=False)


@given(alpha=positive, lam=nonneg, c0=positive)
def test_kappa_algebraic_identities(alpha, lam, c0):
    prm = MaterialParams(mu=1.0, lam=lam, alpha=alpha, c0=c0)
    k = kappa_from(prm)
    scale = max(1.0, abs(alpha * k.k1), abs(c0 * k.k2))
    assert abs(alpha * k.k1 + c0 * k.k2 - 1.0) <= 1e-15 * scale
    assert abs(lam * k.k1 - alpha * k.k2) <= 1e-15 * max(1.0, abs(lam * k.k1))
    assert abs(alpha * k.k3 - c0 * k.k1) <= 1e-15 * max(1.0, abs(alpha * k.k3))


@given(alpha=positive, lam=nonneg, c0=positive,
       p=st.floats(-1e3, 1e3), q=st.floats(-1e3, 1e3))
def test_variable_change_round_trip(alpha, lam, c0, p, q):
    prm = MaterialParams(mu=1.0, lam=lam, alpha=alpha, c0=c0)
    xi, eta = to_xi_eta(p, q, prm)
    p2, q2 = from_xi_eta(xi, eta, prm.kappas())
    scale = max(1.0, abs(p), abs(q))
    assert abs(p2 - p) <= 1e-13 * scale
    assert abs(q2 - q) <= 1e-13 * scale


def test_variable_change_vectorized():
    prm = MaterialParams(mu=1.0, lam=2.0, alpha=0.9, c0=0.05)
    rng = np.random.default_rng(3)
    p = rng.normal(size=50)
    q = rng.normal(size=50)
    xi, eta = to_xi_eta(p, q, prm)
    p2, q2 = from_xi_eta(xi, eta, prm.kappas())
    assert np.abs(p2 - p).max() <= 1e-14
    assert np.abs(q2 - q).max() <= 1e-14


def test_kappa_limit_values():
    k = kappa_limit(alpha=2.0, lam=3.0)
    assert k.k1 == 0.5
    assert k.k2 == 0.75
    assert k.k3 == 0.0


def test_kappa_limit_is_continuous_limit():
    alpha, lam = 1.3, 0.7
    lim = kappa_limit(alpha, lam)
    prev = None
    for c0 in (1e-2, 1e-4, 1e-6):
        k = kappa_from(MaterialParams(mu=1.0, lam=lam, alpha=alpha, c0=c0))
        gap = abs(k.k1 - lim.k1) + abs(k.k2 - lim.k2) + abs(k.k3 - lim.k3)
        if prev is not None:
            assert gap < prev
        prev = gap
    assert prev < 1e-5


def test_degenerate_storage_rejected():
    with pytest.raises(ValueError, match="strictly positive storage"):
        MaterialParams(mu=1.0, lam=1.0, alpha=1.0, c0=0.0)
    with pytest.raises(ValueError, match="strictly positive storage"):
        MaterialParams(mu=1.0, lam=1.0, alpha=1.0, c0=-0.1)


def test_invalid_material_rejected():
    with pytest.raises(ValueError):
        MaterialParams(mu=-1.0, lam=1.0, alpha=1.0, c0=0.1)
    with pytest.raises(ValueError):
        MaterialParams(mu=1.0, lam=1.0, alpha=0.0, c0=0.1)
    with pytest.raises(ValueError, match="symmetric"):
        MaterialParams(mu=1.0, lam=1.0, alpha=1.0, c0=0.1, K=np.array([[1.0, 0.5], [0.0, 1.0]]))
    with pytest.raises(ValueError, match="positive definite"):
        MaterialParams(mu=1.0, lam=1.0, alpha=1.0, c0=0.1, K=np.array([[1.0, 2.0], [2.0, 1.0]]))


def test_permeability_spectral_bounds():
    K = np.array([[2.0, 0.5], [0.5, 1.0]])
    prm = MaterialParams(mu=1.0, lam=1.0, alpha=1.0, c0=0.1, K=K)
    evals = np.linalg.eigvalsh(K)
    assert prm.K1 == pytest.approx(evals[0])
    assert prm.K2 == pytest.approx(evals[1])
    assert 0 < prm.K1 <= prm.K2


def test_lame_from_young_reference_values():
    lam, mu, B = lame_from_young(E=1.0, nu=0.25)
    assert lam == pytest.approx(0.4)
    assert mu == pytest.approx(0.4)
    assert B == pytest.approx(1.0 / 1.5)


def test_lame_from_young_rejects_incompressible():
    with pytest.raises(ValueError):
        lame_from_young(E=1.0, nu=0.5)
    with pytest.raises(ValueError):
        lame_from_young(E=-1.0, nu=0.3)
