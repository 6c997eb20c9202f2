import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ringscatter import (RingDomain, build_q, resonance_data, smatrix, smatrix_asymptotic,
                         smatrix_at_resonance, unitarity_defect)
from ringscatter.errors import DivergenceError, NearPoleError
from ringscatter.qmatrix import QMatrix, default_eigendata
from ringscatter.scattering import ScatteringMatrix

TWO_PI = 2 * math.pi


@pytest.fixture(scope="module")
def three_leads():
    dom = RingDomain.uniform(TWO_PI, 0.0, (0.0, TWO_PI / 3, 2 * TWO_PI / 3))
    return dom, resonance_data(dom, default_eigendata(dom), 1.0)


def test_vanishing_coupling_reflects():
    dom = RingDomain.uniform(TWO_PI, 0.0, (0.0, 1.0, 2.5))
    Q = build_q(dom, None, 0.7)
    np.testing.assert_allclose(smatrix(Q, 1e-6).S, -np.eye(3), atol=1e-11)
    np.testing.assert_array_equal(smatrix(Q, 0.0).S, -np.eye(3))


@pytest.mark.parametrize("g,lam,beta", [(0.3, 0.5, 0.5), (-2.0, 2.0, 1.3), (10.0, 0.01, 3.0)])
def test_scalar_cayley(g, lam, beta):
    S = smatrix(QMatrix(lam, np.array([[g]])), beta).S[0, 0]
    x = 1j * math.sqrt(lam) * beta**2 * g
    assert S == pytest.approx(-(1 + x) / (1 - x), abs=1e-15)
    assert abs(S) == pytest.approx(1.0, abs=1e-15)


def test_invalid_arguments():
    Q = QMatrix(-0.5, np.eye(2))
    with pytest.raises(ValueError):
        smatrix(Q, 1.0)
    with pytest.raises(ValueError):
        smatrix(QMatrix(0.5, np.eye(2)), -1.0)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6), st.floats(0.05, 10), st.floats(0.01, 5))
def test_unitary_and_symmetric(seed, lam, beta):
    from conftest import random_domain

    dom = random_domain(np.random.default_rng(seed))
    try:
        Q = build_q(dom, None, lam)
    except NearPoleError:
        return
    S = smatrix(Q, beta).S
    assert unitarity_defect(S) <= 1e-10
    assert np.max(np.abs(S - S.T)) <= 1e-10


def test_at_resonance_matches_nearby(free_ring_pi):
    res = resonance_data(free_ring_pi, default_eigendata(free_ring_pi), 1.0)
    S0 = smatrix_at_resonance(res, 0.3).S
    for d in (1e-7, -1e-7):
        S = smatrix(build_q(free_ring_pi, None, 1.0 + d), 0.3).S
        np.testing.assert_allclose(S, S0, atol=1e-4)
    np.testing.assert_allclose(S0, [[0, -1], [-1, 0]], atol=1e-12)


def test_at_resonance_full_projector_is_identity(free_ring_quarter):
    res = resonance_data(free_ring_quarter, default_eigendata(free_ring_quarter), 1.0)
    for beta in (0.01, 0.3, 2.0, 30.0):
        np.testing.assert_allclose(smatrix_at_resonance(res, beta).S, np.eye(2), atol=1e-12)
        np.testing.assert_allclose(smatrix_asymptotic(res, beta, order=5).S, np.eye(2), atol=1e-12)


def test_at_resonance_weak_coupling_limit(three_leads):
    _, res = three_leads
    lead = -np.eye(3) + 2 * res.P0
    errs = [np.linalg.norm(smatrix_at_resonance(res, b).S - lead) for b in (0.1, 0.01, 0.001)]
    assert errs[0] > errs[1] > errs[2]
    assert errs[2] < 1e-5


def test_at_resonance_unitary(three_leads):
    _, res = three_leads
    for beta in (0.05, 0.7, 3.0):
        assert unitarity_defect(smatrix_at_resonance(res, beta)) <= 1e-10


def test_asymptotic_order_zero(three_leads):
    _, res = three_leads
    np.testing.assert_allclose(smatrix_asymptotic(res, 0.4, order=0).S, -np.eye(3) + 2 * res.P0)


def test_asymptotic_converges_to_exact(three_leads):
    _, res = three_leads
    exact = smatrix_at_resonance(res, 0.3).S
    prev = math.inf
    for order in (1, 2, 4, 8, 16):
        approx = smatrix_asymptotic(res, 0.3, order=order)
        err = np.linalg.norm(approx.S - exact)
        assert err <= approx.remainder_bound + 1e-14
        assert err < prev
        prev = err
    assert prev < 1e-12


def test_asymptotic_divergence(three_leads):
    _, res = three_leads
    with pytest.raises(DivergenceError):
        smatrix_asymptotic(res, 3.0)
    with pytest.raises(ValueError):
        smatrix_asymptotic(res, 0.1, order=-1)


def test_limit_continuity(three_leads):
    dom, res = three_leads
    S0 = smatrix_at_resonance(res, 0.5).S
    gaps = [np.linalg.norm(smatrix(build_q(dom, None, 1.0 + d), 0.5).S - S0) for d in (1e-4, 1e-5, 1e-6)]
    assert gaps[0] > gaps[1] > gaps[2]


def test_near_resonance_split_is_exact(three_leads):
    from ringscatter import assemble_full_s
    from ringscatter.scattering import smatrix_near_resonance

    dom, res = three_leads
    S0 = smatrix_at_resonance(res, 0.5).S
    np.testing.assert_allclose(smatrix_near_resonance(res, 0.5, res.lam0).S, S0, atol=1e-15)
    gaps = []
    for d in (1e-4, 1e-6, 1e-8, 1e-10):
        S = smatrix_near_resonance(res, 0.5, 1.0 + d).S
        assert unitarity_defect(S) <= 1e-10
        np.testing.assert_allclose(S, assemble_full_s(dom, 1.0 + d, 0.5).S, atol=1e-10)
        gaps.append(np.linalg.norm(S - S0))
    # S approaches its limit linearly in the offset
    np.testing.assert_allclose(np.array(gaps[1:]) / np.array(gaps[:-1]), 1e-2, rtol=1e-3)


def test_unitarity_defect_examples():
    assert unitarity_defect(np.eye(3)) == 0.0
    assert unitarity_defect(2 * np.eye(1)) == pytest.approx(3.0)
    S = ScatteringMatrix(1.0, 0.5, np.eye(2, dtype=complex))
    assert unitarity_defect(S) == 0.0
    d = S.to_dict()
    assert d["entries"][0] == [1.0, 0.0] and d["defect_norm"] == "frobenius"
