import math
import warnings

import numpy as np
import pytest

from ringscatter import RingDomain, assemble_full_s, build_q, scatter_direct, smatrix, unitarity_defect
from ringscatter.errors import NearResonanceWarning
from ringscatter.oracle import matching_system

TWO_PI = 2 * math.pi


def test_decoupled_leads_reflect(free_ring_pi):
    col = scatter_direct(free_ring_pi, 0.5, 1e-6, 0)
    np.testing.assert_allclose(col, [-1, 0], atol=1e-10)


@pytest.mark.parametrize("lam", [0.3, 2.2, 7.9])
def test_single_lead_unimodular(lam):
    dom = RingDomain(TWO_PI, ((0.0, 2.0, 0.5), (2.0, TWO_PI, -1.0)), (1.0,))
    assert abs(scatter_direct(dom, lam, 0.8, 0)[0]) == pytest.approx(1.0, abs=1e-12)


def test_matches_qmatrix_route(free_ring_pi):
    direct = assemble_full_s(free_ring_pi, 0.5, 0.5).S
    via_q = smatrix(build_q(free_ring_pi, None, 0.5), 0.5).S
    np.testing.assert_allclose(direct, via_q, atol=1e-8)
    np.testing.assert_allclose(scatter_direct(free_ring_pi, 0.5, 0.5, 1), via_q[:, 1], atol=1e-8)


def test_reciprocal_on_symmetric_pair(free_ring_pi):
    S = assemble_full_s(free_ring_pi, 1.7, 0.9).S
    assert abs(S[0, 1]) == pytest.approx(abs(S[1, 0]), abs=1e-12)


def test_evanescent_ring_tunnels():
    dom = RingDomain.uniform(TWO_PI, 3.0, (0.0, math.pi))
    S = assemble_full_s(dom, 1.0, 1.0).S
    assert np.all(np.isfinite(S))
    assert abs(S[1, 0]) ** 2 > 0
    assert abs(S[1, 0]) ** 2 < 1e-2
    assert unitarity_defect(S) <= 1e-9


def test_linear_basis_at_threshold():
    # lambda equal to the potential on one arc uses the linear local basis
    dom = RingDomain(TWO_PI, ((0.0, 3.0, 1.5), (3.0, TWO_PI, 0.0)), (0.5, 4.0))
    S = assemble_full_s(dom, 1.5, 0.7).S
    np.testing.assert_allclose(S, smatrix(build_q(dom, None, 1.5), 0.7).S, atol=1e-10)


def test_flux_conservation_random():
    from conftest import random_domain, regular_lambda

    rng = np.random.default_rng(11)
    for _ in range(10):
        dom = random_domain(rng)
        lam = regular_lambda(rng, dom, 0.1, 8.0, 1e-3)
        beta = rng.uniform(0.05, 3.0)
        for s in range(dom.n_leads):
            col = scatter_direct(dom, lam, beta, s)
            assert np.sum(np.abs(col) ** 2) == pytest.approx(1.0, abs=1e-10)


def test_system_shape(two_step_ring):
    sys = matching_system(two_step_ring, 1.0, 0.5, 0)
    # cuts at 0, 2 and pi: three arcs, two leads
    assert sys.n_pieces == 3 and sys.matrix.shape == (8, 8)


def test_invalid_arguments(free_ring_pi):
    with pytest.raises(ValueError):
        scatter_direct(free_ring_pi, 0.0, 1.0, 0)
    with pytest.raises(IndexError):
        scatter_direct(free_ring_pi, 1.5, 1.0, 2)


def test_embedded_eigenvalue_warns(free_ring_pi):
    # sin(s) vanishes at both leads, so lambda=1 stays an eigenvalue of the coupled problem
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        with pytest.raises((NearResonanceWarning, np.linalg.LinAlgError)):
            scatter_direct(free_ring_pi, 1.0, 0.5, 0)
