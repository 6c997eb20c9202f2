import math

import numpy as np
import pytest

from ringscatter import RingDomain
from ringscatter.domain import spectrum

TWO_PI = 2 * math.pi


@pytest.fixture
def free_ring_pi():
    return RingDomain.uniform(TWO_PI, 0.0, (0.0, math.pi))


@pytest.fixture
def free_ring_quarter():
    return RingDomain.uniform(TWO_PI, 0.0, (0.0, math.pi / 2))


@pytest.fixture
def two_step_ring():
    return RingDomain(TWO_PI, ((0.0, math.pi, 0.0), (math.pi, TWO_PI, 3.0)), (0.0, 2.0))


def random_domain(rng, max_segments=3, max_leads=4):
    L = rng.uniform(2.0, 8.0)
    nseg = rng.integers(1, max_segments + 1)
    cuts = np.sort(rng.uniform(0, L, nseg - 1))
    edges = np.concatenate([[0.0], cuts, [L]])
    segs = tuple((edges[i], edges[i + 1], rng.uniform(-3, 3)) for i in range(nseg))
    n = rng.integers(1, max_leads + 1)
    pts = tuple(np.sort(rng.uniform(0, L, n)))
    return RingDomain(L, segs, pts)


def regular_lambda(rng, domain, lo, hi, gap):
    ev = spectrum(domain, hi + 1)
    while True:
        lam = rng.uniform(lo, hi)
        if ev.size == 0 or np.min(np.abs(ev - lam)) > gap:
            return lam


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for name, (ok, detail) in RESULTS.items():
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}")
