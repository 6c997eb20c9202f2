import dataclasses
import math

import numpy as np
import pytest

from ringscatter import (RingDomain, SwitchSpec, averaged_conductance, barrier_switch, fermi_weight,
                         interference_switch, switch_report, transmission)
from ringscatter.errors import AccuracyError
from ringscatter.transport import TransmissionCurve, adaptive_simpson

TWO_PI = 2 * math.pi


def test_transmission_examples():
    assert transmission(np.eye(2), 0, 1) == 0.0
    assert transmission(np.array([[0, -1], [-1, 0]]), 0, 1) == 1.0
    with pytest.raises(IndexError):
        transmission(np.eye(2), 0, 2)
    with pytest.raises(ValueError):
        transmission(np.eye(2), 1, 1)


def test_fermi_weight_values():
    assert fermi_weight(1.0, 1.0, 0.01) == pytest.approx(25.0)
    assert fermi_weight(2.0, 1.0, 0.01) < 1e-20
    assert fermi_weight(1e6, 0.0, 1e-3) == 0.0
    with pytest.raises(ValueError):
        fermi_weight(1.0, 1.0, 0.0)


@pytest.mark.parametrize("tau", [1e-2, 1e-4])
def test_fermi_weight_normalized(tau):
    val, err = adaptive_simpson(lambda x: float(fermi_weight(x, 1.0, tau)),
                                np.linspace(1 - 40 * tau, 1 + 40 * tau, 9), 1e-14)
    # the exact mass inside +-40 tau is tanh(20)
    assert val == pytest.approx(math.tanh(20.0), abs=1e-12)
    assert val == pytest.approx(1.0, abs=1e-12)


def test_simpson_exact_on_cubics():
    val, err = adaptive_simpson(lambda x: x**3 - 2 * x, [0.0, 1.0, 3.0], 1e-12)
    assert val == pytest.approx(81 / 4 - 9, abs=1e-12)


def test_simpson_reports_non_convergence():
    with pytest.raises(AccuracyError) as info:
        adaptive_simpson(lambda x: math.copysign(1.0, x - 0.3), [0.0, 1.0], 1e-14, max_depth=8)
    assert info.value.estimate is not None


def test_zero_coupling_is_exactly_zero(free_ring_pi):
    assert averaged_conductance(free_ring_pi, 0.0, 0.5, 1e-2) == 0.0
    assert averaged_conductance(free_ring_pi, 0.0, 1.0, 0.0) == 0.0


def test_weak_coupling_decouples(free_ring_pi):
    assert averaged_conductance(free_ring_pi, 1e-4, 0.5, 1e-2) <= 1e-6


def test_sharp_limit_is_pointwise(free_ring_pi):
    curve = TransmissionCurve(free_ring_pi, 0.5)
    vals = [averaged_conductance(free_ring_pi, 0.5, 0.5, tau) for tau in (1e-2, 1e-3, 1e-4)]
    target = curve(0.5)
    assert averaged_conductance(free_ring_pi, 0.5, 0.5, 0.0) == target
    errs = [abs(v - target) for v in vals]
    assert errs[0] > errs[1] > errs[2]
    # leading error is second order in tau
    assert errs[1] / errs[0] == pytest.approx(1e-2, rel=0.05)


def test_sharp_limit_at_eigenvalue(free_ring_pi):
    # the doublet at 1 transmits fully through the (1,-1) image
    assert averaged_conductance(free_ring_pi, 0.3, 1.0, 0.0) == pytest.approx(1.0, abs=1e-12)


def test_bounded_by_one():
    from conftest import random_domain

    rng = np.random.default_rng(3)
    for _ in range(4):
        dom = random_domain(rng, max_leads=3)
        if dom.n_leads < 2:
            continue
        sigma = averaged_conductance(dom, rng.uniform(0.1, 1.5), rng.uniform(0.5, 4), 1e-2)
        assert 0.0 <= sigma <= 1.0


@pytest.mark.parametrize("spec", [interference_switch(), barrier_switch(beta=0.5, tau=1e-2)])
def test_engines_agree(spec):
    for dom in (spec.open_domain, spec.closed_domain):
        a = averaged_conductance(dom, spec.beta, spec.mu, spec.tau, engine="qmatrix")
        b = averaged_conductance(dom, spec.beta, spec.mu, spec.tau, engine="direct")
        assert a == pytest.approx(b, abs=1e-6)


def test_engines_agree_piecewise(two_step_ring):
    a = averaged_conductance(two_step_ring, 0.4, 2.0, 5e-2, engine="qmatrix")
    b = averaged_conductance(two_step_ring, 0.4, 2.0, 5e-2, engine="direct")
    assert a == pytest.approx(b, abs=1e-6)


def test_identical_states_ratio_one(free_ring_pi):
    spec = SwitchSpec(free_ring_pi, free_ring_pi, 0.3, 0.8, 1e-2)
    rep = switch_report(spec)
    assert rep.ratio == 1.0 and rep.contrast == 1.0 and rep.transmitting == "equal"


def test_interference_switch_contrast():
    rep = switch_report(interference_switch())
    assert rep.transmitting == "closed"
    assert rep.sigma_closed >= 0.9
    assert rep.sigma_open <= 1e-3
    assert rep.contrast >= 1e3


def test_barrier_switch_states():
    rep = switch_report(barrier_switch(beta=0.1, tau=1e-3))
    assert rep.transmitting == "open"
    assert rep.sigma_open > 0.5
    assert rep.sigma_closed < 1e-3


def test_smaller_coupling_sharper_switch():
    # preset temperature; see the companion test below for where this holds
    big = switch_report(interference_switch(beta=0.5)).contrast
    small = switch_report(interference_switch(beta=0.05)).contrast
    assert small >= big


def test_smaller_coupling_sharper_switch_when_resonance_is_resolved():
    # with tau above the small-coupling resonance width the claim holds
    big = switch_report(interference_switch(beta=0.5, tau=1e-2)).contrast
    small = switch_report(interference_switch(beta=0.05, tau=1e-2)).contrast
    assert small >= big


def test_tau_halving_is_cauchy():
    spec = barrier_switch(beta=1.0)
    vals = [averaged_conductance(spec.open_domain, 1.0, 1.0, tau) for tau in (4e-2, 2e-2, 1e-2, 5e-3)]
    diffs = np.abs(np.diff(vals))
    assert np.all(diffs[1:] < diffs[:-1])


def test_switch_spec_validation(free_ring_pi, free_ring_quarter):
    with pytest.raises(ValueError):
        SwitchSpec(free_ring_pi, free_ring_quarter, 0.1, 1.0, 1e-3)
    with pytest.raises(ValueError):
        SwitchSpec(free_ring_pi, free_ring_pi, 0.1, -1.0, 1e-3)
    with pytest.raises(ValueError):
        SwitchSpec(free_ring_pi, free_ring_pi, 0.1, 1.0, 1e-3, engine="magic")


def test_switch_spec_round_trip():
    spec = interference_switch(beta=0.2)
    again = SwitchSpec.from_config(spec.to_config())
    assert again.open_domain == spec.open_domain
    assert dataclasses.replace(again, notes=spec.notes) == spec
    with pytest.raises(ValueError):
        SwitchSpec.from_config({**spec.to_config(), "colour": 1})


def test_invalid_arguments(free_ring_pi):
    with pytest.raises(ValueError):
        averaged_conductance(free_ring_pi, 0.5, -1.0, 1e-2)
    with pytest.raises(ValueError):
        averaged_conductance(free_ring_pi, 0.5, 1.0, -1e-2)
    with pytest.raises(ValueError):
        TransmissionCurve(free_ring_pi, 0.5, engine="magic")
