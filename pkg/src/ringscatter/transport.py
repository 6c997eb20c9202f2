"""Transmission, Fermi-averaged conductance and switch figures of merit.

The averaged conductance of a two-terminal pair is::

    sigma(mu, tau) = integral T(lam) * w(lam; mu, tau) dlam,
    w = -df/dlam = sech^2((lam - mu) / (2 tau)) / (4 tau)

evaluated by adaptive Simpson quadrature over ``mu +- 40 tau``. Eigenvalues in
the window are used as panel breakpoints, because transmission can change on a
scale ``~ beta^2`` around them.
"""

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .domain import RingDomain, spectrum
from .errors import AccuracyError
from .greens import POLE_GUARD
from .oracle import scatter_direct
from .qmatrix import build_q, default_eigendata, resonance_data
from .scattering import smatrix, smatrix_at_resonance, smatrix_near_resonance

ENGINES = ("qmatrix", "direct")
WINDOW = 40.0
LOWER_CLAMP = 1e-6
MAX_DEPTH = 40
NEAR_ZONE = 1e-3
EPS = np.finfo(float).eps


def transmission(S, from_ray, to_ray):
    """``|S[to, from]|^2``."""
    S = getattr(S, "S", S)
    n = S.shape[0]
    if not (0 <= from_ray < n and 0 <= to_ray < n):
        raise IndexError(f"ray index out of range for {n} leads")
    if from_ray == to_ray:
        raise ValueError("transmission needs two different rays")
    return float(abs(S[to_ray, from_ray]) ** 2)


def fermi_weight(lam, mu, tau):
    """Thermal broadening kernel ``-df/dlam``; integrates to one over the real line."""
    if not tau > 0:
        raise ValueError("tau must be positive; use tau=0 in averaged_conductance for the sharp limit")
    x = np.abs((np.asarray(lam, dtype=float) - mu) / (2 * tau))
    e = np.exp(-2 * x)
    # sech^2 x = 4 e^{-2x} / (1 + e^{-2x})^2, overflow-free
    return 4 * e / (1 + e) ** 2 / (4 * tau)


class TransmissionCurve:
    """``T(lam)`` from ``source`` to ``drain`` for one domain and coupling.

    With the qmatrix engine, points within ``NEAR_ZONE`` of a ring eigenvalue
    split ``Q`` into its pole and smooth part, since a direct Green's solve
    loses accuracy there (badly so at degenerate levels); the eigenvalue itself
    gives the exact resonance limit. The direct engine averages the two sides
    of an eigenvalue hit exactly.
    """

    def __init__(self, domain, beta, source=0, drain=1, engine="qmatrix"):
        if engine not in ENGINES:
            raise ValueError(f"engine must be one of {ENGINES}, got {engine!r}")
        self.domain = domain
        self.beta = float(beta)
        self.source = source
        self.drain = drain
        self.engine = engine
        self._eigendata = None
        self._resonances = {}

    def eigenvalues(self, lam_max):
        return spectrum(self.domain, lam_max)

    def _nearest_eigenvalue(self, lam, zone=POLE_GUARD):
        ev = self.eigenvalues(lam + 1.0)
        if not ev.size:
            return None
        e = float(ev[np.argmin(np.abs(ev - lam))])
        return e if abs(e - lam) <= zone else None

    def _resonance(self, lam0):
        if lam0 not in self._resonances:
            if self._eigendata is None or self._eigendata.eigenvalues[-1] < lam0 + 1:
                self._eigendata = default_eigendata(self.domain, lam0)
            self._resonances[lam0] = resonance_data(self.domain, self._eigendata, lam0)
        return self._resonances[lam0]

    def __call__(self, lam):
        lam = float(lam)
        if self.beta == 0:
            return 0.0
        if self.engine == "qmatrix":
            pole = self._nearest_eigenvalue(lam, NEAR_ZONE)
            if pole is None:
                S = smatrix(build_q(self.domain, None, lam), self.beta)
            elif lam == pole:
                S = smatrix_at_resonance(self._resonance(pole), self.beta)
            else:
                S = smatrix_near_resonance(self._resonance(pole), self.beta, lam)
            return transmission(S, self.source, self.drain)
        pole = self._nearest_eigenvalue(lam)
        if pole is not None:
            # the coupled problem can have an embedded eigenvalue here; average both sides
            vals = [abs(scatter_direct(self.domain, pole + d, self.beta, self.source)[self.drain]) ** 2
                    for d in (-2 * POLE_GUARD, 2 * POLE_GUARD) if pole + d > 0]
            return float(np.mean(vals))
        return float(abs(scatter_direct(self.domain, lam, self.beta, self.source)[self.drain]) ** 2)


def adaptive_simpson(f, breakpoints, atol, max_depth=MAX_DEPTH):
    """Integrate ``f`` over sorted ``breakpoints`` by adaptive Simpson.

    Each panel is bisected until its Richardson error estimate ``|S2 - S1|/15``
    falls below ``atol`` times its share of the total width, or below the
    rounding level of the panel value; panels narrower than ~1e3 ulps of
    their abscissa are accepted as they stand. Panels are
    processed in a fixed order so the result is reproducible. Returns
    ``(value, error_estimate)``.
    """
    bp = np.asarray(breakpoints, dtype=float)
    total_width = bp[-1] - bp[0]
    cache = {}

    def F(x):
        if x not in cache:
            cache[x] = f(x)
        return cache[x]

    value = 0.0
    error = 0.0
    pieces = []
    for a, b in zip(bp[:-1], bp[1:]):
        if b <= a:
            continue
        m = 0.5 * (a + b)
        fa, fm, fb = F(a), F(m), F(b)
        pieces.append((a, b, fa, fm, fb, (b - a) * (fa + 4 * fm + fb) / 6, 0))
    contributions = []
    while pieces:
        a, b, fa, fm, fb, whole, depth = pieces.pop()
        m = 0.5 * (a + b)
        lm, rm = 0.5 * (a + m), 0.5 * (m + b)
        flm, frm = F(lm), F(rm)
        left = (m - a) * (fa + 4 * flm + fm) / 6
        right = (b - m) * (fm + 4 * frm + fb) / 6
        est = (left + right - whole) / 15
        # below a few ulps of the panel value, or on panels only a few ulps
        # wide, the estimate is rounding noise of f and cannot shrink further
        floor = 8 * EPS * (abs(left) + abs(right))
        unresolvable = b - a <= 1024 * EPS * max(abs(a), abs(b))
        if abs(est) <= max(atol * (b - a) / total_width, floor) or unresolvable:
            contributions.append((a, left + right + est, abs(est)))
            continue
        if depth + 1 >= max_depth:
            partial = math.fsum(c[1] for c in contributions) + left + right
            raise AccuracyError(
                f"adaptive quadrature did not converge on [{a:.6g}, {b:.6g}] after {max_depth} "
                f"bisections; estimate {partial:.6g}", estimate=partial, error=abs(est))
        pieces.append((m, b, fm, frm, fb, right, depth + 1))
        pieces.append((a, m, fa, flm, fm, left, depth + 1))
    contributions.sort()
    value = math.fsum(c[1] for c in contributions)
    error = math.fsum(c[2] for c in contributions)
    return value, error


def _breakpoints(lo, hi, mu, eigenvalues, beta):
    pts = set(np.linspace(lo, hi, 17).tolist())
    if lo < mu < hi:
        pts.add(mu)
    width = max(beta, 1e-6) ** 2
    for e in eigenvalues:
        if lo < e < hi:
            pts.add(float(e))
            for j in range(-4, 6):
                for sgn in (-1, 1):
                    x = e + sgn * width * math.sqrt(max(e, 1e-12)) * 2.0**j
                    if lo < x < hi:
                        pts.add(x)
    return sorted(pts)


def averaged_conductance(domain, beta, mu, tau, source=0, drain=1, engine="qmatrix",
                         atol=1e-10, curve=None):
    """Fermi-averaged transmission from ``source`` to ``drain``.

    ``tau = 0`` returns the pointwise transmission at ``mu`` (its limit when
    ``mu`` is an eigenvalue of the ring).
    """
    if not mu > 0:
        raise ValueError(f"mu must be positive, got {mu!r}")
    if not tau >= 0:
        raise ValueError(f"tau must be non-negative, got {tau!r}")
    if not beta >= 0:
        raise ValueError(f"beta must be non-negative, got {beta!r}")
    if beta == 0:
        return 0.0
    if curve is None:
        curve = TransmissionCurve(domain, beta, source, drain, engine)
    if tau == 0:
        return curve(mu)
    lo = max(LOWER_CLAMP, mu - WINDOW * tau)
    hi = mu + WINDOW * tau
    ev = curve.eigenvalues(hi)
    bp = _breakpoints(lo, hi, mu, ev, beta)
    value, _ = adaptive_simpson(lambda x: curve(x) * float(fermi_weight(x, mu, tau)), bp, atol)
    return min(max(value, 0.0), 1.0)


@dataclass(frozen=True)
class SwitchSpec:
    """Two ring configurations sharing geometry, toggled by the potential."""

    open_domain: RingDomain
    closed_domain: RingDomain
    beta: float
    mu: float
    tau: float
    source: int = 0
    drain: int = 1
    engine: str = "qmatrix"
    name: str = "custom"
    notes: tuple = ()

    def __post_init__(self):
        a, b = self.open_domain, self.closed_domain
        if a.circumference != b.circumference or a.attachment_points != b.attachment_points:
            raise ValueError("open and closed domains must share circumference and attachment points")
        if not self.tau >= 0:
            raise ValueError("tau must be non-negative")
        if not self.mu > 0:
            raise ValueError("mu must be positive")
        if self.engine not in ENGINES:
            raise ValueError(f"engine must be one of {ENGINES}")

    def to_config(self):
        return {
            "name": self.name,
            "open_domain": self.open_domain.to_config(),
            "closed_domain": self.closed_domain.to_config(),
            "beta": self.beta, "mu": self.mu, "tau": self.tau,
            "source": self.source, "drain": self.drain, "engine": self.engine,
        }

    @classmethod
    def from_config(cls, cfg):
        known = {"name", "open_domain", "closed_domain", "beta", "mu", "tau",
                 "source", "drain", "engine"}
        unknown = set(cfg) - known
        if unknown:
            raise ValueError(f"unknown switch field(s): {sorted(unknown)}")
        for key in ("open_domain", "closed_domain", "beta", "mu", "tau"):
            if key not in cfg:
                raise ValueError(f"switch config is missing field {key!r}")
        return cls(RingDomain.from_config(cfg["open_domain"]),
                   RingDomain.from_config(cfg["closed_domain"]),
                   float(cfg["beta"]), float(cfg["mu"]), float(cfg["tau"]),
                   int(cfg.get("source", 0)), int(cfg.get("drain", 1)),
                   cfg.get("engine", "qmatrix"), cfg.get("name", "custom"))


@dataclass(frozen=True)
class ConductanceReport:
    sigma_open: float
    sigma_closed: float
    ratio: float  # sigma_closed / sigma_open
    contrast: float  # transmitting / blocking
    transmitting: str
    metadata: dict = field(default_factory=dict)

    def to_dict(self):
        return asdict(self)


def switch_report(spec):
    """Averaged conductance in both states; reports which state transmits."""
    kw = dict(source=spec.source, drain=spec.drain, engine=spec.engine)
    s_open = averaged_conductance(spec.open_domain, spec.beta, spec.mu, spec.tau, **kw)
    if spec.closed_domain == spec.open_domain:
        s_closed = s_open
    else:
        s_closed = averaged_conductance(spec.closed_domain, spec.beta, spec.mu, spec.tau, **kw)
    ratio = s_closed / s_open if s_open > 0 else math.inf
    hi, lo = max(s_open, s_closed), min(s_open, s_closed)
    contrast = hi / lo if lo > 0 else (1.0 if hi == 0 else math.inf)
    if s_open == s_closed:
        transmitting = "equal"
    else:
        transmitting = "open" if s_open > s_closed else "closed"
    meta = {"name": spec.name, "beta": spec.beta, "tau": spec.tau, "mu": spec.mu,
            "engine": spec.engine, "source": spec.source, "drain": spec.drain,
            "window": [max(LOWER_CLAMP, spec.mu - WINDOW * spec.tau), spec.mu + WINDOW * spec.tau],
            "notes": list(spec.notes)}
    return ConductanceReport(s_open, s_closed, ratio, contrast, transmitting, meta)


def interference_switch(beta=0.1, tau=1e-3, mu=1.0, circumference=2 * math.pi, engine="qmatrix"):
    """Leads a quarter turn apart; ring potential 0 (labelled open) or -3 (closed)."""
    pts = (0.0, circumference / 4)
    return SwitchSpec(RingDomain.uniform(circumference, 0.0, pts),
                      RingDomain.uniform(circumference, -3.0, pts),
                      beta, mu, tau, engine=engine, name="interference",
                      notes=("circumference 2*pi assumed so that the operating energy 1 is the n=1 doublet",
                             "open/closed labels follow q=0/q=-3; the report says which state transmits"))


def barrier_switch(beta=0.1, tau=1e-3, mu=1.0, circumference=2 * math.pi, engine="qmatrix"):
    """Leads half a turn apart; ring potential 0 (open) or raised uniformly to 3 (closed)."""
    pts = (0.0, circumference / 2)
    return SwitchSpec(RingDomain.uniform(circumference, 0.0, pts),
                      RingDomain.uniform(circumference, 3.0, pts),
                      beta, mu, tau, engine=engine, name="barrier",
                      notes=("circumference 2*pi assumed",
                             "closed state raises the whole ring potential to 3 (uniform barrier reading)"))
