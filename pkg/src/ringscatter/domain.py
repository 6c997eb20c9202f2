"""Ring domain with piecewise-constant potential and its spectrum.

The ring is the interval [0, L) with its endpoints identified. The operator is
``-u'' + q(x) u`` with ``q`` constant on each segment. Eigenvalues are found
from the monodromy matrix ``M(lam)`` (the transfer matrix once around the
ring): periodic eigenvalues are the zeros of ``trace M(lam) - 2``.
"""

import ast
import csv
import functools
import json
import math
import operator
from dataclasses import dataclass

import numpy as np
from scipy import optimize

from .errors import ResolutionError

# relative tolerance used for segment endpoints and point snapping
GEOMETRY_TOL = 1e-12
# ||M - I|| below this marks a closed gap (double periodic eigenvalue)
DOUBLE_ROOT_TOL = 1e-7

_SERIES_Z = 1e-2


def _cos_sinc(z):
    """Return ``cos(sqrt(z))`` and ``sin(sqrt(z))/sqrt(z)`` for real ``z``.

    Both are entire in ``z``; negative ``z`` gives the hyperbolic versions.
    """
    z = np.asarray(z, dtype=float)
    c = np.empty_like(z)
    s = np.empty_like(z)
    pos = z >= _SERIES_Z
    neg = z <= -_SERIES_Z
    mid = ~(pos | neg)
    r = np.sqrt(z[pos])
    c[pos] = np.cos(r)
    s[pos] = np.sin(r) / r
    r = np.sqrt(-z[neg])
    c[neg] = np.cosh(r)
    s[neg] = np.sinh(r) / r
    zm = z[mid]
    c[mid] = 1 - zm / 2 * (1 - zm / 12 * (1 - zm / 30 * (1 - zm / 56 * (1 - zm / 90))))
    s[mid] = 1 - zm / 6 * (1 - zm / 20 * (1 - zm / 42 * (1 - zm / 72 * (1 - zm / 110))))
    return c, s


def _shifted_series(u, first_denominator_index, terms=14):
    # sum_{n>=1} (-1)^(n+1) u^(n-1) / (2n + offset)!, offset 0 or 1
    total = np.zeros_like(u)
    for n in range(terms, 0, -1):
        total = 1.0 / math.factorial(2 * n + first_denominator_index) - u * total
    return total


def norm_integrals(length, w):
    """Integrals over [0, length] of c*c, c*s and s*s.

    ``c`` and ``s`` are the solutions of ``-u'' = w u`` with ``(c, c') = (1, 0)``
    and ``(s, s') = (0, 1)`` at the left end. Closed forms, with a series near
    ``w * length**2 = 0`` where they cancel.
    """
    w = np.asarray(w, dtype=float)
    u = 4.0 * w * length**2
    small = np.abs(u) < 0.5
    _, sinc = _cos_sinc(u)
    cos_u, _ = _cos_sinc(u)
    safe_u = np.where(small, 1.0, u)
    one_minus_sinc = np.where(small, _shifted_series(u, 1), (1 - sinc) / safe_u)
    one_minus_cos = np.where(small, _shifted_series(u, 0), (1 - cos_u) / safe_u)
    icc = length * (1 + sinc) / 2
    ics = length**2 * one_minus_cos
    iss = 2 * length**3 * one_minus_sinc
    return icc, ics, iss


def parse_number(value):
    """Accept a float or a small arithmetic expression such as ``"pi/2"``."""
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return float(value)
    if not isinstance(value, str):
        raise ValueError(f"expected a number, got {value!r}")
    ops = {
        ast.Add: operator.add, ast.Sub: operator.sub,
        ast.Mult: operator.mul, ast.Div: operator.truediv,
        ast.Pow: operator.pow, ast.USub: operator.neg, ast.UAdd: operator.pos,
    }

    def ev(node):
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
            return float(node.value)
        if isinstance(node, ast.Name) and node.id == "pi":
            return math.pi
        if isinstance(node, ast.BinOp) and type(node.op) in ops:
            return ops[type(node.op)](ev(node.left), ev(node.right))
        if isinstance(node, ast.UnaryOp) and type(node.op) in ops:
            return ops[type(node.op)](ev(node.operand))
        raise ValueError(f"unsupported expression {value!r}")

    try:
        tree = ast.parse(value.strip(), mode="eval")
    except SyntaxError:
        raise ValueError(f"cannot parse number {value!r}") from None
    return ev(tree.body)


@dataclass(frozen=True)
class RingDomain:
    """Ring of circumference ``L`` with leads attached at ``attachment_points``.

    ``segments`` is a sequence of ``(start, end, q)`` covering [0, L) once.
    """

    circumference: float
    segments: tuple
    attachment_points: tuple

    def __post_init__(self):
        L = float(self.circumference)
        if not L > 0 or not math.isfinite(L):
            raise ValueError(f"circumference must be positive, got {self.circumference!r}")
        tol = GEOMETRY_TOL * L
        segs = sorted((float(a), float(b), float(q)) for a, b, q in self.segments)
        if not segs:
            raise ValueError("at least one segment is required")
        cursor = 0.0
        cleaned = []
        for a, b, q in segs:
            if abs(a - cursor) > tol:
                raise ValueError(f"segments leave a gap or overlap at {cursor!r} (next starts at {a!r})")
            if b < a - tol:
                raise ValueError(f"segment ({a}, {b}) has negative length")
            if not math.isfinite(q):
                raise ValueError("segment potential must be finite")
            cleaned.append((cursor, max(b, cursor), q))
            cursor = max(b, cursor)
        if abs(cursor - L) > tol:
            raise ValueError(f"segments end at {cursor!r}, expected circumference {L!r}")
        cleaned[-1] = (cleaned[-1][0], L, cleaned[-1][2])

        points = []
        boundaries = [a for a, _, _ in cleaned] + [L]
        for p in self.attachment_points:
            p = float(p)
            if p < -tol or p >= L + tol:
                raise ValueError(f"attachment point {p!r} outside [0, L)")
            p = p % L if p > L - tol else max(p, 0.0)
            if p > L - tol:
                p = 0.0
            for bnd in boundaries:
                if abs(p - bnd) <= tol:
                    p = bnd % L
            points.append(p)
        if not points:
            raise ValueError("at least one attachment point is required")
        for i in range(len(points)):
            for j in range(i):
                d = abs(points[i] - points[j])
                if min(d, L - d) <= tol:
                    raise ValueError(f"attachment points {points[j]!r} and {points[i]!r} coincide")
        object.__setattr__(self, "circumference", L)
        object.__setattr__(self, "segments", tuple(cleaned))
        object.__setattr__(self, "attachment_points", tuple(points))

    @classmethod
    def uniform(cls, circumference, q, attachment_points):
        return cls(circumference, ((0.0, circumference, q),), tuple(attachment_points))

    @classmethod
    def from_config(cls, config):
        """Build from a mapping with ``circumference``, ``attachment_points`` and
        either ``potential`` (uniform ring) or ``segments``.

        Numbers may be given as strings like ``"2*pi"``.
        """
        if not isinstance(config, dict):
            raise ValueError("domain config must be a mapping")
        unknown = set(config) - {"circumference", "potential", "segments", "attachment_points"}
        if unknown:
            raise ValueError(f"unknown domain field(s): {sorted(unknown)}")
        for key in ("circumference", "attachment_points"):
            if key not in config:
                raise ValueError(f"domain config is missing field {key!r}")
        L = parse_number(config["circumference"])
        pts = [parse_number(p) for p in config["attachment_points"]]
        if ("potential" in config) == ("segments" in config):
            raise ValueError("domain config needs exactly one of 'potential' or 'segments'")
        if "potential" in config:
            return cls.uniform(L, parse_number(config["potential"]), pts)
        segs = []
        for i, seg in enumerate(config["segments"]):
            if len(seg) != 3:
                raise ValueError(f"segments[{i}] must be [start, end, q]")
            segs.append(tuple(parse_number(x) for x in seg))
        return cls(L, tuple(segs), tuple(pts))

    def to_config(self):
        return {
            "circumference": self.circumference,
            "segments": [list(s) for s in self.segments],
            "attachment_points": list(self.attachment_points),
        }

    @property
    def n_leads(self):
        return len(self.attachment_points)

    @property
    def potential_range(self):
        qs = [q for a, b, q in self.segments if b > a]
        return min(qs), max(qs)

    @property
    def is_uniform(self):
        lo, hi = self.potential_range
        return lo == hi

    def potential_at(self, x):
        x = float(x) % self.circumference
        for a, b, q in self.segments:
            if a <= x < b:
                return q
        return self.segments[-1][2]

    def pieces(self, origin=0.0, marks=()):
        """Constant-potential pieces met going once around from ``origin``.

        Returns ``(lengths, potentials, mark_index)`` where ``mark_index[i]`` is
        the number of pieces traversed before reaching ``marks[i]``.
        """
        L = self.circumference
        tol = GEOMETRY_TOL * L

        def rel(x):
            r = (x - origin) % L
            return 0.0 if r > L - tol else r

        cuts = sorted({0.0, L} | {rel(a) for a, _, _ in self.segments} | {rel(m) for m in marks})
        merged = [cuts[0]]
        for c in cuts[1:]:
            if c - merged[-1] > tol:
                merged.append(c)
            else:
                merged[-1] = max(merged[-1], c) if merged[-1] != 0.0 else 0.0
        merged[-1] = L
        lengths = np.diff(merged)
        potentials = np.array([self.potential_at(origin + 0.5 * (merged[i] + merged[i + 1]))
                               for i in range(len(lengths))])
        index = []
        for m in marks:
            r = rel(m)
            index.append(int(np.argmin(np.abs(np.asarray(merged[:-1]) - r))))
        return lengths, potentials, index


def transfer_matrix(length, q, lam):
    """Propagator of ``-u'' + q u = lam u`` over ``length`` acting on ``(u, u')``.

    ``lam`` may be an array; the result then has shape ``lam.shape + (2, 2)``.
    """
    if length < 0:
        raise ValueError(f"segment length must be non-negative, got {length!r}")
    lam = np.asarray(lam, dtype=float)
    w = lam - q
    c, s = _cos_sinc(w * length**2)
    out = np.empty(lam.shape + (2, 2))
    out[..., 0, 0] = c
    out[..., 0, 1] = length * s
    out[..., 1, 0] = -w * length * s
    out[..., 1, 1] = c
    return out


def monodromy(domain, lam, origin=0.0):
    lengths, qs, _ = domain.pieces(origin)
    lam = np.asarray(lam, dtype=float)
    M = np.broadcast_to(np.eye(2), lam.shape + (2, 2)).copy()
    for ell, q in zip(lengths, qs):
        M = transfer_matrix(ell, q, lam) @ M
    return M


@dataclass(frozen=True, eq=False)
class EigenData:
    """Truncated spectrum with eigenfunction values at the attachment points.

    Row ``l`` of ``values`` holds ``phi_l(a_1), ..., phi_l(a_N)`` for the
    L2-normalized eigenfunction ``phi_l``.
    """

    eigenvalues: np.ndarray
    values: np.ndarray
    circumference: float
    potential_range: tuple
    attachment_points: tuple

    @property
    def truncation_count(self):
        return len(self.eigenvalues)

    def completeness_sums(self, index, ref_lambda=-1.0):
        """Partial sums of ``phi_l(a)^2 / (lam_l - ref)^2`` for one point."""
        terms = self.values[:, index] ** 2 / (self.eigenvalues - ref_lambda) ** 2
        return np.cumsum(terms)

    def to_csv(self, fh):
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["index", "eigenvalue"] + [f"value_{i}" for i in range(len(self.attachment_points))])
        for i, (lam, row) in enumerate(zip(self.eigenvalues, self.values)):
            writer.writerow([i, repr(float(lam))] + [repr(float(v)) for v in row])


def uniform_ring_eigendata(circumference, q, n_modes, points):
    """Analytic spectrum ``q + (2 pi n / L)^2`` of the uniform ring.

    Each level ``n >= 1`` contributes a cosine row then a sine row.
    """
    L = float(circumference)
    if not L > 0:
        raise ValueError("circumference must be positive")
    if int(n_modes) != n_modes or n_modes < 1:
        raise ValueError("n_modes must be a positive integer")
    n_modes = int(n_modes)
    a = np.asarray(points, dtype=float)
    n = (np.arange(n_modes) + 1) // 2
    is_sin = (np.arange(n_modes) % 2 == 0) & (n > 0)
    eigenvalues = q + (2 * np.pi * n / L) ** 2
    phase = 2 * np.pi * np.outer(n, a) / L
    values = np.where(is_sin[:, None], np.sin(phase), np.cos(phase)) * np.sqrt(2 / L)
    values[0] = 1 / np.sqrt(L)
    return EigenData(eigenvalues, values, L, (float(q), float(q)), tuple(float(p) for p in a))


def _grid_step(domain):
    return min(0.05, (2 * np.pi / domain.circumference) ** 2 / 40)


def eigenvalue_count(domain, lam):
    """Number of periodic eigenvalues strictly below ``lam`` (with multiplicity).

    Zeros of the solution with ``u(0) = 0, u'(0) = 1`` on ``(0, L)`` count the
    Dirichlet levels of the ring cut at 0; the periodic count is that number or
    one more, and the sign of the discriminant fixes the parity.
    """
    lengths, qs, _ = domain.pieces(0.0, ())
    u, du = 0.0, 1.0
    zeros = 0
    for ell, q in zip(lengths, qs):
        w = lam - q
        T = transfer_matrix(ell, q, lam)
        u1, du1 = T @ (u, du)
        if w > 0:
            k = math.sqrt(w)
            psi = math.atan2(k * u, du)
            zeros += math.floor((psi + k * ell) / math.pi) - math.floor(psi / math.pi)
        elif u != 0.0 and (u1 == 0.0 or (u > 0) != (u1 > 0)):
            zeros += 1
        norm = math.hypot(u1, du1)
        u, du = u1 / norm, du1 / norm
    if u == 0.0:
        zeros -= 1  # the endpoint is not interior
    M = monodromy(domain, lam)
    even = M[0, 0] + M[1, 1] - 2.0 > 0
    return zeros if (zeros % 2 == 0) == even else zeros + 1


def _periodic_roots(domain, lam_max, step=None):
    """Periodic eigenvalues up to ``lam_max`` as ``(lam, multiplicity)`` pairs."""
    q_min, _ = domain.potential_range
    step = _grid_step(domain) if step is None else step
    lo = q_min - 1.0
    n = int(np.ceil((lam_max - lo) / step)) + 3
    # offset keeps exact eigenvalues of simple geometries off the grid nodes
    grid = lo + step * (np.arange(n) + 0.3183)

    def disc(lam):
        M = monodromy(domain, lam)
        return M[..., 0, 0] + M[..., 1, 1] - 2.0

    def defect2(lam):
        return float(np.sum((monodromy(domain, lam) - np.eye(2)) ** 2))

    f = disc(grid)
    consumed = np.zeros(n - 1, dtype=bool)
    roots = []
    for j in range(1, n - 1):
        if f[j] > f[j - 1] and f[j] >= f[j + 1] and f[j - 1] < 0 and f[j + 1] < 0:
            a, b = grid[j - 1], grid[j + 1]
            consumed[j - 1] = consumed[j] = True
            peak = optimize.minimize_scalar(lambda x: -disc(x), bounds=(a, b), method="bounded",
                                            options={"xatol": 1e-11})
            lm = float(peak.x)
            near = optimize.minimize_scalar(defect2, bounds=(max(a, lm - 1e-5), min(b, lm + 1e-5)),
                                            method="bounded", options={"xatol": 1e-15})
            if math.sqrt(max(near.fun, 0.0)) < DOUBLE_ROOT_TOL:
                roots.append((float(near.x), 2))
            elif disc(lm) > 0:
                roots.append((optimize.brentq(disc, a, lm, xtol=1e-13), 1))
                roots.append((optimize.brentq(disc, lm, b, xtol=1e-13), 1))
            else:
                raise ResolutionError(
                    f"ambiguous root pattern near lambda={lm:.6g}; refine the scan grid "
                    f"(step={step:.3g})")
    sign = f >= 0
    for i in np.nonzero(sign[:-1] != sign[1:])[0]:
        if not consumed[i]:
            roots.append((optimize.brentq(disc, grid[i], grid[i + 1], xtol=1e-13), 1))
    roots.sort()
    # every root below grid[-2] has been bracketed if the grid resolves the spectrum
    probe = grid[-2]
    found = sum(m for lam, m in roots if lam < probe)
    expected = eigenvalue_count(domain, probe)
    if found != expected:
        raise ResolutionError(
            f"found {found} eigenvalues below {probe:.6g} but the oscillation count is "
            f"{expected}; refine the scan grid (step={step:.3g})")
    return [(lam, m) for lam, m in roots if lam <= lam_max + 1e-12]


def _eigen_rows(domain, lam, initial_states):
    """Orthonormal eigenfunction values at the attachment points.

    ``initial_states`` are ``(u, u')`` at arc coordinate 0 spanning the
    eigenspace; the L2 Gram matrix is assembled from closed-form integrals.
    """
    lengths, qs, marks = domain.pieces(0.0, domain.attachment_points)
    X = np.array(initial_states, dtype=float).T  # columns are states
    p = X.shape[1]
    gram = np.zeros((p, p))
    at_cut = [X.copy()]
    for ell, q in zip(lengths, qs):
        icc, ics, iss = (float(v) for v in norm_integrals(ell, lam - q))
        a, b = X[0], X[1]
        gram += icc * np.outer(a, a) + ics * (np.outer(a, b) + np.outer(b, a)) + iss * np.outer(b, b)
        X = transfer_matrix(ell, q, lam) @ X
        at_cut.append(X.copy())
    values = np.array([at_cut[k][0] for k in marks])  # N x p
    chol = np.linalg.cholesky(gram)
    coeff = np.linalg.inv(chol).T  # maps raw states to orthonormal ones
    return (values @ coeff).T


def _simple_state(M):
    v1 = np.array([M[0, 1], 1.0 - M[0, 0]])
    v2 = np.array([1.0 - M[1, 1], M[1, 0]])
    v = v1 if np.linalg.norm(v1) >= np.linalg.norm(v2) else v2
    v = v / np.linalg.norm(v)
    lead = v[0] if abs(v[0]) > 1e-12 else v[1]
    return v if lead > 0 else -v


def piecewise_ring_eigendata(domain, lam_max, step=None):
    """All eigenvalues up to ``lam_max`` with values at the attachment points.

    Roots of ``trace M(lam) - 2`` are bracketed on a grid and refined to
    ~1e-12; closed gaps (``M = I``) are reported as double eigenvalues.
    """
    q_min, q_max = domain.potential_range
    if not lam_max > q_min:
        raise ValueError(f"lam_max={lam_max!r} must exceed the minimum potential {q_min!r}")
    eigenvalues = []
    rows = []
    for lam, mult in _periodic_roots(domain, lam_max, step):
        if mult == 2:
            states = [(1.0, 0.0), (0.0, 1.0)]
        else:
            states = [_simple_state(monodromy(domain, lam))]
        for row in _eigen_rows(domain, lam, states):
            eigenvalues.append(lam)
            rows.append(row)
    values = np.array(rows).reshape(len(rows), domain.n_leads)
    return EigenData(np.array(eigenvalues), values, domain.circumference,
                     (q_min, q_max), domain.attachment_points)


@functools.lru_cache(maxsize=256)
def _spectrum_cached(domain, ceiling):
    if domain.is_uniform:
        q = domain.segments[0][2]
        nmax = int(math.sqrt(max(ceiling - q, 0.0)) * domain.circumference / (2 * math.pi)) + 1
        lev = q + (2 * np.pi * np.arange(nmax + 1) / domain.circumference) ** 2
        return tuple(float(x) for x in lev if x <= ceiling)
    return tuple(lam for lam, _ in _periodic_roots(domain, ceiling))


def spectrum(domain, lam_max):
    """Distinct eigenvalues up to at least ``lam_max`` (cached per domain)."""
    q_min, _ = domain.potential_range
    ceiling = max(math.ceil(lam_max) + 2.0, q_min + 2.0)
    return np.array(_spectrum_cached(domain, ceiling))


def load_domain(path):
    with open(path) as fh:
        return RingDomain.from_config(json.load(fh))
