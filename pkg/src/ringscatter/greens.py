"""Green's function of the ring operator at real regular points.

Two independent routes:

* :func:`green_direct` solves ``-G'' + (q - lam) G = delta_t`` on the ring with
  transfer matrices (continuity at ``t`` and a derivative jump of -1).
* :func:`green_series` uses the regularized eigenfunction expansion
  ``G_lam = G_ref + (lam - ref) sum_l phi_l(s) phi_l(t) / ((lam_l - ref)(lam_l - lam))``
  which converges absolutely because of the extra ``1/lam_l`` factor.
"""

import math
from dataclasses import dataclass

import numpy as np

from .domain import spectrum, transfer_matrix
from .errors import NearPoleError, TruncationError

POLE_GUARD = 1e-8
DEFAULT_REFERENCE = -1.0


@dataclass(frozen=True)
class GreenValue:
    lam: float
    s: float
    t: float
    value: float
    tail_bound: float = 0.0


def reference_lambda(domain):
    """Reference point for the series: -1, or lower if the ring potential
    reaches below it (the expansion wants ``ref`` under the spectrum)."""
    q_min, _ = domain.potential_range
    return min(DEFAULT_REFERENCE, q_min - 1.0)


def check_regular(domain, lam, eigenvalues=None, guard=POLE_GUARD):
    """Raise :class:`NearPoleError` if ``lam`` is within ``guard`` of the spectrum."""
    ev = spectrum(domain, lam + 1.0) if eigenvalues is None else np.asarray(eigenvalues)
    if ev.size:
        i = int(np.argmin(np.abs(ev - lam)))
        if abs(ev[i] - lam) <= guard:
            raise NearPoleError(lam, float(ev[i]), guard)


def green_column(domain, lam, t, points):
    """``G_lam(x, t)`` for every ``x`` in ``points`` (no regularity check)."""
    lengths, qs, marks = domain.pieces(t, points)
    mats = [transfer_matrix(ell, q, lam) for ell, q in zip(lengths, qs)]
    M = np.eye(2)
    for T in mats:
        M = T @ M
    # state (G, G') just after t solves (M - I) x = (0, 1); det M = 1 gives det(M - I) = 2 - tr M
    x = np.array([-M[0, 1], M[0, 0] - 1.0]) / (2.0 - M[0, 0] - M[1, 1])
    forward = [x]
    for T in mats:
        forward.append(T @ forward[-1])
    # just before t the state is x + (0, 1); walking back keeps growing modes from
    # amplifying roundoff over the long arc
    backward = [x + np.array([0.0, 1.0])]
    for T in reversed(mats):
        inv = np.array([[T[1, 1], -T[0, 1]], [-T[1, 0], T[0, 0]]])
        backward.append(inv @ backward[-1])
    backward.reverse()
    arc = np.concatenate([[0.0], np.cumsum(lengths)])
    half = 0.5 * domain.circumference
    return np.array([forward[k][0] if arc[k] <= half else backward[k][0] for k in marks])


def green_direct(domain, lam, s, t, eigenvalues=None):
    """Exact ring Green's function ``G_lam(s, t)`` at a regular real ``lam``."""
    lam = float(lam)
    check_regular(domain, lam, eigenvalues)
    value = green_column(domain, lam, float(t), [float(s)])[0]
    return GreenValue(lam, float(s), float(t), float(value))


def green_matrix(domain, lam, points=None, eigenvalues=None):
    """Symmetric matrix ``G_lam(a_s, a_t)`` over ``points`` (default: the leads)."""
    lam = float(lam)
    check_regular(domain, lam, eigenvalues)
    pts = domain.attachment_points if points is None else tuple(float(p) for p in points)
    G = np.array([green_column(domain, lam, t, pts) for t in pts]).T
    return 0.5 * (G + G.T)


def amplitude_estimate(eigendata, s_index, t_index):
    """Bound used for ``|phi_l(a_s) phi_l(a_t)|`` beyond the truncation.

    Free-ring value ``2/L`` inflated by the potential contrast, or the largest
    product seen in the upper half of the supplied modes if that is bigger.
    """
    M = eigendata.truncation_count
    q_min, q_max = eigendata.potential_range
    top = eigendata.values[M // 2:]
    observed = float(np.max(np.abs(top[:, s_index] * top[:, t_index]))) if len(top) else 0.0
    spread = (q_max - q_min) / max(eigendata.eigenvalues[-1] - q_max, 1.0)
    return max(2.0 / eigendata.circumference * (1.0 + spread), observed)


def series_tail_bound(eigendata, lam, s_index, t_index, ref_lambda=DEFAULT_REFERENCE):
    """Bound on the neglected terms ``l >= M`` of the regularized series.

    Uses ``lam_l >= q_min + (pi l / L)^2`` (min-max against the free ring) and
    an eigenfunction amplitude estimate ``|phi_l|^2 <= c * 2/L``. The sum over
    ``l^-4`` is bounded by its first term plus the integral.
    """
    M = eigendata.truncation_count
    L = eigendata.circumference
    q_min, _ = eigendata.potential_range
    if lam == ref_lambda:
        return 0.0
    x_M = (math.pi * M / L) ** 2
    d = max(lam, ref_lambda) - q_min
    if x_M <= max(d, 0.0) * 2:
        return math.inf
    amp = amplitude_estimate(eigendata, s_index, t_index)
    shrink = 1.0 - max(d, 0.0) / x_M
    tail_l4 = 1.0 / M**4 + 1.0 / (3.0 * M**3)
    return abs(lam - ref_lambda) * amp * (L / math.pi) ** 4 * tail_l4 / shrink**2


def green_series(eigendata, ref_values, lam, s_index, t_index, ref_lambda=DEFAULT_REFERENCE,
                 tol=None):
    """Regularized spectral series for ``G_lam(a_s, a_t)``.

    ``ref_values`` is the matrix ``G_ref(a_s, a_t)`` (e.g. from
    :func:`green_matrix` at ``ref_lambda``). If ``tol`` is given and the
    certified tail exceeds it, :class:`TruncationError` is raised.
    """
    lam = float(lam)
    ev = eigendata.eigenvalues
    i = int(np.argmin(np.abs(ev - lam)))
    if abs(ev[i] - lam) <= POLE_GUARD:
        raise NearPoleError(lam, float(ev[i]), POLE_GUARD)
    ref = np.asarray(ref_values)[s_index, t_index]
    prod = eigendata.values[:, s_index] * eigendata.values[:, t_index]
    terms = prod / ((ev - ref_lambda) * (ev - lam))
    # small terms first keeps the roundoff down for long series
    value = ref + (lam - ref_lambda) * math.fsum(terms[::-1])
    tail = series_tail_bound(eigendata, lam, s_index, t_index, ref_lambda)
    if tol is not None and tail > tol:
        raise TruncationError(
            f"tail bound {tail:.3g} exceeds tolerance {tol:.3g} with {len(ev)} modes; "
            f"increase the number of modes")
    a = eigendata.attachment_points
    return GreenValue(lam, a[s_index], a[t_index], float(value), tail)
