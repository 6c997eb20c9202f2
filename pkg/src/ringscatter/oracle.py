"""Brute-force scattering solver used to cross-check the Q-matrix route.

The ring is cut at every segment boundary and attachment point. Each piece
carries two unknown coefficients of an explicit local basis (cos/sin, cosh/sinh
or linear) and each lead one outgoing amplitude. At a plain cut the solution
and its derivative are continuous. At the attachment point ``a_s`` the lead
wave ``e^{-ikx} delta_{s,in} + e^{ikx} S_s`` is matched through::

    u_s(0) = beta * u(a_s)                   (lead value = beta * regular amplitude)
    u'(a_s+) - u'(a_s-) = -beta * u_s'(0)    (derivative jump = -singular amplitude)

Nothing here goes through transfer matrices or Green's functions.
"""

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import NearResonanceWarning
from .scattering import ScatteringMatrix, unitarity_defect

CONDITION_LIMIT = 1e12


def _basis(w, y):
    """Values and derivatives of the two local basis functions at ``y``."""
    if w > 0:
        k = math.sqrt(w)
        return (math.cos(k * y), math.sin(k * y) / k), (-k * math.sin(k * y), math.cos(k * y))
    if w < 0:
        kap = math.sqrt(-w)
        return (math.cosh(kap * y), math.sinh(kap * y) / kap), (kap * math.sinh(kap * y), math.cosh(kap * y))
    return (1.0, y), (0.0, 1.0)


@dataclass(frozen=True, eq=False)
class MatchingSystem:
    matrix: np.ndarray
    rhs: np.ndarray
    n_pieces: int
    n_leads: int

    def solve(self):
        cond = np.linalg.cond(self.matrix)
        if not cond < CONDITION_LIMIT:
            warnings.warn(f"matching system condition number {cond:.3g}; near a resonance",
                          NearResonanceWarning, stacklevel=3)
        return np.linalg.solve(self.matrix, self.rhs)


def matching_system(domain, lam, beta, incoming):
    L = domain.circumference
    tol = 1e-12 * L
    cuts = sorted({a for a, b, _ in domain.segments if b > a} | set(domain.attachment_points))
    merged = []
    for c in cuts:
        if not merged or c - merged[-1] > tol:
            merged.append(c)
    B = len(merged)
    lengths = [(merged[(j + 1) % B] - merged[j]) % L or L for j in range(B)]
    if B == 1:
        lengths = [L]
    qs = [domain.potential_at(merged[j] + 0.5 * lengths[j]) for j in range(B)]
    lead_of = {}
    for s, a in enumerate(domain.attachment_points):
        j = min(range(B), key=lambda i: min(abs(merged[i] - a), L - abs(merged[i] - a)))
        lead_of[j] = s

    N = domain.n_leads
    size = 2 * B + N
    A = np.zeros((size, size), dtype=complex)
    rhs = np.zeros(size, dtype=complex)
    k = math.sqrt(lam)
    row = 0
    for j in range(B):
        prev = (j - 1) % B
        (c0, s0), (dc0, ds0) = _basis(lam - qs[j], 0.0)
        (c1, s1), (dc1, ds1) = _basis(lam - qs[prev], lengths[prev])
        # value continuity
        A[row, 2 * j] += c0
        A[row, 2 * j + 1] += s0
        A[row, 2 * prev] -= c1
        A[row, 2 * prev + 1] -= s1
        row += 1
        # derivative continuity or jump
        A[row, 2 * j] += dc0
        A[row, 2 * j + 1] += ds0
        A[row, 2 * prev] -= dc1
        A[row, 2 * prev + 1] -= ds1
        if j in lead_of:
            s = lead_of[j]
            # jump + beta * (ik S_s - ik delta) = 0
            A[row, 2 * B + s] = 1j * k * beta
            rhs[row] = 1j * k * beta * (s == incoming)
            row += 1
            # beta * u(a_s) - S_s = delta
            A[row, 2 * j] = beta * c0
            A[row, 2 * j + 1] = beta * s0
            A[row, 2 * B + s] = -1.0
            rhs[row] = 1.0 * (s == incoming)
        row += 1
    return MatchingSystem(A, rhs, B, N)


def scatter_direct(domain, lam, beta, incoming_ray):
    """Column ``incoming_ray`` of the scattering matrix by direct matching."""
    if not lam > 0:
        raise ValueError(f"lambda must be positive, got {lam!r}")
    if not 0 <= incoming_ray < domain.n_leads:
        raise IndexError(f"incoming ray {incoming_ray} out of range")
    system = matching_system(domain, float(lam), float(beta), incoming_ray)
    x = system.solve()
    return x[2 * system.n_pieces:]


def assemble_full_s(domain, lam, beta, check_tol=1e-9):
    """Full scattering matrix, column by column; checks unitarity and symmetry."""
    S = np.column_stack([scatter_direct(domain, lam, beta, s) for s in range(domain.n_leads)])
    defect = unitarity_defect(S)
    asym = float(np.max(np.abs(S - S.T)))
    if defect > check_tol or asym > check_tol:
        warnings.warn(f"direct S-matrix unitarity defect {defect:.3g}, asymmetry {asym:.3g}",
                      NearResonanceWarning, stacklevel=2)
    return ScatteringMatrix(float(lam), float(beta), S)
