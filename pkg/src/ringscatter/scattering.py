"""Scattering matrix of the ring with beta-coupled leads.

With ``X = i k beta^2 Q`` the exact result is the Cayley form
``S = -(I + X)(I - X)^{-1}``. At an eigenvalue the pole of ``Q`` is handled by
factoring out ``E0 = I - i k beta^2 D0 / (lam0 - lam)``, whose limits give::

    S(lam0) = -(I - 2 P0 + i k0 beta^2 Q0 P0perp)(I - i k0 beta^2 Q0 P0perp)^{-1}

and for weak coupling ``S(lam0) = -I + 2 P0 - 2 sum_{s>=1} (i k0 beta^2 P0perp Q0 P0perp)^s``.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import DivergenceError

DEFECT_NORM = "frobenius"
DEFAULT_ORDER = 8


@dataclass(frozen=True, eq=False)
class ScatteringMatrix:
    lam: float
    beta: float
    S: np.ndarray
    remainder_bound: float = 0.0

    @property
    def k(self):
        return math.sqrt(self.lam)

    @property
    def n(self):
        return self.S.shape[0]

    def to_dict(self):
        return {
            "lambda": self.lam, "k": self.k, "beta": self.beta,
            "shape": list(self.S.shape),
            "entries": [[float(z.real), float(z.imag)] for z in self.S.ravel()],
            "unitarity_defect": unitarity_defect(self.S),
            "defect_norm": DEFECT_NORM,
        }


def _check(lam, beta):
    if not lam > 0:
        raise ValueError(f"lambda must be positive for propagating lead modes, got {lam!r}")
    if not beta >= 0:
        raise ValueError(f"beta must be non-negative, got {beta!r}")


def smatrix(Q, beta):
    """Exact scattering matrix from a :class:`~ringscatter.qmatrix.QMatrix`."""
    lam = Q.lam
    _check(lam, beta)
    k = math.sqrt(lam)
    X = 1j * k * beta**2 * Q.entries
    eye = np.eye(Q.n)
    # X is symmetric so (I+X) and (I-X)^{-1} commute
    S = -np.linalg.solve(eye - X, eye + X)
    return ScatteringMatrix(lam, float(beta), S)


def smatrix_at_resonance(res, beta):
    """Exact ``lim_{lam -> lam0} S(lam)`` without touching the pole."""
    lam0 = res.lam0
    _check(lam0, beta)
    k0 = math.sqrt(lam0)
    eye = np.eye(res.n)
    perp = eye - res.P0
    XP = 1j * k0 * beta**2 * res.Q0 @ perp
    S = -(eye - 2 * res.P0 + XP) @ np.linalg.inv(eye - XP)
    return ScatteringMatrix(lam0, float(beta), S)


def smatrix_near_resonance(res, beta, lam, regular=None):
    """Exact ``S(lam)`` for ``lam`` next to the eigenvalue ``res.lam0``.

    Uses ``Q(lam) = D0 / (lam0 - lam) + R(lam)`` with ``R`` from
    ``res.regular`` (or the matrix ``regular``) and the factorization
    ``S = -(E0^* E0^{-1} + X E0^{-1})(I - X E0^{-1})^{-1}``, ``X = i k beta^2 R``,
    whose factors stay bounded as ``lam -> lam0``. At ``lam = lam0`` this is
    :func:`smatrix_at_resonance`.
    """
    lam = float(lam)
    _check(lam, beta)
    k = math.sqrt(lam)
    eye = np.eye(res.n)
    R = res.regular(lam) if regular is None else np.asarray(regular)
    live = res.V[:, :res.rank] / res.image_norms[:res.rank]
    perp = eye - res.P0
    if lam == res.lam0:
        inv = perp.astype(complex)
        ratio = perp - res.P0
    else:
        a = k * beta**2 * res.image_norms[:res.rank] ** 2 / (res.lam0 - lam)
        inv = perp + (live / (1 - 1j * a)) @ live.T
        ratio = perp + (live * ((1 + 1j * a) / (1 - 1j * a))) @ live.T
    XE = 1j * k * beta**2 * R @ inv
    S = -np.linalg.solve((eye - XE).T, (ratio + XE).T).T
    return ScatteringMatrix(lam, float(beta), S)


def smatrix_asymptotic(res, beta, order=DEFAULT_ORDER):
    """Weak-coupling series truncated after ``order`` terms.

    The Frobenius norm of the dropped terms is at most
    ``2 sqrt(N) r^(order+1) / (1 - r)``, ``r`` the spectral radius of
    ``k0 beta^2 P0perp Q0 P0perp``; this is stored as ``remainder_bound``.
    """
    if order < 0 or int(order) != order:
        raise ValueError("order must be a non-negative integer")
    lam0 = res.lam0
    _check(lam0, beta)
    k0 = math.sqrt(lam0)
    eye = np.eye(res.n)
    perp = eye - res.P0
    inner = k0 * beta**2 * perp @ res.Q0 @ perp
    radius = float(np.max(np.abs(np.linalg.eigvalsh(0.5 * (inner + inner.T)))))
    if radius >= 1:
        raise DivergenceError(
            f"spectral radius {radius:.3g} >= 1; the weak-coupling series diverges, "
            f"use smatrix_at_resonance")
    term = 1j * inner
    power = eye.astype(complex)
    total = np.zeros_like(power)
    for _ in range(int(order)):
        power = power @ term
        total += power
    S = -eye + 2 * res.P0 - 2 * total
    bound = 2 * math.sqrt(res.n) * radius ** (order + 1) / (1 - radius)
    return ScatteringMatrix(lam0, float(beta), S, bound)


def unitarity_defect(S):
    """Frobenius norm of ``S^* S - I``."""
    S = getattr(S, "S", S)
    S = np.atleast_2d(np.asarray(S))
    return float(np.linalg.norm(S.conj().T @ S - np.eye(S.shape[0])))
