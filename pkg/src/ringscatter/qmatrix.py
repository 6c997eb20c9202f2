"""The Q-matrix ``B = Q A`` and its pole structure at an eigenvalue.

In one dimension the Green's function is continuous, so the regularized
diagonal ``g^s(lam)`` is taken as ``G_lam(a_s, a_s)`` and the whole matrix is
``Q_st(lam) = G_lam(a_s, a_t)``. Near an eigenvalue ``lam0``::

    Q(lam) = D0 / (lam0 - lam) + Q0(lam),   D0 = V V^T

where the columns of ``V`` are eigenfunction values at the attachment points.
"""

import math
from dataclasses import dataclass

import numpy as np

from .domain import piecewise_ring_eigendata, uniform_ring_eigendata
from .errors import NotAnEigenvalueError
from .greens import amplitude_estimate, green_matrix, reference_lambda

EIGEN_MATCH_TOL = 1e-9
NULL_COLUMN_TOL = 1e-10
REGULAR_PART_ORDER = 3


@dataclass(frozen=True, eq=False)
class QMatrix:
    lam: float
    entries: np.ndarray

    @property
    def n(self):
        return self.entries.shape[0]

    def to_dict(self):
        return {"lambda": self.lam, "shape": list(self.entries.shape),
                "entries": self.entries.ravel().tolist()}


@dataclass(frozen=True, eq=False)
class ResonanceData:
    lam0: float
    multiplicity: int
    V: np.ndarray  # N x p, columns mutually orthogonal
    rank: int
    image_norms: np.ndarray
    D0: np.ndarray
    P0: np.ndarray
    Q0: np.ndarray
    tail_bound: float = 0.0
    regular: object = None  # RegularPart, for Q near lam0

    @property
    def n(self):
        return self.P0.shape[0]

    def to_dict(self):
        def mat(a):
            a = np.atleast_2d(a)
            return {"shape": list(a.shape), "entries": a.ravel().tolist()}

        return {
            "lambda0": self.lam0, "multiplicity": self.multiplicity, "rank": self.rank,
            "image_norms": self.image_norms.tolist(), "V": mat(self.V),
            "D0": mat(self.D0), "P0": mat(self.P0), "Q0": mat(self.Q0),
            "tail_bound": self.tail_bound,
        }


def build_q(domain, eigendata, lam):
    """Q-matrix at a regular real ``lam``.

    ``eigendata`` (may be None) supplies the eigenvalues for the near-pole
    check; otherwise the domain spectrum is used. Close to a degenerate level
    the direct solve loses about ``eps / (lam - lam0)^2`` in absolute terms;
    there :class:`RegularPart` gives the same matrix accurately.
    """
    eigenvalues = None
    if eigendata is not None and eigendata.truncation_count and lam < eigendata.eigenvalues[-1]:
        eigenvalues = eigendata.eigenvalues
    return QMatrix(float(lam), green_matrix(domain, lam, eigenvalues=eigenvalues))


def orthogonalize_images(V):
    """Rotate an orthonormal eigenbasis so its point-value images are orthogonal.

    ``V`` is N x p (column i = values of the i-th eigenfunction at the leads).
    Returns ``(V @ W, m, norms)`` with ``W`` orthogonal diagonalizing the Gram
    matrix ``V^T V``; columns are sorted by decreasing norm and ``m`` counts
    those above the null threshold.
    """
    V = np.asarray(V, dtype=float)
    if V.ndim == 1:
        V = V[:, None]
    if V.shape[1] == 1:
        norm = np.linalg.norm(V[:, 0])
        return V.copy(), int(norm > NULL_COLUMN_TOL), np.array([norm])
    gram = V.T @ V
    w, W = np.linalg.eigh(gram)
    order = np.argsort(w)[::-1]
    W = W[:, order]
    rotated = V @ W
    norms = np.linalg.norm(rotated, axis=0)
    scale = max(norms.max(), 1.0)
    m = int(np.sum(norms > NULL_COLUMN_TOL * scale))
    return rotated, m, norms


def _divided_differences(mats, nodes):
    """Newton divided differences ``f[x_0], f[x_0, x_1], ...`` of matrix values."""
    table = list(mats)
    out = [table[0]]
    for j in range(1, len(nodes)):
        table = [(table[i + 1] - table[i]) / (nodes[i + j] - nodes[i]) for i in range(len(table) - 1)]
        out.append(table[0])
    return out


def regular_part_tail_bound(eigendata, lam0, nodes, s_index, t_index):
    """Bound on the dropped modes ``l >= M`` of the regular-part series.

    Each dropped term is at most ``amp * prod|lam0 - mu| / ((lam_l - lam0) prod(lam_l - mu))``
    with ``lam_l >= q_min + (pi l / L)^2``; the resulting ``l^-(2n+2)`` sum is
    bounded by its first term plus the integral.
    """
    M = eigendata.truncation_count
    L = eigendata.circumference
    q_min, _ = eigendata.potential_range
    n = len(nodes)
    x_M = (math.pi * M / L) ** 2
    d = max([lam0] + list(nodes)) - q_min
    if x_M <= max(d, 0.0) * 2:
        return math.inf
    shrink = 1.0 - max(d, 0.0) / x_M
    p = 2 * n + 2
    tail = 1.0 / M**p + 1.0 / ((p - 1) * M ** (p - 1))
    scale = math.prod(abs(lam0 - mu) for mu in nodes)
    amp = amplitude_estimate(eigendata, s_index, t_index)
    return scale * amp * (L / math.pi) ** p * tail / shrink ** (n + 1)


class RegularPart:
    """``R(lam) = Q(lam) - D0 / (lam0 - lam)`` near the eigenvalue ``lam0``.

    Built from ``order`` reference points ``mu_j = ref - j`` below the
    spectrum. With exact divided differences ``G[mu_1..mu_j]`` of the Green's
    matrix::

        R(lam) = sum_j prod_{i<j}(lam - mu_i) (G[mu_1..mu_j] - D0 / prod_{i<=j}(lam0 - mu_i))
                 + prod_j (lam - mu_j) * sum_{lam_l != lam0} phi_l phi_l^T / ((lam_l - lam) prod_j (lam_l - mu_j))

    For ``order = 1`` and ``lam = lam0`` this is the resonance-free spectral
    series with reference ``mu``; every extra reference point makes the
    remaining series decay faster by a factor ``lam_l``. ``R`` is smooth at
    ``lam0``, so it can be evaluated right next to the pole without the
    cancellation that a direct Green's solve suffers there.
    """

    def __init__(self, domain, eigendata, idx, D0, ref_lambda, order):
        ev = eigendata.eigenvalues
        self.lam0 = float(np.mean(ev[idx]))
        self.D0 = D0
        self.nodes = [ref_lambda - j for j in range(int(order))]
        self.diffs = _divided_differences([green_matrix(domain, mu) for mu in self.nodes], self.nodes)
        rest = np.ones(len(ev), dtype=bool)
        rest[idx] = False
        self._phi = eigendata.values[rest]
        self._lam = ev[rest]
        self._eigendata = eigendata

    def __call__(self, lam):
        lam = float(lam)
        n = self.D0.shape[0]
        R = np.zeros((n, n))
        coeff = 1.0
        pole = 1.0
        for mu, dd in zip(self.nodes, self.diffs):
            pole *= self.lam0 - mu
            R += coeff * (dd - self.D0 / pole)
            coeff *= lam - mu
        weights = coeff / (self._lam - lam)
        for mu in self.nodes:
            weights = weights / (self._lam - mu)
        # ascending magnitude of weights is descending mode index; sum the tail first
        order_idx = np.argsort(np.abs(weights))
        phi = self._phi[order_idx]
        phi_w = phi * weights[order_idx, None]
        for chunk in np.array_split(np.arange(len(order_idx)), max(1, len(order_idx) // 256)):
            R += phi_w[chunk].T @ phi[chunk]
        return 0.5 * (R + R.T)

    def tail_bound(self, lam):
        n = self.D0.shape[0]
        tail = max(regular_part_tail_bound(self._eigendata, lam, self.nodes, s, t)
                   for s in range(n) for t in range(n))
        # rounding in G grows by at most 2^j through the j-th divided difference
        weights = np.cumprod([1.0] + [abs(lam - mu) for mu in self.nodes[:-1]])
        scale = float(np.max(np.abs(self.diffs[0]))) + 1.0
        return tail + 64 * np.finfo(float).eps * scale * float(
            np.sum(weights * 2.0 ** np.arange(len(self.nodes))))


def resonance_data(domain, eigendata, lam0, ref_lambda=None, order=REGULAR_PART_ORDER):
    """Pole matrix, projector and regular part of Q at the eigenvalue ``lam0``.

    ``Q0`` is :class:`RegularPart` evaluated at ``lam0``; the expansion itself
    is kept on the result (``regular``) for evaluation near the pole.
    """
    if order < 1 or int(order) != order:
        raise ValueError("order must be a positive integer")
    ev = eigendata.eigenvalues
    hit = np.abs(ev - lam0) < EIGEN_MATCH_TOL
    if not hit.any():
        raise NotAnEigenvalueError(f"lambda0={lam0!r} is not among the {len(ev)} eigenvalues supplied")
    idx = np.nonzero(hit)[0]
    if idx[-1] == len(ev) - 1 and len(ev) > 1:
        raise NotAnEigenvalueError(
            f"lambda0={lam0!r} is the last supplied eigenvalue; its eigenspace may be truncated")
    if ref_lambda is None:
        ref_lambda = reference_lambda(domain)

    V, m, norms = orthogonalize_images(eigendata.values[idx].T)
    D0 = V @ V.T
    live = V[:, :m] / norms[:m]
    P0 = live @ live.T
    regular = RegularPart(domain, eigendata, idx, D0, ref_lambda, order)
    lam0 = regular.lam0
    return ResonanceData(lam0, len(idx), V, m, norms, D0, P0, regular(lam0), regular.tail_bound(lam0),
                         regular)


def default_eigendata(domain, lam_hint=0.0):
    """Eigendata deep enough for Q0 at eigenvalues up to ``lam_hint``.

    Uniform rings use the analytic spectrum (4001 modes); piecewise rings are
    scanned up to ``max(400, 4 * lam_hint)``.
    """
    if domain.is_uniform:
        return uniform_ring_eigendata(domain.circumference, domain.segments[0][2], 4001,
                                      domain.attachment_points)
    q_min, _ = domain.potential_range
    return piecewise_ring_eigendata(domain, max(400.0, 4 * abs(lam_hint), q_min + 400.0))
