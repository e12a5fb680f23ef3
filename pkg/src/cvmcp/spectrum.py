"""Eigen-structure of the limiting covariance of the split-scan process.

The limit process has covariance ``chi(s, s') * psi(t, t')`` where ``psi`` is
the Brownian-bridge kernel and ``chi`` its variance-normalized version (the
Anderson-Darling kernel).  Their eigenvalues are ``1/(pi^2 k^2)`` and
``1/(j(j+1))``; the averaged statistic converges to
``sum_jk lambda_jk Z_jk^2`` with ``lambda_jk = 1/(j(j+1) pi^2 k^2)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.special import polygamma

from .errors import DomainError, IndexOutOfRange

WBAR_MEAN = 1.0 / 6.0
AD_MEAN = 1.0
DEFAULT_M = 200


def eigenvalue(j: int, k: int) -> float:
    """lambda_jk = 1 / (j (j+1) pi^2 k^2)."""
    if j < 1 or k < 1:
        raise IndexOutOfRange(f"indices must be >= 1, got ({j}, {k})")
    return 1.0 / (j * (j + 1) * math.pi**2 * k * k)


def psi_eigenfunction(k, t):
    """sqrt(2) sin(pi k t), orthonormal on [0, 1]."""
    if k < 1:
        raise IndexOutOfRange(f"k must be >= 1, got {k}")
    t = np.asarray(t, dtype=np.float64)
    if np.any((t < 0) | (t > 1)):
        raise DomainError("t must lie in [0, 1]")
    return np.sqrt(2.0) * np.sin(np.pi * k * t)


def legendre_q(j, u):
    """q_j(u) = P_j'(u), a polynomial of degree j-1.

    Three-term recurrence ``q_{j+1} = ((2j+1) u q_j - (j+1) q_{j-1}) / j``
    from ``q_1 = 1``, ``q_2 = 3u``, evaluated iteratively.
    """
    if j < 1:
        raise IndexOutOfRange(f"j must be >= 1, got {j}")
    u = np.asarray(u, dtype=np.float64)
    prev = np.ones_like(u)
    if j == 1:
        return prev
    cur = 3.0 * u
    for i in range(2, j):
        prev, cur = cur, ((2 * i + 1) * u * cur - (i + 1) * prev) / i
    return cur


def chi_eigenfunction(j, s):
    """2 sqrt((2j+1)/(j(j+1))) sqrt(s(1-s)) q_j(2s-1); zero at s in {0, 1}."""
    if j < 1:
        raise IndexOutOfRange(f"j must be >= 1, got {j}")
    s = np.asarray(s, dtype=np.float64)
    if np.any((s < 0) | (s > 1)):
        raise DomainError("s must lie in [0, 1]")
    norm = 2.0 * math.sqrt((2 * j + 1) / (j * (j + 1)))
    return norm * np.sqrt(s * (1.0 - s)) * legendre_q(j, 2.0 * s - 1.0)


def kernel(kind, a, b):
    """Covariance kernels: ``psi`` (Brownian bridge) or ``chi`` (normalized)."""
    if kind == "psi":
        if not (0 <= a <= 1 and 0 <= b <= 1):
            raise DomainError("psi arguments must lie in [0, 1]")
        return min(a, b) - a * b
    if kind == "chi":
        if not (0 < a < 1 and 0 < b < 1):
            raise DomainError("chi arguments must lie in (0, 1)")
        return (min(a, b) - a * b) / math.sqrt(a * (1 - a) * b * (1 - b))
    raise ValueError(f"unknown kernel {kind!r}")


@dataclass(frozen=True)
class EigenIndex:
    j: int
    k: Optional[int] = None


@dataclass(frozen=True)
class SpectrumTruncation:
    """The ``M`` largest weights of a spectrum plus the mean of the rest.

    ``j`` and ``k`` hold the eigen-indices of each retained weight (``k`` is
    all ones for the single-index Anderson-Darling spectrum).
    """

    kind: str
    j: np.ndarray
    k: np.ndarray
    weights: np.ndarray
    remainder_mean: float
    total_mean: float

    @property
    def M(self) -> int:
        return int(self.weights.shape[0])

    @property
    def entries(self):
        idx = [
            EigenIndex(int(a), int(b) if self.kind == "wbar" else None)
            for a, b in zip(self.j, self.k)
        ]
        return list(zip(idx, self.weights.tolist()))


def _grid_candidates(m):
    """All (j, k) with j(j+1)k^2 <= m(m+1).

    The k = 1 column alone supplies m pairs at or below that level, so the
    m smallest products (the m largest weights) are all enumerated.
    """
    bound = m * (m + 1)
    js, ks = [], []
    k = 1
    while 2 * k * k <= bound:
        lim = bound // (k * k)
        jmax = int((math.isqrt(4 * lim + 1) - 1) // 2)
        while (jmax + 1) * (jmax + 2) <= lim:
            jmax += 1
        while jmax * (jmax + 1) > lim:
            jmax -= 1
        r = np.arange(1, jmax + 1, dtype=np.int64)
        js.append(r)
        ks.append(np.full(jmax, k, dtype=np.int64))
        k += 1
    return np.concatenate(js), np.concatenate(ks)


def truncate_spectrum(kind="wbar", M=DEFAULT_M) -> SpectrumTruncation:
    """Retain the ``M`` largest weights; the rest contribute their mean.

    Ties in weight are ordered by j then k ascending.  The remainder mean is
    ``total_mean - sum(retained)`` with an exactly rounded sum.
    """
    if M < 1:
        raise ValueError("M must be >= 1")
    if kind == "wbar":
        j, k = _grid_candidates(M)
        prod = j * (j + 1) * k * k
        order = np.lexsort((k, j, prod))[:M]
        j, k = j[order], k[order]
        weights = 1.0 / (j * (j + 1) * k * k * math.pi**2)
        total = WBAR_MEAN
    elif kind == "anderson_darling":
        j = np.arange(1, M + 1, dtype=np.int64)
        k = np.ones(M, dtype=np.int64)
        weights = 1.0 / (j * (j + 1.0))
        total = AD_MEAN
    else:
        raise ValueError(f"unknown spectrum kind {kind!r}")
    rem = math.fsum([total, *(-weights)])
    for a in (j, k, weights):
        a.setflags(write=False)
    return SpectrumTruncation(kind, j, k, weights, max(rem, 0.0), total)


def grid_truncation(J: int, K: int) -> SpectrumTruncation:
    """The full J x K block of the two-index spectrum, sorted by weight."""
    j, k = np.meshgrid(np.arange(1, J + 1), np.arange(1, K + 1), indexing="ij")
    j, k = j.ravel().astype(np.int64), k.ravel().astype(np.int64)
    prod = j * (j + 1) * k * k
    order = np.lexsort((k, j, prod))
    j, k = j[order], k[order]
    weights = 1.0 / (j * (j + 1) * k * k * math.pi**2)
    rem = math.fsum([WBAR_MEAN, *(-weights)])
    for a in (j, k, weights):
        a.setflags(write=False)
    return SpectrumTruncation("wbar", j, k, weights, max(rem, 0.0), WBAR_MEAN)


def tail_mass(trunc: SpectrumTruncation) -> float:
    """Sum of the neglected wbar weights, computed column by column.

    For each k the retained j form a prefix ``1..J_k`` and the neglected part
    telescopes to ``1/(J_k + 1)``; columns with nothing retained sum to
    ``trigamma(K + 1) / pi^2``.  Independent of the ``1/6`` identity.
    """
    if trunc.kind != "wbar":
        return 1.0 / (int(trunc.j.max()) + 1)
    kmax = int(trunc.k.max())
    jk = np.zeros(kmax + 1, dtype=np.int64)
    np.maximum.at(jk, trunc.k, trunc.j)
    cols = np.arange(1, kmax + 1)
    parts = 1.0 / (math.pi**2 * cols**2 * (jk[1:] + 1.0))
    return math.fsum(parts) + float(polygamma(1, kmax + 1)) / math.pi**2
