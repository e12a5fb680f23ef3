"""Split-scan statistics for a single change point.

Every split ``c`` of ``X_1..X_n`` into a head of length ``c`` and a tail of
length ``d = n - c`` gets the two-sample Cramér-von Mises statistic

    W_n(c) = (c d / n) * integral (F_c - G_d)^2 dH_n,

where ``F_c``, ``G_d`` and ``H_n`` are the empirical cdfs of the head, the
tail and the pooled sample.  :func:`scan` returns all of them together with
their average, their maximum and the maximizing split.  :func:`mean_change_scan`
computes the analogous averaged squared two-sample Z statistic for a change
in mean.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .errors import (
    DegenerateSample,
    NonFinite,
    SplitOutOfRange,
    TiesPresent,
    TooShort,
)

JITTER_SCALE = 1e-9


def _readonly(a):
    a = np.array(a, dtype=np.float64, copy=True)
    a.setflags(write=False)
    return a


def ranks_of(values):
    """1-based ranks of untied values, as int64."""
    order = np.argsort(values, kind="stable")
    ranks = np.empty(len(values), dtype=np.int64)
    ranks[order] = np.arange(1, len(values) + 1)
    return ranks


@dataclass(frozen=True)
class Sample:
    """A validated observation sequence; row order is observation order."""

    values: np.ndarray
    metadata: dict = field(default_factory=dict, compare=False)

    @property
    def n(self) -> int:
        return int(self.values.shape[0])

    @property
    def ranks(self) -> np.ndarray:
        return ranks_of(self.values)


def validate_sample(raw, ties="reject", jitter_seed=None) -> Sample:
    """Check ``raw`` and wrap it as a :class:`Sample`.

    Parameters
    ----------
    raw : sequence of float
        Observations in time order.
    ties : {"reject", "jitter"}
        With ``"reject"`` any exact tie raises :class:`TiesPresent`.  With
        ``"jitter"`` every member of a tie group gets uniform noise of size
        ``1e-9 * range(raw)`` from a generator seeded by ``jitter_seed``; the
        seed, scale and number of perturbed values land in ``metadata``.
    """
    if ties not in ("reject", "jitter"):
        raise ValueError(f"unknown tie policy {ties!r}")
    x = np.asarray(raw, dtype=np.float64).ravel()
    if x.size < 2:
        raise TooShort(f"need at least 2 observations, got {x.size}")
    if not np.all(np.isfinite(x)):
        bad = np.flatnonzero(~np.isfinite(x))
        raise NonFinite(f"non-finite values at positions {bad[:10].tolist()}")
    tied = _tied_mask(x)
    metadata = {}
    if tied.any():
        n_tied = int(tied.sum())
        if ties == "reject":
            raise TiesPresent(f"{n_tied} tied values; ties violate the continuity assumption", n_tied)
        if jitter_seed is None:
            jitter_seed = int(np.random.SeedSequence().entropy % (1 << 63))
        span = float(np.ptp(x))
        scale = JITTER_SCALE * (span if span > 0 else max(abs(float(x[0])), 1.0))
        rng = np.random.default_rng(jitter_seed)
        x = x.copy()
        while tied.any():
            x[tied] += scale * rng.random(int(tied.sum()))
            tied = _tied_mask(x)
        metadata = {"jitter_seed": jitter_seed, "jitter_scale": scale, "jittered": n_tied}
    return Sample(_readonly(x), metadata)


def _tied_mask(x):
    order = np.argsort(x, kind="stable")
    xs = x[order]
    eq = xs[1:] == xs[:-1]
    mask_sorted = np.zeros(x.size, dtype=bool)
    mask_sorted[1:] |= eq
    mask_sorted[:-1] |= eq
    mask = np.empty_like(mask_sorted)
    mask[order] = mask_sorted
    return mask


def two_sample_cvm(sample: Sample, c: int) -> float:
    """W_n(c) from the rank computing formula.

    With ``r_1 < ... < r_c`` the pooled ranks of the head and ``s_1 < ... < s_d``
    those of the tail,

        W = U / (c d n) - (4 c d - 1) / (6 n),
        U = c * sum (r_i - i)^2 + d * sum (s_j - j)^2.

    The numerator is formed in exact integer arithmetic.
    """
    n = sample.n
    if not 1 <= c <= n - 1:
        raise SplitOutOfRange(f"split {c} outside 1..{n - 1}")
    d = n - c
    ranks = sample.ranks
    r = np.sort(ranks[:c]) - np.arange(1, c + 1)
    s = np.sort(ranks[c:]) - np.arange(1, d + 1)
    u = c * int(np.dot(r, r)) + d * int(np.dot(s, s))
    return (6 * u - (4 * c * d - 1) * c * d) / (6 * c * d * n)


@dataclass(frozen=True)
class ScanResult:
    w: np.ndarray
    wbar: float
    wmax: float
    c_hat: int
    c_hat_tied: bool

    @property
    def n(self) -> int:
        return self.w.shape[0] + 1


def scan_values(ranks) -> np.ndarray:
    """W_n(c) for c = 1..n-1 from a rank vector."""
    ranks = np.ascontiguousarray(ranks, dtype=np.int64)
    n = ranks.shape[0]
    if n <= _kernels.INT64_SAFE_N:
        return _kernels.scan_ranks(ranks)
    # exact combination in Python integers past the int64 range
    q, ell = _kernels.rank_moments(ranks)
    c = np.arange(1, n, dtype=object)
    k = n * (n + 1) * (2 * n + 1) // 6
    s = n * n * q.astype(object) - 2 * n * c * ell.astype(object) + c * c * k
    # int / int true division rounds correctly
    return (s / (n * n * c * (n - c))).astype(np.float64)


def scan(sample: Sample) -> ScanResult:
    """Scan every split of ``sample`` and aggregate.

    Costs O(n log n) through incremental rank updates.  ``c_hat`` is the
    smallest maximizing split; ``c_hat_tied`` flags a non-unique maximum.
    """
    w = scan_values(sample.ranks)
    w.setflags(write=False)
    wbar = _kernels.compensated_sum(w) / (sample.n - 1)
    c_hat = int(np.argmax(w)) + 1
    wmax = float(w[c_hat - 1])
    tied = bool(np.count_nonzero(w == wmax) > 1)
    return ScanResult(w, float(wbar), wmax, c_hat, tied)


@dataclass(frozen=True)
class MeanChangeResult:
    t: np.ndarray
    tbar2: float
    s1sq: float
    ts2: float


def _z_scan(x):
    """Z statistics (unit variance) for all splits along the last axis."""
    n = x.shape[-1]
    xc = x - x.mean(axis=-1, keepdims=True)
    head = np.cumsum(xc, axis=-1)[..., :-1]
    total = head[..., -1:] + xc[..., -1:]
    c = np.arange(1, n)
    d = n - c
    return (head - c / n * total) * np.sqrt(n / (c * d))


def successive_difference_variance(x):
    """Σ (X_{i+1} - X_i)^2 / (2 (n - 1)) along the last axis."""
    n = x.shape[-1]
    return np.sum(np.diff(x, axis=-1) ** 2, axis=-1) / (2 * (n - 1))


def mean_change_scan(sample: Sample) -> MeanChangeResult:
    """Averaged squared Z statistics for a change in mean.

    ``t[c-1]`` is the standardized difference of head and tail means with the
    variance taken as one; ``tbar2`` averages ``t**2`` over the n-1 splits;
    ``ts2`` divides ``tbar2`` by the successive-difference variance estimate
    ``s1sq``.
    """
    n = sample.n
    if n < 3:
        raise TooShort(f"mean-change scan needs n >= 3, got {n}")
    x = sample.values
    if np.ptp(x) == 0:
        raise DegenerateSample("constant sequence has zero variance")
    t = _z_scan(x)
    s1sq = float(successive_difference_variance(x))
    if s1sq <= 0:
        raise DegenerateSample("successive-difference variance is zero")
    tbar2 = math.fsum(t * t) / (n - 1)
    t.setflags(write=False)
    return MeanChangeResult(t, tbar2, s1sq, tbar2 / s1sq)


def mean_change_batch(x):
    """Row-wise (tbar2, s1sq, ts2) for a (B, n) array of raw rows."""
    x = np.asarray(x, dtype=np.float64)
    t = _z_scan(x)
    tbar2 = np.mean(t * t, axis=-1)
    s1sq = successive_difference_variance(x)
    return tbar2, s1sq, tbar2 / s1sq


def scan_batch(ranks):
    """Row-wise (wbar, wmax, c_hat) for a (B, n) int array of rank rows."""
    ranks = np.ascontiguousarray(ranks, dtype=np.int64)
    if ranks.shape[1] <= _kernels.INT64_SAFE_N:
        return _kernels.scan_ranks_batch(ranks)
    out = [scan_values(row) for row in ranks]
    wbar = np.array([_kernels.compensated_sum(w) / w.size for w in out])
    chat = np.array([int(np.argmax(w)) + 1 for w in out])
    wmax = np.array([w[c - 1] for w, c in zip(out, chat)])
    return wbar, wmax, chat
