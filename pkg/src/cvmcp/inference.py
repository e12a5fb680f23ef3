"""P-values for the split-scan statistics."""

from __future__ import annotations

from dataclasses import asdict, dataclass
from functools import lru_cache
from typing import Optional

import numpy as np

from . import _rng, core, spectrum
from .errors import UnsupportedCombination
from .quadform import QuadFormSpec, imhof_tail

KINDS = ("wbar", "wmax", "mean_change")
METHODS = ("asymptotic", "permutation")
DEFAULT_REPS = 9999
DEFAULT_M = spectrum.DEFAULT_M


@dataclass(frozen=True)
class TestReport:
    __test__ = False  # not a pytest class

    statistic_kind: str
    observed: float
    p_value: float
    method: str
    c_hat: Optional[int] = None
    reps: Optional[int] = None
    seed: Optional[int] = None
    truncation_M: Optional[int] = None
    n: Optional[int] = None
    variance: Optional[str] = None

    def to_dict(self):
        return {k: v for k, v in asdict(self).items() if v is not None}


@lru_cache(maxsize=32)
def limit_law(kind="wbar", M=DEFAULT_M) -> QuadFormSpec:
    """Truncated null limit law: retained weights plus the remainder mean."""
    tr = spectrum.truncate_spectrum(kind, M)
    return QuadFormSpec(tr.weights, None, tr.remainder_mean, f"{kind} M={M}")


def wbar_asymptotic_pvalue(wbar_observed, M=DEFAULT_M):
    """P(W_inf > w) from the truncated limit law; vectorized over ``w``."""
    if np.any(np.asarray(wbar_observed) < 0):
        raise ValueError("statistic must be nonnegative")
    return imhof_tail(limit_law("wbar", M), wbar_observed)


def mean_change_asymptotic_pvalue(statistic, M=DEFAULT_M):
    """Tail of the Anderson-Darling limit law at T-bar^2 or T_s^2."""
    if np.any(np.asarray(statistic) < 0):
        raise ValueError("statistic must be nonnegative")
    return imhof_tail(limit_law("anderson_darling", M), statistic)


def _statistic(kind, scan_result=None, mc_result=None, variance="estimated"):
    if kind == "wbar":
        return scan_result.wbar
    if kind == "wmax":
        return scan_result.wmax
    return mc_result.ts2 if variance == "estimated" else mc_result.tbar2


def permutation_pvalue(sample: core.Sample, kind="wbar", reps=DEFAULT_REPS, seed=None,
                       variance="estimated", workers=1) -> TestReport:
    """Add-one permutation p-value ``(1 + #{perm >= observed}) / (reps + 1)``.

    Each block of permutations draws from its own counter-keyed stream, so the
    count depends only on (seed, reps).
    """
    if kind not in KINDS:
        raise ValueError(f"unknown statistic {kind!r}")
    if reps < 99:
        raise ValueError("reps must be >= 99")
    seed = _rng.fresh_seed() if seed is None else int(seed)
    n = sample.n
    c_hat = None
    if kind == "mean_change":
        core.mean_change_scan(sample)  # validates n and variance
        x = sample.values
        pick = 2 if variance == "estimated" else 0
        # same arithmetic path as the permuted copies
        observed = float(core.mean_change_batch(x[None, :])[pick][0])

        def count(rng, size):
            perm = rng.permuted(np.broadcast_to(x, (size, n)), axis=1)
            return int(np.sum(core.mean_change_batch(perm)[pick] >= observed))
    else:
        res = core.scan(sample)
        observed = _statistic(kind, scan_result=res)
        c_hat = res.c_hat
        ranks = sample.ranks
        pick = 0 if kind == "wbar" else 1

        def count(rng, size):
            perm = rng.permuted(np.broadcast_to(ranks, (size, n)), axis=1)
            return int(np.sum(core.scan_batch(perm)[pick] >= observed))

    hits = sum(_rng.run_blocks(count, reps, seed, key=(KINDS.index(kind),), workers=workers))
    return TestReport(kind, float(observed), (1 + hits) / (reps + 1), "permutation", c_hat, reps, seed,
                      None, n, variance if kind == "mean_change" else None)


def run_test(sample: core.Sample, kind="wbar", method="asymptotic", M=DEFAULT_M, reps=DEFAULT_REPS,
             seed=None, variance="estimated", workers=1) -> TestReport:
    """Compute one statistic and its p-value by the requested method."""
    if kind not in KINDS:
        raise ValueError(f"unknown statistic {kind!r}")
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}")
    if variance not in ("estimated", "known"):
        raise ValueError("variance must be 'estimated' or 'known'")
    if method == "permutation":
        return permutation_pvalue(sample, kind, reps, seed, variance, workers)
    if kind == "wmax":
        raise UnsupportedCombination("no asymptotic null law is implemented for wmax; use permutation")
    if kind == "wbar":
        res = core.scan(sample)
        p = wbar_asymptotic_pvalue(res.wbar, M)
        return TestReport(kind, res.wbar, p, method, res.c_hat, None, None, M, sample.n)
    res = core.mean_change_scan(sample)
    stat = _statistic(kind, mc_result=res, variance=variance)
    p = mean_change_asymptotic_pvalue(stat, M)
    return TestReport(kind, stat, p, method, None, None, None, M, sample.n, variance)
