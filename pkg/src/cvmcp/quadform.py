"""Laws of weighted sums of (noncentral) chi-square variables.

A :class:`QuadFormSpec` describes ``Q = sum_i w_i (Z_i + delta_i)^2 + m`` for
iid standard normal ``Z_i``.  Upper tails come from Imhof's inversion
formula

    P(Q > x) = 1/2 + (1/pi) * int_0^inf sin(theta(u)) / (u rho(u)) du,

    theta(u) = 1/2 sum [atan(w u) + delta^2 w u / (1 + w^2 u^2)] - (x - m) u / 2,
    rho(u)   = prod (1 + w^2 u^2)^(1/4) * exp(1/2 sum delta^2 w^2 u^2 / (1 + w^2 u^2)).

The integral is cut at an upper limit certified by a truncation bound and
evaluated by adaptive Gauss-Kronrod quadrature; if the bound forces an
impractically long range the remainder is taken as a Fourier integral
(QAWF) instead.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, optimize

from .errors import ToleranceNotMet

log = logging.getLogger(__name__)

DEFAULT_TOL = 1e-6
# periods of sin(x u / 2) integrated directly before switching to QAWF
_MAX_PERIODS = 400
_BLOCK = 1 << 15


@dataclass(frozen=True)
class QuadFormSpec:
    weights: np.ndarray
    noncentralities: np.ndarray = None
    shift: float = 0.0
    label: str = ""

    def __post_init__(self):
        w = np.atleast_1d(np.asarray(self.weights, dtype=np.float64))
        if self.noncentralities is None:
            d = np.zeros_like(w)
        else:
            d = np.atleast_1d(np.asarray(self.noncentralities, dtype=np.float64))
        if w.shape != d.shape or w.ndim != 1:
            raise ValueError("weights and noncentralities must be 1-d of equal length")
        if w.size == 0 or np.any(w <= 0) or not np.all(np.isfinite(w)):
            raise ValueError("weights must be positive and finite")
        if not np.all(np.isfinite(d)):
            raise ValueError("noncentralities must be finite")
        if not (math.isfinite(self.shift) and self.shift >= 0):
            raise ValueError("shift must be a nonnegative real")
        order = np.argsort(-w, kind="stable")
        w, d = w[order], d[order]
        w.setflags(write=False)
        d.setflags(write=False)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "noncentralities", d)
        object.__setattr__(self, "shift", float(self.shift))

    @property
    def mean(self) -> float:
        return float(np.sum(self.weights * (1.0 + self.noncentralities**2)) + self.shift)

    def scaled(self, factor):
        return QuadFormSpec(self.weights * factor, self.noncentralities, self.shift * factor, self.label)

    def with_shift(self, shift):
        return QuadFormSpec(self.weights, self.noncentralities, shift, self.label)


@dataclass(frozen=True)
class TailResult:
    """Tail probability with inversion diagnostics."""

    p: float
    abserr: float
    upper_limit: float
    truncation_bound: float
    clamped: bool = False
    tail_method: str = "direct"
    extra: dict = field(default_factory=dict, compare=False)


class _Integrand:
    """x-independent parts of the Imhof integrand."""

    def __init__(self, spec: QuadFormSpec):
        self.w = spec.weights
        self.d2 = spec.noncentralities**2
        self.k = 0.5 * self.w.size

    def parts(self, u):
        """phase without the -x u/2 term, and log rho, for an array of u."""
        u = np.asarray(u, dtype=np.float64)[..., None]
        wu = self.w * u
        wu2 = wu * wu
        denom = 1.0 + wu2
        phase = 0.5 * np.sum(np.arctan(wu) + self.d2 * wu / denom, axis=-1)
        log_rho = 0.25 * np.sum(np.log1p(wu2), axis=-1) + 0.5 * np.sum(self.d2 * wu2 / denom, axis=-1)
        return phase, log_rho

    def truncation_bound(self, upper):
        """Bound on |P error| from cutting the integral at ``upper``.

        For u >= U each factor obeys (1 + w^2 u^2) >= (1 + w^2 U^2) (u/U)^(2 a)
        with a = w^2 U^2 / (1 + w^2 U^2), so rho(u) >= rho(U) (u/U)^kappa with
        kappa = sum a / 2, and the neglected integral is at most
        1 / (pi kappa rho(U)).
        """
        wu2 = (self.w * upper) ** 2
        kappa = 0.5 * np.sum(wu2 / (1.0 + wu2))
        _, log_rho = self.parts(upper)
        return float(math.exp(-float(log_rho)) / (math.pi * kappa))

    def upper_limit(self, tol):
        """Smallest U (to 1%) with truncation_bound(U) <= tol."""
        lo = 1.0 / self.w[0]
        if self.truncation_bound(lo) <= tol:
            return lo
        hi = lo
        while self.truncation_bound(hi) > tol:
            lo, hi = hi, hi * 4.0
            if hi > 1e300:
                raise ToleranceNotMet("no finite integration limit meets the truncation tolerance")
        while hi / lo > 1.01:
            mid = math.sqrt(lo * hi)
            if self.truncation_bound(mid) > tol:
                lo = mid
            else:
                hi = mid
        return hi


def _direct_integral(f, lo, hi, epsabs, period):
    n_pieces = max(1, min(int(math.ceil((hi - lo) / period)), 2000))
    points = np.linspace(lo, hi, n_pieces + 1)[1:-1]
    res, err = integrate.quad_vec(f, lo, hi, epsabs=epsabs, epsrel=0.0, norm="max",
                                  points=points if points.size else None, limit=20000)
    return res, err


def _fourier_tail(integrand, xp, lo, epsabs):
    """int_lo^inf sin(phase - xp u/2) / (u rho) du by QAWF on both quadratures."""
    omega = 0.5 * xp

    def amp_sin(u):
        ph, lr = integrand.parts(u)
        return float(np.sin(ph) * np.exp(-lr) / u)

    def amp_cos(u):
        ph, lr = integrand.parts(u)
        return float(np.cos(ph) * np.exp(-lr) / u)

    # sin(a - b) = sin a cos b - cos a sin b
    r1, e1 = integrate.quad(amp_sin, lo, np.inf, weight="cos", wvar=omega, epsabs=epsabs, limlst=200)
    r2, e2 = integrate.quad(amp_cos, lo, np.inf, weight="sin", wvar=omega, epsabs=epsabs, limlst=200)
    return r1 - r2, e1 + e2


def imhof_tail_detailed(spec: QuadFormSpec, x, tol=DEFAULT_TOL) -> list:
    """Vectorized P(Q > x) with diagnostics, one :class:`TailResult` per x."""
    xs = np.atleast_1d(np.asarray(x, dtype=np.float64))
    xp = xs - spec.shift
    out = [None] * xs.size
    live = np.flatnonzero(xp > 0)
    for i in np.flatnonzero(xp <= 0):
        out[i] = TailResult(1.0, 0.0, 0.0, 0.0)
    if live.size == 0:
        return out
    integrand = _Integrand(spec)
    u_bound = integrand.upper_limit(tol / 4.0)
    xl = xp[live]
    period = 4.0 * math.pi / float(xl.max())
    u_cap = _MAX_PERIODS * period
    upper = min(u_bound, max(u_cap, 1.0 / spec.weights[0]))
    trunc = integrand.truncation_bound(upper)

    def f(u):
        ph, lr = integrand.parts(u)
        return np.sin(ph - 0.5 * xl * u) * math.exp(-float(lr)) / u

    body, err = _direct_integral(f, 0.0, upper, math.pi * tol / 4.0, period)
    body = np.atleast_1d(body)
    errs = np.full(xl.size, float(err))
    method = "direct"
    if trunc > tol / 4.0:
        method = "direct+qawf"
        for pos in range(xl.size):
            t, e = _fourier_tail(integrand, float(xl[pos]), upper, math.pi * tol / 8.0)
            body[pos] += t
            errs[pos] += e
        trunc = 0.0
    for pos, i in enumerate(live):
        abserr = errs[pos] / math.pi + trunc
        if abserr > tol:
            raise ToleranceNotMet(
                f"inversion error estimate {abserr:.3g} exceeds tolerance {tol:.3g} at x={xs[i]:.6g}"
            )
        p = 0.5 + body[pos] / math.pi
        clamped = bool(p < 0.0 or p > 1.0)
        if clamped:
            log.debug("clamped tail %.3g to [0, 1] at x=%.6g", p, xs[i])
        out[i] = TailResult(min(max(p, 0.0), 1.0), abserr, upper, trunc, clamped, method)
    return out


def imhof_tail(spec: QuadFormSpec, x, tol=DEFAULT_TOL):
    """P(Q > x); a float for scalar ``x``, an array otherwise."""
    res = imhof_tail_detailed(spec, x, tol)
    p = np.array([r.p for r in res])
    return float(p[0]) if np.ndim(x) == 0 else p


def simulate(spec: QuadFormSpec, draws: int, seed):
    """``draws`` independent copies of Q, generated block-wise from ``seed``."""
    ss = np.random.SeedSequence(seed)
    out = np.empty(draws, dtype=np.float64)
    n_blocks = -(-draws // _BLOCK)
    for b, child in enumerate(ss.spawn(n_blocks)):
        rng = np.random.Generator(np.random.Philox(child))
        lo = b * _BLOCK
        size = min(_BLOCK, draws - lo)
        z = rng.standard_normal((size, spec.weights.size)) + spec.noncentralities
        out[lo:lo + size] = (z * z) @ spec.weights + spec.shift
    return out


def mc_tail(spec: QuadFormSpec, x, draws=10**6, seed=0):
    """Monte Carlo P(Q > x) and its binomial standard error."""
    if draws < 10**4:
        raise ValueError("draws must be >= 10^4")
    q = simulate(spec, draws, seed)
    p = float(np.mean(q > x))
    return p, math.sqrt(p * (1.0 - p) / draws)


def quantile(spec: QuadFormSpec, alpha, tol=DEFAULT_TOL):
    """Upper-alpha point: x with P(Q > x) = alpha."""
    if not 0 < alpha < 1:
        raise ValueError("alpha must lie in (0, 1)")

    def g(x):
        return imhof_tail(spec, x, tol) - alpha

    lo = spec.shift
    scale = float(np.sum(spec.weights * (1.0 + spec.noncentralities**2)))
    hi = spec.shift + 50.0 * scale
    while g(hi) > 0:
        lo, hi = hi, spec.shift + 2.0 * (hi - spec.shift)
        if hi - spec.shift > 1e6 * scale:
            raise ToleranceNotMet("could not bracket the quantile")
    x = optimize.brentq(g, lo, hi, xtol=1e-12 * max(scale, 1e-300), rtol=4 * np.finfo(float).eps, maxiter=200)
    if abs(g(x)) > tol:
        raise ToleranceNotMet(f"quantile residual {g(x):.3g} exceeds {tol:.3g}")
    return float(x)
