"""Asymptotic power of the averaged statistic under contiguous alternatives.

On the probability-integral scale the head density is ``1 + phi_f/sqrt(n)``
and the tail density ``1 + phi_g/sqrt(n)``, with the change at fraction
``u``.  The scan process then acquires the mean ``mu_chi(s) * mu_psi(t)`` and
the averaged statistic converges to

    sum_jk (sqrt(lambda_jk) Z_jk + eta_j tau_k)^2
        = sum_jk lambda_jk (Z_jk + eta_j tau_k / sqrt(lambda_jk))^2,

with ``eta_j`` and ``tau_k`` the coordinates of ``mu_chi`` and ``mu_psi`` in
the two eigenbases and ``lambda_jk = 1/(j (j+1) pi^2 k^2)``.  The
standardized noncentrality of term (j, k) is therefore
``eta_j tau_k sqrt(j (j+1)) pi k``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy import integrate
from scipy.special import ndtri

from . import spectrum
from .errors import DomainError, QuadratureFailure
from .quadform import QuadFormSpec, imhof_tail, quantile

QUAD_TOL = 1e-8
EULER_GAMMA = 0.5772156649015329


def _zero(t):
    return np.zeros_like(np.asarray(t, dtype=np.float64))


def _quad(f, a, b, points=None, epsabs=QUAD_TOL):
    with np.errstate(all="ignore"):
        val, err, info = integrate.quad(f, a, b, points=points, epsabs=epsabs, epsrel=0.0,
                                        limit=500, full_output=True)[:3]
    if err > 10 * epsabs or not math.isfinite(val):
        raise QuadratureFailure(f"quadrature error estimate {err:.3g} on [{a}, {b}]")
    return val


def unit_integral(g, epsabs=QUAD_TOL, upper=1.0):
    """int_0^upper g(t) dt after t = upper (1 - cos(pi v)) / 2, which flattens
    integrable endpoint singularities such as those of the normal quantile."""

    def h(v):
        t = 0.5 * upper * (1.0 - math.cos(math.pi * v))
        if t <= 0.0 or t >= 1.0:
            return 0.0
        return float(g(t)) * 0.5 * upper * math.pi * math.sin(math.pi * v)

    return _quad(h, 0.0, 1.0, epsabs=epsabs)


@dataclass(frozen=True)
class ContiguousAlternative:
    """Perturbations of the head (``phi_f``) and tail (``phi_g``) densities."""

    phi_f: Callable
    phi_g: Callable
    u: float
    label: str = ""
    check: bool = True

    def __post_init__(self):
        if not 0 < self.u < 1:
            raise DomainError(f"break fraction u must lie in (0, 1), got {self.u}")
        if self.check:
            for name, phi in (("phi_f", self.phi_f), ("phi_g", self.phi_g)):
                m = unit_integral(phi)
                if abs(m) > 1e-6:
                    raise DomainError(f"{name} integrates to {m:.3g}, not 0")
                if not math.isfinite(unit_integral(lambda t: phi(t) ** 2)):
                    raise DomainError(f"{name} is not square integrable")

    def difference(self, t):
        return self.phi_f(t) - self.phi_g(t)

    def swapped(self):
        return ContiguousAlternative(self.phi_g, self.phi_f, self.u, self.label, check=False)

    def scaled(self, factor):
        f, g = self.phi_f, self.phi_g
        return ContiguousAlternative(lambda t: factor * f(t), lambda t: factor * g(t), self.u,
                                     self.label, check=False)


ZERO_ALTERNATIVE = ContiguousAlternative(_zero, _zero, 0.5, "null", check=False)


def mu_chi(s, u):
    """sqrt(s(1-s)) * ((1-u)/(1-s) if s <= u else u/s)."""
    if not 0 < u < 1:
        raise DomainError("u must lie in (0, 1)")
    s = np.asarray(s, dtype=np.float64)
    if np.any((s <= 0) | (s >= 1)):
        raise DomainError("s must lie in (0, 1)")
    with np.errstate(divide="ignore", invalid="ignore"):
        inner = np.where(s <= u, (1.0 - u) / (1.0 - s), u / s)
    out = np.sqrt(s * (1.0 - s)) * inner
    return float(out) if out.ndim == 0 else out


def mu_psi(t, alt: ContiguousAlternative):
    """int_0^t (phi_f - phi_g)."""
    if not 0 <= t <= 1:
        raise DomainError("t must lie in [0, 1]")
    if t == 0.0:
        return 0.0
    return unit_integral(alt.difference, upper=t)


@dataclass(frozen=True)
class DriftExpansion:
    eta: np.ndarray
    tau: np.ndarray
    tau_sq: float

    def noncentrality(self, j, k):
        """Mean of the standardized (j, k) coordinate."""
        j, k = np.asarray(j), np.asarray(k)
        return self.eta[j - 1] * self.tau[k - 1] * np.sqrt(j * (j + 1.0)) * math.pi * k


def chi_coefficients(u, J):
    """eta_j = int mu_chi f_chi_j, j = 1..J (polynomial pieces either side of u)."""
    eta = np.empty(J)
    for j in range(1, J + 1):
        eta[j - 1] = _quad(lambda s: float(mu_chi(s, u) * spectrum.chi_eigenfunction(j, s)),
                           0.0, 1.0, points=[u], epsabs=1e-11)
    return eta


def psi_coefficients(alt: ContiguousAlternative, K):
    """tau_k = int mu_psi f_psi_k, k = 1..K.

    mu_psi vanishes at both ends, so integrating by parts gives
    tau_k = sqrt(2)/(pi k) * int (phi_f - phi_g)(t) cos(pi k t) dt.
    """
    tau = np.empty(K)
    for k in range(1, K + 1):
        val = unit_integral(lambda t: float(alt.difference(t)) * math.cos(math.pi * k * t), epsabs=1e-11)
        tau[k - 1] = math.sqrt(2.0) / (math.pi * k) * val
    return tau


def drift_expansion(alt: ContiguousAlternative, J=16, K=16) -> DriftExpansion:
    if J < 1 or K < 1:
        raise ValueError("J and K must be >= 1")
    eta = chi_coefficients(alt.u, J)
    tau = psi_coefficients(alt, K)
    tau_sq = alt.u * unit_integral(lambda t: alt.phi_f(t) ** 2) + (1 - alt.u) * unit_integral(
        lambda t: alt.phi_g(t) ** 2
    )
    return DriftExpansion(eta, tau, tau_sq)


def _power_truncation(J, K, M):
    grid = spectrum.grid_truncation(J, K)
    if M is None:
        return grid.j, grid.k
    top = spectrum.truncate_spectrum("wbar", M)
    pairs = sorted(set(zip(grid.j.tolist(), grid.k.tolist())) | set(zip(top.j.tolist(), top.k.tolist())),
                   key=lambda p: (p[0] * (p[0] + 1) * p[1] ** 2, p[0], p[1]))
    j, k = (np.array(a, dtype=np.int64) for a in zip(*pairs))
    return j, k


def noncentral_spec(alt: ContiguousAlternative, J=16, K=16, M: Optional[int] = None, expansion=None):
    """Central and noncentral limit laws on a common set of weights.

    Weights are the J x K block (plus the M largest overall when ``M`` is
    given); terms outside the block carry zero noncentrality and everything
    not retained enters as its mean.
    """
    j, k = _power_truncation(J, K, M)
    weights = 1.0 / (j * (j + 1) * k * k * math.pi**2)
    shift = max(math.fsum([spectrum.WBAR_MEAN, *(-weights)]), 0.0)
    exp = expansion if expansion is not None else drift_expansion(alt, J, K)
    inside = (j <= J) & (k <= K)
    delta = np.zeros(j.size)
    delta[inside] = exp.noncentrality(j[inside], k[inside])
    central = QuadFormSpec(weights, None, shift, "central")
    return central, QuadFormSpec(weights, delta, shift, alt.label), exp


def asymptotic_power(alt: ContiguousAlternative, alpha=0.05, J=16, K=16, M: Optional[int] = None):
    """Limiting rejection probability of the level-alpha averaged test."""
    if not 0 < alpha < 1:
        raise ValueError("alpha must lie in (0, 1)")
    central, shifted, _ = noncentral_spec(alt, J, K, M)
    x_alpha = quantile(central, alpha)
    return imhof_tail(shifted, x_alpha)


def normal_shift_scale_alternative(gamma1, gamma2, u, perturbed="tail"):
    """Location drift ``gamma1/sqrt(n)`` and scale drift ``1 + gamma2/sqrt(n)``
    of a normal law in one segment; the other segment is the base law.

    The score is ``gamma2 (z^2 - 1) + gamma1 z`` with ``z`` the standard normal
    quantile of ``t``.
    """
    g1, g2 = float(gamma1), float(gamma2)
    if not (math.isfinite(g1) and math.isfinite(g2)):
        raise ValueError("gamma1 and gamma2 must be finite")

    def phi(t):
        z = ndtri(t)
        return g2 * (z * z - 1.0) + g1 * z

    label = f"normal(gamma1={g1:g}, gamma2={g2:g})"
    if g1 == 0 and g2 == 0:
        return ContiguousAlternative(_zero, _zero, u, label, check=False)
    if perturbed == "tail":
        return ContiguousAlternative(_zero, phi, u, label)
    if perturbed == "head":
        return ContiguousAlternative(phi, _zero, u, label)
    raise ValueError("perturbed must be 'head' or 'tail'")


def gamma_shape_alternative(b, u, perturbed="head"):
    """Shape ``1 + b/sqrt(n)`` (unit scale) in one segment against Exp(1).

    The score of the shape parameter at 1 is ``log x + Euler gamma`` with
    ``x = -log(1 - t)``.
    """
    b = float(b)

    def phi(t):
        return b * (np.log(-np.log1p(-np.asarray(t, dtype=np.float64))) + EULER_GAMMA)

    label = f"gamma_shape(b={b:g})"
    if b == 0:
        return ContiguousAlternative(_zero, _zero, u, label, check=False)
    if perturbed == "head":
        return ContiguousAlternative(phi, _zero, u, label)
    if perturbed == "tail":
        return ContiguousAlternative(_zero, phi, u, label)
    raise ValueError("perturbed must be 'head' or 'tail'")
