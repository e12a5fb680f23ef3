import math

import numpy as np
import pytest
from scipy import integrate
from scipy.special import eval_legendre, lpmv

from cvmcp import spectrum
from cvmcp.errors import DomainError, IndexOutOfRange


def quad(f, a=0.0, b=1.0, points=None):
    return integrate.quad(f, a, b, points=points, limit=400, epsabs=1e-13, epsrel=1e-13)[0]


class TestEigenvalues:
    def test_values(self):
        assert spectrum.eigenvalue(1, 1) == pytest.approx(1 / (2 * math.pi**2))
        assert spectrum.eigenvalue(3, 2) == pytest.approx(1 / (12 * 4 * math.pi**2))

    @pytest.mark.parametrize("j,k", [(0, 1), (1, 0), (-2, 3)])
    def test_bad_index(self, j, k):
        with pytest.raises(IndexOutOfRange):
            spectrum.eigenvalue(j, k)

    def test_large_grid_sum(self):
        # brute-force sum over j, k <= 2000 plus the exact tails of each index
        j = np.arange(1, 2001, dtype=float)
        a = math.fsum(1 / (j * (j + 1)))  # = 1 - 1/2001
        b = math.fsum(1 / (math.pi**2 * j * j))
        approx = a * b
        tail = (1 / 2001) * (1 / 6) + a * (1 / 6 - b)
        assert approx + tail == pytest.approx(1 / 6, abs=1e-15)


class TestLegendre:
    @pytest.mark.parametrize("j", range(1, 12))
    def test_derivative_of_legendre(self, j):
        u = np.linspace(-1, 1, 41)
        # P_j'(u) (1 - u^2) = j (P_{j-1} - u P_j)
        ref = j * (eval_legendre(j - 1, u) - u * eval_legendre(j, u))
        np.testing.assert_allclose(legendre_q_times(j, u), ref, atol=1e-10)

    def test_associated_legendre_relation(self):
        u = np.linspace(-0.95, 0.95, 9)
        for j in range(1, 8):
            # P_j^1(u) = -(1-u^2)^{1/2} P_j'(u) (Condon-Shortley phase)
            np.testing.assert_allclose(-lpmv(1, j, u), np.sqrt(1 - u * u) * spectrum.legendre_q(j, u), rtol=1e-10)

    def test_endpoint_values(self):
        for j in range(1, 10):
            assert spectrum.legendre_q(j, 1.0) == pytest.approx(j * (j + 1) / 2)


def legendre_q_times(j, u):
    return spectrum.legendre_q(j, u) * (1 - u * u)


class TestEigenfunctions:
    @pytest.mark.parametrize("a", range(1, 9))
    def test_chi_orthonormal(self, a):
        for b in range(1, 9):
            v = quad(lambda s: spectrum.chi_eigenfunction(a, s) * spectrum.chi_eigenfunction(b, s))
            assert v == pytest.approx(float(a == b), abs=1e-8)

    @pytest.mark.parametrize("a", range(1, 9))
    def test_psi_orthonormal(self, a):
        for b in range(1, 9):
            v = quad(lambda t: spectrum.psi_eigenfunction(a, t) * spectrum.psi_eigenfunction(b, t))
            assert v == pytest.approx(float(a == b), abs=1e-10)

    @pytest.mark.parametrize("j", range(1, 6))
    def test_chi_eigen_relation(self, j):
        for s in np.arange(1, 10) / 10:
            # substitute s' = sin^2(theta) to remove the square-root endpoint behaviour
            def f(th):
                sp = math.sin(th) ** 2
                if sp <= 0 or sp >= 1:
                    return 0.0
                return spectrum.kernel("chi", s, sp) * float(spectrum.chi_eigenfunction(j, sp)) * math.sin(2 * th)

            lhs = quad(f, 0.0, math.pi / 2, points=[math.asin(math.sqrt(s))])
            rhs = float(spectrum.chi_eigenfunction(j, s)) / (j * (j + 1))
            assert lhs == pytest.approx(rhs, abs=1e-5)

    @pytest.mark.parametrize("k", range(1, 6))
    def test_psi_eigen_relation(self, k):
        for t in np.arange(1, 10) / 10:
            lhs = quad(lambda v: spectrum.kernel("psi", t, v) * float(spectrum.psi_eigenfunction(k, v)), points=[t])
            rhs = float(spectrum.psi_eigenfunction(k, t)) / (math.pi**2 * k * k)
            assert lhs == pytest.approx(rhs, abs=1e-8)

    def test_chi_parity(self):
        s = np.linspace(0.01, 0.99, 25)
        for j in range(1, 9):
            sign = 1 if j % 2 == 1 else -1
            np.testing.assert_allclose(spectrum.chi_eigenfunction(j, 1 - s), sign * spectrum.chi_eigenfunction(j, s),
                                       atol=1e-12)

    def test_chi_vanishes_at_ends(self):
        assert spectrum.chi_eigenfunction(4, 0.0) == 0.0
        assert spectrum.chi_eigenfunction(4, 1.0) == 0.0

    def test_psi_known_points(self):
        assert spectrum.psi_eigenfunction(1, 0.0) == 0.0
        assert spectrum.psi_eigenfunction(1, 0.5) == pytest.approx(math.sqrt(2))

    @pytest.mark.parametrize("fn", [spectrum.psi_eigenfunction, spectrum.chi_eigenfunction])
    def test_domain(self, fn):
        with pytest.raises(DomainError):
            fn(1, 1.5)
        with pytest.raises(IndexOutOfRange):
            fn(0, 0.5)


class TestKernel:
    def test_values(self):
        assert spectrum.kernel("psi", 0.25, 0.5) == pytest.approx(0.25 - 0.125)
        assert spectrum.kernel("chi", 0.5, 0.5) == pytest.approx(1.0)

    def test_errors(self):
        with pytest.raises(DomainError):
            spectrum.kernel("chi", 0.0, 0.5)
        with pytest.raises(ValueError):
            spectrum.kernel("rho", 0.1, 0.2)


class TestTruncation:
    @pytest.mark.parametrize("M", [1, 2, 5, 50, 100, 200, 1000])
    def test_mean_identity(self, M):
        tr = spectrum.truncate_spectrum("wbar", M)
        assert tr.M == M
        assert math.fsum([*tr.weights, tr.remainder_mean]) == pytest.approx(1 / 6, abs=1e-12)

    @pytest.mark.parametrize("M", [1, 10, 200, 1000])
    def test_tail_mass_oracle(self, M):
        tr = spectrum.truncate_spectrum("wbar", M)
        assert spectrum.tail_mass(tr) == pytest.approx(tr.remainder_mean, rel=1e-10, abs=1e-14)

    @pytest.mark.parametrize("M", [1, 7, 60, 333])
    def test_topM_against_brute_force(self, M):
        j, k = np.meshgrid(np.arange(1, 4 * M + 1), np.arange(1, 4 * M + 1), indexing="ij")
        w = np.sort((1 / (j * (j + 1.0) * k * k * math.pi**2)).ravel())[::-1][:M]
        tr = spectrum.truncate_spectrum("wbar", M)
        np.testing.assert_allclose(tr.weights, w, rtol=1e-15)

    def test_leading_entries(self):
        tr = spectrum.truncate_spectrum("wbar", 4)
        # products j(j+1)k^2: (1,1)=2, (2,1)=6, (1,2)=8, (3,1)=12
        assert [(e.j, e.k) for e, _ in tr.entries] == [(1, 1), (2, 1), (1, 2), (3, 1)]

    def test_weights_descending(self):
        tr = spectrum.truncate_spectrum("wbar", 500)
        assert np.all(np.diff(tr.weights) <= 0)
        assert not tr.weights.flags.writeable

    def test_remainder_at_default(self):
        tr = spectrum.truncate_spectrum("wbar", 200)
        assert 0.009 < tr.remainder_mean < 0.011

    @pytest.mark.parametrize("M", [1, 10, 200])
    def test_anderson_darling(self, M):
        tr = spectrum.truncate_spectrum("anderson_darling", M)
        np.testing.assert_allclose(tr.weights, 1 / (np.arange(1, M + 1) * np.arange(2, M + 2)))
        assert math.fsum([*tr.weights, tr.remainder_mean]) == pytest.approx(1.0, abs=1e-12)
        assert tr.remainder_mean == pytest.approx(1 / (M + 1), rel=1e-10)
        assert spectrum.tail_mass(tr) == pytest.approx(tr.remainder_mean, rel=1e-10)

    def test_grid_truncation(self):
        tr = spectrum.grid_truncation(3, 4)
        assert tr.M == 12
        assert set(zip(tr.j.tolist(), tr.k.tolist())) == {(a, b) for a in range(1, 4) for b in range(1, 5)}
        assert math.fsum([*tr.weights, tr.remainder_mean]) == pytest.approx(1 / 6, abs=1e-12)
        assert spectrum.tail_mass(tr) == pytest.approx(tr.remainder_mean, rel=1e-10)

    def test_bad_args(self):
        with pytest.raises(ValueError):
            spectrum.truncate_spectrum("wbar", 0)
        with pytest.raises(ValueError):
            spectrum.truncate_spectrum("nope", 3)
