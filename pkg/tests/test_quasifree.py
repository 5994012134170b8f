import itertools
import math

import numpy as np
import pytest

from bec_kinetics import (FloorViolationError, GeneratorK, MomentumLattice,
                          bose_density, bose_density_field, cumulant,
                          cumulant_polynomial, lattice_sum, number_moment)


def test_bose_density_closed_forms(small_lattice):
    K = GeneratorK(func=lambda p: np.full(np.asarray(p).shape[:-1], np.log(2.0)),
                   kappa0=0.5, lattice=small_lattice)
    assert bose_density(K, np.zeros(3)) == pytest.approx(1.0, rel=1e-15)
    K20 = GeneratorK(func=lambda p: np.full(np.asarray(p).shape[:-1], 20.0),
                     kappa0=1.0, lattice=small_lattice)
    assert bose_density(K20, np.zeros(3)) == pytest.approx(1.0 / np.expm1(20.0), rel=1e-15)


def test_floor_rejected_at_construction(small_lattice):
    with pytest.raises(FloorViolationError):
        GeneratorK(beta=1.0, mu=0.0, lattice=small_lattice)


def test_cumulant_polynomials():
    # P1 = f, P2 = f + f^2, P3 = f + 3 f^2 + 2 f^3 (= f(1+f)(1+2f))
    assert list(cumulant_polynomial(1)) == [0, 1]
    assert list(cumulant_polynomial(2)) == [0, 1, 1]
    assert list(cumulant_polynomial(3)) == [0, 1, 3, 2]
    assert all(c >= 0 for n in range(1, 13) for c in cumulant_polynomial(n))


def test_kappa_closed_forms(small_lattice, K_small, f0_small):
    lat = small_lattice
    f0 = f0_small
    assert cumulant(K_small, lat, 1) == pytest.approx(lattice_sum(lat, f0), rel=1e-15)
    assert cumulant(K_small, lat, 2) == pytest.approx(
        lattice_sum(lat, f0 * (1 + f0)), rel=1e-15)
    assert cumulant(K_small, lat, 3) == pytest.approx(
        lattice_sum(lat, f0 * (1 + f0) * (1 + 2 * f0)), rel=1e-14)


def test_kappa3_finite_difference(small_lattice, K_small):
    # kappa_3 vs central difference of kappa_2 in the generating shift
    h = 1e-4
    k3 = cumulant(K_small, small_lattice, 3)
    kp = cumulant(K_small.with_shift(+h), small_lattice, 2)
    km = cumulant(K_small.with_shift(-h), small_lattice, 2)
    fd = -(kp - km) / (2 * h)
    assert abs(k3 - fd) / abs(k3) <= 1e-6


def test_kappa_fd_consistency_chain(small_lattice, K_small):
    h = 1e-4
    for n in range(1, 6):
        kn1 = cumulant(K_small, small_lattice, n + 1)
        fd = -(cumulant(K_small.with_shift(+h), small_lattice, n)
               - cumulant(K_small.with_shift(-h), small_lattice, n)) / (2 * h)
        assert abs(kn1 - fd) / abs(kn1) <= 1e-5


def test_all_cumulants_positive(small_lattice, K_small):
    for n in range(1, 9):
        assert cumulant(K_small, small_lattice, n) > 0


def test_moment_low_orders(small_lattice, K_small):
    vol = small_lattice.volume
    k1 = cumulant(K_small, small_lattice, 1)
    k2 = cumulant(K_small, small_lattice, 2)
    assert number_moment(K_small, small_lattice, 1) == pytest.approx(vol * k1, rel=1e-14)
    assert number_moment(K_small, small_lattice, 2) == pytest.approx(
        vol ** 2 * k1 ** 2 + vol * k2, rel=1e-14)


def three_mode_lattice_and_K(beta, mu):
    """M = 1 lattice: K depends on |z|^2 in {0, 1, 2, 3}; merge to 3 values by
    flattening the |z|^2 = 3 corner shell onto the |z|^2 = 2 one."""
    lat = MomentumLattice(2.0, 1)

    def kfun(p):
        p = np.asarray(p, dtype=float)
        e = 0.5 * np.sum(p * p, axis=-1)
        emax = 0.5 * 2 * (2 * np.pi / 2.0) ** 2
        e = np.minimum(e, emax)
        return beta * (e - mu)

    return lat, GeneratorK(func=kfun, kappa0=-beta * mu, lattice=lat)


def occupation_sum_moment(lat, K, ell, nmax=200):
    """Oracle: direct occupation-number sum on the distinct K-values.

    nu0(N_b^ell) with N_b = (1/|Lambda|) sum_p n_p: moments of independent
    geometric modes, E[(sum_p n_p)^ell] expanded by the multinomial theorem
    over distinct K-levels with degeneracies.
    """
    kvals = K.eval(lat.points)
    levels, counts = np.unique(np.round(kvals, 12), return_counts=True)
    # per-level single-mode moments E[n^j], j <= ell, by truncated sums
    n = np.arange(nmax + 1)
    mom1 = []  # mom1[L][j] = E[n^j] for one mode at level L
    for Kv in levels:
        w = np.exp(-Kv * n)
        w /= w.sum()
        mom1.append([float(np.sum(w * n ** j)) for j in range(ell + 1)])
    # moments of the sum over all modes via exponential formula on cumulants
    # easier: moments of sums of independent modes by iterated convolution of
    # moment sequences (binomial convolution), one mode at a time
    total = [1.0] + [0.0] * ell  # E[S^j] starting from S = 0
    for L, c in zip(range(len(levels)), counts):
        for _ in range(int(c)):
            new = [0.0] * (ell + 1)
            for j in range(ell + 1):
                acc = 0.0
                for i in range(j + 1):
                    acc += math.comb(j, i) * total[i] * mom1[L][j - i]
                new[j] = acc
            total = new
    return total[ell]


@pytest.mark.parametrize("beta,mu", [(1.0, -0.5), (0.7, -1.1), (1.6, -0.3)])
def test_moments_vs_occupation_oracle(beta, mu):
    lat, K = three_mode_lattice_and_K(beta, mu)
    for ell in range(1, 7):
        got = number_moment(K, lat, ell)
        ref = occupation_sum_moment(lat, K, ell)
        assert abs(got - ref) / abs(ref) <= 1e-9, (ell, got, ref)


def test_moments_increasing(small_lattice):
    # strictly increasing in ell once |Lambda| kappa_1 >= 1
    K = GeneratorK(beta=0.5, mu=-0.1, lattice=small_lattice)
    vals = [number_moment(K, small_lattice, ell) for ell in range(1, 7)]
    assert small_lattice.volume * cumulant(K, small_lattice, 1) >= 1
    assert all(b > a for a, b in zip(vals, vals[1:]))


def test_caps():
    lat = MomentumLattice(1.0, 1)
    K = GeneratorK(beta=1.0, mu=-0.5, lattice=lat)
    with pytest.raises(ValueError):
        cumulant(K, lat, 13)
    with pytest.raises(ValueError):
        number_moment(K, lat, 17)
