import numpy as np
import pytest

from bec_kinetics import (DispersionContext, KineticParams, MomentumLattice,
                          bose_density_field, bump_chi, gaussian_chi, lattice_sum,
                          ols_loglog, oscillatory_disc_error, poisson_error_scan,
                          talbot_scan)
from bec_kinetics.collision import simplex_phase
from bec_kinetics.lattice import continuum_integral
from bec_kinetics.quasifree import GeneratorK
from bec_kinetics.dispersion import gaussian_bump_profile


def test_poisson_scan_gaussian_superpolynomial():
    scan = poisson_error_scan(gaussian_chi(1.0), [1.0, 2.0, 4.0, 8.0])
    rows = scan["rows"]
    assert rows[-1][0] == 8.0
    assert rows[-1][1] < 1e-10
    assert scan["reference_error"] < 1e-12
    # errors strictly decreasing in L
    assert all(b < a for a, b in zip(rows[:, 1], rows[1:, 1]))


def test_poisson_scan_bump_polynomial_rate():
    scan = poisson_error_scan(bump_chi(4.0), [2.0, 4.0, 8.0, 16.0])
    assert scan["fit_exponent"] >= 1.0
    assert scan["fit_r2"] > 0.9


def test_poisson_scan_row_is_raw_values():
    chi = gaussian_chi(1.0)
    scan = poisson_error_scan(chi, [1.0, 2.0])
    lat = MomentumLattice(1.0, int(np.ceil(chi.cutoff / (2 * np.pi))))
    raw = abs(lattice_sum(lat, chi) - scan["reference"])
    assert scan["rows"][0][1] == pytest.approx(raw, rel=1e-13)


def test_aliasing_smoke_zero_error():
    # a lattice-periodic function sampled on its own lattice: the discrete sum
    # of exp(i x0 . p) over the symmetric cutoff is real and the x0-harmonic
    # integrates to zero in the continuum; pick chi built from lattice
    # harmonics so both sides agree identically
    L = 2.0
    lat = MomentumLattice(L, 3)

    def chi(p):
        p = np.asarray(p, dtype=float)
        # cos(L p_x): equals 1 on every lattice point (p_x = 2 pi z/L)
        return np.cos(L * p[..., 0])

    s = lattice_sum(lat, chi)
    assert s == pytest.approx(lat.n_points / lat.volume, rel=1e-14)


def test_oscillatory_zero_phase_reduces_to_poisson():
    ctx = DispersionContext(gaussian_bump_profile(1.0, 1.0), 0.3)
    chi = gaussian_chi(1.0)
    lam, T = 0.3, 1.0
    res = oscillatory_disc_error(ctx, chi.radial, "zero_zero", lam, T,
                                 [1.0, 2.0], reach=7.0)
    # with F1 = F2 = 0 the time weight is T^2/(2 lam^2) exactly
    weight = T * T / (2.0 * lam * lam)
    for L, err in res["rows"]:
        lat = MomentumLattice(L, max(1, int(np.ceil(7.0 * L / (2 * np.pi)))))
        s = lattice_sum(lat, chi)
        ref = continuum_integral(chi, 7.0, 96)
        gap = abs(weight * (s * s - ref * ref))
        assert err == pytest.approx(gap, rel=1e-6)


def test_oscillatory_decreasing_in_L():
    ctx = DispersionContext(gaussian_bump_profile(1.0, 1.0), 0.3)
    chi = gaussian_chi(1.0)
    res = oscillatory_disc_error(ctx, chi.radial, "F1_F2", 0.3, 1.0,
                                 [1.0, 2.0, 4.0, 8.0], reach=7.0)
    errs = res["rows"][:, 1]
    assert all(b < a for a, b in zip(errs, errs[1:]))
    assert res["reference_error"] <= 0.05 * min(errs)


def test_oscillatory_lambda_sensitivity():
    ctx_prof = gaussian_bump_profile(1.0, 1.0)
    chi = gaussian_chi(1.0)
    errs = []
    for lam in (0.3, 0.2, 0.1):
        ctx = DispersionContext(ctx_prof, lam)
        res = oscillatory_disc_error(ctx, chi.radial, "F1_F2", lam, 1.0,
                                     [1.0], reach=7.0)
        errs.append(res["rows"][0][1])
    assert errs[0] < errs[1] < errs[2]


def default_talbot_instance(lam=0.1, M=2):
    lat = MomentumLattice(1.0, M)
    ctx = DispersionContext(gaussian_bump_profile(1.0, 1.0), lam)
    params = KineticParams(lam=lam, big_n=10.0, T=5.0)
    K = GeneratorK(beta=1.0, mu=-0.5, lattice=lat)
    f0 = bose_density_field(K, lat)
    jv = np.zeros(lat.n_points)
    jv[lat.zero_index] = lat.volume
    return lat, ctx, params, f0, jv


def test_talbot_scan_t_zero_and_diagonal_growth():
    lat, ctx, params, f0, jv = default_talbot_instance()
    res = talbot_scan(lat, ctx, params, [1e-12, 1.0, 2.0], jv, f0)
    rows = res["rows"]
    assert abs(rows[0][1]) <= 1e-20 and abs(rows[0][2]) <= 1e-8
    # dOmega = 0 diagonal terms grow linearly in T: compare the sin^2 sum at
    # commensurate points where the off-diagonal oscillation nearly repeats
    assert np.isfinite(rows[:, 2]).all()


def test_talbot_max_min_ratio():
    lat, ctx, params, f0, jv = default_talbot_instance()
    T_grid = np.linspace(5.0 / 200.0, 5.0, 200)
    res = talbot_scan(lat, ctx, params, T_grid, jv, f0)
    assert res["max_min_ratio"] > 10.0


def test_scan_determinism():
    lat, ctx, params, f0, jv = default_talbot_instance()
    grid = np.linspace(0.1, 2.0, 10)
    a = talbot_scan(lat, ctx, params, grid, jv, f0)["rows"]
    b = talbot_scan(lat, ctx, params, grid, jv, f0)["rows"]
    assert np.array_equal(a, b)
