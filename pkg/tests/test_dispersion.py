import numpy as np
import pytest

from bec_kinetics import (DegeneratePointError, DispersionContext, free_energy,
                          gaussian_bump_profile, zero_profile)
from bec_kinetics.studies import ols_loglog


def random_rotation(rng):
    a = rng.normal(size=(3, 3))
    q, _ = np.linalg.qr(a)
    return q


def test_free_energy_closed_forms():
    assert free_energy(np.array([0.0, 0.0, 0.0])) == 0.0
    assert free_energy(np.array([1.0, 0.0, 0.0])) == 0.5
    assert free_energy(np.array([1.0, 2.0, 2.0])) == 4.5


def test_omega_reduces_to_free():
    ctx0 = DispersionContext(zero_profile(), 0.3)
    p = np.array([[0.3, -1.1, 0.7], [2.0, 0.0, 0.0]])
    assert np.allclose(ctx0.omega(p), free_energy(p), rtol=0, atol=0)
    ctx_l0 = DispersionContext(gaussian_bump_profile(2.0, 1.0), 0.0)
    assert np.allclose(ctx_l0.omega(p), free_energy(p), rtol=0, atol=0)


def test_omega_exact_radical():
    # E = 2, lam*vhat = 1 -> Omega = sqrt(2*(2+2)) = 2sqrt(2)
    prof = gaussian_bump_profile(4.0, 1.0)
    p = np.array([2.0, 0.0, 0.0])
    lam = 1.0 / prof.eval(p)  # lam*vhat(p) = 1
    assert lam < 1
    ctx = DispersionContext(prof, float(lam))
    assert np.isclose(float(ctx.omega(p)), np.sqrt(8.0), rtol=1e-15)


def test_omega_radial_and_bounds(rng):
    ctx = DispersionContext(gaussian_bump_profile(1.3, 0.8), 0.4)
    for _ in range(20):
        p = rng.normal(size=3)
        R = random_rotation(rng)
        om = float(ctx.omega(p))
        om_rot = float(ctx.omega(R @ p))
        assert abs(om_rot - om) <= 1e-12 * (1.0 + om)
        e = float(free_energy(p))
        vh = float(ctx.vhat.eval(p))
        assert e - 1e-14 <= om <= e + ctx.lam * vh + 1e-12 * (1 + om)


def test_hfb_coeffs_time_zero_and_zero_coupling(rng):
    ctx = DispersionContext(gaussian_bump_profile(1.0, 1.0), 0.3)
    p = rng.normal(size=(8, 3))
    u, v, v1sq, v2 = ctx.hfb_coeffs(p, 0.0)
    assert np.allclose(u, 1.0, atol=1e-15)
    assert np.allclose(v, 0.0, atol=1e-15)
    # vhat -> 0 case: point far out in the Gaussian tail has vhat ~ 0
    ctx0 = DispersionContext(zero_profile(), 0.3)
    t = 0.7
    u0, v0, v1sq0, v20 = ctx0.hfb_coeffs(p, t)
    assert np.allclose(u0, np.exp(1j * free_energy(p) * t), atol=1e-15)
    assert np.allclose(v0, 0.0, atol=0)
    assert np.allclose(v1sq0, 0.0, atol=0) and np.allclose(v20, 0.0, atol=0)


def test_hfb_v2_exact_radical():
    # E = 2, lam vhat = 1: V2 = vhat/Omega = (1/lam)/(2 sqrt 2)
    prof = gaussian_bump_profile(4.0, 1.0)
    p = np.array([2.0, 0.0, 0.0])
    lam = float(1.0 / prof.eval(p))
    ctx = DispersionContext(prof, lam)
    _, _, _, v2 = ctx.hfb_coeffs(p, 0.3)
    assert np.isclose(lam * float(v2), 1.0 / np.sqrt(8.0), rtol=1e-14)


def test_hfb_coeff_identities(rng):
    # |v| = lam |sin(Om t)| V2 and |u - e^{i Om t}| = lam^2 |sin(Om t)| V1sq
    ctx = DispersionContext(gaussian_bump_profile(0.9, 1.1), 0.35)
    p = rng.normal(size=(16, 3))
    for t in (0.3, 1.7, 4.0):
        u, v, v1sq, v2 = ctx.hfb_coeffs(p, t)
        om = ctx.omega(p)
        assert np.allclose(np.abs(v), ctx.lam * np.abs(np.sin(om * t)) * v2, rtol=1e-13)
        assert np.allclose(np.abs(u - np.exp(1j * om * t)),
                           ctx.lam ** 2 * np.abs(np.sin(om * t)) * v1sq, rtol=1e-13)


def test_degenerate_point_error():
    # a profile with vhat(0) > 0 violates the 0/0 guard at p = 0
    from bec_kinetics import RadialProfile
    bad = RadialProfile(lambda r: np.ones_like(np.asarray(r, dtype=float)))
    ctx = DispersionContext(bad, 0.2)
    with pytest.raises(DegeneratePointError):
        ctx.hfb_coeffs(np.zeros(3), 1.0)


def test_expansion_residual_zero_cases(rng):
    p = rng.normal(size=(5, 3))
    ctx0 = DispersionContext(zero_profile(), 0.5)
    assert np.allclose(ctx0.omega_expansion_residual(p), 0.0, atol=0)
    ctxl0 = DispersionContext(gaussian_bump_profile(1.0, 1.0), 0.0)
    assert np.allclose(ctxl0.omega_expansion_residual(p), 0.0, atol=1e-18)


def test_expansion_residual_cubic_scaling():
    # fixed p with vhat(p)/E(p) = 1; residual ~ lambda^3
    prof = gaussian_bump_profile(1.0, 1.0)
    # choose p with vhat(p) = E(p): a r^2 e^{-r^2/2} = r^2/2 -> r = sqrt(2 ln 2)
    r = np.sqrt(2.0 * np.log(2.0))
    p = np.array([r, 0.0, 0.0])
    lams = [0.1, 0.05, 0.025]
    res = [abs(float(DispersionContext(prof, lam).omega_expansion_residual(p)))
           for lam in lams]
    slope, _, _ = ols_loglog(lams, res)
    assert slope >= 2.9


def test_expansion_residual_grid_scaling(rng):
    prof = gaussian_bump_profile(1.0, 1.0)
    grid = rng.normal(size=(40, 3))
    lams = [0.1, 0.05, 0.025]
    sups = [float(np.max(np.abs(DispersionContext(prof, lam).omega_expansion_residual(grid))))
            for lam in lams]
    slope, _, _ = ols_loglog(lams, sups)
    assert slope >= 2.7
