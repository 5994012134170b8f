"""Interaction profiles, free/Bogoliubov dispersions, and quadratic-dressing coefficients.

Everything here is a pointwise function of momentum; all evaluators accept
either a single 3-vector, an (n, 3) array of momenta, or (for the *_radial
variants) plain radii, and are safe for concurrent use.

Conventions:
    E(p)     = |p|^2 / 2                      free kinetic energy
    Omega(p) = sqrt(E(p) * (E(p) + 2*lam*vhat(p)))   acoustic dispersion
    V1sq(p)  = vhat^2 / (Omega*(Omega + E + lam*vhat))
    V2(p)    = vhat / Omega
    u(t, p)  = e^{i Omega t} + i lam^2 sin(Omega t) V1sq
    v(t, p)  = i lam sin(Omega t) V2

The dressed creation operator at time t is u*a^+_p + v*a_{-p}; the identity
(E + lam*vhat)/Omega = 1 + lam^2*V1sq makes u, v exact, not an expansion.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np


class DegeneratePointError(ValueError):
    """Raised when V2 = vhat/Omega hits 0/0, i.e. E(p) = 0 but vhat(p) > 0."""


def _radii(p):
    p = np.asarray(p, dtype=float)
    if p.ndim == 1:
        return np.linalg.norm(p)
    return np.linalg.norm(p, axis=-1)


def free_energy(p):
    """Free kinetic energy E(p) = |p|^2/2."""
    r = _radii(p)
    return 0.5 * r * r


def free_energy_radial(r):
    r = np.asarray(r, dtype=float)
    return 0.5 * r * r


@dataclass(frozen=True)
class RadialProfile:
    """Nonnegative radial interaction profile vhat with vhat(0) = 0.

    radial_eval maps radius -> value (vectorized).  The optional derivative
    callbacks (d/dr and d^2/dr^2) feed the m <= 2 Sobolev-type norms in the
    lattice module; they are not needed by any operator.
    """

    radial_eval: Callable[[np.ndarray], np.ndarray]
    radial_d1: Optional[Callable[[np.ndarray], np.ndarray]] = None
    radial_d2: Optional[Callable[[np.ndarray], np.ndarray]] = None
    name: str = "custom"
    params: dict = field(default_factory=dict)

    def __call__(self, p):
        return self.eval(p)

    def eval(self, p):
        return np.asarray(self.radial_eval(_radii(p)), dtype=float)

    def eval_radial(self, r):
        return np.asarray(self.radial_eval(np.asarray(r, dtype=float)), dtype=float)


def gaussian_bump_profile(a: float = 1.0, sigma: float = 1.0) -> RadialProfile:
    """Built-in family vhat_{a,sigma}(p) = a |p|^2 exp(-|p|^2/(2 sigma^2)).

    Radial, nonnegative, Schwartz, vhat(0) = 0, and vhat = O(|p|^2) at the
    origin, so the weighted norms (weight 1 + 1/|p|^2) and the ratio vhat/E
    stay finite.
    """
    if a < 0 or sigma <= 0:
        raise ValueError("need a >= 0 and sigma > 0")
    s2 = sigma * sigma

    def f(r):
        r = np.asarray(r, dtype=float)
        return a * r * r * np.exp(-r * r / (2.0 * s2))

    def d1(r):
        r = np.asarray(r, dtype=float)
        return a * np.exp(-r * r / (2.0 * s2)) * (2.0 * r - r ** 3 / s2)

    def d2(r):
        r = np.asarray(r, dtype=float)
        return a * np.exp(-r * r / (2.0 * s2)) * (2.0 - 5.0 * r * r / s2 + r ** 4 / s2 ** 2)

    return RadialProfile(f, d1, d2, name="gaussian_bump", params={"a": a, "sigma": sigma})


def zero_profile() -> RadialProfile:
    zero = lambda r: np.zeros_like(np.asarray(r, dtype=float))
    return RadialProfile(zero, zero, zero, name="zero", params={})


@dataclass(frozen=True)
class DispersionContext:
    """Interaction profile plus coupling; derives Omega, V1sq, V2, u, v.

    vhat(p) >= 0 with vhat(0) = 0 and lam in (0, 1) are assumed; Omega >= E
    pointwise and Omega(0) = 0 follow.
    """

    vhat: RadialProfile
    lam: float

    def __post_init__(self):
        if not (0 <= self.lam < 1):
            raise ValueError(f"coupling lam must be in [0, 1), got {self.lam}")

    # -- radial cores ------------------------------------------------------

    def omega_radial(self, r):
        r = np.asarray(r, dtype=float)
        e = free_energy_radial(r)
        return np.sqrt(e * (e + 2.0 * self.lam * self.vhat.eval_radial(r)))

    def _v1sq_v2_radial(self, r):
        """(V1sq, V2) on radii; 0 where vhat vanishes, error on true 0/0."""
        r = np.asarray(r, dtype=float)
        e = free_energy_radial(r)
        vh = self.vhat.eval_radial(r)
        om = np.sqrt(e * (e + 2.0 * self.lam * vh))
        bad = (e == 0) & (vh > 0)
        if np.any(bad):
            raise DegeneratePointError(
                "V2 = vhat/Omega is 0/0 at a point with E(p) = 0, vhat(p) > 0"
            )
        ok = om > 0
        v2 = np.zeros_like(om)
        v1sq = np.zeros_like(om)
        np.divide(vh, om, out=v2, where=ok)
        denom = om * (om + e + self.lam * vh)
        np.divide(vh * vh, denom, out=v1sq, where=ok)
        return v1sq, v2

    # -- momentum-space surface --------------------------------------------

    def free_energy(self, p):
        return free_energy(p)

    def omega(self, p):
        """Bogoliubov dispersion Omega(p) = sqrt(E(E + 2*lam*vhat)); exact 0 at p = 0."""
        return self.omega_radial(_radii(p))

    def v1sq(self, p):
        return self._v1sq_v2_radial(_radii(p))[0]

    def v2(self, p):
        return self._v1sq_v2_radial(_radii(p))[1]

    def u_coeff(self, t, p):
        r = _radii(p)
        om = self.omega_radial(r)
        v1sq, _ = self._v1sq_v2_radial(r)
        return np.exp(1j * om * t) + 1j * self.lam ** 2 * np.sin(om * t) * v1sq

    def v_coeff(self, t, p):
        r = _radii(p)
        om = self.omega_radial(r)
        _, v2 = self._v1sq_v2_radial(r)
        return 1j * self.lam * np.sin(om * t) * v2

    def hfb_coeffs(self, p, t):
        """(u, v, V1sq, V2) of the quadratic dressing at time t.

        At points with vhat(p) = 0 this returns (e^{iE t}, 0, 0, 0); at a
        point with E(p) = 0 but vhat(p) > 0 it raises DegeneratePointError.
        """
        r = _radii(p)
        om = self.omega_radial(r)
        v1sq, v2 = self._v1sq_v2_radial(r)
        u = np.exp(1j * om * t) + 1j * self.lam ** 2 * np.sin(om * t) * v1sq
        v = 1j * self.lam * np.sin(om * t) * v2
        return u, v, v1sq, v2

    def vhat_bog_radial(self, r):
        """vhat_Bog = 2 vhat / (1 + sqrt(1 + 2 lam vhat/E)), so Omega = E + lam*vhat_Bog."""
        r = np.asarray(r, dtype=float)
        e = free_energy_radial(r)
        vh = self.vhat.eval_radial(r)
        out = np.zeros_like(e)
        ok = e > 0
        ratio = np.zeros_like(e)
        np.divide(vh, e, out=ratio, where=ok)
        np.divide(2.0 * vh, 1.0 + np.sqrt(1.0 + 2.0 * self.lam * ratio), out=out, where=ok)
        return out

    def omega_expansion_residual(self, p):
        """Omega - (E + lam*vhat - lam^2 vhat^2/(2E)); decays like O(lam^3)."""
        r = _radii(p)
        e = free_energy_radial(r)
        if np.any(np.asarray(e) == 0):
            raise ValueError("expansion residual needs E(p) > 0")
        vh = self.vhat.eval_radial(r)
        om = self.omega_radial(r)
        return om - (e + self.lam * vh - self.lam ** 2 * vh * vh / (2.0 * e))


def profile_from_name(name: str, **params) -> RadialProfile:
    """Config-facing profile factory (see the cli module)."""
    if name == "gaussian_bump":
        return gaussian_bump_profile(**params)
    if name == "zero":
        return zero_profile()
    raise ValueError(f"unknown profile {name!r}; known: gaussian_bump, zero")
