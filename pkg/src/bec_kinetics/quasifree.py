"""Bose-Einstein initial data, cumulants, and number-operator moments.

The initial state is the quasifree, number-conserving, translation-invariant
state with generator K; its density is f0(p) = 1/(e^{K(p)} - 1).  Cumulants
kappa_n of the particle number are lattice sums of integer-coefficient
polynomials P_n(f0) with

    P_1(f) = f,      P_{n+1}(f) = f (1 + f) P_n'(f),

and the moments follow by Faa di Bruno:

    nu0(N_b^l) = l! * sum_{r in R(l)} prod_n (1/r_n!) (|Lambda| kappa_n / n!)^{r_n},
    R(l) = { r in N0^l : sum_n n r_n = l }.

The generating-function shift enters as K(p) + shift, for which
kappa_{n+1} = -d/dshift kappa_n holds exactly (chain rule through
d f/d shift = -f(1+f)); the finite-difference consistency tests use this.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .dispersion import free_energy
from .lattice import MomentumLattice, lattice_sum

N_MAX_CUMULANT = 12
ELL_MAX_MOMENT = 16


class FloorViolationError(ValueError):
    """Generator dropped below its positivity floor kappa0 on the lattice."""


@dataclass(frozen=True)
class GeneratorK:
    """Generator K(p) >= kappa0 > 0 of the initial quasifree state.

    Either Bose-Einstein form K(p) = beta*(E(p) - mu) with mu < 0, or a
    general callable with an explicit floor.  The floor is checked on the
    lattice at construction.
    """

    beta: Optional[float] = None
    mu: Optional[float] = None
    func: Optional[Callable[[np.ndarray], np.ndarray]] = None
    kappa0: Optional[float] = None
    shift: float = 0.0
    lattice: Optional[MomentumLattice] = None

    def __post_init__(self):
        if self.func is None:
            if self.beta is None or self.mu is None:
                raise ValueError("need (beta, mu) or a callable with kappa0")
            if self.beta <= 0:
                raise ValueError("beta must be > 0")
        elif self.kappa0 is None:
            raise ValueError("a callable generator needs an explicit kappa0 floor")
        if self.lattice is not None:
            kmin = float(np.min(self.eval(self.lattice.points)))
            floor = self.kappa0 if self.kappa0 is not None else 0.0
            if kmin <= max(floor, 0.0) - 1e-15 or kmin <= 0.0:
                raise FloorViolationError(
                    f"K floor violated on lattice: min K = {kmin:.6g}"
                )

    def eval(self, p) -> np.ndarray:
        if self.func is not None:
            base = np.asarray(self.func(p), dtype=float)
        else:
            base = self.beta * (free_energy(p) - self.mu)
        return base + self.shift

    def with_shift(self, delta: float) -> "GeneratorK":
        """Same generator with K -> K + delta (no re-validation for tiny FD steps)."""
        return GeneratorK(
            beta=self.beta, mu=self.mu, func=self.func, kappa0=self.kappa0,
            shift=self.shift + delta, lattice=None,
        )


def bose_density(K: GeneratorK, p) -> np.ndarray:
    """f0(p) = 1/(e^{K(p)} - 1) > 0; rejects K <= 0."""
    k = K.eval(p)
    if np.any(k <= 0):
        raise FloorViolationError("bose_density needs K(p) > 0")
    return 1.0 / np.expm1(k)


def bose_density_field(K: GeneratorK, lat: MomentumLattice) -> np.ndarray:
    return bose_density(K, lat.points)


def cumulant_polynomial(n: int) -> np.ndarray:
    """Integer coefficients of P_n in powers of f (index = power).

    P_1 = f, P_{n+1} = f(1+f) P_n'.  Coefficients are exact Python ints.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if n > N_MAX_CUMULANT:
        raise ValueError(f"cumulant order capped at {N_MAX_CUMULANT}")
    coeffs = [0, 1]  # P_1 = f
    for _ in range(n - 1):
        deriv = [k * c for k, c in enumerate(coeffs)][1:]  # P'
        # multiply by f + f^2
        nxt = [0] * (len(deriv) + 2)
        for k, c in enumerate(deriv):
            nxt[k + 1] += c
            nxt[k + 2] += c
        coeffs = nxt
    return np.array(coeffs, dtype=object)


def cumulant(K: GeneratorK, lat: MomentumLattice, n: int) -> float:
    """kappa_n = lattice_sum(P_n(f0)); all kappa_n > 0."""
    f0 = bose_density_field(K, lat)
    coeffs = cumulant_polynomial(n)
    vals = np.zeros_like(f0)
    for k in range(len(coeffs) - 1, 0, -1):
        vals = (vals + float(coeffs[k])) * f0
    return float(lattice_sum(lat, vals))


def _multiplicity_vectors(ell: int):
    """All r in N0^ell with sum_n n*r_n = ell (multiplicities of partitions)."""

    def rec(remaining, max_part):
        if remaining == 0:
            yield {}
            return
        for part in range(min(remaining, max_part), 0, -1):
            for count in range(remaining // part, 0, -1):
                for rest in rec(remaining - part * count, part - 1):
                    out = dict(rest)
                    out[part] = count
                    yield out

    yield from rec(ell, ell)


def number_moment(K: GeneratorK, lat: MomentumLattice, ell: int) -> float:
    """nu0(N_b^ell) via Faa di Bruno over cumulants; ell capped at 16."""
    if ell < 1:
        raise ValueError("ell must be >= 1")
    if ell > ELL_MAX_MOMENT:
        raise ValueError(f"moment order capped at {ELL_MAX_MOMENT} (factorial growth)")
    vol = lat.volume
    kappas = {n: cumulant(K, lat, n) for n in range(1, ell + 1)}
    total = 0.0
    for r in _multiplicity_vectors(ell):
        term = 1.0
        for n, rn in r.items():
            term *= (vol * kappas[n] / math.factorial(n)) ** rn / math.factorial(rn)
        total += term
    return math.factorial(ell) * total
