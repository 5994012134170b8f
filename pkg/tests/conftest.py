import numpy as np
import pytest

from bec_kinetics import (DispersionContext, GeneratorK, KineticParams,
                          MomentumLattice, bose_density_field,
                          gaussian_bump_profile)


@pytest.fixture(scope="session")
def small_lattice():
    return MomentumLattice(1.0, 1)


@pytest.fixture(scope="session")
def ctx_small():
    return DispersionContext(gaussian_bump_profile(1.0, 1.0), 0.2)


@pytest.fixture(scope="session")
def params_small():
    return KineticParams(lam=0.2, big_n=10.0, T=1.0)


@pytest.fixture(scope="session")
def K_small(small_lattice):
    return GeneratorK(beta=1.0, mu=-0.5, lattice=small_lattice)


@pytest.fixture(scope="session")
def f0_small(K_small, small_lattice):
    return bose_density_field(K_small, small_lattice)


@pytest.fixture()
def rng():
    return np.random.default_rng(20240817)
