import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from qcfield import alternating_minimize, pekar_minimize
from qcfield.presets import (cosine_coupled_reference, decoupled_reference,
                             frozen_minimal_coupling, frozen_mode_reference,
                             small_minimal_coupling, small_nelson,
                             small_polaron, two_particle_nelson)


@pytest.fixture(scope="session")
def decoupled():
    return decoupled_reference()


@pytest.fixture(scope="session")
def cosine():
    return cosine_coupled_reference()


@pytest.fixture(scope="session")
def frozen_mode():
    return frozen_mode_reference(g=0.3, omega=2.0)


@pytest.fixture(scope="session")
def frozen_pf():
    return frozen_minimal_coupling(charge=0.3, mass=1.0, amplitude=0.7)


@pytest.fixture(scope="session")
def nelson_small():
    return small_nelson()


@pytest.fixture(scope="session")
def polaron_small():
    return small_polaron()


@pytest.fixture(scope="session")
def pf_small():
    return small_minimal_coupling()


@pytest.fixture(scope="session")
def nelson_pair():
    return two_particle_nelson()


@pytest.fixture(scope="session")
def decoupled_min(decoupled):
    res = alternating_minimize(decoupled)
    assert res.converged
    return res


@pytest.fixture(scope="session")
def cosine_min(cosine):
    res = alternating_minimize(cosine)
    assert res.converged
    return res


@pytest.fixture(scope="session")
def decoupled_pekar(decoupled):
    res = pekar_minimize(decoupled)
    assert res.converged
    return res
