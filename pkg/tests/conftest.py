import numpy as np
import pytest

from thermolindblad import ThermoSpec, build_restricted_generator, presets


@pytest.fixture
def rng():
    return np.random.default_rng(20260822)


@pytest.fixture
def qubit_generator():
    spec = ThermoSpec(hamiltonian=presets.qubit(1.0), beta=1.0, downward_rates={(0, 1): 1.0})
    return build_restricted_generator(spec)


@pytest.fixture
def qutrit_generator():
    spec = ThermoSpec(
        hamiltonian=presets.qutrit(0.0, 1.0, 3.0),
        beta=1.0,
        downward_rates={(0, 1): 1.0, (0, 2): 0.5, (1, 2): 0.8},
    )
    return build_restricted_generator(spec)
