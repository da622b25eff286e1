import numpy as np
import pytest

from mrfcs.dictionary import Dictionary, ParameterGrid, build_dictionary
from mrfcs.sequence import generate_sequence


@pytest.fixture(scope="session")
def short_sequence():
    """Deterministic 40-frame schedule shared by small tests."""
    return generate_sequence(40, eta_sigma=0.0, seed=0)


@pytest.fixture(scope="session")
def tiny_grid():
    return ParameterGrid(t1_values=(300.0, 800.0, 2000.0),
                         t2_values=(50.0, 100.0, 300.0),
                         b0_values=(-30.0, 0.0, 40.0))


@pytest.fixture(scope="session")
def tiny_dictionary(tiny_grid, short_sequence):
    return build_dictionary(tiny_grid, short_sequence)


def random_unit_dictionary(rng, atoms=5, frames=12):
    """Dictionary of random unit atoms with recorded norms of one, so the
    matched amplitude and the density estimate coincide."""
    raw = rng.normal(size=(atoms, frames)) + 1j * rng.normal(size=(atoms, frames))
    raw /= np.linalg.norm(raw, axis=1, keepdims=True)
    params = np.column_stack([
        np.linspace(300.0, 3000.0, atoms),
        np.linspace(50.0, 290.0, atoms),
        np.linspace(-50.0, 50.0, atoms),
    ])
    return Dictionary(atoms=raw, params=params, norms=np.ones(atoms))
